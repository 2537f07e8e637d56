#include <iostream>
#include <span>

#include "compound/cli.hpp"

int main(int argc, char** argv) {
  return compound::run_cli(
      std::span<const char* const>(const_cast<const char* const*>(argv),
                                   static_cast<std::size_t>(argc)),
      std::cout, std::cerr);
}
