#include <benchmark/benchmark.h>

#include <random>

#include "compound/channel.hpp"
#include "compound/infotheory.hpp"
#include "compound/random.hpp"
#include "compound/scheme.hpp"

namespace {

void BM_CapacityBsc(benchmark::State& state) {
  const compound::Dmc ch = compound::bsc(0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compound::capacity(ch).bits);
  }
}
BENCHMARK(BM_CapacityBsc);

void BM_CompoundCapacityPair(benchmark::State& state) {
  const compound::CompoundFamily family({compound::bsc(0.1), compound::bsc(0.2)});
  for (auto _ : state) {
    benchmark::DoNotOptimize(compound::compound_capacity_nofeedback(family));
  }
}
BENCHMARK(BM_CompoundCapacityPair);

compound::SchemeParams bench_params(const compound::CompoundFamily& family, int n) {
  const double cap = compound::capacity(family.channel(0)).bits;
  const std::vector<double> rates(2, 0.25 * cap);
  const compound::EstimationRule rule = compound::EstimationRule::bsc_threshold(0.5);
  const double t_c = compound::binary_kl(0.5, 0.1);
  const std::vector<double> exponents(2, t_c);
  return compound::derive_params(family, rates, exponents, rule, rule, n, 0);
}

void BM_RunSession(benchmark::State& state) {
  const compound::CompoundFamily family({compound::bsc(0.1), compound::bsc(0.9)});
  const int n = static_cast<int>(state.range(0));
  const compound::SchemeParams params = bench_params(family, n);
  const std::vector<compound::MessageCode> codes =
      compound::build_message_codes(params, family, compound::RngSeed{7});
  std::mt19937_64 rng = compound::make_stream(compound::RngSeed{7}, 99);
  long long uses = 0;
  for (auto _ : state) {
    const compound::SessionTranscript t = compound::run_session(params, family, codes, 0, rng);
    uses += t.total_uses;
    benchmark::DoNotOptimize(t.total_uses);
  }
  state.counters["uses/s"] =
      benchmark::Counter(static_cast<double>(uses), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RunSession)->Arg(128)->Arg(256)->Arg(512);

void BM_CodebookDecode(benchmark::State& state) {
  const compound::Dmc ch = compound::bsc(0.1);
  const int bits = static_cast<int>(state.range(0));
  const int length = 4 * bits;
  std::mt19937_64 rng = compound::make_stream(compound::RngSeed{7}, 5);
  const compound::Codebook book = compound::Codebook::build(
      ch, compound::capacity(ch).input_distribution, 1 << bits, length, rng);
  std::vector<int> outputs(static_cast<std::size_t>(length));
  for (auto& y : outputs) {
    y = static_cast<int>(rng() & 1u);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(book.decode(outputs));
  }
}
BENCHMARK(BM_CodebookDecode)->Arg(4)->Arg(8)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
