#pragma once

#include <cstdint>
#include <random>

namespace compound {

/// Base seed for an experiment. The same seed always reproduces the same
/// results, bit for bit, regardless of thread count or chunking: every
/// consumer derives its own sub-stream with make_stream and never shares
/// engine state.
struct RngSeed {
  std::uint64_t value = 0;
};

/// SplitMix64 finalizer; good avalanche, used only to derive sub-stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Deterministic sub-stream id from up to three coordinates (e.g. cell, ell,
/// session index). Chained mixing keeps distinct coordinates on distinct
/// streams without any shared state between them.
inline std::uint64_t stream_id(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(a);
  h = mix64(h ^ (b + 0x632be59bd9b4e019ull));
  h = mix64(h ^ (c + 0xd6e8feb86659fd93ull));
  return h;
}

/// Independent engine for (seed, stream). Identical inputs give identical
/// streams on every platform (mt19937_64 sequences are standard-defined).
inline std::mt19937_64 make_stream(RngSeed seed, std::uint64_t stream) {
  return std::mt19937_64(mix64(seed.value ^ mix64(stream)));
}

/// One engine draw mapped to [0, 1). Exactly one call to the engine.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace compound
