#pragma once

#include <cstdint>
#include <random>

namespace ojrs {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to fan a master seed out into independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Named streams so that components can be ablated without perturbing the others.
enum class Stream : std::uint64_t {
  channel = 1,
  sae = 2,
  asa = 3,
  replay = 4,
  policy_init = 5,
  weights = 6,
  scenario = 7,
  baseline = 8,
  oracle = 9,
  exploration = 10,
  pretrain = 11,
  evaluation = 12,
};

inline Rng make_rng(std::uint64_t master, Stream stream) {
  return Rng{derive_seed(master, static_cast<std::uint64_t>(stream))};
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace ojrs
