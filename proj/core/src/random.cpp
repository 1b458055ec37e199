#include "simofdm/random.hpp"

#include <cmath>

namespace simofdm {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

Rng derive_stream(std::uint64_t master_seed, std::string_view experiment, std::uint64_t trial) {
  std::uint64_t state = master_seed ^ fnv1a(experiment);
  state ^= splitmix64(state) + trial * 0xD1B54A32D192ED03ULL;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

cd complex_gaussian(Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = complex_gaussian(rng);
  return out;
}

Bits random_bits(std::size_t count, Rng& rng) {
  Bits bits(count);
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
  return bits;
}

}  // namespace simofdm
