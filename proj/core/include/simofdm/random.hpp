#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "simofdm/types.hpp"

namespace simofdm {

using Rng = std::mt19937_64;

/// Seeds an independent stream for one Monte Carlo trial. The stream depends
/// only on (master seed, experiment id, trial index), never on scheduling.
Rng derive_stream(std::uint64_t master_seed, std::string_view experiment, std::uint64_t trial);

/// i.i.d. circular complex Gaussian entries with unit variance (E|z|^2 = 1).
CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng);

cd complex_gaussian(Rng& rng);

Bits random_bits(std::size_t count, Rng& rng);

}  // namespace simofdm
