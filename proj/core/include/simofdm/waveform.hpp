#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "simofdm/types.hpp"

namespace simofdm {

/// Unit-magnitude PSK alphabet. Point `label` carries the bits of `label`
/// (MSB first); labels are Gray-mapped around the circle.
class Constellation {
 public:
  static Constellation psk(int order);

  int order() const { return static_cast<int>(points_.size()); }
  int bits_per_symbol() const { return bits_; }
  const std::vector<cd>& points() const { return points_; }
  cd point(int label) const { return points_.at(static_cast<std::size_t>(label)); }

  /// Label of the nearest point; ties go to the smaller label.
  int nearest(cd value) const;

 private:
  std::vector<cd> points_;
  int bits_ = 0;
};

/// System constants of one waveform instance. Defaults are the reference
/// numerology: 2.5 GHz carrier, 256 subcarriers in groups of 8, 32 symbols.
struct WaveformConfig {
  int subcarriers = 256;
  int group_size = 8;
  int active_per_group = 2;
  int constellation_order = 4;
  double subcarrier_spacing = 15e3;  // Hz
  double symbol_duration = 6.67e-5;  // s
  double cp_duration = 5e-6;         // s, bookkeeping only: frames live in the frequency domain
  int symbols = 32;
  double carrier_frequency = 2.5e9;  // Hz
  double transmit_power = 1.0;       // W
  double rho = 0.0;                  // share of power on the sensing sequence
  bool shift_sense_per_symbol = false;

  int groups() const { return subcarriers / group_size; }
  Constellation constellation() const { return Constellation::psk(constellation_order); }

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// First 2^p lexicographic k-subsets of {0..N_g-1}; bit pattern b selects entry b.
class IndexCodebook {
 public:
  IndexCodebook(int group_size, int active);

  int group_size() const { return group_size_; }
  int active() const { return active_; }
  int index_bits() const { return index_bits_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<int>& entry(std::size_t i) const { return entries_.at(i); }
  const std::vector<std::vector<int>>& entries() const { return entries_; }

  /// Entry whose support equals `support_mask` (bit i = subcarrier i), or -1.
  int find(std::uint32_t support_mask) const;

 private:
  int group_size_;
  int active_;
  int index_bits_;
  std::vector<std::vector<int>> entries_;
  std::unordered_map<std::uint32_t, int> by_mask_;
};

enum class FrameRole { comm, sense, superposed, echo, received };

/// M x N_s frequency-domain samples; column n is OFDM symbol n.
struct Frame {
  CMatrix samples;
  FrameRole role = FrameRole::comm;

  Eigen::Index subcarriers() const { return samples.rows(); }
  Eigen::Index symbols() const { return samples.cols(); }
};

std::uint64_t binomial(int n, int k);

/// floor(log2 C(N_g, k)).
int index_bits(int group_size, int active);

IndexCodebook build_index_codebook(int group_size, int active);

/// G * (p + k * log2|S|).
int bits_per_symbol(const WaveformConfig& config);

/// Active entries are scaled by sqrt(N_g / k) so each column carries power M.
Frame map_bits_to_comm_frame(const Bits& bits, const WaveformConfig& config, const IndexCodebook& codebook);

Bits comm_frame_to_bits(const Frame& frame, const WaveformConfig& config, const IndexCodebook& codebook);

/// Maximal-length LFSR output for degree 3..16, all-ones seed, bit 0 -> +1, bit 1 -> -1.
std::vector<int> generate_m_sequence(int degree);

/// Degree of the m-sequence used for an M-subcarrier sense frame.
int sense_sequence_degree(int subcarriers);

Frame build_sense_frame(const WaveformConfig& config);

/// sqrt(rho) * sense + sqrt(1 - rho) * comm.
Frame superpose(const Frame& comm, const Frame& sense, double rho);

}  // namespace simofdm
