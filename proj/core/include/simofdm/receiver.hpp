#pragma once

#include <optional>
#include <vector>

#include "simofdm/channel.hpp"
#include "simofdm/types.hpp"
#include "simofdm/waveform.hpp"

namespace simofdm {

/// Power-split estimate from the correlation of y with the sense frame, clamped to [0, 1 - 1e-3].
/// `inverse_norm` is the compensator normalization ||H~^-1||_F signalled to the receiver.
double estimate_rho(const Frame& received, const Frame& sense, double inverse_norm, double transmit_power);

/// Removes the correlation bias (1 - rho) / N_s of estimate_rho, then clamps again.
double debias_rho(double rho_hat, int symbols);

/// ((inverse_norm / sqrt(P_t)) y - sqrt(rho_hat) x_s) / sqrt(1 - rho_hat).
Frame subtract_sense(const Frame& received, double rho_hat, const Frame& sense, double inverse_norm,
                     double transmit_power);

struct GroupDecision {
  int entry = 0;            // codebook index
  std::vector<int> labels;  // constellation labels on the active positions, in entry order
  double metric = 0.0;
};

/// Exhaustive ML over codebook entries and symbol tuples of one group. `gains`, when given, are the
/// per-subcarrier channel coefficients seen by the slice. Ties go to the lower entry, then the
/// lexicographically smaller tuple.
GroupDecision ml_detect_group(const CVector& slice, const IndexCodebook& codebook, const Constellation& constellation,
                              double amplitude, const CVector* gains = nullptr);

struct DecodedFrame {
  double rho_hat = 0.0;
  std::vector<GroupDecision> groups;  // symbol-major: index n * G + g
  Bits bits;
};

struct ReceiverContext {
  double inverse_norm = 1.0;
  double transmit_power = 1.0;
  std::optional<CVector> gains;       // per-subcarrier equalization for the ML metric
  std::optional<double> known_rho;    // skip estimation
  bool sense_present = true;          // false for plain IM-OFDM: rho_hat = 0
  bool debias = true;
};

DecodedFrame decode_frame(const Frame& received, const Frame& sense, const WaveformConfig& config,
                          const IndexCodebook& codebook, const ReceiverContext& context);

struct BitErrors {
  std::size_t errors = 0;
  std::size_t bits = 0;

  double rate() const { return bits == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(bits); }
  BitErrors& operator+=(const BitErrors& o) {
    errors += o.errors;
    bits += o.bits;
    return *this;
  }
};

BitErrors count_errors(const Bits& sent, const Bits& received);

/// BPSK on all M subcarriers through sqrt(P_t / M) H, single-tap zero forcing by diag(H), hard
/// decisions. `bits` has M * N_s entries; `unit_noise` is M x N_s CN(0,1).
BitErrors ofdm_baseline_roundtrip(const Bits& bits, const ChannelMatrix& channel, double transmit_power,
                                  double noise_std, const CMatrix& unit_noise, const WaveformConfig& config);
BitErrors ofdm_baseline_roundtrip(const Bits& bits, const ChannelMatrix& channel, double transmit_power,
                                  double noise_std, Rng& rng, const WaveformConfig& config);

}  // namespace simofdm
