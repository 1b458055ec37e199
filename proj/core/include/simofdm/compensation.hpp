#pragma once

#include <functional>
#include <vector>

#include "simofdm/channel.hpp"
#include "simofdm/sensing.hpp"
#include "simofdm/types.hpp"

namespace simofdm {

enum class EstimateProvenance { genie, sensed, perturbed };

/// One-way path parameters available to the transmitter.
struct SensedChannelEstimate {
  std::vector<Path> paths;
  EstimateProvenance provenance = EstimateProvenance::genie;
  std::size_t unmatched = 0;  // paths with no sensed partner (Doppler left at 0)
};

SensedChannelEstimate genie_estimate(const PathSet& paths);

/// Multiplies each gain by (1 + gain_error * CN(0,1)) and adds N(0, doppler_error_hz^2) to each Doppler.
SensedChannelEstimate perturb_estimate(const SensedChannelEstimate& est, double gain_error, double doppler_error_hz,
                                       Rng& rng);

/// Sensing targets of the mono-static echo for a path set: r = c * tau, v = c * f / fc, gamma = alpha.
std::vector<Target> targets_from_paths(const PathSet& paths, const WaveformConfig& config);

/// Converts round-trip estimates to one-way path parameters. Estimates are taken strongest
/// first and matched to the nearest unclaimed reference path inside the gate; the delay snaps
/// to the tap grid. Gains come from the reference (genie). Unmatched paths keep their delay
/// with zero Doppler.
SensedChannelEstimate channel_from_sensing(const EstimateSet& sensed, const PathSet& reference,
                                           const WaveformConfig& config, double range_gate, double velocity_gate);

/// H~ from estimated parameters.
ChannelMatrix reconstruct_channel(const SensedChannelEstimate& est, const WaveformConfig& config);

struct Compensator {
  ChannelMatrix u;            // H~^-1 / ||H~^-1||_F
  double inverse_norm = 0.0;  // ||H~^-1||_F
};

/// Throws NumericalError when H~ is near singular (reciprocal condition < 1e-12).
Compensator build_compensator(const ChannelMatrix& reconstructed);

/// Compensator that leaves the frame unchanged up to the power constraint: I / sqrt(M).
Compensator identity_compensator(int subcarriers);

/// H_bar = (I + (H~ - H) H^-1)^-1.
ChannelMatrix equivalent_channel(const ChannelMatrix& channel, const ChannelMatrix& reconstructed);

struct SinrReport {
  RVector sinr;
  RVector omega;
  double min_sinr = 0.0;
  int argmin = 0;
  bool degenerate = false;  // some H_bar(m, m) = 0
};

SinrReport sinr_per_subcarrier(const ChannelMatrix& equivalent, double inverse_norm_sq, double rho,
                               double transmit_power, double noise_var);
SinrReport sinr_per_subcarrier(const ChannelMatrix& equivalent, const ChannelMatrix& channel, double rho,
                               double transmit_power, double noise_var);

/// ||H^-1||_F^2.
double inverse_norm_sq(const ChannelMatrix& channel);

struct RhoOptimum {
  double rho = 0.0;
  double min_sinr = 0.0;
};

/// Grid search of min_m SINR_m over rho = 0, step, ..., <= max; ties keep the smaller rho.
RhoOptimum optimize_rho(const ChannelMatrix& equivalent, const ChannelMatrix& channel, double transmit_power,
                        double noise_var, double step = 0.01, double max = 0.99);

/// Same search when the equivalent channel itself depends on rho (sensing quality).
RhoOptimum optimize_rho(const std::function<ChannelMatrix(double)>& equivalent_at, double inverse_norm_sq,
                        double transmit_power, double noise_var, double step = 0.01, double max = 0.99);

/// Equivalent channel when the Doppler estimate of path p is off by unit_errors[p] * error_hz * sqrt((1 - rho) / rho).
ChannelMatrix equivalent_channel_at_rho(const PathSet& paths, const std::vector<double>& unit_errors, double error_hz,
                                        double rho, const ChannelMatrix& channel, const WaveformConfig& config);

struct RhoMax {
  double value = 0.0;
  bool clamped = false;  // the bound was negative
};

/// Upper bound on rho that keeps the link no worse than OFDM given a gain of gc_db.
/// Omega_m is taken at rho = 0.
RhoMax rho_max(const ChannelMatrix& equivalent, const ChannelMatrix& channel, double gc_db, double transmit_power,
               double noise_var);

/// 1 - 10^(-gc_db / 10).
double rho_max_static(double gc_db);

struct BerPoint {
  double snr_db = 0.0;
  double ber = 0.0;
};

/// SNR (dB) at which a decreasing BER curve crosses `target`, by linear interpolation of log10(BER).
double snr_at_ber(const std::vector<BerPoint>& curve, double target);

/// SNR_ofdm(target) - SNR_im(target) in dB.
double comm_gain_gc(const std::vector<BerPoint>& im_curve, const std::vector<BerPoint>& ofdm_curve, double target);

}  // namespace simofdm
