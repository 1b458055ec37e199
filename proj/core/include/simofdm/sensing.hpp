#pragma once

#include <optional>
#include <vector>

#include "simofdm/channel.hpp"
#include "simofdm/types.hpp"
#include "simofdm/waveform.hpp"

namespace simofdm {

/// Equispaced axis: value(i) = min + i * step, i = 0..count-1.
struct Axis {
  double min = 0.0;
  double step = 1.0;
  int count = 1;

  static Axis from_range(double min, double max, int count);
  static Axis from_step(double min, double max, double step);

  double max() const { return min + step * (count - 1); }
  double value(double index) const { return min + step * index; }
  bool contains(double x) const { return x >= min && x <= max(); }
};

struct RangeVelocityGrid {
  Axis range;     // m
  Axis velocity;  // m/s

  /// Throws InputError on an empty axis or non-positive step.
  void validate() const;
  std::size_t cells() const {
    return static_cast<std::size_t>(range.count) * static_cast<std::size_t>(velocity.count);
  }
};

/// values(i, j) is the spectrum at (range.value(i), velocity.value(j)).
struct Spectrum2D {
  RangeVelocityGrid grid;
  RMatrix values;
};

enum class EstimateSource { matched_filter, music, fused };

struct Estimate {
  double range = 0.0;
  double velocity = 0.0;
  double power = 0.0;
  std::optional<double> var_range;
  std::optional<double> var_velocity;
  bool fused = true;  // false when passed through without a partner
};

struct EstimateSet {
  EstimateSource source = EstimateSource::matched_filter;
  std::vector<Estimate> estimates;
  bool incomplete = false;      // fewer than the requested count
  bool rank_deficient = false;  // MUSIC covariance had rank below P
  bool unpaired = false;        // fusion left some estimates unfused

  std::size_t size() const { return estimates.size(); }
};

/// |sum_{m,n} R(m,n) conj(Xs(m,n)) exp(j m tau) exp(-j 2 pi n f)|^2 on the grid, via chirp-z.
Spectrum2D matched_filter_spectrum(const Frame& echo, const Frame& sense, const RangeVelocityGrid& grid,
                                   const WaveformConfig& config);

/// Peak-to-mean ratio of a spectrum.
double peak_to_mean(const Spectrum2D& spectrum);

/// Threshold on peak_to_mean for a false-alarm probability over the grid, assuming
/// exponentially distributed noise cells: ln(cells / pfa).
double detection_threshold(const RangeVelocityGrid& grid, double false_alarm);

/// Up to `count` 8-neighbourhood maxima with per-axis parabolic refinement; strongest
/// first, ties by (range, velocity) ascending.
EstimateSet find_peaks(const Spectrum2D& spectrum, int count);

struct MusicWindow {
  int subcarriers = 0;  // 0 selects min(M/2, 32)
  int symbols = 0;      // 0 selects min(N_s/2, 8)
};

struct MusicOptions {
  MusicWindow window;
  int max_subframes = 4096;
  double mask_threshold = 0.1;  // relative to the RMS magnitude of the transmitted frame
  bool refine = true;
};

/// Y = R ./ X with masked entries (|X| below threshold) replaced by the mean of valid neighbours.
CMatrix masked_divide(const CMatrix& echo, const CMatrix& transmitted, double threshold);

/// MUSIC pseudo-spectrum 1 / ||E_n^H a||^2 on the grid, computed through the signal subspace.
Spectrum2D music_spectrum(const Frame& echo, const Frame& transmitted, const RangeVelocityGrid& grid, int count,
                          const WaveformConfig& config, const MusicOptions& options = {}, bool* rank_deficient = nullptr);

EstimateSet music_2d(const Frame& echo, const Frame& transmitted, const RangeVelocityGrid& grid, int count,
                     const WaveformConfig& config, const MusicOptions& options = {});

/// Per-parameter error variances of the two estimators; missing values select w = 0.5.
struct FusionPrior {
  std::optional<double> var_range_1;
  std::optional<double> var_range_2;
  std::optional<double> var_velocity_1;
  std::optional<double> var_velocity_2;
};

/// Weight on estimator 1: var2 / (var1 + var2).
double fusion_weight(std::optional<double> var1, std::optional<double> var2);

/// Pairs e1 with e2 by nearest neighbour in (r / range_scale, v / velocity_scale), within `gate`,
/// and combines each pair linearly. Estimates of either set with no partner pass through, flagged.
EstimateSet fuse(const EstimateSet& e1, const EstimateSet& e2, const FusionPrior& prior, double range_scale,
                 double velocity_scale, double gate = 1.0);

struct CrlbBlock {
  Eigen::Matrix2d fisher = Eigen::Matrix2d::Zero();
  double range = 0.0;     // m^2
  double velocity = 0.0;  // (m/s)^2
  bool singular = false;
};

struct CrlbResult {
  std::vector<CrlbBlock> targets;
};

/// Fisher blocks for the echo model sqrt(P_t / M) * G .* X + noise(variance noise_var).
CrlbResult crlb(const TargetSet& targets, const Frame& transmitted, double noise_var, double transmit_power,
                const WaveformConfig& config);

struct RmseResult {
  double range = 0.0;
  double velocity = 0.0;
  std::size_t trials = 0;    // trials used
  std::size_t excluded = 0;  // trials with a target left unassociated

  double exclusion_rate() const {
    const auto total = trials + excluded;
    return total == 0 ? 0.0 : static_cast<double>(excluded) / static_cast<double>(total);
  }
};

/// Greedy association of estimates to truth in normalized space. Returns, per truth
/// target, the index of its estimate or -1 when none lies within the gate.
std::vector<int> associate(const std::vector<Estimate>& estimates, const std::vector<Target>& truth,
                           double range_scale, double velocity_scale, double gate);

/// RMSE over trials; `truth[i]` holds the targets of trial i.
RmseResult rmse(const std::vector<EstimateSet>& estimates, const std::vector<std::vector<Target>>& truth,
                double range_gate, double velocity_gate);

}  // namespace simofdm
