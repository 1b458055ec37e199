#pragma once

#include <string>
#include <vector>

#include "simofdm/random.hpp"
#include "simofdm/types.hpp"
#include "simofdm/waveform.hpp"

namespace simofdm {

/// Point scatterer seen by the mono-static sensing receiver.
struct Target {
  cd reflectivity{1.0, 0.0};
  double range = 0.0;     // m
  double velocity = 0.0;  // m/s, radial
};

/// Targets plus their normalized echo parameters: per-subcarrier delay phase
/// 4*pi*df*r/c (rad) and per-symbol Doppler 2*fc*v*Ts/c (cycles).
struct TargetSet {
  std::vector<Target> targets;
  std::vector<double> delay_phase;
  std::vector<double> doppler;

  std::size_t size() const { return targets.size(); }
};

double normalized_delay(double range, const WaveformConfig& config);
double normalized_doppler(double velocity, const WaveformConfig& config);
/// Inverses of the two normalizations above.
double range_from_delay(double delay_phase, const WaveformConfig& config);
double velocity_from_doppler(double doppler, const WaveformConfig& config);

TargetSet make_targets(std::vector<Target> targets, const WaveformConfig& config);

enum class ChannelModel { los, rician, rayleigh };

std::string to_string(ChannelModel model);
ChannelModel parse_channel_model(const std::string& text);

struct Path {
  cd gain{1.0, 0.0};
  double delay = 0.0;    // s, on the tap grid d * Ts / M
  double doppler = 0.0;  // Hz
};

struct PathSet {
  std::vector<Path> paths;
  ChannelModel model = ChannelModel::rayleigh;
  double rice_factor = 0.0;
  int taps = 1;

  std::size_t size() const { return paths.size(); }
};

/// Tap spacing Ts / M in seconds.
double tap_spacing(const WaveformConfig& config);

/// Draws a multipath channel. Gains are CN(0,1); the Rician model replaces path 0
/// with a fixed-magnitude sqrt(K) component of uniform phase; LoS returns one
/// unit-magnitude path. Delays are distinct taps when paths <= taps.
/// Doppler f = fc * v / c with v ~ N(0, velocity_std^2).
PathSet sample_paths(ChannelModel model, int path_count, int taps, double velocity_std, double rice_factor,
                     const WaveformConfig& config, Rng& rng);

enum class MatrixRole { channel, reconstructed, equivalent, compensator };

struct ChannelMatrix {
  CMatrix m;
  MatrixRole role = MatrixRole::channel;
};

/// Closed-form frequency-domain ICI matrix of a doubly-selective channel.
ChannelMatrix freq_channel_matrix(const std::vector<Path>& paths, const WaveformConfig& config);
ChannelMatrix freq_channel_matrix(const PathSet& paths, const WaveformConfig& config);

/// h_d(m) for d = 0..taps-1 at time sample m of one symbol.
CVector cir_taps(const PathSet& paths, const WaveformConfig& config, int sample_index);

/// G(m, n) = sum_p gamma_p exp(-j m tau_p) exp(j 2 pi n f_p).
CMatrix target_response(const TargetSet& targets, const WaveformConfig& config);

/// R = G .* X + sigma * noise, where `unit_noise` holds CN(0,1) draws.
Frame generate_echo(const Frame& transmitted, const TargetSet& targets, double noise_std, const CMatrix& unit_noise,
                    const WaveformConfig& config);
Frame generate_echo(const Frame& transmitted, const TargetSet& targets, double noise_std, Rng& rng,
                    const WaveformConfig& config);

/// y(n) = sqrt(Pt) * H * xpre(n) + sigma * noise(n); `precoded` already holds U * x.
Frame apply_comm_channel(const Frame& precoded, const ChannelMatrix& channel, double transmit_power, double noise_std,
                         const CMatrix& unit_noise);
Frame apply_comm_channel(const Frame& precoded, const ChannelMatrix& channel, double transmit_power, double noise_std,
                         Rng& rng);

/// Reciprocal condition number estimate (1-norm) of a square matrix.
double reciprocal_condition(const CMatrix& m);
double reciprocal_condition(const Eigen::PartialPivLU<CMatrix>& lu);

}  // namespace simofdm
