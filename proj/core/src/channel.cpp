#include "simofdm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simofdm/error.hpp"

namespace simofdm {

double normalized_delay(double range, const WaveformConfig& config) {
  return 4.0 * kPi * config.subcarrier_spacing * range / kSpeedOfLight;
}

double normalized_doppler(double velocity, const WaveformConfig& config) {
  return 2.0 * config.carrier_frequency * velocity * config.symbol_duration / kSpeedOfLight;
}

double range_from_delay(double delay_phase, const WaveformConfig& config) {
  return delay_phase * kSpeedOfLight / (4.0 * kPi * config.subcarrier_spacing);
}

double velocity_from_doppler(double doppler, const WaveformConfig& config) {
  return doppler * kSpeedOfLight / (2.0 * config.carrier_frequency * config.symbol_duration);
}

TargetSet make_targets(std::vector<Target> targets, const WaveformConfig& config) {
  if (targets.empty()) throw InputError("target set must not be empty");
  TargetSet set;
  for (const auto& t : targets) {
    if (!(t.range >= 0.0)) throw InputError("target range must be >= 0");
    set.delay_phase.push_back(normalized_delay(t.range, config));
    set.doppler.push_back(normalized_doppler(t.velocity, config));
  }
  set.targets = std::move(targets);
  return set;
}

std::string to_string(ChannelModel model) {
  switch (model) {
    case ChannelModel::los: return "los";
    case ChannelModel::rician: return "rician";
    case ChannelModel::rayleigh: return "rayleigh";
  }
  return "?";
}

ChannelModel parse_channel_model(const std::string& text) {
  if (text == "los") return ChannelModel::los;
  if (text == "rician") return ChannelModel::rician;
  if (text == "rayleigh") return ChannelModel::rayleigh;
  throw ConfigError("channel.model: unknown channel model '" + text + "' (los|rician|rayleigh)");
}

double tap_spacing(const WaveformConfig& config) { return config.symbol_duration / config.subcarriers; }

PathSet sample_paths(ChannelModel model, int path_count, int taps, double velocity_std, double rice_factor,
                     const WaveformConfig& config, Rng& rng) {
  if (path_count < 1) throw ConfigError("channel.paths must be >= 1");
  if (taps < 1) throw ConfigError("channel.taps must be >= 1");
  if (taps > config.subcarriers) throw ConfigError("channel.taps must not exceed the subcarrier count");
  if (!(velocity_std >= 0.0)) throw ConfigError("channel.velocity_std must be >= 0");
  if (model == ChannelModel::rician && !(rice_factor >= 0.0)) throw ConfigError("channel.rice_factor must be >= 0");

  PathSet set;
  set.model = model;
  set.rice_factor = model == ChannelModel::rician ? rice_factor : 0.0;
  set.taps = taps;
  const int count = model == ChannelModel::los ? 1 : path_count;

  std::vector<int> tap_index(static_cast<std::size_t>(count));
  if (count <= taps) {
    std::vector<int> pool(static_cast<std::size_t>(taps));
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<int> pick(i, taps - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      tap_index[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
  } else {
    std::uniform_int_distribution<int> pick(0, taps - 1);
    for (auto& d : tap_index) d = pick(rng);
  }

  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::normal_distribution<double> speed(0.0, 1.0);
  for (int p = 0; p < count; ++p) {
    Path path;
    if (model == ChannelModel::los) {
      path.gain = std::polar(1.0, phase(rng));
    } else if (model == ChannelModel::rician && p == 0) {
      path.gain = std::polar(std::sqrt(rice_factor), phase(rng));
    } else {
      path.gain = complex_gaussian(rng);
    }
    path.delay = tap_index[static_cast<std::size_t>(p)] * tap_spacing(config);
    const double v = velocity_std * speed(rng);
    path.doppler = config.carrier_frequency * v / kSpeedOfLight;
    set.paths.push_back(path);
  }
  return set;
}

namespace {

// sum_{m=0}^{M-1} exp(j 2 pi x m / M), with integer x handled exactly.
cd dirichlet(double x, int M) {
  if (x == std::round(x)) {
    const auto k = static_cast<long long>(std::round(x));
    return (k % M == 0) ? cd(static_cast<double>(M), 0.0) : cd(0.0, 0.0);
  }
  const cd num = 1.0 - std::exp(kJ * (kTwoPi * x));
  const cd den = 1.0 - std::exp(kJ * (kTwoPi * x / M));
  return num / den;
}

}  // namespace

ChannelMatrix freq_channel_matrix(const std::vector<Path>& paths, const WaveformConfig& config) {
  const int M = config.subcarriers;
  const double Ts = config.symbol_duration;
  CMatrix H = CMatrix::Zero(M, M);
  std::vector<cd> kernel(static_cast<std::size_t>(2 * M - 1));
  for (const auto& p : paths) {
    const double fts = p.doppler * Ts;
    // Entry (i, j) depends on j - i only, apart from the delay phase on column j.
    for (int diff = -(M - 1); diff <= M - 1; ++diff)
      kernel[static_cast<std::size_t>(diff + M - 1)] = dirichlet(fts + diff, M);
    for (int j = 0; j < M; ++j) {
      const cd col = p.gain * std::exp(-kJ * (kTwoPi * p.delay * j / Ts)) / static_cast<double>(M);
      for (int i = 0; i < M; ++i) H(i, j) += col * kernel[static_cast<std::size_t>(j - i + M - 1)];
    }
  }
  return {std::move(H), MatrixRole::channel};
}

ChannelMatrix freq_channel_matrix(const PathSet& paths, const WaveformConfig& config) {
  return freq_channel_matrix(paths.paths, config);
}

CVector cir_taps(const PathSet& paths, const WaveformConfig& config, int sample_index) {
  if (sample_index < 0 || sample_index >= config.subcarriers) throw InputError("cir_taps: sample index out of range");
  CVector h = CVector::Zero(paths.taps);
  const double spacing = tap_spacing(config);
  for (const auto& p : paths.paths) {
    const auto d = static_cast<long long>(std::llround(p.delay / spacing));
    if (d < 0 || d >= paths.taps || std::abs(p.delay - d * spacing) > 1e-9 * spacing) continue;
    h(d) += p.gain * std::exp(kJ * (kTwoPi * p.doppler * config.symbol_duration * sample_index / config.subcarriers));
  }
  return h;
}

CMatrix target_response(const TargetSet& targets, const WaveformConfig& config) {
  CMatrix G = CMatrix::Zero(config.subcarriers, config.symbols);
  for (std::size_t p = 0; p < targets.size(); ++p) {
    CVector range_phase(config.subcarriers);
    for (int m = 0; m < config.subcarriers; ++m) range_phase(m) = std::exp(-kJ * (m * targets.delay_phase[p]));
    CVector doppler_phase(config.symbols);
    for (int n = 0; n < config.symbols; ++n) doppler_phase(n) = std::exp(kJ * (kTwoPi * n * targets.doppler[p]));
    G += targets.targets[p].reflectivity * range_phase * doppler_phase.transpose();
  }
  return G;
}

Frame generate_echo(const Frame& transmitted, const TargetSet& targets, double noise_std, const CMatrix& unit_noise,
                    const WaveformConfig& config) {
  if (transmitted.subcarriers() != config.subcarriers || transmitted.symbols() != config.symbols)
    throw InputError("generate_echo: frame shape does not match config");
  if (unit_noise.rows() != transmitted.samples.rows() || unit_noise.cols() != transmitted.samples.cols())
    throw InputError("generate_echo: noise shape mismatch");
  Frame echo{target_response(targets, config).cwiseProduct(transmitted.samples), FrameRole::echo};
  if (noise_std > 0.0) echo.samples += noise_std * unit_noise;
  return echo;
}

Frame generate_echo(const Frame& transmitted, const TargetSet& targets, double noise_std, Rng& rng,
                    const WaveformConfig& config) {
  return generate_echo(transmitted, targets, noise_std,
                       complex_gaussian(transmitted.samples.rows(), transmitted.samples.cols(), rng), config);
}

Frame apply_comm_channel(const Frame& precoded, const ChannelMatrix& channel, double transmit_power, double noise_std,
                         const CMatrix& unit_noise) {
  if (channel.m.cols() != precoded.samples.rows() || channel.m.rows() != channel.m.cols())
    throw InputError("apply_comm_channel: channel and frame dimensions differ");
  if (unit_noise.rows() != precoded.samples.rows() || unit_noise.cols() != precoded.samples.cols())
    throw InputError("apply_comm_channel: noise shape mismatch");
  Frame y{std::sqrt(transmit_power) * (channel.m * precoded.samples), FrameRole::received};
  if (noise_std > 0.0) y.samples += noise_std * unit_noise;
  return y;
}

Frame apply_comm_channel(const Frame& precoded, const ChannelMatrix& channel, double transmit_power, double noise_std,
                         Rng& rng) {
  return apply_comm_channel(precoded, channel, transmit_power, noise_std,
                            complex_gaussian(precoded.samples.rows(), precoded.samples.cols(), rng));
}

double reciprocal_condition(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw InputError("reciprocal_condition: matrix must be square");
  return reciprocal_condition(Eigen::PartialPivLU<CMatrix>(m));
}

double reciprocal_condition(const Eigen::PartialPivLU<CMatrix>& lu) {
  // Eigen's estimate is not meaningful once a pivot is exactly zero.
  if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0)) return 0.0;
  const double rc = lu.rcond();
  return std::isfinite(rc) ? rc : 0.0;
}

}  // namespace simofdm
