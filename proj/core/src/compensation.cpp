#include "simofdm/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iterator>
#include <numeric>

#include "simofdm/error.hpp"

namespace simofdm {

SensedChannelEstimate genie_estimate(const PathSet& paths) {
  return {paths.paths, EstimateProvenance::genie, 0};
}

SensedChannelEstimate perturb_estimate(const SensedChannelEstimate& est, double gain_error, double doppler_error_hz,
                                       Rng& rng) {
  SensedChannelEstimate out = est;
  out.provenance = EstimateProvenance::perturbed;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& p : out.paths) {
    p.gain *= 1.0 + gain_error * complex_gaussian(rng);
    p.doppler += doppler_error_hz * gauss(rng);
  }
  return out;
}

std::vector<Target> targets_from_paths(const PathSet& paths, const WaveformConfig& config) {
  std::vector<Target> out;
  for (const auto& p : paths.paths)
    out.push_back({p.gain, kSpeedOfLight * p.delay, kSpeedOfLight * p.doppler / config.carrier_frequency});
  return out;
}

SensedChannelEstimate channel_from_sensing(const EstimateSet& sensed, const PathSet& reference,
                                           const WaveformConfig& config, double range_gate, double velocity_gate) {
  if (reference.paths.empty()) throw InputError("channel_from_sensing: empty reference path set");
  const auto truth = targets_from_paths(reference, config);
  // Fused pairs claim paths first, by peak power. Unfused estimates then fill the gaps closest
  // pair first, since powers of the two estimators are not comparable.
  std::vector<Estimate> fused;
  std::vector<std::size_t> fused_index;
  for (std::size_t q = 0; q < sensed.estimates.size(); ++q)
    if (sensed.estimates[q].fused) {
      fused.push_back(sensed.estimates[q]);
      fused_index.push_back(q);
    }
  std::vector<int> assigned = associate(fused, truth, range_gate, velocity_gate, 1.0);
  for (auto& a : assigned)
    if (a >= 0) a = static_cast<int>(fused_index[static_cast<std::size_t>(a)]);

  struct Candidate {
    double d;
    std::size_t q, t;
  };
  std::vector<Candidate> candidates;
  for (std::size_t q = 0; q < sensed.estimates.size(); ++q) {
    if (sensed.estimates[q].fused) continue;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (assigned[t] >= 0) continue;
      const double dr = std::abs(sensed.estimates[q].range - truth[t].range) / range_gate;
      const double dv = std::abs(sensed.estimates[q].velocity - truth[t].velocity) / velocity_gate;
      if (dr <= 1.0 && dv <= 1.0) candidates.push_back({std::hypot(dr, dv), q, t});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) { return a.d < b.d; });
  std::vector<bool> used(sensed.estimates.size(), false);
  for (const auto& c : candidates) {
    if (used[c.q] || assigned[c.t] >= 0) continue;
    used[c.q] = true;
    assigned[c.t] = static_cast<int>(c.q);
  }
  const double spacing = tap_spacing(config);

  SensedChannelEstimate out;
  out.provenance = EstimateProvenance::sensed;
  for (std::size_t p = 0; p < reference.paths.size(); ++p) {
    Path path = reference.paths[p];
    if (assigned[p] < 0) {
      path.doppler = 0.0;
      ++out.unmatched;
    } else {
      const auto& e = sensed.estimates[static_cast<std::size_t>(assigned[p])];
      const double tap = std::clamp(std::round(e.range / kSpeedOfLight / spacing), 0.0,
                                    static_cast<double>(reference.taps - 1));
      path.delay = tap * spacing;
      path.doppler = config.carrier_frequency * e.velocity / kSpeedOfLight;
    }
    out.paths.push_back(path);
  }
  return out;
}

ChannelMatrix reconstruct_channel(const SensedChannelEstimate& est, const WaveformConfig& config) {
  if (est.paths.empty()) throw InputError("reconstruct_channel: no paths to reconstruct");
  auto h = freq_channel_matrix(est.paths, config);
  h.role = MatrixRole::reconstructed;
  return h;
}

Compensator build_compensator(const ChannelMatrix& reconstructed) {
  const auto& h = reconstructed.m;
  if (h.rows() != h.cols() || h.rows() == 0) throw InputError("build_compensator: matrix must be square");
  Eigen::PartialPivLU<CMatrix> lu(h);
  const double rc = reciprocal_condition(lu);
  if (!(rc >= 1e-12)) throw NumericalError("build_compensator: reconstructed channel is near singular");
  CMatrix inv = lu.inverse();
  const double norm = inv.norm();
  return {{inv / norm, MatrixRole::compensator}, norm};
}

Compensator identity_compensator(int subcarriers) {
  const double norm = std::sqrt(static_cast<double>(subcarriers));
  return {{CMatrix::Identity(subcarriers, subcarriers) / norm, MatrixRole::compensator}, norm};
}

ChannelMatrix equivalent_channel(const ChannelMatrix& channel, const ChannelMatrix& reconstructed) {
  const auto& h = channel.m;
  if (h.rows() != h.cols() || reconstructed.m.rows() != h.rows() || reconstructed.m.cols() != h.cols())
    throw InputError("equivalent_channel: dimensions differ");
  Eigen::PartialPivLU<CMatrix> lu_h(h);
  if (!(reciprocal_condition(lu_h) >= 1e-12)) throw NumericalError("equivalent_channel: channel is near singular");
  const CMatrix delta = reconstructed.m - h;
  const CMatrix dh = delta * lu_h.inverse();
  const CMatrix a = CMatrix::Identity(h.rows(), h.cols()) + dh;
  Eigen::PartialPivLU<CMatrix> lu_a(a);
  if (!(reciprocal_condition(lu_a) >= 1e-12)) throw NumericalError("equivalent_channel: I + delta H^-1 is near singular");
  return {lu_a.inverse(), MatrixRole::equivalent};
}

double inverse_norm_sq(const ChannelMatrix& channel) {
  Eigen::PartialPivLU<CMatrix> lu(channel.m);
  if (!(reciprocal_condition(lu) >= 1e-12)) throw NumericalError("channel is near singular");
  return lu.inverse().squaredNorm();
}

SinrReport sinr_per_subcarrier(const ChannelMatrix& equivalent, double inv_norm_sq, double rho,
                               double transmit_power, double noise_var) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("sinr: rho must be in [0, 1)");
  const auto& hb = equivalent.m;
  const auto M = hb.rows();
  const double level = hb.norm() / std::sqrt(static_cast<double>(M));
  const double ratio = rho / (1.0 - rho);
  SinrReport r;
  r.sinr.resize(M);
  r.omega.resize(M);
  r.min_sinr = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < M; ++m) {
    const double diag = std::norm(hb(m, m));
    if (!(diag > 0.0)) {
      r.degenerate = true;
      r.sinr(m) = 0.0;
      r.omega(m) = std::numeric_limits<double>::infinity();
    } else {
      const double off = hb.row(m).squaredNorm() - diag;
      r.omega(m) = (std::max(off, 0.0) + ratio * std::norm(hb(m, m) - level)) / diag;
      r.sinr(m) = 1.0 / (r.omega(m) + inv_norm_sq * noise_var / ((1.0 - rho) * diag * transmit_power));
    }
    if (r.sinr(m) < r.min_sinr) {
      r.min_sinr = r.sinr(m);
      r.argmin = static_cast<int>(m);
    }
  }
  return r;
}

SinrReport sinr_per_subcarrier(const ChannelMatrix& equivalent, const ChannelMatrix& channel, double rho,
                               double transmit_power, double noise_var) {
  return sinr_per_subcarrier(equivalent, inverse_norm_sq(channel), rho, transmit_power, noise_var);
}

namespace {

template <class Eval>
RhoOptimum grid_search(Eval&& min_sinr_at, double step, double max) {
  if (!(step > 0.0) || !(max >= 0.0 && max < 1.0)) throw InputError("optimize_rho: invalid grid");
  const auto points = static_cast<long long>(std::floor(max / step + 1e-9));
  RhoOptimum best{0.0, -std::numeric_limits<double>::infinity()};
  for (long long i = 0; i <= points; ++i) {
    const double rho = static_cast<double>(i) * step;
    const double s = min_sinr_at(rho);
    if (s > best.min_sinr) best = {rho, s};
  }
  return best;
}

}  // namespace

RhoOptimum optimize_rho(const ChannelMatrix& equivalent, const ChannelMatrix& channel, double transmit_power,
                        double noise_var, double step, double max) {
  const double inv = inverse_norm_sq(channel);
  return grid_search(
      [&](double rho) { return sinr_per_subcarrier(equivalent, inv, rho, transmit_power, noise_var).min_sinr; },
      step, max);
}

RhoOptimum optimize_rho(const std::function<ChannelMatrix(double)>& equivalent_at, double inv_norm_sq,
                        double transmit_power, double noise_var, double step, double max) {
  return grid_search(
      [&](double rho) {
        return sinr_per_subcarrier(equivalent_at(rho), inv_norm_sq, rho, transmit_power, noise_var).min_sinr;
      },
      step, max);
}

ChannelMatrix equivalent_channel_at_rho(const PathSet& paths, const std::vector<double>& unit_errors, double error_hz,
                                        double rho, const ChannelMatrix& channel, const WaveformConfig& config) {
  if (unit_errors.size() != paths.size()) throw InputError("equivalent_channel_at_rho: one error per path");
  if (!(rho > 0.0)) {
    // No sensing power: nothing is known about the Doppler.
    auto est = genie_estimate(paths);
    for (auto& p : est.paths) p.doppler = 0.0;
    return equivalent_channel(channel, reconstruct_channel(est, config));
  }
  auto est = genie_estimate(paths);
  const double scale = error_hz * std::sqrt((1.0 - rho) / rho);
  for (std::size_t p = 0; p < est.paths.size(); ++p) est.paths[p].doppler += scale * unit_errors[p];
  return equivalent_channel(channel, reconstruct_channel(est, config));
}

RhoMax rho_max(const ChannelMatrix& equivalent, const ChannelMatrix& channel, double gc_db, double transmit_power,
               double noise_var) {
  if (!(gc_db >= 0.0)) throw InputError("rho_max: G_c must be >= 0 dB");
  const double a = inverse_norm_sq(channel) * noise_var;
  const auto report = sinr_per_subcarrier(equivalent, inverse_norm_sq(channel), 0.0, transmit_power, noise_var);
  const double gain = std::pow(10.0, gc_db / 10.0);
  const double p2 = transmit_power * transmit_power;
  double worst = 0.0;
  for (Eigen::Index m = 0; m < report.omega.size(); ++m) {
    const double d = std::norm(equivalent.m(m, m));
    const double term = a / (gain * (report.omega(m) + a / (p2 * d)) * d * p2);
    worst = std::max(worst, term);
  }
  RhoMax out{1.0 - worst, false};
  if (out.value < 0.0) out = {0.0, true};
  return out;
}

double rho_max_static(double gc_db) {
  if (!(gc_db >= 0.0)) throw InputError("rho_max: G_c must be >= 0 dB");
  return 1.0 - std::pow(10.0, -gc_db / 10.0);
}

double snr_at_ber(const std::vector<BerPoint>& curve, double target) {
  if (!(target > 0.0)) throw InputError("snr_at_ber: target BER must be > 0");
  std::vector<BerPoint> pts;
  std::copy_if(curve.begin(), curve.end(), std::back_inserter(pts), [](const BerPoint& p) { return p.ber > 0.0; });
  if (pts.size() < 2) throw InputError("snr_at_ber: curve needs at least two nonzero points");
  const double lt = std::log10(target);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[i + 1];
    if (a.ber >= target && b.ber <= target) {
      if (a.ber == b.ber) return a.snr_db;
      const double la = std::log10(a.ber);
      const double lb = std::log10(b.ber);
      return a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db);
    }
  }
  throw InputError("snr_at_ber: target BER outside the curve's range");
}

double comm_gain_gc(const std::vector<BerPoint>& im_curve, const std::vector<BerPoint>& ofdm_curve, double target) {
  return snr_at_ber(ofdm_curve, target) - snr_at_ber(im_curve, target);
}

}  // namespace simofdm
