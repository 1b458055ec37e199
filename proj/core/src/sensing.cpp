#include "simofdm/sensing.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "czt.hpp"
#include "simofdm/error.hpp"

namespace simofdm {

Axis Axis::from_range(double min, double max, int count) {
  if (count < 1) throw InputError("axis needs at least one point");
  if (count == 1) return {min, 1.0, 1};
  if (!(max > min)) throw InputError("axis max must exceed min");
  return {min, (max - min) / (count - 1), count};
}

Axis Axis::from_step(double min, double max, double step) {
  if (!(step > 0.0)) throw InputError("axis step must be > 0");
  if (!(max >= min)) throw InputError("axis max must not be below min");
  const int count = static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
  return {min, step, count};
}

void RangeVelocityGrid::validate() const {
  if (range.count < 1 || velocity.count < 1) throw InputError("grid: empty axis");
  if (!(range.step > 0.0) || !(velocity.step > 0.0)) throw InputError("grid: axis steps must be > 0");
}

namespace {

double delay_per_meter(const WaveformConfig& c) { return 4.0 * kPi * c.subcarrier_spacing / kSpeedOfLight; }
double doppler_per_mps(const WaveformConfig& c) {
  return 2.0 * c.carrier_frequency * c.symbol_duration / kSpeedOfLight;
}

void check_frames(const Frame& a, const Frame& b, const char* op) {
  if (a.samples.rows() != b.samples.rows() || a.samples.cols() != b.samples.cols())
    throw InputError(std::string(op) + ": frame dimensions differ");
  if (a.samples.size() == 0) throw InputError(std::string(op) + ": empty frame");
}

// Vertex offset of the parabola through (-1, a), (0, b), (1, c), limited to half a cell.
double parabolic_offset(double a, double b, double c) {
  const double den = a - 2.0 * b + c;
  if (!(den < 0.0)) return 0.0;
  return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

}  // namespace

Spectrum2D matched_filter_spectrum(const Frame& echo, const Frame& sense, const RangeVelocityGrid& grid,
                                   const WaveformConfig& config) {
  grid.validate();
  check_frames(echo, sense, "matched_filter_spectrum");
  const CMatrix z = echo.samples.cwiseProduct(sense.samples.conjugate());
  const double a = delay_per_meter(config);
  const double b = doppler_per_mps(config);
  const CMatrix along_range =
      detail::chirp_sum_columns(z, a * grid.range.min, a * grid.range.step, grid.range.count);
  const CMatrix both = detail::chirp_sum_columns(along_range.transpose(), -kTwoPi * b * grid.velocity.min,
                                                 -kTwoPi * b * grid.velocity.step, grid.velocity.count);
  return {grid, both.transpose().cwiseAbs2()};
}

double peak_to_mean(const Spectrum2D& spectrum) {
  const double mean = spectrum.values.mean();
  if (!(mean > 0.0)) return 0.0;
  return spectrum.values.maxCoeff() / mean;
}

double detection_threshold(const RangeVelocityGrid& grid, double false_alarm) {
  if (!(false_alarm > 0.0 && false_alarm < 1.0)) throw InputError("false-alarm probability must be in (0, 1)");
  return std::log(static_cast<double>(grid.cells()) / false_alarm);
}

EstimateSet find_peaks(const Spectrum2D& spectrum, int count) {
  if (count < 1) throw InputError("find_peaks: count must be >= 1");
  const RMatrix& s = spectrum.values;
  const auto rows = s.rows();
  const auto cols = s.cols();
  if (rows == 0 || cols == 0) throw InputError("find_peaks: empty spectrum");

  struct Cell {
    Eigen::Index i, j;
    double v;
  };
  std::vector<Cell> maxima;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double v = s(i, j);
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const auto ii = i + di;
          const auto jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= rows || jj >= cols) continue;
          // Plateaus keep only their first cell in scan order.
          const bool earlier = di < 0 || (di == 0 && dj < 0);
          if (s(ii, jj) > v || (earlier && s(ii, jj) == v)) {
            peak = false;
            break;
          }
        }
      }
      if (peak) maxima.push_back({i, j, v});
    }
  }
  std::stable_sort(maxima.begin(), maxima.end(), [](const Cell& x, const Cell& y) {
    if (x.v != y.v) return x.v > y.v;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });

  EstimateSet out;
  const auto keep = std::min<std::size_t>(maxima.size(), static_cast<std::size_t>(count));
  out.incomplete = keep < static_cast<std::size_t>(count);
  for (std::size_t q = 0; q < keep; ++q) {
    const auto [i, j, v] = maxima[q];
    double di = 0.0, dj = 0.0;
    if (i > 0 && i + 1 < rows) di = parabolic_offset(s(i - 1, j), v, s(i + 1, j));
    if (j > 0 && j + 1 < cols) dj = parabolic_offset(s(i, j - 1), v, s(i, j + 1));
    Estimate e;
    e.range = spectrum.grid.range.value(static_cast<double>(i) + di);
    e.velocity = spectrum.grid.velocity.value(static_cast<double>(j) + dj);
    e.power = v;
    out.estimates.push_back(e);
  }
  return out;
}

CMatrix masked_divide(const CMatrix& echo, const CMatrix& transmitted, double threshold) {
  if (echo.rows() != transmitted.rows() || echo.cols() != transmitted.cols())
    throw InputError("masked_divide: dimensions differ");
  const auto rows = echo.rows();
  const auto cols = echo.cols();
  CMatrix y = CMatrix::Zero(rows, cols);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      valid(i, j) = std::abs(transmitted(i, j)) >= threshold;
      if (valid(i, j)) y(i, j) = echo(i, j) / transmitted(i, j);
    }
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (valid(i, j)) continue;
      cd sum{};
      int n = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const auto ii = i + di;
          const auto jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= rows || jj >= cols || !valid(ii, jj)) continue;
          sum += y(ii, jj);
          ++n;
        }
      if (n > 0) y(i, j) = sum / static_cast<double>(n);
    }
  return y;
}

namespace {

struct Subspace {
  CMatrix signal;  // L x P, orthonormal columns
  int mw = 0;
  int nw = 0;
  bool rank_deficient = false;
};

Subspace signal_subspace(const Frame& echo, const Frame& transmitted, int count, const WaveformConfig& config,
                         const MusicOptions& options) {
  check_frames(echo, transmitted, "music_2d");
  if (count < 1) throw InputError("music_2d: target count must be >= 1");
  const int M = static_cast<int>(echo.samples.rows());
  const int N = static_cast<int>(echo.samples.cols());
  (void)config;
  const int mw = options.window.subcarriers > 0 ? options.window.subcarriers : std::min(M / 2, 32);
  const int nw = options.window.symbols > 0 ? options.window.symbols : std::min(N / 2, 8);
  if (mw < 1 || nw < 1 || mw > M || nw > N) throw InputError("music_2d: window does not fit the frame");
  const int L = mw * nw;
  if (L <= count) throw InputError("music_2d: window too small for the target count");

  const double rms = transmitted.samples.norm() / std::sqrt(static_cast<double>(transmitted.samples.size()));
  const CMatrix y = masked_divide(echo.samples, transmitted.samples, options.mask_threshold * rms);
  const long long rows_k = M - mw + 1;
  const long long cols_k = N - nw + 1;
  const long long total = rows_k * cols_k;
  const long long used = std::min<long long>(total, std::max(1, options.max_subframes));

  CMatrix d(L, used);
  for (long long k = 0; k < used; ++k) {
    const long long idx = used == total ? k : (k * total) / used;
    const auto i0 = static_cast<Eigen::Index>(idx % rows_k);
    const auto j0 = static_cast<Eigen::Index>(idx / rows_k);
    for (int n = 0; n < nw; ++n) d.col(k).segment(n * mw, mw) = y.col(j0 + n).segment(i0, mw);
  }
  CMatrix cov(L, L);
  cblas_zherk(CblasColMajor, CblasLower, CblasNoTrans, L, static_cast<int>(used), 1.0 / static_cast<double>(used),
              d.data(), L, 0.0, cov.data(), L);

  std::vector<double> w(static_cast<std::size_t>(L));
  Subspace out;
  out.signal.resize(L, count);
  out.mw = mw;
  out.nw = nw;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(L));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(
      LAPACK_COL_MAJOR, 'V', 'I', 'L', L, reinterpret_cast<lapack_complex_double*>(cov.data()), L, 0.0, 0.0,
      L - count + 1, L, 0.0, &found, w.data(), reinterpret_cast<lapack_complex_double*>(out.signal.data()), L,
      support.data());
  if (info != 0 || found != count) throw NumericalError("music_2d: eigendecomposition failed");
  const double largest = w[static_cast<std::size_t>(count - 1)];
  out.rank_deficient = !(largest > 0.0) || w[0] <= 1e-10 * largest;
  return out;
}

double pseudo_value(const Subspace& sub, double tau, double f) {
  CVector a(sub.mw * sub.nw);
  for (int n = 0; n < sub.nw; ++n)
    for (int m = 0; m < sub.mw; ++m) a(m + sub.mw * n) = std::exp(kJ * (kTwoPi * n * f - m * tau));
  const double total = static_cast<double>(a.size());
  const double proj = (sub.signal.adjoint() * a).squaredNorm();
  return 1.0 / std::max(total - proj, 1e-12 * total);
}

}  // namespace

namespace {

Spectrum2D music_grid(const Subspace& sub, const RangeVelocityGrid& grid, const WaveformConfig& config) {
  const double a = delay_per_meter(config);
  const double b = doppler_per_mps(config);
  CMatrix ur(grid.range.count, sub.mw);
  for (int i = 0; i < grid.range.count; ++i)
    for (int m = 0; m < sub.mw; ++m) ur(i, m) = std::exp(-kJ * (m * a * grid.range.value(i)));
  CMatrix wv(sub.nw, grid.velocity.count);
  for (int n = 0; n < sub.nw; ++n)
    for (int j = 0; j < grid.velocity.count; ++j) wv(n, j) = std::exp(kJ * (kTwoPi * n * b * grid.velocity.value(j)));

  const double total = static_cast<double>(sub.mw * sub.nw);
  RMatrix proj = RMatrix::Zero(grid.range.count, grid.velocity.count);
  for (Eigen::Index p = 0; p < sub.signal.cols(); ++p) {
    const CMatrix e = Eigen::Map<const CMatrix>(sub.signal.col(p).data(), sub.mw, sub.nw).conjugate();
    proj += (ur * e * wv).cwiseAbs2();
  }
  RMatrix values = (total - proj.array()).max(1e-12 * total).inverse().matrix();
  return {grid, std::move(values)};
}

}  // namespace

Spectrum2D music_spectrum(const Frame& echo, const Frame& transmitted, const RangeVelocityGrid& grid, int count,
                          const WaveformConfig& config, const MusicOptions& options, bool* rank_deficient) {
  grid.validate();
  const Subspace sub = signal_subspace(echo, transmitted, count, config, options);
  if (rank_deficient) *rank_deficient = sub.rank_deficient;
  return music_grid(sub, grid, config);
}

EstimateSet music_2d(const Frame& echo, const Frame& transmitted, const RangeVelocityGrid& grid, int count,
                     const WaveformConfig& config, const MusicOptions& options) {
  grid.validate();
  const Subspace sub = signal_subspace(echo, transmitted, count, config, options);
  EstimateSet out = find_peaks(music_grid(sub, grid, config), count);
  out.source = EstimateSource::music;
  out.rank_deficient = sub.rank_deficient;
  if (!options.refine) return out;

  const double a = delay_per_meter(config);
  const double b = doppler_per_mps(config);
  auto value = [&](double r, double v) { return pseudo_value(sub, a * r, b * v); };
  for (auto& e : out.estimates) {
    const double r0 = e.range;
    const double v0 = e.velocity;
    double hr = 0.5 * grid.range.step;
    double hv = 0.5 * grid.velocity.step;
    double best = value(e.range, e.velocity);
    for (int it = 0; it < 12; ++it) {
      const double rl = value(e.range - hr, e.velocity), rh = value(e.range + hr, e.velocity);
      const double r_new = e.range + hr * parabolic_offset(rl, best, rh);
      double b_r = value(r_new, e.velocity);
      if (b_r >= best) {
        e.range = r_new;
        best = b_r;
      }
      const double vl = value(e.range, e.velocity - hv), vh = value(e.range, e.velocity + hv);
      const double v_new = e.velocity + hv * parabolic_offset(vl, best, vh);
      double b_v = value(e.range, v_new);
      if (b_v >= best) {
        e.velocity = v_new;
        best = b_v;
      }
      hr *= 0.5;
      hv *= 0.5;
    }
    e.range = std::clamp(e.range, r0 - grid.range.step, r0 + grid.range.step);
    e.velocity = std::clamp(e.velocity, v0 - grid.velocity.step, v0 + grid.velocity.step);
    e.power = best;
  }
  return out;
}

double fusion_weight(std::optional<double> var1, std::optional<double> var2) {
  if (!var1 || !var2) return 0.5;
  const double sum = *var1 + *var2;
  if (!(sum > 0.0)) return 0.5;
  return *var2 / sum;
}

EstimateSet fuse(const EstimateSet& e1, const EstimateSet& e2, const FusionPrior& prior, double range_scale,
                 double velocity_scale, double gate) {
  if (!(range_scale > 0.0) || !(velocity_scale > 0.0)) throw InputError("fuse: scales must be > 0");
  const double wr = fusion_weight(prior.var_range_1, prior.var_range_2);
  const double wv = fusion_weight(prior.var_velocity_1, prior.var_velocity_2);
  EstimateSet out;
  out.source = EstimateSource::fused;
  out.incomplete = e1.incomplete || e2.incomplete;
  out.rank_deficient = e1.rank_deficient || e2.rank_deficient;
  std::vector<bool> taken(e2.size(), false);
  for (const auto& a : e1.estimates) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < e2.size(); ++q) {
      if (taken[q]) continue;
      const double dr = (a.range - e2.estimates[q].range) / range_scale;
      const double dv = (a.velocity - e2.estimates[q].velocity) / velocity_scale;
      const double d = std::hypot(dr, dv);
      if (d <= gate && d < best_d) {
        best = static_cast<int>(q);
        best_d = d;
      }
    }
    Estimate f = a;
    if (best < 0) {
      f.fused = false;
      out.unpaired = true;
    } else {
      const auto& b = e2.estimates[static_cast<std::size_t>(best)];
      taken[static_cast<std::size_t>(best)] = true;
      f.range = wr * a.range + (1.0 - wr) * b.range;
      f.velocity = wv * a.velocity + (1.0 - wv) * b.velocity;
      if (prior.var_range_1 && prior.var_range_2)
        f.var_range = *prior.var_range_1 * *prior.var_range_2 / (*prior.var_range_1 + *prior.var_range_2);
      if (prior.var_velocity_1 && prior.var_velocity_2)
        f.var_velocity =
            *prior.var_velocity_1 * *prior.var_velocity_2 / (*prior.var_velocity_1 + *prior.var_velocity_2);
    }
    out.estimates.push_back(f);
  }
  for (std::size_t q = 0; q < e2.size(); ++q) {
    if (taken[q]) continue;
    Estimate f = e2.estimates[q];
    f.fused = false;
    out.estimates.push_back(f);
    out.unpaired = true;
  }
  return out;
}

CrlbResult crlb(const TargetSet& targets, const Frame& transmitted, double noise_var, double transmit_power,
                const WaveformConfig& config) {
  if (!(noise_var > 0.0)) throw InputError("crlb: noise variance must be > 0");
  if (!(transmit_power > 0.0)) throw InputError("crlb: transmit power must be > 0");
  if (transmitted.samples.size() == 0) throw InputError("crlb: empty frame");
  const RMatrix x2 = transmitted.samples.cwiseAbs2();
  double smm = 0.0, smn = 0.0, snn = 0.0;
  for (Eigen::Index n = 0; n < x2.cols(); ++n)
    for (Eigen::Index m = 0; m < x2.rows(); ++m) {
      const double md = static_cast<double>(m);
      const double nd = static_cast<double>(n);
      smm += md * md * x2(m, n);
      smn += md * nd * x2(m, n);
      snn += nd * nd * x2(m, n);
    }
  const double a = delay_per_meter(config);
  const double b = doppler_per_mps(config);
  const double per_entry_power = transmit_power / static_cast<double>(transmitted.samples.rows());

  CrlbResult out;
  for (const auto& t : targets.targets) {
    const double k = 2.0 * per_entry_power * std::norm(t.reflectivity) / noise_var;
    CrlbBlock blk;
    blk.fisher(0, 0) = k * a * a * smm;
    blk.fisher(0, 1) = blk.fisher(1, 0) = -k * kTwoPi * a * b * smn;
    blk.fisher(1, 1) = k * kTwoPi * kTwoPi * b * b * snn;
    const double det = blk.fisher.determinant();
    const double scale = blk.fisher(0, 0) * blk.fisher(1, 1);
    if (!(scale > 0.0) || !(det > 1e-12 * scale)) {
      blk.singular = true;
      blk.range = blk.velocity = std::numeric_limits<double>::infinity();
    } else {
      blk.range = blk.fisher(1, 1) / det;
      blk.velocity = blk.fisher(0, 0) / det;
    }
    out.targets.push_back(blk);
  }
  return out;
}

std::vector<int> associate(const std::vector<Estimate>& estimates, const std::vector<Target>& truth,
                           double range_scale, double velocity_scale, double gate) {
  std::vector<int> assigned(truth.size(), -1);
  std::vector<std::size_t> order(estimates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return estimates[x].power > estimates[y].power; });
  for (const auto q : order) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (assigned[t] >= 0) continue;
      const double dr = std::abs(estimates[q].range - truth[t].range) / range_scale;
      const double dv = std::abs(estimates[q].velocity - truth[t].velocity) / velocity_scale;
      if (dr > gate || dv > gate) continue;
      const double d = std::hypot(dr, dv);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0) assigned[static_cast<std::size_t>(best)] = static_cast<int>(q);
  }
  return assigned;
}

RmseResult rmse(const std::vector<EstimateSet>& estimates, const std::vector<std::vector<Target>>& truth,
                double range_gate, double velocity_gate) {
  if (estimates.empty() || estimates.size() != truth.size()) throw InputError("rmse: need one truth set per trial");
  RmseResult out;
  double er = 0.0, ev = 0.0;
  std::size_t terms = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const auto& est = estimates[i].estimates;
    const auto assigned = associate(est, truth[i], range_gate, velocity_gate, 1.0);
    if (std::find(assigned.begin(), assigned.end(), -1) != assigned.end()) {
      ++out.excluded;
      continue;
    }
    ++out.trials;
    for (std::size_t t = 0; t < truth[i].size(); ++t) {
      const auto& e = est[static_cast<std::size_t>(assigned[t])];
      er += std::pow(e.range - truth[i][t].range, 2);
      ev += std::pow(e.velocity - truth[i][t].velocity, 2);
      ++terms;
    }
  }
  if (terms > 0) {
    out.range = std::sqrt(er / static_cast<double>(terms));
    out.velocity = std::sqrt(ev / static_cast<double>(terms));
  } else {
    out.range = out.velocity = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace simofdm
