#include "simofdm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "format.hpp"
#include "simofdm/error.hpp"
#include "simofdm/output.hpp"
#include "simofdm/receiver.hpp"

namespace simofdm {

bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.experiment, a.waveform, a.rho, a.snr_db, a.metric, a.trials, a.seed, a.value) <
         std::tie(b.experiment, b.waveform, b.rho, b.snr_db, b.metric, b.trials, b.seed, b.value);
}

void fill_defaults(ExperimentConfig& c, const std::string& command) {
  auto range = [](double a, double step, double b) {
    std::vector<double> v;
    for (double x = a; x <= b + 1e-9; x += step) v.push_back(x);
    return v;
  };
  if (command == "ber") {
    if (c.snr_db.empty()) c.snr_db = c.channel.doppler ? range(0, 5, 70) : range(0, 2, 30);
    if (c.rho.empty()) c.rho = {0.1, 0.3, 0.5};
  } else if (command == "rmse" || command == "crlb") {
    if (c.snr_db.empty()) c.snr_db = range(-10, 5, 20);
    if (c.rho.empty()) c.rho = {0.1, 0.3, 0.6};
  } else if (command == "sinr") {
    if (c.snr_db.empty()) c.snr_db = {10, 20, 30};
  } else if (command == "demo") {
    if (c.snr_db.empty()) c.snr_db = {30};
    if (c.rho.empty()) c.rho = {0.3};
  }
  if (c.snr_db.empty()) c.snr_db = {20};
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Series {
  WaveformKind kind;
  double rho;
};

std::vector<Series> build_series(const ExperimentConfig& c) {
  std::vector<Series> out;
  for (auto k : c.waveforms) {
    if (k == WaveformKind::sim) {
      for (double r : c.rho) out.push_back({k, r});
    } else {
      out.push_back({k, 0.0});
    }
  }
  return out;
}

CVector diagonal(const CMatrix& m) { return m.diagonal(); }

// Grid and gates used when the echo targets are the comm paths.
struct PathSensing {
  RangeVelocityGrid grid;
  double range_gate;
  double velocity_gate;
};

PathSensing path_sensing(const ExperimentConfig& c) {
  const double tap_range = kSpeedOfLight * tap_spacing(c.waveform);
  const double vmax = std::max(4.0 * c.channel.velocity_std, 5.0);
  PathSensing s;
  s.grid.range = Axis::from_range(0.0, tap_range * c.channel.taps, 4 * c.channel.taps + 1);
  s.grid.velocity = Axis::from_range(-vmax, vmax, c.sensing.grid.velocity_points);
  s.range_gate = 0.75 * tap_range;
  s.velocity_gate = std::max(2.0 * c.channel.velocity_std, 5.0);
  return s;
}

struct SensedPair {
  EstimateSet mf;
  EstimateSet music;
};

SensedPair sense(const Frame& echo, const Frame& transmitted, const Frame& sense_frame, const RangeVelocityGrid& grid,
                 int count, const WaveformConfig& wf, Estimator est) {
  SensedPair out;
  if (est != Estimator::music) {
    out.mf = find_peaks(matched_filter_spectrum(echo, sense_frame, grid, wf), count);
    out.mf.source = EstimateSource::matched_filter;
  }
  if (est != Estimator::matched_filter) out.music = music_2d(echo, transmitted, grid, count, wf);
  return out;
}

EstimateSet pick(const SensedPair& s, Estimator est, const FusionPrior& prior, double range_gate,
                 double velocity_gate) {
  switch (est) {
    case Estimator::matched_filter: return s.mf;
    case Estimator::music: return s.music;
    case Estimator::fused: return fuse(s.mf, s.music, prior, range_gate, velocity_gate, 1.0);
  }
  return s.mf;
}

// Accumulates squared errors of associated estimates against truth.
struct ErrorAccumulator {
  double sr = 0.0, sv = 0.0;
  std::size_t n = 0;

  void add(const EstimateSet& est, const std::vector<Target>& truth, double rg, double vg) {
    const auto a = associate(est.estimates, truth, rg, vg, 1.0);
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (a[t] < 0) continue;
      const auto& e = est.estimates[static_cast<std::size_t>(a[t])];
      sr += std::pow(e.range - truth[t].range, 2);
      sv += std::pow(e.velocity - truth[t].velocity, 2);
      ++n;
    }
  }
};

FusionPrior prior_from(const ErrorAccumulator& mf, const ErrorAccumulator& mu) {
  FusionPrior p;
  if (mf.n > 0 && mu.n > 0) {
    p.var_range_1 = mf.sr / static_cast<double>(mf.n);
    p.var_velocity_1 = mf.sv / static_cast<double>(mf.n);
    p.var_range_2 = mu.sr / static_cast<double>(mu.n);
    p.var_velocity_2 = mu.sv / static_cast<double>(mu.n);
  }
  return p;
}

// One comm-link trial draw shared by every series and SNR point.
struct LinkDraw {
  PathSet paths;
  ChannelMatrix h;
  double inv_sq = 0.0;
  Bits ofdm_bits;
  Bits im_bits;
  CMatrix comm_noise;
  CMatrix sense_noise;
};

LinkDraw draw_link(const ExperimentConfig& c, Rng& rng) {
  const auto& wf = c.waveform;
  LinkDraw d;
  d.paths = draw_channel(c, rng, d.h);
  d.inv_sq = inverse_norm_sq(d.h);
  d.ofdm_bits = random_bits(static_cast<std::size_t>(wf.subcarriers) * wf.symbols, rng);
  d.im_bits = random_bits(static_cast<std::size_t>(bits_per_symbol(wf)) * wf.symbols, rng);
  d.comm_noise = complex_gaussian(wf.subcarriers, wf.symbols, rng);
  d.sense_noise = complex_gaussian(wf.subcarriers, wf.symbols, rng);
  return d;
}

Frame scaled(const Frame& f, double s) { return {f.samples * s, f.role}; }

}  // namespace

double comm_noise_var(const ExperimentConfig& c, WaveformKind kind, const ChannelMatrix& channel,
                      double inverse_norm_sq_value, double snr_db) {
  const auto& wf = c.waveform;
  const double M = wf.subcarriers;
  const double b = kind == WaveformKind::ofdm ? M : static_cast<double>(bits_per_symbol(wf));
  const double snr = db_to_linear(snr_db);
  const double p = wf.transmit_power;
  if (c.snr_reference == SnrReference::transmit) return p / (b * snr);
  if (kind == WaveformKind::sim) return p * M / (inverse_norm_sq_value * b * snr);
  return p * channel.m.squaredNorm() / M / (b * snr);
}

PathSet draw_channel(const ExperimentConfig& c, Rng& rng, ChannelMatrix& matrix, int* rejected) {
  const double vstd = c.channel.doppler ? c.channel.velocity_std : 0.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    PathSet p = sample_paths(c.channel.model, c.channel.paths, c.channel.taps, vstd, c.channel.rice_factor,
                             c.waveform, rng);
    matrix = freq_channel_matrix(p, c.waveform);
    if (reciprocal_condition(matrix.m) >= 1e-12) return p;
    if (rejected) ++*rejected;
  }
  throw NumericalError("could not draw a well-conditioned channel in 100 attempts");
}

namespace {

using PriorTable = std::vector<FusionPrior>;  // index rho * S + snr

PriorTable calibrate_link_sensing(const ExperimentConfig& c, const std::string& exp, const Frame& xs) {
  const auto& wf = c.waveform;
  const std::size_t S = c.snr_db.size();
  const std::size_t R = c.rho.size();
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const auto ps = path_sensing(c);
  const double amp = std::sqrt(wf.transmit_power / wf.subcarriers);
  const auto n = static_cast<std::size_t>(c.sensing.calibration_trials);
  std::vector<std::vector<std::pair<ErrorAccumulator, ErrorAccumulator>>> acc(
      n, std::vector<std::pair<ErrorAccumulator, ErrorAccumulator>>(R * S));
  parallel_for(n, c.threads, [&](std::size_t t) {
    Rng rng = derive_stream(c.seed, exp + "/calibration", t);
    const auto d = draw_link(c, rng);
    const auto truth = targets_from_paths(d.paths, wf);
    const auto targets = make_targets(truth, wf);
    const Frame xc = map_bits_to_comm_frame(d.im_bits, wf, cb);
    for (std::size_t r = 0; r < R; ++r) {
      const Frame x = scaled(superpose(xc, xs, c.rho[r]), amp);
      for (std::size_t s = 0; s < S; ++s) {
        const double sigma = std::sqrt(comm_noise_var(c, WaveformKind::sim, d.h, d.inv_sq, c.snr_db[s]));
        const Frame echo = generate_echo(x, targets, sigma, d.sense_noise, wf);
        const auto sp = sense(echo, x, xs, ps.grid, static_cast<int>(d.paths.size()), wf, Estimator::fused);
        acc[t][r * S + s].first.add(sp.mf, truth, ps.range_gate, ps.velocity_gate);
        acc[t][r * S + s].second.add(sp.music, truth, ps.range_gate, ps.velocity_gate);
      }
    }
  });
  PriorTable out(R * S);
  for (std::size_t k = 0; k < R * S; ++k) {
    ErrorAccumulator a, b;
    for (std::size_t t = 0; t < n; ++t) {
      a.sr += acc[t][k].first.sr, a.sv += acc[t][k].first.sv, a.n += acc[t][k].first.n;
      b.sr += acc[t][k].second.sr, b.sv += acc[t][k].second.sv, b.n += acc[t][k].second.n;
    }
    out[k] = prior_from(a, b);
  }
  return out;
}

}  // namespace

std::vector<ResultRow> run_ber_sweep(const ExperimentConfig& c) {
  c.validate();
  const auto& wf = c.waveform;
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const Frame xs = build_sense_frame(wf);
  const int M = wf.subcarriers;
  const double P = wf.transmit_power;
  const std::string exp =
      std::string("ber-") + (c.channel.doppler ? "tv-" : "static-") + to_string(c.channel.model);
  const auto series = build_series(c);
  const std::size_t S = c.snr_db.size();
  const std::size_t Q = series.size();
  const bool sensed = c.channel.doppler;
  const auto ps = path_sensing(c);

  std::map<double, std::size_t> rho_index;
  for (std::size_t r = 0; r < c.rho.size(); ++r) rho_index.emplace(c.rho[r], r);
  PriorTable priors(c.rho.size() * S);
  const bool any_sim = std::any_of(series.begin(), series.end(), [](const Series& s) { return s.kind == WaveformKind::sim; });
  if (sensed && any_sim && c.sensing.estimator == Estimator::fused && c.sensing.calibrated_prior)
    priors = calibrate_link_sensing(c, exp, xs);

  const auto trials = static_cast<std::size_t>(c.trials);
  std::vector<std::vector<BitErrors>> cells(trials, std::vector<BitErrors>(Q * S));
  parallel_for(trials, c.threads, [&](std::size_t t) {
    Rng rng = derive_stream(c.seed, exp, t);
    const auto d = draw_link(c, rng);
    const Frame xc = map_bits_to_comm_frame(d.im_bits, wf, cb);
    auto& out = cells[t];
    for (std::size_t q = 0; q < Q; ++q) {
      const auto& se = series[q];
      if (se.kind == WaveformKind::ofdm) {
        for (std::size_t s = 0; s < S; ++s) {
          const double sigma = std::sqrt(comm_noise_var(c, se.kind, d.h, d.inv_sq, c.snr_db[s]));
          out[q * S + s] = ofdm_baseline_roundtrip(d.ofdm_bits, d.h, P, sigma, d.comm_noise, wf);
        }
      } else if (se.kind == WaveformKind::im) {
        const CMatrix y0 = std::sqrt(P / M) * (d.h.m * xc.samples);
        ReceiverContext ctx;
        ctx.inverse_norm = std::sqrt(static_cast<double>(M));
        ctx.transmit_power = P;
        ctx.gains = diagonal(d.h.m);
        ctx.sense_present = false;
        for (std::size_t s = 0; s < S; ++s) {
          const double sigma = std::sqrt(comm_noise_var(c, se.kind, d.h, d.inv_sq, c.snr_db[s]));
          const Frame y{y0 + sigma * d.comm_noise, FrameRole::received};
          out[q * S + s] = count_errors(d.im_bits, decode_frame(y, xs, wf, cb, ctx).bits);
        }
      } else {
        const Frame x = superpose(xc, xs, se.rho);
        const Frame x_echo = scaled(x, std::sqrt(P / M));
        Compensator comp;
        if (!sensed) comp = build_compensator({d.h.m, MatrixRole::reconstructed});
        const auto truth = targets_from_paths(d.paths, wf);
        const auto targets = make_targets(truth, wf);
        for (std::size_t s = 0; s < S; ++s) {
          const double sigma = std::sqrt(comm_noise_var(c, se.kind, d.h, d.inv_sq, c.snr_db[s]));
          if (sensed) {
            const Frame echo = generate_echo(x_echo, targets, sigma, d.sense_noise, wf);
            const auto sp = sense(echo, x_echo, xs, ps.grid, static_cast<int>(d.paths.size()), wf,
                                  c.sensing.estimator);
            const auto est = pick(sp, c.sensing.estimator, priors[rho_index.at(se.rho) * S + s], ps.range_gate,
                                  ps.velocity_gate);
            const auto channel_est = channel_from_sensing(est, d.paths, wf, ps.range_gate, ps.velocity_gate);
            try {
              comp = build_compensator(reconstruct_channel(channel_est, wf));
            } catch (const NumericalError&) {
              comp = identity_compensator(M);
            }
          }
          const CMatrix hu = d.h.m * comp.u.m;
          ReceiverContext ctx;
          ctx.inverse_norm = comp.inverse_norm;
          ctx.transmit_power = P;
          ctx.gains = diagonal(hu) * comp.inverse_norm;
          const Frame y{std::sqrt(P) * (hu * x.samples) + sigma * d.comm_noise, FrameRole::received};
          out[q * S + s] = count_errors(d.im_bits, decode_frame(y, xs, wf, cb, ctx).bits);
        }
      }
    }
  });

  std::vector<ResultRow> rows;
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t s = 0; s < S; ++s) {
      BitErrors total;
      for (std::size_t t = 0; t < trials; ++t) total += cells[t][q * S + s];
      rows.push_back({exp, waveform_tag(series[q].kind), series[q].rho, c.snr_db[s], "BER", total.rate(), trials,
                      c.seed});
    }
  }
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

namespace {

struct SenseTrial {
  std::vector<Target> truth;
  std::vector<SensedPair> cells;  // rho * S + snr
  std::vector<std::pair<double, double>> crlb;
};

SenseTrial run_sense_trial(const ExperimentConfig& c, const std::string& stream, std::size_t t, bool estimate) {
  const auto& wf = c.waveform;
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const Frame xs = build_sense_frame(wf);
  const auto grid = c.sensing.grid.grid();
  const double pe = wf.transmit_power / wf.subcarriers;
  const std::size_t S = c.snr_db.size();
  const std::size_t R = c.rho.size();

  Rng rng = derive_stream(c.seed, stream, t);
  SenseTrial out;
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  if (c.sensing.isolated) {
    Target tg = c.sensing.targets[t % c.sensing.targets.size()];
    tg.reflectivity = std::polar(std::abs(tg.reflectivity), phase(rng));
    out.truth = {tg};
  } else {
    for (auto tg : c.sensing.targets) {
      tg.reflectivity = std::polar(std::abs(tg.reflectivity), phase(rng));
      out.truth.push_back(tg);
    }
  }
  const auto targets = make_targets(out.truth, wf);
  const Bits bits = random_bits(static_cast<std::size_t>(bits_per_symbol(wf)) * wf.symbols, rng);
  const Frame xc = map_bits_to_comm_frame(bits, wf, cb);
  const CMatrix noise = complex_gaussian(wf.subcarriers, wf.symbols, rng);
  out.cells.resize(R * S);
  out.crlb.resize(R * S);
  for (std::size_t r = 0; r < R; ++r) {
    const Frame x = superpose(xc, xs, c.rho[r]);
    const Frame xe = scaled(x, std::sqrt(pe));
    for (std::size_t s = 0; s < S; ++s) {
      const double noise_var = pe / db_to_linear(c.snr_db[s]);
      const auto bound = crlb(targets, x, noise_var, wf.transmit_power, wf);
      double br = 0.0, bv = 0.0;
      for (const auto& blk : bound.targets) br += blk.range, bv += blk.velocity;
      out.crlb[r * S + s] = {br / static_cast<double>(bound.targets.size()),
                             bv / static_cast<double>(bound.targets.size())};
      if (!estimate) continue;
      const Frame echo = generate_echo(xe, targets, std::sqrt(noise_var), noise, wf);
      out.cells[r * S + s] =
          sense(echo, xe, xs, grid, static_cast<int>(out.truth.size()), wf, Estimator::fused);
    }
  }
  return out;
}

}  // namespace

std::vector<ResultRow> run_rmse_sweep(const ExperimentConfig& c) {
  c.validate();
  if (c.rho.empty()) throw ConfigError("sweep.rho: at least one rho is required");
  for (double r : c.rho)
    if (!(r > 0.0)) throw ConfigError("sweep.rho: sensing needs rho > 0");
  const std::size_t S = c.snr_db.size();
  const std::size_t R = c.rho.size();
  const auto grid = c.sensing.grid.grid();
  const double rg = c.sensing.gate_cells * grid.range.step;
  const double vg = c.sensing.gate_cells * grid.velocity.step;

  PriorTable priors(R * S);
  if (c.sensing.calibrated_prior) {
    const auto n = static_cast<std::size_t>(c.sensing.calibration_trials);
    std::vector<SenseTrial> cal(n);
    parallel_for(n, c.threads, [&](std::size_t t) { cal[t] = run_sense_trial(c, "rmse/calibration", t, true); });
    for (std::size_t k = 0; k < R * S; ++k) {
      ErrorAccumulator a, b;
      for (const auto& tr : cal) {
        a.add(tr.cells[k].mf, tr.truth, rg, vg);
        b.add(tr.cells[k].music, tr.truth, rg, vg);
      }
      priors[k] = prior_from(a, b);
    }
  }

  const auto trials = static_cast<std::size_t>(c.trials);
  std::vector<SenseTrial> runs(trials);
  parallel_for(trials, c.threads, [&](std::size_t t) { runs[t] = run_sense_trial(c, "rmse", t, true); });

  std::vector<ResultRow> rows;
  const std::string wf_tag = waveform_tag(WaveformKind::sim);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t k = r * S + s;
      std::vector<std::vector<Target>> truth;
      std::vector<EstimateSet> mf, mu, fu;
      double cr = 0.0, cv = 0.0;
      for (const auto& tr : runs) {
        truth.push_back(tr.truth);
        mf.push_back(tr.cells[k].mf);
        mu.push_back(tr.cells[k].music);
        fu.push_back(fuse(tr.cells[k].mf, tr.cells[k].music, priors[k], rg, vg, 1.0));
        cr += tr.crlb[k].first;
        cv += tr.crlb[k].second;
      }
      const double rho = c.rho[r];
      const double snr = c.snr_db[s];
      auto emit = [&](const std::string& tag, const RmseResult& res) {
        if (std::isfinite(res.range)) rows.push_back({"rmse", wf_tag, rho, snr, "RMSE_r." + tag, res.range, res.trials, c.seed});
        if (std::isfinite(res.velocity))
          rows.push_back({"rmse", wf_tag, rho, snr, "RMSE_v." + tag, res.velocity, res.trials, c.seed});
        rows.push_back({"rmse", wf_tag, rho, snr, "exclusion." + tag, res.exclusion_rate(), trials, c.seed});
      };
      emit("mf", rmse(mf, truth, rg, vg));
      emit("music", rmse(mu, truth, rg, vg));
      emit("fused", rmse(fu, truth, rg, vg));
      rows.push_back({"rmse", wf_tag, rho, snr, "CRLB_r", cr / static_cast<double>(trials), trials, c.seed});
      rows.push_back({"rmse", wf_tag, rho, snr, "CRLB_v", cv / static_cast<double>(trials), trials, c.seed});
    }
  }
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

std::vector<ResultRow> run_crlb_report(const ExperimentConfig& c) {
  c.validate();
  const std::size_t S = c.snr_db.size();
  const std::size_t R = c.rho.size();
  const auto trials = static_cast<std::size_t>(c.trials);
  std::vector<SenseTrial> runs(trials);
  parallel_for(trials, c.threads, [&](std::size_t t) { runs[t] = run_sense_trial(c, "crlb", t, false); });
  std::vector<ResultRow> rows;
  const std::string wf_tag = waveform_tag(WaveformKind::sim);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t s = 0; s < S; ++s) {
      double cr = 0.0, cv = 0.0;
      for (const auto& tr : runs) cr += tr.crlb[r * S + s].first, cv += tr.crlb[r * S + s].second;
      rows.push_back({"crlb", wf_tag, c.rho[r], c.snr_db[s], "CRLB_r", cr / static_cast<double>(trials), trials, c.seed});
      rows.push_back({"crlb", wf_tag, c.rho[r], c.snr_db[s], "CRLB_v", cv / static_cast<double>(trials), trials, c.seed});
    }
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

std::vector<BerPoint> ber_curve(const std::vector<ResultRow>& rows, const std::string& waveform, double rho) {
  std::vector<BerPoint> out;
  for (const auto& r : rows)
    if (r.metric == "BER" && r.waveform == waveform && std::abs(r.rho - rho) < 1e-12)
      out.push_back({r.snr_db, r.value});
  std::sort(out.begin(), out.end(), [](const BerPoint& a, const BerPoint& b) { return a.snr_db < b.snr_db; });
  return out;
}

double measured_gain_db(const std::vector<ResultRow>& rows, double target_ber) {
  return comm_gain_gc(ber_curve(rows, waveform_tag(WaveformKind::im), 0.0),
                      ber_curve(rows, waveform_tag(WaveformKind::ofdm), 0.0), target_ber);
}

std::vector<ResultRow> run_sinr_report(const ExperimentConfig& c) {
  c.validate();
  const auto& wf = c.waveform;
  const double P = wf.transmit_power;
  const double M = wf.subcarriers;
  const double b = bits_per_symbol(wf);

  double gc = c.sinr.gc_db;
  if (!(gc >= 0.0)) {
    if (!c.sinr.gc_source.empty()) {
      gc = measured_gain_db(read_csv(c.sinr.gc_source), c.target_ber);
    } else {
      ExperimentConfig ber = c;
      ber.channel.doppler = false;
      ber.waveforms = {WaveformKind::ofdm, WaveformKind::im};
      ber.snr_db.clear();
      ber.rho.clear();
      fill_defaults(ber, "ber");
      gc = measured_gain_db(run_ber_sweep(ber), c.target_ber);
    }
    gc = std::max(gc, 0.0);
  }

  ExperimentConfig tv = c;
  tv.channel.doppler = true;
  constexpr int kSteps = 100;  // rho = 0.00 .. 0.99
  const auto draws = static_cast<std::size_t>(c.sinr.draws);
  std::vector<std::vector<ResultRow>> per_draw(draws);
  parallel_for(draws, c.threads, [&](std::size_t dr) {
    Rng rng = derive_stream(c.seed, "sinr", dr);
    ChannelMatrix h;
    const PathSet paths = draw_channel(tv, rng, h);
    std::vector<double> unit(paths.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& u : unit) u = gauss(rng);
    const double inv_sq = inverse_norm_sq(h);
    std::vector<ChannelMatrix> hbar(kSteps);
    for (int i = 0; i < kSteps; ++i)
      hbar[static_cast<std::size_t>(i)] =
          equivalent_channel_at_rho(paths, unit, c.sinr.doppler_error_hz, i / 100.0, h, wf);
    const ChannelMatrix ident{CMatrix::Identity(wf.subcarriers, wf.subcarriers), MatrixRole::equivalent};
    const std::string exp = "sinr/draw" + std::to_string(dr);
    const std::string tag = waveform_tag(WaveformKind::sim);
    auto& rows = per_draw[dr];
    for (double snr_db : c.snr_db) {
      const double noise = P * M / (inv_sq * b * db_to_linear(snr_db));
      for (int i = 0; i < kSteps; i += 5) {
        const double rho = i / 100.0;
        const auto rep = sinr_per_subcarrier(hbar[static_cast<std::size_t>(i)], inv_sq, rho, P, noise);
        rows.push_back({exp, tag, rho, snr_db, "SINR_min", rep.min_sinr, 1, c.seed});
      }
      const auto best = optimize_rho(
          [&](double rho) { return hbar[static_cast<std::size_t>(std::lround(rho * 100.0))]; }, inv_sq, P, noise);
      rows.push_back({exp, tag, best.rho, snr_db, "rho_star", best.rho, 1, c.seed});
      rows.push_back({exp, tag, best.rho, snr_db, "SINR_min_at_rho_star", best.min_sinr, 1, c.seed});
      const auto bound = rho_max(hbar[static_cast<std::size_t>(std::lround(best.rho * 100.0))], h, gc, P, noise);
      rows.push_back({exp, tag, 0.0, snr_db, "rho_max", bound.value, 1, c.seed});
      rows.push_back({exp, tag, 0.0, snr_db, "rho_max_static", rho_max(ident, h, gc, P, noise).value, 1, c.seed});
    }
  });
  std::vector<ResultRow> rows;
  rows.push_back({"sinr", waveform_tag(WaveformKind::im), 0.0, 0.0, "G_c", gc, static_cast<std::size_t>(c.trials), c.seed});
  rows.push_back({"sinr", waveform_tag(WaveformKind::sim), 0.0, 0.0, "rho_max_closed_form", rho_max_static(gc), 1, c.seed});
  for (auto& d : per_draw) rows.insert(rows.end(), d.begin(), d.end());
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

std::vector<ResultRow> run_demo(const ExperimentConfig& c, std::string* log) {
  ExperimentConfig cfg = c;
  cfg.channel.doppler = true;
  cfg.validate();
  const auto& wf = cfg.waveform;
  const int M = wf.subcarriers;
  const double P = wf.transmit_power;
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const Frame xs = build_sense_frame(wf);
  const double rho = cfg.rho.empty() ? 0.3 : cfg.rho.front();
  const double snr_db = cfg.snr_db.front();
  Rng rng = derive_stream(cfg.seed, "demo", 0);
  const auto d = draw_link(cfg, rng);
  const Frame xc = map_bits_to_comm_frame(d.im_bits, wf, cb);
  const Frame x = superpose(xc, xs, rho);
  const Frame xe = scaled(x, std::sqrt(P / M));
  const double sigma = std::sqrt(comm_noise_var(cfg, WaveformKind::sim, d.h, d.inv_sq, snr_db));
  const auto truth = targets_from_paths(d.paths, wf);
  const Frame echo = generate_echo(xe, make_targets(truth, wf), sigma, d.sense_noise, wf);
  const auto ps = path_sensing(cfg);
  const auto sp = sense(echo, xe, xs, ps.grid, static_cast<int>(truth.size()), wf, Estimator::fused);
  const auto fused = fuse(sp.mf, sp.music, {}, ps.range_gate, ps.velocity_gate, 1.0);
  const auto est = channel_from_sensing(fused, d.paths, wf, ps.range_gate, ps.velocity_gate);
  const auto reconstructed = reconstruct_channel(est, wf);
  const auto comp = build_compensator(reconstructed);
  const auto hbar = equivalent_channel(d.h, reconstructed);
  const CMatrix hu = d.h.m * comp.u.m;
  ReceiverContext ctx;
  ctx.inverse_norm = comp.inverse_norm;
  ctx.transmit_power = P;
  ctx.gains = diagonal(hu) * comp.inverse_norm;
  const Frame y{std::sqrt(P) * (hu * x.samples) + sigma * d.comm_noise, FrameRole::received};
  const auto decoded = decode_frame(y, xs, wf, cb, ctx);
  const auto sim_err = count_errors(d.im_bits, decoded.bits);
  const double ofdm_sigma = std::sqrt(comm_noise_var(cfg, WaveformKind::ofdm, d.h, d.inv_sq, snr_db));
  const auto ofdm_err = ofdm_baseline_roundtrip(d.ofdm_bits, d.h, P, ofdm_sigma, d.comm_noise, wf);
  const double offdiag = (hbar.m - CMatrix(hbar.m.diagonal().asDiagonal())).squaredNorm() / hbar.m.squaredNorm();

  if (log) {
    std::ostringstream o;
    o << "channel: " << d.paths.size() << " paths (" << to_string(cfg.channel.model) << "), M=" << M
      << ", N_s=" << wf.symbols << ", rho=" << rho << ", SNR=" << snr_db << " dB\n";
    o << "sensing (fused, equal weights):\n";
    const auto assigned = associate(fused.estimates, truth, ps.range_gate, ps.velocity_gate, 1.0);
    for (std::size_t p = 0; p < truth.size(); ++p) {
      o << "  path " << p << ": r=" << truth[p].range << " m, v=" << truth[p].velocity << " m/s";
      if (assigned[p] >= 0) {
        const auto& e = fused.estimates[static_cast<std::size_t>(assigned[p])];
        o << "  ->  r^=" << e.range << " m, v^=" << e.velocity << " m/s";
      } else {
        o << "  ->  not resolved";
      }
      o << "\n";
    }
    o << "residual off-diagonal energy of H_bar: " << offdiag << "\n";
    o << "rho_hat = " << decoded.rho_hat << "\n";
    o << "S-IM-OFDM bit errors: " << sim_err.errors << " / " << sim_err.bits << "\n";
    o << "OFDM bit errors:      " << ofdm_err.errors << " / " << ofdm_err.bits << "\n";
    *log = o.str();
  }
  std::vector<ResultRow> rows{
      {"demo", waveform_tag(WaveformKind::sim), rho, snr_db, "BER", sim_err.rate(), 1, cfg.seed},
      {"demo", waveform_tag(WaveformKind::ofdm), 0.0, snr_db, "BER", ofdm_err.rate(), 1, cfg.seed},
      {"demo", waveform_tag(WaveformKind::sim), rho, snr_db, "rho_hat", decoded.rho_hat, 1, cfg.seed},
      {"demo", waveform_tag(WaveformKind::sim), rho, snr_db, "ICI_residual", offdiag, 1, cfg.seed},
  };
  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

}  // namespace simofdm
