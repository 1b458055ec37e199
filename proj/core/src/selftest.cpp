#include "simofdm/selftest.hpp"

#include <cmath>
#include <sstream>

#include "simofdm/compensation.hpp"
#include "simofdm/experiment.hpp"
#include "simofdm/output.hpp"
#include "simofdm/receiver.hpp"
#include "simofdm/waveform.hpp"

namespace simofdm {

namespace {

CheckResult codebook_bijectivity() {
  std::size_t patterns = 0;
  for (int ng = 2; ng <= 8; ++ng) {
    for (int k = 1; k <= ng; ++k) {
      if (binomial(ng, k) < 2) continue;
      const IndexCodebook cb(ng, k);
      for (std::size_t e = 0; e < cb.size(); ++e) {
        std::uint32_t mask = 0;
        for (int pos : cb.entry(e)) mask |= 1u << pos;
        if (cb.find(mask) != static_cast<int>(e))
          return {"codebook bijectivity", false, "entry lookup failed for N_g=" + std::to_string(ng)};
      }
      WaveformConfig wf;
      wf.subcarriers = ng;
      wf.group_size = ng;
      wf.active_per_group = k;
      wf.constellation_order = 4;
      wf.symbols = 1;
      const int nbits = bits_per_symbol(wf);
      if (nbits > 14) continue;
      for (std::uint32_t v = 0; v < (1u << nbits); ++v) {
        Bits bits(static_cast<std::size_t>(nbits));
        for (int i = 0; i < nbits; ++i) bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (nbits - 1 - i) & 1u);
        if (comm_frame_to_bits(map_bits_to_comm_frame(bits, wf, cb), wf, cb) != bits)
          return {"codebook bijectivity", false, "round trip failed for N_g=" + std::to_string(ng)};
        ++patterns;
      }
    }
  }
  return {"codebook bijectivity", true, std::to_string(patterns) + " bit patterns round-tripped"};
}

CheckResult msequence_autocorrelation() {
  for (int d = 3; d <= 12; ++d) {
    const auto s = generate_m_sequence(d);
    const auto n = s.size();
    for (std::size_t lag = 0; lag < n; ++lag) {
      long long acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += s[i] * s[(i + lag) % n];
      const long long want = lag == 0 ? static_cast<long long>(n) : -1;
      if (acc != want)
        return {"m-sequence autocorrelation", false,
                "degree " + std::to_string(d) + " lag " + std::to_string(lag) + " gave " + std::to_string(acc)};
    }
  }
  return {"m-sequence autocorrelation", true, "degrees 3..12 two-valued"};
}

CheckResult power_conservation(std::uint64_t seed) {
  const auto wf = preset(Scale::desk).waveform;
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const Frame xs = build_sense_frame(wf);
  std::ostringstream detail;
  bool ok = true;
  for (double rho : {0.0, 0.25, 0.5, 0.75}) {
    Rng rng = derive_stream(seed, "selftest/power", static_cast<std::uint64_t>(rho * 100));
    double sum = 0.0;
    std::size_t cols = 0;
    for (int f = 0; f < 1000; ++f) {
      const Frame xc = map_bits_to_comm_frame(random_bits(static_cast<std::size_t>(bits_per_symbol(wf)) * wf.symbols, rng), wf, cb);
      const Frame x = superpose(xc, xs, rho);
      for (Eigen::Index n = 0; n < x.samples.cols(); ++n, ++cols) sum += x.samples.col(n).squaredNorm();
    }
    const double rel = std::abs(sum / static_cast<double>(cols) / wf.subcarriers - 1.0);
    detail << "rho=" << rho << ": " << rel * 100 << "% ";
    ok = ok && rel < 0.02;
  }
  return {"power conservation", ok, detail.str()};
}

CheckResult statistical_orthogonality(std::uint64_t seed) {
  auto wf = preset(Scale::desk).waveform;
  wf.symbols = 1;
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const Frame xs = build_sense_frame(wf);
  Rng rng = derive_stream(seed, "selftest/orthogonality", 0);
  const int n = 10000;
  std::vector<cd> z(n);
  cd mean{};
  for (int i = 0; i < n; ++i) {
    const Frame xc = map_bits_to_comm_frame(random_bits(static_cast<std::size_t>(bits_per_symbol(wf)), rng), wf, cb);
    z[static_cast<std::size_t>(i)] = xc.samples.col(0).dot(xs.samples.col(0));
    mean += z[static_cast<std::size_t>(i)];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& v : z) var += std::norm(v - mean);
  var /= static_cast<double>(n - 1);
  const double se = std::sqrt(var / n);
  std::ostringstream d;
  d << "|mean|=" << std::abs(mean) << ", 3 SE=" << 3 * se;
  return {"statistical orthogonality", std::abs(mean) < 3 * se, d.str()};
}

CheckResult noiseless_end_to_end(std::uint64_t seed) {
  auto cfg = preset(Scale::desk);
  const auto& wf = cfg.waveform;
  const IndexCodebook cb(wf.group_size, wf.active_per_group);
  const Frame xs = build_sense_frame(wf);
  std::size_t errors = 0, bits_total = 0;
  for (double rho : {0.0, 0.3, 0.6}) {
    for (int t = 0; t < 10; ++t) {
      Rng rng = derive_stream(seed, "selftest/e2e", static_cast<std::uint64_t>(t));
      ChannelMatrix h;
      draw_channel(cfg, rng, h);
      const Bits bits = random_bits(static_cast<std::size_t>(bits_per_symbol(wf)) * wf.symbols, rng);
      const Frame x = superpose(map_bits_to_comm_frame(bits, wf, cb), xs, rho);
      const auto comp = build_compensator({h.m, MatrixRole::reconstructed});
      const Frame y = apply_comm_channel({comp.u.m * x.samples, FrameRole::superposed}, h, wf.transmit_power, 0.0,
                                         CMatrix::Zero(wf.subcarriers, wf.symbols));
      ReceiverContext ctx;
      ctx.inverse_norm = comp.inverse_norm;
      ctx.transmit_power = wf.transmit_power;
      const auto e = count_errors(bits, decode_frame(y, xs, wf, cb, ctx).bits);
      errors += e.errors;
      bits_total += e.bits;
    }
  }
  return {"noiseless end-to-end", errors == 0,
          std::to_string(errors) + " errors in " + std::to_string(bits_total) + " bits"};
}

CheckResult compensator_checks(std::uint64_t seed) {
  auto cfg = preset(Scale::desk);
  cfg.channel.doppler = true;
  double worst_norm = 0.0, worst_identity = 0.0, worst_omega = 0.0;
  for (int t = 0; t < 20; ++t) {
    Rng rng = derive_stream(seed, "selftest/compensator", static_cast<std::uint64_t>(t));
    ChannelMatrix h;
    draw_channel(cfg, rng, h);
    const ChannelMatrix est{h.m, MatrixRole::reconstructed};
    const auto comp = build_compensator(est);
    worst_norm = std::max(worst_norm, std::abs(comp.u.m.norm() - 1.0));
    const auto hbar = equivalent_channel(h, est);
    worst_identity = std::max(
        worst_identity, (hbar.m - CMatrix::Identity(h.m.rows(), h.m.cols())).cwiseAbs().maxCoeff());
    const auto rep = sinr_per_subcarrier(hbar, h, 0.5, 1.0, 1.0);
    worst_omega = std::max(worst_omega, rep.omega.maxCoeff());
  }
  std::ostringstream d;
  d << "max | ||U||_F - 1 | = " << worst_norm << ", max |H_bar - I| = " << worst_identity
    << ", max Omega = " << worst_omega;
  return {"compensator norm and perfect-estimation identity",
          worst_norm < 1e-12 && worst_identity < 1e-9 && worst_omega < 1e-12, d.str()};
}

CheckResult deterministic_rerun(std::uint64_t seed) {
  auto cfg = preset(Scale::desk);
  cfg.seed = seed;
  cfg.trials = 6;
  cfg.snr_db = {4, 12};
  cfg.rho = {0.2};
  cfg.threads = 1;
  const auto a = format_csv(run_ber_sweep(cfg));
  const auto b = format_csv(run_ber_sweep(cfg));
  cfg.threads = 3;
  const auto c = format_csv(run_ber_sweep(cfg));
  return {"byte-identical reruns", a == b && a == c, std::to_string(a.size()) + " bytes, 1 and 3 workers"};
}

}  // namespace

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("codebook bijectivity", codebook_bijectivity);
  guarded("m-sequence autocorrelation", msequence_autocorrelation);
  guarded("power conservation", [&] { return power_conservation(seed); });
  guarded("statistical orthogonality", [&] { return statistical_orthogonality(seed); });
  guarded("noiseless end-to-end", [&] { return noiseless_end_to_end(seed); });
  guarded("compensator", [&] { return compensator_checks(seed); });
  guarded("byte-identical reruns", [&] { return deterministic_rerun(seed); });
  return out;
}

}  // namespace simofdm
