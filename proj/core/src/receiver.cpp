#include "simofdm/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simofdm/error.hpp"

namespace simofdm {

namespace {
constexpr double kRhoCeiling = 1.0 - 1e-3;
}

double estimate_rho(const Frame& received, const Frame& sense, double inverse_norm, double transmit_power) {
  const auto& y = received.samples;
  const auto& s = sense.samples;
  if (y.rows() != s.rows() || y.cols() != s.cols() || y.size() == 0)
    throw InputError("estimate_rho: frame dimensions differ");
  if (!(transmit_power > 0.0)) throw InputError("estimate_rho: transmit power must be > 0");
  // ||Y S^H||_F^2 = tr((S^H S)(Y^H Y)), computed on N_s x N_s Gram matrices.
  const CMatrix gs = s.adjoint() * s;
  const CMatrix gy = y.adjoint() * y;
  const double cross = (gs.array() * gy.transpose().array()).sum().real();
  const double self = gs.squaredNorm();
  if (!(self > 0.0)) throw InputError("estimate_rho: sense frame is zero");
  const double rho = inverse_norm * inverse_norm * cross / (transmit_power * self);
  if (!std::isfinite(rho)) throw NumericalError("estimate_rho: non-finite estimate");
  return std::clamp(rho, 0.0, kRhoCeiling);
}

double debias_rho(double rho_hat, int symbols) {
  if (symbols < 2) return rho_hat;
  const double n = static_cast<double>(symbols);
  return std::clamp((n * rho_hat - 1.0) / (n - 1.0), 0.0, kRhoCeiling);
}

Frame subtract_sense(const Frame& received, double rho_hat, const Frame& sense, double inverse_norm,
                     double transmit_power) {
  if (!(rho_hat >= 0.0 && rho_hat < 1.0)) throw InputError("subtract_sense: rho_hat must be in [0, 1)");
  if (received.samples.rows() != sense.samples.rows() || received.samples.cols() != sense.samples.cols())
    throw InputError("subtract_sense: frame dimensions differ");
  CMatrix x = (inverse_norm / std::sqrt(transmit_power)) * received.samples - std::sqrt(rho_hat) * sense.samples;
  return {x / std::sqrt(1.0 - rho_hat), FrameRole::comm};
}

GroupDecision ml_detect_group(const CVector& slice, const IndexCodebook& codebook, const Constellation& constellation,
                              double amplitude, const CVector* gains) {
  const int ng = codebook.group_size();
  if (slice.size() != ng) throw InputError("ml_detect_group: slice length differs from group size");
  if (gains && gains->size() != ng) throw InputError("ml_detect_group: gain length differs from group size");

  // Positions decouple: each position's best label is independent of the others.
  std::vector<double> idle(static_cast<std::size_t>(ng)), busy(static_cast<std::size_t>(ng));
  std::vector<int> label(static_cast<std::size_t>(ng));
  const auto& pts = constellation.points();
  for (int i = 0; i < ng; ++i) {
    const cd h = gains ? (*gains)(i) : cd{1.0, 0.0};
    idle[static_cast<std::size_t>(i)] = std::norm(slice(i));
    double best = std::numeric_limits<double>::infinity();
    int best_l = 0;
    for (int l = 0; l < static_cast<int>(pts.size()); ++l) {
      const double d = std::norm(slice(i) - h * amplitude * pts[static_cast<std::size_t>(l)]);
      if (d < best) {
        best = d;
        best_l = l;
      }
    }
    busy[static_cast<std::size_t>(i)] = best;
    label[static_cast<std::size_t>(i)] = best_l;
  }

  GroupDecision out;
  out.metric = std::numeric_limits<double>::infinity();
  std::uint32_t mask = 0;
  for (std::size_t e = 0; e < codebook.size(); ++e) {
    mask = 0;
    for (int pos : codebook.entry(e)) mask |= 1u << pos;
    double metric = 0.0;
    for (int i = 0; i < ng; ++i)
      metric += (mask >> i & 1u) ? busy[static_cast<std::size_t>(i)] : idle[static_cast<std::size_t>(i)];
    if (metric < out.metric) {
      out.metric = metric;
      out.entry = static_cast<int>(e);
    }
  }
  for (int pos : codebook.entry(static_cast<std::size_t>(out.entry)))
    out.labels.push_back(label[static_cast<std::size_t>(pos)]);
  return out;
}

DecodedFrame decode_frame(const Frame& received, const Frame& sense, const WaveformConfig& config,
                          const IndexCodebook& codebook, const ReceiverContext& context) {
  config.validate();
  if (received.samples.rows() != config.subcarriers || received.samples.cols() != config.symbols)
    throw InputError("decode_frame: frame shape does not match config");
  DecodedFrame out;
  if (!context.sense_present) {
    out.rho_hat = 0.0;
  } else if (context.known_rho) {
    out.rho_hat = *context.known_rho;
  } else {
    out.rho_hat = estimate_rho(received, sense, context.inverse_norm, context.transmit_power);
    if (context.debias) out.rho_hat = debias_rho(out.rho_hat, config.symbols);
  }
  const Frame xc = subtract_sense(received, out.rho_hat, sense, context.inverse_norm, context.transmit_power);

  const auto constellation = config.constellation();
  const int bps = constellation.bits_per_symbol();
  const int p = codebook.index_bits();
  const int ng = config.group_size;
  const double amplitude = std::sqrt(static_cast<double>(ng) / config.active_per_group);
  out.bits.reserve(static_cast<std::size_t>(bits_per_symbol(config)) * static_cast<std::size_t>(config.symbols));
  CVector gains_slice;
  for (int n = 0; n < config.symbols; ++n) {
    for (int g = 0; g < config.groups(); ++g) {
      const CVector slice = xc.samples.col(n).segment(g * ng, ng);
      const CVector* gp = nullptr;
      if (context.gains) {
        gains_slice = context.gains->segment(g * ng, ng);
        gp = &gains_slice;
      }
      auto d = ml_detect_group(slice, codebook, constellation, amplitude, gp);
      for (int b = p - 1; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>(d.entry >> b & 1));
      for (int l : d.labels)
        for (int b = bps - 1; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>(l >> b & 1));
      out.groups.push_back(std::move(d));
    }
  }
  return out;
}

BitErrors count_errors(const Bits& sent, const Bits& received) {
  if (sent.size() != received.size()) throw InputError("count_errors: bit strings differ in length");
  BitErrors e;
  e.bits = sent.size();
  for (std::size_t i = 0; i < sent.size(); ++i) e.errors += sent[i] != received[i];
  return e;
}

BitErrors ofdm_baseline_roundtrip(const Bits& bits, const ChannelMatrix& channel, double transmit_power,
                                  double noise_std, const CMatrix& unit_noise, const WaveformConfig& config) {
  const int M = config.subcarriers;
  const int N = config.symbols;
  if (bits.size() != static_cast<std::size_t>(M) * static_cast<std::size_t>(N))
    throw InputError("ofdm_baseline_roundtrip: need M * N_s bits");
  if (channel.m.rows() != M || channel.m.cols() != M) throw InputError("ofdm_baseline_roundtrip: channel shape");
  CMatrix x(M, N);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m)
      x(m, n) = bits[static_cast<std::size_t>(n) * M + m] ? -1.0 : 1.0;
  CMatrix y = std::sqrt(transmit_power / M) * (channel.m * x);
  if (noise_std > 0.0) y += noise_std * unit_noise;
  BitErrors e;
  e.bits = bits.size();
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) {
      const double z = (y(m, n) / channel.m(m, m)).real();
      const std::uint8_t b = z < 0.0 ? 1 : 0;
      e.errors += b != bits[static_cast<std::size_t>(n) * M + m];
    }
  return e;
}

BitErrors ofdm_baseline_roundtrip(const Bits& bits, const ChannelMatrix& channel, double transmit_power,
                                  double noise_std, Rng& rng, const WaveformConfig& config) {
  return ofdm_baseline_roundtrip(bits, channel, transmit_power, noise_std,
                                 complex_gaussian(config.subcarriers, config.symbols, rng), config);
}

}  // namespace simofdm
