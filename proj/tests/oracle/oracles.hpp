#pragma once

// Slow, independent reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kC = 299792458.0;

struct PathSpec {
  cd gain;
  int tap = 0;             // delay in samples of Ts / M
  double doppler_ts = 0.0; // f_p * Ts
};

/// Column j of H: send e^{j 2 pi j t / M} through the per-sample rotating taps,
/// circular delay, then a naive DFT with 1/M scaling.
inline CMatrix time_domain_channel(const std::vector<PathSpec>& paths, int M) {
  CMatrix H = CMatrix::Zero(M, M);
  std::vector<cd> tx(static_cast<std::size_t>(M)), rx(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    for (int t = 0; t < M; ++t) tx[static_cast<std::size_t>(t)] = std::polar(1.0, 2.0 * kPi * j * t / M);
    std::fill(rx.begin(), rx.end(), cd{});
    for (const auto& p : paths)
      for (int t = 0; t < M; ++t) {
        const int src = ((t - p.tap) % M + M) % M;
        rx[static_cast<std::size_t>(t)] +=
            p.gain * std::polar(1.0, 2.0 * kPi * p.doppler_ts * t / M) * tx[static_cast<std::size_t>(src)];
      }
    for (int i = 0; i < M; ++i) {
      cd acc{};
      for (int t = 0; t < M; ++t) acc += rx[static_cast<std::size_t>(t)] * std::polar(1.0, -2.0 * kPi * i * t / M);
      H(i, j) = acc / static_cast<double>(M);
    }
  }
  return H;
}

/// |sum_{m,n} R conj(X) e^{j m tau} e^{-j 2 pi n f}|^2 with tau = 4 pi df r / c, f = 2 fc v Ts / c.
inline double direct_matched_filter(const CMatrix& R, const CMatrix& X, double r, double v, double df, double fc,
                                    double ts) {
  const double tau = 4.0 * kPi * df * r / kC;
  const double f = 2.0 * fc * v * ts / kC;
  cd acc{};
  for (Eigen::Index n = 0; n < R.cols(); ++n)
    for (Eigen::Index m = 0; m < R.rows(); ++m)
      acc += R(m, n) * std::conj(X(m, n)) * std::polar(1.0, static_cast<double>(m) * tau - 2.0 * kPi * n * f);
  return std::norm(acc);
}

/// Maximal-length sequence from a Fibonacci register over the listed feedback exponents,
/// state initialised to all ones; 0 -> +1, 1 -> -1.
inline std::vector<int> lfsr(int degree, const std::vector<int>& feedback) {
  std::vector<int> reg(static_cast<std::size_t>(degree), 1);
  const std::size_t length = (std::size_t{1} << degree) - 1;
  std::vector<int> out;
  for (std::size_t i = 0; i < length; ++i) {
    out.push_back(reg[0] ? -1 : 1);
    int next = 0;
    for (int e : feedback) next ^= reg[static_cast<std::size_t>(e)];
    reg.erase(reg.begin());
    reg.push_back(next);
  }
  return out;
}

inline long circular_autocorrelation(const std::vector<int>& s, std::size_t lag) {
  long acc = 0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += s[i] * s[(i + lag) % s.size()];
  return acc;
}

/// All k-subsets of {0..n-1} in lexicographic order, by bitmask enumeration and sort.
inline std::vector<std::vector<int>> lexicographic_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<int>(__builtin_popcount(mask)) != k) continue;
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.push_back(i);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Hypothesis {
  int entry = 0;
  std::vector<int> labels;
};

/// Exhaustive search over every transmitted group: each codebook support and every label
/// tuple, propagated through the per-subcarrier gains, nearest to y in Euclidean distance.
inline Hypothesis brute_force_group(const CVector& y, const std::vector<std::vector<int>>& codebook,
                                    const std::vector<cd>& alphabet, double amplitude, const CVector& gains) {
  Hypothesis best;
  double best_d = std::numeric_limits<double>::infinity();
  const int q = static_cast<int>(alphabet.size());
  for (std::size_t e = 0; e < codebook.size(); ++e) {
    const auto& support = codebook[e];
    const int k = static_cast<int>(support.size());
    int tuples = 1;
    for (int i = 0; i < k; ++i) tuples *= q;
    for (int t = 0; t < tuples; ++t) {
      std::vector<int> labels(static_cast<std::size_t>(k));
      int rem = t;
      for (int i = k - 1; i >= 0; --i) {
        labels[static_cast<std::size_t>(i)] = rem % q;
        rem /= q;
      }
      CVector x = CVector::Zero(y.size());
      for (int i = 0; i < k; ++i)
        x(support[static_cast<std::size_t>(i)]) = amplitude * alphabet[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      const double d = (y - gains.cwiseProduct(x)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = {static_cast<int>(e), labels};
      }
    }
  }
  return best;
}

/// min_m SINR_m written out term by term.
inline double min_sinr(const CMatrix& Hbar, double inv_norm_sq, double rho, double pt, double noise_var) {
  const auto M = Hbar.rows();
  const double fro = Hbar.norm() / std::sqrt(static_cast<double>(M));
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < M; ++m) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < M; ++j)
      if (j != m) off += std::norm(Hbar(m, j));
    const double d2 = std::norm(Hbar(m, m));
    const double omega = (off + rho / (1.0 - rho) * std::norm(Hbar(m, m) - fro)) / d2;
    const double s = 1.0 / (omega + inv_norm_sq * noise_var / ((1.0 - rho) * d2 * pt));
    worst = std::min(worst, s);
  }
  return worst;
}

/// Maximiser of min_sinr over rho = 0, step, ..., <= max.
inline double best_rho(const CMatrix& Hbar, double inv_norm_sq, double pt, double noise_var, double step, double max) {
  double best = 0.0, best_v = -1.0;
  const int n = static_cast<int>(std::floor(max / step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double rho = i * step;
    const double v = min_sinr(Hbar, inv_norm_sq, rho, pt, noise_var);
    if (v > best_v) {
      best_v = v;
      best = rho;
    }
  }
  return best;
}

}  // namespace oracle
