#include "czt.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace simofdm::detail {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// FFTW planning is not thread-safe; execution with new-array calls is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  PlanPair get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    PlanPair p;
    p.forward = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_complex* as_fftw(cd* p) { return reinterpret_cast<fftw_complex*>(p); }

// exp(j * dtheta * l^2 / 2) with the quadratic phase reduced before the multiply.
cd chirp(double dtheta, long long l) { return std::exp(kJ * (0.5 * dtheta * static_cast<double>(l * l))); }

}  // namespace

CVector chirp_sum(const CVector& z, double theta0, double dtheta, int count) {
  const auto len = static_cast<long long>(z.size());
  CVector out(count);
  if (len == 0 || count <= 0) {
    out.setZero();
    return out;
  }
  const int n = static_cast<int>(std::bit_ceil(static_cast<unsigned>(len + count - 1)));
  const PlanPair plan = cache().get(n);

  std::vector<cd> a(static_cast<std::size_t>(n), cd{}), b(static_cast<std::size_t>(n), cd{});
  for (long long l = 0; l < len; ++l)
    a[static_cast<std::size_t>(l)] = z(l) * std::exp(kJ * (theta0 * static_cast<double>(l))) * chirp(dtheta, l);
  // b[d] = exp(-j dtheta d^2 / 2) for d in [-(len-1), count-1], stored circularly.
  for (long long d = 0; d < count; ++d) b[static_cast<std::size_t>(d)] = std::conj(chirp(dtheta, d));
  for (long long d = 1; d < len; ++d) b[static_cast<std::size_t>(n - d)] = std::conj(chirp(dtheta, d));

  fftw_execute_dft(plan.forward, as_fftw(a.data()), as_fftw(a.data()));
  fftw_execute_dft(plan.forward, as_fftw(b.data()), as_fftw(b.data()));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] *= b[static_cast<std::size_t>(i)];
  fftw_execute_dft(plan.backward, as_fftw(a.data()), as_fftw(a.data()));

  const double scale = 1.0 / n;
  for (long long k = 0; k < count; ++k) out(k) = a[static_cast<std::size_t>(k)] * scale * chirp(dtheta, k);
  return out;
}

CMatrix chirp_sum_columns(const CMatrix& z, double theta0, double dtheta, int count) {
  CMatrix out(count, z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) out.col(c) = chirp_sum(z.col(c), theta0, dtheta, count);
  return out;
}

}  // namespace simofdm::detail
