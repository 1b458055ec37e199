#pragma once

#include "simofdm/types.hpp"

namespace simofdm::detail {

/// out[k] = sum_l z[l] * exp(j * l * (theta0 + k * dtheta)), k = 0..count-1.
/// Bluestein chirp-z on a zero-padded FFT.
CVector chirp_sum(const CVector& z, double theta0, double dtheta, int count);

/// Applies chirp_sum down every column of z: result is count x z.cols().
CMatrix chirp_sum_columns(const CMatrix& z, double theta0, double dtheta, int count);

}  // namespace simofdm::detail
