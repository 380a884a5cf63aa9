#pragma once

#include "hef/types.hpp"

namespace hef {

// In-place radix-2 decimation-in-time FFT on n = 2^k points.
// Forward convention: X[k] = sum_j x[j] exp(-2*pi*i*j*k/n); inverse divides by n.
void fft_inplace(cplx* data, int n, bool inverse);

// Transform along one axis of a flat array viewed as (outer, n, inner) with the
// axis elements strided by `inner`. Used by the spectral derivative and the
// Poisson solver; matrix-valued fields transform entrywise through this.
void fft_axis(cplx* data, int outer, int n, int inner, bool inverse);

}  // namespace hef
