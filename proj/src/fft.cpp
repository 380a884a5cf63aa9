#include "hef/fft.hpp"

#include <cassert>
#include <cmath>
#include <vector>

namespace hef {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_pow2(cplx* data, int n, bool inverse);

// Bluestein's algorithm: DFT of arbitrary length as a convolution carried out
// with power-of-two transforms.  exp(-iπk²/n) arguments are reduced mod 2n
// in exact integer arithmetic so the chirp stays accurate for large k.
void dft_bluestein(cplx* data, int n, bool inverse) {
  int m = 1;
  while (m < 2 * n - 1) m <<= 1;
  std::vector<cplx> chirp(static_cast<size_t>(n));
  const double sign = inverse ? 1.0 : -1.0;
  for (long k = 0; k < n; ++k) {
    const long q = (k * k) % (2L * n);
    const double ang = sign * kPi * static_cast<double>(q) / n;
    chirp[static_cast<size_t>(k)] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> a(static_cast<size_t>(m), cplx(0.0, 0.0));
  std::vector<cplx> b(static_cast<size_t>(m), cplx(0.0, 0.0));
  for (int k = 0; k < n; ++k) a[static_cast<size_t>(k)] = data[k] * chirp[static_cast<size_t>(k)];
  b[0] = std::conj(chirp[0]);
  for (int k = 1; k < n; ++k)
    b[static_cast<size_t>(k)] = b[static_cast<size_t>(m - k)] = std::conj(chirp[static_cast<size_t>(k)]);
  fft_pow2(a.data(), m, false);
  fft_pow2(b.data(), m, false);
  for (int k = 0; k < m; ++k) a[static_cast<size_t>(k)] *= b[static_cast<size_t>(k)];
  fft_pow2(a.data(), m, true);
  const double norm = inverse ? 1.0 / n : 1.0;
  for (int k = 0; k < n; ++k) data[k] = a[static_cast<size_t>(k)] * chirp[static_cast<size_t>(k)] * norm;
}

void fft_pow2(cplx* data, int n, bool inverse) {
  // Bit-reversal permutation.
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / len;
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        cplx u = data[i + k];
        cplx v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / n;
    for (int i = 0; i < n; ++i) data[i] *= inv;
  }
}

}  // namespace

void fft_inplace(cplx* data, int n, bool inverse) {
  assert(n > 0);
  if (is_pow2(n))
    fft_pow2(data, n, inverse);
  else
    dft_bluestein(data, n, inverse);
}

void fft_axis(cplx* data, int outer, int n, int inner, bool inverse) {
  std::vector<cplx> buf(static_cast<size_t>(n));
  for (int o = 0; o < outer; ++o) {
    cplx* base = data + static_cast<std::ptrdiff_t>(o) * n * inner;
    for (int s = 0; s < inner; ++s) {
      if (inner == 1) {
        fft_inplace(base, n, inverse);
        break;
      }
      for (int k = 0; k < n; ++k) buf[static_cast<size_t>(k)] = base[static_cast<std::ptrdiff_t>(k) * inner + s];
      fft_inplace(buf.data(), n, inverse);
      for (int k = 0; k < n; ++k) base[static_cast<std::ptrdiff_t>(k) * inner + s] = buf[static_cast<size_t>(k)];
    }
  }
}

}  // namespace hef
