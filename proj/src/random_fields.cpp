#include "hef/random_fields.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>

namespace hef {

namespace {

// Unnormalized weight-t carrier for t > 0:
//   f_t(x, y) = sum_k e^{2 pi i k x / L} e^{-pi (k + t y / L)^2 / t}.
// The sum is a rapidly converging Gaussian comb.
cplx raw_carrier(double x, double y, int t, double L) {
  const double u = static_cast<double>(t) * y / L;
  const int k0 = static_cast<int>(std::lround(-u));
  const int K = static_cast<int>(std::ceil(7.0 * std::sqrt(static_cast<double>(t)) + 2.0));
  cplx s(0.0, 0.0);
  for (int k = k0 - K; k <= k0 + K; ++k) {
    const double q = (static_cast<double>(k) + u);
    const double g = std::exp(-kPi * q * q / static_cast<double>(t));
    const double ph = 2.0 * kPi * static_cast<double>(k) * x / L;
    s += g * cplx(std::cos(ph), std::sin(ph));
  }
  return s;
}

// sup over the torus of |f_t|; the modulus depends only on u = t y / L mod 1
// at x where all retained terms align, so a fine 1-D scan of the comb
// amplitude sum gives the exact sup (the x-phases can align for each fixed y
// only up to the sum of moduli; sup_x |f_t| equals the modulus sum at that y).
double carrier_sup(int t) {
  const int K = static_cast<int>(std::ceil(7.0 * std::sqrt(static_cast<double>(t)) + 2.0));
  double best = 0.0;
  const int M = 4096;
  for (int m = 0; m < M; ++m) {
    const double u = static_cast<double>(m) / M;
    double s = 0.0;
    for (int k = -K; k <= K; ++k) {
      const double q = static_cast<double>(k) + u;
      s += std::exp(-kPi * q * q / static_cast<double>(t));
    }
    best = std::max(best, s);
  }
  return best;
}

double carrier_sup_cached(int t) {
  static std::map<int, double> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(t);
  if (it == cache.end()) it = cache.emplace(t, carrier_sup(t)).first;
  return it->second;
}

// A band-limited trig polynomial with unit coefficient-mass: coefficients are
// drawn mode-by-mode in a fixed order, then scaled so sum |c_k| = 1.
struct TrigPoly {
  int n = 1;
  std::vector<std::array<int, 2>> freqs;  // per complex factor: (k_x, k_y)
  std::vector<cplx> coef;

  cplx eval(const TorusGeometry& g, long p) const {
    cplx s(0.0, 0.0);
    const size_t modes_per_factor = freqs.size() / static_cast<size_t>(n);
    (void)modes_per_factor;
    for (size_t m = 0; m < coef.size(); ++m) {
      double ph = 0.0;
      for (int f = 0; f < n; ++f) {
        const auto& kk = freqs[m * static_cast<size_t>(n) + static_cast<size_t>(f)];
        const double x = g.coord(2 * f, g.axis_index(p, 2 * f));
        const double y = g.coord(2 * f + 1, g.axis_index(p, 2 * f + 1));
        ph += 2.0 * kPi * (kk[0] * x + kk[1] * y) / g.period(f);
      }
      s += coef[m] * cplx(std::cos(ph), std::sin(ph));
    }
    return s;
  }
};

TrigPoly random_poly(const TorusGeometry& g, int band, SplitMix64& rng) {
  TrigPoly P;
  P.n = g.n();
  std::vector<std::array<int, 2>> cursor(static_cast<size_t>(g.n()));
  // Enumerate all mode tuples in a fixed order independent of the grid.
  const int B = band;
  const int per = 2 * B + 1;
  long total = 1;
  for (int f = 0; f < 2 * g.n(); ++f) total *= per;
  double mass = 0.0;
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    std::vector<std::array<int, 2>> kk(static_cast<size_t>(g.n()));
    for (int f = 0; f < g.n(); ++f) {
      kk[static_cast<size_t>(f)][0] = static_cast<int>(rem % per) - B;
      rem /= per;
      kk[static_cast<size_t>(f)][1] = static_cast<int>(rem % per) - B;
      rem /= per;
    }
    const cplx c = rng.csym();
    for (int f = 0; f < g.n(); ++f) P.freqs.push_back(kk[static_cast<size_t>(f)]);
    P.coef.push_back(c);
    mass += std::abs(c);
  }
  if (mass > 0.0)
    for (cplx& c : P.coef) c /= mass;
  return P;
}

}  // namespace

cplx theta_carrier(double x1, double y1, int t, double L1) {
  if (t == 0) return cplx(1.0, 0.0);
  if (t > 0) return raw_carrier(x1, y1, t, L1) / carrier_sup_cached(t);
  return std::conj(raw_carrier(x1, y1, -t, L1)) / carrier_sup_cached(-t);
}

TwistedField random_field(const TorusGeometry& g, const std::vector<int>& row_deg,
                          const std::vector<int>& col_deg, int band, double amp, SplitMix64& rng) {
  TwistedField out(g, row_deg, col_deg);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) {
      const TrigPoly P = random_poly(g, band, rng);
      const int t = out.twist(i, j);
      for (long p = 0; p < g.points(); ++p) {
        const double x1 = g.coord(0, g.axis_index(p, 0));
        const double y1 = g.coord(1, g.axis_index(p, 1));
        out[p](i, j) = amp * P.eval(g, p) * theta_carrier(x1, y1, t, g.period(0));
      }
    }
  return out;
}

TwistedField random_hermitian(const TorusGeometry& g, const std::vector<int>& deg, int band,
                              double amp, SplitMix64& rng) {
  TwistedField out(g, deg, deg);
  const int r = out.rows();
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      const TrigPoly P = random_poly(g, band, rng);
      const int t = out.twist(i, j);
      for (long p = 0; p < g.points(); ++p) {
        const double x1 = g.coord(0, g.axis_index(p, 0));
        const double y1 = g.coord(1, g.axis_index(p, 1));
        cplx v = P.eval(g, p);
        if (i == j) {
          out[p](i, i) = amp * v.real();
        } else {
          v *= amp * theta_carrier(x1, y1, t, g.period(0));
          out[p](i, j) = v;
          out[p](j, i) = std::conj(v);
        }
      }
    }
  return out;
}

TwistedField random_metric(const TorusGeometry& g, const std::vector<int>& deg, int band,
                           double amp, SplitMix64& rng) {
  TwistedField out = random_hermitian(g, deg, band, amp, rng);
  for (long p = 0; p < g.points(); ++p)
    out[p] += MatC::Identity(out.rows(), out.rows());
  return out;
}

TwistedField random_real_scalar(const TorusGeometry& g, int band, double amp, SplitMix64& rng) {
  TwistedField out(g, {0}, {0});
  const TrigPoly P = random_poly(g, band, rng);
  for (long p = 0; p < g.points(); ++p) out[p](0, 0) = amp * P.eval(g, p).real();
  return out;
}

TwistedField traceless_part(const TwistedField& f) {
  TwistedField out(*f.geom, f.row_deg, f.col_deg);
  const int r = f.rows();
  for (long p = 0; p < f.geom->points(); ++p) {
    const cplx tr = f[p].trace() / static_cast<double>(r);
    out[p] = f[p] - tr * MatC::Identity(r, r);
  }
  return out;
}

}  // namespace hef
