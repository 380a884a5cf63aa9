#include "hef/twisted_field.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "hef/fft.hpp"
#include "hef/parallel.hpp"

namespace hef {

std::vector<int> BlockStructure::index_degrees() const {
  std::vector<int> out;
  for (size_t b = 0; b < ranks.size(); ++b)
    for (int k = 0; k < ranks[b]; ++k) out.push_back(degrees[b]);
  return out;
}

TwistedField::TwistedField(const TorusGeometry& g, std::vector<int> rdeg, std::vector<int> cdeg)
    : geom(&g), row_deg(std::move(rdeg)), col_deg(std::move(cdeg)) {
  val.assign(static_cast<size_t>(g.points()), MatC::Zero(rows(), cols()));
}

bool TwistedField::untwisted() const {
  for (int i = 0; i < rows(); ++i)
    for (int j = 0; j < cols(); ++j)
      if (twist(i, j) != 0) return false;
  return true;
}

namespace {

// Phase tables for the automorphy wrap: wtab[k][ix1] = e^{−2πi·t_k·x₁/L₁}.
struct WrapPhases {
  std::map<int, int> slot;           // twist value -> row in wtab
  std::vector<std::vector<cplx>> wtab;
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank> entry_slot;

  WrapPhases(const TwistedField& f) {
    const TorusGeometry& g = *f.geom;
    const int N = g.grid();
    const double L1 = g.period(0);
    entry_slot.resize(f.rows(), f.cols());
    for (int i = 0; i < f.rows(); ++i)
      for (int j = 0; j < f.cols(); ++j) {
        const int t = f.twist(i, j);
        auto it = slot.find(t);
        if (it == slot.end()) {
          std::vector<cplx> row(static_cast<size_t>(N));
          for (int ix = 0; ix < N; ++ix) {
            const double x = g.coord(0, ix);
            row[static_cast<size_t>(ix)] = std::exp(cplx(0.0, -2.0 * kPi * t * x / L1));
          }
          it = slot.emplace(t, static_cast<int>(wtab.size())).first;
          wtab.push_back(std::move(row));
        }
        entry_slot(i, j) = it->second;
      }
  }

  void apply(MatC& m, int ix1, int wraps) const {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) {
        const cplx w = wtab[static_cast<size_t>(entry_slot(i, j))][static_cast<size_t>(ix1)];
        m(i, j) *= (wraps > 0) ? w : std::conj(w);
      }
  }
};

// 4th-order stencils. bias=0 is the central stencil.  bias=±1 are the
// one-sided-leaning pair used for the ∂ / ∂̄ split: the minus stencil is the
// negated mirror of the plus one, so ⟨D⁺u, v⟩ = −⟨u, D⁻v⟩ holds exactly on
// the periodic grid (discrete integration by parts), and neither symbol has
// interior zeros — composed second-order operators stay strictly dissipative
// across the whole discrete spectrum.
TwistedField axis_der_fd4(const TwistedField& f, int axis, int bias) {
  const TorusGeometry& g = *f.geom;
  const int N = g.grid();
  const long stride = g.stride(axis);
  const double ih = 1.0 / g.spacing(axis);
  TwistedField out(g, f.row_deg, f.col_deg);

  static const int central_sh[4] = {1, -1, 2, -2};
  static const double central_co[4] = {8.0 / 12.0, -8.0 / 12.0, -1.0 / 12.0, 1.0 / 12.0};
  static const int plus_sh[5] = {-1, 0, 1, 2, 3};
  static const double plus_co[5] = {-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0};
  static const int minus_sh[5] = {-3, -2, -1, 0, 1};
  static const double minus_co[5] = {-1.0 / 12.0, 1.0 / 2.0, -3.0 / 2.0, 5.0 / 6.0, 1.0 / 4.0};

  const int count = bias == 0 ? 4 : 5;
  const int* shifts = bias == 0 ? central_sh : (bias > 0 ? plus_sh : minus_sh);
  const double* coef = bias == 0 ? central_co : (bias > 0 ? plus_co : minus_co);

  const bool phased = (axis == 1) && !f.untwisted();
  std::optional<WrapPhases> table;
  if (phased) table.emplace(f);

  parallel_for(g.points(), [&](long lo, long hi) {
    MatC buf;
    for (long p = lo; p < hi; ++p) {
      const int ia = g.axis_index(p, axis);
      const int ix1 = phased ? g.axis_index(p, 0) : 0;
      MatC acc = MatC::Zero(f.rows(), f.cols());
      for (int k = 0; k < count; ++k) {
        int ja = ia + shifts[k];
        int wraps = 0;
        if (ja >= N) {
          ja -= N;
          wraps = 1;
        } else if (ja < 0) {
          ja += N;
          wraps = -1;
        }
        const long q = p + static_cast<long>(ja - ia) * stride;
        if (wraps != 0 && phased) {
          buf = f[q];
          table->apply(buf, ix1, wraps);
          acc += coef[k] * buf;
        } else {
          acc += coef[k] * f[q];
        }
      }
      out[p] = ih * acc;
    }
  });
  return out;
}

TwistedField axis_der_spectral(const TwistedField& f, int axis) {
  const TorusGeometry& g = *f.geom;
  const int N = g.grid();
  const long inner = g.stride(axis);
  const long outer = g.points() / (inner * N);
  TwistedField out(g, f.row_deg, f.col_deg);
  std::vector<cplx> buf(static_cast<size_t>(g.points()));
  for (int i = 0; i < f.rows(); ++i)
    for (int j = 0; j < f.cols(); ++j) {
      for (long p = 0; p < g.points(); ++p) buf[static_cast<size_t>(p)] = f[p](i, j);
      fft_axis(buf.data(), static_cast<int>(outer), N, static_cast<int>(inner), false);
      for (long p = 0; p < g.points(); ++p) {
        const int bin = g.axis_index(p, axis);
        const double xi = (N % 2 == 0 && bin == N / 2) ? 0.0 : g.freq(axis, bin);
        buf[static_cast<size_t>(p)] *= kI * xi;
      }
      fft_axis(buf.data(), static_cast<int>(outer), N, static_cast<int>(inner), true);
      for (long p = 0; p < g.points(); ++p) out[p](i, j) = buf[static_cast<size_t>(p)];
    }
  return out;
}

DerivMode resolve(const TwistedField& f, DerivMode mode) {
  if (mode != DerivMode::Auto) return mode;
  return f.untwisted() ? DerivMode::Spectral : DerivMode::Fd4;
}

}  // namespace

TwistedField axis_der(const TwistedField& f, int axis, DerivMode mode) {
  if (resolve(f, mode) == DerivMode::Spectral) {
    if (!f.untwisted())
      throw std::invalid_argument("axis_der: spectral path requires an untwisted field");
    return axis_der_spectral(f, axis);
  }
  return axis_der_fd4(f, axis, 0);
}

namespace {

// out = 0.5*(dx ∓ i dy) + (j==0 ? connection term : 0)
//
// On the finite-difference path the ∂ side uses the +biased stencil and the
// ∂̄ side the −biased one.  Because the two stencils are exact negated
// adjoints of each other, the discrete operators satisfy (∂̄)† = −∂ without
// any truncation error, which makes divergence-form second-order operators
// built from the pair exactly dissipative and keeps integrated traces of
// curvature conserved to rounding.
TwistedField complex_der(const TwistedField& f, int j, DerivMode mode, bool bar) {
  const TorusGeometry& g = *f.geom;
  const bool fd = resolve(f, mode) == DerivMode::Fd4;
  const int bias = bar ? -1 : 1;
  TwistedField dx = fd ? axis_der_fd4(f, 2 * j, bias) : axis_der(f, 2 * j, mode);
  TwistedField dy = fd ? axis_der_fd4(f, 2 * j + 1, bias) : axis_der(f, 2 * j + 1, mode);
  TwistedField out(g, f.row_deg, f.col_deg);
  const cplx iy = bar ? kI : -kI;
  for (long p = 0; p < g.points(); ++p) out[p] = 0.5 * (dx[p] + iy * dy[p]);
  if (j == 0) {
    const double L1 = g.period(0);
    if (!f.untwisted()) {
      for (long p = 0; p < g.points(); ++p) {
        const double y1 = g.coord(1, g.axis_index(p, 1));
        for (int i = 0; i < f.rows(); ++i)
          for (int k = 0; k < f.cols(); ++k) {
            const int t = f.twist(i, k);
            if (t != 0) out[p](i, k) += cplx(0.0, kPi * t * y1 / (L1 * L1)) * f[p](i, k);
          }
      }
    }
  }
  return out;
}

}  // namespace

TwistedField dz_bg(const TwistedField& f, int j, DerivMode mode) { return complex_der(f, j, mode, false); }
TwistedField dzbar_bg(const TwistedField& f, int j, DerivMode mode) { return complex_der(f, j, mode, true); }

TwistedField adjoint(const TwistedField& f) {
  TwistedField out(*f.geom, f.col_deg, f.row_deg);
  for (long p = 0; p < f.geom->points(); ++p) out[p] = f[p].adjoint();
  return out;
}

TwistedField operator+(const TwistedField& x, const TwistedField& y) {
  TwistedField out(*x.geom, x.row_deg, x.col_deg);
  for (long p = 0; p < x.geom->points(); ++p) out[p] = x[p] + y[p];
  return out;
}

TwistedField operator-(const TwistedField& x, const TwistedField& y) {
  TwistedField out(*x.geom, x.row_deg, x.col_deg);
  for (long p = 0; p < x.geom->points(); ++p) out[p] = x[p] - y[p];
  return out;
}

TwistedField operator*(cplx c, const TwistedField& x) {
  TwistedField out(*x.geom, x.row_deg, x.col_deg);
  for (long p = 0; p < x.geom->points(); ++p) out[p] = c * x[p];
  return out;
}

TwistedField matmul(const TwistedField& x, const TwistedField& y) {
  assert(x.cols() == y.rows());
  TwistedField out(*x.geom, x.row_deg, y.col_deg);
  for (long p = 0; p < x.geom->points(); ++p) out[p] = x[p] * y[p];
  return out;
}

TwistedField commutator(const TwistedField& x, const TwistedField& y) {
  TwistedField out(*x.geom, x.row_deg, x.col_deg);
  for (long p = 0; p < x.geom->points(); ++p) out[p] = x[p] * y[p] - y[p] * x[p];
  return out;
}

double sup_op_norm(const TwistedField& f) {
  double mx = 0.0;
  const int r = f.rows();
  for (const MatC& m : f.val) {
    if (r == 1) {
      mx = std::max(mx, std::abs(m(0, 0)));
    } else if (r == 2 && f.cols() == 2) {
      // Hermitian closed form
      const double a = m(0, 0).real(), c = m(1, 1).real();
      const double b2 = std::norm(m(0, 1));
      const double mid = 0.5 * (a + c);
      const double rad = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b2));
      mx = std::max({mx, std::abs(mid + rad), std::abs(mid - rad)});
    } else {
      Eigen::SelfAdjointEigenSolver<MatC> es((m + m.adjoint()) / 2.0);
      for (int i = 0; i < es.eigenvalues().size(); ++i)
        mx = std::max(mx, std::abs(es.eigenvalues()[i]));
    }
  }
  return mx;
}

double sup_abs(const TwistedField& f) {
  double mx = 0.0;
  for (const MatC& m : f.val)
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) mx = std::max(mx, std::abs(m(i, j)));
  return mx;
}

}  // namespace hef
