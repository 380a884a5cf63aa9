#pragma once

#include <vector>

#include "hef/torus_geometry.hpp"
#include "hef/types.hpp"

namespace hef {

// Direct-sum block data of a bundle: block α has rank ranks[α] and an integer
// degree degrees[α] realized as a constant-curvature factor of automorphy.
struct BlockStructure {
  std::vector<int> ranks;
  std::vector<int> degrees;

  int block_count() const { return static_cast<int>(ranks.size()); }
  int rank() const {
    int r = 0;
    for (int v : ranks) r += v;
    return r;
  }
  int degree_sum() const {
    int d = 0;
    for (size_t b = 0; b < ranks.size(); ++b) d += ranks[b] * degrees[b];
    return d;
  }
  // Expanded per-fiber-index degrees, e.g. ranks {1,2}, degrees {1,0} -> {1,0,0}.
  std::vector<int> index_degrees() const;
};

// Matrix-valued grid field between twisted frames. Entry (i,j) is a section of
// a line with twist t = row_deg[i] − col_deg[j]: periodic in every axis except
// the y₁-wrap, where it picks up the automorphy phase e^{−2πi·t·x₁/L₁}.
//
// Fields whose twists all vanish differentiate spectrally; any nonzero twist
// switches the whole field to 4th-order phase-twisted finite differences so
// all entries share one error order.  The ∂/∂̄ pair uses mirror-image biased
// stencils that are exact negated adjoints: discrete integration by parts
// holds to rounding, so flows driven by divergence-form operators dissipate
// monotonically on the grid itself.
struct TwistedField {
  const TorusGeometry* geom = nullptr;
  std::vector<int> row_deg;
  std::vector<int> col_deg;
  std::vector<MatC> val;

  TwistedField() = default;
  TwistedField(const TorusGeometry& g, std::vector<int> rdeg, std::vector<int> cdeg);

  int rows() const { return static_cast<int>(row_deg.size()); }
  int cols() const { return static_cast<int>(col_deg.size()); }
  int twist(int i, int j) const { return row_deg[static_cast<size_t>(i)] - col_deg[static_cast<size_t>(j)]; }
  bool untwisted() const;

  MatC& operator[](long p) { return val[static_cast<size_t>(p)]; }
  const MatC& operator[](long p) const { return val[static_cast<size_t>(p)]; }
};

// A tuple of n matrix fields filling the dz^j (or dz̄^j) slots of a form.
using TwistedForm = std::vector<TwistedField>;

enum class DerivMode { Auto, Spectral, Fd4 };

// Plain derivative along one real axis, respecting automorphy wraps.
TwistedField axis_der(const TwistedField& f, int axis, DerivMode mode = DerivMode::Auto);

// Background covariant ∂_{z_j} and ∂_{z̄_j}: the complex combination of axis
// derivatives plus, in factor 1, the constant-curvature connection coefficient
// i·(2π·t/L₁²)·y₁/2 acting entrywise by the twist t of the entry.
TwistedField dz_bg(const TwistedField& f, int j, DerivMode mode = DerivMode::Auto);
TwistedField dzbar_bg(const TwistedField& f, int j, DerivMode mode = DerivMode::Auto);

// Pointwise conjugate transpose; swaps the twist pattern.
TwistedField adjoint(const TwistedField& f);

TwistedField operator+(const TwistedField& x, const TwistedField& y);
TwistedField operator-(const TwistedField& x, const TwistedField& y);
TwistedField operator*(cplx c, const TwistedField& x);
// Pointwise matrix product; column pattern of x must match row pattern of y.
TwistedField matmul(const TwistedField& x, const TwistedField& y);
// Pointwise commutator [x, y] for End-patterned fields.
TwistedField commutator(const TwistedField& x, const TwistedField& y);

// max over grid of the pointwise operator norm (Hermitian fields: |λ|_max).
double sup_op_norm(const TwistedField& f);
// max over grid of entrywise absolute values.
double sup_abs(const TwistedField& f);

}  // namespace hef
