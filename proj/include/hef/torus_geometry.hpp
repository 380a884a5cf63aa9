#pragma once

#include <string>
#include <vector>

#include "hef/types.hpp"

namespace hef {

// Flat torus C^n / Λ, Λ generated per complex factor by L_j and i·L_j, carrying
// the Kähler form ω = (vol_scale/2)·i·Σ dz^j ∧ dz̄^j. vol_scale is fixed so the
// total volume is exactly 2π.
//
// Grid: `grid` points per real axis (power of two, >= 16), so grid^(2n) points
// total. Axis order is (x1, y1, x2, y2); flat indices are row-major with the
// last axis fastest.
//
// Laplacian convention: Δφ := i·Λ(∂∂̄φ) = (1/(2·vol_scale))·Σ_a ∂_a², which is
// negative semidefinite (eigenvalue −|ξ|²/(2·vol_scale) on the mode e^{iξ·x}).
class TorusGeometry {
 public:
  TorusGeometry(int n, std::vector<double> periods, int grid);

  int n() const { return n_; }
  int grid() const { return grid_; }
  int axes() const { return 2 * n_; }
  long points() const { return points_; }
  double period(int factor) const { return periods_[static_cast<size_t>(factor)]; }
  double vol_scale() const { return vol_scale_; }
  double cell_volume() const { return cell_volume_; }

  double axis_period(int axis) const { return periods_[static_cast<size_t>(axis / 2)]; }
  double spacing(int axis) const { return axis_period(axis) / grid_; }
  long stride(int axis) const { return strides_[static_cast<size_t>(axis)]; }
  // Coordinate of grid index `idx` along `axis`.
  double coord(int axis, int idx) const { return spacing(axis) * idx; }
  // Signed spectral frequency 2π·m̃/L of DFT bin `bin` (m̃ ∈ [−N/2, N/2)).
  double freq(int axis, int bin) const;
  int axis_index(long point, int axis) const {
    return static_cast<int>((point / stride(axis)) % grid_);
  }

  // Minimum grid value of the discrete Green kernel of Δ (cached); the kernel
  // G satisfies u(x) = mean(u) − Σ_y G(x−y)·(Δu)(y)·cell_volume and has zero
  // mean, so G ≥ greens_min plays the role of the classical lower bound −A.
  double greens_min() const;

 private:
  int n_;
  std::vector<double> periods_;
  int grid_;
  double vol_scale_;
  double cell_volume_;
  long points_;
  std::vector<long> strides_;
  mutable double greens_min_ = 0.0;
  mutable bool greens_min_ready_ = false;
};

// Complex-scalar grid field carrying a form type. Components are indexed:
//   (0,0): 1 component; (1,0): n (dz^j); (0,1): n (dz̄^k);
//   (1,1): n² (dz^j ∧ dz̄^k at slot j·n + k).
enum class FormType { F00, F10, F01, F11 };

int form_components(FormType t, int n);

struct ScalarField {
  const TorusGeometry* geom = nullptr;
  FormType type = FormType::F00;
  std::vector<std::vector<cplx>> comp;

  ScalarField() = default;
  ScalarField(const TorusGeometry& g, FormType t);
  std::vector<cplx>& operator[](int c) { return comp[static_cast<size_t>(c)]; }
  const std::vector<cplx>& operator[](int c) const { return comp[static_cast<size_t>(c)]; }
};

// Λ-contraction of a (1,1) field: −2i·Σ_j f_{jj̄}, rescaled by vol_scale so the
// contraction is taken in an ω-orthonormal frame (Λω = n).
ScalarField lambda_contract(const ScalarField& f);

// Riemann sum times the cell volume; integrate(1) = 2π.
cplx integrate(const ScalarField& f);

// Spectral derivative along one real axis (plain periodic fields).
ScalarField axis_derivative(const ScalarField& f, int axis);
// Spectral ∂_{z_j} = (∂_x − i∂_y)/2 and ∂_{z̄_j} = (∂_x + i∂_y)/2.
ScalarField d_z(const ScalarField& f, int j);
ScalarField d_zbar(const ScalarField& f, int j);

// Δ = i·Λ∂∂̄, evaluated spectrally.
ScalarField laplacian(const ScalarField& f);

struct GreenSolution {
  ScalarField u;
  double greens_min = 0.0;
};

// Solves Δu = f spectrally with mean(u) = 0. Precondition: |∫f| < 1e-9.
GreenSolution green_solve(const ScalarField& f);

}  // namespace hef
