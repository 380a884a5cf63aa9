#pragma once

#include <vector>

#include "hef/twisted_field.hpp"

namespace hef {

// Holomorphic bundle data over the torus: a direct sum of constant-curvature
// twisted blocks (the background) deformed by a fixed (0,1) endomorphism-valued
// field a, so the holomorphic structure is ∂̄ = ∂̄₀ + a.
//
// Curvature normalization: the background satisfies i·ΛF⁰ = kappa·diag(deg)
// with kappa = 2π/(L₁²·vol_scale); all block flux sits in the first factor.
// The Hermitian-Einstein constant of the induced slope is mu = kappa·deg/rank,
// and the flow drives i·ΛF_h toward mu·Id.
class Bundle {
 public:
  // a may be empty (interpreted as zero); otherwise it must have n components
  // with the End(E) twist pattern.
  Bundle(const TorusGeometry& g, BlockStructure blocks, TwistedForm a_form = {});

  const TorusGeometry& geom() const { return *geom_; }
  const BlockStructure& blocks() const { return blocks_; }
  const std::vector<int>& deg() const { return deg_; }
  const TwistedForm& a() const { return a_; }
  int rank() const { return static_cast<int>(deg_.size()); }
  int degree() const { return blocks_.degree_sum(); }
  double kappa() const { return kappa_; }
  double mu() const { return kappa_ * degree() / rank(); }
  // Derivative discretization shared by every End(E)-patterned operation
  // (Fd4 when any pair of indices has distinct degree, spectral otherwise),
  // and the same rule for section-patterned fields.
  DerivMode end_mode() const { return end_mode_; }
  DerivMode section_mode() const { return section_mode_; }

  TwistedField identity_metric() const;
  TwistedField zero_endo() const;

  // h-independent part of the curvature components (slot j·n + k):
  //   S_jk̄ = F⁰_jk̄ + D⁰_j a_k̄ + D⁰_k̄ a_j† − [a_j†, a_k̄].
  const std::vector<TwistedField>& static_curvature() const;
 private:
  const TorusGeometry* geom_;
  BlockStructure blocks_;
  std::vector<int> deg_;
  TwistedForm a_;
  DerivMode end_mode_;
  DerivMode section_mode_;
  double kappa_;
  mutable std::vector<TwistedField> static_curv_;
  mutable bool cache_ready_ = false;
  void build_cache() const;
};

// ∂̄-operator components (k-th dz̄ slot) on sections and endomorphisms.
TwistedField dbar_section(const Bundle& E, const TwistedField& s, int k);
TwistedField dbar_endo(const Bundle& E, const TwistedField& u, int k);

// Background Chern (1,0) derivative of an endomorphism (metric h = Id):
//   (∂₀u)_j = D⁰_j u − [a_j†, u].
TwistedField d10_endo_bg(const Bundle& E, const TwistedField& u, int j);

struct Curvature {
  // Full components F_jk̄ at slot j·n + k (filled only when `full`).
  std::vector<TwistedField> comp;
  // i·ΛF = (2/vol_scale)·Σ_j F_jj̄; self-adjoint with respect to h.
  TwistedField ihat;
  // The metric's connection deviation u_j = h⁻¹(D⁰_j h − [a_j†, h]), with the
  // trace re-anchored to the direct derivative of log det h so that
  // ∫ tr(i·ΛF) is conserved exactly by the discretization.
  TwistedForm u;
};

// Chern curvature of the metric h (in the background frame, H = H₀·h, H₀ = Id).
Curvature curvature(const Bundle& E, const TwistedField& h, bool full = false);

// i·ΛF_h plus the conformal trace correction for rank ≥ 2 (raw for rank 1).

// H-adjoint of an endomorphism field: H⁻¹ u† H.
TwistedField adjoint_H(const TwistedField& u, const TwistedField& H);

// L² norms in the metric H: endomorphisms use tr((H⁻¹u†H)u); sections use
// s†Hs; (0,1)-forms carry the contraction weight 2/vol_scale per component.
double l2_norm_endo(const TwistedField& u, const TwistedField& H);
double l2_norm_section(const TwistedField& s, const TwistedField& H);
double l2_norm_form01(const TwistedForm& phi, const TwistedField& H);

// ∫ tr(i·ΛF) — equals 2π·kappa·degree identically (cf. trace conservation).
double chern_trace_integral(const Bundle& E, const TwistedField& ihat);

// Slope of the subsheaf cut out by an H₀-orthogonal projection π of rank k:
//   mu(π) = [ ∫ tr(i·ΛF_{Id}·π) − ‖∂₀π‖²_{L²(H₀)} ] / (2π·k),
// where ∂₀ is the background Chern (1,0) derivative. A nonempty mask excludes
// the flagged grid cells from both integrals.
double slope_subsheaf(const Bundle& E, const TwistedField& pi, int k,
                      const std::vector<unsigned char>& mask = {});

// Residual of the (0,2) integrability condition ∂̄∘∂̄ = 0 for the deformed
// structure: sup |∂̄⁰_1 a_2 − ∂̄⁰_2 a_1 + [a_1, a_2]| (zero when n = 1).
double integrability_residual(const Bundle& E);

}  // namespace hef
