#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hef/donaldson_flow.hpp"

namespace hef {

// h / sup_X|h|_{H₀} — the normalized endomorphism of a blow-up sequence.
TwistedField normalize_blowup(const TwistedField& h);

struct LimitEndo {
  TwistedField h_inf;          // final normalized snapshot (Hermitian PSD, sup = 1)
  std::vector<double> gaps;    // sup-norm Cauchy gaps between consecutive h'_k
  std::vector<unsigned char> mask;  // excluded cells (empty = none)
  bool converged = false;
};

// Normalized-snapshot limit with a Cauchy certificate: requires ≥ 3 snapshots;
// declares convergence when the trailing gaps decrease and the last one is
// below delta_conv, else throws with the gap series in the message.
LimitEndo limit_endo(const std::vector<Snapshot>& snaps,
                     const std::vector<unsigned char>& mask, double delta_conv = 1e-3);

// Spectral power of a Hermitian PSD field: eigenvalues to the power sigma,
// eigenvectors fixed. Eigenvalues in [−1e-9, 0) clamp to 0; below that, error.
TwistedField sigma_power(const TwistedField& h, double sigma);

struct ProjectionField {
  TwistedField pi;
  int k = 0;            // stable pointwise rank (grid plateau)
  double tau = 0.0;     // eigen-threshold used
  std::vector<unsigned char> exceptional;  // cells off the rank plateau
  // max |π_sigma − π_eigen| over well-separated cells, where π_sigma is the
  // Richardson-extrapolated end of the I − h∞^σ schedule.
  double sigma_agreement = 0.0;
};

std::vector<double> default_sigma_schedule();  // 2^{−1} … 2^{−20}

// Projection onto the near-kernel of h∞: eigen-threshold construction (λ < tau)
// cross-checked against the σ-power limit along the schedule. Throws if the
// pointwise kernel dimension has no stable plateau across the unmasked grid.
ProjectionField projection_pi(const TwistedField& h_inf, const std::vector<double>& schedule,
                              double tau, const std::vector<unsigned char>& mask = {});

struct Membership {
  bool by_integral = false;  // ‖s‖²_{L²(h'_k)} decreasing with last < delta_mem
  bool by_kernel = false;    // ‖h∞·s‖_{L²(H₀)} < delta_mem
  std::vector<double> series;
  double kernel_norm = 0.0;
};

// Both membership tests for a section (unit-normalized internally; the zero
// section is a member by convention).
Membership multiplier_membership(const TwistedField& s, const std::vector<Snapshot>& snaps,
                                 const TwistedField& h_inf, double delta_mem = 1e-4);

// Deterministic probe sections for membership testing: cycling through
// near-kernel (π·s), complement ((I−π)·s), and mixed random sections, where π
// projects onto the near-kernel of h_inf.
std::vector<TwistedField> membership_probe_sections(const Bundle& E, const TwistedField& pi,
                                                    int count, std::uint64_t seed);

// sup over unmasked cells of max(|π² − π|, |π† − π|) entrywise.
double projection_algebra_defect(const TwistedField& pi,
                                 const std::vector<unsigned char>& mask = {});

struct DestabParams {
  std::vector<double> sigma_schedule = default_sigma_schedule();
  double tau = 1e-6;
  double delta_conv = 1e-3;
  double delta_mem = 1e-4;
  double tol_slope = 1e-3;
  double eps_loc = 1e2;  // concentration threshold (n = 2)
  int radius = 2;
};

struct DestabReport {
  LimitEndo limit;
  ProjectionField proj;
  double mu_sub = 0.0;
  double mu_bundle = 0.0;
  bool slope_ok = false;  // mu_sub ≥ mu_bundle − tol_slope
};

// limit_endo → projection_pi → slope_subsheaf on a BlowUp trajectory;
// asserts 0 < k < rank and the slope inequality.
DestabReport destabilize_verdict(const Bundle& E, const FlowTrajectory& traj,
                                 const DestabParams& params = {});

struct HarnackResult {
  double c = 0.0;      // ‖Tr h‖_{L¹}/(2π·sup Tr h)
  double A = 0.0;      // −min of the Green kernel (clamped at 0)
  double Q = 0.0;      // sup of ½(|i·ΛF_{H₀}| + |i·ΛF_h|) (operator norms)
  double C = 0.0;      // 2π·A·Q
  double bound = 0.0;  // exp(−C)
  bool ok = false;     // c ≥ bound·(1 − 1e-9)
};

HarnackResult harnack_check(const Bundle& E, const TwistedField& h);

struct UyResult {
  double max_violation = 0.0;  // max over grid of LHS − RHS
  double scale = 0.0;          // max over grid of |LHS| + |RHS|
  bool equality_case = false;  // σ = 1: both sides are the same expression
};

// Pointwise check of |h^{−σ/2}(∂₀h^σ)|²_{H₀} ≤ ⟨h^{−1}(∂₀h), ∂₀h^σ⟩_{H₀}.
UyResult uy_inequality_check(const Bundle& E, const TwistedField& h, double sigma);

struct EnergyIdentity {
  double lhs = 0.0;  // ∫ |h^{−1/2}∂₀h|²_{H₀}
  double rhs = 0.0;  // ∫ ⟨i·ΛF_h − i·ΛF_{H₀}, h⟩_{H₀}
  double defect = 0.0;
};

// Integration-by-parts identity; the defect is pure discretization error and
// shrinks under grid refinement.
EnergyIdentity energy_identity_defect(const Bundle& E, const TwistedField& h);

}  // namespace hef
