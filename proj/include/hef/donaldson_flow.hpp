#pragma once

#include <string>
#include <vector>

#include "hef/bundle.hpp"

namespace hef {

enum class FlowVerdict { Converged, BlowUp, Timeout, Failed };

const char* to_string(FlowVerdict v);

struct FlowControls {
  double dt0 = 0.0;           // 0 → default 0.2·(grid spacing)²
  double t_max = 10.0;
  double eps_residual = 1e-6; // Converged when ‖i·ΛF − mu·I‖_{L²(h)} < eps
  double blowup_sup = 1e6;    // BlowUp when sup_X |h|_{H₀} > this
  int snapshot_stride = 250;  // accepted steps between stored metrics
  int max_halvings = 20;      // per-step dt halvings before aborting
  double mono_slack = 1e-8;   // allowed increase of residual² between steps
};

// One row per accepted step (row 0 is the initial state).
struct FlowSeries {
  std::vector<double> t, dt, residual, sup_h, trace_integral, det_drift, dissipation;
};

struct Snapshot {
  double t = 0.0;
  TwistedField h;
  double residual = 0.0;
  double sup_h = 0.0;
};

struct FlowTrajectory {
  FlowVerdict verdict = FlowVerdict::Timeout;
  std::string abort_reason;      // nonempty iff verdict == Failed
  FlowSeries series;
  std::vector<Snapshot> snapshots;  // stride-thinned; always ends at the final state
  double mono_violation = 0.0;   // max observed increase of residual²
  long accepted = 0;
  long rejected = 0;
};

// Integrates ∂h/∂t = −2h(i·ΛF_h − mu·I) from h = Id (or `initial`) by RK4 with
// Hermitian symmetrization, pointwise det-renormalization (rank ≥ 2), and
// positivity-triggered step halving. The conformal trace correction is applied
// for rank ≥ 2, so non-traceless deformations flow to the trace-free equation.
FlowTrajectory run_flow(const Bundle& E, const FlowControls& c,
                        const TwistedField* initial = nullptr);

// Per-snapshot curvature diagnostics: full-curvature L² norm, sup of the
// contracted curvature (eigenvalue range in the metric h), and the L² norm of
// its Chern-connection gradient.
struct CurvatureDiagnostics {
  std::vector<double> t, f_l2, ihat_sup, grad_ihat_l2;
};
CurvatureDiagnostics curvature_diagnostics(const Bundle& E, const FlowTrajectory& traj);

// Cells whose local curvature energy over a (2·radius+1)-wide box exceeds
// eps_loc (concentration detector for n = 2; always empty for n = 1).
std::vector<long> concentration_regions(const Bundle& E, const TwistedField& h,
                                        double eps_loc, int radius);
// Expands a cell list to a 0/1 mask over all grid points.
std::vector<unsigned char> regions_to_mask(const TorusGeometry& g, const std::vector<long>& cells,
                                           int radius);

}  // namespace hef
