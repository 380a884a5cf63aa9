#include "hef/donaldson_flow.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace hef {

const char* to_string(FlowVerdict v) {
  switch (v) {
    case FlowVerdict::Converged: return "Converged";
    case FlowVerdict::BlowUp: return "BlowUp";
    case FlowVerdict::Timeout: return "Timeout";
    case FlowVerdict::Failed: return "Failed";
  }
  return "Failed";
}

namespace {

bool point_pd(const MatC& m) {
  const int r = static_cast<int>(m.rows());
  if (r == 1) return m(0, 0).real() > 0.0;
  if (r == 2) {
    const double a = m(0, 0).real(), d = m(1, 1).real();
    return a > 0.0 && a * d - std::norm(m(0, 1)) > 0.0;
  }
  Eigen::LLT<MatC> llt(m);
  return llt.info() == Eigen::Success;
}

bool field_pd(const TwistedField& h) {
  for (const MatC& m : h.val)
    if (!point_pd(m)) return false;
  return true;
}

void symmetrize(TwistedField& h) {
  for (MatC& m : h.val) m = 0.5 * (m + m.adjoint().eval());
}

void det_renormalize(TwistedField& h) {
  const int r = h.rows();
  if (r < 2) return;
  for (MatC& m : h.val) {
    const double d = m.determinant().real();
    m /= std::pow(d, 1.0 / r);
  }
}

double max_det_drift(const TwistedField& h) {
  double mx = 0.0;
  for (const MatC& m : h.val) mx = std::max(mx, std::abs(m.determinant().real() - 1.0));
  return mx;
}

// Square root and inverse square root of a Hermitian positive matrix.  A
// non-positive input yields NaNs, which the caller's positivity check rejects.
void herm_sqrt(const MatC& m, MatC& root, MatC& root_inv) {
  Eigen::SelfAdjointEigenSolver<MatC> es(m);
  const MatC& v = es.eigenvectors();
  const Eigen::ArrayXd lam = es.eigenvalues().array().sqrt();
  root = v * lam.matrix().asDiagonal() * v.adjoint();
  root_inv = v * lam.inverse().matrix().asDiagonal() * v.adjoint();
}

// exp(x) and exp(−x/2) of a Hermitian matrix from one eigendecomposition.
void herm_exp_pair(const MatC& x, MatC& ex, MatC& exp_minus_half) {
  Eigen::SelfAdjointEigenSolver<MatC> es(x);
  const MatC& v = es.eigenvectors();
  const Eigen::ArrayXd lam = es.eigenvalues().array();
  ex = v * lam.exp().matrix().asDiagonal() * v.adjoint();
  exp_minus_half = v * (-0.5 * lam).exp().matrix().asDiagonal() * v.adjoint();
}

// Stage slope in exponential coordinates: writing h = B·exp(x)·B, the metric
// ODE pulls back to dx/dt = chi(ad_x)(m) with m = exp(−x/2)·B⁻¹·ḣ·B⁻¹·exp(−x/2)
// and chi(z) = (z/2)/sinh(z/2).  chi is even, so the truncation 1 − ad²/24 is
// Hermitian term by term and suffices for classical order 4.
MatC stage_slope(const MatC& x, const MatC& m) {
  const MatC c1 = x * m - m * x;
  const MatC c2 = x * c1 - c1 * x;
  MatC k = m - c2 / 24.0;
  return 0.5 * (k + k.adjoint().eval());
}

struct StageEval {
  TwistedField rhs;        // −2h(i·ΛF + c₀ − mu)
  TwistedField ihat_raw;   // uncorrected contraction (trace bookkeeping)
  TwistedField deviation;  // i·ΛF + c₀ − mu·I  (residual integrand)
};

StageEval eval_rhs(const Bundle& E, const TwistedField& h) {
  const TorusGeometry& g = E.geom();
  const int r = E.rank();
  const double mu = E.mu();
  Curvature cur = curvature(E, h);

  StageEval out;
  out.deviation = TwistedField(g, E.deg(), E.deg());
  out.rhs = TwistedField(g, E.deg(), E.deg());
  for (long p = 0; p < g.points(); ++p) {
    MatC dev = cur.ihat[p];
    if (r >= 2) {
      // The det-renormalized flow lives in the unit-determinant slice, which
      // cannot respond to the pointwise-scalar direction; its driving
      // deviation is the trace-free part of i·ΛF − mu·I.  The scalar sector
      // is pinned separately: the trace integral is conserved exactly, and
      // the conformal normalization belongs to the fixed background metric.
      dev -= (dev.trace() / static_cast<double>(r)) * MatC::Identity(r, r);
    } else {
      dev -= mu * MatC::Identity(1, 1);
    }
    out.deviation[p] = dev;
    out.rhs[p] = -2.0 * (h[p] * dev);
  }
  out.ihat_raw = std::move(cur.ihat);
  return out;
}

}  // namespace

FlowTrajectory run_flow(const Bundle& E, const FlowControls& c, const TwistedField* initial) {
  const TorusGeometry& g = E.geom();
  const int r = E.rank();
  const double dt0 = c.dt0 > 0.0 ? c.dt0 : 0.2 * g.spacing(0) * g.spacing(0);

  FlowTrajectory traj;
  TwistedField h = initial ? *initial : E.identity_metric();
  if (!field_pd(h)) throw std::invalid_argument("run_flow: initial metric not positive");

  double t = 0.0;
  double dt = dt0;
  long steps_since_snapshot = 0;
  long ok_streak = 0;

  StageEval st = eval_rhs(E, h);
  double resid = l2_norm_endo(st.deviation, h);

  auto record = [&](double step_dt) {
    traj.series.t.push_back(t);
    traj.series.dt.push_back(step_dt);
    traj.series.residual.push_back(resid);
    traj.series.sup_h.push_back(sup_op_norm(h));
    traj.series.trace_integral.push_back(chern_trace_integral(E, st.ihat_raw));
    traj.series.det_drift.push_back(r >= 2 ? max_det_drift(h) : 0.0);
    const double prev = traj.series.dissipation.empty() ? 0.0 : traj.series.dissipation.back();
    traj.series.dissipation.push_back(prev + resid * resid * step_dt);
  };
  auto snapshot = [&]() {
    traj.snapshots.push_back(Snapshot{t, h, resid, traj.series.sup_h.back()});
    steps_since_snapshot = 0;
  };

  record(0.0);
  snapshot();

  auto finish = [&](FlowVerdict v, std::string reason = {}) {
    traj.verdict = v;
    traj.abort_reason = std::move(reason);
    if (traj.snapshots.empty() || traj.snapshots.back().t != t) snapshot();
    return traj;
  };

  for (;;) {
    if (resid < c.eps_residual) return finish(FlowVerdict::Converged);
    if (traj.series.sup_h.back() > c.blowup_sup) return finish(FlowVerdict::BlowUp);
    if (t >= c.t_max) return finish(FlowVerdict::Timeout);

    // One RK4 step taken in exponential coordinates anchored at the current
    // metric: h(ξ) = B·exp(ξ)·B with B = h^{1/2}.  The pulled-back field acts
    // on the log-metric, so the stable step size does not shrink as the
    // metric's condition number grows, and every stage is positive by
    // construction.
    TwistedField b(g, E.deg(), E.deg());
    TwistedField binv(g, E.deg(), E.deg());
    for (long p = 0; p < g.points(); ++p) herm_sqrt(h[p], b[p], binv[p]);

    TwistedField k1(g, E.deg(), E.deg());
    for (long p = 0; p < g.points(); ++p) {
      const MatC w = binv[p] * st.rhs[p] * binv[p];
      k1[p] = 0.5 * (w + w.adjoint().eval());
    }

    // A trial step must keep the metric positive, keep the fields finite, and
    // not increase the squared residual beyond the slack.  The last condition
    // doubles as the stability governor: an explicit step that has outrun the
    // stiffness of the current metric shows up first as a residual increase,
    // and halving dt restores dissipation.  Acceptance therefore enforces the
    // monotone-decay invariant by construction; the post-acceptance check
    // below remains as a backstop.
    int halvings = 0;
    for (;;) {
      TwistedField xi(g, E.deg(), E.deg());
      TwistedField k2, k3, k4;
      auto stage = [&](double node, const TwistedField& slope, TwistedField& k_out) {
        TwistedField hs(g, E.deg(), E.deg());
        TwistedField emh(g, E.deg(), E.deg());  // exp(−ξ/2) per point
        for (long p = 0; p < g.points(); ++p) {
          xi[p] = (node * dt) * slope[p];
          MatC ex;
          herm_exp_pair(xi[p], ex, emh[p]);
          hs[p] = b[p] * ex * b[p];
        }
        symmetrize(hs);
        if (!field_pd(hs)) return false;
        const TwistedField rhs_s = eval_rhs(E, hs).rhs;
        k_out = TwistedField(g, E.deg(), E.deg());
        for (long p = 0; p < g.points(); ++p) {
          const MatC m = emh[p] * (binv[p] * rhs_s[p] * binv[p]) * emh[p];
          k_out[p] = stage_slope(xi[p], m);
        }
        return true;
      };
      bool ok = stage(0.5, k1, k2) && stage(0.5, k2, k3) && stage(1.0, k3, k4);
      if (ok) {
        TwistedField hn(g, E.deg(), E.deg());
        for (long p = 0; p < g.points(); ++p) {
          const MatC x = (dt / 6.0) * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
          MatC ex, dummy;
          herm_exp_pair(x, ex, dummy);
          hn[p] = b[p] * ex * b[p];
        }
        symmetrize(hn);
        if (field_pd(hn)) {
          det_renormalize(hn);
          StageEval st_n = eval_rhs(E, hn);
          const double resid_n = l2_norm_endo(st_n.deviation, hn);
          if (std::isfinite(resid_n) && resid_n * resid_n - resid * resid <= c.mono_slack) {
            h = std::move(hn);
            st = std::move(st_n);
            traj.mono_violation = std::max(traj.mono_violation, resid_n * resid_n - resid * resid);
            resid = resid_n;
            break;
          }
        }
      }
      ++traj.rejected;
      ++halvings;
      if (halvings > c.max_halvings)
        return finish(FlowVerdict::Failed, "step rejected; dt halvings exhausted");
      dt *= 0.5;
      ok_streak = 0;
    }

    t += dt;
    ++traj.accepted;
    ++steps_since_snapshot;

    const double inc = resid * resid - traj.series.residual.back() * traj.series.residual.back();
    if (inc > c.mono_slack)
      return finish(FlowVerdict::Failed, "residual monotonicity violated");

    record(dt);
    if (steps_since_snapshot >= c.snapshot_stride) snapshot();

    ++ok_streak;
    if (dt < dt0 && ok_streak >= 200) {
      dt = std::min(dt0, 2.0 * dt);
      ok_streak = 0;
    }
  }
}

CurvatureDiagnostics curvature_diagnostics(const Bundle& E, const FlowTrajectory& traj) {
  const TorusGeometry& g = E.geom();
  const int n = g.n();
  const int r = E.rank();
  const double w = 2.0 / g.vol_scale();
  CurvatureDiagnostics out;

  for (const Snapshot& snap : traj.snapshots) {
    const TwistedField& h = snap.h;
    Curvature cur = curvature(E, h, /*full=*/true);

    // ‖F‖²_{L²(h)} with the metric contraction weight (2/vol_scale)² per slot.
    double f2 = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const TwistedField& F = cur.comp[static_cast<size_t>(j * n + k)];
        for (long p = 0; p < g.points(); ++p) {
          const MatC Hi = h[p].inverse();
          f2 += w * w * (h[p] * F[p] * Hi * F[p].adjoint()).trace().real();
        }
      }
    out.f_l2.push_back(std::sqrt(std::max(0.0, f2 * g.cell_volume())));

    // sup of |eigenvalues| of i·ΛF (real, since it is h-self-adjoint).
    double isup = 0.0;
    for (long p = 0; p < g.points(); ++p) {
      Eigen::GeneralizedSelfAdjointEigenSolver<MatC> es(
          (h[p] * cur.ihat[p] + (h[p] * cur.ihat[p]).adjoint().eval()) * 0.5, h[p]);
      for (int i = 0; i < r; ++i) isup = std::max(isup, std::abs(es.eigenvalues()[i]));
    }
    out.ihat_sup.push_back(isup);

    // ‖∇_h i·ΛF‖_{L²(h)}: Chern (1,0) and (0,1) parts in the metric h.
    double g2 = 0.0;
    for (int j = 0; j < n; ++j) {
      TwistedField d10 = dz_bg(cur.ihat, j, E.end_mode());
      const TwistedField adj_aj = adjoint(E.a()[static_cast<size_t>(j)]);
      for (long p = 0; p < g.points(); ++p) {
        const MatC alpha = cur.u[static_cast<size_t>(j)][p] - adj_aj[p];
        d10[p] += alpha * cur.ihat[p] - cur.ihat[p] * alpha;
      }
      TwistedField d01 = dbar_endo(E, cur.ihat, j);
      for (long p = 0; p < g.points(); ++p) {
        const MatC Hi = h[p].inverse();
        g2 += w * (h[p] * d10[p] * Hi * d10[p].adjoint()).trace().real();
        g2 += w * (h[p] * d01[p] * Hi * d01[p].adjoint()).trace().real();
      }
    }
    out.grad_ihat_l2.push_back(std::sqrt(std::max(0.0, g2 * g.cell_volume())));
    out.t.push_back(snap.t);
  }
  return out;
}

std::vector<long> concentration_regions(const Bundle& E, const TwistedField& h, double eps_loc,
                                        int radius) {
  const TorusGeometry& g = E.geom();
  std::vector<long> cells;
  if (g.n() < 2) return cells;

  Curvature cur = curvature(E, h, /*full=*/true);
  const int n = g.n();
  const double w = 2.0 / g.vol_scale();
  std::vector<double> density(static_cast<size_t>(g.points()), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const TwistedField& F = cur.comp[static_cast<size_t>(j * n + k)];
      for (long p = 0; p < g.points(); ++p) {
        const MatC Hi = h[p].inverse();
        density[static_cast<size_t>(p)] +=
            w * w * (h[p] * F[p] * Hi * F[p].adjoint()).trace().real();
      }
    }

  // Box sum over ±radius cells in every axis.
  const int N = g.grid();
  for (long p = 0; p < g.points(); ++p) {
    double e = 0.0;
    std::vector<int> base(static_cast<size_t>(g.axes()));
    for (int a = 0; a < g.axes(); ++a) base[static_cast<size_t>(a)] = g.axis_index(p, a);
    std::vector<int> off(static_cast<size_t>(g.axes()), -radius);
    for (;;) {
      long q = 0;
      for (int a = 0; a < g.axes(); ++a) {
        int idx = (base[static_cast<size_t>(a)] + off[static_cast<size_t>(a)] + N) % N;
        q += static_cast<long>(idx) * g.stride(a);
      }
      e += density[static_cast<size_t>(q)];
      int a = 0;
      for (; a < g.axes(); ++a) {
        if (++off[static_cast<size_t>(a)] <= radius) break;
        off[static_cast<size_t>(a)] = -radius;
      }
      if (a == g.axes()) break;
    }
    if (e * g.cell_volume() > eps_loc) cells.push_back(p);
  }
  return cells;
}

std::vector<unsigned char> regions_to_mask(const TorusGeometry& g, const std::vector<long>& cells,
                                           int radius) {
  std::vector<unsigned char> mask(static_cast<size_t>(g.points()), 0);
  const int N = g.grid();
  for (long p : cells) {
    std::vector<int> base(static_cast<size_t>(g.axes()));
    for (int a = 0; a < g.axes(); ++a) base[static_cast<size_t>(a)] = g.axis_index(p, a);
    std::vector<int> off(static_cast<size_t>(g.axes()), -radius);
    for (;;) {
      long q = 0;
      for (int a = 0; a < g.axes(); ++a) {
        int idx = (base[static_cast<size_t>(a)] + off[static_cast<size_t>(a)] + N) % N;
        q += static_cast<long>(idx) * g.stride(a);
      }
      mask[static_cast<size_t>(q)] = 1;
      int a = 0;
      for (; a < g.axes(); ++a) {
        if (++off[static_cast<size_t>(a)] <= radius) break;
        off[static_cast<size_t>(a)] = -radius;
      }
      if (a == g.axes()) break;
    }
  }
  return mask;
}

}  // namespace hef
