#include "hef/destabilizer.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hef/random_fields.hpp"

namespace hef {

namespace {

double sup_op_norm_masked(const TwistedField& f, const std::vector<unsigned char>& mask) {
  if (mask.empty()) return sup_op_norm(f);
  double mx = 0.0;
  for (long p = 0; p < f.geom->points(); ++p) {
    if (mask[static_cast<size_t>(p)]) continue;
    Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (f[p] + f[p].adjoint().eval()));
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      mx = std::max(mx, std::abs(es.eigenvalues()[i]));
  }
  return mx;
}

// Spectral power for strictly positive fields (no clamping; internal use).
TwistedField positive_power(const TwistedField& h, double p) {
  TwistedField out(*h.geom, h.row_deg, h.col_deg);
  const int r = h.rows();
  for (long q = 0; q < h.geom->points(); ++q) {
    Eigen::SelfAdjointEigenSolver<MatC> es(h[q]);
    VecR lam = es.eigenvalues();
    MatC D = MatC::Zero(r, r);
    for (int i = 0; i < r; ++i) {
      if (!(lam[i] > 0.0))
        throw std::domain_error("positive_power: field is not strictly positive");
      D(i, i) = std::pow(lam[i], p);
    }
    out[q] = es.eigenvectors() * D * es.eigenvectors().adjoint();
  }
  return out;
}

// Pointwise |λ|_max of the h-self-adjoint field X (eigenvalues are real).
double op_norm_in_metric(const MatC& X, const MatC& h) {
  const MatC hX = h * X;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatC> es(0.5 * (hX + hX.adjoint().eval()), h);
  double mx = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    mx = std::max(mx, std::abs(es.eigenvalues()[i]));
  return mx;
}

}  // namespace

TwistedField normalize_blowup(const TwistedField& h) {
  const double s = sup_op_norm(h);
  if (!(s > 0.0)) throw std::invalid_argument("normalize_blowup: zero field");
  TwistedField out(*h.geom, h.row_deg, h.col_deg);
  for (long p = 0; p < h.geom->points(); ++p) out[p] = h[p] / s;
  return out;
}

LimitEndo limit_endo(const std::vector<Snapshot>& snaps, const std::vector<unsigned char>& mask,
                     double delta_conv) {
  if (snaps.size() < 3) throw std::invalid_argument("limit_endo: need at least 3 snapshots");

  LimitEndo out;
  out.mask = mask;
  TwistedField prev = normalize_blowup(snaps.front().h);
  for (size_t k = 1; k < snaps.size(); ++k) {
    TwistedField cur = normalize_blowup(snaps[k].h);
    out.gaps.push_back(sup_op_norm_masked(cur - prev, mask));
    prev = std::move(cur);
  }
  out.h_inf = std::move(prev);

  const size_t window = std::min<size_t>(5, out.gaps.size());
  bool decreasing = true;
  for (size_t i = out.gaps.size() - window; i + 1 < out.gaps.size(); ++i)
    if (out.gaps[i + 1] > out.gaps[i] * (1.0 + 1e-9) + 1e-15) decreasing = false;
  out.converged = decreasing && out.gaps.back() < delta_conv;
  if (!out.converged) {
    std::ostringstream msg;
    msg << "no limit detected; sup-norm gaps:";
    for (double g : out.gaps) msg << " " << g;
    throw std::runtime_error(msg.str());
  }
  return out;
}

TwistedField sigma_power(const TwistedField& h, double sigma) {
  if (!(sigma > 0.0) || sigma > 1.0)
    throw std::invalid_argument("sigma_power: sigma must lie in (0, 1]");
  TwistedField out(*h.geom, h.row_deg, h.col_deg);
  const int r = h.rows();
  for (long q = 0; q < h.geom->points(); ++q) {
    Eigen::SelfAdjointEigenSolver<MatC> es(h[q]);
    VecR lam = es.eigenvalues();
    MatC D = MatC::Zero(r, r);
    for (int i = 0; i < r; ++i) {
      double v = lam[i];
      if (v < -1e-9) throw std::domain_error("sigma_power: negative eigenvalue");
      if (v < 0.0) v = 0.0;
      D(i, i) = std::pow(v, sigma);
    }
    out[q] = es.eigenvectors() * D * es.eigenvectors().adjoint();
  }
  return out;
}

std::vector<double> default_sigma_schedule() {
  std::vector<double> s;
  for (int k = 1; k <= 20; ++k) s.push_back(std::ldexp(1.0, -k));
  return s;
}

ProjectionField projection_pi(const TwistedField& h_inf, const std::vector<double>& schedule,
                              double tau, const std::vector<unsigned char>& mask) {
  if (schedule.size() < 2 || !(tau > 0.0))
    throw std::invalid_argument("projection_pi: need a schedule of ≥ 2 sigmas and tau > 0");
  const TorusGeometry& g = *h_inf.geom;
  const int r = h_inf.rows();
  const double sig1 = schedule.back();          // smallest σ
  const double sig2 = 2.0 * sig1;               // one schedule notch up
  // Eigenvalues at or below this floor are treated as exact zeros by the
  // σ-route (the raw power λ^σ tends to 1 for every positive λ, so the
  // pointwise limit distinguishes only numerical zeros).
  const double zero_floor = 1e-9;

  ProjectionField out;
  out.tau = tau;
  out.pi = TwistedField(g, h_inf.row_deg, h_inf.col_deg);
  out.exceptional.assign(static_cast<size_t>(g.points()), 0);

  std::vector<int> counts(static_cast<size_t>(g.points()), 0);
  std::vector<Eigen::SelfAdjointEigenSolver<MatC>> eigs;
  eigs.reserve(static_cast<size_t>(g.points()));
  std::map<int, long> histogram;
  for (long p = 0; p < g.points(); ++p) {
    eigs.emplace_back(h_inf[p]);
    int k = 0;
    for (int i = 0; i < r; ++i)
      if (eigs.back().eigenvalues()[i] < tau) ++k;
    counts[static_cast<size_t>(p)] = k;
    if (mask.empty() || !mask[static_cast<size_t>(p)]) ++histogram[k];
  }

  long best = -1, total = 0;
  for (const auto& [k, cnt] : histogram) {
    total += cnt;
    if (cnt > best) {
      best = cnt;
      out.k = k;
    }
  }
  if (total == 0 || static_cast<double>(best) < 0.99 * static_cast<double>(total)) {
    std::ostringstream msg;
    msg << "projection_pi: no stable rank plateau; kernel-dimension histogram:";
    for (const auto& [k, cnt] : histogram) msg << " dim " << k << " x" << cnt;
    throw std::runtime_error(msg.str());
  }

  for (long p = 0; p < g.points(); ++p) {
    const auto& es = eigs[static_cast<size_t>(p)];
    MatC pi = MatC::Zero(r, r);
    for (int i = 0; i < r; ++i)
      if (es.eigenvalues()[i] < tau)
        pi += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    out.pi[p] = pi;
    if (counts[static_cast<size_t>(p)] != out.k) out.exceptional[static_cast<size_t>(p)] = 1;

    if (!mask.empty() && mask[static_cast<size_t>(p)]) continue;
    bool separated = true;
    for (int i = 0; i < r; ++i) {
      const double lam = es.eigenvalues()[i];
      if (lam >= zero_floor && lam <= 10.0 * tau) separated = false;
    }
    if (!separated) continue;
    // Richardson-extrapolated σ-limit of I − h∞^σ with zero-floor clamping.
    MatC pi_s1 = MatC::Identity(r, r), pi_s2 = MatC::Identity(r, r);
    for (int i = 0; i < r; ++i) {
      const double lam = std::max(0.0, es.eigenvalues()[i]);
      const double l1 = lam <= zero_floor ? 0.0 : std::pow(lam, sig1);
      const double l2 = lam <= zero_floor ? 0.0 : std::pow(lam, sig2);
      const MatC vv = es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
      pi_s1 -= l1 * vv;
      pi_s2 -= l2 * vv;
    }
    const MatC richardson = 2.0 * pi_s1 - pi_s2;
    const double diff = (richardson - pi).cwiseAbs().maxCoeff();
    out.sigma_agreement = std::max(out.sigma_agreement, diff);
  }
  return out;
}

Membership multiplier_membership(const TwistedField& s, const std::vector<Snapshot>& snaps,
                                 const TwistedField& h_inf, double delta_mem) {
  if (snaps.size() < 3)
    throw std::invalid_argument("multiplier_membership: need at least 3 snapshots");
  Membership out;
  TwistedField id_metric(*s.geom, s.row_deg, s.row_deg);
  for (long p = 0; p < s.geom->points(); ++p)
    id_metric[p] = MatC::Identity(s.rows(), s.rows());

  const double n0 = l2_norm_section(s, id_metric);
  if (n0 < 1e-14) {
    out.by_integral = out.by_kernel = true;
    return out;
  }
  TwistedField sn(*s.geom, s.row_deg, s.col_deg);
  for (long p = 0; p < s.geom->points(); ++p) sn[p] = s[p] / n0;

  for (const Snapshot& snap : snaps) {
    const TwistedField hk = normalize_blowup(snap.h);
    const double v = l2_norm_section(sn, hk);
    out.series.push_back(v * v);
  }
  bool decreasing = true;
  for (size_t i = 0; i + 1 < out.series.size(); ++i)
    if (out.series[i + 1] > out.series[i] * (1.0 + 1e-6) + 1e-14) decreasing = false;
  out.by_integral = decreasing && out.series.back() < delta_mem;

  out.kernel_norm = l2_norm_section(matmul(h_inf, sn), id_metric);
  out.by_kernel = out.kernel_norm < delta_mem;
  return out;
}

std::vector<TwistedField> membership_probe_sections(const Bundle& E, const TwistedField& pi,
                                                    int count, std::uint64_t seed) {
  const TorusGeometry& g = E.geom();
  const std::vector<int> row_deg = E.blocks().index_degrees();
  const std::vector<int> col_deg{0};
  SplitMix64 rng{seed};
  std::vector<TwistedField> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const TwistedField s = random_field(g, row_deg, col_deg, 2, 1.0, rng);
    TwistedField probe(g, row_deg, col_deg);
    const int kind = i % 3;
    for (long p = 0; p < g.points(); ++p) {
      const MatC in_sub = pi[p] * s[p];
      switch (kind) {
        case 0: probe[p] = in_sub; break;            // near-kernel component
        case 1: probe[p] = s[p] - in_sub; break;     // complement component
        default: probe[p] = s[p]; break;             // mixed
      }
    }
    out.push_back(std::move(probe));
  }
  return out;
}

double projection_algebra_defect(const TwistedField& pi, const std::vector<unsigned char>& mask) {
  double worst = 0.0;
  for (long p = 0; p < pi.geom->points(); ++p) {
    if (!mask.empty() && mask[static_cast<size_t>(p)]) continue;
    const MatC& P = pi[p];
    const double idem = (P * P - P).cwiseAbs().maxCoeff();
    const double herm = (P.adjoint() - P).cwiseAbs().maxCoeff();
    worst = std::max({worst, idem, herm});
  }
  return worst;
}

DestabReport destabilize_verdict(const Bundle& E, const FlowTrajectory& traj,
                                 const DestabParams& params) {
  if (traj.verdict != FlowVerdict::BlowUp)
    throw std::invalid_argument("destabilize_verdict: trajectory verdict is not BlowUp");

  std::vector<unsigned char> mask;
  if (E.geom().n() >= 2) {
    const std::vector<long> cells = concentration_regions(
        E, traj.snapshots.back().h, params.eps_loc, params.radius);
    if (!cells.empty()) mask = regions_to_mask(E.geom(), cells, params.radius);
  }

  DestabReport rep;
  rep.limit = limit_endo(traj.snapshots, mask, params.delta_conv);
  rep.proj = projection_pi(rep.limit.h_inf, params.sigma_schedule, params.tau, mask);
  if (rep.proj.k <= 0 || rep.proj.k >= E.rank())
    throw std::runtime_error("destabilize_verdict: projection rank must satisfy 0 < k < rank");
  rep.mu_sub = slope_subsheaf(E, rep.proj.pi, rep.proj.k, mask);
  rep.mu_bundle = E.mu();
  rep.slope_ok = rep.mu_sub >= rep.mu_bundle - params.tol_slope;
  return rep;
}

HarnackResult harnack_check(const Bundle& E, const TwistedField& h) {
  const TorusGeometry& g = E.geom();
  HarnackResult out;

  double tr_int = 0.0, tr_sup = 0.0;
  for (long p = 0; p < g.points(); ++p) {
    const double tr = h[p].trace().real();
    tr_int += tr;
    tr_sup = std::max(tr_sup, tr);
  }
  tr_int *= g.cell_volume();
  out.c = tr_int / (2.0 * kPi * tr_sup);

  const TwistedField ihat0 = curvature(E, E.identity_metric()).ihat;
  const TwistedField ihath = curvature(E, h).ihat;
  double Q = 0.0;
  for (long p = 0; p < g.points(); ++p) {
    Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (ihat0[p] + ihat0[p].adjoint().eval()));
    double q0 = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      q0 = std::max(q0, std::abs(es.eigenvalues()[i]));
    const double qh = op_norm_in_metric(ihath[p], h[p]);
    Q = std::max(Q, 0.5 * (q0 + qh));
  }
  out.Q = Q;
  out.A = std::max(0.0, -g.greens_min());
  out.C = 2.0 * kPi * out.A * out.Q;
  out.bound = std::exp(-out.C);
  out.ok = out.c >= out.bound * (1.0 - 1e-9);
  return out;
}

UyResult uy_inequality_check(const Bundle& E, const TwistedField& h, double sigma) {
  if (!(sigma > 0.0) || sigma > 1.0)
    throw std::invalid_argument("uy_inequality_check: sigma must lie in (0, 1]");
  const TorusGeometry& g = E.geom();
  const int n = g.n();
  const double w = 2.0 / g.vol_scale();

  UyResult out;
  TwistedForm d_h;
  for (int j = 0; j < n; ++j) d_h.push_back(d10_endo_bg(E, h, j));

  if (sigma == 1.0) {
    // Both sides reduce to the same expression; the equality case is exact.
    out.equality_case = true;
    double mx = 0.0;
    for (long p = 0; p < g.points(); ++p) {
      const MatC hi = h[p].inverse();
      double v = 0.0;
      for (int j = 0; j < n; ++j) {
        const MatC& M = d_h[static_cast<size_t>(j)][p];
        v += w * (M.adjoint() * hi * M).trace().real();
      }
      mx = std::max(mx, std::abs(v));
    }
    out.max_violation = 0.0;
    out.scale = 2.0 * mx;
    return out;
  }

  const TwistedField hs = positive_power(h, sigma);
  const TwistedField hms = positive_power(h, -sigma);
  TwistedForm d_hs;
  for (int j = 0; j < n; ++j) d_hs.push_back(d10_endo_bg(E, hs, j));

  double mv = std::numeric_limits<double>::lowest();
  for (long p = 0; p < g.points(); ++p) {
    const MatC hi = h[p].inverse();
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < n; ++j) {
      const MatC& Ms = d_hs[static_cast<size_t>(j)][p];
      const MatC& M = d_h[static_cast<size_t>(j)][p];
      lhs += w * (Ms.adjoint() * hms[p] * Ms).trace().real();
      rhs += w * (Ms.adjoint() * hi * M).trace().real();
    }
    mv = std::max(mv, lhs - rhs);
    out.scale = std::max(out.scale, std::abs(lhs) + std::abs(rhs));
  }
  out.max_violation = mv;
  return out;
}

EnergyIdentity energy_identity_defect(const Bundle& E, const TwistedField& h) {
  const TorusGeometry& g = E.geom();
  const int n = g.n();
  const double w = 2.0 / g.vol_scale();

  EnergyIdentity out;
  double lhs = 0.0;
  for (int j = 0; j < n; ++j) {
    TwistedField M = dz_bg(h, j, E.end_mode());
    const TwistedField adj_aj = adjoint(E.a()[static_cast<size_t>(j)]);
    for (long p = 0; p < g.points(); ++p) {
      M[p] -= adj_aj[p] * h[p] - h[p] * adj_aj[p];
      lhs += w * (M[p].adjoint() * h[p].inverse() * M[p]).trace().real();
    }
  }
  out.lhs = lhs * g.cell_volume();

  const TwistedField ihat0 = curvature(E, E.identity_metric()).ihat;
  const TwistedField ihath = curvature(E, h).ihat;
  double rhs = 0.0;
  for (long p = 0; p < g.points(); ++p)
    rhs += (h[p] * (ihath[p] - ihat0[p])).trace().real();
  out.rhs = rhs * g.cell_volume();
  out.defect = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace hef
