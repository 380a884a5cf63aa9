#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hef/trunc_series.hpp"

namespace hef {

// Float-mode gate on relation residuals; the rational ring requires exact
// zeros instead.
inline constexpr double kSeriesResidualGate = 1e-12;

template <class S>
struct GaugeStep {
  TruncSeries<S> B;  // I + F, invertible (constant term I)
  TruncSeries<S> F;  // vanishes at the origin and has no zbar_j-free terms
};

// Solves dbar_j(B) + B*A_j = 0 modulo degree D-1 by the graded fixed-point
// iteration F <- -P_j((I + F) A_j).  The antiderivative P_j raises the
// zbar_j-degree, so each round finalizes one more stratum and the iteration
// is stationary after at most D+1 rounds; no smallness of A_j is needed.
// Requires A_j square and holomorphic in the first p variables.
template <class S>
GaugeStep<S> solve_gauge_step(const TruncSeries<S>& a_j, int j, int p) {
  if (a_j.rows() != a_j.cols())
    throw std::invalid_argument("solve_gauge_step: relation matrix must be square");
  if (j < 0 || j >= a_j.vars())
    throw std::invalid_argument("solve_gauge_step: variable index out of range");
  for (int i = 0; i < p; ++i)
    if (!holomorphic_in(a_j, i))
      throw std::invalid_argument(
          "solve_gauge_step: relation matrix depends on conjugate variable " + std::to_string(i));
  const int d = a_j.degree();
  const int q = a_j.rows();
  const TruncSeries<S> ident = TruncSeries<S>::identity(a_j.vars(), q, d);
  TruncSeries<S> f(a_j.vars(), q, q, d);
  for (int round = 0; round <= d; ++round)
    f = -zbar_antiderivative((ident + f) * a_j, j);
  return {ident + f, std::move(f)};
}

template <class S>
struct FrameResult {
  TruncSeries<S> g;        // holomorphic generators, g = B_total * f
  TruncSeries<S> B_total;  // accumulated invertible gauge
  std::vector<double> stage_residuals;  // relation residual entering each stage
  std::vector<double> final_residuals;  // max |dbar_k g| mod degree D-1 per variable
};

namespace detail {

template <class S>
void require_small(const TruncSeries<S>& resid, int degree_bound, const std::string& where) {
  const double mag = max_abs_up_to(resid, degree_bound);
  const bool ok = ScalarOps<S>::exact ? is_zero_up_to(resid, degree_bound)
                                      : mag <= kSeriesResidualGate;
  if (!ok)
    throw std::runtime_error("holomorphic_frame: residual " + std::to_string(mag) + " at " +
                             where);
}

}  // namespace detail

// Per-variable gauge induction: at stage p the relation matrix for variable p
// is restricted to zbar_0 = ... = zbar_{p-1} = 0 (valid because the current
// generators no longer depend on those variables), the gauge equation is
// solved, and the generators plus the remaining relation matrices are
// transformed by B.  Returns holomorphic generators g with dbar_k(g) = 0
// modulo degree D-1 and the accumulated gauge.  Throws when a stage's
// incoming relation dbar_p(f) = A_p f fails (exactly, in the rational ring).
template <class S>
FrameResult<S> holomorphic_frame(const TruncSeries<S>& f0, std::vector<TruncSeries<S>> a) {
  const int n = f0.vars();
  if (static_cast<int>(a.size()) != n)
    throw std::invalid_argument("holomorphic_frame: need one relation matrix per variable");
  for (const auto& ak : a)
    if (ak.vars() != n || ak.degree() != f0.degree() || ak.rows() != f0.rows() ||
        ak.cols() != f0.rows())
      throw std::invalid_argument("holomorphic_frame: relation matrix shape mismatch");

  const int d = f0.degree();
  TruncSeries<S> f = f0;
  TruncSeries<S> b_total = TruncSeries<S>::identity(n, f0.rows(), d);
  FrameResult<S> out;

  for (int p = 0; p < n; ++p) {
    const TruncSeries<S> ap = restrict_antihol(a[static_cast<size_t>(p)], p);
    const TruncSeries<S> resid = dbar(f, p) - ap * f;
    out.stage_residuals.push_back(max_abs_up_to(resid, d - 1));
    detail::require_small(resid, d - 1,
                          "stage " + std::to_string(p) + " (incoming relation, variable " +
                              std::to_string(p) + ")");

    GaugeStep<S> step = solve_gauge_step(ap, p, p);
    f = step.B * f;
    const TruncSeries<S> b_inv = series_inverse(step.B);
    for (int k = p + 1; k < n; ++k)
      a[static_cast<size_t>(k)] = (dbar(step.B, k) + step.B * a[static_cast<size_t>(k)]) * b_inv;
    b_total = step.B * b_total;
  }

  for (int k = 0; k < n; ++k) {
    const TruncSeries<S> resid = dbar(f, k);
    out.final_residuals.push_back(max_abs_up_to(resid, d - 1));
    detail::require_small(resid, d - 1,
                          "final holomorphy check (variable " + std::to_string(k) + ")");
  }
  out.g = std::move(f);
  out.B_total = std::move(b_total);
  return out;
}

// Recovers relation matrices A_k = (dbar_k f) f^+ through the right inverse
// f^+ = f_adj (f f_adj)^{-1}, which exists when the constant term of f has
// full row rank.  When a relation exists at all, the recovered A_k satisfies
// it modulo degree D-1.
template <class S>
std::vector<TruncSeries<S>> relation_matrix(const TruncSeries<S>& f) {
  const TruncSeries<S> f_adj = adjoint(f);
  const TruncSeries<S> gram = f * f_adj;
  TruncSeries<S> gram_inv;
  try {
    gram_inv = series_inverse(gram);
  } catch (const std::domain_error&) {
    throw std::domain_error(
        "relation_matrix: generators are rank-deficient at the origin; supply the relation "
        "matrices explicitly");
  }
  const TruncSeries<S> f_plus = f_adj * gram_inv;
  std::vector<TruncSeries<S>> a;
  for (int k = 0; k < f.vars(); ++k) a.push_back(dbar(f, k) * f_plus);
  return a;
}

}  // namespace hef
