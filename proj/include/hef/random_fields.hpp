#pragma once

// Seeded random smooth fields with exact continuum definitions.
//
// Every generator draws its random coefficients in an order that depends only
// on the seed, the band limit, and the twist pattern — never on the grid — and
// then evaluates a closed-form expression at the grid points.  Sampling the
// same seed on two different grid resolutions therefore yields two samplings
// of the *same* smooth field, which is what refinement-rate tests require.
//
// Twisted entries (automorphy weight t != 0) are carried by a theta-type
// factor v_t(x1, y1) that satisfies the wrap rule
//     v_t(x1, y1 + L1) = e^{-2 pi i t x1 / L1} v_t(x1, y1),
// normalized so that sup |v_t| = 1.  Untwisted entries use band-limited
// trigonometric polynomials with unit coefficient-sum, so each generated
// entry is bounded by the requested amplitude.

#include <vector>

#include "hef/torus_geometry.hpp"
#include "hef/twisted_field.hpp"
#include "hef/types.hpp"

namespace hef {

// Weight-t carrier at a point of the first torus factor (t = 0 gives 1).
// Sup-normalized: |value| <= 1 everywhere, with equality attained.
cplx theta_carrier(double x1, double y1, int t, double L1);

// Random field with the given twist pattern; entry (i,j) is
// amp * P_ij(x) * v_{t_ij}(x1,y1) with P_ij a random band-limited
// trigonometric polynomial normalized so sup|P_ij| <= 1.
TwistedField random_field(const TorusGeometry& g, const std::vector<int>& row_deg,
                          const std::vector<int>& col_deg, int band, double amp, SplitMix64& rng);

// Random Hermitian endomorphism with the End(E) twist pattern induced by
// `deg` (entry twist t_ij = deg[i] - deg[j]); real diagonal. Entries bounded
// by amp, so the operator norm is at most rank * amp.
TwistedField random_hermitian(const TorusGeometry& g, const std::vector<int>& deg, int band,
                              double amp, SplitMix64& rng);

// Identity plus a random Hermitian perturbation: positive definite whenever
// amp * rank < 1 (callers should stay well inside that).
TwistedField random_metric(const TorusGeometry& g, const std::vector<int>& deg, int band,
                           double amp, SplitMix64& rng);

// Random real-valued untwisted scalar (1x1 field), sup bounded by amp.
TwistedField random_real_scalar(const TorusGeometry& g, int band, double amp, SplitMix64& rng);

// Project an endomorphism-shaped field onto trace-free matrices pointwise.
TwistedField traceless_part(const TwistedField& f);

}  // namespace hef
