#pragma once

#include <optional>
#include <vector>

#include "uhlmann/geometry.hpp"

namespace uhlmann {

/// Partial commutativity condition over the support of rho, evaluated as the
/// support-projected SLD commutator norm: the quadratic form of an
/// anti-Hermitian operator vanishes on a subspace iff the projected operator
/// vanishes, so P [L_mu, L_nu] P = 0 is equivalent to the statewise
/// condition.
struct PccResult {
  bool satisfied = true;
  double residual = 0.0;  // max over pairs of max|P [L_mu, L_nu] P|
  double pcc_tol = 1e-9;
};

inline constexpr double kPccTol = 1e-9;

PccResult pcc_check(const Spectrum& spectrum, const std::vector<ComplexMatrix>& g_ops,
                    double pcc_tol = kPccTol);

/// Incompatibility factor for two-parameter models:
/// gamma = ||sqrt(rho) [L_1, L_2] sqrt(rho)||_1^2 / (4 |K|), Schatten-1 norm
/// by dense SVD. For rank-1 states the pure simplification
/// |<psi|[L_1,L_2]|psi>|^2 / (4 |K|) is computed as well and must agree to
/// 1e-10. WrongArity unless exactly two parameters.
double incompatibility_gamma(const Spectrum& spectrum, const std::vector<ComplexMatrix>& g_ops,
                             const RealMatrix& qfi);

enum class TradeoffVerdict { feasible, infeasible, outside_domain };

/// A candidate covariance matrix for the two-parameter precision tradeoff.
struct TradeoffQuery {
  RealMatrix covariance;  // 2x2 symmetric PSD
  int repetitions = 1;    // n
  RealMatrix qfi;         // 2x2 K
  double gamma = 0.0;     // in [0, 1]
};

/// Evaluates sqrt(|nEK - I|) + sqrt((1-gamma)|nEK|) >= 1. When either
/// determinant is negative the inequality's domain is left and the verdict is
/// outside_domain; determinants within roundoff of zero are clamped to zero.
TradeoffVerdict tradeoff_feasible(const TradeoffQuery& query);

struct BoundaryPoint {
  double v1 = 0.0;
  std::optional<double> v2_min;  // empty = NoSolution for this v1
};

/// Chart in which K is diagonal; axes are ordered to align with the input
/// parameter axes (a numerically diagonal K keeps its entries bit-for-bit).
struct QfiChart {
  RealVector eigenvalues;  // k1, k2 in chart order
  RealMatrix rotation;     // K = R diag(k) R^T
};

QfiChart qfi_chart(const RealMatrix& qfi);

struct BoundaryCurve {
  QfiChart chart;
  std::vector<BoundaryPoint> points;
};

/// Traces the tradeoff equality curve with diagonal E = diag(v1, v2) in the
/// chart where K is diagonal. For each v1 the smallest feasible v2 is found
/// by bisection to relative tolerance 1e-10; v1 below its single-parameter
/// bound yields an empty v2_min (NoSolution).
BoundaryCurve tradeoff_boundary_curve(const RealMatrix& qfi, double gamma, int repetitions,
                                      const std::vector<double>& v1_grid);

}  // namespace uhlmann
