#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uhlmann/geometry.hpp"
#include "uhlmann/model.hpp"

namespace uhlmann {

struct CurvatureDiagnostics {
  int rank = 0;
  double metric_condition_number = 1.0;
  std::optional<double> fd_step;  // set by the finite-difference paths
};

/// Scalar curvature C with its per-pair breakdown. C is nonnegative up to
/// roundoff and equals the sum of pair_terms; pair_terms are symmetric in
/// (mu, nu) and stored for mu != nu (diagonal pairs vanish identically).
struct CurvatureReport {
  double curvature = 0.0;
  std::map<std::pair<int, int>, double> pair_terms;
  std::string method;  // "spectral" | "dual-contraction" | "connection"
  CurvatureDiagnostics diagnostics;
};

/// One component of the dual curvature 2-form, assembled from
/// (d_mu G_nu - d_nu G_mu) - [G_mu, G_nu] with central-difference derivatives
/// of the G operators.
struct DualCurvature {
  int mu = 0;
  int nu = 0;
  ComplexMatrix f_tilde;          // d x d, ambient basis
  double rho_relation_residual = 0.0;  // max |F rho + rho F^dagger|
  double fd_step = 0.0;
};

/// Uhlmann connection data in the spectral purification gauge
/// |Psi> = sum_n sqrt(lambda_n) |phi_n> x |n>. The connection components A_mu
/// act on the r-dimensional ancilla space and are anti-Hermitian; the field
/// strength F = dA + A^A is computed from central differences of A.
struct ConnectionFrame {
  RealVector sqrt_eigenvalues;
  ComplexMatrix eigenvectors;
  std::vector<ComplexMatrix> connection;                    // A_mu, r x r
  std::vector<std::vector<ComplexMatrix>> field_strength;   // F[mu][nu], r x r
  double defining_residual = 0.0;  // connection equation residual after symmetrization
  double antihermiticity_residual = 0.0;
  double fd_step = 0.0;
};

inline constexpr double kDefaultFdStep = 1e-4;
inline constexpr double kMinFdStep = 1e-10;
inline constexpr double kGapTol = 1e-6;

/// Derivative-free spectral formula (the production path):
/// C = - sum_{mu nu} sum_{l,m <= r} lambda_l lambda_m / (lambda_l+lambda_m)^2
///     <phi_l|[G_mu,G_nu]|phi_m><phi_m|[G^mu,G^nu]|phi_l>.
/// Commutator products run over the full d-dimensional space.
CurvatureReport scalar_curvature(const Spectrum& spectrum, const GeometryPoint& geometry);

/// Pure-state reduction, implemented verbatim with the absolute value inside
/// the sum: C = sum_{mu nu} |Im<psi|G_mu G_nu|psi> Im<psi|G^mu G^nu|psi>|.
/// Requires rank 1 (NotPure otherwise).
CurvatureReport scalar_curvature_pure(const Spectrum& spectrum, const GeometryPoint& geometry);

/// Central-difference dual curvature for one parameter pair. Requires full
/// rank at all stencil points (RankChangeError otherwise) and
/// fd_step >= 1e-10 (StepTooSmall). One level of Richardson extrapolation on
/// the dG derivatives is optional.
DualCurvature dual_curvature(const ModelDefinition& model, std::span<const double> coords,
                             int mu, int nu, double fd_step = kDefaultFdStep,
                             bool richardson = false);

/// All unordered pairs mu < nu.
std::vector<DualCurvature> dual_curvature_all(const ModelDefinition& model,
                                              std::span<const double> coords,
                                              double fd_step = kDefaultFdStep,
                                              bool richardson = false);

/// Verification path contracting the dual curvature over the support:
/// C = -1/4 sum_{mu nu} sum_{l,m <= r}
///     <phi_l|F_{mu nu}|phi_m><phi_m|F^{mu nu}|phi_l>.
/// `duals` must hold one entry per unordered pair mu < nu; the antisymmetric
/// completion is implied.
CurvatureReport curvature_via_dual_contraction(const Spectrum& spectrum,
                                               const std::vector<DualCurvature>& duals,
                                               const GeometryPoint& geometry);

/// Explicit Uhlmann connection in the spectral gauge, with eigenvector
/// derivatives from phase-aligned central differences: every stencil frame is
/// aligned to the evaluation point's frame (neighbor phases chosen to
/// maximize the real overlap with the center eigenvectors), which keeps all
/// connection evaluations in one consistent gauge. Requires full rank and
/// eigenvalue gaps >= kGapTol at every stencil point.
ConnectionFrame connection_form(const ModelDefinition& model, std::span<const double> coords,
                                double fd_step = kDefaultFdStep);

/// C = -1/4 sum_{mu nu} tr(F_{mu nu} F^{mu nu}) over the ancilla space.
CurvatureReport curvature_via_connection(const ConnectionFrame& frame,
                                         const GeometryPoint& geometry);

enum class Measure { riemannian, lebesgue };

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int n_steps = 1;
};

/// Midpoint-rule integral of C over the boxed region, weighted by
/// sqrt(det g) (riemannian) or 1 (lebesgue). Per-node failures are rethrown
/// with the node coordinates appended.
double curvature_action(const ModelDefinition& model, const std::vector<GridAxis>& region,
                        Measure measure = Measure::riemannian, double rank_tol = 1e-10);

}  // namespace uhlmann
