#pragma once

#include <vector>

#include "uhlmann/model.hpp"
#include "uhlmann/types.hpp"

namespace uhlmann {

/// Eigensystem of rho at one point. Eigenvalues are sorted descending and the
/// eigenvector phases follow a deterministic convention (largest-magnitude
/// component real positive, ties broken by lowest index), so repeated calls
/// are bit-identical.
struct Spectrum {
  RealVector eigenvalues;      // descending
  ComplexMatrix eigenvectors;  // unitary, columns match eigenvalues
  int rank = 0;                // count of eigenvalues above rank_tol * lambda_max
  ComplexMatrix support_projector;
  double rank_tol = 1e-10;     // relative tolerance used for the rank decision

  /// Kernel block starts at this column index.
  bool in_support(int idx) const { return idx < rank; }
};

/// G operators and the Bures metric at one point. K = 4g is stored
/// redundantly for API clarity.
struct GeometryPoint {
  std::vector<ComplexMatrix> g_ops;         // G_mu (Hermitian); SLD L_mu = 2 G_mu
  std::vector<ComplexMatrix> g_ops_raised;  // G^mu = g^{mu alpha} G_alpha
  RealMatrix metric;                        // Bures metric g
  RealMatrix metric_inv;
  RealMatrix qfi;                           // K = 4 g
  double condition_number = 1.0;            // of g
};

/// Kernel-kernel entries of d(rho) larger than this violate the fixed-rank
/// assumption and raise RankChangeError.
inline constexpr double kKernelTol = 1e-8;
/// Metric eigenvalues at or below this raise DegenerateMetric.
inline constexpr double kMetricTol = 1e-12;

Spectrum spectral_decompose(const ModelPoint& point, double rank_tol = 1e-10);

/// Solves d(rho) = G rho + rho G in the eigenbasis:
/// G_{lm} = (drho)_{lm} / (lambda_l + lambda_m) on blocks touching the
/// support, zero on the kernel-kernel block (which the equation does not
/// constrain; no exported quantity depends on it).
ComplexMatrix solve_g_operator(const Spectrum& spectrum, const ComplexMatrix& drho_mu);

struct BuresMetric {
  RealMatrix g;
  RealMatrix g_inv;
  RealMatrix qfi;
  double condition_number = 1.0;
};

/// g_{mu nu} = tr(rho {G_mu, G_nu} / 2) over the support. The inverse is
/// computed by eigendecomposition with reciprocal eigenvalues; a metric
/// eigenvalue <= kMetricTol raises DegenerateMetric rather than
/// pseudo-inverting.
BuresMetric bures_metric(const Spectrum& spectrum, const std::vector<ComplexMatrix>& g_ops);

std::vector<ComplexMatrix> raise_indices(const std::vector<ComplexMatrix>& g_ops,
                                         const RealMatrix& metric_inv);

/// Convenience: all G operators, the metric and raised indices at one point.
GeometryPoint compute_geometry(const Spectrum& spectrum, const std::vector<ComplexMatrix>& drho);

}  // namespace uhlmann
