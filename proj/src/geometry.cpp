#include "uhlmann/geometry.hpp"

#include <cmath>
#include <string>

namespace uhlmann {

Spectrum spectral_decompose(const ModelPoint& point, double rank_tol) {
  if (rank_tol <= 0) {
    throw Error(errc::invalid_argument, "rank_tol must be positive");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(point.rho);
  if (solver.info() != Eigen::Success) {
    throw Error(errc::eigensolver_failure, "eigendecomposition of rho did not converge");
  }
  const int d = static_cast<int>(point.rho.rows());

  Spectrum out;
  out.rank_tol = rank_tol;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = ComplexMatrix(d, d);
  for (int c = 0; c < d; ++c) out.eigenvectors.col(c) = solver.eigenvectors().col(d - 1 - c);

  // Deterministic phase: rotate each column so its largest-magnitude
  // component (lowest index on ties) becomes real positive.
  for (int c = 0; c < d; ++c) {
    int pivot = 0;
    double best = std::abs(out.eigenvectors(0, c));
    for (int r = 1; r < d; ++r) {
      const double mag = std::abs(out.eigenvectors(r, c));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    const Complex z = out.eigenvectors(pivot, c);
    if (best > 0.0) out.eigenvectors.col(c) *= std::conj(z) / best;
  }

  const double threshold = rank_tol * std::max(out.eigenvalues(0), 0.0);
  out.rank = 0;
  while (out.rank < d && out.eigenvalues(out.rank) > threshold) ++out.rank;
  if (out.rank == 0) {
    throw Error(errc::eigensolver_failure, "rho has no eigenvalue above the rank tolerance");
  }

  const auto support = out.eigenvectors.leftCols(out.rank);
  out.support_projector = support * support.adjoint();
  return out;
}

ComplexMatrix solve_g_operator(const Spectrum& spectrum, const ComplexMatrix& drho_mu) {
  const int d = static_cast<int>(spectrum.eigenvalues.size());
  const int r = spectrum.rank;
  const ComplexMatrix& v = spectrum.eigenvectors;

  const ComplexMatrix m = v.adjoint() * drho_mu * v;

  // Fixed-rank condition: d(rho) may not push weight into the kernel.
  double kernel_dev = 0.0;
  for (int l = r; l < d; ++l) {
    for (int k = r; k < d; ++k) kernel_dev = std::max(kernel_dev, std::abs(m(l, k)));
  }
  if (kernel_dev > kKernelTol) {
    throw Error(errc::rank_change,
                "kernel-kernel block of d(rho) has magnitude " + std::to_string(kernel_dev) +
                    "; the parameterization leaves the fixed-rank manifold");
  }

  ComplexMatrix g_eig = ComplexMatrix::Zero(d, d);
  for (int l = 0; l < d; ++l) {
    for (int k = 0; k < d; ++k) {
      if (l >= r && k >= r) continue;  // unconstrained by the ansatz; minimal-norm convention
      g_eig(l, k) = m(l, k) / (spectrum.eigenvalues(l) + spectrum.eigenvalues(k));
    }
  }

  ComplexMatrix g = v * g_eig * v.adjoint();
  g = 0.5 * (g + g.adjoint()).eval();
  return g;
}

BuresMetric bures_metric(const Spectrum& spectrum, const std::vector<ComplexMatrix>& g_ops) {
  const int p = static_cast<int>(g_ops.size());
  const int d = static_cast<int>(spectrum.eigenvalues.size());
  const int r = spectrum.rank;
  const ComplexMatrix& v = spectrum.eigenvectors;

  std::vector<ComplexMatrix> g_eig(g_ops.size());
  for (int mu = 0; mu < p; ++mu) {
    g_eig[static_cast<std::size_t>(mu)] = v.adjoint() * g_ops[static_cast<std::size_t>(mu)] * v;
  }

  BuresMetric out;
  out.g = RealMatrix::Zero(p, p);
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = mu; nu < p; ++nu) {
      const ComplexMatrix& a = g_eig[static_cast<std::size_t>(mu)];
      const ComplexMatrix& b = g_eig[static_cast<std::size_t>(nu)];
      Complex acc(0.0, 0.0);
      // tr(rho {G_mu, G_nu}/2) with eigenvalues below the rank cut treated
      // as exactly zero, so the kernel-kernel convention cannot leak in.
      for (int l = 0; l < r; ++l) {
        Complex diag(0.0, 0.0);
        for (int k = 0; k < d; ++k) diag += a(l, k) * b(k, l) + b(l, k) * a(k, l);
        acc += spectrum.eigenvalues(l) * 0.5 * diag;
      }
      out.g(mu, nu) = acc.real();
      out.g(nu, mu) = acc.real();
    }
  }

  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(out.g);
  if (solver.info() != Eigen::Success) {
    throw Error(errc::eigensolver_failure, "eigendecomposition of the metric failed");
  }
  const double min_eig = solver.eigenvalues().minCoeff();
  const double max_eig = solver.eigenvalues().maxCoeff();
  if (min_eig <= kMetricTol) {
    throw Error(errc::degenerate_metric,
                "Bures metric is degenerate (min eigenvalue " + std::to_string(min_eig) + ")");
  }
  out.g_inv = solver.eigenvectors() * solver.eigenvalues().cwiseInverse().asDiagonal() *
              solver.eigenvectors().transpose();
  out.condition_number = max_eig / min_eig;
  out.qfi = 4.0 * out.g;
  return out;
}

std::vector<ComplexMatrix> raise_indices(const std::vector<ComplexMatrix>& g_ops,
                                         const RealMatrix& metric_inv) {
  const int p = static_cast<int>(g_ops.size());
  if (metric_inv.rows() != p || metric_inv.cols() != p) {
    throw Error(errc::invalid_argument, "metric_inv size does not match the operator count");
  }
  std::vector<ComplexMatrix> raised(g_ops.size());
  for (int mu = 0; mu < p; ++mu) {
    ComplexMatrix acc = ComplexMatrix::Zero(g_ops[0].rows(), g_ops[0].cols());
    for (int alpha = 0; alpha < p; ++alpha) {
      acc += metric_inv(mu, alpha) * g_ops[static_cast<std::size_t>(alpha)];
    }
    raised[static_cast<std::size_t>(mu)] = std::move(acc);
  }
  return raised;
}

GeometryPoint compute_geometry(const Spectrum& spectrum, const std::vector<ComplexMatrix>& drho) {
  GeometryPoint out;
  out.g_ops.reserve(drho.size());
  for (const ComplexMatrix& dm : drho) out.g_ops.push_back(solve_g_operator(spectrum, dm));
  BuresMetric metric = bures_metric(spectrum, out.g_ops);
  out.metric = std::move(metric.g);
  out.metric_inv = std::move(metric.g_inv);
  out.qfi = std::move(metric.qfi);
  out.condition_number = metric.condition_number;
  out.g_ops_raised = raise_indices(out.g_ops, out.metric_inv);
  return out;
}

}  // namespace uhlmann
