#include "uhlmann/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uhlmann {

namespace {

double det2(const RealMatrix& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

/// Determinant of `m` where each entry carries an absolute uncertainty of
/// roughly eps * noise(i, j). Values within that propagated uncertainty of
/// zero are snapped to zero, so boundary cases (e.g. E = K^-1 / n) stay
/// inside the inequality's domain.
double det2_clamped(const RealMatrix& m, const RealMatrix& noise) {
  const double det = det2(m);
  const double tol = 1e-13 * (std::abs(m(1, 1)) * noise(0, 0) + std::abs(m(0, 0)) * noise(1, 1) +
                              std::abs(m(0, 1)) * noise(1, 0) + std::abs(m(1, 0)) * noise(0, 1));
  return std::abs(det) <= tol ? 0.0 : det;
}

}  // namespace

PccResult pcc_check(const Spectrum& spectrum, const std::vector<ComplexMatrix>& g_ops,
                    double pcc_tol) {
  if (pcc_tol <= 0) {
    throw Error(errc::invalid_argument, "pcc_tol must be positive");
  }
  const int p = static_cast<int>(g_ops.size());
  const ComplexMatrix& proj = spectrum.support_projector;

  PccResult out;
  out.pcc_tol = pcc_tol;
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = mu + 1; nu < p; ++nu) {
      // L = 2 G, so [L_mu, L_nu] = 4 [G_mu, G_nu].
      const ComplexMatrix comm =
          4.0 * (g_ops[static_cast<std::size_t>(mu)] * g_ops[static_cast<std::size_t>(nu)] -
                 g_ops[static_cast<std::size_t>(nu)] * g_ops[static_cast<std::size_t>(mu)]);
      out.residual = std::max(out.residual, max_abs(ComplexMatrix(proj * comm * proj)));
    }
  }
  out.satisfied = out.residual <= pcc_tol;
  return out;
}

double incompatibility_gamma(const Spectrum& spectrum, const std::vector<ComplexMatrix>& g_ops,
                             const RealMatrix& qfi) {
  if (g_ops.size() != 2) {
    throw Error(errc::wrong_arity, "incompatibility factor requires exactly two parameters, got " +
                                       std::to_string(g_ops.size()));
  }
  const double det_k = det2(qfi);
  if (det_k <= kMetricTol) {
    throw Error(errc::degenerate_metric,
                "QFI determinant " + std::to_string(det_k) + " is not positive");
  }

  const int d = static_cast<int>(spectrum.eigenvalues.size());
  const ComplexMatrix& v = spectrum.eigenvectors;
  RealVector sqrt_lambda = RealVector::Zero(d);
  for (int k = 0; k < spectrum.rank; ++k) sqrt_lambda(k) = std::sqrt(spectrum.eigenvalues(k));
  const ComplexMatrix sqrt_rho = v * sqrt_lambda.asDiagonal() * v.adjoint();

  const ComplexMatrix comm_l = 4.0 * (g_ops[0] * g_ops[1] - g_ops[1] * g_ops[0]);
  const ComplexMatrix x = sqrt_rho * comm_l * sqrt_rho;

  Eigen::JacobiSVD<ComplexMatrix> svd(x);
  const double schatten1 = svd.singularValues().sum();
  const double gamma = schatten1 * schatten1 / (4.0 * det_k);

  if (spectrum.rank == 1) {
    const ComplexVector psi = v.col(0);
    const Complex expect = psi.dot(comm_l * psi);
    const double gamma_pure = std::norm(expect) / (4.0 * det_k);
    if (std::abs(gamma - gamma_pure) > 1e-10) {
      throw Error(errc::numerical_check_failed,
                  "pure-state gamma simplification deviates by " +
                      std::to_string(std::abs(gamma - gamma_pure)));
    }
  }
  return gamma;
}

TradeoffVerdict tradeoff_feasible(const TradeoffQuery& query) {
  if (query.covariance.rows() != 2 || query.covariance.cols() != 2 || query.qfi.rows() != 2 ||
      query.qfi.cols() != 2) {
    throw Error(errc::wrong_arity, "tradeoff inequality is defined for 2x2 matrices");
  }
  if (query.repetitions < 1) {
    throw Error(errc::invalid_argument, "repetitions must be positive");
  }
  if (query.gamma < -1e-10 || query.gamma > 1.0 + 1e-10) {
    throw Error(errc::invalid_argument, "gamma must lie in [0, 1]");
  }
  if (max_abs(RealMatrix(query.covariance - query.covariance.transpose())) >
      1e-12 * (1.0 + query.covariance.cwiseAbs().maxCoeff())) {
    throw Error(errc::invalid_argument, "covariance matrix must be symmetric");
  }
  if (query.covariance.trace() < 0.0 || det2(query.covariance) < -1e-12) {
    throw Error(errc::invalid_argument, "covariance matrix must be positive semidefinite");
  }

  const RealMatrix nek = static_cast<double>(query.repetitions) * query.covariance * query.qfi;
  const RealMatrix noise = nek.cwiseAbs() + RealMatrix::Ones(2, 2);
  const double det_shift = det2_clamped(RealMatrix(nek - RealMatrix::Identity(2, 2)), noise);
  const double det_full = det2_clamped(nek, noise);
  if (det_shift < 0.0 || det_full < 0.0) return TradeoffVerdict::outside_domain;

  const double one_minus_gamma = std::max(0.0, 1.0 - query.gamma);
  const double lhs = std::sqrt(det_shift) + std::sqrt(one_minus_gamma * det_full);
  return lhs >= 1.0 - 1e-12 ? TradeoffVerdict::feasible : TradeoffVerdict::infeasible;
}

QfiChart qfi_chart(const RealMatrix& qfi) {
  QfiChart out;
  if (qfi.rows() != 2 || qfi.cols() != 2) {
    throw Error(errc::wrong_arity, "chart construction is defined for 2x2 QFI matrices");
  }
  if (max_abs(RealMatrix(qfi - qfi.transpose())) > 1e-12 * (1.0 + qfi.cwiseAbs().maxCoeff())) {
    throw Error(errc::invalid_argument, "QFI matrix must be symmetric");
  }
  if (std::abs(qfi(0, 1)) == 0.0 && std::abs(qfi(1, 0)) == 0.0) {
    // Already diagonal: keep the input axes and values bit-for-bit.
    out.eigenvalues = RealVector(2);
    out.eigenvalues << qfi(0, 0), qfi(1, 1);
    out.rotation = RealMatrix::Identity(2, 2);
  } else {
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(qfi);
    if (solver.info() != Eigen::Success) {
      throw Error(errc::eigensolver_failure, "QFI eigendecomposition failed");
    }
    RealVector eig = solver.eigenvalues();
    RealMatrix rot = solver.eigenvectors();
    // Order chart axes to align with the input axes.
    if (std::abs(rot(0, 0)) < std::abs(rot(0, 1))) {
      std::swap(eig(0), eig(1));
      rot.col(0).swap(rot.col(1));
    }
    for (int c = 0; c < 2; ++c) {
      if (rot(c, c) < 0) rot.col(c) *= -1.0;
    }
    out.eigenvalues = eig;
    out.rotation = rot;
  }
  if (out.eigenvalues.minCoeff() <= kMetricTol) {
    throw Error(errc::degenerate_metric, "QFI matrix is not positive definite");
  }
  return out;
}

BoundaryCurve tradeoff_boundary_curve(const RealMatrix& qfi, double gamma, int repetitions,
                                      const std::vector<double>& v1_grid) {
  BoundaryCurve out;
  out.chart = qfi_chart(qfi);
  const double k2 = out.chart.eigenvalues(1);
  const double n = static_cast<double>(repetitions);

  RealMatrix k_chart = RealMatrix::Zero(2, 2);
  k_chart(0, 0) = out.chart.eigenvalues(0);
  k_chart(1, 1) = k2;

  auto feasible = [&](double v1, double v2) {
    TradeoffQuery q;
    q.covariance = RealMatrix::Zero(2, 2);
    q.covariance(0, 0) = v1;
    q.covariance(1, 1) = v2;
    q.repetitions = repetitions;
    q.qfi = k_chart;
    q.gamma = gamma;
    return tradeoff_feasible(q) == TradeoffVerdict::feasible;
  };

  for (double v1 : v1_grid) {
    BoundaryPoint point;
    point.v1 = v1;
    if (v1 > 0.0) {
      // Below v2 = 1/(n k2) the shifted determinant is nonpositive, so the
      // feasible set (upward closed in v2) can only start at or above it.
      const double edge = 1.0 / (n * k2);
      if (feasible(v1, edge)) {
        point.v2_min = edge;
      } else {
        double lo = edge;
        double hi = edge;
        bool found = false;
        for (int round = 0; round < 120 && !found; ++round) {
          hi = hi * 2.0;
          found = feasible(v1, hi);
        }
        if (found) {
          while (hi - lo > 1e-10 * hi) {
            const double mid = 0.5 * (lo + hi);
            if (feasible(v1, mid)) {
              hi = mid;
            } else {
              lo = mid;
            }
          }
          point.v2_min = hi;
        }
      }
    }
    out.points.push_back(point);
  }
  return out;
}

}  // namespace uhlmann
