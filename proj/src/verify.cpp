#include "uhlmann/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace uhlmann {

namespace {

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

VerificationCheck make_pass_fail(std::string name, double residual, double tolerance,
                                 std::string detail = {}) {
  VerificationCheck check;
  check.name = std::move(name);
  check.residual = residual;
  check.tolerance = tolerance;
  check.status = residual <= tolerance ? CheckStatus::passed : CheckStatus::failed;
  check.detail = std::move(detail);
  return check;
}

VerificationCheck make_skipped(std::string name, std::string reason) {
  VerificationCheck check;
  check.name = std::move(name);
  check.status = CheckStatus::skipped;
  check.residual = 0.0;
  check.tolerance = 0.0;
  check.detail = std::move(reason);
  return check;
}

double support_lyapunov_residual(const Spectrum& spectrum, const ComplexMatrix& g,
                                 const ComplexMatrix& rho, const ComplexMatrix& drho) {
  const ComplexMatrix r = g * rho + rho * g - drho;
  const ComplexMatrix& p = spectrum.support_projector;
  const ComplexMatrix q = ComplexMatrix::Identity(rho.rows(), rho.cols()) - p;
  return std::max({max_abs(ComplexMatrix(p * r * p)), max_abs(ComplexMatrix(p * r * q)),
                   max_abs(ComplexMatrix(q * r * p))});
}

RealMatrix deterministic_reparam_matrix(int p) {
  RealMatrix m(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      m(i, j) = i == j ? 1.1 + 0.05 * i : 0.3 / (1.0 + i + j);
    }
  }
  return m;
}

}  // namespace

VerificationReport verify_point(const ModelDefinition& model, std::span<const double> coords,
                                const VerifyOptions& options) {
  const double rank_tol = options.rank_tol > 0 ? options.rank_tol : model.rank_tol;
  const int p = model.num_params();
  const int d = model.dim;

  VerificationReport report;

  ModelPoint point = evaluate(model, coords);
  Spectrum spectrum = spectral_decompose(point, rank_tol);
  GeometryPoint geometry = compute_geometry(spectrum, point.drho);
  CurvatureReport spectral = scalar_curvature(spectrum, geometry);

  report.checks.push_back(make_pass_fail(
      "qfi-is-4g", max_abs(RealMatrix(geometry.qfi - 4.0 * geometry.metric)), 1e-14));
  report.checks.push_back(make_pass_fail(
      "metric-inverse",
      max_abs(RealMatrix(geometry.metric * geometry.metric_inv - RealMatrix::Identity(p, p))),
      1e-8 * geometry.condition_number));

  {
    double residual = 0.0;
    for (int mu = 0; mu < p; ++mu) {
      residual = std::max(residual,
                          support_lyapunov_residual(spectrum, geometry.g_ops[static_cast<std::size_t>(mu)],
                                                    point.rho, point.drho[static_cast<std::size_t>(mu)]));
    }
    report.checks.push_back(make_pass_fail("lyapunov-residual", residual, 1e-9));
  }

  // Independent curvature route 1: dual-curvature contraction.
  try {
    auto duals = dual_curvature_all(model, coords, options.fd_step, options.richardson);
    CurvatureReport contracted = curvature_via_dual_contraction(spectrum, duals, geometry);
    report.checks.push_back(make_pass_fail(
        "spectral-vs-dual-contraction", std::abs(contracted.curvature - spectral.curvature),
        1e-4 * (1.0 + std::abs(spectral.curvature)),
        "C_spectral = " + format_g(spectral.curvature) +
            ", C_dual = " + format_g(contracted.curvature)));

    double rho_residual = 0.0;
    for (const DualCurvature& dc : duals) {
      rho_residual = std::max(rho_residual, dc.rho_relation_residual);
    }
    report.checks.push_back(make_pass_fail("dual-rho-relation", rho_residual, 1e-6));
  } catch (const Error& err) {
    report.checks.push_back(make_skipped("spectral-vs-dual-contraction",
                                         std::string(errc_name(err.code())) + ": " + err.what()));
    report.checks.push_back(make_skipped("dual-rho-relation",
                                         std::string(errc_name(err.code())) + ": " + err.what()));
  }

  // Independent curvature route 2: explicit connection.
  try {
    ConnectionFrame frame = connection_form(model, coords, options.fd_step);
    CurvatureReport connected = curvature_via_connection(frame, geometry);
    report.checks.push_back(make_pass_fail(
        "spectral-vs-connection", std::abs(connected.curvature - spectral.curvature),
        1e-4 * (1.0 + std::abs(spectral.curvature)),
        "C_spectral = " + format_g(spectral.curvature) +
            ", C_connection = " + format_g(connected.curvature)));
  } catch (const Error& err) {
    report.checks.push_back(make_skipped("spectral-vs-connection",
                                         std::string(errc_name(err.code())) + ": " + err.what()));
  }

  // Reparametrization invariance in a deterministic chart.
  {
    const RealMatrix m = deterministic_reparam_matrix(p);
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("y" + std::to_string(j + 1));
    ModelDefinition remapped = reparametrize_linear(model, m, names);
    const RealVector x = Eigen::Map<const RealVector>(coords.data(), p);
    const RealVector y = m.inverse() * x;
    ModelPoint repoint = evaluate(remapped, std::vector<double>(y.data(), y.data() + p));
    Spectrum respectrum = spectral_decompose(repoint, rank_tol);
    GeometryPoint regeometry = compute_geometry(respectrum, repoint.drho);
    const double c_y = scalar_curvature(respectrum, regeometry).curvature;
    report.checks.push_back(make_pass_fail(
        "reparametrization-invariance",
        std::abs(c_y - spectral.curvature) / std::max(std::abs(spectral.curvature), 1.0), 1e-8,
        "C_x = " + format_g(spectral.curvature) + ", C_y = " + format_g(c_y)));
  }

  // The PCC holds iff the curvature vanishes.
  {
    PccResult pcc = pcc_check(spectrum, geometry.g_ops, options.pcc_tol);
    const bool flat = spectral.curvature <= 1e-10;
    VerificationCheck check;
    check.name = "pcc-iff-flat";
    check.tolerance = 1e-10;
    check.residual = flat ? spectral.curvature : 0.0;
    check.status = flat == pcc.satisfied ? CheckStatus::passed : CheckStatus::failed;
    check.detail = "C = " + format_g(spectral.curvature) +
                   ", pcc residual = " + format_g(pcc.residual) +
                   (pcc.satisfied ? ", satisfied" : ", violated");
    report.checks.push_back(check);
  }

  // Two-parameter incompatibility factor.
  if (p == 2) {
    const double gamma = incompatibility_gamma(spectrum, geometry.g_ops, geometry.qfi);
    report.checks.push_back(make_pass_fail("gamma-range",
                                           std::max({0.0, gamma - 1.0, -gamma}), 1e-10,
                                           "gamma = " + format_g(gamma)));
    if (spectrum.rank == 1) {
      report.checks.push_back(make_pass_fail("pure-gamma-half-curvature",
                                             std::abs(gamma - spectral.curvature / 2.0), 1e-8,
                                             "gamma = " + format_g(gamma) +
                                                 ", C/2 = " + format_g(spectral.curvature / 2.0)));
    } else {
      report.checks.push_back(make_skipped("pure-gamma-half-curvature", "state is mixed (rank > 1)"));
    }
  } else {
    report.checks.push_back(make_skipped("gamma-range", "model does not have two parameters"));
    report.checks.push_back(make_skipped("pure-gamma-half-curvature", "model does not have two parameters"));
  }

  // Pure-state reduction of the curvature formula.
  if (spectrum.rank == 1) {
    CurvatureReport pure = scalar_curvature_pure(spectrum, geometry);
    report.checks.push_back(make_pass_fail("pure-formula-agreement",
                                           std::abs(pure.curvature - spectral.curvature), 1e-10));
  } else {
    report.checks.push_back(make_skipped("pure-formula-agreement", "state is mixed (rank > 1)"));
  }

  // The kernel-kernel convention must not reach any exported quantity.
  if (spectrum.rank < d) {
    std::mt19937_64 rng(0x9e3779b9u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ComplexMatrix h(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) h(r, c) = Complex(dist(rng), dist(rng));
    }
    h = 0.5 * (h + h.adjoint()).eval();
    const ComplexMatrix q = ComplexMatrix::Identity(d, d) - spectrum.support_projector;

    std::vector<ComplexMatrix> tweaked = geometry.g_ops;
    for (auto& g : tweaked) g += q * h * q;
    BuresMetric metric = bures_metric(spectrum, tweaked);
    GeometryPoint tweaked_geometry;
    tweaked_geometry.g_ops = tweaked;
    tweaked_geometry.metric = metric.g;
    tweaked_geometry.metric_inv = metric.g_inv;
    tweaked_geometry.qfi = metric.qfi;
    tweaked_geometry.condition_number = metric.condition_number;
    tweaked_geometry.g_ops_raised = raise_indices(tweaked, metric.g_inv);
    const double c_tweaked = scalar_curvature(spectrum, tweaked_geometry).curvature;

    const double residual = std::max(max_abs(RealMatrix(metric.g - geometry.metric)),
                                     std::abs(c_tweaked - spectral.curvature));
    report.checks.push_back(make_pass_fail("kernel-convention-independence", residual, 1e-10));
  } else {
    report.checks.push_back(make_skipped("kernel-convention-independence", "model is full rank"));
  }

  return report;
}

}  // namespace uhlmann
