// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Expected values come from closed forms and independent oracles
// (finite differences, quadrature, brute-force generation); tolerances are
// pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "support/random_models.hpp"
#include "uhlmann/curvature.hpp"
#include "uhlmann/estimation.hpp"
#include "uhlmann/verify.hpp"

using namespace uhlmann;

namespace {

const double kLn2 = std::log(2.0);

int g_failures = 0;

void report(int number, const std::string& title, bool ok, const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", number, title.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

struct AtPoint {
  ModelPoint point;
  Spectrum spectrum;
  GeometryPoint geometry;
};

AtPoint at_point(const ModelDefinition& model, const std::vector<double>& coords,
                 double rank_tol = 0.0) {
  ModelPoint point = evaluate(model, coords);
  Spectrum spectrum = spectral_decompose(point, rank_tol > 0 ? rank_tol : model.rank_tol);
  GeometryPoint geometry = compute_geometry(spectrum, point.drho);
  return {std::move(point), std::move(spectrum), std::move(geometry)};
}

RealMatrix metric_closed(double b) {
  RealMatrix g = RealMatrix::Zero(2, 2);
  g(0, 0) = std::exp(-2.0 * b) / 4.0;
  g(1, 1) = 1.0 / (4.0 * (std::exp(2.0 * b) - 1.0));
  return g;
}

ComplexMatrix f12_closed(double a, double b) {
  ComplexMatrix m(2, 2);
  m << 1.0, -std::exp(Complex(-b, -a)), std::exp(Complex(-b, a)), -1.0;
  return Complex(0.0, -1.0) / (2.0 * (std::exp(2.0 * b) - 1.0)) * m;
}

// 3-level pure two-parameter family |psi><psi| built entrywise.
std::string pure_qutrit_source() {
  const std::vector<std::string> amp = {
      "cos(t1)",
      "sin(t1)*cos(t2)*exp(i*t1)",
      "sin(t1)*sin(t2)*exp(i*(t1 + t2))",
  };
  std::string text = "dim = 3\nparams = [\"t1\", \"t2\"]\n[rho]\n";
  for (int r = 0; r < 3; ++r) {
    text += "row" + std::to_string(r) + " = [";
    for (int c = 0; c < 3; ++c) {
      if (c) text += ", ";
      text += "\"(" + amp[static_cast<std::size_t>(r)] + ")*conj(" +
              amp[static_cast<std::size_t>(c)] + ")\"";
    }
    text += "]\n";
  }
  return text;
}

void criterion_1_and_2() {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  double max_c_dev = 0.0;
  double max_g_dev = 0.0;
  double max_k_dev = 0.0;

  const auto start = std::chrono::steady_clock::now();
  for (int ia = 0; ia < 20; ++ia) {
    const double a = 2.0 * M_PI * ia / 20.0;  // [0, 2 pi)
    for (int ib = 0; ib < 20; ++ib) {
      const double b = 0.1 + (2.0 - 0.1) * ib / 19.0;  // [0.1, 2]
      AtPoint at = at_point(model, {a, b});
      const CurvatureReport curvature = scalar_curvature(at.spectrum, at.geometry);
      max_c_dev = std::max(max_c_dev, std::abs(curvature.curvature - 4.0));
      max_g_dev = std::max(max_g_dev, max_abs(RealMatrix(at.geometry.metric - metric_closed(b))));
      max_k_dev =
          std::max(max_k_dev, max_abs(RealMatrix(at.geometry.qfi - 4.0 * at.geometry.metric)));
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  report(1, "constant curvature C = 4 on the 20x20 grid", max_c_dev <= 1e-8 && seconds < 1.0,
         fmt("max |C - 4| = %.3g, %.3fs", max_c_dev, seconds));
  report(2, "closed-form Bures metric and K = 4g on the grid",
         max_g_dev <= 1e-10 && max_k_dev <= 1e-14,
         fmt("max metric dev %.3g, max K dev %.3g", max_g_dev, max_k_dev));
}

void criterion_3() {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  const std::vector<double> at{0.0, kLn2};
  const ComplexMatrix expected = f12_closed(0.0, kLn2);

  const DualCurvature plain = dual_curvature(model, at, 0, 1, 1e-4, false);
  const double dev_plain = max_abs(ComplexMatrix(plain.f_tilde - expected));
  const DualCurvature richardson = dual_curvature(model, at, 0, 1, 1e-4, true);
  const double dev_rich = max_abs(ComplexMatrix(richardson.f_tilde - expected));

  report(3, "dual curvature matches the closed form", dev_plain <= 1e-5 && dev_rich <= 1e-7,
         fmt("plain dev %.3g, Richardson dev %.3g", dev_plain, dev_rich));
}

void criterion_4() {
  testsupport::RandomModelGen gen(600613u);
  double worst = 0.0;
  int checked = 0;
  const auto start = std::chrono::steady_clock::now();
  while (checked < 50) {
    auto source = [&] { return checked % 2 == 0 ? gen.qubit() : gen.qutrit(); };
    auto adm = testsupport::find_admissible(gen, source, 1e-2);
    GeometryPoint geometry = compute_geometry(adm.spectrum, adm.point.drho);
    const double spectral = scalar_curvature(adm.spectrum, geometry).curvature;
    double contracted, connected;
    try {
      contracted = curvature_via_dual_contraction(
                       adm.spectrum, dual_curvature_all(adm.model, adm.coords), geometry)
                       .curvature;
      connected =
          curvature_via_connection(connection_form(adm.model, adm.coords), geometry).curvature;
    } catch (const Error&) {
      continue;  // a stencil point left the admissible domain; redraw
    }
    const double scale = 1.0 + std::abs(spectral);
    worst = std::max({worst, std::abs(spectral - contracted) / scale,
                      std::abs(spectral - connected) / scale});
    ++checked;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(4, "spectral / dual-contraction / connection agree on 50 random models",
         worst <= 1e-4 && seconds < 30.0, fmt("worst relative dev %.3g, %.3fs", worst, seconds));
}

void criterion_5() {
  bool ok = true;
  std::string failure;

  auto check_equivalence = [&](const ModelDefinition& model, const std::vector<double>& coords,
                               const char* label) {
    AtPoint at = at_point(model, coords);
    const double c = scalar_curvature(at.spectrum, at.geometry).curvature;
    const PccResult pcc = pcc_check(at.spectrum, at.geometry.g_ops);
    const bool flat = c <= 1e-10;
    if (flat != pcc.satisfied) {
      ok = false;
      if (failure.empty()) failure = std::string("mismatch on ") + label;
    }
    return pcc.satisfied;
  };

  // Built-ins with known classification.
  if (check_equivalence(builtin("product-qubits"), {0.3, -0.5}, "product-qubits") != true) {
    ok = false;
    failure = "product-qubits should satisfy the PCC";
  }
  if (check_equivalence(builtin("phase-diffusion-qubit"), {0.4, 0.8}, "phase-diffusion") != false) {
    ok = false;
    failure = "phase-diffusion-qubit should violate the PCC";
  }
  if (check_equivalence(builtin("bloch-pure-qubit"), {1.1, 0.7}, "bloch-pure") != false) {
    ok = false;
    failure = "bloch-pure-qubit should violate the PCC";
  }

  // 50 random models, mixing generic (curved) and diagonal (flat) families.
  testsupport::RandomModelGen gen(517u);
  for (int round = 0; round < 50; ++round) {
    auto source = [&] {
      switch (round % 4) {
        case 0: return gen.qubit();
        case 1: return gen.qutrit();
        case 2: return gen.diagonal(3);
        default: return gen.diagonal(4);
      }
    };
    auto adm = testsupport::find_admissible(gen, source, 1e-4);
    check_equivalence(adm.model, adm.coords, "random model");
  }

  report(5, "PCC satisfied iff C vanishes (built-ins + 50 random models)", ok,
         ok ? "both directions hold" : failure);
}

void criterion_6() {
  double worst_random = 0.0;
  std::mt19937_64 rng(83u);
  std::uniform_real_distribution<double> theta_dist(0.15, M_PI - 0.15);
  std::uniform_real_distribution<double> phi_dist(0.0, 2.0 * M_PI);

  ModelDefinition bloch = builtin("bloch-pure-qubit");
  ModelDefinition qutrit = load_model(pure_qutrit_source());
  int checked = 0;
  while (checked < 100) {
    const bool use_bloch = checked % 2 == 0;
    const std::vector<double> coords{theta_dist(rng), phi_dist(rng)};
    try {
      AtPoint at = at_point(use_bloch ? bloch : qutrit, coords);
      if (at.spectrum.rank != 1) continue;
      const double c = scalar_curvature(at.spectrum, at.geometry).curvature;
      const double gamma =
          incompatibility_gamma(at.spectrum, at.geometry.g_ops, at.geometry.qfi);
      worst_random = std::max(worst_random, std::abs(gamma - c / 2.0));
      ++checked;
    } catch (const Error&) {
      continue;  // degenerate metric draw
    }
  }

  double worst_bloch = 0.0;
  for (double theta : {0.3, 1.0, 2.0}) {
    AtPoint at = at_point(bloch, {theta, 0.7});
    const double c = scalar_curvature(at.spectrum, at.geometry).curvature;
    const double gamma = incompatibility_gamma(at.spectrum, at.geometry.g_ops, at.geometry.qfi);
    worst_bloch = std::max({worst_bloch, std::abs(gamma - 1.0), std::abs(c - 2.0)});
  }

  report(6, "pure models: gamma = C/2 at 100 random points; Bloch gamma = 1, C = 2",
         worst_random <= 1e-8 && worst_bloch <= 1e-10,
         fmt("max |gamma - C/2| = %.3g, max Bloch dev = %.3g", worst_random, worst_bloch));
}

void criterion_7() {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  const std::vector<double> x{1.4, 0.75};
  AtPoint base = at_point(model, x);
  const double c_x = scalar_curvature(base.spectrum, base.geometry).curvature;

  std::mt19937_64 rng(97u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  int done = 0;
  while (done < 20) {
    RealMatrix m(2, 2);
    m << dist(rng), dist(rng), dist(rng), dist(rng);
    if (std::abs(m.determinant()) < 0.25) continue;
    ModelDefinition remapped = reparametrize_linear(model, m, {"y1", "y2"});
    const RealVector y = m.inverse() * Eigen::Map<const RealVector>(x.data(), 2);
    AtPoint at = at_point(remapped, {y(0), y(1)});
    const double c_y = scalar_curvature(at.spectrum, at.geometry).curvature;
    worst = std::max(worst, std::abs(c_y - c_x) / std::max(c_x, 1.0));
    ++done;
  }
  report(7, "20 random linear reparametrizations leave C invariant", worst <= 1e-8,
         fmt("worst relative dev %.3g", worst));
}

void criterion_8() {
  // Rank-deficient families: the pure Bloch qubit and a rank-2 qutrit.
  std::mt19937_64 rng(101u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;

  auto randomize_kernel = [&](const ModelDefinition& model, const std::vector<double>& coords) {
    AtPoint at = at_point(model, coords);
    const int d = model.dim;
    const double base_c = scalar_curvature(at.spectrum, at.geometry).curvature;
    const ComplexMatrix q = ComplexMatrix::Identity(d, d) - at.spectrum.support_projector;
    for (int round = 0; round < 10; ++round) {
      ComplexMatrix h(d, d);
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) h(r, c) = Complex(dist(rng), dist(rng));
      }
      h = 0.5 * (h + h.adjoint()).eval();
      std::vector<ComplexMatrix> tweaked = at.geometry.g_ops;
      for (auto& g : tweaked) g += q * h * q;
      BuresMetric metric = bures_metric(at.spectrum, tweaked);
      GeometryPoint geometry;
      geometry.g_ops = tweaked;
      geometry.metric = metric.g;
      geometry.metric_inv = metric.g_inv;
      geometry.qfi = metric.qfi;
      geometry.condition_number = metric.condition_number;
      geometry.g_ops_raised = raise_indices(tweaked, metric.g_inv);
      const double c = scalar_curvature(at.spectrum, geometry).curvature;
      worst = std::max({worst, max_abs(RealMatrix(metric.g - at.geometry.metric)),
                        std::abs(c - base_c)});
    }
  };

  randomize_kernel(builtin("bloch-pure-qubit"), {1.2, 0.5});
  randomize_kernel(load_model("dim = 3\nparams = [\"a\", \"b\"]\n[rho]\n"
                              "row0 = [\"1/2\",            \"exp(-i*a - b)/2\", \"0\"]\n"
                              "row1 = [\"exp(i*a - b)/2\", \"1/2\",             \"0\"]\n"
                              "row2 = [\"0\",              \"0\",               \"0\"]\n"),
                   {0.8, 0.6});

  report(8, "kernel-kernel convention leaves g and C unchanged", worst <= 1e-10,
         fmt("worst dev %.3g", worst));
}

void criterion_9() {
  bool ok = true;
  std::string detail;

  BoundaryCurve incompatible =
      tradeoff_boundary_curve(RealMatrix::Identity(2, 2), 1.0, 1, {2.0});
  if (!incompatible.points[0].v2_min.has_value() ||
      std::abs(*incompatible.points[0].v2_min - 2.0) > 1e-9) {
    ok = false;
    detail = "gamma = 1 boundary point off";
  } else {
    detail = fmt("|v2(2) - 2| = %.3g", std::abs(*incompatible.points[0].v2_min - 2.0));
  }

  RealMatrix k = RealMatrix::Zero(2, 2);
  k(0, 0) = 4.0;
  k(1, 1) = 0.5;
  const int n = 3;
  const double corner = 1.0 / (n * k(0, 0));
  BoundaryCurve rectangle =
      tradeoff_boundary_curve(k, 0.0, n, {corner, 2.0 * corner, 8.0 * corner});
  for (const BoundaryPoint& point : rectangle.points) {
    if (!point.v2_min.has_value() || *point.v2_min != 1.0 / (n * k(1, 1))) {
      ok = false;
      detail = "gamma = 0 rectangle is not exact";
    }
  }
  BoundaryCurve below = tradeoff_boundary_curve(k, 0.0, n, {0.5 * corner});
  if (below.points[0].v2_min.has_value()) {
    ok = false;
    detail = "v1 below the single-parameter bound must have no solution";
  }

  report(9, "tradeoff boundary: gamma = 1 point and gamma = 0 rectangle", ok, detail);
}

void criterion_10() {
  const std::vector<std::string> params{"a", "b"};
  testsupport::RandomExprGen gen(params, 4096u);
  int checked = 0;
  int attempts = 0;
  double worst = 0.0;
  while (checked < 1000 && attempts < 20000) {
    ++attempts;
    const std::string source = gen.next();
    expr::Expression parsed = expr::parse(source, params);
    bool usable = false;
    std::vector<double> at;
    expr::DualComplex dual;
    std::vector<testsupport::Complex> fd6, fd5;
    for (int tries = 0; tries < 20 && !usable; ++tries) {
      at = gen.random_point();
      try {
        dual = expr::eval_dual(parsed, at);
        if (std::abs(dual.value) > 1e3) continue;
        bool bounded = true;
        for (const auto& g : dual.partials) bounded = bounded && std::abs(g) <= 1e3;
        if (!bounded) continue;
        fd6 = testsupport::fd_partials(parsed, at, 1e-6);
        fd5 = testsupport::fd_partials(parsed, at, 1e-5);
        usable = true;
        for (std::size_t k = 0; k < 2; ++k) {
          usable = usable && std::abs(fd6[k] - fd5[k]) <= 0.3e-7 * (1.0 + std::abs(fd6[k]));
        }
      } catch (const Error&) {
      }
    }
    if (!usable) continue;
    for (std::size_t k = 0; k < 2; ++k) {
      worst = std::max(worst,
                       std::abs(dual.partials[k] - fd6[k]) / (1.0 + std::abs(dual.partials[k])));
    }
    ++checked;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%d checked, worst relative dev %.3g", checked, worst);
  report(10, "1000 random expressions pass the finite-difference derivative check",
         checked >= 1000 && worst <= 1e-7, detail);
}

}  // namespace

int main() {
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
