#include <doctest.h>

#include <cmath>
#include <random>

#include "support/random_models.hpp"
#include "uhlmann/curvature.hpp"

using namespace uhlmann;

namespace {

const double kLn2 = std::log(2.0);

struct AtPoint {
  ModelPoint point;
  Spectrum spectrum;
  GeometryPoint geometry;
};

AtPoint at_point(const ModelDefinition& model, std::vector<double> coords) {
  ModelPoint point = evaluate(model, coords);
  Spectrum spectrum = spectral_decompose(point, model.rank_tol);
  GeometryPoint geometry = compute_geometry(spectrum, point.drho);
  return {std::move(point), std::move(spectrum), std::move(geometry)};
}

ComplexMatrix f12_closed(double a, double b) {
  ComplexMatrix m(2, 2);
  m << 1.0, -std::exp(Complex(-b, -a)), std::exp(Complex(-b, a)), -1.0;
  return Complex(0.0, -1.0) / (2.0 * (std::exp(2.0 * b) - 1.0)) * m;
}

ComplexMatrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix m(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) m(r, c) = Complex(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(m);
  return qr.householderQ();
}

}  // namespace

TEST_CASE("spectral curvature of the phase-diffusion qubit is constantly 4") {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  for (auto [a, b] : {std::pair{0.0, kLn2}, {1.1, 0.3}, {3.9, 1.7}, {6.0, 0.11}}) {
    CAPTURE(a);
    CAPTURE(b);
    AtPoint at = at_point(model, {a, b});
    CurvatureReport report = scalar_curvature(at.spectrum, at.geometry);
    CHECK(report.curvature == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(report.method == "spectral");
    CHECK(report.diagnostics.rank == 2);

    // Pair terms are symmetric and sum to C.
    double sum = 0.0;
    for (const auto& [pair, term] : report.pair_terms) {
      sum += term;
      CHECK(term == report.pair_terms.at({pair.second, pair.first}));
    }
    CHECK(std::abs(sum - report.curvature) <= 1e-12);
  }
}

TEST_CASE("curvature vanishes for commuting and single-parameter families") {
  SUBCASE("product qubits") {
    AtPoint at = at_point(builtin("product-qubits"), {0.35, -0.55});
    CurvatureReport report = scalar_curvature(at.spectrum, at.geometry);
    CHECK(std::abs(report.curvature) <= 1e-12);
    CHECK(report.curvature >= -1e-12);
  }
  SUBCASE("single parameter has no antisymmetric pair") {
    ModelDefinition model = load_model(
        "dim = 2\nparams = [\"t\"]\n[rho]\nrow0 = [\"(1 + tanh(t))/2\", \"0\"]\nrow1 = [\"0\", "
        "\"(1 - tanh(t))/2\"]\n");
    AtPoint at = at_point(model, {0.3});
    CurvatureReport report = scalar_curvature(at.spectrum, at.geometry);
    CHECK(report.curvature == 0.0);
    CHECK(report.pair_terms.empty());
  }
}

TEST_CASE("pure-state curvature") {
  SUBCASE("Bloch family: C = 2 for all polar angles") {
    ModelDefinition model = builtin("bloch-pure-qubit");
    for (double theta : {M_PI / 2.0, 0.3, 1.0, 2.0}) {
      AtPoint at = at_point(model, {theta, 0.9});
      CurvatureReport pure = scalar_curvature_pure(at.spectrum, at.geometry);
      CHECK(pure.curvature == doctest::Approx(2.0).epsilon(1e-10));

      CurvatureReport spectral = scalar_curvature(at.spectrum, at.geometry);
      CHECK(std::abs(pure.curvature - spectral.curvature) <= 1e-10);
    }
  }
  SUBCASE("real-amplitude pure family has zero curvature") {
    ModelDefinition model = load_model(
        "dim = 3\nparams = [\"t1\", \"t2\"]\n[rho]\n"
        "row0 = [\"cos(t1)^2*cos(t2)^2\", \"cos(t1)^2*cos(t2)*sin(t2)\", "
        "\"cos(t1)*cos(t2)*sin(t1)\"]\n"
        "row1 = [\"cos(t1)^2*cos(t2)*sin(t2)\", \"cos(t1)^2*sin(t2)^2\", "
        "\"cos(t1)*sin(t2)*sin(t1)\"]\n"
        "row2 = [\"cos(t1)*cos(t2)*sin(t1)\", \"cos(t1)*sin(t2)*sin(t1)\", \"sin(t1)^2\"]\n");
    AtPoint at = at_point(model, {0.5, 0.8});
    REQUIRE(at.spectrum.rank == 1);
    CurvatureReport pure = scalar_curvature_pure(at.spectrum, at.geometry);
    CHECK(std::abs(pure.curvature) <= 1e-12);
  }
  SUBCASE("mixed states are rejected") {
    AtPoint at = at_point(builtin("phase-diffusion-qubit"), {0.0, kLn2});
    CHECK_THROWS_AS(scalar_curvature_pure(at.spectrum, at.geometry), Error);
  }
}

TEST_CASE("dual curvature matches the closed form") {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  SUBCASE("worked point, plain and Richardson") {
    DualCurvature plain = dual_curvature(model, std::vector<double>{0.0, kLn2}, 0, 1);
    CHECK(max_abs(ComplexMatrix(plain.f_tilde - f12_closed(0.0, kLn2))) <= 1e-5);
    CHECK(plain.rho_relation_residual <= 1e-6);

    DualCurvature extrapolated =
        dual_curvature(model, std::vector<double>{0.0, kLn2}, 0, 1, kDefaultFdStep, true);
    CHECK(max_abs(ComplexMatrix(extrapolated.f_tilde - f12_closed(0.0, kLn2))) <= 1e-7);
  }
  SUBCASE("generic point") {
    DualCurvature dc = dual_curvature(model, std::vector<double>{1.2, 0.7}, 0, 1);
    CHECK(max_abs(ComplexMatrix(dc.f_tilde - f12_closed(1.2, 0.7))) <= 1e-5);
  }
  SUBCASE("antisymmetry and the diagonal pair") {
    DualCurvature fwd = dual_curvature(model, std::vector<double>{0.4, 0.9}, 0, 1);
    DualCurvature rev = dual_curvature(model, std::vector<double>{0.4, 0.9}, 1, 0);
    CHECK(max_abs(ComplexMatrix(fwd.f_tilde + rev.f_tilde)) <= 1e-14);
    DualCurvature diag = dual_curvature(model, std::vector<double>{0.4, 0.9}, 1, 1);
    CHECK(max_abs(diag.f_tilde) == 0.0);
  }
  SUBCASE("product family satisfies the rho relation") {
    DualCurvature dc = dual_curvature(builtin("product-qubits"), std::vector<double>{0.2, -0.4}, 0, 1);
    CHECK(dc.rho_relation_residual <= 1e-6);
  }
  SUBCASE("error paths") {
    CHECK_THROWS_AS(dual_curvature(model, std::vector<double>{0.0, kLn2}, 0, 1, 1e-11), Error);
    // Rank-deficient family: stencil leaves the full-rank domain.
    CHECK_THROWS_AS(dual_curvature(builtin("bloch-pure-qubit"), std::vector<double>{1.0, 0.5}, 0, 1),
                    Error);
  }
}

TEST_CASE("dual-contraction curvature agrees with the spectral value") {
  SUBCASE("phase-diffusion qubit gives 4") {
    ModelDefinition model = builtin("phase-diffusion-qubit");
    AtPoint at = at_point(model, {0.0, kLn2});
    auto duals = dual_curvature_all(model, std::vector<double>{0.0, kLn2});
    CurvatureReport report = curvature_via_dual_contraction(at.spectrum, duals, at.geometry);
    CHECK(report.method == "dual-contraction");
    CHECK(report.curvature == doctest::Approx(4.0).epsilon(1e-5));
  }
  SUBCASE("product qubits give 0") {
    ModelDefinition model = builtin("product-qubits");
    AtPoint at = at_point(model, {0.3, 0.6});
    auto duals = dual_curvature_all(model, std::vector<double>{0.3, 0.6});
    CurvatureReport report = curvature_via_dual_contraction(at.spectrum, duals, at.geometry);
    CHECK(std::abs(report.curvature) <= 1e-8);
  }
  SUBCASE("random full-rank qubit families") {
    testsupport::RandomModelGen gen(314u);
    for (int round = 0; round < 10; ++round) {
      auto adm = testsupport::find_admissible(gen, [&] { return gen.qubit(); }, 5e-2);
      GeometryPoint geometry = compute_geometry(adm.spectrum, adm.point.drho);
      const double spectral = scalar_curvature(adm.spectrum, geometry).curvature;
      auto duals = dual_curvature_all(adm.model, adm.coords);
      const double contracted =
          curvature_via_dual_contraction(adm.spectrum, duals, geometry).curvature;
      CHECK(std::abs(spectral - contracted) <= 1e-5 * (1.0 + std::abs(spectral)));
    }
  }
}

TEST_CASE("connection form") {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  SUBCASE("reproduces the scalar curvature through the primal field strength") {
    AtPoint at = at_point(model, {0.0, kLn2});
    ConnectionFrame frame = connection_form(model, std::vector<double>{0.0, kLn2});
    CHECK(frame.defining_residual <= 1e-5);
    for (const ComplexMatrix& a : frame.connection) {
      CHECK(max_abs(ComplexMatrix(a + a.adjoint())) <= 1e-15);  // exactly anti-Hermitian
    }
    CHECK(max_abs(ComplexMatrix(frame.field_strength[0][1] + frame.field_strength[1][0])) == 0.0);

    CurvatureReport report = curvature_via_connection(frame, at.geometry);
    CHECK(report.method == "connection");
    CHECK(report.curvature == doctest::Approx(4.0).epsilon(1e-4));
  }
  SUBCASE("stationary frame has vanishing connection") {
    ModelDefinition product = builtin("product-qubits");
    ConnectionFrame frame = connection_form(product, std::vector<double>{0.3, -0.45});
    for (const ComplexMatrix& a : frame.connection) CHECK(max_abs(a) <= 1e-8);
  }
  SUBCASE("a constant gauge rotation leaves the scalar invariant") {
    AtPoint at = at_point(model, {0.8, 0.6});
    ConnectionFrame frame = connection_form(model, std::vector<double>{0.8, 0.6});
    CurvatureReport base = curvature_via_connection(frame, at.geometry);

    std::mt19937_64 rng(5u);
    const ComplexMatrix u = random_unitary(2, rng);
    ConnectionFrame rotated = frame;
    for (auto& a : rotated.connection) a = (u * a * u.adjoint()).eval();
    for (auto& row : rotated.field_strength) {
      for (auto& f : row) f = (u * f * u.adjoint()).eval();
    }
    CurvatureReport transformed = curvature_via_connection(rotated, at.geometry);
    CHECK(std::abs(base.curvature - transformed.curvature) <= 1e-10);
  }
  SUBCASE("degenerate spectra are refused") {
    // product-qubits at x1 = x2 has a crossing of the middle eigenvalues.
    CHECK_THROWS_AS(connection_form(builtin("product-qubits"), std::vector<double>{0.4, 0.4}),
                    Error);
  }
}

TEST_CASE("three-way method agreement on random full-rank models") {
  testsupport::RandomModelGen gen(271828u);
  int done = 0;
  for (int round = 0; round < 12 && done < 8; ++round) {
    auto source = [&] { return round % 2 == 0 ? gen.qubit() : gen.qutrit(); };
    auto adm = testsupport::find_admissible(gen, source, 1e-2);
    GeometryPoint geometry = compute_geometry(adm.spectrum, adm.point.drho);
    const double spectral = scalar_curvature(adm.spectrum, geometry).curvature;
    const double contracted =
        curvature_via_dual_contraction(adm.spectrum, dual_curvature_all(adm.model, adm.coords),
                                       geometry)
            .curvature;
    double connected;
    try {
      connected =
          curvature_via_connection(connection_form(adm.model, adm.coords), geometry).curvature;
    } catch (const Error&) {
      continue;  // stencil hit a degeneracy; admissibility only checked the center
    }
    CAPTURE(spectral);
    CHECK(std::abs(spectral - contracted) <= 1e-4 * (1.0 + std::abs(spectral)));
    CHECK(std::abs(spectral - connected) <= 1e-4 * (1.0 + std::abs(spectral)));
    ++done;
  }
  CHECK(done >= 8);
}

TEST_CASE("scalar curvature is reparametrization invariant") {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  const std::vector<double> x{1.9, 0.85};
  AtPoint base = at_point(model, x);
  const double c_x = scalar_curvature(base.spectrum, base.geometry).curvature;

  std::mt19937_64 rng(17u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int done = 0;
  while (done < 5) {
    RealMatrix m(2, 2);
    m << dist(rng), dist(rng), dist(rng), dist(rng);
    if (std::abs(m.determinant()) < 0.3) continue;
    ModelDefinition remapped = reparametrize_linear(model, m, {"y1", "y2"});
    const RealVector y = m.inverse() * Eigen::Map<const RealVector>(x.data(), 2);
    AtPoint at = at_point(remapped, {y(0), y(1)});
    const double c_y = scalar_curvature(at.spectrum, at.geometry).curvature;
    CHECK(std::abs(c_y - c_x) / std::max(c_x, 1.0) <= 1e-8);
    ++done;
  }
}

TEST_CASE("scalar curvature is independent of the eigenvector phase convention") {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  AtPoint at = at_point(model, {2.2, 0.5});
  const double base = scalar_curvature(at.spectrum, at.geometry).curvature;

  std::mt19937_64 rng(23u);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  Spectrum perturbed = at.spectrum;
  for (int c = 0; c < 2; ++c) {
    perturbed.eigenvectors.col(c) *= std::exp(Complex(0.0, angle(rng)));
  }
  const double rotated = scalar_curvature(perturbed, at.geometry).curvature;
  CHECK(std::abs(base - rotated) <= 1e-10);
}

TEST_CASE("kernel-kernel randomization does not change C on rank-deficient models") {
  ModelDefinition model = load_model(
      "dim = 3\nparams = [\"a\", \"b\"]\n[rho]\n"
      "row0 = [\"1/2\",            \"exp(-i*a - b)/2\", \"0\"]\n"
      "row1 = [\"exp(i*a - b)/2\", \"1/2\",             \"0\"]\n"
      "row2 = [\"0\",              \"0\",               \"0\"]\n");
  AtPoint at = at_point(model, {0.7, 0.95});
  REQUIRE(at.spectrum.rank == 2);
  const double base = scalar_curvature(at.spectrum, at.geometry).curvature;

  std::mt19937_64 rng(29u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const ComplexMatrix q = ComplexMatrix::Identity(3, 3) - at.spectrum.support_projector;
  for (int round = 0; round < 8; ++round) {
    ComplexMatrix h(3, 3);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h(r, c) = Complex(dist(rng), dist(rng));
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
    const double tweaked_c = scalar_curvature(at.spectrum, geometry).curvature;
    CHECK(std::abs(tweaked_c - base) <= 1e-10);
  }
}

TEST_CASE("curvature action integral") {
  ModelDefinition model = builtin("phase-diffusion-qubit");
  const std::vector<GridAxis> region{{0.0, 2.0 * M_PI, 50}, {kLn2, std::log(4.0), 50}};

  SUBCASE("riemannian measure matches the 1-D quadrature oracle") {
    // C sqrt(det g) = e^{-b} / sqrt(e^{2b} - 1), independent of a. Composite
    // Simpson on the b-axis as the oracle, plus the antiderivative
    // -sqrt(1 - e^{-2b}) as a second route.
    auto integrand = [](double b) { return std::exp(-b) / std::sqrt(std::exp(2.0 * b) - 1.0); };
    const int steps = 2000;
    const double lo = kLn2, hi = std::log(4.0);
    double simpson = integrand(lo) + integrand(hi);
    for (int j = 1; j < steps; ++j) {
      simpson += integrand(lo + j * (hi - lo) / steps) * (j % 2 ? 4.0 : 2.0);
    }
    simpson *= (hi - lo) / (3.0 * steps);
    const double closed = std::sqrt(15.0) / 4.0 - std::sqrt(3.0) / 2.0;
    REQUIRE(std::abs(simpson - closed) <= 1e-10);

    const double expected = 2.0 * M_PI * closed;
    const double action = curvature_action(model, region, Measure::riemannian);
    CHECK(std::abs(action - expected) <= 5e-4 * expected);
  }
  SUBCASE("lebesgue measure integrates the constant exactly") {
    const double action = curvature_action(model, region, Measure::lebesgue);
    CHECK(action == doctest::Approx(4.0 * 2.0 * M_PI * kLn2).epsilon(1e-9));
  }
  SUBCASE("doubling the resolution moves the result by < 1e-3 relative") {
    const double coarse = curvature_action(
        model, {{0.0, 2.0 * M_PI, 25}, {kLn2, std::log(4.0), 25}}, Measure::riemannian);
    const double fine = curvature_action(model, region, Measure::riemannian);
    CHECK(std::abs(fine - coarse) <= 1e-3 * std::abs(fine));
  }
  SUBCASE("zero-curvature model integrates to zero") {
    const double action = curvature_action(builtin("product-qubits"),
                                           {{-0.5, 0.5, 10}, {-0.5, 0.5, 10}}, Measure::riemannian);
    CHECK(std::abs(action) <= 1e-10);
  }
  SUBCASE("per-node errors carry the node coordinates") {
    try {
      curvature_action(model, {{0.0, 1.0, 4}, {-2.0, -1.0, 4}}, Measure::riemannian);
      FAIL("expected a propagated ValidationError");
    } catch (const Error& err) {
      CHECK(std::string(err.what()).find("grid node") != std::string::npos);
    }
  }
}

TEST_CASE("curvature is nonnegative on random models") {
  testsupport::RandomModelGen gen(555u);
  for (int round = 0; round < 20; ++round) {
    auto source = [&] { return round % 2 ? gen.qubit() : gen.diagonal(3); };
    auto adm = testsupport::find_admissible(gen, source, 1e-4);
    GeometryPoint geometry = compute_geometry(adm.spectrum, adm.point.drho);
    CHECK(scalar_curvature(adm.spectrum, geometry).curvature >= -1e-12);
  }
}
