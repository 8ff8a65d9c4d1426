#pragma once

// Random expression-backed density-matrix families for property tests.
// Qubit families use a bounded Bloch vector (always full rank), qutrit
// families a bounded Hermitian perturbation of I/3, and diagonal families a
// softmax over small expressions (commuting SLDs). Generators emit model-file
// source text so the tests also exercise the loader.

#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uhlmann/geometry.hpp"
#include "uhlmann/model.hpp"

namespace testsupport {

class RandomModelGen {
 public:
  explicit RandomModelGen(std::uint64_t seed) : rng_(seed) {}

  /// 2x2 full-rank two-parameter family: rho = (I + r(x) . sigma) / 2 with
  /// |r| <= 0.78.
  std::string qubit() {
    const std::string rx = wave(0.15, 0.30);
    const std::string ry = wave(0.15, 0.30);
    const std::string rz = wave(0.15, 0.30);
    std::string text = "dim = 2\nparams = [\"x1\", \"x2\"]\n[rho]\n";
    text += "row0 = [\"(1 + " + rz + ")/2\", \"(" + rx + " - i*(" + ry + "))/2\"]\n";
    text += "row1 = [\"(" + rx + " + i*(" + ry + "))/2\", \"(1 - " + rz + ")/2\"]\n";
    return text;
  }

  /// 3x3 full-rank two-parameter family: rho = I/3 + M(x) with ||M|| <= 0.27.
  std::string qutrit() {
    const std::string e0 = wave(0.03, 0.07);
    const std::string e1 = wave(0.03, 0.07);
    std::string re01 = wave(0.03, 0.07), im01 = wave(0.03, 0.07);
    std::string re02 = wave(0.03, 0.07), im02 = wave(0.03, 0.07);
    std::string re12 = wave(0.03, 0.07), im12 = wave(0.03, 0.07);
    auto off = [](const std::string& re, const std::string& im, bool conj) {
      return "(" + re + ") " + (conj ? "+" : "-") + " i*(" + im + ")";
    };
    std::string text = "dim = 3\nparams = [\"x1\", \"x2\"]\n[rho]\n";
    text += "row0 = [\"1/3 + " + e0 + "\", \"" + off(re01, im01, false) + "\", \"" +
            off(re02, im02, false) + "\"]\n";
    text += "row1 = [\"" + off(re01, im01, true) + "\", \"1/3 + " + e1 + "\", \"" +
            off(re12, im12, false) + "\"]\n";
    text += "row2 = [\"" + off(re02, im02, true) + "\", \"" + off(re12, im12, true) +
            "\", \"1/3 - (" + e0 + ") - (" + e1 + ")\"]\n";
    return text;
  }

  /// Diagonal softmax family (commuting SLDs, zero curvature, PCC holds).
  std::string diagonal(int d) {
    std::vector<std::string> fs;
    std::string denom;
    for (int j = 0; j < d; ++j) {
      fs.push_back(wave(0.2, 0.8));
      if (j) denom += " + ";
      denom += "exp(" + fs.back() + ")";
    }
    std::string text = "dim = " + std::to_string(d) + "\nparams = [\"x1\", \"x2\"]\n[rho]\n";
    for (int r = 0; r < d; ++r) {
      text += "row" + std::to_string(r) + " = [";
      for (int c = 0; c < d; ++c) {
        if (c) text += ", ";
        text += r == c ? "\"exp(" + fs[static_cast<std::size_t>(r)] + ")/(" + denom + ")\""
                       : std::string("\"0\"");
      }
      text += "]\n";
    }
    return text;
  }

  std::vector<double> point() {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    return {dist(rng_), dist(rng_)};
  }

 private:
  /// a * sin(w1 x1 + w2 x2 + phase) + b with |a| in [amp_lo, amp_hi].
  std::string wave(double amp_lo, double amp_hi) {
    std::uniform_real_distribution<double> amp(amp_lo, amp_hi);
    std::uniform_real_distribution<double> freq(-1.5, 1.5);
    std::uniform_real_distribution<double> phase(0.0, 6.28);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g*sin((%.17g)*x1 + (%.17g)*x2 + %.17g)", amp(rng_),
                  freq(rng_), freq(rng_), phase(rng_));
    return buf;
  }

  std::mt19937_64 rng_;
};

struct AdmissiblePoint {
  uhlmann::ModelDefinition model;
  std::vector<double> coords;
  uhlmann::ModelPoint point;
  uhlmann::Spectrum spectrum;
};

/// Draws (model, point) pairs until the spectrum is full rank with pairwise
/// eigenvalue gaps >= min_gap and a well-conditioned metric. Keeps the
/// finite-difference verification paths inside their validity domain.
template <typename MakeSource>
AdmissiblePoint find_admissible(RandomModelGen& gen, MakeSource make_source, double min_gap,
                                double max_condition = 1e5, int max_tries = 2000) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    uhlmann::ModelDefinition model = uhlmann::load_model(make_source());
    std::vector<double> coords = gen.point();
    try {
      uhlmann::ModelPoint point = uhlmann::evaluate(model, coords);
      uhlmann::Spectrum spectrum = uhlmann::spectral_decompose(point, model.rank_tol);
      if (spectrum.rank != model.dim) continue;
      bool gapped = true;
      for (int k = 0; k + 1 < model.dim; ++k) {
        gapped = gapped && spectrum.eigenvalues(k) - spectrum.eigenvalues(k + 1) >= min_gap;
      }
      if (!gapped) continue;
      uhlmann::GeometryPoint geometry = uhlmann::compute_geometry(spectrum, point.drho);
      if (geometry.condition_number > max_condition) continue;
      return {std::move(model), std::move(coords), std::move(point), std::move(spectrum)};
    } catch (const uhlmann::Error&) {
      continue;
    }
  }
  throw std::runtime_error("no admissible random model found");
}

}  // namespace testsupport
