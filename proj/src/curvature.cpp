#include "uhlmann/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace uhlmann {

namespace {

std::string coords_to_string(std::span<const double> coords) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (k) os << ", ";
    os << coords[k];
  }
  os << ")";
  return os.str();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

void check_real(Complex total, const char* method) {
  if (std::abs(total.imag()) > 1e-5 * (1.0 + std::abs(total.real()))) {
    throw Error(errc::numerical_check_failed,
                std::string(method) + ": curvature has a non-real residue " +
                    std::to_string(total.imag()));
  }
}

/// Spectrum plus the solved G operators at one stencil point, with
/// eigenvector phases aligned to a reference frame.
struct StencilFrame {
  RealVector eigenvalues;
  RealVector sqrt_eigenvalues;
  ComplexMatrix vecs;  // aligned columns
  std::vector<ComplexMatrix> g_ops_eig;  // G_mu in the aligned frame (only filled where needed)
};

Spectrum full_rank_spectrum(const ModelDefinition& model, std::span<const double> coords) {
  ModelPoint point = evaluate(model, coords);
  Spectrum spectrum = spectral_decompose(point, model.rank_tol);
  if (spectrum.rank != model.dim) {
    throw Error(errc::rank_change, "model is rank-deficient at " +
                                       coords_to_string(coords) + " (rank " +
                                       std::to_string(spectrum.rank) + " of " +
                                       std::to_string(model.dim) + ")");
  }
  return spectrum;
}

}  // namespace

CurvatureReport scalar_curvature(const Spectrum& spectrum, const GeometryPoint& geometry) {
  const int p = static_cast<int>(geometry.g_ops.size());
  const int r = spectrum.rank;
  const ComplexMatrix& v = spectrum.eigenvectors;

  std::vector<ComplexMatrix> lower(geometry.g_ops.size()), upper(geometry.g_ops.size());
  for (int mu = 0; mu < p; ++mu) {
    lower[static_cast<std::size_t>(mu)] = v.adjoint() * geometry.g_ops[static_cast<std::size_t>(mu)] * v;
    upper[static_cast<std::size_t>(mu)] =
        v.adjoint() * geometry.g_ops_raised[static_cast<std::size_t>(mu)] * v;
  }

  CurvatureReport report;
  report.method = "spectral";
  report.diagnostics.rank = r;
  report.diagnostics.metric_condition_number = geometry.condition_number;

  double total = 0.0;
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = 0; nu < p; ++nu) {
      if (mu == nu) continue;  // commutator vanishes identically
      const ComplexMatrix comm = commutator(lower[static_cast<std::size_t>(mu)],
                                            lower[static_cast<std::size_t>(nu)]);
      const ComplexMatrix comm_raised = commutator(upper[static_cast<std::size_t>(mu)],
                                                   upper[static_cast<std::size_t>(nu)]);
      Complex acc(0.0, 0.0);
      for (int l = 0; l < r; ++l) {
        for (int m = 0; m < r; ++m) {
          const double s = spectrum.eigenvalues(l) + spectrum.eigenvalues(m);
          const double w = spectrum.eigenvalues(l) * spectrum.eigenvalues(m) / (s * s);
          acc += w * comm(l, m) * comm_raised(m, l);
        }
      }
      const double term = -acc.real();
      report.pair_terms[{mu, nu}] = term;
      total += term;
    }
  }
  report.curvature = total;
  return report;
}

CurvatureReport scalar_curvature_pure(const Spectrum& spectrum, const GeometryPoint& geometry) {
  if (spectrum.rank != 1) {
    throw Error(errc::not_pure,
                "pure-state curvature requires rank 1, got rank " + std::to_string(spectrum.rank));
  }
  const int p = static_cast<int>(geometry.g_ops.size());
  const ComplexVector psi = spectrum.eigenvectors.col(0);

  CurvatureReport report;
  report.method = "spectral";
  report.diagnostics.rank = 1;
  report.diagnostics.metric_condition_number = geometry.condition_number;

  double total = 0.0;
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = 0; nu < p; ++nu) {
      if (mu == nu) continue;
      const Complex lo = psi.dot(geometry.g_ops[static_cast<std::size_t>(mu)] *
                                 (geometry.g_ops[static_cast<std::size_t>(nu)] * psi));
      const Complex hi = psi.dot(geometry.g_ops_raised[static_cast<std::size_t>(mu)] *
                                 (geometry.g_ops_raised[static_cast<std::size_t>(nu)] * psi));
      const double term = std::abs(lo.imag() * hi.imag());
      report.pair_terms[{mu, nu}] = term;
      total += term;
    }
  }
  report.curvature = total;
  return report;
}

DualCurvature dual_curvature(const ModelDefinition& model, std::span<const double> coords,
                             int mu, int nu, double fd_step, bool richardson) {
  const int p = model.num_params();
  if (mu < 0 || nu < 0 || mu >= p || nu >= p) {
    throw Error(errc::invalid_argument, "parameter index out of range");
  }
  if (fd_step < kMinFdStep) {
    throw Error(errc::step_too_small,
                "fd_step " + std::to_string(fd_step) + " is below " + std::to_string(kMinFdStep));
  }

  DualCurvature out;
  out.mu = mu;
  out.nu = nu;
  out.fd_step = fd_step;

  if (mu == nu) {
    out.f_tilde = ComplexMatrix::Zero(model.dim, model.dim);
    return out;
  }

  ModelPoint center = evaluate(model, coords);
  Spectrum center_spectrum = spectral_decompose(center, model.rank_tol);
  if (center_spectrum.rank != model.dim) {
    throw Error(errc::rank_change,
                "dual curvature requires a full-rank model at " + coords_to_string(coords));
  }
  const ComplexMatrix g_mu = solve_g_operator(center_spectrum, center.drho[static_cast<std::size_t>(mu)]);
  const ComplexMatrix g_nu = solve_g_operator(center_spectrum, center.drho[static_cast<std::size_t>(nu)]);

  // G_which at a shifted point (full-rank enforced there as well).
  auto g_at = [&](int axis, double step, int which) {
    std::vector<double> shifted(coords.begin(), coords.end());
    shifted[static_cast<std::size_t>(axis)] += step;
    ModelPoint point = evaluate(model, shifted);
    Spectrum spectrum = spectral_decompose(point, model.rank_tol);
    if (spectrum.rank != model.dim) {
      throw Error(errc::rank_change,
                  "dual curvature stencil point " + coords_to_string(shifted) +
                      " is rank-deficient");
    }
    return solve_g_operator(spectrum, point.drho[static_cast<std::size_t>(which)]);
  };
  auto central = [&](int axis, int which, double h) {
    return ((g_at(axis, h, which) - g_at(axis, -h, which)) / (2.0 * h)).eval();
  };
  auto derivative = [&](int axis, int which) {
    ComplexMatrix d = central(axis, which, fd_step);
    if (richardson) {
      const ComplexMatrix d_half = central(axis, which, 0.5 * fd_step);
      d = (4.0 * d_half - d) / 3.0;
    }
    return d;
  };

  const ComplexMatrix dg_nu = derivative(mu, nu);
  const ComplexMatrix dg_mu = derivative(nu, mu);
  out.f_tilde = (dg_nu - dg_mu) - commutator(g_mu, g_nu);
  out.rho_relation_residual =
      max_abs(ComplexMatrix(out.f_tilde * center.rho + center.rho * out.f_tilde.adjoint()));
  return out;
}

std::vector<DualCurvature> dual_curvature_all(const ModelDefinition& model,
                                              std::span<const double> coords, double fd_step,
                                              bool richardson) {
  std::vector<DualCurvature> out;
  for (int mu = 0; mu < model.num_params(); ++mu) {
    for (int nu = mu + 1; nu < model.num_params(); ++nu) {
      out.push_back(dual_curvature(model, coords, mu, nu, fd_step, richardson));
    }
  }
  return out;
}

CurvatureReport curvature_via_dual_contraction(const Spectrum& spectrum,
                                               const std::vector<DualCurvature>& duals,
                                               const GeometryPoint& geometry) {
  const int p = static_cast<int>(geometry.g_ops.size());
  const int r = spectrum.rank;
  const int d = static_cast<int>(spectrum.eigenvalues.size());
  const ComplexMatrix& v = spectrum.eigenvectors;

  // Antisymmetric completion of the supplied upper-triangle components,
  // transformed to the eigenbasis.
  std::vector<std::vector<ComplexMatrix>> f(
      static_cast<std::size_t>(p),
      std::vector<ComplexMatrix>(static_cast<std::size_t>(p), ComplexMatrix::Zero(d, d)));
  double fd_step = kDefaultFdStep;
  for (const DualCurvature& dc : duals) {
    if (dc.mu < 0 || dc.nu < 0 || dc.mu >= p || dc.nu >= p || dc.mu >= dc.nu) {
      throw Error(errc::invalid_argument, "duals must cover pairs with mu < nu");
    }
    const ComplexMatrix f_eig = v.adjoint() * dc.f_tilde * v;
    f[static_cast<std::size_t>(dc.mu)][static_cast<std::size_t>(dc.nu)] = f_eig;
    f[static_cast<std::size_t>(dc.nu)][static_cast<std::size_t>(dc.mu)] = -f_eig;
    fd_step = dc.fd_step;
  }

  CurvatureReport report;
  report.method = "dual-contraction";
  report.diagnostics.rank = r;
  report.diagnostics.metric_condition_number = geometry.condition_number;
  report.diagnostics.fd_step = fd_step;

  const RealMatrix& inv = geometry.metric_inv;
  Complex total(0.0, 0.0);
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = 0; nu < p; ++nu) {
      if (mu == nu) continue;
      ComplexMatrix raised = ComplexMatrix::Zero(d, d);
      for (int alpha = 0; alpha < p; ++alpha) {
        for (int beta = 0; beta < p; ++beta) {
          const double w = inv(mu, alpha) * inv(nu, beta);
          if (w != 0.0) raised += w * f[static_cast<std::size_t>(alpha)][static_cast<std::size_t>(beta)];
        }
      }
      Complex acc(0.0, 0.0);
      for (int l = 0; l < r; ++l) {
        for (int m = 0; m < r; ++m) {
          acc += f[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)](l, m) * raised(m, l);
        }
      }
      const Complex term = -0.25 * acc;
      report.pair_terms[{mu, nu}] = term.real();
      total += term;
    }
  }
  check_real(total, "dual-contraction");
  report.curvature = total.real();
  return report;
}

ConnectionFrame connection_form(const ModelDefinition& model, std::span<const double> coords,
                                double fd_step) {
  const int p = model.num_params();
  const int d = model.dim;
  if (fd_step < kMinFdStep) {
    throw Error(errc::step_too_small,
                "fd_step " + std::to_string(fd_step) + " is below " + std::to_string(kMinFdStep));
  }

  const Spectrum center = full_rank_spectrum(model, coords);

  // Aligned frame for an offset point of the stencil. `offsets` counts steps
  // of fd_step along each parameter axis.
  std::map<std::vector<int>, StencilFrame> frames;
  auto frame_at = [&](const std::vector<int>& offsets) -> StencilFrame& {
    auto it = frames.find(offsets);
    if (it != frames.end()) return it->second;

    std::vector<double> shifted(coords.begin(), coords.end());
    for (int k = 0; k < p; ++k) shifted[static_cast<std::size_t>(k)] += offsets[static_cast<std::size_t>(k)] * fd_step;
    const Spectrum spectrum = full_rank_spectrum(model, shifted);

    double min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < d; ++k) {
      min_gap = std::min(min_gap, spectrum.eigenvalues(k) - spectrum.eigenvalues(k + 1));
    }
    if (min_gap < kGapTol) {
      throw Error(errc::degenerate_spectrum,
                  "eigenvalue gap " + std::to_string(min_gap) + " at " +
                      coords_to_string(shifted) + " is below the gap tolerance");
    }

    StencilFrame frame;
    frame.eigenvalues = spectrum.eigenvalues;
    frame.sqrt_eigenvalues = spectrum.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    frame.vecs = spectrum.eigenvectors;
    // Phase-align every column to the center frame so that all connection
    // evaluations live in one gauge.
    for (int m = 0; m < d; ++m) {
      const Complex overlap = center.eigenvectors.col(m).dot(frame.vecs.col(m));
      if (std::abs(overlap) < 0.7) {
        throw Error(errc::degenerate_spectrum,
                    "eigenvector correspondence lost at " + coords_to_string(shifted));
      }
      frame.vecs.col(m) *= std::conj(overlap) / std::abs(overlap);
    }
    ModelPoint point = evaluate(model, shifted);
    Spectrum aligned = spectrum;
    aligned.eigenvectors = frame.vecs;
    frame.g_ops_eig.resize(static_cast<std::size_t>(p));
    for (int mu = 0; mu < p; ++mu) {
      const ComplexMatrix g = solve_g_operator(aligned, point.drho[static_cast<std::size_t>(mu)]);
      frame.g_ops_eig[static_cast<std::size_t>(mu)] = frame.vecs.adjoint() * g * frame.vecs;
    }
    return frames.emplace(offsets, std::move(frame)).first->second;
  };

  double antiherm_residual = 0.0;
  // A_nu at a stencil point, in the center-aligned gauge.
  auto connection_at = [&](const std::vector<int>& at, int nu) {
    std::vector<int> plus = at;
    std::vector<int> minus = at;
    plus[static_cast<std::size_t>(nu)] += 1;
    minus[static_cast<std::size_t>(nu)] -= 1;
    const StencilFrame& here = frame_at(at);
    const StencilFrame& hi = frame_at(plus);
    const StencilFrame& lo = frame_at(minus);

    const RealVector dsqrt = (hi.sqrt_eigenvalues - lo.sqrt_eigenvalues) / (2.0 * fd_step);
    const ComplexMatrix dphi = (hi.vecs - lo.vecs) / (2.0 * fd_step);
    const ComplexMatrix w = here.vecs.adjoint() * dphi;  // w(k,m) = <phi_k | d_nu phi_m>
    const ComplexMatrix& g_here = here.g_ops_eig[static_cast<std::size_t>(nu)];

    ComplexMatrix a(d, d);
    for (int m = 0; m < d; ++m) {
      for (int k = 0; k < d; ++k) {
        Complex val = here.sqrt_eigenvalues(m) * (g_here(k, m) - w(k, m));
        if (k == m) val -= dsqrt(m);
        a(m, k) = val / here.sqrt_eigenvalues(k);
      }
    }
    antiherm_residual = std::max(antiherm_residual, max_abs(ComplexMatrix(a + a.adjoint())));
    return (0.5 * (a - a.adjoint())).eval();
  };

  ConnectionFrame out;
  out.fd_step = fd_step;
  out.sqrt_eigenvalues = center.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  out.eigenvectors = center.eigenvectors;

  const std::vector<int> origin(static_cast<std::size_t>(p), 0);
  out.connection.resize(static_cast<std::size_t>(p));
  for (int mu = 0; mu < p; ++mu) {
    out.connection[static_cast<std::size_t>(mu)] = connection_at(origin, mu);
  }

  // Residual of the defining equation at the center, after symmetrization.
  {
    const StencilFrame& here = frame_at(origin);
    double residual = 0.0;
    for (int mu = 0; mu < p; ++mu) {
      std::vector<int> plus = origin, minus = origin;
      plus[static_cast<std::size_t>(mu)] += 1;
      minus[static_cast<std::size_t>(mu)] -= 1;
      const StencilFrame& hi = frame_at(plus);
      const StencilFrame& lo = frame_at(minus);
      const RealVector dsqrt = (hi.sqrt_eigenvalues - lo.sqrt_eigenvalues) / (2.0 * fd_step);
      const ComplexMatrix dphi = (hi.vecs - lo.vecs) / (2.0 * fd_step);
      const ComplexMatrix w = here.vecs.adjoint() * dphi;
      const ComplexMatrix& g_here = here.g_ops_eig[static_cast<std::size_t>(mu)];
      const ComplexMatrix& a = out.connection[static_cast<std::size_t>(mu)];
      for (int m = 0; m < d; ++m) {
        for (int k = 0; k < d; ++k) {
          Complex lhs = here.sqrt_eigenvalues(m) * g_here(k, m) - here.sqrt_eigenvalues(k) * a(m, k);
          Complex rhs = here.sqrt_eigenvalues(m) * w(k, m);
          if (k == m) rhs += dsqrt(m);
          residual = std::max(residual, std::abs(lhs - rhs));
        }
      }
    }
    out.defining_residual = residual;
    if (residual > 1e-5) {
      throw Error(errc::numerical_check_failed,
                  "Uhlmann connection residual " + std::to_string(residual) +
                      " exceeds 1e-5; the finite-difference frame is unreliable here");
    }
  }
  out.antihermiticity_residual = antiherm_residual;

  // F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu].
  out.field_strength.assign(
      static_cast<std::size_t>(p),
      std::vector<ComplexMatrix>(static_cast<std::size_t>(p), ComplexMatrix::Zero(d, d)));
  auto da = [&](int along, int which) {
    std::vector<int> plus = origin, minus = origin;
    plus[static_cast<std::size_t>(along)] += 1;
    minus[static_cast<std::size_t>(along)] -= 1;
    return ((connection_at(plus, which) - connection_at(minus, which)) / (2.0 * fd_step)).eval();
  };
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = mu + 1; nu < p; ++nu) {
      const ComplexMatrix f = da(mu, nu) - da(nu, mu) +
                              commutator(out.connection[static_cast<std::size_t>(mu)],
                                         out.connection[static_cast<std::size_t>(nu)]);
      out.field_strength[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)] = f;
      out.field_strength[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] = -f;
    }
  }
  return out;
}

CurvatureReport curvature_via_connection(const ConnectionFrame& frame,
                                         const GeometryPoint& geometry) {
  const int p = static_cast<int>(geometry.g_ops.size());
  const int r = static_cast<int>(frame.sqrt_eigenvalues.size());

  CurvatureReport report;
  report.method = "connection";
  report.diagnostics.rank = r;
  report.diagnostics.metric_condition_number = geometry.condition_number;
  report.diagnostics.fd_step = frame.fd_step;

  const RealMatrix& inv = geometry.metric_inv;
  Complex total(0.0, 0.0);
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = 0; nu < p; ++nu) {
      if (mu == nu) continue;
      ComplexMatrix raised = ComplexMatrix::Zero(r, r);
      for (int alpha = 0; alpha < p; ++alpha) {
        for (int beta = 0; beta < p; ++beta) {
          const double w = inv(mu, alpha) * inv(nu, beta);
          if (w != 0.0) {
            raised += w * frame.field_strength[static_cast<std::size_t>(alpha)]
                                              [static_cast<std::size_t>(beta)];
          }
        }
      }
      const Complex term =
          -0.25 *
          (frame.field_strength[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)] * raised)
              .trace();
      report.pair_terms[{mu, nu}] = term.real();
      total += term;
    }
  }
  check_real(total, "connection");
  report.curvature = total.real();
  return report;
}

double curvature_action(const ModelDefinition& model, const std::vector<GridAxis>& region,
                        Measure measure, double rank_tol) {
  const int p = model.num_params();
  if (static_cast<int>(region.size()) != p) {
    throw Error(errc::invalid_argument, "region must specify one axis per parameter");
  }
  double cell = 1.0;
  long total_nodes = 1;
  for (const GridAxis& axis : region) {
    if (axis.n_steps < 1 || !(axis.hi > axis.lo)) {
      throw Error(errc::invalid_argument, "each axis needs hi > lo and n_steps >= 1");
    }
    cell *= (axis.hi - axis.lo) / axis.n_steps;
    total_nodes *= axis.n_steps;
  }

  double sum = 0.0;
  std::vector<double> at(static_cast<std::size_t>(p), 0.0);
  for (long node = 0; node < total_nodes; ++node) {
    long rem = node;
    for (int k = p - 1; k >= 0; --k) {
      const GridAxis& axis = region[static_cast<std::size_t>(k)];
      const long j = rem % axis.n_steps;
      rem /= axis.n_steps;
      const double step = (axis.hi - axis.lo) / axis.n_steps;
      at[static_cast<std::size_t>(k)] = axis.lo + (static_cast<double>(j) + 0.5) * step;
    }
    try {
      ModelPoint point = evaluate(model, at);
      Spectrum spectrum = spectral_decompose(point, rank_tol);
      GeometryPoint geometry = compute_geometry(spectrum, point.drho);
      CurvatureReport report = scalar_curvature(spectrum, geometry);
      const double weight =
          measure == Measure::riemannian ? std::sqrt(geometry.metric.determinant()) : 1.0;
      sum += report.curvature * weight;
    } catch (const Error& err) {
      throw Error(err.code(),
                  std::string(err.what()) + " [at grid node " + coords_to_string(at) + "]");
    }
  }
  return sum * cell;
}

}  // namespace uhlmann
