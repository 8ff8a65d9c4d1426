#include "uhlmann/uhlmann.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "uhlmann/curvature.hpp"
#include "uhlmann/estimation.hpp"
#include "uhlmann/model.hpp"
#include "uhlmann/verify.hpp"

using namespace uhlmann;

struct uhl_model {
  ModelDefinition definition;
};

struct uhl_report {
  int dim = 0;
  int num_params = 0;
  ComplexMatrix rho;
  RealVector eigenvalues;
  GeometryPoint geometry;
  CurvatureReport curvature;
  PccResult pcc;
  std::optional<double> gamma;
};

struct uhl_curve {
  BoundaryCurve curve;
};

struct uhl_checks {
  VerificationReport report;
};

namespace {

thread_local std::string g_last_error;
thread_local uhl_status g_last_status = UHL_OK;
thread_local long g_last_offset = -1;
thread_local int g_last_row = -1;
thread_local int g_last_col = -1;

uhl_status map_code(errc code) {
  switch (code) {
    case errc::syntax_error: return UHL_ERR_SYNTAX;
    case errc::unknown_identifier: return UHL_ERR_UNKNOWN_IDENTIFIER;
    case errc::domain_error: return UHL_ERR_DOMAIN;
    case errc::format_error: return UHL_ERR_FORMAT;
    case errc::validation_error: return UHL_ERR_VALIDATION;
    case errc::unknown_model: return UHL_ERR_UNKNOWN_MODEL;
    case errc::eigensolver_failure: return UHL_ERR_EIGENSOLVER;
    case errc::rank_change: return UHL_ERR_RANK_CHANGE;
    case errc::degenerate_metric: return UHL_ERR_DEGENERATE_METRIC;
    case errc::not_pure: return UHL_ERR_NOT_PURE;
    case errc::step_too_small: return UHL_ERR_STEP_TOO_SMALL;
    case errc::degenerate_spectrum: return UHL_ERR_DEGENERATE_SPECTRUM;
    case errc::wrong_arity: return UHL_ERR_WRONG_ARITY;
    case errc::no_solution: return UHL_ERR_NO_SOLUTION;
    case errc::numerical_check_failed: return UHL_ERR_NUMERICAL;
    case errc::invalid_argument: return UHL_ERR_INVALID_ARGUMENT;
  }
  return UHL_ERR_UNKNOWN;
}

void clear_error() {
  g_last_error.clear();
  g_last_status = UHL_OK;
  g_last_offset = -1;
  g_last_row = -1;
  g_last_col = -1;
}

void record_error(const Error& err) {
  g_last_error = err.what();
  g_last_status = map_code(err.code());
  g_last_offset = err.offset();
  g_last_row = err.row();
  g_last_col = err.col();
}

void record_message(uhl_status status, const char* message) {
  g_last_error = message;
  g_last_status = status;
  g_last_offset = -1;
  g_last_row = -1;
  g_last_col = -1;
}

/// Runs `fn`, routing failures into the thread-local error slot.
template <typename Fn>
uhl_status guarded(Fn&& fn) {
  clear_error();
  try {
    fn();
    return UHL_OK;
  } catch (const Error& err) {
    record_error(err);
  } catch (const std::bad_alloc&) {
    record_message(UHL_ERR_UNKNOWN, "out of memory");
  } catch (const std::exception& ex) {
    record_message(UHL_ERR_UNKNOWN, ex.what());
  }
  return g_last_status;
}

VerifyOptions to_verify_options(const uhl_options* options) {
  VerifyOptions out;
  if (options != nullptr) {
    if (options->rank_tol > 0) out.rank_tol = options->rank_tol;
    if (options->pcc_tol > 0) out.pcc_tol = options->pcc_tol;
    if (options->fd_step > 0) out.fd_step = options->fd_step;
    out.richardson = options->richardson != 0;
  }
  return out;
}

void write_complex(const ComplexMatrix& m, double* out) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      *out++ = m(r, c).real();
      *out++ = m(r, c).imag();
    }
  }
}

void write_real(const RealMatrix& m, double* out) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) *out++ = m(r, c);
  }
}

uhl_report* build_report(const ModelDefinition& model, const double* coords,
                         const uhl_options* options) {
  const double rank_tol =
      options != nullptr && options->rank_tol > 0 ? options->rank_tol : model.rank_tol;
  const double pcc_tol = options != nullptr && options->pcc_tol > 0 ? options->pcc_tol : kPccTol;
  const double fd_step =
      options != nullptr && options->fd_step > 0 ? options->fd_step : kDefaultFdStep;
  const bool richardson = options != nullptr && options->richardson != 0;
  const int method = options != nullptr ? options->method : UHL_METHOD_SPECTRAL;

  const std::span<const double> at(coords, static_cast<std::size_t>(model.num_params()));
  ModelPoint point = evaluate(model, at);
  Spectrum spectrum = spectral_decompose(point, rank_tol);

  auto report = std::make_unique<uhl_report>();
  report->dim = model.dim;
  report->num_params = model.num_params();
  report->rho = point.rho;
  report->eigenvalues = spectrum.eigenvalues;
  report->geometry = compute_geometry(spectrum, point.drho);

  switch (method) {
    case UHL_METHOD_SPECTRAL:
      report->curvature = scalar_curvature(spectrum, report->geometry);
      break;
    case UHL_METHOD_DUAL_CONTRACTION:
      report->curvature = curvature_via_dual_contraction(
          spectrum, dual_curvature_all(model, at, fd_step, richardson), report->geometry);
      break;
    case UHL_METHOD_CONNECTION:
      report->curvature =
          curvature_via_connection(connection_form(model, at, fd_step), report->geometry);
      break;
    default:
      throw Error(errc::invalid_argument, "unknown curvature method selector");
  }

  report->pcc = pcc_check(spectrum, report->geometry.g_ops, pcc_tol);
  if (model.num_params() == 2) {
    report->gamma =
        incompatibility_gamma(spectrum, report->geometry.g_ops, report->geometry.qfi);
  }
  return report.release();
}

}  // namespace

extern "C" {

const char* uhl_version(void) { return "0.1.0"; }

const char* uhl_last_error(void) { return g_last_error.c_str(); }

uhl_status uhl_last_status(void) { return g_last_status; }

long uhl_last_error_offset(void) { return g_last_offset; }

void uhl_last_error_entry(int* row, int* col) {
  if (row != nullptr) *row = g_last_row;
  if (col != nullptr) *col = g_last_col;
}

void uhl_options_init(uhl_options* options) {
  if (options == nullptr) return;
  options->rank_tol = 0.0;
  options->pcc_tol = 0.0;
  options->fd_step = 0.0;
  options->method = UHL_METHOD_SPECTRAL;
  options->richardson = 0;
  options->measure = UHL_MEASURE_RIEMANNIAN;
}

uhl_model* uhl_model_builtin(const char* name) {
  uhl_model* out = nullptr;
  guarded([&] {
    if (name == nullptr) throw Error(errc::invalid_argument, "name is null");
    out = new uhl_model{builtin(name)};
  });
  return out;
}

uhl_model* uhl_model_parse(const char* model_file_text) {
  uhl_model* out = nullptr;
  guarded([&] {
    if (model_file_text == nullptr) throw Error(errc::invalid_argument, "text is null");
    out = new uhl_model{load_model(model_file_text)};
  });
  return out;
}

void uhl_model_free(uhl_model* model) { delete model; }

int uhl_model_dim(const uhl_model* model) { return model != nullptr ? model->definition.dim : 0; }

int uhl_model_num_params(const uhl_model* model) {
  return model != nullptr ? model->definition.num_params() : 0;
}

const char* uhl_model_param_name(const uhl_model* model, int index) {
  if (model == nullptr || index < 0 || index >= model->definition.num_params()) return nullptr;
  return model->definition.params[static_cast<std::size_t>(index)].c_str();
}

const char* uhl_model_name(const uhl_model* model) {
  return model != nullptr ? model->definition.name.c_str() : nullptr;
}

uhl_status uhl_parse_check(const char* source, const char* const* params, int num_params) {
  return guarded([&] {
    if (source == nullptr) throw Error(errc::invalid_argument, "source is null");
    std::vector<std::string> names;
    for (int k = 0; k < num_params; ++k) names.emplace_back(params[k]);
    expr::parse(source, names);
  });
}

char* uhl_parse_canonical(const char* source, const char* const* params, int num_params) {
  char* out = nullptr;
  guarded([&] {
    if (source == nullptr) throw Error(errc::invalid_argument, "source is null");
    std::vector<std::string> names;
    for (int k = 0; k < num_params; ++k) names.emplace_back(params[k]);
    const std::string printed = expr::to_string(expr::parse(source, names));
    out = static_cast<char*>(std::malloc(printed.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, printed.c_str(), printed.size() + 1);
  });
  return out;
}

void uhl_string_free(char* text) { std::free(text); }

uhl_report* uhl_report_compute(const uhl_model* model, const double* coords,
                               const uhl_options* options) {
  uhl_report* out = nullptr;
  guarded([&] {
    if (model == nullptr || coords == nullptr) {
      throw Error(errc::invalid_argument, "model and coords are required");
    }
    out = build_report(model->definition, coords, options);
  });
  return out;
}

void uhl_report_free(uhl_report* report) { delete report; }

int uhl_report_dim(const uhl_report* report) { return report != nullptr ? report->dim : 0; }

int uhl_report_num_params(const uhl_report* report) {
  return report != nullptr ? report->num_params : 0;
}

double uhl_report_curvature(const uhl_report* report) {
  return report != nullptr ? report->curvature.curvature : 0.0;
}

double uhl_report_pair_term(const uhl_report* report, int mu, int nu) {
  if (report == nullptr) return 0.0;
  auto it = report->curvature.pair_terms.find({mu, nu});
  return it != report->curvature.pair_terms.end() ? it->second : 0.0;
}

const char* uhl_report_method(const uhl_report* report) {
  return report != nullptr ? report->curvature.method.c_str() : nullptr;
}

int uhl_report_rank(const uhl_report* report) {
  return report != nullptr ? report->curvature.diagnostics.rank : 0;
}

double uhl_report_condition_number(const uhl_report* report) {
  return report != nullptr ? report->geometry.condition_number : 0.0;
}

double uhl_report_fd_step_used(const uhl_report* report) {
  if (report == nullptr) return 0.0;
  return report->curvature.diagnostics.fd_step.value_or(0.0);
}

int uhl_report_pcc_satisfied(const uhl_report* report) {
  return report != nullptr && report->pcc.satisfied ? 1 : 0;
}

double uhl_report_pcc_residual(const uhl_report* report) {
  return report != nullptr ? report->pcc.residual : 0.0;
}

double uhl_report_pcc_tol(const uhl_report* report) {
  return report != nullptr ? report->pcc.pcc_tol : 0.0;
}

int uhl_report_has_gamma(const uhl_report* report) {
  return report != nullptr && report->gamma.has_value() ? 1 : 0;
}

double uhl_report_gamma(const uhl_report* report) {
  return report != nullptr && report->gamma.has_value() ? *report->gamma : 0.0;
}

void uhl_report_eigenvalues(const uhl_report* report, double* out) {
  if (report == nullptr || out == nullptr) return;
  for (int k = 0; k < report->dim; ++k) out[k] = report->eigenvalues(k);
}

void uhl_report_rho(const uhl_report* report, double* out) {
  if (report == nullptr || out == nullptr) return;
  write_complex(report->rho, out);
}

void uhl_report_g_operator(const uhl_report* report, int mu, double* out) {
  if (report == nullptr || out == nullptr || mu < 0 || mu >= report->num_params) return;
  write_complex(report->geometry.g_ops[static_cast<std::size_t>(mu)], out);
}

void uhl_report_metric(const uhl_report* report, double* out) {
  if (report == nullptr || out == nullptr) return;
  write_real(report->geometry.metric, out);
}

void uhl_report_metric_inverse(const uhl_report* report, double* out) {
  if (report == nullptr || out == nullptr) return;
  write_real(report->geometry.metric_inv, out);
}

void uhl_report_qfi(const uhl_report* report, double* out) {
  if (report == nullptr || out == nullptr) return;
  write_real(report->geometry.qfi, out);
}

uhl_status uhl_curvature_at(const uhl_model* model, const double* coords,
                            const uhl_options* options, double* curvature, int* rank,
                            double* condition_number) {
  return guarded([&] {
    if (model == nullptr || coords == nullptr) {
      throw Error(errc::invalid_argument, "model and coords are required");
    }
    std::unique_ptr<uhl_report> report(build_report(model->definition, coords, options));
    if (curvature != nullptr) *curvature = report->curvature.curvature;
    if (rank != nullptr) *rank = report->curvature.diagnostics.rank;
    if (condition_number != nullptr) *condition_number = report->geometry.condition_number;
  });
}

uhl_status uhl_curvature_action(const uhl_model* model, const double* lo, const double* hi,
                                const int* steps, const uhl_options* options, double* action) {
  return guarded([&] {
    if (model == nullptr || lo == nullptr || hi == nullptr || steps == nullptr ||
        action == nullptr) {
      throw Error(errc::invalid_argument, "model, region and output are required");
    }
    const int p = model->definition.num_params();
    std::vector<GridAxis> region;
    for (int k = 0; k < p; ++k) region.push_back({lo[k], hi[k], steps[k]});
    const Measure measure = options != nullptr && options->measure == UHL_MEASURE_LEBESGUE
                                ? Measure::lebesgue
                                : Measure::riemannian;
    const double rank_tol =
        options != nullptr && options->rank_tol > 0 ? options->rank_tol : model->definition.rank_tol;
    *action = curvature_action(model->definition, region, measure, rank_tol);
  });
}

uhl_status uhl_tradeoff_feasible(const double* covariance, int repetitions, const double* qfi,
                                 double gamma, int* verdict) {
  return guarded([&] {
    if (covariance == nullptr || qfi == nullptr || verdict == nullptr) {
      throw Error(errc::invalid_argument, "covariance, qfi and verdict are required");
    }
    TradeoffQuery query;
    query.covariance = Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>>(covariance);
    query.qfi = Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>>(qfi);
    query.repetitions = repetitions;
    query.gamma = gamma;
    *verdict = static_cast<int>(tradeoff_feasible(query));
  });
}

uhl_curve* uhl_tradeoff_curve(const double* qfi, double gamma, int repetitions, const double* v1,
                              int count) {
  uhl_curve* out = nullptr;
  guarded([&] {
    if (qfi == nullptr || (v1 == nullptr && count > 0) || count < 0) {
      throw Error(errc::invalid_argument, "qfi and v1 grid are required");
    }
    const RealMatrix k = Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>>(qfi);
    out = new uhl_curve{
        tradeoff_boundary_curve(k, gamma, repetitions, std::vector<double>(v1, v1 + count))};
  });
  return out;
}

void uhl_curve_free(uhl_curve* curve) { delete curve; }

int uhl_curve_size(const uhl_curve* curve) {
  return curve != nullptr ? static_cast<int>(curve->curve.points.size()) : 0;
}

uhl_status uhl_curve_point(const uhl_curve* curve, int index, double* v1, double* v2_min) {
  if (curve == nullptr || index < 0 || index >= static_cast<int>(curve->curve.points.size())) {
    record_message(UHL_ERR_INVALID_ARGUMENT, "curve index out of range");
    return UHL_ERR_INVALID_ARGUMENT;
  }
  const BoundaryPoint& point = curve->curve.points[static_cast<std::size_t>(index)];
  if (v1 != nullptr) *v1 = point.v1;
  if (!point.v2_min.has_value()) return UHL_ERR_NO_SOLUTION;
  if (v2_min != nullptr) *v2_min = *point.v2_min;
  return UHL_OK;
}

void uhl_curve_chart(const uhl_curve* curve, double* k_eigenvalues, double* rotation) {
  if (curve == nullptr) return;
  if (k_eigenvalues != nullptr) {
    k_eigenvalues[0] = curve->curve.chart.eigenvalues(0);
    k_eigenvalues[1] = curve->curve.chart.eigenvalues(1);
  }
  if (rotation != nullptr) write_real(curve->curve.chart.rotation, rotation);
}

uhl_checks* uhl_verify(const uhl_model* model, const double* coords, const uhl_options* options) {
  uhl_checks* out = nullptr;
  guarded([&] {
    if (model == nullptr || coords == nullptr) {
      throw Error(errc::invalid_argument, "model and coords are required");
    }
    const std::span<const double> at(coords,
                                     static_cast<std::size_t>(model->definition.num_params()));
    out = new uhl_checks{verify_point(model->definition, at, to_verify_options(options))};
  });
  return out;
}

void uhl_checks_free(uhl_checks* checks) { delete checks; }

int uhl_checks_count(const uhl_checks* checks) {
  return checks != nullptr ? static_cast<int>(checks->report.checks.size()) : 0;
}

int uhl_checks_all_passed(const uhl_checks* checks) {
  return checks != nullptr && checks->report.all_passed() ? 1 : 0;
}

static const VerificationCheck* check_at(const uhl_checks* checks, int index) {
  if (checks == nullptr || index < 0 ||
      index >= static_cast<int>(checks->report.checks.size())) {
    return nullptr;
  }
  return &checks->report.checks[static_cast<std::size_t>(index)];
}

const char* uhl_check_name(const uhl_checks* checks, int index) {
  const VerificationCheck* check = check_at(checks, index);
  return check != nullptr ? check->name.c_str() : nullptr;
}

int uhl_check_status(const uhl_checks* checks, int index) {
  const VerificationCheck* check = check_at(checks, index);
  return check != nullptr ? static_cast<int>(check->status) : -1;
}

double uhl_check_residual(const uhl_checks* checks, int index) {
  const VerificationCheck* check = check_at(checks, index);
  return check != nullptr ? check->residual : 0.0;
}

double uhl_check_tolerance(const uhl_checks* checks, int index) {
  const VerificationCheck* check = check_at(checks, index);
  return check != nullptr ? check->tolerance : 0.0;
}

const char* uhl_check_detail(const uhl_checks* checks, int index) {
  const VerificationCheck* check = check_at(checks, index);
  return check != nullptr ? check->detail.c_str() : nullptr;
}

}  // extern "C"
