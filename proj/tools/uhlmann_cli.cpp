// Command-line front end; talks to the library exclusively through the
// extern-C surface in uhlmann/uhlmann.h.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uhlmann/uhlmann.h"

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// logging (UHLMANN_LOG in {error, warn, info, debug}; default warn)

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel g_log_level = LogLevel::warn;

void init_log_level() {
  const char* env = std::getenv("UHLMANN_LOG");
  if (env == nullptr) return;
  const std::string value(env);
  if (value == "error") g_log_level = LogLevel::error;
  else if (value == "warn") g_log_level = LogLevel::warn;
  else if (value == "info") g_log_level = LogLevel::info;
  else if (value == "debug") g_log_level = LogLevel::debug;
  else std::cerr << "uhlmann: ignoring unknown UHLMANN_LOG value '" << value << "'\n";
}

void log_at(LogLevel level, const std::string& message) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (static_cast<int>(level) <= static_cast<int>(g_log_level)) {
    std::cerr << "uhlmann [" << names[static_cast<int>(level)] << "] " << message << "\n";
  }
}

// ---------------------------------------------------------------------------
// shared config

struct CommonOptions {
  std::string model_spec;
  std::string at_spec;
  std::string grid_spec;
  std::string format = "json";
  std::string out_path;
  std::string method = "spectral";
  std::string measure = "riemannian";
  double rank_tol = 0.0;
  double pcc_tol = 0.0;
  double fd_step = 0.0;
  bool richardson = false;
  int jobs = 1;
};

void add_model_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--model", opts.model_spec, "builtin:<name> or a model file path")->required();
  cmd->add_option("--rank-tol", opts.rank_tol, "rank tolerance (default: model's, 1e-10)");
  cmd->add_option("--pcc-tol", opts.pcc_tol, "PCC tolerance (default 1e-9)");
  cmd->add_option("--fd-step", opts.fd_step, "finite-difference step (default 1e-4)");
  cmd->add_flag("--richardson", opts.richardson, "one Richardson level on finite differences");
  cmd->add_option("--format", opts.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--out", opts.out_path, "output path (default: stdout)");
}

uhl_options to_options(const CommonOptions& opts) {
  uhl_options out;
  uhl_options_init(&out);
  out.rank_tol = opts.rank_tol;
  out.pcc_tol = opts.pcc_tol;
  out.fd_step = opts.fd_step;
  out.richardson = opts.richardson ? 1 : 0;
  if (opts.method == "spectral") out.method = UHL_METHOD_SPECTRAL;
  else if (opts.method == "dual-contraction") out.method = UHL_METHOD_DUAL_CONTRACTION;
  else if (opts.method == "connection") out.method = UHL_METHOD_CONNECTION;
  out.measure = opts.measure == "lebesgue" ? UHL_MEASURE_LEBESGUE : UHL_MEASURE_RIEMANNIAN;
  return out;
}

const char* status_name(uhl_status status) {
  switch (status) {
    case UHL_OK: return "OK";
    case UHL_ERR_SYNTAX: return "SyntaxError";
    case UHL_ERR_UNKNOWN_IDENTIFIER: return "UnknownIdentifier";
    case UHL_ERR_DOMAIN: return "DomainError";
    case UHL_ERR_FORMAT: return "FormatError";
    case UHL_ERR_VALIDATION: return "ValidationError";
    case UHL_ERR_UNKNOWN_MODEL: return "UnknownModel";
    case UHL_ERR_EIGENSOLVER: return "EigensolverFailure";
    case UHL_ERR_RANK_CHANGE: return "RankChangeError";
    case UHL_ERR_DEGENERATE_METRIC: return "DegenerateMetric";
    case UHL_ERR_NOT_PURE: return "NotPure";
    case UHL_ERR_STEP_TOO_SMALL: return "StepTooSmall";
    case UHL_ERR_DEGENERATE_SPECTRUM: return "DegenerateSpectrum";
    case UHL_ERR_WRONG_ARITY: return "WrongArity";
    case UHL_ERR_NO_SOLUTION: return "NoSolution";
    case UHL_ERR_NUMERICAL: return "NumericalCheckFailed";
    case UHL_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    default: return "UnknownError";
  }
}

[[noreturn]] void config_error(const std::string& message) {
  std::cerr << "uhlmann: " << message << "\n";
  std::exit(1);
}

struct ModelHandle {
  uhl_model* ptr = nullptr;
  ~ModelHandle() { uhl_model_free(ptr); }
};

void load_model_or_die(const std::string& spec, ModelHandle& model) {
  if (spec.rfind("builtin:", 0) == 0) {
    model.ptr = uhl_model_builtin(spec.substr(8).c_str());
  } else {
    std::ifstream in(spec);
    if (!in) config_error("cannot open model file '" + spec + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    model.ptr = uhl_model_parse(buffer.str().c_str());
  }
  if (model.ptr == nullptr) {
    std::string detail = uhl_last_error();
    int row = -1, col = -1;
    uhl_last_error_entry(&row, &col);
    if (row >= 0) detail += " (entry row " + std::to_string(row) + ", col " + std::to_string(col) + ")";
    config_error("cannot load model: " + detail);
  }
  log_at(LogLevel::debug, "loaded model '" + std::string(uhl_model_name(model.ptr)) + "'");
}

std::vector<std::string> param_names(const uhl_model* model) {
  std::vector<std::string> names;
  for (int k = 0; k < uhl_model_num_params(model); ++k) {
    names.emplace_back(uhl_model_param_name(model, k));
  }
  return names;
}

double parse_number(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    config_error("cannot parse number '" + text + "' in " + context);
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);
  return parts;
}

/// --at a=0,b=0.69 -> coords in model parameter order.
std::vector<double> parse_at(const std::string& spec, const std::vector<std::string>& params) {
  std::vector<double> coords(params.size());
  std::vector<bool> seen(params.size(), false);
  for (const std::string& part : split(spec, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) config_error("--at expects name=value pairs, got '" + part + "'");
    const std::string name = part.substr(0, eq);
    const auto it = std::find(params.begin(), params.end(), name);
    if (it == params.end()) config_error("--at names unknown parameter '" + name + "'");
    const auto idx = static_cast<std::size_t>(it - params.begin());
    if (seen[idx]) config_error("--at assigns parameter '" + name + "' twice");
    coords[idx] = parse_number(part.substr(eq + 1), "--at");
    seen[idx] = true;
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!seen[k]) config_error("--at does not assign parameter '" + params[k] + "'");
  }
  return coords;
}

struct GridAxisSpec {
  std::size_t param_index = 0;
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;
};

/// --grid a=0:6.283:25,b=0.1:2:25; both endpoints inclusive; the last listed
/// axis varies fastest.
std::vector<GridAxisSpec> parse_grid(const std::string& spec,
                                     const std::vector<std::string>& params) {
  std::vector<GridAxisSpec> axes;
  std::vector<bool> seen(params.size(), false);
  for (const std::string& part : split(spec, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      config_error("--grid expects name=lo:hi:count entries, got '" + part + "'");
    }
    const std::string name = part.substr(0, eq);
    const auto it = std::find(params.begin(), params.end(), name);
    if (it == params.end()) config_error("--grid names unknown parameter '" + name + "'");
    const auto idx = static_cast<std::size_t>(it - params.begin());
    if (seen[idx]) config_error("--grid lists parameter '" + name + "' twice");
    seen[idx] = true;

    const auto pieces = split(part.substr(eq + 1), ':');
    if (pieces.size() != 3) config_error("--grid range must be lo:hi:count");
    GridAxisSpec axis;
    axis.param_index = idx;
    axis.lo = parse_number(pieces[0], "--grid");
    axis.hi = parse_number(pieces[1], "--grid");
    axis.count = static_cast<int>(parse_number(pieces[2], "--grid"));
    if (axis.count < 1) config_error("--grid count must be >= 1");
    axes.push_back(axis);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!seen[k]) config_error("--grid does not cover parameter '" + params[k] + "'");
  }
  return axes;
}

std::vector<std::vector<double>> grid_points(const std::vector<GridAxisSpec>& axes,
                                             std::size_t num_params) {
  long total = 1;
  for (const GridAxisSpec& axis : axes) total *= axis.count;
  std::vector<std::vector<double>> points;
  points.reserve(static_cast<std::size_t>(total));
  for (long node = 0; node < total; ++node) {
    std::vector<double> coords(num_params, 0.0);
    long rem = node;
    for (std::size_t k = axes.size(); k-- > 0;) {
      const GridAxisSpec& axis = axes[k];
      const long j = rem % axis.count;
      rem /= axis.count;
      coords[axis.param_index] =
          axis.count == 1 ? axis.lo
                          : axis.lo + static_cast<double>(j) * (axis.hi - axis.lo) / (axis.count - 1);
    }
    points.push_back(std::move(coords));
  }
  return points;
}

std::vector<std::vector<double>> resolve_points(const CommonOptions& opts,
                                                const std::vector<std::string>& params,
                                                bool allow_grid) {
  const bool has_at = !opts.at_spec.empty();
  const bool has_grid = !opts.grid_spec.empty();
  if (has_at == has_grid) config_error("exactly one of --at or --grid is required");
  if (has_grid && !allow_grid) config_error("this subcommand requires a single --at point");
  if (has_at) return {parse_at(opts.at_spec, params)};
  return grid_points(parse_grid(opts.grid_spec, params), params.size());
}

struct OutputSink {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) config_error("cannot open output file '" + path + "'");
      stream = &file;
    }
  }
};

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json coords_json(const std::vector<std::string>& params, const std::vector<double>& coords) {
  json out = json::object();
  for (std::size_t k = 0; k < params.size(); ++k) out[params[k]] = coords[k];
  return out;
}

json complex_matrix_json(const double* interleaved, int rows, int cols) {
  json out = json::array();
  for (int k = 0; k < rows * cols; ++k) {
    out.push_back(json::array({interleaved[2 * k], interleaved[2 * k + 1]}));
  }
  return out;
}

json real_matrix_json(const double* data, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c) row.push_back(data[r * cols + c]);
    out.push_back(row);
  }
  return out;
}

json error_json() {
  json out = json::object();
  out["code"] = status_name(uhl_last_status());
  out["message"] = uhl_last_error();
  return out;
}

/// Runs `work(index)` over a worker pool; results are emitted in index order.
template <typename Work>
std::vector<std::string> pooled(long count, int jobs, Work&& work) {
  std::vector<std::string> lines(static_cast<std::size_t>(count));
  if (jobs <= 1 || count <= 1) {
    for (long k = 0; k < count; ++k) lines[static_cast<std::size_t>(k)] = work(k);
    return lines;
  }
  std::atomic<long> next(0);
  auto runner = [&] {
    while (true) {
      const long k = next.fetch_add(1);
      if (k >= count) break;
      lines[static_cast<std::size_t>(k)] = work(k);
    }
  };
  std::vector<std::thread> workers;
  const int pool = std::min<long>(jobs, count);
  workers.reserve(static_cast<std::size_t>(pool));
  for (int t = 0; t < pool; ++t) workers.emplace_back(runner);
  for (std::thread& t : workers) t.join();
  return lines;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_curvature_action(const CommonOptions& opts, const ModelHandle& model,
                         const std::vector<std::string>& params) {
  if (opts.grid_spec.empty()) config_error("--action requires a --grid integration region");
  const auto axes = parse_grid(opts.grid_spec, params);
  std::vector<double> lo(params.size()), hi(params.size());
  std::vector<int> steps(params.size());
  for (const GridAxisSpec& axis : axes) {
    lo[axis.param_index] = axis.lo;
    hi[axis.param_index] = axis.hi;
    steps[axis.param_index] = axis.count;
  }
  const uhl_options options = to_options(opts);
  double action = 0.0;
  const uhl_status status =
      uhl_curvature_action(model.ptr, lo.data(), hi.data(), steps.data(), &options, &action);

  OutputSink sink(opts.out_path);
  if (status != UHL_OK) {
    log_at(LogLevel::warn, std::string("action failed: ") + uhl_last_error());
    if (opts.format == "csv") {
      *sink.stream << "action,measure,error\n,," << status_name(status) << "\n";
    } else {
      json record;
      record["error"] = error_json();
      *sink.stream << record.dump() << "\n";
    }
    return 2;
  }
  if (opts.format == "csv") {
    *sink.stream << "action,measure,error\n"
                 << format_g17(action) << "," << opts.measure << ",\n";
  } else {
    json record;
    record["action"] = action;
    record["measure"] = opts.measure;
    json region = json::object();
    for (const GridAxisSpec& axis : axes) {
      region[params[axis.param_index]] = json::array({axis.lo, axis.hi, axis.count});
    }
    record["region"] = region;
    *sink.stream << record.dump() << "\n";
  }
  return 0;
}

int cmd_curvature(const CommonOptions& opts, bool action) {
  ModelHandle model;
  load_model_or_die(opts.model_spec, model);
  const auto params = param_names(model.ptr);
  if (action) return cmd_curvature_action(opts, model, params);
  const auto points = resolve_points(opts, params, /*allow_grid=*/true);
  const uhl_options options = to_options(opts);
  const bool csv = opts.format == "csv";

  std::atomic<bool> any_error(false);
  auto work = [&](long index) -> std::string {
    const auto& coords = points[static_cast<std::size_t>(index)];
    double c = 0.0;
    int rank = 0;
    double cond = 0.0;
    const uhl_status status =
        uhl_curvature_at(model.ptr, coords.data(), &options, &c, &rank, &cond);
    if (csv) {
      std::string line;
      for (double x : coords) line += format_g17(x) + ",";
      if (status == UHL_OK) {
        line += format_g17(c) + "," + std::to_string(rank) + "," + format_g17(cond) + "," +
                opts.method + ",";
      } else {
        any_error = true;
        log_at(LogLevel::warn, std::string("point failed: ") + uhl_last_error());
        line += ",,," + opts.method + "," + status_name(status);
      }
      return line;
    }
    json record;
    record["coords"] = coords_json(params, coords);
    record["method"] = opts.method;
    if (status == UHL_OK) {
      record["C"] = c;
      record["rank"] = rank;
      record["condition_number"] = cond;
    } else {
      any_error = true;
      log_at(LogLevel::warn, std::string("point failed: ") + uhl_last_error());
      record["error"] = error_json();
    }
    return record.dump();
  };

  const auto lines = pooled(static_cast<long>(points.size()), opts.jobs, work);
  OutputSink sink(opts.out_path);
  if (csv) {
    std::string header;
    for (const std::string& name : params) header += name + ",";
    *sink.stream << header << "C,rank,condition_number,method,error\n";
  }
  for (const std::string& line : lines) *sink.stream << line << "\n";
  return any_error ? 2 : 0;
}

int cmd_report(const CommonOptions& opts) {
  ModelHandle model;
  load_model_or_die(opts.model_spec, model);
  const auto params = param_names(model.ptr);
  const auto points = resolve_points(opts, params, /*allow_grid=*/false);
  const auto& coords = points.front();
  const uhl_options options = to_options(opts);

  uhl_report* report = uhl_report_compute(model.ptr, coords.data(), &options);
  OutputSink sink(opts.out_path);
  if (report == nullptr) {
    json record;
    record["coords"] = coords_json(params, coords);
    record["error"] = error_json();
    *sink.stream << record.dump() << "\n";
    return 2;
  }

  const int d = uhl_report_dim(report);
  const int p = uhl_report_num_params(report);

  if (opts.format == "csv") {
    // Scalar fields only; matrices are JSON-format territory.
    std::string header, row;
    for (std::size_t k = 0; k < params.size(); ++k) {
      header += params[k] + ",";
      row += format_g17(coords[k]) + ",";
    }
    header += "C,rank,condition_number,method,pcc_satisfied,pcc_residual,gamma";
    row += format_g17(uhl_report_curvature(report)) + "," +
           std::to_string(uhl_report_rank(report)) + "," +
           format_g17(uhl_report_condition_number(report)) + "," + opts.method + "," +
           (uhl_report_pcc_satisfied(report) ? "true" : "false") + "," +
           format_g17(uhl_report_pcc_residual(report)) + ",";
    if (uhl_report_has_gamma(report)) row += format_g17(uhl_report_gamma(report));
    *sink.stream << header << "\n" << row << "\n";
    uhl_report_free(report);
    return 0;
  }

  json record;
  record["coords"] = coords_json(params, coords);
  record["model"] = uhl_model_name(model.ptr);
  record["dim"] = d;
  record["params"] = params;
  record["method"] = uhl_report_method(report);
  record["rank"] = uhl_report_rank(report);
  record["condition_number"] = uhl_report_condition_number(report);

  std::vector<double> buffer(static_cast<std::size_t>(2 * d * d));
  uhl_report_rho(report, buffer.data());
  record["rho"] = complex_matrix_json(buffer.data(), d, d);

  std::vector<double> eigenvalues(static_cast<std::size_t>(d));
  uhl_report_eigenvalues(report, eigenvalues.data());
  record["eigenvalues"] = eigenvalues;

  json g_ops = json::array();
  for (int mu = 0; mu < p; ++mu) {
    uhl_report_g_operator(report, mu, buffer.data());
    g_ops.push_back(complex_matrix_json(buffer.data(), d, d));
  }
  record["g_operators"] = g_ops;

  std::vector<double> real_buffer(static_cast<std::size_t>(p * p));
  uhl_report_metric(report, real_buffer.data());
  record["metric"] = real_matrix_json(real_buffer.data(), p, p);
  uhl_report_metric_inverse(report, real_buffer.data());
  record["metric_inverse"] = real_matrix_json(real_buffer.data(), p, p);
  uhl_report_qfi(report, real_buffer.data());
  record["qfi"] = real_matrix_json(real_buffer.data(), p, p);

  record["C"] = uhl_report_curvature(report);
  json pairs = json::array();
  for (int mu = 0; mu < p; ++mu) {
    for (int nu = 0; nu < p; ++nu) {
      if (mu == nu) continue;
      pairs.push_back(json{{"mu", mu}, {"nu", nu}, {"term", uhl_report_pair_term(report, mu, nu)}});
    }
  }
  record["pair_terms"] = pairs;
  if (uhl_report_fd_step_used(report) > 0) record["fd_step"] = uhl_report_fd_step_used(report);

  record["pcc"] = json{{"satisfied", uhl_report_pcc_satisfied(report) != 0},
                       {"residual", uhl_report_pcc_residual(report)},
                       {"tol", uhl_report_pcc_tol(report)}};
  if (uhl_report_has_gamma(report)) record["gamma"] = uhl_report_gamma(report);

  *sink.stream << record.dump() << "\n";
  uhl_report_free(report);
  return 0;
}

int cmd_tradeoff(const CommonOptions& opts, int repetitions, const std::string& v1_spec) {
  ModelHandle model;
  load_model_or_die(opts.model_spec, model);
  const auto params = param_names(model.ptr);
  if (params.size() != 2) config_error("tradeoff requires a two-parameter model (WrongArity)");
  const auto points = resolve_points(opts, params, /*allow_grid=*/false);
  const auto& coords = points.front();

  const uhl_options options = to_options(opts);
  uhl_report* report = uhl_report_compute(model.ptr, coords.data(), &options);
  if (report == nullptr) config_error(std::string("cannot evaluate model: ") + uhl_last_error());
  double qfi[4];
  uhl_report_qfi(report, qfi);
  const double gamma = uhl_report_gamma(report);
  uhl_report_free(report);

  const auto pieces = split(v1_spec, ':');
  if (pieces.size() != 3) config_error("--v1 must be lo:hi:count");
  const double lo = parse_number(pieces[0], "--v1");
  const double hi = parse_number(pieces[1], "--v1");
  const int count = static_cast<int>(parse_number(pieces[2], "--v1"));
  if (count < 1) config_error("--v1 count must be >= 1");
  std::vector<double> v1(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    v1[static_cast<std::size_t>(j)] =
        count == 1 ? lo : lo + static_cast<double>(j) * (hi - lo) / (count - 1);
  }

  uhl_curve* curve = uhl_tradeoff_curve(qfi, gamma, repetitions, v1.data(), count);
  if (curve == nullptr) config_error(std::string("tradeoff curve failed: ") + uhl_last_error());

  double chart_eig[2];
  double chart_rot[4];
  uhl_curve_chart(curve, chart_eig, chart_rot);

  OutputSink sink(opts.out_path);
  bool any_no_solution = false;
  if (opts.format == "csv") {
    *sink.stream << "# qfi = [[" << format_g17(qfi[0]) << "," << format_g17(qfi[1]) << "],["
                 << format_g17(qfi[2]) << "," << format_g17(qfi[3]) << "]]\n";
    *sink.stream << "# qfi_chart_eigenvalues = [" << format_g17(chart_eig[0]) << ","
                 << format_g17(chart_eig[1]) << "]\n";
    *sink.stream << "# gamma = " << format_g17(gamma) << "\n";
    *sink.stream << "# n = " << repetitions << "\n";
    *sink.stream << "v1,v2_min,status\n";
    for (int j = 0; j < uhl_curve_size(curve); ++j) {
      double x = 0.0, y = 0.0;
      if (uhl_curve_point(curve, j, &x, &y) == UHL_OK) {
        *sink.stream << format_g17(x) << "," << format_g17(y) << ",ok\n";
      } else {
        any_no_solution = true;
        *sink.stream << format_g17(x) << ",,NoSolution\n";
      }
    }
  } else {
    json header;
    header["qfi"] = json::array({json::array({qfi[0], qfi[1]}), json::array({qfi[2], qfi[3]})});
    header["qfi_chart"] = json{{"eigenvalues", json::array({chart_eig[0], chart_eig[1]})},
                               {"rotation", real_matrix_json(chart_rot, 2, 2)}};
    header["gamma"] = gamma;
    header["n"] = repetitions;
    *sink.stream << header.dump() << "\n";
    for (int j = 0; j < uhl_curve_size(curve); ++j) {
      double x = 0.0, y = 0.0;
      json row;
      if (uhl_curve_point(curve, j, &x, &y) == UHL_OK) {
        row["v1"] = x;
        row["v2_min"] = y;
      } else {
        any_no_solution = true;
        row["v1"] = x;
        row["error"] = "NoSolution";
      }
      *sink.stream << row.dump() << "\n";
    }
  }
  uhl_curve_free(curve);
  return any_no_solution ? 2 : 0;
}

int cmd_verify(const CommonOptions& opts) {
  ModelHandle model;
  load_model_or_die(opts.model_spec, model);
  const auto params = param_names(model.ptr);
  const auto points = resolve_points(opts, params, /*allow_grid=*/true);
  const uhl_options options = to_options(opts);
  const bool csv = opts.format == "csv";

  std::atomic<bool> any_error(false);
  std::atomic<bool> any_failed(false);
  auto work = [&](long index) -> std::string {
    const auto& coords = points[static_cast<std::size_t>(index)];
    uhl_checks* checks = uhl_verify(model.ptr, coords.data(), &options);
    if (checks == nullptr) {
      any_error = true;
      log_at(LogLevel::warn, std::string("verify failed: ") + uhl_last_error());
      if (csv) {
        std::string line;
        for (double x : coords) line += format_g17(x) + ",";
        return line + "error,,,," + status_name(uhl_last_status());
      }
      json record;
      record["coords"] = coords_json(params, coords);
      record["error"] = error_json();
      return record.dump();
    }
    static const char* status_names[] = {"pass", "fail", "skip"};
    std::string out;
    if (csv) {
      for (int k = 0; k < uhl_checks_count(checks); ++k) {
        if (k) out += "\n";
        for (double x : coords) out += format_g17(x) + ",";
        out += std::string(uhl_check_name(checks, k)) + "," +
               status_names[uhl_check_status(checks, k)] + "," +
               format_g17(uhl_check_residual(checks, k)) + "," +
               format_g17(uhl_check_tolerance(checks, k)) + ",\"" +
               std::string(uhl_check_detail(checks, k)) + "\"";
      }
    } else {
      json record;
      record["coords"] = coords_json(params, coords);
      record["all_passed"] = uhl_checks_all_passed(checks) != 0;
      json list = json::array();
      for (int k = 0; k < uhl_checks_count(checks); ++k) {
        json check;
        check["name"] = uhl_check_name(checks, k);
        check["status"] = status_names[uhl_check_status(checks, k)];
        check["residual"] = uhl_check_residual(checks, k);
        check["tolerance"] = uhl_check_tolerance(checks, k);
        check["detail"] = uhl_check_detail(checks, k);
        list.push_back(check);
      }
      record["checks"] = list;
      out = record.dump();
    }
    if (uhl_checks_all_passed(checks) == 0) any_failed = true;
    uhl_checks_free(checks);
    return out;
  };

  const auto lines = pooled(static_cast<long>(points.size()), opts.jobs, work);
  OutputSink sink(opts.out_path);
  if (csv) {
    std::string header;
    for (const std::string& name : params) header += name + ",";
    *sink.stream << header << "check,status,residual,tolerance,detail\n";
  }
  for (const std::string& line : lines) *sink.stream << line << "\n";
  if (any_error.load()) return 2;
  return any_failed.load() ? 1 : 0;
}

int cmd_parse_check(const std::string& source, const std::string& params_spec) {
  std::vector<std::string> names;
  if (!params_spec.empty()) {
    for (const std::string& name : split(params_spec, ',')) names.push_back(name);
  }
  std::vector<const char*> cnames;
  cnames.reserve(names.size());
  for (const std::string& name : names) cnames.push_back(name.c_str());

  char* canonical =
      uhl_parse_canonical(source.c_str(), cnames.data(), static_cast<int>(cnames.size()));
  if (canonical == nullptr) {
    std::cerr << status_name(uhl_last_status()) << ": " << uhl_last_error();
    if (uhl_last_error_offset() >= 0) std::cerr << " at offset " << uhl_last_error_offset();
    std::cerr << "\n";
    return 2;
  }
  std::cout << canonical << "\n";
  uhl_string_free(canonical);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log_level();

  CLI::App app{"Uhlmann curvature, quantum Fisher information and precision-tradeoff toolkit"};
  app.require_subcommand(1);

  CommonOptions curvature_opts;
  bool curvature_action_flag = false;
  CLI::App* curvature = app.add_subcommand("curvature", "scalar curvature at points or grids");
  add_model_options(curvature, curvature_opts);
  curvature->add_option("--at", curvature_opts.at_spec, "point, e.g. a=0,b=0.6931");
  curvature->add_option("--grid", curvature_opts.grid_spec, "grid, e.g. a=0:6.283:25,b=0.1:2:25");
  curvature->add_option("--method", curvature_opts.method, "spectral | dual-contraction | connection")
      ->check(CLI::IsMember({"spectral", "dual-contraction", "connection"}));
  curvature->add_option("--jobs", curvature_opts.jobs, "worker threads for grids")
      ->check(CLI::PositiveNumber);
  curvature->add_flag("--action", curvature_action_flag,
                      "integrate C over the --grid region (midpoint rule)");
  curvature->add_option("--measure", curvature_opts.measure,
                        "volume element for --action: riemannian | lebesgue")
      ->check(CLI::IsMember({"riemannian", "lebesgue"}));

  CommonOptions report_opts;
  CLI::App* report = app.add_subcommand("report", "full geometry report at one point");
  add_model_options(report, report_opts);
  report->add_option("--at", report_opts.at_spec, "point, e.g. a=0,b=0.6931")->required();
  report->add_option("--method", report_opts.method, "spectral | dual-contraction | connection")
      ->check(CLI::IsMember({"spectral", "dual-contraction", "connection"}));

  CommonOptions tradeoff_opts;
  int tradeoff_n = 1;
  std::string v1_spec;
  CLI::App* tradeoff = app.add_subcommand("tradeoff", "two-parameter precision boundary curve");
  add_model_options(tradeoff, tradeoff_opts);
  tradeoff->add_option("--at", tradeoff_opts.at_spec, "point at which K and gamma are evaluated")
      ->required();
  tradeoff->add_option("--n", tradeoff_n, "number of repetitions")->check(CLI::PositiveNumber);
  tradeoff->add_option("--v1", v1_spec, "v1 range lo:hi:count in the K eigenchart")->required();

  CommonOptions verify_opts;
  CLI::App* verify = app.add_subcommand("verify", "cross-method agreement and identity checks");
  add_model_options(verify, verify_opts);
  verify->add_option("--at", verify_opts.at_spec, "point");
  verify->add_option("--grid", verify_opts.grid_spec, "grid");
  verify->add_option("--jobs", verify_opts.jobs, "worker threads for grids")
      ->check(CLI::PositiveNumber);

  std::string expr_source;
  std::string expr_params;
  CLI::App* parse_check = app.add_subcommand("parse-check", "lint a model-entry expression");
  parse_check->add_option("expression", expr_source, "expression source")->required();
  parse_check->add_option("--params", expr_params, "comma-separated parameter names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (curvature->parsed()) return cmd_curvature(curvature_opts, curvature_action_flag);
  if (report->parsed()) return cmd_report(report_opts);
  if (tradeoff->parsed()) return cmd_tradeoff(tradeoff_opts, tradeoff_n, v1_spec);
  if (verify->parsed()) return cmd_verify(verify_opts);
  if (parse_check->parsed()) return cmd_parse_check(expr_source, expr_params);
  return 1;
}
