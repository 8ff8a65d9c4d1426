#include "uhlmann/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace uhlmann {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void format_error(int line_no, const std::string& what) {
  throw Error(errc::format_error, "line " + std::to_string(line_no) + ": " + what);
}

/// Parses ["...", "..."]; expression strings contain no quotes, so no
/// escaping is supported.
std::vector<std::string> parse_string_array(std::string_view v, int line_no) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    format_error(line_no, "expected a [\"...\"] array");
  }
  v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
    if (pos >= v.size()) {
      if (out.empty()) break;     // [] is an empty array
      format_error(line_no, "trailing comma in array");
    }
    if (v[pos] != '"') format_error(line_no, "expected a quoted string");
    std::size_t close = v.find('"', pos + 1);
    if (close == std::string_view::npos) format_error(line_no, "unterminated string");
    out.emplace_back(v.substr(pos + 1, close - pos - 1));
    pos = close + 1;
    while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
    if (pos >= v.size()) break;
    if (v[pos] != ',') format_error(line_no, "expected ',' between array elements");
    ++pos;
  }
  return out;
}

std::string parse_quoted_string(std::string_view v, int line_no) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
    format_error(line_no, "expected a quoted string");
  }
  return std::string(v.substr(1, v.size() - 2));
}

double parse_double(std::string_view v, int line_no) {
  v = trim(v);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    format_error(line_no, "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

long parse_int(std::string_view v, int line_no) {
  v = trim(v);
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    format_error(line_no, "expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::map<std::string, const char*, std::less<>>& builtin_registry() {
  static const std::map<std::string, const char*, std::less<>> registry = {
      {"phase-diffusion-qubit", R"model(dim = 2
params = ["a", "b"]
rank_tol = 1e-10
name = "phase-diffusion qubit"
[rho]
row0 = ["1/2",              "exp(-i*a - b)/2"]
row1 = ["exp(i*a - b)/2",   "1/2"]
)model"},
      {"bloch-pure-qubit", R"model(dim = 2
params = ["theta", "phi"]
name = "Bloch pure qubit"
[rho]
row0 = ["cos(theta/2)^2",                        "cos(theta/2)*sin(theta/2)*exp(-i*phi)"]
row1 = ["cos(theta/2)*sin(theta/2)*exp(i*phi)",  "sin(theta/2)^2"]
)model"},
      {"product-qubits", R"model(dim = 4
params = ["x1", "x2"]
name = "product of diagonal qubits"
[rho]
row0 = ["(1 + x1)*(1 + x2)/4", "0", "0", "0"]
row1 = ["0", "(1 + x1)*(1 - x2)/4", "0", "0"]
row2 = ["0", "0", "(1 - x1)*(1 + x2)/4", "0"]
row3 = ["0", "0", "0", "(1 - x1)*(1 - x2)/4"]
)model"},
  };
  return registry;
}

}  // namespace

ModelDefinition ModelDefinition::clone() const {
  ModelDefinition out;
  out.dim = dim;
  out.params = params;
  out.rank_tol = rank_tol;
  out.name = name;
  out.description = description;
  out.entries.reserve(entries.size());
  for (const auto& row : entries) {
    auto& out_row = out.entries.emplace_back();
    out_row.reserve(row.size());
    for (const auto& e : row) out_row.push_back(e.clone());
  }
  return out;
}

ModelDefinition load_model(std::string_view text) {
  ModelDefinition model;
  bool have_dim = false;
  bool have_params = false;
  bool in_rho = false;
  std::vector<std::optional<std::vector<std::string>>> rows;

  std::istringstream stream{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line == "[rho]") {
      if (in_rho) format_error(line_no, "duplicate [rho] section");
      if (!have_dim) format_error(line_no, "dim must appear before [rho]");
      in_rho = true;
      rows.resize(static_cast<std::size_t>(model.dim));
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) format_error(line_no, "expected 'key = value'");
    std::string key{trim(line.substr(0, eq))};
    std::string_view value = trim(line.substr(eq + 1));

    if (in_rho) {
      if (key.rfind("row", 0) != 0) format_error(line_no, "expected rowK inside [rho]");
      long idx = parse_int(key.substr(3), line_no);
      if (idx < 0 || idx >= model.dim) {
        format_error(line_no, "row index " + std::to_string(idx) + " outside dim = " +
                                  std::to_string(model.dim));
      }
      if (rows[static_cast<std::size_t>(idx)].has_value()) {
        format_error(line_no, "duplicate " + key);
      }
      rows[static_cast<std::size_t>(idx)] = parse_string_array(value, line_no);
      continue;
    }

    if (key == "dim") {
      long d = parse_int(value, line_no);
      if (d < 2) format_error(line_no, "dim must be >= 2");
      model.dim = static_cast<int>(d);
      have_dim = true;
    } else if (key == "params") {
      model.params = parse_string_array(value, line_no);
      if (model.params.empty()) format_error(line_no, "params must be non-empty");
      std::set<std::string> seen;
      for (const std::string& p : model.params) {
        if (!seen.insert(p).second) format_error(line_no, "duplicate parameter '" + p + "'");
      }
      have_params = true;
    } else if (key == "rank_tol") {
      model.rank_tol = parse_double(value, line_no);
      if (model.rank_tol <= 0) format_error(line_no, "rank_tol must be positive");
    } else if (key == "name") {
      model.name = parse_quoted_string(value, line_no);
    } else if (key == "description") {
      model.description = parse_quoted_string(value, line_no);
    } else {
      format_error(line_no, "unknown key '" + key + "'");
    }
  }

  if (!have_dim) throw Error(errc::format_error, "missing required key 'dim'");
  if (!have_params) throw Error(errc::format_error, "missing required key 'params'");
  if (!in_rho) throw Error(errc::format_error, "missing required section [rho]");
  for (int r = 0; r < model.dim; ++r) {
    if (!rows[static_cast<std::size_t>(r)].has_value()) {
      throw Error(errc::format_error, "missing row" + std::to_string(r) + " in [rho]");
    }
    const auto& row = *rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != model.dim) {
      throw Error(errc::format_error,
                  "row" + std::to_string(r) + " has " + std::to_string(row.size()) +
                      " entries, expected " + std::to_string(model.dim));
    }
    auto& entry_row = model.entries.emplace_back();
    for (int c = 0; c < model.dim; ++c) {
      try {
        entry_row.push_back(expr::parse(row[static_cast<std::size_t>(c)], model.params));
      } catch (Error& err) {
        throw err.at_entry(r, c);
      }
    }
  }
  return model;
}

ModelPoint evaluate(const ModelDefinition& model, std::span<const double> coords) {
  if (static_cast<int>(coords.size()) != model.num_params()) {
    throw Error(errc::invalid_argument, "expected " + std::to_string(model.num_params()) +
                                            " coordinates, got " + std::to_string(coords.size()));
  }
  const int d = model.dim;
  const int p = model.num_params();

  ModelPoint point;
  point.coords.assign(coords.begin(), coords.end());
  point.rho = ComplexMatrix::Zero(d, d);
  point.drho.assign(static_cast<std::size_t>(p), ComplexMatrix::Zero(d, d));

  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      expr::DualComplex dual;
      try {
        dual = expr::eval_dual(model.entries[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                               coords);
      } catch (Error& err) {
        throw err.at_entry(r, c);
      }
      point.rho(r, c) = dual.value;
      for (int mu = 0; mu < p; ++mu) {
        point.drho[static_cast<std::size_t>(mu)](r, c) = dual.partials[static_cast<std::size_t>(mu)];
      }
    }
  }

  auto check_hermitian = [&](ComplexMatrix& m, const std::string& label) {
    const double dev = max_abs(ComplexMatrix(m - m.adjoint()));
    if (dev > kHermTol) {
      throw Error(errc::validation_error,
                  "non-hermitian: " + label + " deviates by " + format_g17(dev));
    }
    m = 0.5 * (m + m.adjoint()).eval();  // numerical symmetrization only
  };

  check_hermitian(point.rho, "rho");
  const double trace_dev = std::abs(point.rho.trace() - Complex(1.0, 0.0));
  if (trace_dev > kTraceTol) {
    throw Error(errc::validation_error, "trace: tr(rho) - 1 = " + format_g17(trace_dev));
  }
  for (int mu = 0; mu < p; ++mu) {
    auto& dm = point.drho[static_cast<std::size_t>(mu)];
    check_hermitian(dm, "d(rho)/d" + model.params[static_cast<std::size_t>(mu)]);
    const double dtrace = std::abs(dm.trace());
    if (dtrace > kDrhoTraceTol) {
      throw Error(errc::validation_error,
                  "trace: d(tr rho)/d" + model.params[static_cast<std::size_t>(mu)] + " = " +
                      format_g17(dtrace));
    }
  }

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(point.rho, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(errc::eigensolver_failure, "eigenvalue computation failed during validation");
  }
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < -kPsdTol) {
    throw Error(errc::validation_error,
                "non-psd: minimum eigenvalue " + format_g17(min_eig));
  }
  return point;
}

ModelDefinition builtin(std::string_view name) {
  const auto& registry = builtin_registry();
  auto it = registry.find(name);
  if (it == registry.end()) {
    throw Error(errc::unknown_model, "unknown built-in model '" + std::string(name) + "'");
  }
  return load_model(it->second);
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : builtin_registry()) names.push_back(name);
  return names;
}

std::string builtin_source(std::string_view name) {
  const auto& registry = builtin_registry();
  auto it = registry.find(name);
  if (it == registry.end()) {
    throw Error(errc::unknown_model, "unknown built-in model '" + std::string(name) + "'");
  }
  return it->second;
}

ModelDefinition reparametrize_linear(const ModelDefinition& model, const RealMatrix& m,
                                     const std::vector<std::string>& new_params) {
  const int p = model.num_params();
  if (m.rows() != p || m.cols() != p || static_cast<int>(new_params.size()) != p) {
    throw Error(errc::invalid_argument, "reparametrization matrix must be p x p");
  }
  if (std::abs(m.determinant()) < 1e-12) {
    throw Error(errc::invalid_argument, "reparametrization matrix is singular");
  }

  // Old coordinate x_i as an expression over the new parameters.
  std::vector<expr::Expression> replacements;
  replacements.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    std::string src;
    for (int j = 0; j < p; ++j) {
      if (j > 0) src += " + ";
      src += "(" + format_g17(m(i, j)) + ")*" + new_params[static_cast<std::size_t>(j)];
    }
    replacements.push_back(expr::parse(src, new_params));
  }
  std::vector<const expr::Expression*> ptrs;
  ptrs.reserve(replacements.size());
  for (const auto& r : replacements) ptrs.push_back(&r);

  ModelDefinition out;
  out.dim = model.dim;
  out.params = new_params;
  out.rank_tol = model.rank_tol;
  out.name = model.name.empty() ? "" : model.name + " (reparametrized)";
  out.description = model.description;
  for (const auto& row : model.entries) {
    auto& out_row = out.entries.emplace_back();
    for (const auto& entry : row) {
      out_row.push_back(expr::substitute_params(entry, new_params, ptrs));
    }
  }
  return out;
}

}  // namespace uhlmann
