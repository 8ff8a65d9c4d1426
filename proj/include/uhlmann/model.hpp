#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uhlmann/expr.hpp"
#include "uhlmann/types.hpp"

namespace uhlmann {

/// A parameterized family of d x d density matrices with expression-valued
/// entries. Hermiticity, unit trace and positivity are runtime checks at each
/// evaluation point, not syntactic guarantees.
struct ModelDefinition {
  int dim = 0;
  std::vector<std::string> params;
  std::vector<std::vector<expr::Expression>> entries;  // dim x dim
  double rank_tol = 1e-10;
  std::string name;
  std::string description;

  int num_params() const { return static_cast<int>(params.size()); }

  ModelDefinition clone() const;
};

/// The state and its first parameter-derivatives at one point.
struct ModelPoint {
  std::vector<double> coords;
  ComplexMatrix rho;
  std::vector<ComplexMatrix> drho;  // one Hermitian, traceless matrix per parameter
};

/// Tolerances applied by evaluate(); see ModelPoint invariants.
inline constexpr double kHermTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kDrhoTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-12;

/// Parses the key-value model-file format:
///
///   dim = 2
///   params = ["a", "b"]
///   rank_tol = 1e-10            # optional
///   name = "phase-diffusion qubit"   # optional
///   [rho]
///   row0 = ["1/2",            "exp(-i*a - b)/2"]
///   row1 = ["exp(i*a - b)/2", "1/2"]
///
/// Lines starting with '#' are comments. Throws Error(errc::format_error) on
/// structural problems and propagates expression errors annotated with the
/// entry position (row, col).
ModelDefinition load_model(std::string_view text);

/// Evaluates rho and every d(rho)/dx_mu at `coords` (declaration order).
///
/// Hermiticity deviations below 1e-12 are symmetrized away; anything larger
/// is a ValidationError, as are |tr(rho) - 1| > 1e-12 and eigenvalues below
/// -1e-12. Trace is checked, never silently normalized.
ModelPoint evaluate(const ModelDefinition& model, std::span<const double> coords);

/// Built-in model registry: "phase-diffusion-qubit" (2x2 mixed family with
/// constant curvature), "bloch-pure-qubit" (pure Bloch state over theta, phi),
/// "product-qubits" (4x4 commuting diagonal family).
ModelDefinition builtin(std::string_view name);

std::vector<std::string> builtin_names();

/// Model-file source text of a built-in, as accepted by load_model().
std::string builtin_source(std::string_view name);

/// Linear change of coordinates x = M y: returns the same family expressed in
/// the new parameters y (substituting x_i = sum_j M(i,j) y_j into every
/// entry). M must be square with size = number of parameters.
ModelDefinition reparametrize_linear(const ModelDefinition& model, const RealMatrix& m,
                                     const std::vector<std::string>& new_params);

}  // namespace uhlmann
