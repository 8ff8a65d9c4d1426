#pragma once

#include <complex>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uhlmann/errors.hpp"

namespace uhlmann::expr {

/// Value of a complex scalar together with its first derivatives with
/// respect to every declared (real) model parameter.
struct DualComplex {
  std::complex<double> value;
  std::vector<std::complex<double>> partials;  // length = number of params
};

enum class Func {
  exp_fn,
  log_fn,
  sqrt_fn,
  sin_fn,
  cos_fn,
  tan_fn,
  sinh_fn,
  cosh_fn,
  tanh_fn,
  conj_fn,
  re_fn,
  im_fn,
};

struct Node;
using NodePtr = std::unique_ptr<Node>;

/// AST node. `begin`/`end` are byte offsets into the original source and are
/// kept for error reporting.
struct Node {
  enum class Kind {
    number,
    imag_unit,
    pi_const,
    parameter,
    negate,
    add,
    sub,
    mul,
    div,
    pow_int,
    call,
  };

  Kind kind;
  std::size_t begin = 0;
  std::size_t end = 0;

  double number = 0.0;        // kind == number
  int param_index = -1;       // kind == parameter
  std::string param_name;     // kind == parameter
  long long exponent = 0;     // kind == pow_int
  Func func = Func::exp_fn;   // kind == call

  NodePtr a;  // unary operand / lhs / pow base / call argument
  NodePtr b;  // rhs of binary ops
};

/// Immutable parsed expression over a fixed, ordered parameter list.
/// Evaluation is pure; instances are safe to share across threads.
class Expression {
 public:
  Expression(NodePtr root, std::vector<std::string> params)
      : root_(std::move(root)), params_(std::move(params)) {}

  const Node& root() const { return *root_; }
  const std::vector<std::string>& params() const { return params_; }

  Expression clone() const;

 private:
  NodePtr root_;
  std::vector<std::string> params_;
};

/// Parses `source` against the declared parameter names.
///
/// Grammar: expr := term (('+'|'-') term)* ; term := factor (('*'|'/')
/// factor)* ; factor := ('-')? power ; power := atom ('^' int_literal)? ;
/// atom := number | 'i' | ident | func '(' expr ')' | '(' expr ')'.
/// `i` is the imaginary unit, `pi` a predefined constant; identifiers are
/// case-sensitive and whitespace is ignored.
///
/// Throws Error(errc::syntax_error) with a byte offset on malformed input and
/// Error(errc::unknown_identifier) for identifiers that are neither declared
/// parameters nor built-in names.
Expression parse(std::string_view source, const std::vector<std::string>& declared_params);

/// Prints with the minimal parenthesization that re-parses to a structurally
/// identical AST. Numbers use shortest round-trip formatting.
std::string to_string(const Expression& e);

/// Structural AST comparison; source spans are ignored.
bool structurally_equal(const Expression& lhs, const Expression& rhs);

/// Evaluates value and exact first derivatives by forward-mode dual numbers.
/// `coords` are the parameter values in declaration order. Differentiation is
/// with respect to real parameters, so conj/re/im are differentiable:
/// d/dx conj(f) = conj(df/dx).
///
/// Throws Error(errc::domain_error) with the offending node's offset on
/// division by zero, log(0), sqrt(0) with a nonzero derivative demand, or any
/// non-finite intermediate.
DualComplex eval_dual(const Expression& e, std::span<const double> coords);

/// Convenience overload taking named parameter values.
DualComplex eval_dual(const Expression& e, const std::map<std::string, double>& point);

/// Replaces every parameter reference by a clone of `replacements[index]`,
/// yielding an expression over `new_params`. Every replacement must be an
/// expression over exactly `new_params`.
Expression substitute_params(const Expression& e, const std::vector<std::string>& new_params,
                             const std::vector<const Expression*>& replacements);

}  // namespace uhlmann::expr
