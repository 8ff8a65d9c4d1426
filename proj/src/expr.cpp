#include "uhlmann/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <utility>

namespace uhlmann {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::syntax_error: return "SyntaxError";
    case errc::unknown_identifier: return "UnknownIdentifier";
    case errc::domain_error: return "DomainError";
    case errc::format_error: return "FormatError";
    case errc::validation_error: return "ValidationError";
    case errc::unknown_model: return "UnknownModel";
    case errc::eigensolver_failure: return "EigensolverFailure";
    case errc::rank_change: return "RankChangeError";
    case errc::degenerate_metric: return "DegenerateMetric";
    case errc::not_pure: return "NotPure";
    case errc::step_too_small: return "StepTooSmall";
    case errc::degenerate_spectrum: return "DegenerateSpectrum";
    case errc::wrong_arity: return "WrongArity";
    case errc::no_solution: return "NoSolution";
    case errc::numerical_check_failed: return "NumericalCheckFailed";
    case errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace uhlmann

namespace uhlmann::expr {

namespace {

constexpr std::array<std::pair<std::string_view, Func>, 12> kFuncs = {{
    {"exp", Func::exp_fn},
    {"log", Func::log_fn},
    {"sqrt", Func::sqrt_fn},
    {"sin", Func::sin_fn},
    {"cos", Func::cos_fn},
    {"tan", Func::tan_fn},
    {"sinh", Func::sinh_fn},
    {"cosh", Func::cosh_fn},
    {"tanh", Func::tanh_fn},
    {"conj", Func::conj_fn},
    {"re", Func::re_fn},
    {"im", Func::im_fn},
}};

std::optional<Func> lookup_func(std::string_view name) {
  for (const auto& [fn_name, fn] : kFuncs) {
    if (fn_name == name) return fn;
  }
  return std::nullopt;
}

std::string_view func_name(Func f) {
  for (const auto& [fn_name, fn] : kFuncs) {
    if (fn == f) return fn_name;
  }
  return "?";
}

bool is_reserved(std::string_view name) {
  return name == "i" || name == "pi" || lookup_func(name).has_value();
}

struct Token {
  enum class Kind { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };
  Kind kind;
  std::size_t begin;
  std::size_t end;
  double number = 0.0;
  std::string_view text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::size_t start = pos_;
    if (pos_ >= src_.size()) {
      current_ = {Token::Kind::end, start, start};
      return;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '.') {
        ++pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t mark = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        } else {
          pos_ = mark;  // "2e" is number 2 followed by identifier e
        }
      }
      std::string_view text = src_.substr(start, pos_ - start);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(errc::syntax_error, "malformed number literal '" + std::string(text) + "'",
                    static_cast<long>(start));
      }
      current_ = {Token::Kind::number, start, pos_, value, text};
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      current_ = {Token::Kind::ident, start, pos_, 0.0, src_.substr(start, pos_ - start)};
      return;
    }
    ++pos_;
    switch (c) {
      case '+': current_ = {Token::Kind::plus, start, pos_}; return;
      case '-': current_ = {Token::Kind::minus, start, pos_}; return;
      case '*': current_ = {Token::Kind::star, start, pos_}; return;
      case '/': current_ = {Token::Kind::slash, start, pos_}; return;
      case '^': current_ = {Token::Kind::caret, start, pos_}; return;
      case '(': current_ = {Token::Kind::lparen, start, pos_}; return;
      case ')': current_ = {Token::Kind::rparen, start, pos_}; return;
      default:
        throw Error(errc::syntax_error, std::string("unexpected character '") + c + "'",
                    static_cast<long>(start));
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token current_{Token::Kind::end, 0, 0};
};

NodePtr make_node(Node::Kind kind, std::size_t begin, std::size_t end) {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  n->begin = begin;
  n->end = end;
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& params)
      : lexer_(src), params_(params) {}

  NodePtr parse_all() {
    NodePtr root = parse_expr();
    const Token& t = lexer_.peek();
    if (t.kind != Token::Kind::end) {
      throw Error(errc::syntax_error, "unexpected trailing input", static_cast<long>(t.begin));
    }
    return root;
  }

 private:
  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      const Token& t = lexer_.peek();
      if (t.kind != Token::Kind::plus && t.kind != Token::Kind::minus) break;
      bool is_add = t.kind == Token::Kind::plus;
      lexer_.take();
      NodePtr rhs = parse_term();
      auto n = make_node(is_add ? Node::Kind::add : Node::Kind::sub, lhs->begin, rhs->end);
      n->a = std::move(lhs);
      n->b = std::move(rhs);
      lhs = std::move(n);
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    while (true) {
      const Token& t = lexer_.peek();
      if (t.kind != Token::Kind::star && t.kind != Token::Kind::slash) break;
      bool is_mul = t.kind == Token::Kind::star;
      lexer_.take();
      NodePtr rhs = parse_factor();
      auto n = make_node(is_mul ? Node::Kind::mul : Node::Kind::div, lhs->begin, rhs->end);
      n->a = std::move(lhs);
      n->b = std::move(rhs);
      lhs = std::move(n);
    }
    return lhs;
  }

  NodePtr parse_factor() {
    const Token& t = lexer_.peek();
    if (t.kind == Token::Kind::minus) {
      Token minus = lexer_.take();
      NodePtr operand = parse_power();
      auto n = make_node(Node::Kind::negate, minus.begin, operand->end);
      n->a = std::move(operand);
      return n;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (lexer_.peek().kind != Token::Kind::caret) return base;
    lexer_.take();
    Token t = lexer_.take();
    bool integral = t.kind == Token::Kind::number;
    if (integral) {
      for (char c : t.text) {
        if (!std::isdigit(static_cast<unsigned char>(c))) integral = false;
      }
    }
    if (!integral) {
      throw Error(errc::syntax_error, "'^' requires an integer literal exponent",
                  static_cast<long>(t.begin));
    }
    long long exponent = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), exponent);
    if (ec != std::errc()) {
      throw Error(errc::syntax_error, "exponent out of range", static_cast<long>(t.begin));
    }
    auto n = make_node(Node::Kind::pow_int, base->begin, t.end);
    n->exponent = exponent;
    n->a = std::move(base);
    return n;
  }

  NodePtr parse_atom() {
    Token t = lexer_.take();
    switch (t.kind) {
      case Token::Kind::number: {
        auto n = make_node(Node::Kind::number, t.begin, t.end);
        n->number = t.number;
        return n;
      }
      case Token::Kind::lparen: {
        NodePtr inner = parse_expr();
        Token close = lexer_.take();
        if (close.kind != Token::Kind::rparen) {
          throw Error(errc::syntax_error, "expected ')'", static_cast<long>(close.begin));
        }
        inner->begin = t.begin;
        inner->end = close.end;
        return inner;
      }
      case Token::Kind::ident: {
        if (t.text == "i") return make_node(Node::Kind::imag_unit, t.begin, t.end);
        if (t.text == "pi") return make_node(Node::Kind::pi_const, t.begin, t.end);
        if (auto fn = lookup_func(t.text); fn && lexer_.peek().kind == Token::Kind::lparen) {
          lexer_.take();
          NodePtr arg = parse_expr();
          Token close = lexer_.take();
          if (close.kind != Token::Kind::rparen) {
            throw Error(errc::syntax_error, "expected ')'", static_cast<long>(close.begin));
          }
          auto n = make_node(Node::Kind::call, t.begin, close.end);
          n->func = *fn;
          n->a = std::move(arg);
          return n;
        }
        for (std::size_t k = 0; k < params_.size(); ++k) {
          if (params_[k] == t.text) {
            auto n = make_node(Node::Kind::parameter, t.begin, t.end);
            n->param_index = static_cast<int>(k);
            n->param_name = std::string(t.text);
            return n;
          }
        }
        throw Error(errc::unknown_identifier,
                    "unknown identifier '" + std::string(t.text) + "'",
                    static_cast<long>(t.begin));
      }
      case Token::Kind::end:
        throw Error(errc::syntax_error, "unexpected end of input", static_cast<long>(t.begin));
      default:
        throw Error(errc::syntax_error, "expected a value", static_cast<long>(t.begin));
    }
  }

  Lexer lexer_;
  const std::vector<std::string>& params_;
};

NodePtr clone_node(const Node& n) {
  auto copy = std::make_unique<Node>();
  copy->kind = n.kind;
  copy->begin = n.begin;
  copy->end = n.end;
  copy->number = n.number;
  copy->param_index = n.param_index;
  copy->param_name = n.param_name;
  copy->exponent = n.exponent;
  copy->func = n.func;
  if (n.a) copy->a = clone_node(*n.a);
  if (n.b) copy->b = clone_node(*n.b);
  return copy;
}

// Printing precedence: add/sub 1, mul/div 2, negate 3, pow 4, atoms 5.
int node_prec(const Node& n) {
  switch (n.kind) {
    case Node::Kind::add:
    case Node::Kind::sub: return 1;
    case Node::Kind::mul:
    case Node::Kind::div: return 2;
    case Node::Kind::negate: return 3;
    case Node::Kind::pow_int: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void print_node(const Node& n, int min_prec, std::string& out) {
  bool parens = node_prec(n) < min_prec;
  if (parens) out += '(';
  switch (n.kind) {
    case Node::Kind::number: out += format_number(n.number); break;
    case Node::Kind::imag_unit: out += 'i'; break;
    case Node::Kind::pi_const: out += "pi"; break;
    case Node::Kind::parameter: out += n.param_name; break;
    case Node::Kind::negate:
      out += '-';
      print_node(*n.a, 4, out);
      break;
    case Node::Kind::add:
    case Node::Kind::sub:
      print_node(*n.a, 1, out);
      out += n.kind == Node::Kind::add ? " + " : " - ";
      print_node(*n.b, 2, out);
      break;
    case Node::Kind::mul:
    case Node::Kind::div:
      print_node(*n.a, 2, out);
      out += n.kind == Node::Kind::mul ? "*" : "/";
      print_node(*n.b, 3, out);
      break;
    case Node::Kind::pow_int:
      if (n.exponent < 0) {
        throw Error(errc::invalid_argument, "negative exponent is not printable");
      }
      print_node(*n.a, 5, out);
      out += '^';
      out += std::to_string(n.exponent);
      break;
    case Node::Kind::call:
      out += func_name(n.func);
      out += '(';
      print_node(*n.a, 0, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

bool nodes_equal(const Node& x, const Node& y) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case Node::Kind::number:
      if (x.number != y.number) return false;
      break;
    case Node::Kind::parameter:
      if (x.param_index != y.param_index || x.param_name != y.param_name) return false;
      break;
    case Node::Kind::pow_int:
      if (x.exponent != y.exponent) return false;
      break;
    case Node::Kind::call:
      if (x.func != y.func) return false;
      break;
    default: break;
  }
  if (static_cast<bool>(x.a) != static_cast<bool>(y.a)) return false;
  if (static_cast<bool>(x.b) != static_cast<bool>(y.b)) return false;
  if (x.a && !nodes_equal(*x.a, *y.a)) return false;
  if (x.b && !nodes_equal(*x.b, *y.b)) return false;
  return true;
}

using Complex = std::complex<double>;

struct Dual {
  Complex v;
  std::vector<Complex> d;
};

bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void check_finite(const Dual& x, const Node& n) {
  bool ok = finite(x.v);
  for (const Complex& p : x.d) ok = ok && finite(p);
  if (!ok) {
    throw Error(errc::domain_error, "non-finite value in evaluation",
                static_cast<long>(n.begin));
  }
}

Dual eval_node(const Node& n, std::span<const double> coords) {
  const std::size_t p = coords.size();
  Dual out{Complex(0.0, 0.0), std::vector<Complex>(p, Complex(0.0, 0.0))};
  switch (n.kind) {
    case Node::Kind::number: out.v = n.number; break;
    case Node::Kind::imag_unit: out.v = Complex(0.0, 1.0); break;
    case Node::Kind::pi_const: out.v = M_PI; break;
    case Node::Kind::parameter:
      out.v = coords[static_cast<std::size_t>(n.param_index)];
      out.d[static_cast<std::size_t>(n.param_index)] = 1.0;
      break;
    case Node::Kind::negate: {
      Dual a = eval_node(*n.a, coords);
      out.v = -a.v;
      for (std::size_t k = 0; k < p; ++k) out.d[k] = -a.d[k];
      break;
    }
    case Node::Kind::add:
    case Node::Kind::sub: {
      Dual a = eval_node(*n.a, coords);
      Dual b = eval_node(*n.b, coords);
      const double sign = n.kind == Node::Kind::add ? 1.0 : -1.0;
      out.v = a.v + sign * b.v;
      for (std::size_t k = 0; k < p; ++k) out.d[k] = a.d[k] + sign * b.d[k];
      break;
    }
    case Node::Kind::mul: {
      Dual a = eval_node(*n.a, coords);
      Dual b = eval_node(*n.b, coords);
      out.v = a.v * b.v;
      for (std::size_t k = 0; k < p; ++k) out.d[k] = a.d[k] * b.v + a.v * b.d[k];
      break;
    }
    case Node::Kind::div: {
      Dual a = eval_node(*n.a, coords);
      Dual b = eval_node(*n.b, coords);
      if (b.v == Complex(0.0, 0.0)) {
        throw Error(errc::domain_error, "division by zero", static_cast<long>(n.begin));
      }
      out.v = a.v / b.v;
      const Complex b2 = b.v * b.v;
      for (std::size_t k = 0; k < p; ++k) out.d[k] = (a.d[k] * b.v - a.v * b.d[k]) / b2;
      break;
    }
    case Node::Kind::pow_int: {
      Dual a = eval_node(*n.a, coords);
      const long long e = n.exponent;
      if (e == 0) {
        out.v = 1.0;
        break;
      }
      // Integer powers by squaring; avoids exp/log branch-cut noise.
      auto ipow = [](Complex base, long long k) {
        Complex r(1.0, 0.0);
        while (k > 0) {
          if (k & 1) r *= base;
          base *= base;
          k >>= 1;
        }
        return r;
      };
      out.v = ipow(a.v, e);
      const Complex factor =
          static_cast<double>(e) * (e == 1 ? Complex(1.0, 0.0) : ipow(a.v, e - 1));
      for (std::size_t k = 0; k < p; ++k) out.d[k] = factor * a.d[k];
      break;
    }
    case Node::Kind::call: {
      Dual a = eval_node(*n.a, coords);
      switch (n.func) {
        case Func::exp_fn: {
          out.v = std::exp(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = out.v * a.d[k];
          break;
        }
        case Func::log_fn: {
          if (a.v == Complex(0.0, 0.0)) {
            throw Error(errc::domain_error, "log of zero", static_cast<long>(n.begin));
          }
          out.v = std::log(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = a.d[k] / a.v;
          break;
        }
        case Func::sqrt_fn: {
          if (a.v == Complex(0.0, 0.0)) {
            bool flat = true;
            for (const Complex& g : a.d) flat = flat && g == Complex(0.0, 0.0);
            if (!flat) {
              throw Error(errc::domain_error,
                          "sqrt at zero with a nonzero derivative demand",
                          static_cast<long>(n.begin));
            }
            break;  // value and partials stay zero
          }
          out.v = std::sqrt(a.v);
          const Complex half_inv = 0.5 / out.v;
          for (std::size_t k = 0; k < p; ++k) out.d[k] = half_inv * a.d[k];
          break;
        }
        case Func::sin_fn: {
          out.v = std::sin(a.v);
          const Complex dv = std::cos(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = dv * a.d[k];
          break;
        }
        case Func::cos_fn: {
          out.v = std::cos(a.v);
          const Complex dv = -std::sin(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = dv * a.d[k];
          break;
        }
        case Func::tan_fn: {
          out.v = std::tan(a.v);
          const Complex dv = 1.0 + out.v * out.v;
          for (std::size_t k = 0; k < p; ++k) out.d[k] = dv * a.d[k];
          break;
        }
        case Func::sinh_fn: {
          out.v = std::sinh(a.v);
          const Complex dv = std::cosh(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = dv * a.d[k];
          break;
        }
        case Func::cosh_fn: {
          out.v = std::cosh(a.v);
          const Complex dv = std::sinh(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = dv * a.d[k];
          break;
        }
        case Func::tanh_fn: {
          out.v = std::tanh(a.v);
          const Complex dv = 1.0 - out.v * out.v;
          for (std::size_t k = 0; k < p; ++k) out.d[k] = dv * a.d[k];
          break;
        }
        case Func::conj_fn: {
          out.v = std::conj(a.v);
          for (std::size_t k = 0; k < p; ++k) out.d[k] = std::conj(a.d[k]);
          break;
        }
        case Func::re_fn: {
          out.v = a.v.real();
          for (std::size_t k = 0; k < p; ++k) out.d[k] = a.d[k].real();
          break;
        }
        case Func::im_fn: {
          out.v = a.v.imag();
          for (std::size_t k = 0; k < p; ++k) out.d[k] = a.d[k].imag();
          break;
        }
      }
      break;
    }
  }
  check_finite(out, n);
  return out;
}

NodePtr substitute_node(const Node& n, const std::vector<const Expression*>& replacements) {
  if (n.kind == Node::Kind::parameter) {
    return clone_node(replacements[static_cast<std::size_t>(n.param_index)]->root());
  }
  auto copy = std::make_unique<Node>();
  copy->kind = n.kind;
  copy->begin = n.begin;
  copy->end = n.end;
  copy->number = n.number;
  copy->param_index = n.param_index;
  copy->param_name = n.param_name;
  copy->exponent = n.exponent;
  copy->func = n.func;
  if (n.a) copy->a = substitute_node(*n.a, replacements);
  if (n.b) copy->b = substitute_node(*n.b, replacements);
  return copy;
}

}  // namespace

Expression Expression::clone() const { return Expression(clone_node(*root_), params_); }

Expression parse(std::string_view source, const std::vector<std::string>& declared_params) {
  for (const std::string& name : declared_params) {
    if (is_reserved(name)) {
      throw Error(errc::invalid_argument,
                  "parameter name '" + name + "' shadows a reserved identifier");
    }
  }
  Parser parser(source, declared_params);
  return Expression(parser.parse_all(), declared_params);
}

std::string to_string(const Expression& e) {
  std::string out;
  print_node(e.root(), 0, out);
  return out;
}

bool structurally_equal(const Expression& lhs, const Expression& rhs) {
  return nodes_equal(lhs.root(), rhs.root());
}

DualComplex eval_dual(const Expression& e, std::span<const double> coords) {
  if (coords.size() != e.params().size()) {
    throw Error(errc::invalid_argument, "coordinate count does not match parameter count");
  }
  Dual result = eval_node(e.root(), coords);
  return DualComplex{result.v, std::move(result.d)};
}

DualComplex eval_dual(const Expression& e, const std::map<std::string, double>& point) {
  std::vector<double> coords(e.params().size());
  for (std::size_t k = 0; k < e.params().size(); ++k) {
    auto it = point.find(e.params()[k]);
    if (it == point.end()) {
      throw Error(errc::invalid_argument, "point does not assign parameter '" + e.params()[k] + "'");
    }
    coords[k] = it->second;
  }
  return eval_dual(e, coords);
}

Expression substitute_params(const Expression& e, const std::vector<std::string>& new_params,
                             const std::vector<const Expression*>& replacements) {
  if (replacements.size() != e.params().size()) {
    throw Error(errc::invalid_argument, "one replacement per original parameter required");
  }
  for (const Expression* r : replacements) {
    if (r == nullptr || r->params() != new_params) {
      throw Error(errc::invalid_argument, "replacements must be expressions over the new parameters");
    }
  }
  return Expression(substitute_node(e.root(), replacements), new_params);
}

}  // namespace uhlmann::expr
