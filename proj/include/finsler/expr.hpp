#pragma once

// A small expression language for user-defined metrics F(x, y).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | ident | ident '(' args ')' | '(' expr ')'
//
// Identifiers x1..xn and y1..yn are coordinates; bare x, y and declared
// vector parameters are only valid as arguments of dot() and abs2().
// Exponents must not depend on x or y.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"

namespace finsler::expr {

enum class TokenKind { Number, Identifier, Operator, Paren, Comma };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;
};

std::vector<Token> tokenize(std::string_view src);

enum class NodeKind { Constant, Coordinate, Named, Vector, Negate, Binary, Call };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double number = 0.0;       // Constant
  std::string name;          // Named / Vector / Call; "x" or "y" for Coordinate
  int index = 0;             // Coordinate, 1-based
  char op = 0;               // Binary: + - * / ^
  std::vector<NodePtr> args; // operands / call arguments
  std::size_t position = 0;

  bool operator==(const Node& other) const;
};

struct ParseOptions {
  /// When set, coordinate indices must lie in 1..dimension.
  std::optional<int> dimension;
  /// Names accepted as vector arguments besides x and y.
  std::vector<std::string> vector_names;
};

NodePtr parse(std::span<const Token> tokens, const ParseOptions& options = {});
NodePtr parse(std::string_view src, const ParseOptions& options = {});

/// Fully parenthesised rendering; parse(to_string(ast)) == ast.
std::string to_string(const Node& ast);

bool depends_on_coordinates(const Node& ast);

template <class T>
struct Env {
  std::span<const T> x;
  std::span<const T> y;
  const std::map<std::string, double>* scalars = nullptr;
  const std::map<std::string, std::vector<double>>* vectors = nullptr;
};

namespace detail {

inline double lift(double, double v) { return v; }
inline Jet lift(const Jet& like, double v) { return Jet::constant_like(like, v); }

template <class T>
const T& reference(const Env<T>& env) {
  if (!env.y.empty()) return env.y[0];
  if (!env.x.empty()) return env.x[0];
  throw Error(ErrorCode::UnboundVariable, "empty evaluation environment");
}

template <class T>
T apply_function(const std::string& name, const T& a) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  if constexpr (std::is_same_v<T, double>) {
    if ((name == "sqrt" && a < 0.0) || (name == "log" && a <= 0.0)) {
      throw Error(ErrorCode::DomainError, name + " of " + std::to_string(a));
    }
  }
  if (name == "sqrt") return sqrt(a);
  if (name == "exp") return exp(a);
  if (name == "log") return log(a);
  if (name == "sin") return sin(a);
  if (name == "cos") return cos(a);
  throw Error(ErrorCode::ParseError, "unknown function " + name);
}

// A vector argument: either coordinates (as T) or constant doubles.
template <class T>
struct VectorArg {
  std::span<const T> vars;
  const std::vector<double>* consts = nullptr;
  std::size_t size() const { return consts ? consts->size() : vars.size(); }
};

template <class T>
VectorArg<T> vector_arg(const Node& n, const Env<T>& env) {
  if (n.kind != NodeKind::Vector) throw Error(ErrorCode::ParseError, "expected a vector argument");
  if (n.name == "x") return {env.x, nullptr};
  if (n.name == "y") return {env.y, nullptr};
  if (env.vectors) {
    auto it = env.vectors->find(n.name);
    if (it != env.vectors->end()) return {{}, &it->second};
  }
  throw Error(ErrorCode::UnboundVariable, "vector " + n.name + " is not bound");
}

template <class T>
T dot(const VectorArg<T>& a, const VectorArg<T>& b, const T& like) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "dot() of vectors with different sizes");
  T acc = lift(like, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.consts && b.consts) {
      acc += (*a.consts)[i] * (*b.consts)[i];
    } else if (a.consts) {
      acc += (*a.consts)[i] * b.vars[i];
    } else if (b.consts) {
      acc += a.vars[i] * (*b.consts)[i];
    } else {
      acc += a.vars[i] * b.vars[i];
    }
  }
  return acc;
}

}  // namespace detail

/// Evaluates `ast` over doubles or jets.
template <class T>
T eval(const Node& ast, const Env<T>& env) {
  using std::pow;
  switch (ast.kind) {
    case NodeKind::Constant:
      return detail::lift(detail::reference(env), ast.number);
    case NodeKind::Coordinate: {
      const auto& vars = ast.name == "x" ? env.x : env.y;
      if (ast.index < 1 || static_cast<std::size_t>(ast.index) > vars.size()) {
        throw Error(ErrorCode::UnboundVariable, ast.name + std::to_string(ast.index) + " is not bound");
      }
      return vars[ast.index - 1];
    }
    case NodeKind::Named: {
      if (env.scalars) {
        auto it = env.scalars->find(ast.name);
        if (it != env.scalars->end()) return detail::lift(detail::reference(env), it->second);
      }
      throw Error(ErrorCode::UnboundVariable, "name " + ast.name + " is not bound");
    }
    case NodeKind::Vector:
      throw Error(ErrorCode::ParseError, "vector " + ast.name + " used as a scalar");
    case NodeKind::Negate:
      return -eval(*ast.args[0], env);
    case NodeKind::Binary: {
      if (ast.op == '^') {
        // Exponent is coordinate-free; evaluate it over doubles.
        Env<double> scalar_env{{}, {}, env.scalars, env.vectors};
        const double zero[1] = {0.0};
        scalar_env.y = zero;
        const double p = eval(*ast.args[1], scalar_env);
        T base = eval(*ast.args[0], env);
        if constexpr (std::is_same_v<T, double>) {
          if (base < 0.0 && std::floor(p) != p) throw Error(ErrorCode::DomainError, "fractional power of a negative number");
          if (base == 0.0 && p < 0.0) throw Error(ErrorCode::DivisionByZero, "negative power of zero");
        }
        return pow(base, p);
      }
      T a = eval(*ast.args[0], env);
      const T b = eval(*ast.args[1], env);
      switch (ast.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/':
          if constexpr (std::is_same_v<T, double>) {
            if (b == 0.0) throw Error(ErrorCode::DivisionByZero, "division by zero");
          }
          return a / b;
      }
      throw Error(ErrorCode::ParseError, std::string("unknown operator ") + ast.op);
    }
    case NodeKind::Call: {
      const T& like = detail::reference(env);
      if (ast.name == "dot") {
        return detail::dot(detail::vector_arg(*ast.args[0], env), detail::vector_arg(*ast.args[1], env), like);
      }
      if (ast.name == "abs2") {
        const auto v = detail::vector_arg(*ast.args[0], env);
        return detail::dot(v, v, like);
      }
      return detail::apply_function(ast.name, eval(*ast.args[0], env));
    }
  }
  throw Error(ErrorCode::ParseError, "corrupt expression tree");
}

}  // namespace finsler::expr
