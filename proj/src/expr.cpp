#include "finsler/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace finsler::expr {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

const std::array<std::string_view, 7> kFunctions = {"sqrt", "exp", "log", "sin", "cos", "abs2", "dot"};

int arity(std::string_view name) { return name == "dot" ? 2 : 1; }
bool takes_vectors(std::string_view name) { return name == "dot" || name == "abs2"; }

// Matches x<digits> / y<digits>; returns the index or 0.
int coordinate_index(std::string_view ident) {
  if (ident.size() < 2 || (ident[0] != 'x' && ident[0] != 'y')) return 0;
  int idx = 0;
  for (std::size_t i = 1; i < ident.size(); ++i) {
    if (!is_digit(ident[i])) return 0;
    idx = idx * 10 + (ident[i] - '0');
    if (idx > 1000) return 0;
  }
  return idx;
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      while (i < src.size() && is_digit(src[i])) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && is_digit(src[i])) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && is_digit(src[j])) {
          i = j;
          while (i < src.size() && is_digit(src[i])) ++i;
        }
      }
      out.push_back({TokenKind::Number, std::string(src.substr(start, i - start)), start});
    } else if (is_lower(c)) {
      while (i < src.size() && (is_lower(src[i]) || is_digit(src[i]))) ++i;
      out.push_back({TokenKind::Identifier, std::string(src.substr(start, i - start)), start});
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      out.push_back({TokenKind::Operator, std::string(1, c), start});
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back({TokenKind::Paren, std::string(1, c), start});
      ++i;
    } else if (c == ',') {
      out.push_back({TokenKind::Comma, ",", start});
      ++i;
    } else {
      throw SyntaxError(ErrorCode::LexError, std::string("unexpected character '") + c + "'", start);
    }
  }
  return out;
}

bool Node::operator==(const Node& other) const {
  if (kind != other.kind || number != other.number || name != other.name || index != other.index ||
      op != other.op || args.size() != other.args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!(*args[i] == *other.args[i])) return false;
  }
  return true;
}

bool depends_on_coordinates(const Node& ast) {
  if (ast.kind == NodeKind::Coordinate) return true;
  if (ast.kind == NodeKind::Vector && (ast.name == "x" || ast.name == "y")) return true;
  return std::any_of(ast.args.begin(), ast.args.end(), [](const NodePtr& a) { return depends_on_coordinates(*a); });
}

namespace {

class Parser {
 public:
  Parser(std::span<const Token> tokens, const ParseOptions& options) : toks_(tokens), opts_(options) {}

  NodePtr run() {
    if (toks_.empty()) throw SyntaxError(ErrorCode::ParseError, "empty expression", 0, {"expression"});
    NodePtr e = expression();
    if (pos_ < toks_.size()) {
      throw SyntaxError(ErrorCode::ParseError, "unexpected '" + toks_[pos_].text + "'", toks_[pos_].position,
                        {"operator", "end of input"});
    }
    return e;
  }

 private:
  const Token* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }

  bool peek_is(TokenKind kind, std::string_view text) const {
    const Token* t = peek();
    return t && t->kind == kind && t->text == text;
  }

  std::size_t here() const {
    if (pos_ < toks_.size()) return toks_[pos_].position;
    const Token& last = toks_.back();
    return last.position + last.text.size() - 1;
  }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    throw SyntaxError(ErrorCode::ParseError, msg, here(), std::move(expected));
  }

  void expect(TokenKind kind, std::string_view text) {
    if (!peek_is(kind, text)) {
      fail(peek() ? "unexpected '" + peek()->text + "'" : "unexpected end of input", {std::string(text)});
    }
    ++pos_;
  }

  static NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

  NodePtr expression() {
    NodePtr lhs = term();
    while (peek_is(TokenKind::Operator, "+") || peek_is(TokenKind::Operator, "-")) {
      const Token& t = toks_[pos_++];
      NodePtr rhs = term();
      lhs = make({.kind = NodeKind::Binary, .op = t.text[0], .args = {lhs, rhs}, .position = t.position});
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (peek_is(TokenKind::Operator, "*") || peek_is(TokenKind::Operator, "/")) {
      const Token& t = toks_[pos_++];
      NodePtr rhs = unary();
      lhs = make({.kind = NodeKind::Binary, .op = t.text[0], .args = {lhs, rhs}, .position = t.position});
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek_is(TokenKind::Operator, "-")) {
      const Token& t = toks_[pos_++];
      return make({.kind = NodeKind::Negate, .args = {unary()}, .position = t.position});
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek_is(TokenKind::Operator, "^")) {
      const Token& t = toks_[pos_++];
      NodePtr exponent = unary();
      if (depends_on_coordinates(*exponent)) {
        throw SyntaxError(ErrorCode::ParseError, "exponent must not depend on x or y", t.position,
                          {"constant exponent"});
      }
      return make({.kind = NodeKind::Binary, .op = '^', .args = {base, exponent}, .position = t.position});
    }
    return base;
  }

  NodePtr vector_argument() {
    const Token* t = peek();
    if (!t || t->kind != TokenKind::Identifier) fail("expected a vector name", {"x", "y", "vector parameter"});
    const std::string& name = t->text;
    const bool declared = name == "x" || name == "y" || opts_.vector_names.empty() ||
                          std::find(opts_.vector_names.begin(), opts_.vector_names.end(), name) !=
                              opts_.vector_names.end();
    if (!declared || coordinate_index(name) != 0 ||
        std::find(kFunctions.begin(), kFunctions.end(), name) != kFunctions.end()) {
      fail("'" + name + "' is not a vector", {"x", "y", "vector parameter"});
    }
    ++pos_;
    return make({.kind = NodeKind::Vector, .name = name, .position = t->position});
  }

  NodePtr call(const Token& fn) {
    expect(TokenKind::Paren, "(");
    std::vector<NodePtr> args;
    if (!peek_is(TokenKind::Paren, ")")) {
      while (true) {
        args.push_back(takes_vectors(fn.text) ? vector_argument() : expression());
        if (!peek_is(TokenKind::Comma, ",")) break;
        ++pos_;
      }
    }
    if (!peek_is(TokenKind::Paren, ")")) fail(peek() ? "unexpected '" + peek()->text + "'" : "unexpected end of input", {",", ")"});
    ++pos_;
    if (static_cast<int>(args.size()) != arity(fn.text)) {
      throw SyntaxError(ErrorCode::ArityError,
                        fn.text + "() takes " + std::to_string(arity(fn.text)) + " argument(s), got " +
                            std::to_string(args.size()),
                        fn.position);
    }
    return make({.kind = NodeKind::Call, .name = fn.text, .args = std::move(args), .position = fn.position});
  }

  NodePtr primary() {
    const Token* t = peek();
    if (!t) fail("unexpected end of input", {"number", "identifier", "("});
    switch (t->kind) {
      case TokenKind::Number: {
        ++pos_;
        return make({.kind = NodeKind::Constant, .number = std::stod(t->text), .position = t->position});
      }
      case TokenKind::Identifier: {
        const Token& id = *t;
        ++pos_;
        if (peek_is(TokenKind::Paren, "(")) {
          if (std::find(kFunctions.begin(), kFunctions.end(), id.text) == kFunctions.end()) {
            throw SyntaxError(ErrorCode::ParseError, "unknown function '" + id.text + "'", id.position,
                              {kFunctions.begin(), kFunctions.end()});
          }
          return call(id);
        }
        if (std::find(kFunctions.begin(), kFunctions.end(), id.text) != kFunctions.end()) {
          throw SyntaxError(ErrorCode::ParseError, "function '" + id.text + "' needs arguments", id.position, {"("});
        }
        if (id.text == "x" || id.text == "y") {
          throw SyntaxError(ErrorCode::ParseError, "'" + id.text + "' is a vector; use " + id.text + "1.." + id.text +
                                                       "n or dot()",
                            id.position, {id.text + "1"});
        }
        if (const int idx = coordinate_index(id.text)) {
          if (opts_.dimension && (idx < 1 || idx > *opts_.dimension)) {
            throw SyntaxError(ErrorCode::ParseError,
                              id.text + " is out of range for dimension " + std::to_string(*opts_.dimension),
                              id.position);
          }
          return make({.kind = NodeKind::Coordinate, .name = std::string(1, id.text[0]), .index = idx,
                       .position = id.position});
        }
        return make({.kind = NodeKind::Named, .name = id.text, .position = id.position});
      }
      case TokenKind::Paren:
        if (t->text == "(") {
          ++pos_;
          NodePtr e = expression();
          expect(TokenKind::Paren, ")");
          return e;
        }
        break;
      default:
        break;
    }
    fail("unexpected '" + t->text + "'", {"number", "identifier", "("});
  }

  std::span<const Token> toks_;
  const ParseOptions& opts_;
  std::size_t pos_ = 0;
};

}  // namespace

NodePtr parse(std::span<const Token> tokens, const ParseOptions& options) { return Parser(tokens, options).run(); }

NodePtr parse(std::string_view src, const ParseOptions& options) {
  const auto tokens = tokenize(src);
  return parse(tokens, options);
}

std::string to_string(const Node& ast) {
  switch (ast.kind) {
    case NodeKind::Constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", ast.number);
      return buf;
    }
    case NodeKind::Coordinate:
      return ast.name + std::to_string(ast.index);
    case NodeKind::Named:
    case NodeKind::Vector:
      return ast.name;
    case NodeKind::Negate:
      return "(-" + to_string(*ast.args[0]) + ")";
    case NodeKind::Binary:
      return "(" + to_string(*ast.args[0]) + " " + ast.op + " " + to_string(*ast.args[1]) + ")";
    case NodeKind::Call: {
      std::string s = ast.name + "(";
      for (std::size_t i = 0; i < ast.args.size(); ++i) {
        if (i) s += ", ";
        s += to_string(*ast.args[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

}  // namespace finsler::expr
