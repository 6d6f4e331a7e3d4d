#include "qgs/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qgs/error.hpp"

namespace qgs {

enum class Kind { number, variable, negate, add, subtract, multiply, divide, power, call };
enum class Function { sin, cos, exp, sqrt, abs };

struct Expression::Node {
  Kind kind = Kind::number;
  double value = 0.0;
  Function function = Function::sin;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto node = std::make_shared<Expression::Node>();
  node->kind = kind;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

NodePtr make_number(double value) {
  auto node = std::make_shared<Expression::Node>();
  node->value = value;
  return node;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr node = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("syntax error at byte " + std::to_string(pos_) + ": " + what, pos_);
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      skip();
      fail(pos_ < src_.size() ? "expected '" + std::string(1, c) + "'"
                              : "expected '" + std::string(1, c) + "' before end of input");
    }
  }

  NodePtr expr() {
    NodePtr node = term();
    for (;;) {
      if (accept('+')) {
        node = make(Kind::add, node, term());
      } else if (accept('-')) {
        node = make(Kind::subtract, node, term());
      } else {
        return node;
      }
    }
  }

  NodePtr term() {
    NodePtr node = unary();
    for (;;) {
      if (accept('*')) {
        node = make(Kind::multiply, node, unary());
      } else if (accept('/')) {
        node = make(Kind::divide, node, unary());
      } else {
        return node;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::negate, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::power, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (accept('(')) {
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return make_number(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return make(Kind::variable);

    Function fn;
    if (name == "sin") {
      fn = Function::sin;
    } else if (name == "cos") {
      fn = Function::cos;
    } else if (name == "exp") {
      fn = Function::exp;
    } else if (name == "sqrt") {
      fn = Function::sqrt;
    } else if (name == "abs") {
      fn = Function::abs;
    } else {
      throw ParseError("unknown identifier '" + std::string(name) + "' at byte " + std::to_string(start),
                       start);
    }
    expect('(');
    auto node = std::make_shared<Expression::Node>();
    node->kind = Kind::call;
    node->function = fn;
    node->lhs = expr();
    expect(')');
    return node;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double checked(double value, const char* what) {
  if (!std::isfinite(value)) throw EvaluationError(std::string("nonfinite result in ") + what);
  return value;
}

double evaluate(const Expression::Node& node, double x) {
  switch (node.kind) {
    case Kind::number:
      return node.value;
    case Kind::variable:
      return x;
    case Kind::negate:
      return -evaluate(*node.lhs, x);
    case Kind::add:
      return checked(evaluate(*node.lhs, x) + evaluate(*node.rhs, x), "'+'");
    case Kind::subtract:
      return checked(evaluate(*node.lhs, x) - evaluate(*node.rhs, x), "'-'");
    case Kind::multiply:
      return checked(evaluate(*node.lhs, x) * evaluate(*node.rhs, x), "'*'");
    case Kind::divide: {
      const double den = evaluate(*node.rhs, x);
      if (den == 0.0) {
        std::ostringstream msg;
        msg << "division by zero at x = " << x;
        throw EvaluationError(msg.str());
      }
      return checked(evaluate(*node.lhs, x) / den, "'/'");
    }
    case Kind::power:
      return checked(std::pow(evaluate(*node.lhs, x), evaluate(*node.rhs, x)), "'^'");
    case Kind::call: {
      const double arg = evaluate(*node.lhs, x);
      switch (node.function) {
        case Function::sin:
          return std::sin(arg);
        case Function::cos:
          return std::cos(arg);
        case Function::exp:
          return checked(std::exp(arg), "exp");
        case Function::sqrt:
          return checked(std::sqrt(arg), "sqrt");
        case Function::abs:
          return std::abs(arg);
      }
    }
  }
  return 0.0;
}

bool depends_on_x(const Expression::Node& node) {
  if (node.kind == Kind::variable) return true;
  return (node.lhs && depends_on_x(*node.lhs)) || (node.rhs && depends_on_x(*node.rhs));
}

void print(const Expression::Node& node, std::string& out) {
  auto binary = [&](const char* op) {
    out += '(';
    print(*node.lhs, out);
    out += op;
    print(*node.rhs, out);
    out += ')';
  };
  switch (node.kind) {
    case Kind::number: {
      char buffer[32];
      std::snprintf(buffer, sizeof buffer, "%.17g", node.value);
      out += buffer;
      return;
    }
    case Kind::variable:
      out += 'x';
      return;
    case Kind::negate:
      out += "(-";
      print(*node.lhs, out);
      out += ')';
      return;
    case Kind::add:
      return binary("+");
    case Kind::subtract:
      return binary("-");
    case Kind::multiply:
      return binary("*");
    case Kind::divide:
      return binary("/");
    case Kind::power:
      return binary("^");
    case Kind::call: {
      static constexpr const char* names[] = {"sin", "cos", "exp", "sqrt", "abs"};
      out += names[static_cast<int>(node.function)];
      out += '(';
      print(*node.lhs, out);
      out += ')';
      return;
    }
  }
}

}  // namespace

Expression::Expression(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {}

Expression Expression::parse(std::string_view source) {
  return Expression(Parser(source).parse(), std::string(source));
}

Expression Expression::constant(double value) {
  Expression e(make_number(value), "");
  e.source_ = e.to_string();
  return e;
}

double Expression::operator()(double x) const { return evaluate(*root_, x); }

std::string Expression::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

bool Expression::is_constant() const { return !depends_on_x(*root_); }

}  // namespace qgs
