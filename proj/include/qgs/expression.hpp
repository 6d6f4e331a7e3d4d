#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace qgs {

/// A real function of the edge coordinate x.
///
/// Grammar (whitespace-insensitive):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?          right associative
///   primary := number | 'x' | func '(' expr ')' | '(' expr ')'
///   func    := sin | cos | exp | sqrt | abs
///
/// Parse failures raise ParseError carrying the byte offset. Evaluation at a
/// pole, or any nonfinite result, raises EvaluationError.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view source);
  static Expression constant(double value);

  double operator()(double x) const;

  /// Fully parenthesized form that parses back to the same function.
  std::string to_string() const;
  bool is_constant() const;
  const std::string& source() const { return source_; }

 private:
  Expression(std::shared_ptr<const Node> root, std::string source);

  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace qgs
