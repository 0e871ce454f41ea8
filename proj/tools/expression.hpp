#pragma once
#include <memory>
#include <string>

namespace raddiff::app {

/// Tiny expression language for inflow profiles in the direction cosine:
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := ('+' | '-') unary | power
///   power  := atom ('^' integer)?
///   atom   := number | 'mu' | 'pi' | 'exp' '(' expr ')' | '(' expr ')'
class MuExpression {
 public:
  struct Node;
  explicit MuExpression(const std::string& text);
  double operator()(double mu) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace raddiff::app
