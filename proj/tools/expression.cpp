#include "expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "raddiff/errors.hpp"

namespace raddiff::app {

struct MuExpression::Node {
  enum class Kind { constant, mu, add, sub, mul, div, neg, pow, exp } kind;
  double value = 0;
  int exponent = 0;
  std::shared_ptr<const Node> a, b;

  double eval(double mu) const {
    switch (kind) {
      case Kind::constant: return value;
      case Kind::mu: return mu;
      case Kind::add: return a->eval(mu) + b->eval(mu);
      case Kind::sub: return a->eval(mu) - b->eval(mu);
      case Kind::mul: return a->eval(mu) * b->eval(mu);
      case Kind::div: return a->eval(mu) / b->eval(mu);
      case Kind::neg: return -a->eval(mu);
      case Kind::pow: return std::pow(a->eval(mu), exponent);
      case Kind::exp: return std::exp(a->eval(mu));
    }
    return 0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const MuExpression::Node>;
using Kind = decltype(MuExpression::Node::kind);

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<MuExpression::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("psi expression '" + s_ + "': " + what + " at position " +
                          std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_word(const char* w) {
    skip();
    const std::string word(w);
    if (s_.compare(pos_, word.size(), word) != 0) return false;
    const std::size_t end = pos_ + word.size();
    if (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) return false;
    pos_ = end;
    return true;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = make(Kind::add, n, term());
      else if (accept('-')) n = make(Kind::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Kind::mul, n, unary());
      else if (accept('/')) n = make(Kind::div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Kind::neg, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (!accept('^')) return base;
    skip();
    bool negative = false;
    if (accept('-')) negative = true;
    skip();
    int e = 0;
    const char* first = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), e);
    if (ec != std::errc() || ptr == first) fail("integer exponent expected");
    pos_ += static_cast<std::size_t>(ptr - first);
    auto n = std::make_shared<MuExpression::Node>();
    n->kind = Kind::pow;
    n->a = base;
    n->exponent = negative ? -e : e;
    return n;
  }
  NodePtr atom() {
    skip();
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("')' expected");
      return n;
    }
    if (accept_word("mu")) return make(Kind::mu);
    if (accept_word("pi")) {
      auto n = std::make_shared<MuExpression::Node>();
      n->kind = Kind::constant;
      n->value = std::numbers::pi;
      return n;
    }
    if (accept_word("exp")) {
      if (!accept('(')) fail("'(' expected after exp");
      NodePtr arg = expr();
      if (!accept(')')) fail("')' expected");
      return make(Kind::exp, arg);
    }
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      double v = 0;
      const char* first = s_.data() + pos_;
      auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v);
      if (ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(ptr - first);
      auto n = std::make_shared<MuExpression::Node>();
      n->kind = Kind::constant;
      n->value = v;
      return n;
    }
    fail(pos_ < s_.size() ? "unexpected character" : "unexpected end of input");
  }
};

}  // namespace

MuExpression::MuExpression(const std::string& text) : text_(text), root_(Parser(text_).parse()) {}

double MuExpression::operator()(double mu) const { return root_->eval(mu); }

}  // namespace raddiff::app
