#pragma once

// Rational expressions in x: numbers, x, i, named constants, sqrt(...) of a
// constant, + - * / ^ (integer exponents) and parentheses.

#include <cctype>
#include <map>
#include <set>
#include <string>

#include "qesforge/errors.hpp"
#include "qesforge/poly.hpp"

namespace qes {

class UExpression {
 public:
  explicit UExpression(std::string text) : text_(std::move(text)) {
    // A dry run over an empty binding collects the constant names.
    Parser p(text_, nullptr, &names_);
    p.parse();
  }

  const std::string& text() const noexcept { return text_; }
  /// Named constants the expression refers to.
  const std::set<std::string>& constants() const noexcept { return names_; }

  RationalFn evaluate(const std::map<std::string, cplx>& bindings = {}) const {
    for (const auto& n : names_)
      if (!bindings.count(n)) throw ValidationFailed("constant '" + n + "' has no value");
    Parser p(text_, &bindings, nullptr);
    return p.parse().normalized();
  }

 private:
  class Parser {
   public:
    Parser(const std::string& s, const std::map<std::string, cplx>* bind, std::set<std::string>* names)
        : s_(s), bind_(bind), names_(names) {}

    RationalFn parse() {
      RationalFn r = expr();
      skip();
      if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
      return r;
    }

   private:
    [[noreturn]] void fail(const std::string& what) const {
      throw ValidationFailed("U expression, position " + std::to_string(pos_) + ": " + what);
    }
    void skip() {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
      skip();
      if (pos_ < s_.size() && s_[pos_] == c) {
        ++pos_;
        return true;
      }
      return false;
    }

    RationalFn expr() {
      RationalFn acc = term();
      for (;;) {
        if (eat('+'))
          acc = acc + term();
        else if (eat('-'))
          acc = acc - term();
        else
          return acc;
      }
    }
    RationalFn term() {
      RationalFn acc = unary();
      for (;;) {
        if (eat('*')) {
          acc = acc * unary();
        } else if (eat('/')) {
          const RationalFn d = unary();
          if (d.num().is_zero()) fail("division by zero");
          acc = acc / d;
        } else {
          return acc;
        }
      }
    }
    RationalFn unary() {
      if (eat('-')) return -unary();
      if (eat('+')) return unary();
      return power();
    }
    RationalFn power() {
      RationalFn base = primary();
      if (!eat('^')) return base;
      const RationalFn e = unary();
      if (e.num().degree() > 0 || e.den().degree() > 0) fail("exponent must be a constant");
      const cplx ev = e.num()[0] / e.den()[0];
      const double n = ev.real();
      if (ev.imag() != 0.0 || n != std::round(n)) fail("exponent must be an integer");
      if (!bind_) return base;
      const int k = static_cast<int>(std::lround(n));
      RationalFn out(Poly::constant(1.0));
      const RationalFn b = k >= 0 ? base : RationalFn(base.den(), base.num());
      for (int i = 0; i < std::abs(k); ++i) out = out * b;
      return out;
    }
    RationalFn primary() {
      skip();
      if (pos_ >= s_.size()) fail("unexpected end of input");
      const char ch = s_[pos_];
      if (ch == '(') {
        ++pos_;
        RationalFn r = expr();
        if (!eat(')')) fail("missing ')'");
        return r;
      }
      if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
        std::size_t used = 0;
        const double v = std::stod(s_.substr(pos_), &used);
        pos_ += used;
        return RationalFn(Poly::constant(v));
      }
      if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
          ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        if (id == "x") return RationalFn(Poly{0.0, 1.0});
        if (id == "i") return RationalFn(Poly::constant(cplx(0.0, 1.0)));
        if (id == "sqrt") {
          if (!eat('(')) fail("sqrt needs '('");
          const RationalFn a = expr();
          if (!eat(')')) fail("missing ')'");
          if (a.num().degree() > 0 || a.den().degree() > 0) fail("sqrt takes a constant argument");
          return RationalFn(Poly::constant(std::sqrt(a.num()[0] / a.den()[0])));
        }
        if (names_) {
          names_->insert(id);
          return RationalFn(Poly::constant(1.0));
        }
        return RationalFn(Poly::constant(bind_->at(id)));
      }
      fail("unexpected '" + std::string(1, ch) + "'");
    }

    const std::string& s_;
    const std::map<std::string, cplx>* bind_;
    std::set<std::string>* names_;
    std::size_t pos_ = 0;
  };

  std::string text_;
  std::set<std::string> names_;
};

}  // namespace qes
