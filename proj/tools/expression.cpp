#include "impvol/expression.hpp"

#include <cctype>
#include <cmath>
#include <string>

namespace impvol {

namespace {

class Parser {
 public:
  Parser(std::string_view text, int bits) : text_(text), bits_(bits) {}

  XReal run() {
    XReal v = sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw DomainError("expression \"" + std::string(text_) + "\": " + why + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool starts_primary() {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '(' || c == 'e' || c == 'p';
  }

  XReal sum() {
    XReal v = product();
    for (;;) {
      const char c = peek();
      if (c == '+') {
        ++pos_;
        v += product();
      } else if (c == '-') {
        ++pos_;
        v -= product();
      } else {
        return v;
      }
    }
  }

  XReal product() {
    XReal v = unary();
    for (;;) {
      const char c = peek();
      if (c == '*') {
        ++pos_;
        v *= unary();
      } else if (c == '/') {
        ++pos_;
        XReal d = unary();
        if (d.is_zero()) fail("division by zero");
        v /= d;
      } else if (starts_primary()) {
        v *= power();
      } else {
        return v;
      }
    }
  }

  XReal unary() {
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return -unary();
    }
    if (c == '+') {
      ++pos_;
      return unary();
    }
    return power();
  }

  XReal power() {
    XReal base = primary();
    if (peek() != '^') return base;
    ++pos_;
    const XReal exponent = unary();
    const double approx = exponent.to_double();
    const long n = std::abs(approx) < 1e15 ? static_cast<long>(approx) : 0;
    if (std::abs(approx) < 1e15 && XReal(n, bits_) == exponent) {
      if (base.is_zero() && n < 0) fail("zero to a negative power");
      return pow(base, n);
    }
    if (!(base > 0L)) fail("non-integer power of a non-positive base");
    return pow(base, exponent);
  }

  XReal primary() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      XReal v = sum();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return v;
    }
    if (text_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return XReal::pi(bits_);
    }
    if (c == 'e') {
      ++pos_;
      return XReal::e(bits_);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    fail(c == '\0' ? "unexpected end" : "unexpected '" + std::string(1, c) + "'");
  }

  XReal number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail("malformed number");
    // An exponent only when digits follow; "2e" alone is 2 times e.
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        digits();
      }
    }
    return XReal::from_string(text_.substr(start, pos_ - start), bits_);
  }

  std::string_view text_;
  int bits_;
  std::size_t pos_ = 0;
};

}  // namespace

XReal parse_expression(std::string_view text, int bits) {
  if (bits < kMinPrecisionBits) throw DomainError("parse_expression: precision below 64 bits");
  return Parser(text, bits).run();
}

}  // namespace impvol
