#pragma once

#include <gmpxx.h>

#include <string>

namespace hef {

// Complex scalar with exact rational real and imaginary parts.  Used as the
// coefficient type of truncated power series when residuals must be literally
// zero rather than small.
struct RatComplex {
  mpq_class re, im;

  RatComplex() : re(0), im(0) {}
  RatComplex(long v) : re(v), im(0) {}  // NOLINT: implicit for integer literals
  RatComplex(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

  RatComplex& operator+=(const RatComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  RatComplex& operator-=(const RatComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  RatComplex& operator*=(const RatComplex& o) {
    mpq_class r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }

  friend RatComplex operator+(RatComplex a, const RatComplex& b) { return a += b; }
  friend RatComplex operator-(RatComplex a, const RatComplex& b) { return a -= b; }
  friend RatComplex operator*(RatComplex a, const RatComplex& b) { return a *= b; }
  friend RatComplex operator-(const RatComplex& a) { return {-a.re, -a.im}; }
  friend bool operator==(const RatComplex& a, const RatComplex& b) {
    return a.re == b.re && a.im == b.im;
  }
  friend bool operator!=(const RatComplex& a, const RatComplex& b) { return !(a == b); }

  friend RatComplex operator/(const RatComplex& a, const RatComplex& b) {
    mpq_class n = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
  }

  bool is_zero() const { return re == 0 && im == 0; }
  RatComplex conjugated() const { return {re, -im}; }

  std::string str() const {
    return "(" + re.get_str() + ", " + im.get_str() + ")";
  }
};

// Parses "p/q" or "p" into an exact rational.
inline mpq_class parse_rational(const std::string& text) {
  mpq_class v(text);
  v.canonicalize();
  return v;
}

}  // namespace hef
