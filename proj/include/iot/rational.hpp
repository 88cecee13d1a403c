#pragma once

// Exact rational scalar used by every identifiability computation.
// Backed by GMP's mpq_class; values are always canonical (lowest terms,
// positive denominator).

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iot {

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Rational {
 public:
  Rational() = default;
  Rational(int v) : q_(v) {}            // NOLINT(google-explicit-constructor)
  Rational(long v) : q_(v) {}           // NOLINT(google-explicit-constructor)
  Rational(unsigned v) : q_(v) {}       // NOLINT(google-explicit-constructor)
  Rational(unsigned long v) : q_(v) {}  // NOLINT(google-explicit-constructor)
  Rational(long long v) : q_(std::to_string(v)) {}  // NOLINT
  Rational(const mpz_class& num, const mpz_class& den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    q_ = mpq_class(num, den);
    q_.canonicalize();
  }
  explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

  const mpq_class& raw() const { return q_; }
  mpz_class numerator() const { return q_.get_num(); }
  mpz_class denominator() const { return q_.get_den(); }

  bool is_zero() const { return sgn(q_) == 0; }
  int sign() const { return sgn(q_); }
  bool is_integer() const { return q_.get_den() == 1; }
  /// Nearest double; mpq_get_d alone truncates toward zero.
  double to_double() const {
    const double t = q_.get_d();
    if (!std::isfinite(t)) return t;
    const double away = std::nextafter(t, sgn(q_) < 0 ? -HUGE_VAL : HUGE_VAL);
    if (!std::isfinite(away)) return t;
    const mpq_class et(t), ea(away);
    return abs(ea - q_) < abs(et - q_) ? away : t;
  }

  /// Canonical "p/q" text; integers render without a denominator.
  std::string str() const { return q_.get_str(); }

  Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
  Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
  Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("rational division by zero");
    q_ /= o.q_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.q_)); }

  friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.q_, b.q_) == 0; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int c = cmp(a.q_, b.q_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  mpq_class q_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }
inline const Rational& min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline const Rational& max(const Rational& a, const Rational& b) { return a < b ? b : a; }

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (ch < '0' || ch > '9') return false;
  return true;
}

inline mpz_class parse_integer(std::string_view s, std::string_view whole) {
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) throw ParseError("malformed rational: '" + std::string(whole) + "'");
  mpz_class v(std::string(s), 10);
  return negative ? mpz_class(-v) : v;
}

inline mpz_class pow10(unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
  return r;
}

}  // namespace detail

/// Parses "p/q", an integer, or a decimal literal (optional exponent).
/// Decimals are converted through their exact base-10 expansion.
inline Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) throw ParseError("malformed rational: empty string");

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    mpz_class num = detail::parse_integer(s.substr(0, slash), text);
    std::string_view den_text = s.substr(slash + 1);
    if (!detail::all_digits(den_text))
      throw ParseError("malformed rational: '" + std::string(text) + "'");
    mpz_class den(std::string(den_text), 10);
    if (den == 0) throw ParseError("zero denominator: '" + std::string(text) + "'");
    return Rational(num, den);
  }

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = s.substr(e + 1);
    mpz_class ev = detail::parse_integer(exp_text, text);
    if (ev > 100000 || ev < -100000)
      throw ParseError("exponent out of range: '" + std::string(text) + "'");
    exponent = ev.get_si();
    s = s.substr(0, e);
  }
  std::string digits;
  long frac_len = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = s.substr(0, dot);
    std::string_view frac_part = s.substr(dot + 1);
    if ((int_part.empty() && frac_part.empty()) ||
        (!int_part.empty() && !detail::all_digits(int_part)) ||
        (!frac_part.empty() && !detail::all_digits(frac_part)))
      throw ParseError("malformed rational: '" + std::string(text) + "'");
    digits = std::string(int_part) + std::string(frac_part);
    frac_len = static_cast<long>(frac_part.size());
  } else {
    if (!detail::all_digits(s)) throw ParseError("malformed rational: '" + std::string(text) + "'");
    digits = std::string(s);
  }
  mpz_class num(digits, 10);
  if (negative) num = -num;
  long shift = exponent - frac_len;
  if (shift >= 0) return Rational(num * detail::pow10(static_cast<unsigned long>(shift)), 1);
  return Rational(num, detail::pow10(static_cast<unsigned long>(-shift)));
}

inline std::string render(const Rational& r) { return r.str(); }

namespace literals {
inline Rational operator""_q(const char* s, std::size_t n) { return parse_rational({s, n}); }
}  // namespace literals

}  // namespace iot

template <>
struct std::hash<iot::Rational> {
  std::size_t operator()(const iot::Rational& r) const noexcept {
    return std::hash<std::string>{}(r.str());
  }
};
