#include "hsdp/rational.hpp"

#include <stdexcept>

namespace hsdp {

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + s);
    return num / den;
  }
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  std::string digits;
  std::size_t frac_digits = 0;
  bool seen_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("bad number: " + s);
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_dot) ++frac_digits;
    } else {
      throw std::invalid_argument("bad number: " + s);
    }
  }
  if (digits.empty()) throw std::invalid_argument("bad number: " + s);
  mpz_class num(digits, 10);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_digits);
  Rational r(num, den);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

std::string format_rational(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  mpz_class den = r.get_den();
  unsigned twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return r.get_num().get_str() + "/" + r.get_den().get_str();
  unsigned places = twos > fives ? twos : fives;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
  mpz_class scaled = r.get_num() * scale / r.get_den();
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string digits = scaled.get_str();
  if (digits.size() <= places) digits = std::string(places + 1 - digits.size(), '0') + digits;
  std::string out = digits.substr(0, digits.size() - places) + "." + digits.substr(digits.size() - places);
  return neg ? "-" + out : out;
}

double to_double(const Rational& r) { return r.get_d(); }

std::size_t hash_rational(const Rational& r) {
  std::size_t h = mpz_get_ui(r.get_num_mpz_t());
  h ^= static_cast<std::size_t>(mpz_sgn(r.get_num_mpz_t()) + 1) << 60;
  h = h * 1000003u ^ mpz_get_ui(r.get_den_mpz_t());
  h = h * 1000003u ^ mpz_size(r.get_num_mpz_t());
  return h;
}

Rational sqrt_enclosure(const Rational& r, const Rational& tol, bool* exact) {
  if (r < 0) throw std::domain_error("sqrt of negative rational");
  if (mpz_perfect_square_p(r.get_num_mpz_t()) && mpz_perfect_square_p(r.get_den_mpz_t())) {
    mpz_class n, d;
    mpz_sqrt(n.get_mpz_t(), r.get_num_mpz_t());
    mpz_sqrt(d.get_mpz_t(), r.get_den_mpz_t());
    if (exact) *exact = true;
    Rational out(n, d);
    out.canonicalize();
    return out;
  }
  if (exact) *exact = false;
  Rational lo = 0;
  Rational hi = r > 1 ? r : Rational(1);
  while (hi - lo > tol) {
    Rational mid = (lo + hi) / 2;
    if (mid * mid <= r)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace hsdp
