#include "pcacouple/scalar.hpp"

#include <cctype>

#include "pcacouple/error.hpp"

namespace pcacouple {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.empty()) throw InvalidInput("empty number");

  if (auto slash = s.find('/'); slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw InvalidInput("zero denominator in '" + text + "'");
    Rational q = num / den;
    q.canonicalize();
    return q;
  }

  bool negative = false;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  std::string mantissa = s.substr(pos);
  long exponent = 0;
  if (auto e = mantissa.find_first_of("eE"); e != std::string::npos) {
    std::string exp_text = mantissa.substr(e + 1);
    mantissa = mantissa.substr(0, e);
    bool exp_negative = false;
    std::size_t ep = 0;
    if (!exp_text.empty() && (exp_text[0] == '+' || exp_text[0] == '-')) {
      exp_negative = exp_text[0] == '-';
      ep = 1;
    }
    std::string digits = exp_text.substr(ep);
    if (!all_digits(digits) || digits.size() > 6) throw InvalidInput("bad exponent in '" + text + "'");
    exponent = std::stol(digits);
    if (exp_negative) exponent = -exponent;
  }
  std::string int_part = mantissa;
  std::string frac_part;
  if (auto dot = mantissa.find('.'); dot != std::string::npos) {
    int_part = mantissa.substr(0, dot);
    frac_part = mantissa.substr(dot + 1);
  }
  if (int_part.empty() && frac_part.empty()) throw InvalidInput("bad number '" + text + "'");
  if ((!int_part.empty() && !all_digits(int_part)) || (!frac_part.empty() && !all_digits(frac_part))) {
    throw InvalidInput("bad number '" + text + "'");
  }
  mpz_class numerator((int_part.empty() ? std::string("0") : int_part) + frac_part, 10);
  exponent -= static_cast<long>(frac_part.size());

  Rational q(numerator);
  mpz_class ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  if (exponent < 0) {
    q /= Rational(ten_pow);
  } else {
    q *= Rational(ten_pow);
  }
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

}  // namespace pcacouple
