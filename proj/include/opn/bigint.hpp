// Thin helpers over GMP's C++ interface used throughout the library.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace opn {

using Integer = mpz_class;
using Rational = mpq_class;

inline Integer to_integer(std::string_view text) {
  Integer value;
  if (text.empty() || value.set_str(std::string(text), 10) != 0) {
    throw std::invalid_argument("not a decimal integer: " + std::string(text));
  }
  return value;
}

inline std::string to_string(const Integer& n) { return n.get_str(10); }

inline Integer from_u64(std::uint64_t v) {
  Integer r;
  mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return r;
}

inline bool fits_u64(const Integer& n) {
  return sgn(n) >= 0 && mpz_sizeinbase(n.get_mpz_t(), 2) <= 64;
}

inline std::uint64_t to_u64(const Integer& n) {
  if (!fits_u64(n)) throw std::overflow_error("integer does not fit in 64 bits");
  std::uint64_t v = 0;
  mpz_export(&v, nullptr, 1, sizeof(v), 0, 0, n.get_mpz_t());
  return v;
}

inline Integer ipow(const Integer& base, unsigned long exp) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), exp);
  return r;
}

inline Integer ipow(unsigned long base, unsigned long exp) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
  return r;
}

inline Integer powm(const Integer& base, const Integer& exp, const Integer& mod) {
  Integer r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

inline Integer powm(const Integer& base, unsigned long exp, const Integer& mod) {
  Integer r;
  mpz_powm_ui(r.get_mpz_t(), base.get_mpz_t(), exp, mod.get_mpz_t());
  return r;
}

inline Integer gcd(const Integer& a, const Integer& b) {
  Integer r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

/// floor(n^(1/k)) for n >= 0, k >= 1.
inline Integer iroot(const Integer& n, unsigned long k) {
  if (sgn(n) < 0) throw std::domain_error("iroot of negative integer");
  Integer r;
  mpz_root(r.get_mpz_t(), n.get_mpz_t(), k);
  return r;
}

inline Integer floor_of(const Rational& q) {
  Integer r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

inline Integer ceil_of(const Rational& q) {
  Integer r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

inline Rational make_rational(const Integer& num, const Integer& den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline unsigned long mod_ui(const Integer& n, unsigned long m) {
  return mpz_fdiv_ui(n.get_mpz_t(), m);
}

/// Largest e with p^e | n (n != 0).
inline unsigned long remove_factor(Integer& n, const Integer& p) {
  return mpz_remove(n.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t());
}

}  // namespace opn
