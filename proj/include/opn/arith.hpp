// Exact number-theoretic primitives for factor chains: valuations,
// multiplicative orders, divisor functions, cyclotomic values.
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "opn/bigint.hpp"
#include "opn/factordb.hpp"

namespace opn::arith {

using Valuation = unsigned long;

/// Exponent of a prime component: a positive integer, or INF for components
/// that exceeded the branching bound.
class Exponent {
 public:
  static Exponent finite(unsigned long value) {
    if (value == 0) throw std::invalid_argument("exponent must be positive");
    return Exponent(false, value);
  }
  static Exponent infinite() { return Exponent(true, 0); }

  bool is_infinite() const { return infinite_; }
  unsigned long value() const {
    if (infinite_) throw std::logic_error("INF exponent has no value");
    return value_;
  }

  friend bool operator==(const Exponent&, const Exponent&) = default;

 private:
  Exponent(bool inf, unsigned long v) : infinite_(inf), value_(v) {}
  bool infinite_;
  unsigned long value_;
};

inline Valuation vp(const Integer& p, const Integer& n) {
  if (n < 1) throw std::domain_error("vp requires n >= 1");
  if (p < 2) throw std::domain_error("vp requires a prime");
  Integer m = n;
  return remove_factor(m, p);
}

inline factordb::EffortBudget unbounded_budget() {
  factordb::EffortBudget b;
  b.rho_iterations = std::numeric_limits<std::uint64_t>::max() / 2;
  b.time_cap = std::chrono::hours(24);
  return b;
}

inline factordb::Factorization complete_factorization(const Integer& n) {
  auto f = factordb::factor(n, unbounded_budget());
  if (!f.complete()) throw std::runtime_error("could not factor " + to_string(n));
  return f;
}

/// Carmichael's lambda from a complete factorization.
inline Integer carmichael(const factordb::Factorization& f) {
  Integer lambda = 1;
  for (const auto& pf : f.factors) {
    Integer part;
    if (pf.prime == 2) {
      part = pf.exponent <= 2 ? Integer(pf.exponent) : ipow(2, pf.exponent - 2);
      if (pf.exponent == 0) part = 1;
    } else {
      part = ipow(pf.prime, pf.exponent - 1) * (pf.prime - 1);
    }
    mpz_lcm(lambda.get_mpz_t(), lambda.get_mpz_t(), part.get_mpz_t());
  }
  return lambda;
}

/// Smallest m >= 1 with c^m = 1 (mod d), found by stripping prime factors
/// from lambda(d).
inline Integer mult_order(const Integer& c, const Integer& d) {
  if (d <= 1) throw std::domain_error("mult_order requires d > 1");
  Integer cr = c % d;
  if (cr < 0) cr += d;
  if (gcd(cr, d) != 1) throw std::domain_error("mult_order requires gcd(c, d) = 1");
  // The search asks for the same small orders over and over.
  thread_local std::map<std::pair<unsigned long, unsigned long>, Integer> memo;
  const bool small = d.fits_ulong_p();
  const std::pair<unsigned long, unsigned long> key{small ? cr.get_ui() : 0, small ? d.get_ui() : 0};
  if (small) {
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() > (1u << 20)) memo.clear();
  }
  Integer order = carmichael(complete_factorization(d));
  auto lf = complete_factorization(order);
  for (const auto& pf : lf.factors) {
    for (unsigned long i = 0; i < pf.exponent; ++i) {
      Integer trial = order / pf.prime;
      if (powm(cr, trial, d) != 1) break;
      order = trial;
    }
  }
  if (small) memo.emplace(key, order);
  return order;
}

/// sigma(p^a) = (p^(a+1) - 1) / (p - 1).
inline Integer sigma_pp(const Integer& p, unsigned long a) {
  Integer r = ipow(p, a + 1) - 1;
  mpz_divexact(r.get_mpz_t(), r.get_mpz_t(), Integer(p - 1).get_mpz_t());
  return r;
}

inline Integer sigma0(const Integer& n) {
  if (n < 1) throw std::domain_error("sigma0 requires n >= 1");
  Integer count = 1;
  for (const auto& pf : complete_factorization(n).factors) count *= pf.exponent + 1;
  return count;
}

inline Rational sigma_minus_one(const Integer& p, const Exponent& a) {
  if (a.is_infinite()) return make_rational(p, p - 1);
  return make_rational(sigma_pp(p, a.value()), ipow(p, a.value()));
}

inline std::vector<unsigned long> divisors(unsigned long n) {
  std::vector<unsigned long> small, large;
  for (unsigned long i = 1; i * i <= n; ++i) {
    if (n % i != 0) continue;
    small.push_back(i);
    if (i != n / i) large.push_back(n / i);
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

inline int mobius(unsigned long n) {
  int result = 1;
  for (unsigned long p = 2; p * p <= n; ++p) {
    if (n % p != 0) continue;
    n /= p;
    if (n % p == 0) return 0;
    result = -result;
  }
  if (n > 1) result = -result;
  return result;
}

/// Phi_d(p) via the Moebius product of (p^e - 1) over e | d.
inline Integer cyclotomic_eval(unsigned long d, const Integer& p) {
  if (d < 1) throw std::domain_error("cyclotomic_eval requires d >= 1");
  Integer num = 1, den = 1;
  for (unsigned long e : divisors(d)) {
    int mu = mobius(d / e);
    if (mu == 0) continue;
    Integer term = ipow(p, e) - 1;
    (mu > 0 ? num : den) *= term;
  }
  mpz_divexact(num.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return num;
}

/// v_q(base^exp - 1) computed modulo growing powers of q.
inline Valuation valuation_of_power_minus_one(const Integer& base, const Integer& exp,
                                               const Integer& q) {
  unsigned long cap = 8;
  for (;;) {
    Integer modulus = ipow(q, cap);
    Integer x = powm(base, exp, modulus) - 1;
    if (x < 0) x += modulus;
    if (x != 0) return remove_factor(x, q);
    cap *= 2;
  }
}

/// v_q(sigma(p^a)) by the three-case order formula, never forming sigma(p^a).
inline Valuation sigma_valuation(const Integer& q, const Integer& p, unsigned long a) {
  if (q < 3) throw std::domain_error("sigma_valuation requires q >= 3");
  if (p == q) throw std::domain_error("sigma_valuation requires p != q");
  const Integer order = mult_order(p, q);
  const Integer a1 = Integer(a) + 1;
  if (order == 1) return vp(q, a1);
  if (mpz_divisible_p(a1.get_mpz_t(), order.get_mpz_t())) {
    return valuation_of_power_minus_one(p, order, q) + vp(q, a1);
  }
  return 0;
}

/// sigma0(a+1) - 1: one prime of sigma(p^a) per divisor d > 1 of a+1.
inline unsigned long forced_distinct_factors(const Integer& /*p*/, unsigned long a) {
  return divisors(a + 1).size() - 1;
}

}  // namespace opn::arith
