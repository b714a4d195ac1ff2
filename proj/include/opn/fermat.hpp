// Fermat-prime machinery: exact valuations of sigma(p^a) at a Fermat prime q,
// forcing of the special prime, and large-divisor bounds for sigma(q^n).
#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "opn/arith.hpp"
#include "opn/bigint.hpp"
#include "opn/tables.hpp"

namespace opn::fermat {

inline bool is_fermat_prime(const Integer& q) {
  return q == 3 || q == 5 || q == 17 || q == 257 || q == 65537;
}

/// v_q(sigma(p^a)) for Fermat q, given whether p is the special prime.
inline arith::Valuation fermat_valuation(const Integer& q, const Integer& p, unsigned long a,
                                         bool p_is_special) {
  if (!is_fermat_prime(q)) throw std::domain_error("fermat_valuation requires a Fermat prime");
  if (p == q) throw std::domain_error("fermat_valuation requires p != q");
  const Integer a1 = Integer(a) + 1;
  if (p_is_special && mod_ui(p + 1, mpz_get_ui(q.get_mpz_t())) == 0) {
    return arith::vp(q, p + 1) + arith::vp(q, a1);
  }
  if (mod_ui(p - 1, mpz_get_ui(q.get_mpz_t())) == 0) return arith::vp(q, a1);
  return 0;
}

struct FermatContext {
  Integer q;
  unsigned long n = 0;  // q^n | N
  unsigned long b = 0;  // v_q(sigma(known components))
  long k1p = 0;         // known primes = 1 (mod q)
  long l1p = 0;         // known components with prime = 1 (mod q)
  long k2 = 0;
};

struct FermatReport {
  long tau = 0;
  long tau_prime = 0;
  bool pi_in_unknown_component = false;
  bool pi_forced_unknown = false;  // pi is one of the unknown primes
  long pi_plus_one_valuation_floor = 0;
  bool flags_F = false;  // tau > 0 but pi already sits in a known component
};

inline long prop7_tau(const FermatContext& c) {
  return static_cast<long>(c.n) - static_cast<long>(c.b) - (c.k1p - c.l1p + c.k2) * (c.k1p + c.k2 - 1);
}

inline long prop7_tau_prime(const FermatContext& c) {
  return static_cast<long>(c.n) - static_cast<long>(c.b) - (c.k1p - c.l1p + c.k2 - 1) * (c.k1p + c.k2 - 2) -
         (c.k1p + c.k2 - 1) / 2;
}

/// `unknown_component_primes`: known primes whose component is unknown (off
/// or infinite), other than q.
inline FermatReport prop7_analysis(const FermatContext& c, const std::vector<Integer>& unknown_component_primes,
                                   bool pi_in_known_component = false) {
  FermatReport r;
  r.tau = prop7_tau(c);
  if (r.tau <= 0) return r;
  r.pi_in_unknown_component = true;
  r.flags_F = pi_in_known_component;
  const Integer qt = ipow(c.q, static_cast<unsigned long>(r.tau));
  for (const auto& p : unknown_component_primes) {
    if (mod_ui(p, 4) == 1 && (p + 1) % qt == 0) return r;
  }
  r.pi_forced_unknown = true;
  r.tau_prime = prop7_tau_prime(c);
  r.pi_plus_one_valuation_floor = r.tau_prime;
  return r;
}

/// pi cannot divide sigma(q^k) when q^m | pi + 1 and k < 3m.
inline bool lemma8_excludes_pi(unsigned long k, unsigned long m) { return k < 3 * m; }

enum class OrderFactorKind { Exception, LargeFactor, NotInTable };

struct OrderFactorEntry {
  OrderFactorKind kind = OrderFactorKind::NotInTable;
  Integer value;
};

inline OrderFactorEntry lemma9_lookup(unsigned long q, const Integer& p,
                                 const tables::TableSet& t = tables::builtin_tables()) {
  if (q != 3 && q != 5 && q != 17) throw std::domain_error("lemma9_lookup requires q in {3, 5, 17}");
  for (const auto& row : t.order_factors) {
    if (row.q != q || row.p != p) continue;
    if (!row.large_factor) return {OrderFactorKind::Exception, Integer(0)};
    return {OrderFactorKind::LargeFactor, *row.large_factor};
  }
  return {};
}

/// The Eulerian-form filter on orders: o is usable for p unless o is even and
/// p^a || N with o | (a+1) is impossible. `p_may_be_special` means p is the
/// special prime, or p = 1 (mod 4) and the special prime is not a known
/// component.
inline bool order_admissible(const Integer& order, bool p_may_be_special) {
  if (mod_ui(order, 2) == 1) return true;
  return mod_ui(order, 4) == 2 && p_may_be_special;
}

/// Exponent of the known prime p_i allowed in V for base q.
inline unsigned long epsilon_exponent(const Integer& p_i, const Integer& q, bool q_may_be_special) {
  const Integer order = arith::mult_order(q, p_i);
  if (!order_admissible(order, q_may_be_special)) return 0;
  // s = v_{p_i}((q^o - 1) / (q - 1))
  long s = static_cast<long>(arith::valuation_of_power_minus_one(q, order, p_i));
  s -= static_cast<long>(arith::vp(p_i, q - 1));
  long t = 1;
  for (Integer pt = p_i; pt <= 100; pt *= p_i) ++t;
  return static_cast<unsigned long>(std::max(s + t - 1, 1L));
}

inline Integer fermat_cap(const Integer& q) { return q == 17 ? ipow(10, 11) : ipow(10, 13); }

/// floor((num / den)^(1/r)), or nullopt when num / den < 2 after flooring.
inline std::optional<Integer> root_of_quotient(const Integer& num, const Integer& den, unsigned long r) {
  if (r == 0 || den <= 0) return std::nullopt;
  Integer quotient = num / den;
  if (quotient <= 1) return std::nullopt;
  Integer root = iroot(quotient, r);
  if (root <= 1) return std::nullopt;
  return root;
}

/// Large unknown divisor of sigma(q^n), q in {3, 5, 17}. With `n` unset the
/// exponent is only known to be at least `n_min`.
inline std::optional<Integer> prop10_like(const Integer& q, unsigned long n, const Integer& V, unsigned long k2,
                                          const Integer& P, unsigned long drop) {
  if (q != 3 && q != 5 && q != 17) throw std::domain_error("large-divisor bound requires q in {3, 5, 17}");
  if (k2 <= drop) return std::nullopt;
  const unsigned long r = k2 - drop;
  const Integer den = V * P;
  auto a = root_of_quotient(arith::sigma_pp(q, n), den, r);
  auto b = root_of_quotient(arith::sigma_pp(q, 100), den, r);
  if (!a || !b) return std::nullopt;
  Integer m = std::min({fermat_cap(q), *a, *b});
  if (m <= 1) return std::nullopt;
  return m;
}

inline std::optional<Integer> prop10_bound(const Integer& q, unsigned long n, const Integer& V, unsigned long k2) {
  return prop10_like(q, n, V, k2, Integer(1), 1);
}

inline std::optional<Integer> prop21_bound(const Integer& q, unsigned long n, const Integer& V, unsigned long k2,
                                           const Integer& P) {
  return prop10_like(q, n, V, k2, P, 2);
}

}  // namespace opn::fermat
