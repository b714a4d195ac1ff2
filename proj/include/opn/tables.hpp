// Shipped large-factor tables for Wieferich-type pairs (q, p), and their
// startup verification.
//
// Table text format, one entry per line ('#' starts a comment):
//   order-factor  <q> <p> EXCEPTION
//   order-factor  <q> <p> <prime dividing q^ord_p(q) - 1>
//   sigma-witness <q> <p> <prime> sigma <e> prime divides sigma(q^e), (e+1) | ord_p(q)
//   sigma-witness <q> <p> <prime> power <e> prime divides q^e - 1,    e | ord_p(q)
#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "opn/arith.hpp"
#include "opn/bigint.hpp"
#include "opn/factordb.hpp"

namespace opn::tables {

inline constexpr std::string_view kTablesV1 = R"(# opn-tables v1
order-factor 3 11 EXCEPTION
order-factor 17 3 EXCEPTION
order-factor 3 1006003 154680726732318637
order-factor 5 20771 625552508473588471
order-factor 5 40487 625552508473588471
order-factor 5 53471161 60081451169922001
order-factor 5 1645333507 52082118058261
order-factor 5 6692367337 8930008316757509
order-factor 5 188748146801 40093613041379
order-factor 17 46021 1365581260423071390161
order-factor 17 48947 63895279579889
sigma-witness 7 491531 4446437759531 sigma 64
sigma-witness 7 491531 434502978835771 sigma 64
sigma-witness 13 863 16002623839393 power 862
sigma-witness 13 863 1812568726659643128585613875386642519845658282635510178805927863899925370634458904735015542029199113032107303373782688907294655362725247456916796844099101631036242674614429772930223970689084375595568596245943750948803662227581313359722031269909141243253325478874340618830095795347726278940744819521164568233284713078160850837117388413283662281520695278011384642802742795940815506655515526250544729072488541290974908685133955325208932305401287393617520535254237026865207 power 862
sigma-witness 13 1747591 57745124662681 sigma 38
sigma-witness 13 1747591 71442881968439190301 sigma 64
)";

struct OrderFactorRow {
  unsigned long q = 0;
  Integer p;
  std::optional<Integer> large_factor;  // nullopt for the exception pairs
};

struct SigmaWitness {
  unsigned long q = 0;
  Integer p;
  Integer prime;
  bool sigma_kind = true;  // sigma(q^e) when true, q^e - 1 otherwise
  unsigned long e = 0;
};

struct TableSet {
  std::vector<OrderFactorRow> order_factors;
  std::vector<SigmaWitness> sigma_witnesses;
};

inline TableSet parse_tables(std::string_view text) {
  TableSet t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, q, p, value;
    if (!(ls >> tag >> q >> p >> value)) {
      throw std::runtime_error("tables line " + std::to_string(lineno) + ": too few fields");
    }
    if (tag == "order-factor") {
      OrderFactorRow row{std::stoul(q), to_integer(p), std::nullopt};
      if (value != "EXCEPTION") row.large_factor = to_integer(value);
      t.order_factors.push_back(std::move(row));
    } else if (tag == "sigma-witness") {
      std::string kind, e;
      if (!(ls >> kind >> e) || (kind != "sigma" && kind != "power")) {
        throw std::runtime_error("tables line " + std::to_string(lineno) + ": bad sigma-witness entry");
      }
      t.sigma_witnesses.push_back({std::stoul(q), to_integer(p), to_integer(value), kind == "sigma", std::stoul(e)});
    } else {
      throw std::runtime_error("tables line " + std::to_string(lineno) + ": unknown tag " + tag);
    }
  }
  return t;
}

inline const TableSet& builtin_tables() {
  static const TableSet t = parse_tables(kTablesV1);
  return t;
}

struct CheckResult {
  std::string what;
  bool ok = false;
  std::string detail;
};

inline bool wieferich_pair(unsigned long q, const Integer& p) {
  return powm(Integer(q), Integer(p - 1), Integer(p * p)) == 1;
}

/// Large-factor cap for base q.
inline Integer order_factor_cap(unsigned long q) { return q == 17 ? ipow(10, 11) : ipow(10, 13); }

inline CheckResult verify_order_factor_row(const OrderFactorRow& row) {
  CheckResult r;
  r.what = "order-factor (" + std::to_string(row.q) + ", " + to_string(row.p) + ")";
  if (!wieferich_pair(row.q, row.p)) {
    r.detail = "q^(p-1) != 1 mod p^2";
    return r;
  }
  if (!row.large_factor) {
    r.ok = true;
    r.detail = "exception pair";
    return r;
  }
  const Integer& f = *row.large_factor;
  if (!factordb::prime_p(f)) {
    r.detail = "listed factor is composite";
    return r;
  }
  if (f <= order_factor_cap(row.q)) {
    r.detail = "listed factor below cap";
    return r;
  }
  Integer order = arith::mult_order(Integer(row.q), row.p);
  if (powm(Integer(row.q), order, f) != 1) {
    r.detail = "factor does not divide q^ord_p(q) - 1 (ord = " + to_string(order) + ")";
    return r;
  }
  r.ok = true;
  r.detail = "ord_p(q) = " + to_string(order);
  return r;
}

inline CheckResult verify_sigma_witness(const SigmaWitness& w) {
  CheckResult r;
  r.what = "sigma-witness (" + to_string(w.p) + ", " + std::to_string(w.q) + ") " + to_string(w.prime).substr(0, 24);
  if (!wieferich_pair(w.q, w.p)) {
    r.detail = "q^(p-1) != 1 mod p^2";
    return r;
  }
  if (w.prime <= ipow(10, 11) || !factordb::prime_p(w.prime)) {
    r.detail = "witness is not a prime above 10^11";
    return r;
  }
  const Integer order = arith::mult_order(Integer(w.q), w.p);
  const Integer q = w.q;
  const unsigned long n = w.sigma_kind ? w.e + 1 : w.e;
  if (!mpz_divisible_ui_p(order.get_mpz_t(), n)) {
    r.detail = "exponent does not divide ord_p(q) = " + to_string(order);
    return r;
  }
  // w | (q^n - 1) and gcd(w, q - 1) = 1 give w | sigma(q^(ord - 1)).
  if (powm(q, n, w.prime) != 1 || gcd(w.prime, q - 1) != 1) {
    r.detail = "witness does not divide the stated value";
    return r;
  }
  r.ok = true;
  r.detail = "ord_p(q) = " + to_string(order);
  return r;
}

inline std::vector<CheckResult> verify_tables(const TableSet& t) {
  std::vector<CheckResult> out;
  for (const auto& row : t.order_factors) out.push_back(verify_order_factor_row(row));
  for (const auto& w : t.sigma_witnesses) out.push_back(verify_sigma_witness(w));
  // Each pair needs two distinct witnesses.
  for (const auto& w : t.sigma_witnesses) {
    std::size_t count = 0;
    for (const auto& o : t.sigma_witnesses) count += (o.q == w.q && o.p == w.p) ? 1 : 0;
    if (count < 2) out.push_back({"sigma-witness pair (" + to_string(w.p) + ", " + std::to_string(w.q) + ")", false, "fewer than two witnesses"});
  }
  return out;
}

}  // namespace opn::tables
