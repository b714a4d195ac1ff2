// Arbitrary small primes q: lifting solutions of x^(q-1) = 1 (mod q^r), the
// certified congruence-search floors, and the forcing / large-divisor bounds
// that use them.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "opn/arith.hpp"
#include "opn/bigint.hpp"
#include "opn/factordb.hpp"
#include "opn/fermat.hpp"
#include "opn/tables.hpp"

namespace opn::nonfermat {

/// The exceptional prime p with p^6 = 1 (mod 7^43).
inline const Integer& exceptional_prime() {
  static const Integer p{"40663372766570611389846294355914421"};
  return p;
}
inline constexpr unsigned long kExceptionalQ = 7;
inline constexpr unsigned long kExceptionalLevel = 43;

/// Smallest positive primitive root modulo the odd prime q.
inline unsigned long primitive_root(unsigned long q) {
  if (q == 2) return 1;
  auto f = arith::complete_factorization(Integer(q - 1));
  for (unsigned long g = 2; g < q; ++g) {
    bool ok = true;
    for (const auto& pf : f.factors) {
      if (powm(Integer(g), Integer((q - 1) / to_u64(pf.prime)), Integer(q)) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
  throw std::domain_error("no primitive root");
}

/// All q - 1 solutions of x^(q-1) = 1 (mod q^r), ascending.
inline std::vector<Integer> lift_solutions(unsigned long q, unsigned long r) {
  if (q < 3 || r < 1) throw std::domain_error("lift_solutions requires an odd prime q and r >= 1");
  const Integer modulus = ipow(Integer(q), r);
  const Integer a = powm(Integer(primitive_root(q)), ipow(Integer(q), r - 1), modulus);
  std::vector<Integer> out;
  out.reserve(q - 1);
  Integer x = 1;
  for (unsigned long m = 0; m + 1 < q; ++m) {
    out.push_back(x);
    x = x * a % modulus;
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct CongruenceSearchConfig {
  Integer threshold{"1000000000000"};
  Integer q_max{1000};
};

struct Hit {
  Integer value;
  unsigned long level = 0;  // v_q(x^(q-1) - 1)
};

/// One certification pass for a single q.
struct Certification {
  unsigned long q = 0;
  Integer threshold;
  unsigned long m = 0;            // minimal with q^(m-2) > threshold
  std::vector<Hit> primes;        // prime solutions below min(q^(n-2), threshold)
  std::vector<Hit> divisible;     // (q-1)-divisible solutions below the shifted bound
  bool has_divisible = false;     // q >= 7
};

inline unsigned long divisible_shift(unsigned long q) { return q == 7 ? 3 : 2; }

/// min(q^(n-shift), threshold), or 1 when n <= shift.
inline Integer shifted_floor(unsigned long q, unsigned long n, unsigned long shift, const Integer& threshold) {
  if (n <= shift) return 1;
  Integer v = ipow(Integer(q), n - shift);
  return v < threshold ? v : threshold;
}

inline Certification congruence_search_recompute(unsigned long q, const CongruenceSearchConfig& cfg) {
  if (q < 3 || !factordb::prime_p(Integer(q))) throw std::domain_error("recompute requires an odd prime q");
  if (Integer(q) >= cfg.q_max) throw std::domain_error("recompute requires q < q_max");
  Certification c;
  c.q = q;
  c.threshold = cfg.threshold;
  c.has_divisible = q >= 7;
  c.m = 3;
  while (ipow(Integer(q), c.m - 2) <= cfg.threshold) ++c.m;
  unsigned long m15 = c.has_divisible ? c.m + (divisible_shift(q) - 2) : 0;
  std::map<Integer, unsigned long> prime_hits, div_hits;
  const unsigned long top = std::max(c.m, m15);
  for (unsigned long n = 1; n <= top; ++n) {
    const Integer b12 = shifted_floor(q, n, 2, cfg.threshold);
    const Integer b15 = c.has_divisible ? shifted_floor(q, n, divisible_shift(q), cfg.threshold) : Integer(1);
    if (b12 <= 2 && b15 <= 2) continue;
    for (const auto& x : lift_solutions(q, n)) {
      if (x <= 1) continue;
      if (n <= c.m && x < b12 && mod_ui(x, 2) == 1 && factordb::prime_p(x)) prime_hits[x] = n;
      if (c.has_divisible && n <= m15 && x < b15 && x % (q - 1) == 0) div_hits[x] = n;
    }
  }
  // Record the exact level v_q(x^(q-1) - 1), which may exceed m.
  for (auto& [x, n] : prime_hits) c.primes.push_back({x, arith::valuation_of_power_minus_one(x, Integer(q - 1), Integer(q))});
  for (auto& [x, n] : div_hits) c.divisible.push_back({x, arith::valuation_of_power_minus_one(x, Integer(q - 1), Integer(q))});
  return c;
}

inline std::string format_certification(const Certification& c) {
  std::ostringstream os;
  os << "q " << c.q << " threshold " << to_string(c.threshold) << " m " << c.m << '\n';
  for (const auto& h : c.primes) os << "prime " << to_string(h.value) << ' ' << h.level << '\n';
  for (const auto& h : c.divisible) os << "divisible " << to_string(h.value) << ' ' << h.level << '\n';
  return os.str();
}

inline Certification parse_certification(const std::string& text) {
  std::istringstream in(text);
  std::string tag, thr_tag, m_tag, thr;
  Certification c;
  if (!(in >> tag >> c.q >> thr_tag >> thr >> m_tag >> c.m) || tag != "q" || thr_tag != "threshold" ||
      m_tag != "m") {
    throw std::runtime_error("bad certification header");
  }
  c.threshold = to_integer(thr);
  c.has_divisible = c.q >= 7;
  std::string value;
  unsigned long level = 0;
  while (in >> tag >> value >> level) {
    if (tag == "prime") {
      c.primes.push_back({to_integer(value), level});
    } else if (tag == "divisible") {
      c.divisible.push_back({to_integer(value), level});
    } else {
      throw std::runtime_error("bad certification line: " + tag);
    }
  }
  return c;
}

inline std::filesystem::path certification_path(const std::filesystem::path& dir, unsigned long q,
                                                 const Integer& threshold) {
  return dir / ("cert-q" + std::to_string(q) + "-t" + to_string(threshold) + ".txt");
}

/// Certifications per (q, threshold); computed on first use unless only
/// loaded ones are allowed.
class CertificationStore {
 public:
  explicit CertificationStore(CongruenceSearchConfig cfg = {}, bool compute_missing = true)
      : cfg_(std::move(cfg)), compute_missing_(compute_missing) {}

  const CongruenceSearchConfig& config() const { return cfg_; }

  void insert(Certification c) {
    auto key = std::make_pair(c.q, to_string(c.threshold));
    std::lock_guard lock(mu_);
    certs_[key] = std::make_shared<const Certification>(std::move(c));
  }

  std::shared_ptr<const Certification> find(unsigned long q) const {
    std::lock_guard lock(mu_);
    auto it = certs_.find({q, to_string(cfg_.threshold)});
    return it == certs_.end() ? nullptr : it->second;
  }

  std::shared_ptr<const Certification> get(unsigned long q) {
    if (auto c = find(q)) return c;
    if (!compute_missing_) {
      throw std::runtime_error("no certification for q = " + std::to_string(q) + " at threshold " +
                               to_string(cfg_.threshold));
    }
    insert(congruence_search_recompute(q, cfg_));
    return find(q);
  }

  /// Loads every certification file in dir matching the configured threshold.
  std::size_t load_dir(const std::filesystem::path& dir) {
    std::size_t n = 0;
    if (!std::filesystem::is_directory(dir)) return 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".txt" || entry.path().filename().string().rfind("cert-q", 0) != 0) continue;
      std::ifstream in(entry.path());
      std::stringstream ss;
      ss << in.rdbuf();
      Certification c = parse_certification(ss.str());
      if (c.threshold != cfg_.threshold) continue;
      insert(std::move(c));
      ++n;
    }
    return n;
  }

  static void save(const std::filesystem::path& dir, const Certification& c) {
    std::filesystem::create_directories(dir);
    auto path = certification_path(dir, c.q, c.threshold);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << format_certification(c);
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  CongruenceSearchConfig cfg_;
  bool compute_missing_;
  mutable std::mutex mu_;
  std::map<std::pair<unsigned long, std::string>, std::shared_ptr<const Certification>> certs_;
};

struct PrimeFloor {
  Integer floor;
  std::optional<std::pair<Integer, unsigned long>> exception;  // (p, q)
};

/// Certified floor on odd primes p with p^(q-1) = 1 (mod q^n).
inline PrimeFloor lemma12_floor(unsigned long q, unsigned long n, CertificationStore& store) {
  auto cert = store.get(q);
  PrimeFloor r;
  r.floor = shifted_floor(q, n, 2, cert->threshold);
  for (const auto& h : cert->primes) {
    if (h.level >= n && h.value < r.floor) {
      r.floor = h.value;
      r.exception = std::make_pair(h.value, q);
    }
  }
  if (q == kExceptionalQ && n <= kExceptionalLevel && r.floor > exceptional_prime()) {
    r.floor = exceptional_prime();
    r.exception = std::make_pair(exceptional_prime(), q);
  }
  return r;
}

/// Certified floor on integers a with (q-1) | a and a^(q-1) = 1 (mod q^n).
inline Integer lemma15_floor(unsigned long q, unsigned long n, CertificationStore& store) {
  if (q < 7) throw std::domain_error("lemma15_floor requires q >= 7");
  auto cert = store.get(q);
  Integer floor = shifted_floor(q, n, divisible_shift(q), cert->threshold);
  for (const auto& h : cert->divisible) {
    if (h.level >= n && h.value < floor) floor = h.value;
  }
  return floor;
}

enum class WitnessKind { Pair, Clear };

struct WitnessEntry {
  WitnessKind kind = WitnessKind::Clear;
  std::vector<Integer> witnesses;
};

inline WitnessEntry lemma16_lookup(const Integer& p, unsigned long q,
                                   const tables::TableSet& t = tables::builtin_tables()) {
  if (q != 7 && q != 11 && q != 13) throw std::domain_error("lemma16_lookup requires q in {7, 11, 13}");
  WitnessEntry e;
  for (const auto& w : t.sigma_witnesses) {
    if (w.q == q && w.p == p) e.witnesses.push_back(w.prime);
  }
  if (!e.witnesses.empty()) {
    e.kind = WitnessKind::Pair;
    return e;
  }
  if (p > 100 && p < ipow(10, 11) && tables::wieferich_pair(q, p)) {
    throw std::logic_error("Wieferich pair missing from table: (" + to_string(p) + ", " + std::to_string(q) + ")");
  }
  return e;
}

struct TMember {
  Integer p;
  Integer order;                  // o_q(p)
  arith::Valuation v = 0;         // v_q(p^o - 1)
  unsigned long sigma0_order = 0; // number of divisors of o
  bool admissible = false;        // o'_q(p) != 0
};

inline TMember make_t_member(const Integer& q, const Integer& p, bool p_may_be_special) {
  TMember t;
  t.p = p;
  t.order = arith::mult_order(p, q);
  t.v = arith::valuation_of_power_minus_one(p, t.order, q);
  t.sigma0_order = to_u64(arith::sigma0(t.order));
  t.admissible = fermat::order_admissible(t.order, p_may_be_special);
  return t;
}

struct NonFermatContext {
  Integer q;
  unsigned long n = 0;
  unsigned long b = 0;
  long k1p = 0;
  long l1p = 0;
  long k2 = 0;
  std::vector<TMember> T;
};

struct NonFermatReport {
  bool active = false;  // tau > 0
  long tau = 0;
  long tau_prime = 0;
  long m_star = 0;      // the m achieving tau'
  Integer floor_on_unknown{1};
  std::optional<std::pair<Integer, unsigned long>> exception;
};

inline long ceil_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return q;
}

/// The bracketed count of unaccounted copies of q with m unknown primes
/// not = 1 (mod q). m = 0 gives the tau expression.
inline long prop14_remainder(const NonFermatContext& c, long m) {
  long x = static_cast<long>(c.n) - static_cast<long>(c.b);
  const long avail = c.k1p + c.k2 - m;
  for (const auto& t : c.T) {
    if (!t.admissible) continue;
    long share = avail > 0 ? avail / static_cast<long>(t.sigma0_order) : 0;
    x -= static_cast<long>(t.v) + share;
  }
  x -= (c.k1p - c.l1p + c.k2 - m) * (c.k1p + c.k2 - m - 1);
  if (m > 0) x -= m * (avail > 0 ? avail / 2 : 0);
  return x;
}

inline NonFermatReport prop14_analysis(const NonFermatContext& c, CertificationStore& store) {
  NonFermatReport r;
  r.tau = prop14_remainder(c, 0);
  if (r.tau <= 0) return r;
  r.active = true;
  if (c.k2 < 1) return r;
  std::optional<long> best;
  for (long m = 1; m <= c.k2; ++m) {
    long v = ceil_div(prop14_remainder(c, m), m);
    if (!best || v < *best) {
      best = v;
      r.m_star = m;
    }
  }
  r.tau_prime = *best;
  if (r.tau_prime >= 3) {
    auto f = lemma12_floor(to_u64(c.q), static_cast<unsigned long>(r.tau_prime), store);
    r.floor_on_unknown = f.floor;
    r.exception = f.exception;
  }
  return r;
}

/// Bound on a second large unknown divisor of sigma(q^n).
/// `P`, when given with k2 > 2, divides out the smallest unknown prime and
/// lowers the root by one.
inline std::optional<Integer> prop17_bound(unsigned long q, long tau_prime, const Integer& V, unsigned long k2,
                                           CertificationStore& store, std::optional<Integer> P = std::nullopt) {
  if (q != 7 && q != 11 && q != 13) throw std::domain_error("prop17_bound requires q in {7, 11, 13}");
  unsigned long drop = 1;
  Integer den = Integer(q - 1) * V;
  if (P && k2 > 2) {
    drop = 2;
    den *= *P;
  }
  if (k2 <= drop || tau_prime < 1) return std::nullopt;
  const unsigned long r = k2 - drop;
  const Integer floor15 = lemma15_floor(q, static_cast<unsigned long>(std::min(tau_prime, 100L)), store);
  auto a = fermat::root_of_quotient(store.config().threshold, den, r);
  auto b = fermat::root_of_quotient(floor15, den, r);
  if (!a || !b) return std::nullopt;
  Integer m = std::min({ipow(10, 11), *a, *b});
  if (m <= 1) return std::nullopt;
  return m;
}

}  // namespace opn::nonfermat
