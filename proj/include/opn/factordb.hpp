// Effort-bounded factorization: trial division, Pollard-Brent rho, a
// primality policy with an audit trail of probable primes, and a persistent
// line-based factor cache.
#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "opn/bigint.hpp"

namespace opn::factordb {

enum class Primality { Composite, ProbablePrime, ProvenPrime };
enum class Certainty { Proven, Probable };

struct PrimalityPolicy {
  // Miller-Rabin with the first 13 prime bases is deterministic below this
  // bound (Sorenson-Webster).
  Integer deterministic_limit{"3317044064679887385961981"};
  int extra_rounds = 24;
};

inline const PrimalityPolicy& default_policy() {
  static const PrimalityPolicy policy;
  return policy;
}

struct EffortBudget {
  std::uint64_t trial_limit = 100000;
  std::uint64_t rho_iterations = 10000000;
  std::chrono::milliseconds time_cap{60000};
};

struct PrimeFactor {
  Integer prime;
  unsigned long exponent = 0;
  Certainty certainty = Certainty::Proven;

  friend bool operator==(const PrimeFactor&, const PrimeFactor&) = default;
};

struct Factorization {
  std::vector<PrimeFactor> factors;  // ascending by prime
  Integer cofactor{1};               // 1 when complete

  bool complete() const { return cofactor == 1; }

  bool any_probable() const {
    return std::any_of(factors.begin(), factors.end(),
                       [](const PrimeFactor& f) { return f.certainty == Certainty::Probable; });
  }

  Integer product() const {
    Integer r = cofactor;
    for (const auto& f : factors) r *= ipow(f.prime, f.exponent);
    return r;
  }

  friend bool operator==(const Factorization&, const Factorization&) = default;
};

namespace detail {

inline const std::vector<std::uint32_t>& sieve_primes(std::uint64_t limit) {
  static std::mutex mu;
  static std::vector<std::uint32_t> primes;
  static std::uint64_t sieved = 0;
  std::lock_guard lock(mu);
  if (limit > sieved) {
    std::uint64_t n = std::max<std::uint64_t>(limit, 1 << 16);
    std::vector<bool> composite(n + 1, false);
    primes.clear();
    for (std::uint64_t i = 2; i <= n; ++i) {
      if (composite[i]) continue;
      primes.push_back(static_cast<std::uint32_t>(i));
      for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = true;
    }
    sieved = n;
  }
  return primes;
}

inline bool strong_probable_prime(const Integer& n, const Integer& d, unsigned long s,
                                  unsigned long base) {
  Integer a = base;
  if (mpz_divisible_p(a.get_mpz_t(), n.get_mpz_t())) return true;
  Integer x = powm(a, d, n);
  const Integer n1 = n - 1;
  if (x == 1 || x == n1) return true;
  for (unsigned long r = 1; r < s; ++r) {
    x = x * x % n;
    if (x == n1) return true;
    if (x == 1) return false;
  }
  return false;
}

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

inline u64 gcd_u64(u64 a, u64 b) {
  while (b != 0) {
    a %= b;
    std::swap(a, b);
  }
  return a;
}

// Brent's cycle-finding variant of Pollard rho. Returns a nontrivial factor
// or 0 when the iteration budget is exhausted.
inline u64 rho_u64(u64 n, u64 c, std::uint64_t& budget) {
  if (n % 2 == 0) return 2;
  u64 y = 2, x = 2, ys = 2, q = 1, g = 1;
  const u64 m = 128;
  u64 r = 1;
  auto f = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
  while (g == 1) {
    x = y;
    for (u64 i = 0; i < r; ++i) y = f(y);
    u64 k = 0;
    while (k < r && g == 1) {
      ys = y;
      const u64 steps = std::min(m, r - k);
      for (u64 i = 0; i < steps; ++i) {
        y = f(y);
        q = mulmod(q, x > y ? x - y : y - x, n);
      }
      g = gcd_u64(q, n);
      k += steps;
      if (budget <= steps) return 0;
      budget -= steps;
    }
    r *= 2;
  }
  if (g == n) {
    do {
      ys = f(ys);
      g = gcd_u64(x > ys ? x - ys : ys - x, n);
    } while (g == 1);
  }
  return g == n ? 0 : g;
}

inline Integer rho_mpz(const Integer& n, unsigned long c, std::uint64_t& budget,
                       std::chrono::steady_clock::time_point deadline) {
  Integer y = 2, x = 2, ys = 2, q = 1, g = 1, diff;
  const std::uint64_t m = 128;
  std::uint64_t r = 1;
  auto f = [&](Integer& v) {
    v = v * v + c;
    v %= n;
  };
  while (g == 1) {
    x = y;
    for (std::uint64_t i = 0; i < r; ++i) f(y);
    std::uint64_t k = 0;
    while (k < r && g == 1) {
      ys = y;
      const std::uint64_t steps = std::min(m, r - k);
      for (std::uint64_t i = 0; i < steps; ++i) {
        f(y);
        diff = x - y;
        q = q * abs(diff) % n;
      }
      g = gcd(q, n);
      k += steps;
      if (budget <= steps || std::chrono::steady_clock::now() > deadline) return 0;
      budget -= steps;
    }
    r *= 2;
  }
  if (g == n) {
    do {
      f(ys);
      diff = x - ys;
      g = gcd(abs(diff), n);
    } while (g == 1);
  }
  return g == n ? Integer(0) : g;
}

}  // namespace detail

/// Deterministic below policy.deterministic_limit; BPSW plus extra
/// Miller-Rabin rounds (GMP) above it.
inline Primality is_prime(const Integer& n, const PrimalityPolicy& policy = default_policy()) {
  if (n < 2) return Primality::Composite;
  static constexpr unsigned long kBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};
  for (unsigned long p : kBases) {
    if (n == p) return Primality::ProvenPrime;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return Primality::Composite;
  }
  if (n < 41 * 41) return Primality::ProvenPrime;
  if (n < policy.deterministic_limit) {
    Integer d = n - 1;
    unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
    mpz_tdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);
    for (unsigned long base : kBases) {
      if (!detail::strong_probable_prime(n, d, s, base)) return Primality::Composite;
    }
    return Primality::ProvenPrime;
  }
  return mpz_probab_prime_p(n.get_mpz_t(), policy.extra_rounds) == 0 ? Primality::Composite
                                                                     : Primality::ProbablePrime;
}

inline bool prime_p(const Integer& n, const PrimalityPolicy& policy = default_policy()) {
  return is_prime(n, policy) != Primality::Composite;
}

/// Records every number accepted only as a probable prime.
class ProbableLog {
 public:
  void record(const Integer& n) {
    std::lock_guard lock(mu_);
    entries_.insert(n);
  }
  std::vector<Integer> entries() const {
    std::lock_guard lock(mu_);
    return {entries_.begin(), entries_.end()};
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  struct Less {
    bool operator()(const Integer& a, const Integer& b) const { return cmp(a, b) < 0; }
  };
  mutable std::mutex mu_;
  std::set<Integer, Less> entries_;
};

/// Formats a record as `n = p1^e1 * p2^e2 ...`, with a trailing `!` when any
/// prime is only probable.
inline std::string format_record(const Integer& n, const Factorization& f) {
  std::ostringstream os;
  os << to_string(n) << " =";
  if (f.factors.empty()) os << " 1";
  for (std::size_t i = 0; i < f.factors.size(); ++i) {
    os << (i == 0 ? " " : " * ") << to_string(f.factors[i].prime) << '^' << f.factors[i].exponent;
  }
  if (f.any_probable()) os << " !";
  return os.str();
}

/// Parses one cache record. Returns nullopt on any syntax, reconstruction or
/// primality failure.
inline std::optional<std::pair<Integer, Factorization>> parse_record(
    std::string_view line, const PrimalityPolicy& policy = default_policy()) {
  std::istringstream in{std::string(line)};
  std::string lhs, eq, tok;
  if (!(in >> lhs >> eq) || eq != "=") return std::nullopt;
  try {
    Integer n = to_integer(lhs);
    if (n < 1) return std::nullopt;
    Factorization f;
    bool expect_factor = true;
    while (in >> tok) {
      if (tok == "!") continue;
      if (!expect_factor) {
        if (tok != "*") return std::nullopt;
        expect_factor = true;
        continue;
      }
      expect_factor = false;
      if (tok == "1" && f.factors.empty()) continue;
      auto caret = tok.find('^');
      if (caret == std::string::npos) return std::nullopt;
      PrimeFactor pf;
      pf.prime = to_integer(std::string_view(tok).substr(0, caret));
      pf.exponent = std::stoul(tok.substr(caret + 1));
      if (pf.exponent == 0) return std::nullopt;
      auto verdict = is_prime(pf.prime, policy);
      if (verdict == Primality::Composite) return std::nullopt;
      pf.certainty = verdict == Primality::ProvenPrime ? Certainty::Proven : Certainty::Probable;
      f.factors.push_back(std::move(pf));
    }
    std::sort(f.factors.begin(), f.factors.end(),
              [](const PrimeFactor& a, const PrimeFactor& b) { return a.prime < b.prime; });
    if (f.product() != n) return std::nullopt;
    return std::make_pair(std::move(n), std::move(f));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Append-only memo of complete factorizations. Safe for concurrent readers;
/// writers are serialized and duplicate puts are ignored.
class FactorCache {
 public:
  FactorCache() = default;

  explicit FactorCache(std::optional<std::filesystem::path> file, PrimalityPolicy policy = {})
      : file_(std::move(file)), policy_(std::move(policy)) {
    if (file_) load();
  }

  std::optional<Factorization> get(const Integer& n) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(to_string(n));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const Integer& n, const Factorization& f) {
    if (!f.complete()) return;
    std::unique_lock lock(mu_);
    auto [it, inserted] = entries_.emplace(to_string(n), f);
    if (!inserted || !file_) return;
    std::ofstream out(*file_, std::ios::app);
    out << format_record(n, f) << '\n';
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::optional<std::filesystem::path>& file() const { return file_; }

  /// Snapshot of all records, sorted by n.
  std::vector<std::pair<Integer, Factorization>> records() const {
    std::shared_lock lock(mu_);
    std::vector<std::pair<Integer, Factorization>> out;
    for (const auto& [key, f] : entries_) out.emplace_back(Integer(key), f);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

 private:
  void load() {
    std::ifstream in(*file_);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto rec = parse_record(line, policy_);
      if (!rec) {
        warnings_.push_back(file_->string() + ":" + std::to_string(lineno) +
                            ": skipping corrupt cache line");
        std::cerr << "warning: " << warnings_.back() << '\n';
        continue;
      }
      entries_.emplace(to_string(rec->first), std::move(rec->second));
    }
  }

  std::optional<std::filesystem::path> file_;
  PrimalityPolicy policy_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Factorization> entries_;
  std::vector<std::string> warnings_;
};

/// Uncached factorization within `budget`. Incomplete results carry the
/// unresolved part in `cofactor`.
inline Factorization factor(const Integer& n_in, const EffortBudget& budget = {},
                            const PrimalityPolicy& policy = default_policy(), ProbableLog* probable = nullptr) {
  if (n_in < 1) throw std::domain_error("factor() requires n >= 1");
  const auto deadline = std::chrono::steady_clock::now() + budget.time_cap;
  std::map<Integer, unsigned long, bool (*)(const Integer&, const Integer&)> found(
      [](const Integer& a, const Integer& b) { return cmp(a, b) < 0; });
  std::map<Integer, Certainty, bool (*)(const Integer&, const Integer&)> cert(
      [](const Integer& a, const Integer& b) { return cmp(a, b) < 0; });
  Integer n = n_in;
  Factorization result;

  const auto& primes = detail::sieve_primes(budget.trial_limit);
  for (std::uint32_t p : primes) {
    if (p > budget.trial_limit) break;
    if (mpz_cmp_ui(n.get_mpz_t(), static_cast<unsigned long>(p) * p) < 0) break;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      Integer pp = p;
      found[pp] += remove_factor(n, pp);
      cert[pp] = Certainty::Proven;
    }
  }

  std::vector<Integer> work;
  if (n > 1) work.push_back(n);
  while (!work.empty()) {
    Integer m = std::move(work.back());
    work.pop_back();
    if (m == 1) continue;
    auto verdict = is_prime(m, policy);
    if (verdict != Primality::Composite) {
      found[m] += 1;
      cert[m] = verdict == Primality::ProvenPrime ? Certainty::Proven : Certainty::Probable;
      if (verdict == Primality::ProbablePrime && probable) probable->record(m);
      continue;
    }
    Integer root;
    if (mpz_perfect_power_p(m.get_mpz_t())) {
      for (unsigned long k = mpz_sizeinbase(m.get_mpz_t(), 2); k >= 2; --k) {
        if (mpz_root(root.get_mpz_t(), m.get_mpz_t(), k) != 0) {
          for (unsigned long i = 0; i < k; ++i) work.push_back(root);
          break;
        }
      }
      continue;
    }
    std::uint64_t iterations = budget.rho_iterations;
    Integer d = 0;
    for (unsigned long c = 1; c < 64 && d == 0 && iterations > 0; ++c) {
      if (fits_u64(m)) {
        d = from_u64(detail::rho_u64(to_u64(m), c, iterations));
      } else {
        d = detail::rho_mpz(m, c, iterations, deadline);
      }
      if (std::chrono::steady_clock::now() > deadline) break;
    }
    if (d == 0) {
      result.cofactor *= m;
      continue;
    }
    work.push_back(d);
    work.push_back(m / d);
  }
  for (auto& [p, e] : found) result.factors.push_back({p, e, cert[p]});
  return result;
}

/// Factorization service: policy, budget, memo cache and probable-prime log.
class FactorDb {
 public:
  explicit FactorDb(EffortBudget budget = {}, PrimalityPolicy policy = {},
                    std::optional<std::filesystem::path> cache_file = std::nullopt)
      : budget_(budget),
        policy_(policy),
        cache_(std::move(cache_file), policy) {}

  Factorization factor(const Integer& n) {
    if (auto hit = cache_.get(n)) {
      for (const auto& f : hit->factors) {
        if (f.certainty == Certainty::Probable) probable_.record(f.prime);
      }
      return *hit;
    }
    Factorization f = factordb::factor(n, budget_, policy_, &probable_);
    cache_.put(n, f);
    return f;
  }

  Primality is_prime(const Integer& n) {
    auto verdict = factordb::is_prime(n, policy_);
    if (verdict == Primality::ProbablePrime) probable_.record(n);
    return verdict;
  }

  const EffortBudget& budget() const { return budget_; }
  const PrimalityPolicy& policy() const { return policy_; }
  FactorCache& cache() { return cache_; }
  const ProbableLog& probable() const { return probable_; }

 private:
  EffortBudget budget_;
  PrimalityPolicy policy_;
  FactorCache cache_;
  ProbableLog probable_;
};

}  // namespace opn::factordb
