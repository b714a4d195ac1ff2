// Node evaluation for the factor chain tree: contradiction detection,
// branching on off primes, interval stepping, and log line rendering.
#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "opn/arith.hpp"
#include "opn/bigint.hpp"
#include "opn/bounds.hpp"
#include "opn/config.hpp"
#include "opn/factordb.hpp"
#include "opn/fermat.hpp"
#include "opn/nonfermat.hpp"
#include "opn/state.hpp"

namespace opn::chain {

enum class Code { Open, MT, MS, S, A, D, F, N, SF1, SF2, SNF1, SNF2, P1Int, P2Int, P3Int, PERFECT, ROADBLOCK };

inline constexpr std::array<std::string_view, 17> kCodeNames = {
    "OPEN", "MT", "MS", "S", "A", "D", "F", "N", "SF1", "SF2", "SNF1", "SNF2", "P1Int", "P2Int", "P3Int", "PERFECT",
    "ROADBLOCK"};

inline std::string_view code_name(Code c) { return kCodeNames[static_cast<std::size_t>(c)]; }

inline std::optional<Code> parse_code(std::string_view s) {
  for (std::size_t i = 1; i < kCodeNames.size(); ++i) {
    if (kCodeNames[i] == s) return static_cast<Code>(i);
  }
  return std::nullopt;
}

inline Code pint_code(unsigned j) { return j == 1 ? Code::P1Int : j == 2 ? Code::P2Int : Code::P3Int; }

inline constexpr unsigned kIndent = 3;

/// A tree node: the state after the step named by `head`.
struct Node {
  SearchState state;
  std::string head;         // "p^a => f^e ..." or "p^oo"; empty for the root
  bool factor_failed = false;
};

struct Interval {
  Rational lower;                 // p >= lower
  std::optional<Rational> upper;  // p <= upper
  unsigned index = 0;             // k1 + 1
};

inline std::string render_interval(const Interval& iv) {
  std::ostringstream os;
  os << " : " << to_string(floor_of(iv.lower)) << " < p_" << iv.index << " < "
     << (iv.upper ? to_string(ceil_of(*iv.upper)) : std::string("oo"));
  return os.str();
}

/// "Some unknown prime is >= value" (single) or "two distinct unknown primes
/// are >= value" (pair, value is the smaller floor).
struct DerivedFloor {
  Integer value;
  Integer largest;  // the larger member of a pair; equals value for singles
  Code code = Code::Open;
  std::string why;
};

struct Analysis {
  bool F = false;
  std::string F_detail;
  std::optional<std::string> no_unknown_contradiction;  // k2 = 0 but an unknown prime is forced
  Code no_unknown_code = Code::Open;
  std::vector<DerivedFloor> singles;
  std::vector<DerivedFloor> pairs;
  bool pi_forced_unknown = false;
};

struct Evaluation {
  Code code = Code::Open;
  std::string detail;
  std::optional<Interval> interval;
  std::vector<Integer> candidates;
  bounds::LargePrimeFloors floors;  // P_i used for the upper bound
};

class Engine {
 public:
  Engine(std::shared_ptr<const RunConfig> config, factordb::FactorDb& db, nonfermat::CertificationStore& certs)
      : config_(std::move(config)), db_(db), certs_(certs) {}

  const RunConfig& config() const { return *config_; }
  std::shared_ptr<const RunConfig> config_ptr() const { return config_; }
  factordb::FactorDb& db() const { return db_; }
  nonfermat::CertificationStore& certs() const { return certs_; }

  Node root() const { return Node{root_state(config_), "", false}; }

  bool floors_enabled() const { return !config_->bootstrap && config_->max_u > 0; }

  // ---- contradiction detection ---------------------------------------

  Evaluation evaluate(const Node& node) const {
    Evaluation ev;
    const SearchState& s = node.state;
    auto close = [&](Code c, std::string detail) {
      ev.code = c;
      ev.detail = std::move(detail);
      return ev;
    };
    if (node.factor_failed) return close(Code::ROADBLOCK, "incomplete factorization");

    if (auto w = perfect_witness(s)) return close(Code::PERFECT, "sigma(M) = 2M for M = " + to_string(*w));
    if (s.k1() > s.k) return close(Code::MT, std::to_string(s.k1()) + " known primes > k");
    for (const auto& c : s.components) {
      if (c.status == Status::OnKnown && s.forced_of(c.prime) > c.exponent) {
        return close(Code::MS, to_string(c.prime) + " forced " + std::to_string(s.forced_of(c.prime)) + " > " +
                                   std::to_string(c.exponent));
      }
    }
    const Rational pi = bounds::pi_product(s);
    if (pi > 2) return close(Code::A, "Pi > 2");
    if (s.k1() == s.k && bounds::delta_u(s, 0, {}) < 2) return close(Code::D, "k known primes, Delta_0 < 2");

    const bool need_pre = s.special == Special::Claimed || (!s.has_off() && s.k2() == 0);
    const Analysis pre = need_pre ? analyze(s, std::nullopt, std::nullopt) : Analysis{};
    if (pre.F) return close(Code::F, pre.F_detail);

    for (const auto& c : s.components) {
      if (c.status == Status::Off && c.prime < s.interval_floor) {
        return close(Code::S, "off prime " + to_string(c.prime) + " < " + to_string(s.interval_floor));
      }
    }
    if (s.has_off()) return ev;

    if (s.k2() == 0) {
      if (pre.no_unknown_contradiction) return close(pre.no_unknown_code, *pre.no_unknown_contradiction);
      if (floors_enabled()) {
        auto ia = bounds::placed_floors(s, config_->floors);
        if (ia.overflow) return close(pint_code(*ia.overflow), "too few primes above the threshold");
      }
      return close(Code::ROADBLOCK, "k primes known, Pi < 2 <= Delta_0");
    }
    return interval_stage(s, ev);
  }

  /// An exactly perfect odd number on this branch, if any.
  std::optional<Integer> perfect_witness(const SearchState& s) const {
    if (s.components.empty()) return std::nullopt;
    bool all_known = std::all_of(s.components.begin(), s.components.end(),
                                 [](const Component& c) { return c.status == Status::OnKnown; });
    if (all_known && perfect_check(s)) return known_product(s);
    if (bounds::pi_product(s) == 2) {
      Integer m = 1;
      for (const auto& c : s.components) m *= ipow(c.prime, s.min_exponent(c));
      return m;
    }
    return std::nullopt;
  }

  static Integer known_product(const SearchState& s) {
    Integer m = 1;
    for (const auto& c : s.components) m *= ipow(c.prime, c.exponent);
    return m;
  }

  /// sigma(M) = 2M for M the product of the (all known) components.
  static bool perfect_check(const SearchState& s) {
    Integer m = 1, sig = 1;
    for (const auto& c : s.components) {
      if (c.status != Status::OnKnown) throw std::logic_error("perfect_check needs known components");
      m *= ipow(c.prime, c.exponent);
      sig *= arith::sigma_pp(c.prime, c.exponent);
    }
    return sig == 2 * m;
  }

  // ---- forcing and large-divisor consequences ----------------------

  /// `lo`: a lower bound on the smallest unknown prime; `P`: p_{k1+1} < P.
  Analysis analyze(const SearchState& s, std::optional<Integer> lo, std::optional<Integer> P) const {
    Analysis a;
    const long k2 = s.k2();
    const bool above_100 = lo && *lo > 100;
    for (const auto& qc : s.components) {
      if (qc.status == Status::Off) continue;
      const Integer& q = qc.prime;
      if (q >= config_->q_max) continue;
      const unsigned long n = s.min_exponent(qc);
      unsigned long b = 0;
      long k1p = 0, l1p = 0;
      std::vector<Integer> unknown_comp;
      std::vector<nonfermat::TMember> T;
      for (const auto& c : s.components) {
        const bool one_mod_q = (c.prime - 1) % q == 0;
        if (one_mod_q) ++k1p;
        if (c.prime == q) continue;
        if (c.status == Status::OnKnown) {
          if (one_mod_q) ++l1p;
          b += arith::sigma_valuation(q, c.prime, c.exponent);
        } else {
          if (config_->b_includes_forced) b += arith::sigma_valuation(q, c.prime, s.min_exponent(c));
          unknown_comp.push_back(c.prime);
          if (!one_mod_q) T.push_back(nonfermat::make_t_member(q, c.prime, s.may_be_special(c.prime)));
        }
      }
      // The one_mod_q count above included q itself only if q = 1 (mod q): never.
      std::optional<long> tau_prime7;
      if (fermat::is_fermat_prime(q)) {
        fermat::FermatContext ctx{q, n, b, k1p, l1p, k2};
        auto r = fermat::prop7_analysis(ctx, unknown_comp, s.special == Special::Claimed);
        if (r.flags_F && !a.F) {
          a.F = true;
          a.F_detail = "q = " + to_string(q) + ", tau = " + std::to_string(r.tau) + ", special prime " +
                       to_string(s.special_prime) + " is a known component";
        }
        if (r.pi_forced_unknown) {
          a.pi_forced_unknown = true;
          if (k2 == 0 && !a.no_unknown_contradiction) {
            a.no_unknown_contradiction = "q = " + to_string(q) + " forces the special prime among unknown primes";
            a.no_unknown_code = Code::SF1;
          }
          if (r.tau_prime >= 1) {
            tau_prime7 = r.tau_prime;
            Integer f = ipow(q, static_cast<unsigned long>(r.tau_prime)) - 1;
            a.singles.push_back({f, f, Code::SF1, "q = " + to_string(q) + ": pi + 1 divisible by q^" +
                                                      std::to_string(r.tau_prime)});
          }
        }
      }
      if (tau_prime7 && (q == 3 || q == 5 || q == 17) && k2 > 1 && above_100 &&
          fermat::lemma8_excludes_pi(n, static_cast<unsigned long>(*tau_prime7))) {
        const Integer V = v_product(s, q);
        const Integer pi_floor = ipow(q, static_cast<unsigned long>(*tau_prime7)) - 1;
        if (auto M = fermat::prop10_bound(q, n, V, static_cast<unsigned long>(k2))) {
          a.pairs.push_back(pair_floor(pi_floor, *M, Code::SF2, "q = " + to_string(q) + ": large divisor of sigma(q^n)"));
        }
        if (P && k2 > 2) {
          if (auto M = fermat::prop21_bound(q, n, V, static_cast<unsigned long>(k2), *P)) {
            a.pairs.push_back(pair_floor(pi_floor, *M, Code::SF2, "q = " + to_string(q) + ": improved divisor bound"));
          }
        }
      }
      // Arbitrary q < q_max.
      nonfermat::NonFermatContext nctx{q, n, b, k1p, l1p, k2, T};
      auto r14 = nonfermat::prop14_analysis(nctx, certs_);
      if (r14.active) {
        if (k2 == 0 && !a.no_unknown_contradiction) {
          a.no_unknown_contradiction = "q = " + to_string(q) + " forces an unknown prime not = 1 (mod q)";
          a.no_unknown_code = Code::SNF1;
        }
        if (r14.floor_on_unknown > 1) {
          a.singles.push_back({r14.floor_on_unknown, r14.floor_on_unknown, Code::SNF1,
                               "q = " + to_string(q) + ": tau' = " + std::to_string(r14.tau_prime)});
        }
        if ((q == 7 || q == 11 || q == 13) && k2 > 1 && above_100 && r14.tau_prime >= 1) {
          const Integer V = v_product(s, q);
          const unsigned long qq = to_u64(q);
          if (auto M = nonfermat::prop17_bound(qq, r14.tau_prime, V, static_cast<unsigned long>(k2), certs_)) {
            a.pairs.push_back(pair_floor(r14.floor_on_unknown, *M, Code::SNF2,
                                         "q = " + to_string(q) + ": second large divisor of sigma(q^n)"));
          }
          if (P && k2 > 2) {
            if (auto M = nonfermat::prop17_bound(qq, r14.tau_prime, V, static_cast<unsigned long>(k2), certs_, *P)) {
              a.pairs.push_back(pair_floor(r14.floor_on_unknown, *M, Code::SNF2,
                                           "q = " + to_string(q) + ": improved second divisor bound"));
            }
          }
        }
      }
    }
    return a;
  }

  static DerivedFloor pair_floor(const Integer& f1, const Integer& f2, Code code, std::string why) {
    return {std::min(f1, f2), std::max(f1, f2), code, std::move(why)};
  }

  /// V = prod p_i^eps_i over known primes other than q.
  Integer v_product(const SearchState& s, const Integer& q) const {
    Integer V = 1;
    const bool q_special = s.may_be_special(q);
    for (const auto& c : s.components) {
      if (c.prime == q) continue;
      V *= ipow(c.prime, fermat::epsilon_exponent(c.prime, q, q_special));
    }
    return V;
  }

  // ---- interval stage -------------------------------------------------

  /// Smallest prime >= from that may still be an unknown prime of N.
  Integer next_candidate(const SearchState& s, Integer from) const {
    if (from < 3) from = 3;
    Integer p = from - 1;
    for (;;) {
      mpz_nextprime(p.get_mpz_t(), p.get_mpz_t());
      if (db_.is_prime(p) == factordb::Primality::Composite) continue;
      if (s.is_known(p)) continue;
      if (p == 3 && config_->no_three) continue;
      return p;
    }
  }

  bool has_candidate(const SearchState& s, const Integer& from, const Rational& upper) const {
    return Rational(next_candidate(s, from)) <= upper;
  }

  bounds::LargePrimeFloors merge_floors(const SearchState& s, const Analysis& a) const {
    bounds::LargePrimeFloors out;
    if (config_->max_u == 0) return out;
    if (!config_->bootstrap) {
      for (const auto& f : bounds::placed_floors(s, config_->floors).floors) out.P.push_back(f.value);
    }
    Integer d1 = 0, d2 = 0;
    for (const auto& f : a.singles) d1 = std::max(d1, Integer(f.value - 1));
    for (const auto& f : a.pairs) {
      d1 = std::max(d1, Integer(f.largest - 1));
      d2 = std::max(d2, Integer(f.value - 1));
    }
    if (d1 > 1) {
      if (out.P.empty()) out.P.push_back(d1);
      else out.P[0] = std::max(out.P[0], d1);
    }
    if (d2 > 1 && !out.P.empty()) {
      if (out.P.size() < 2) out.P.push_back(d2);
      else out.P[1] = std::max(out.P[1], d2);
      out.P[1] = std::min(out.P[1], out.P[0]);
    }
    // Keep only strictly usable floors: P_i > 1.
    while (!out.P.empty() && out.P.back() <= 1) out.P.pop_back();
    return out;
  }

  Evaluation& interval_stage(const SearchState& s, Evaluation& ev) const {
    auto lb = bounds::lower_bound_smallest_unknown(s);
    Interval iv;
    iv.index = s.k1() + 1;
    iv.lower = lb.value;
    Integer lo = std::max(ceil_of(iv.lower), Integer(s.interval_floor + 1));

    Analysis a = analyze(s, lo, std::nullopt);
    ev.floors = merge_floors(s, a);
    auto ub = bounds::upper_bound_smallest_unknown(s, ev.floors, config_->max_u);
    if (ub) {
      // One refinement with p_{k1+1} < floor(U) + 1.
      Analysis a2 = analyze(s, lo, floor_of(ub->value) + 1);
      if (a2.pairs.size() > a.pairs.size() || a2.singles.size() > a.singles.size()) {
        auto f2 = merge_floors(s, a2);
        auto ub2 = bounds::upper_bound_smallest_unknown(s, f2, config_->max_u);
        a = std::move(a2);
        if (ub2 && ub2->value < ub->value) {
          ub = ub2;
          ev.floors = std::move(f2);
        }
      }
      iv.upper = ub->value;
    }
    ev.interval = iv;
    if (!iv.upper) {
      ev.code = Code::ROADBLOCK;
      ev.detail = "no upper bound on p_" + std::to_string(iv.index);
      return ev;
    }
    const Rational& U = *iv.upper;
    auto close = [&](Code c, std::string d) -> Evaluation& {
      ev.code = c;
      ev.detail = std::move(d);
      return ev;
    };
    if (!has_candidate(s, lo, U)) return close(Code::N, "no admissible prime in the interval");

    // Floors that bind the smallest unknown prime.
    struct Bind {
      Integer from;
      Code code;
      std::string why;
    };
    std::vector<Bind> binds;
    const unsigned k2 = s.k2();
    for (Code c : {Code::SF1, Code::SF2, Code::SNF1, Code::SNF2}) {
      if (k2 == 1) {
        for (const auto& f : a.singles) {
          if (f.code == c) binds.push_back({f.value, c, f.why});
        }
      }
      if (k2 == 2) {
        for (const auto& f : a.pairs) {
          if (f.code == c) binds.push_back({f.value, c, f.why});
        }
      }
    }
    if (floors_enabled()) {
      auto ia = bounds::placed_floors(s, config_->floors);
      if (ia.overflow) return close(pint_code(*ia.overflow), "too few unknown primes for the large-prime floors");
      if (ia.floors.size() >= k2) {
        const auto& f = ia.floors[k2 - 1];
        binds.push_back({f.value + 1, pint_code(f.source), "p_" + std::to_string(iv.index) + " > " + to_string(f.value)});
      }
    }
    Integer from = lo;
    for (const auto& bnd : binds) {
      if (!has_candidate(s, std::max(lo, bnd.from), U)) return close(bnd.code, bnd.why);
      from = std::max(from, bnd.from);
    }
    // All floors together.
    Integer p = next_candidate(s, from);
    while (Rational(p) <= U) {
      if (ev.candidates.size() >= config_->max_candidates) {
        ev.candidates.clear();
        return close(Code::ROADBLOCK, "interval holds more than " + std::to_string(config_->max_candidates) +
                                          " candidates");
      }
      ev.candidates.push_back(p);
      p = next_candidate(s, p + 1);
    }
    if (ev.candidates.empty()) {
      // Each floor alone leaves room but the floors together do not.
      return close(binds.empty() ? Code::N : binds.back().code, "combined floors empty the interval");
    }
    return ev;
  }

  // ---- branching ------------------------------------------------------

  Node make_child(const SearchState& parent, const Integer& p, std::optional<unsigned long> a) const {
    Node child{parent, "", false};
    SearchState& s = child.state;
    Component* c = s.find(p);
    if (!c) throw std::logic_error("branching on an unknown prime");
    std::ostringstream head;
    head << to_string(p) << '^';
    if (!a) {
      c->status = Status::OnInf;
      head << "oo";
      child.head = head.str();
      return child;
    }
    c->status = Status::OnKnown;
    c->exponent = *a;
    if (*a % 2 == 1) {
      s.special = Special::Claimed;
      s.special_prime = p;
    }
    head << *a << " =>";
    auto f = db_.factor(arith::sigma_pp(p, *a));
    for (const auto& pf : f.factors) {
      head << ' ' << to_string(pf.prime) << '^' << pf.exponent;
      if (pf.prime == 2) continue;
      s.forced[pf.prime] += pf.exponent;
      if (!s.is_known(pf.prime)) s.add(pf.prime, Status::Off);
    }
    if (!f.complete()) {
      head << " ?" << to_string(f.cofactor);
      child.factor_failed = true;
    }
    child.head = head.str();
    return child;
  }

  /// Children for the smallest off prime: admissible exponents with
  /// p^a <= B(p) ascending, then p^oo.
  std::vector<Node> branch(const SearchState& s) const {
    const Component* off = s.smallest_off();
    if (!off) throw std::logic_error("branch needs an off prime");
    const Integer p = off->prime;
    const Integer& bound = s.bound_for(p);
    std::vector<Node> out;
    Integer pa = p;
    for (unsigned long a = 1; pa <= bound; ++a, pa *= p) {
      if (s.admissible(p, a)) out.push_back(make_child(s, p, a));
    }
    out.push_back(make_child(s, p, std::nullopt));
    return out;
  }

  std::vector<Node> children(const Node& node, const Evaluation& ev) const {
    if (ev.code != Code::Open) return {};
    const SearchState& s = node.state;
    if (s.has_off()) return branch(s);
    std::vector<Node> out;
    for (const auto& c : ev.candidates) {
      SearchState next = s;
      next.add(c, Status::Off).from_interval = true;
      next.interval_floor = c;
      auto kids = branch(next);
      out.insert(out.end(), std::make_move_iterator(kids.begin()), std::make_move_iterator(kids.end()));
    }
    return out;
  }

  static std::string render_line(const Node& node, const Evaluation& ev, unsigned depth) {
    std::string line(depth * kIndent, ' ');
    line += node.head;
    if (ev.interval) line += render_interval(*ev.interval);
    if (ev.code != Code::Open) {
      line += ' ';
      line += code_name(ev.code);
    }
    return line;
  }

 private:
  std::shared_ptr<const RunConfig> config_;
  factordb::FactorDb& db_;
  nonfermat::CertificationStore& certs_;
};

}  // namespace opn::chain
