// One node of the factor chain tree.
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "opn/arith.hpp"
#include "opn/bigint.hpp"
#include "opn/config.hpp"

namespace opn::chain {

enum class Status {
  OnKnown,  // branched, exact exponent fixed
  OnInf,    // branched, exponent beyond the bound
  Off,      // known divisor, not yet branched
};

struct Component {
  Integer prime;
  Status status = Status::Off;
  unsigned long exponent = 0;  // meaningful for OnKnown
  bool from_interval = false;  // entered as an interval candidate

  friend bool operator==(const Component&, const Component&) = default;
};

enum class Special { Open, Claimed };

struct SearchState {
  std::vector<Component> components;  // ascending by prime
  // v_p(sigma(known components)): a floor on v_p(N) since sigma(N) = 2N.
  std::map<Integer, arith::Valuation> forced;
  Special special = Special::Open;
  Integer special_prime{0};
  unsigned k = 0;
  Integer interval_floor{0};  // largest prime taken from an interval
  std::shared_ptr<const RunConfig> config;

  unsigned k1() const { return static_cast<unsigned>(components.size()); }
  unsigned l1() const {
    return static_cast<unsigned>(std::count_if(components.begin(), components.end(),
                                               [](const Component& c) { return c.status == Status::OnKnown; }));
  }
  unsigned k2() const { return k1() >= k ? 0 : k - k1(); }

  const Component* find(const Integer& p) const {
    auto it = std::lower_bound(components.begin(), components.end(), p,
                               [](const Component& c, const Integer& v) { return c.prime < v; });
    return it != components.end() && it->prime == p ? &*it : nullptr;
  }
  Component* find(const Integer& p) {
    return const_cast<Component*>(static_cast<const SearchState&>(*this).find(p));
  }
  bool is_known(const Integer& p) const { return find(p) != nullptr; }

  Component& add(const Integer& p, Status status) {
    auto it = std::lower_bound(components.begin(), components.end(), p,
                               [](const Component& c, const Integer& v) { return c.prime < v; });
    if (it != components.end() && it->prime == p) throw std::logic_error("prime already known");
    return *components.insert(it, Component{p, status, 0, false});
  }

  const Component* smallest_off() const {
    for (const auto& c : components) {
      if (c.status == Status::Off) return &c;
    }
    return nullptr;
  }
  bool has_off() const { return smallest_off() != nullptr; }

  arith::Valuation forced_of(const Integer& p) const {
    auto it = forced.find(p);
    return it == forced.end() ? 0 : it->second;
  }

  const Integer& bound_for(const Integer& p) const { return config->branch_bound(p); }

  /// Eulerian form: even exponents, or a = 1 (mod 4) for a p = 1 (mod 4)
  /// that can still be the special prime.
  bool may_be_special(const Integer& p) const {
    if (mod_ui(p, 4) != 1) return false;
    return special == Special::Open || special_prime == p;
  }

  bool admissible(const Integer& p, unsigned long a) const {
    if (a == 0) return false;
    if (a % 2 == 0) return true;
    return a % 4 == 1 && may_be_special(p);
  }

  unsigned long smallest_admissible_at_least(const Integer& p, unsigned long lo) const {
    unsigned long a = std::max<unsigned long>(lo, 1);
    while (!admissible(p, a)) ++a;
    return a;
  }

  /// Smallest e with p^e > bound.
  static unsigned long exceed_exponent(const Integer& p, const Integer& bound) {
    unsigned long e = 1;
    Integer pe = p;
    while (pe <= bound) {
      pe *= p;
      ++e;
    }
    return e;
  }

  /// The least exponent the component can have on this branch; the known
  /// exponent for OnKnown.
  unsigned long min_exponent(const Component& c) const {
    switch (c.status) {
      case Status::OnKnown:
        return c.exponent;
      case Status::Off:
        return smallest_admissible_at_least(c.prime, forced_of(c.prime));
      case Status::OnInf:
        return smallest_admissible_at_least(
            c.prime, std::max<unsigned long>(forced_of(c.prime), exceed_exponent(c.prime, bound_for(c.prime))));
    }
    throw std::logic_error("unreachable");
  }

  Integer largest_known() const { return components.empty() ? Integer(0) : components.back().prime; }
};

/// The root state for a run: no known primes. The first interval stage
/// enumerates the candidates for p_1.
inline SearchState root_state(std::shared_ptr<const RunConfig> config) {
  SearchState s;
  s.k = config->k;
  s.config = std::move(config);
  return s;
}

}  // namespace opn::chain
