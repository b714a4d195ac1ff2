// Abundancy bounds on the smallest unknown prime of a branch.
//
// All arithmetic is exact: an interval endpoint rounded the wrong way would
// prune a live branch.
#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "opn/arith.hpp"
#include "opn/bigint.hpp"
#include "opn/state.hpp"

namespace opn::bounds {

using chain::Component;
using chain::SearchState;
using chain::Status;

/// Strict lower bounds P_1 >= P_2 >= ... on the largest unknown primes.
struct LargePrimeFloors {
  std::vector<Integer> P;
};

struct IntervalBound {
  Rational lower;                 // p >= lower
  std::optional<Rational> upper;  // p <= upper
  unsigned u_used = 0;
};

/// Product of sigma_{-1} over known primes at their least admissible exponent.
inline Rational pi_product(const SearchState& s) {
  Rational pi = 1;
  for (const auto& c : s.components) {
    pi *= arith::sigma_minus_one(c.prime, arith::Exponent::finite(s.min_exponent(c)));
  }
  return pi;
}

inline Rational delta_u(const SearchState& s, unsigned u, const LargePrimeFloors& floors) {
  Rational d = 1;
  for (const auto& c : s.components) {
    if (c.status == Status::OnKnown) {
      d *= arith::sigma_minus_one(c.prime, arith::Exponent::finite(c.exponent));
    } else {
      d *= arith::sigma_minus_one(c.prime, arith::Exponent::infinite());
    }
  }
  for (unsigned i = 0; i < u && i < floors.P.size(); ++i) {
    d *= make_rational(floors.P[i], floors.P[i] - 1);
  }
  return d;
}

enum class LowerVerdict { Bound, Abundant, Perfect };

struct LowerBound {
  LowerVerdict verdict = LowerVerdict::Bound;
  Rational pi;
  Rational value;  // Pi / (2 - Pi) when verdict == Bound
};

inline LowerBound lower_bound_smallest_unknown(const SearchState& s) {
  LowerBound r;
  r.pi = pi_product(s);
  int c = cmp(r.pi, Rational(2));
  if (c > 0) {
    r.verdict = LowerVerdict::Abundant;
  } else if (c == 0) {
    r.verdict = LowerVerdict::Perfect;
  } else {
    r.value = r.pi / (2 - r.pi);
  }
  return r;
}

/// The number of floors an upper bound may use: u <= v < k2.
inline unsigned usable_floor_count(const SearchState& s, const LargePrimeFloors& floors, unsigned max_u) {
  unsigned k2 = s.k2();
  if (k2 == 0) return 0;
  return std::min<unsigned>({max_u, k2 - 1, static_cast<unsigned>(floors.P.size())});
}

struct UpperBound {
  Rational value;
  unsigned u = 0;
};

/// min over u in [0, v] with Delta_u < 2 of Delta_u (k2 - u) / (2 - Delta_u) + 1.
inline std::optional<UpperBound> upper_bound_smallest_unknown(const SearchState& s,
                                                              const LargePrimeFloors& floors,
                                                              unsigned max_u) {
  const unsigned k2 = s.k2();
  if (k2 == 0) return std::nullopt;
  const unsigned v = usable_floor_count(s, floors, max_u);
  std::optional<UpperBound> best;
  for (unsigned u = 0; u <= v; ++u) {
    Rational d = delta_u(s, u, floors);
    if (d >= 2) continue;
    Rational value = d * (k2 - u) / (2 - d) + 1;
    if (!best || value < best->value) best = UpperBound{value, u};
  }
  return best;
}

struct PlacedFloor {
  Integer value;  // strict lower bound on an unknown prime
  unsigned source = 0;  // index j of the threshold T_j it came from (1-based)
};

/// Floors on the largest unknown primes implied by thresholds T_1 > T_2 > T_3
/// on the three largest primes of N, after discounting known primes already
/// above each threshold. Entry i bounds the (i+1)-th largest unknown prime.
/// `overflow` is set when some threshold needs more unknown primes than exist.
struct PlacedFloors {
  std::vector<PlacedFloor> floors;
  std::optional<unsigned> overflow;
};

inline PlacedFloors placed_floors(const SearchState& s, const std::array<Integer, 3>& T) {
  PlacedFloors out;
  const unsigned k2 = s.k2();
  std::array<unsigned, 3> need{};  // unknown primes forced above T_j
  for (unsigned j = 1; j <= 3; ++j) {
    if (T[j - 1] <= 1 || j > s.k) continue;
    unsigned known_above = 0;
    for (const auto& c : s.components) known_above += c.prime > T[j - 1] ? 1 : 0;
    need[j - 1] = known_above >= j ? 0 : j - known_above;
    if (need[j - 1] > k2 && !out.overflow) out.overflow = j;
  }
  for (unsigned i = 1; i <= std::min(3u, k2); ++i) {
    PlacedFloor best;
    for (unsigned j = 1; j <= 3; ++j) {
      if (need[j - 1] >= i && T[j - 1] > best.value) best = {T[j - 1], j};
    }
    if (best.source == 0) break;
    out.floors.push_back(best);
  }
  return out;
}

}  // namespace opn::bounds
