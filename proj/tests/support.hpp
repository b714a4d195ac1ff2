// Shared fixtures for the unit suites.
#pragma once

#include <initializer_list>
#include <memory>

#include "opn/config.hpp"
#include "opn/state.hpp"

namespace opn::testing {

struct Comp {
  unsigned long p;
  chain::Status status;
  unsigned long a = 0;
};

inline std::shared_ptr<const RunConfig> config_with(unsigned k, const Integer& B, unsigned max_u = 0) {
  RunConfig c;
  c.k = k;
  c.B1 = B;
  c.B2 = B;
  c.max_u = max_u;
  return std::make_shared<const RunConfig>(c);
}

/// A state with the listed components; an odd known exponent claims the special slot.
inline chain::SearchState make_state(std::shared_ptr<const RunConfig> cfg, std::initializer_list<Comp> comps) {
  auto s = chain::root_state(std::move(cfg));
  for (const auto& c : comps) {
    auto& comp = s.add(Integer(c.p), c.status);
    comp.exponent = c.a;
    if (c.status == chain::Status::OnKnown && c.a % 2 == 1) {
      s.special = chain::Special::Claimed;
      s.special_prime = c.p;
    }
  }
  return s;
}

constexpr auto Known = chain::Status::OnKnown;
constexpr auto Inf = chain::Status::OnInf;
constexpr auto Off = chain::Status::Off;

}  // namespace opn::testing
