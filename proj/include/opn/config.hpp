// Run configuration: search parameters, presets, canonical serialization and
// a platform-stable digest.
#pragma once

#include <array>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "opn/bigint.hpp"
#include "opn/factordb.hpp"

namespace opn {

struct RunConfig {
  unsigned k = 5;
  Integer B1{"100000000000000000000"};  // branching bound for p < 1000
  Integer B2{"1000000000000"};          // branching bound for p >= 1000
  bool no_three = false;
  bool bootstrap = false;
  unsigned max_u = 3;
  std::array<Integer, 3> floors{Integer(10000000), Integer(10000), Integer(100)};
  Integer threshold{"1000000000000"};  // congruence-search certification level
  Integer q_max{1000};
  factordb::EffortBudget effort{};
  std::uint64_t max_candidates = 5000000;  // per interval
  bool b_includes_forced = false;

  /// Applies the bootstrap implications (no large-prime floors, Delta_0 only).
  RunConfig normalized() const {
    RunConfig c = *this;
    if (c.bootstrap) {
      c.floors = {Integer(0), Integer(0), Integer(0)};
      c.max_u = 0;
    }
    return c;
  }

  void validate() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (B1 < 3 || B2 < 3) throw std::invalid_argument("B1 and B2 must be >= 3");
    if (max_u > 3) throw std::invalid_argument("max-u must be in 0..3");
    if (threshold < 1000000) throw std::invalid_argument("threshold must be >= 10^6");
    if (bootstrap) {
      for (const auto& f : floors) {
        if (f != 0) throw std::invalid_argument("bootstrap mode requires zero floors");
      }
      if (max_u != 0) throw std::invalid_argument("bootstrap mode uses Delta_0 only");
    }
    if (effort.trial_limit < 2 || effort.rho_iterations < 1 || effort.time_cap.count() < 1) {
      throw std::invalid_argument("effort budget must be positive");
    }
  }

  const Integer& branch_bound(const Integer& p) const { return p < 1000 ? B1 : B2; }

  /// `key=value;` pairs in fixed order. Paths and job counts are excluded:
  /// they do not change the tree.
  std::string canonical() const {
    std::ostringstream os;
    os << "k=" << k << ";B1=" << to_string(B1) << ";B2=" << to_string(B2)
       << ";no_three=" << no_three << ";bootstrap=" << bootstrap << ";max_u=" << max_u
       << ";floors=" << to_string(floors[0]) << ',' << to_string(floors[1]) << ','
       << to_string(floors[2]) << ";threshold=" << to_string(threshold)
       << ";q_max=" << to_string(q_max) << ";trial=" << effort.trial_limit
       << ";rho=" << effort.rho_iterations << ";time_cap_ms=" << effort.time_cap.count()
       << ";max_candidates=" << max_candidates << ";b_forced=" << b_includes_forced;
    return os.str();
  }

  static RunConfig parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("bad config item: " + item);
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    auto take = [&](const char* key) {
      auto it = kv.find(key);
      if (it == kv.end()) throw std::invalid_argument(std::string("missing config key ") + key);
      return it->second;
    };
    RunConfig c;
    c.k = static_cast<unsigned>(std::stoul(take("k")));
    c.B1 = to_integer(take("B1"));
    c.B2 = to_integer(take("B2"));
    c.no_three = take("no_three") == "1";
    c.bootstrap = take("bootstrap") == "1";
    c.max_u = static_cast<unsigned>(std::stoul(take("max_u")));
    c.floors = parse_floors(take("floors"));
    c.threshold = to_integer(take("threshold"));
    c.q_max = to_integer(take("q_max"));
    c.effort.trial_limit = std::stoull(take("trial"));
    c.effort.rho_iterations = std::stoull(take("rho"));
    c.effort.time_cap = std::chrono::milliseconds(std::stoll(take("time_cap_ms")));
    c.max_candidates = std::stoull(take("max_candidates"));
    c.b_includes_forced = take("b_forced") == "1";
    return c;
  }

  static std::array<Integer, 3> parse_floors(const std::string& text) {
    std::array<Integer, 3> out;
    std::istringstream in(text);
    std::string part;
    std::size_t i = 0;
    while (std::getline(in, part, ',')) {
      if (i >= 3) throw std::invalid_argument("floors takes three values");
      out[i++] = to_integer(part);
    }
    if (i != 3) throw std::invalid_argument("floors takes three values");
    return out;
  }

  /// FNV-1a 64 over the canonical string, as 16 hex digits.
  std::string digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
  }

  bool operator==(const RunConfig& o) const { return canonical() == o.canonical(); }
};

inline RunConfig desk_preset() { return RunConfig{}; }

inline RunConfig paper_preset() {
  RunConfig c;
  c.B1 = ipow(10, 50);
  c.B2 = ipow(10, 30);
  c.threshold = ipow(10, 50);
  c.k = 8;
  return c;
}

}  // namespace opn
