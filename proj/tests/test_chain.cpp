#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "opn/chain.hpp"
#include "opn/search.hpp"
#include "support.hpp"

using namespace opn;
using namespace opn::chain;
using namespace opn::testing;

namespace {

struct Rig {
  explicit Rig(std::shared_ptr<const RunConfig> cfg)
      : config(std::move(cfg)), certs({config->threshold, config->q_max}), engine(config, db, certs) {}
  std::shared_ptr<const RunConfig> config;
  factordb::FactorDb db;
  nonfermat::CertificationStore certs;
  Engine engine;
};

SearchState with_off(std::shared_ptr<const RunConfig> cfg, unsigned long p) {
  auto s = root_state(std::move(cfg));
  s.add(Integer(p), Status::Off);
  return s;
}

std::vector<std::string> heads(const std::vector<Node>& nodes) {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.head);
  return out;
}

// Follows (prime, exponent) steps from a state holding `first` as an off prime.
Node walk(const Engine& e, unsigned long first, std::initializer_list<std::pair<unsigned long, unsigned long>> steps) {
  Node n{with_off(e.config_ptr(), first), "", false};
  for (auto [p, a] : steps) n = e.make_child(n.state, Integer(p), a == 0 ? std::nullopt : std::optional(a));
  return n;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void check_invariants(const SearchState& s) {
  const unsigned k1 = s.k1();
  if (k1 <= s.k) { ASSERT_EQ(k1 + s.k2(), s.k); }
  ASSERT_LE(s.l1(), k1);
  unsigned odd = 0;
  for (const auto& c : s.components) {
    if (c.status == Status::OnKnown) {
      ASSERT_GE(c.exponent, 1u);
      if (c.exponent % 2 == 1) {
        ++odd;
        ASSERT_EQ(s.special, Special::Claimed);
        ASSERT_EQ(s.special_prime, c.prime);
        ASSERT_EQ(mod_ui(c.prime, 4), 1u);
        ASSERT_EQ(c.exponent % 4, 1u);
      }
    }
    if (c.status == Status::Off && !c.from_interval) { ASSERT_GE(s.forced_of(c.prime), 1u) << c.prime; }
  }
  ASSERT_LE(odd, 1u);
  for (std::size_t i = 1; i < s.components.size(); ++i) ASSERT_LT(s.components[i - 1].prime, s.components[i].prime);
}

}  // namespace

TEST(Branch, FirstLevel) {
  Rig r100(config_with(5, 100));
  EXPECT_EQ(heads(r100.engine.branch(with_off(r100.config, 3))),
            (std::vector<std::string>{"3^2 => 13^1", "3^4 => 11^2", "3^oo"}));
  Rig r50(config_with(5, 50));
  EXPECT_EQ(heads(r50.engine.branch(with_off(r50.config, 3))), (std::vector<std::string>{"3^2 => 13^1", "3^oo"}));
}

TEST(Branch, SpecialExponentsInterleaved) {
  Rig r(config_with(5, 1000));
  auto kids = r.engine.branch(with_off(r.config, 5));
  std::vector<std::string> lhs;
  for (const auto& h : heads(kids)) lhs.push_back(h.substr(0, h.find(' ')));
  EXPECT_EQ(lhs, (std::vector<std::string>{"5^1", "5^2", "5^4", "5^oo"}));
  EXPECT_EQ(kids[0].state.special, Special::Claimed);
  EXPECT_EQ(kids[1].state.special, Special::Open);
  // With the slot taken only even exponents remain.
  auto s = with_off(r.config, 5);
  s.add(Integer(13), Status::OnKnown).exponent = 1;
  s.special = Special::Claimed;
  s.special_prime = 13;
  EXPECT_EQ(heads(r.engine.branch(s)).size(), 3u);
}

TEST(Branch, IngestsSigmaFactors) {
  Rig r(config_with(5, 50));
  auto kids = r.engine.branch(with_off(r.config, 3));
  const auto& s = kids[0].state;
  ASSERT_TRUE(s.find(13));
  EXPECT_EQ(s.find(13)->status, Status::Off);
  EXPECT_EQ(s.forced_of(13), 1u);
  EXPECT_EQ(s.find(3)->status, Status::OnKnown);
  EXPECT_EQ(s.find(3)->exponent, 2u);
  auto n = walk(r.engine, 3, {{3, 2}, {13, 1}});
  EXPECT_EQ(n.head, "13^1 => 2^1 7^1");
  EXPECT_FALSE(n.state.is_known(2));
  EXPECT_EQ(n.state.special_prime, 13);
}

TEST(Evaluate, PrintOutLeaf) {
  Rig r(config_with(5, 50));
  auto n = walk(r.engine, 3, {{3, 2}, {13, 1}, {7, 2}, {19, 0}});
  auto ev = r.engine.evaluate(n);
  EXPECT_EQ(ev.code, Code::N);
  ASSERT_TRUE(ev.interval && ev.interval->upper);
  EXPECT_EQ(ev.interval->lower, make_rational(127, 6));
  EXPECT_EQ(*ev.interval->upper, make_rational(378, 17));
  EXPECT_EQ(Engine::render_line(n, ev, 3), "         19^oo : 21 < p_5 < 23 N");
}

TEST(Evaluate, IntervalCandidates) {
  Rig r(config_with(5, 50));
  auto n = walk(r.engine, 3, {{3, 2}, {13, 1}, {7, 0}});
  auto ev = r.engine.evaluate(n);
  EXPECT_EQ(ev.code, Code::Open);
  ASSERT_TRUE(ev.interval);
  EXPECT_EQ(ev.candidates, (std::vector<Integer>{11, 17, 19}));
  EXPECT_EQ(render_interval(*ev.interval), " : 9 < p_4 < 21");
}

TEST(Evaluate, ClosingCodes) {
  Rig r(config_with(5, 50));
  const auto& cfg = r.config;
  auto code = [&](const SearchState& s) { return r.engine.evaluate(Node{s, "x", false}).code; };

  EXPECT_EQ(code(make_state(cfg, {{3, Known, 2}, {5, Known, 2}, {7, Known, 2}})), Code::A);

  Rig r2(config_with(2, 50));
  EXPECT_EQ(r2.engine.evaluate(Node{make_state(r2.config, {{3, Known, 2}, {13, Known, 1}}), "x", false}).code,
            Code::D);

  EXPECT_EQ(code(make_state(cfg, {{3, Inf}, {5, Off}, {7, Off}, {11, Off}, {13, Off}, {17, Off}})), Code::MT);

  auto ms = make_state(cfg, {{3, Known, 2}, {13, Off}});
  ms.forced[Integer(3)] = 4;
  EXPECT_EQ(code(ms), Code::MS);

  auto sv = make_state(cfg, {{3, Known, 2}, {13, Off}, {19, Inf}});
  sv.forced[Integer(13)] = 1;
  sv.interval_floor = 19;
  EXPECT_EQ(code(sv), Code::S);

  EXPECT_EQ(
      r.engine.evaluate(Node{make_state(cfg, {{3, Known, 2}}), "x", true}).code, Code::ROADBLOCK);

  // Even perfect sanity fixture exercises the exact sigma check.
  Rig r3(config_with(2, 50));
  EXPECT_EQ(r3.engine.evaluate(Node{make_state(r3.config, {{2, Known, 2}, {7, Known, 1}}), "x", false}).code,
            Code::PERFECT);
}

TEST(PerfectCheck, Examples) {
  auto cfg = config_with(5, 50);
  EXPECT_FALSE(Engine::perfect_check(make_state(cfg, {{3, Known, 2}, {13, Known, 1}})));
  EXPECT_TRUE(Engine::perfect_check(make_state(cfg, {{2, Known, 2}, {7, Known, 1}})));
  EXPECT_THROW(Engine::perfect_check(make_state(cfg, {{3, Known, 2}, {7, Inf}})), std::logic_error);
}

TEST(Codes, NamesRoundTrip) {
  for (std::size_t i = 1; i < kCodeNames.size(); ++i) {
    auto c = static_cast<Code>(i);
    EXPECT_EQ(parse_code(code_name(c)), c);
  }
  EXPECT_FALSE(parse_code("OPEN"));
  EXPECT_FALSE(parse_code("X"));
}

TEST(Search, PrintOutPrefix) {
  Rig r(config_with(5, 50));
  std::ostringstream log;
  Search search(r.engine);
  RunOptions opt;
  opt.log = &log;
  opt.stop_after = 7;  // root plus six lines
  auto res = search.run(opt);
  EXPECT_EQ(res.verdict, Verdict::Interrupted);
  std::istringstream in(log.str());
  std::vector<std::string> got;
  for (std::string l; std::getline(in, l);) got.push_back(l);
  EXPECT_EQ(got, read_lines(std::string(OPN_FIXTURES) + "/printout.txt"));
}

TEST(Search, KOneExhausts) {
  auto cfg = std::make_shared<const RunConfig>([] {
    RunConfig c;
    c.k = 1;
    return c;
  }());
  Rig r(cfg);
  auto res = Search(r.engine).run({});
  EXPECT_EQ(res.verdict, Verdict::TheoremHolds);
}

TEST(Search, EveryLeafClosedInTheoremRun) {
  for (unsigned k : {5u, 6u}) {
    RunConfig c;
    c.k = k;
    Rig r(std::make_shared<const RunConfig>(c));
    std::vector<Leaf> leaves;
    RunOptions opt;
    opt.leaves = &leaves;
    auto res = Search(r.engine).run(opt);
    ASSERT_EQ(res.verdict, Verdict::TheoremHolds) << k;
    ASSERT_FALSE(leaves.empty());
    std::uint64_t closed = 0;
    for (const auto& l : leaves) {
      EXPECT_NE(l.code, Code::Open);
      EXPECT_NE(l.code, Code::ROADBLOCK);
      ++closed;
    }
    std::uint64_t counted = 0;
    for (const auto& [code, n] : res.tally.codes) counted += n;
    EXPECT_EQ(closed, counted);
  }
}

TEST(State, InvariantsOnReachableStates) {
  for (auto cfg : {config_with(5, 50), config_with(5, 1000, 3), config_with(6, Integer("1000000000000"), 3)}) {
    Rig r(cfg);
    std::vector<Node> stack{r.engine.root()};
    std::size_t visited = 0;
    while (!stack.empty() && visited < 3000) {
      Node n = std::move(stack.back());
      stack.pop_back();
      ++visited;
      check_invariants(n.state);
      if (::testing::Test::HasFatalFailure()) return;
      auto ev = r.engine.evaluate(n);
      for (auto& kid : r.engine.children(n, ev)) stack.push_back(std::move(kid));
    }
    EXPECT_GT(visited, 10u);
  }
}

TEST(State, RootEnumeratesSmallestPrime) {
  RunConfig c;
  c.k = 5;
  c.bootstrap = true;
  c = c.normalized();
  Rig r(std::make_shared<const RunConfig>(c));
  auto root = r.engine.root();
  auto ev = r.engine.evaluate(root);
  ASSERT_TRUE(ev.interval && ev.interval->upper);
  EXPECT_EQ(*ev.interval->upper, Rational(6));  // k + 1
  EXPECT_EQ(ev.candidates, (std::vector<Integer>{3, 5}));

  c.no_three = true;
  Rig r2(std::make_shared<const RunConfig>(c));
  EXPECT_EQ(r2.engine.evaluate(r2.engine.root()).candidates, (std::vector<Integer>{5}));
}
