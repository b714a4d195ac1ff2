// Log auditor: replays a branch log against a fresh engine, requires every
// line to match exactly, and re-derives the arithmetic behind each line
// (sigma factorizations, interval endpoints, closing codes) directly.
#pragma once

#include <istream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "opn/chain.hpp"
#include "opn/search.hpp"

namespace opn::audit {

using chain::Code;
using chain::Engine;
using chain::Evaluation;
using chain::Node;
using chain::SearchState;
using chain::Status;

struct AuditReport {
  bool ok = true;
  bool complete = false;  // footer present and the tree fully covered
  std::size_t lines = 0;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::optional<chain::Verdict> verdict;
};

struct Footer {
  std::optional<std::string> config;
  std::optional<std::string> result;
  std::optional<std::uint64_t> nodes;
};

struct ParsedLog {
  std::vector<std::string> body;
  Footer footer;
};

inline ParsedLog parse_log(std::istream& in) {
  ParsedLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      std::string tag;
      ls >> tag;
      if (tag == "config") {
        std::string rest;
        ls >> rest;
        log.footer.config = rest;
      } else if (tag == "result") {
        std::string verdict, word;
        std::uint64_t n = 0;
        ls >> verdict >> word >> n;
        log.footer.result = verdict;
        if (word == "nodes") log.footer.nodes = n;
      }
      continue;
    }
    if (line.empty()) continue;
    log.body.push_back(line);
  }
  return log;
}

// ---- independent re-derivations ------------------------------------------

inline Rational direct_pi(const SearchState& s) {
  Rational pi = 1;
  for (const auto& c : s.components) {
    const unsigned long a = s.min_exponent(c);
    pi *= make_rational(arith::sigma_pp(c.prime, a), ipow(c.prime, a));
  }
  return pi;
}

inline Rational direct_delta0(const SearchState& s) {
  Rational d = 1;
  for (const auto& c : s.components) {
    if (c.status == Status::OnKnown) d *= make_rational(arith::sigma_pp(c.prime, c.exponent), ipow(c.prime, c.exponent));
    else d *= make_rational(c.prime, c.prime - 1);
  }
  return d;
}

/// v_r(sigma(known components)) by repeated division.
inline unsigned long direct_forced(const SearchState& s, const Integer& r) {
  unsigned long v = 0;
  for (const auto& c : s.components) {
    if (c.status != Status::OnKnown || c.prime == r) continue;
    Integer x = arith::sigma_pp(c.prime, c.exponent);
    v += remove_factor(x, r);
  }
  return v;
}

/// Checks "p^a => f1^e1 f2^e2 ..." against sigma(p^a).
inline std::optional<std::string> check_head(const std::string& head) {
  auto arrow = head.find(" => ");
  if (arrow == std::string::npos) return std::nullopt;  // p^oo line
  const std::string lhs = head.substr(0, arrow);
  const auto caret = lhs.find('^');
  if (caret == std::string::npos) return "malformed branch head";
  const Integer p = to_integer(lhs.substr(0, caret));
  const unsigned long a = std::stoul(lhs.substr(caret + 1));
  if (!factordb::prime_p(p)) return "branch prime " + to_string(p) + " is not prime";
  std::istringstream rs(head.substr(arrow + 4));
  std::string tok;
  Integer product = 1;
  Integer prev = 0;
  bool partial = false;
  while (rs >> tok) {
    if (tok[0] == '?') {
      product *= to_integer(tok.substr(1));
      partial = true;
      continue;
    }
    const auto c = tok.find('^');
    if (c == std::string::npos) return "malformed factor " + tok;
    const Integer f = to_integer(tok.substr(0, c));
    const unsigned long e = std::stoul(tok.substr(c + 1));
    if (f <= prev) return "factors not ascending";
    prev = f;
    if (!factordb::prime_p(f)) return "listed factor " + to_string(f) + " is not prime";
    product *= ipow(f, e);
  }
  if (product != arith::sigma_pp(p, a)) return "factors do not multiply to sigma(" + lhs + ")";
  if (partial) return std::nullopt;  // the ?cofactor line closes as ROADBLOCK
  return std::nullopt;
}

inline constexpr unsigned long kScanLimit = 2000000;

/// Second derivation of the closing code of `node`.
inline std::optional<std::string> check_code(const Engine& engine, const Node& node, const Evaluation& ev) {
  const SearchState& s = node.state;
  const RunConfig& cfg = engine.config();
  switch (ev.code) {
    case Code::MT:
      if (s.components.size() <= cfg.k) return "MT without too many primes";
      break;
    case Code::MS: {
      bool found = false;
      for (const auto& c : s.components) {
        if (c.status == Status::OnKnown && direct_forced(s, c.prime) > c.exponent) found = true;
      }
      if (!found) return "MS without an excess forced exponent";
      break;
    }
    case Code::A:
      if (direct_pi(s) <= 2) return "A but Pi <= 2";
      break;
    case Code::D:
      if (s.components.size() != cfg.k || direct_delta0(s) >= 2) return "D but not deficient with k primes";
      break;
    case Code::S: {
      bool found = false;
      for (const auto& c : s.components) {
        if (c.status == Status::Off && c.prime < s.interval_floor) found = true;
      }
      if (!found) return "S without an off prime below the interval prime";
      break;
    }
    case Code::PERFECT: {
      auto w = engine.perfect_witness(s);
      if (!w) return "PERFECT without a witness";
      Integer m = *w, sig = 1, rest = m;
      for (const auto& c : s.components) {
        unsigned long e = remove_factor(rest, c.prime);
        sig *= arith::sigma_pp(c.prime, e);
      }
      if (rest != 1 || sig != 2 * m) return "PERFECT witness fails sigma(M) = 2M";
      break;
    }
    case Code::N: {
      if (!ev.interval || !ev.interval->upper) break;
      // Direct scan for small intervals.
      const Integer hi = floor_of(*ev.interval->upper);
      Integer lo = std::max(ceil_of(ev.interval->lower), Integer(s.interval_floor + 1));
      if (hi - lo > kScanLimit) break;
      for (Integer p = std::max(lo, Integer(3)); p <= hi; ++p) {
        if (s.is_known(p) || (p == 3 && cfg.no_three)) continue;
        if (factordb::prime_p(p)) return "N but " + to_string(p) + " lies in the interval";
      }
      break;
    }
    default:
      break;
  }
  return std::nullopt;
}

/// Interval endpoints recomputed from the state.
inline std::optional<std::string> check_interval(const Engine& engine, const SearchState& s, const Evaluation& ev) {
  if (!ev.interval) return std::nullopt;
  const Rational pi = direct_pi(s);
  if (pi >= 2) return "interval on a non-deficient state";
  const Rational L = pi / (2 - pi);
  if (L != ev.interval->lower) return "lower endpoint differs from Pi / (2 - Pi)";
  if (ev.interval->upper && ev.floors.P.empty() && engine.config().max_u == 0) {
    const Rational d = direct_delta0(s);
    const unsigned k2 = engine.config().k - static_cast<unsigned>(s.components.size());
    if (d < 2 && d * k2 / (2 - d) + 1 != *ev.interval->upper) return "upper endpoint differs from the u = 0 bound";
  }
  return std::nullopt;
}

// ---- replay ----------------------------------------------------------------

struct AuditOptions {
  std::optional<RunConfig> config;  // used when the log has no footer
  bool config_is_required = false;  // a footer config must then equal `config`
  std::optional<std::filesystem::path> cert_dir;
};

class Auditor {
 public:
  explicit Auditor(AuditOptions opt = {}) : opt_(std::move(opt)) {}

  AuditReport verify(std::istream& in) const {
    AuditReport rep;
    ParsedLog log = parse_log(in);
    rep.lines = log.body.size();
    RunConfig cfg;
    if (log.footer.config) {
      cfg = RunConfig::parse(*log.footer.config);
      if (opt_.config && opt_.config_is_required && *opt_.config != cfg) {
        rep.errors.push_back("footer config differs from the requested config");
      }
    } else if (opt_.config) {
      cfg = *opt_.config;
    } else {
      rep.warnings.push_back("no config given and no footer; assuming defaults");
    }
    if (log.body.empty()) rep.warnings.push_back("empty log");
    replay(cfg, log, rep);
    rep.ok = rep.errors.empty();
    return rep;
  }

 private:
  struct Frame {
    Node node;
    Evaluation ev;
    std::vector<Node> kids;
    std::size_t next = 0;
    std::size_t line = 0;
  };

  void replay(const RunConfig& cfg, const ParsedLog& log, AuditReport& rep) const {
    auto config = std::make_shared<const RunConfig>(cfg.normalized());
    factordb::FactorDb db(config->effort);
    nonfermat::CertificationStore certs(nonfermat::CongruenceSearchConfig{config->threshold, to_u64(config->q_max)});
    if (opt_.cert_dir) certs.load_dir(*opt_.cert_dir);
    Engine engine(config, db, certs);

    chain::Tally tally;
    auto close = [&](const Frame& f) {
      if (f.ev.code != Code::Open) {
        ++tally.codes[f.ev.code];
        if (f.ev.code == Code::ROADBLOCK) tally.roadblocks.push_back({{}, f.ev.code, f.ev.detail});
        if (f.ev.code == Code::PERFECT) {
          if (auto w = engine.perfect_witness(f.node.state)) tally.witnesses.push_back(*w);
        }
      } else if (f.kids.empty()) {
        ++tally.codes[Code::ROADBLOCK];
        tally.roadblocks.push_back({{}, Code::ROADBLOCK, "open node without children"});
      }
    };
    auto open_frame = [&](Node node, std::size_t line) {
      Frame f{std::move(node), {}, {}, 0, line};
      f.ev = engine.evaluate(f.node);
      if (f.ev.code == Code::Open) f.kids = engine.children(f.node, f.ev);
      return f;
    };

    std::vector<Frame> stack;
    stack.push_back(open_frame(engine.root(), 0));
    if (auto err = check_code(engine, stack.back().node, stack.back().ev)) rep.errors.push_back("root: " + *err);
    bool truncated = false;
    for (std::size_t i = 0; i < log.body.size(); ++i) {
      const std::string& text = log.body[i];
      const std::size_t ln = i + 1;
      std::size_t spaces = text.find_first_not_of(' ');
      if (spaces == std::string::npos || spaces % chain::kIndent != 0) {
        rep.errors.push_back("line " + std::to_string(ln) + ": bad indentation");
        return;
      }
      const std::size_t depth = spaces / chain::kIndent;
      if (depth + 1 > stack.size()) {
        rep.errors.push_back("line " + std::to_string(ln) + ": indentation skips a level");
        return;
      }
      while (stack.size() > depth + 1) {
        if (!pop(stack, rep, close)) return;
      }
      Frame& parent = stack.back();
      if (parent.next >= parent.kids.size()) {
        rep.errors.push_back("line " + std::to_string(ln) + ": node not in the tree");
        return;
      }
      Frame f = open_frame(parent.kids[parent.next++], ln);
      ++tally.nodes;
      const std::string expected = Engine::render_line(f.node, f.ev, static_cast<unsigned>(depth));
      if (expected != text) {
        rep.errors.push_back("line " + std::to_string(ln) + ": expected '" + expected + "', found '" + text + "'");
        return;
      }
      auto note = [&](std::optional<std::string> err) {
        if (err) rep.errors.push_back("line " + std::to_string(ln) + ": " + *err);
      };
      note(check_head(f.node.head));
      note(check_interval(engine, f.node.state, f.ev));
      note(check_code(engine, f.node, f.ev));
      stack.push_back(std::move(f));
    }
    // The log ends: everything still open must be complete, or the run was cut.
    const bool has_footer = log.footer.result.has_value();
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.kids.size()) {
        if (has_footer) {
          rep.errors.push_back("node at line " + std::to_string(f.line) + " is missing " +
                               std::to_string(f.kids.size() - f.next) + " children");
          return;
        }
        truncated = true;
        stack.pop_back();
        continue;
      }
      close(f);
      stack.pop_back();
    }
    if (truncated) {
      rep.warnings.push_back("log is truncated; checked the lines present");
      return;
    }
    const auto verdict = chain::Search::verdict_of(tally);
    rep.verdict = verdict;
    if (has_footer) {
      rep.complete = true;
      if (*log.footer.result != chain::verdict_name(verdict)) {
        rep.errors.push_back("footer result " + *log.footer.result + " but the replay gives " +
                             std::string(chain::verdict_name(verdict)));
      }
      if (log.footer.nodes && *log.footer.nodes != tally.nodes) {
        rep.errors.push_back("footer node count differs from the replay");
      }
    } else {
      rep.warnings.push_back("no footer");
    }
  }

  template <class Close>
  static bool pop(std::vector<Frame>& stack, AuditReport& rep, Close& close) {
    Frame& f = stack.back();
    if (f.next < f.kids.size()) {
      rep.errors.push_back("node at line " + std::to_string(f.line) + " is missing " +
                           std::to_string(f.kids.size() - f.next) + " children");
      return false;
    }
    close(f);
    stack.pop_back();
    return true;
  }

  AuditOptions opt_;
};

inline AuditReport verify_log(std::istream& in, AuditOptions opt = {}) { return Auditor(std::move(opt)).verify(in); }

}  // namespace opn::audit
