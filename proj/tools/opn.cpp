// opn: run the factor chain search, recompute congruence certifications,
// verify logs, inspect the factor cache.
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "opn/audit.hpp"
#include "opn/chain.hpp"
#include "opn/config.hpp"
#include "opn/factordb.hpp"
#include "opn/nonfermat.hpp"
#include "opn/search.hpp"

namespace {

using opn::Integer;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

/// Accepts plain digits, "1e20" and "10^20".
Integer parse_big(const std::string& text) {
  static const std::regex sci(R"(^(\d+)[eE](\d+)$)");
  static const std::regex pw(R"(^(\d+)\^(\d+)$)");
  std::smatch m;
  if (std::regex_match(text, m, sci)) return opn::to_integer(m[1].str()) * opn::ipow(10, std::stoul(m[2].str()));
  if (std::regex_match(text, m, pw)) return opn::ipow(opn::to_integer(m[1].str()), std::stoul(m[2].str()));
  return opn::to_integer(text);
}

std::optional<std::filesystem::path> cache_file(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  if (const char* dir = std::getenv("OPN_CACHE_DIR"); dir && *dir) {
    std::filesystem::create_directories(dir);
    return std::filesystem::path(dir) / "factors.txt";
  }
  return std::nullopt;
}

struct RunArgs {
  std::string preset = "desk";
  std::optional<unsigned> k;
  std::string B1, B2, floors, threshold, q_max;
  bool no_three = false, bootstrap = false, b_forced = false;
  std::optional<unsigned> max_u;
  unsigned jobs = 1;
  std::string checkpoint, resume, log, cache, cert_dir;
  std::uint64_t stop_after = 0;
  std::uint64_t max_candidates = 0;
};

opn::RunConfig build_config(const RunArgs& a) {
  opn::RunConfig c;
  if (a.preset == "paper") c = opn::paper_preset();
  else if (a.preset == "desk") c = opn::desk_preset();
  else throw std::invalid_argument("unknown preset " + a.preset);
  if (a.k) c.k = *a.k;
  if (!a.B1.empty()) c.B1 = parse_big(a.B1);
  if (!a.B2.empty()) c.B2 = parse_big(a.B2);
  c.no_three = a.no_three;
  c.bootstrap = a.bootstrap;
  if (a.max_u) c.max_u = *a.max_u;
  if (!a.floors.empty()) {
    std::string joined;
    std::istringstream in(a.floors);
    std::string part;
    while (std::getline(in, part, ',')) joined += (joined.empty() ? "" : ",") + opn::to_string(parse_big(part));
    c.floors = opn::RunConfig::parse_floors(joined);
  }
  if (!a.threshold.empty()) c.threshold = parse_big(a.threshold);
  if (!a.q_max.empty()) c.q_max = parse_big(a.q_max);
  if (a.max_candidates) c.max_candidates = a.max_candidates;
  c.b_includes_forced = a.b_forced;
  c = c.normalized();
  c.validate();
  return c;
}

int cmd_run(const RunArgs& a) {
  opn::RunConfig cfg;
  try {
    cfg = build_config(a);
  } catch (const std::exception& e) {
    std::cerr << "opn run: " << e.what() << '\n';
    return 1;
  }
  auto config = std::make_shared<const opn::RunConfig>(cfg);
  opn::factordb::FactorDb db(cfg.effort, {}, cache_file(a.cache));
  opn::nonfermat::CertificationStore certs({cfg.threshold, cfg.q_max});
  if (!a.cert_dir.empty()) certs.load_dir(a.cert_dir);
  opn::chain::Engine engine(config, db, certs);
  opn::chain::Search search(engine);

  std::ofstream file;
  std::ostream* log = &std::cout;
  if (!a.log.empty()) {
    file.open(a.log, a.resume.empty() ? std::ios::trunc : std::ios::app);
    if (!file) {
      std::cerr << "opn run: cannot open log " << a.log << '\n';
      return 1;
    }
    log = &file;
  }
  opn::chain::RunOptions opt;
  opt.log = log;
  opt.jobs = a.jobs;
  opt.stop_after = a.stop_after;
  opt.cancel = &g_interrupted;
  if (!a.checkpoint.empty()) opt.checkpoint = a.checkpoint;
  if (!a.resume.empty()) {
    opt.resume = a.resume;
    if (!opt.checkpoint) opt.checkpoint = a.resume;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  opn::chain::RunResult r;
  try {
    r = search.run(opt);
  } catch (const std::exception& e) {
    std::cerr << "opn run: " << e.what() << '\n';
    return 1;
  }
  log->flush();

  std::cerr << "result " << opn::chain::verdict_name(r.verdict) << " nodes " << r.tally.nodes << '\n';
  for (const auto& [code, n] : r.tally.codes) std::cerr << "  " << opn::chain::code_name(code) << ' ' << n << '\n';
  switch (r.verdict) {
    case opn::chain::Verdict::TheoremHolds:
      return 0;
    case opn::chain::Verdict::OpnFound:
      for (const auto& w : r.tally.witnesses) std::cout << "witness " << opn::to_string(w) << '\n';
      return 3;
    case opn::chain::Verdict::Unresolved:
      for (const auto& rb : r.tally.roadblocks) {
        std::cerr << "  roadblock " << opn::chain::format_path(rb.path) << ' ' << rb.detail << '\n';
      }
      return 2;
    case opn::chain::Verdict::Interrupted:
      std::cerr << "interrupted; " << r.frontier.size() << " pending nodes";
      if (opt.checkpoint) std::cerr << " saved to " << opt.checkpoint->string();
      std::cerr << '\n';
      return 2;
  }
  return 1;
}

int cmd_recompute(unsigned long q_lo, unsigned long q_hi, const std::string& threshold, const std::string& out) {
  opn::nonfermat::CongruenceSearchConfig cfg;
  cfg.threshold = parse_big(threshold);
  cfg.q_max = std::max<Integer>(cfg.q_max, Integer(q_hi) + 1);
  bool ok = true;
  for (unsigned long q = std::max<unsigned long>(q_lo, 3); q <= q_hi; ++q) {
    if (!opn::factordb::prime_p(Integer(q))) continue;
    auto c = opn::nonfermat::congruence_search_recompute(q, cfg);
    if (!out.empty()) opn::nonfermat::CertificationStore::save(out, c);
    std::cout << "q " << q << " m " << c.m << " primes " << c.primes.size() << " divisible " << c.divisible.size();
    for (const auto& h : c.primes) std::cout << " [" << opn::to_string(h.value) << " level " << h.level << ']';
    std::cout << '\n';
  }
  // The exceptional pair, checked directly.
  const Integer& p = opn::nonfermat::exceptional_prime();
  const Integer q = opn::nonfermat::kExceptionalQ;
  const auto v = opn::arith::vp(q, opn::ipow(p, 6) - 1);
  const auto o = opn::arith::mult_order(p, q);
  const bool exc = v == opn::nonfermat::kExceptionalLevel && o == 6 && opn::factordb::prime_p(p);
  std::cout << "exception " << opn::to_string(p) << " v_7(p^6 - 1) = " << v << " order " << opn::to_string(o)
            << (exc ? " ok" : " FAILED") << '\n';
  ok = ok && exc;
  return ok ? 0 : 1;
}

int cmd_verify(const std::string& path, const std::string& cert_dir, const RunArgs& flags, bool require) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "opn verify: cannot read " << path << '\n';
    return 1;
  }
  opn::audit::AuditOptions opt;
  if (!cert_dir.empty()) opt.cert_dir = cert_dir;
  try {
    opt.config = build_config(flags);
    opt.config_is_required = require;
    auto rep = opn::audit::verify_log(in, opt);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& e : rep.errors) std::cerr << "error: " << e << '\n';
    std::cout << (rep.ok ? "OK" : "FAILED") << ' ' << rep.lines << " lines";
    if (rep.verdict) std::cout << ' ' << opn::chain::verdict_name(*rep.verdict);
    std::cout << '\n';
    return rep.ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "opn verify: " << e.what() << '\n';
    return 1;
  }
}

int cmd_cache(const std::string& action, const std::string& file, const std::string& number) {
  auto path = cache_file(file);
  if (!path) {
    std::cerr << "opn cache: no cache file (use --cache or OPN_CACHE_DIR)\n";
    return 1;
  }
  opn::factordb::FactorDb db({}, {}, path);
  if (action == "show") {
    for (const auto& [n, f] : db.cache().records()) std::cout << opn::factordb::format_record(n, f) << '\n';
    return 0;
  }
  if (action == "check") {
    std::cout << db.cache().size() << " records, " << db.cache().warnings().size() << " corrupt\n";
    return db.cache().warnings().empty() ? 0 : 1;
  }
  if (action == "factor") {
    auto f = db.factor(parse_big(number));
    std::cout << opn::factordb::format_record(parse_big(number), f);
    if (!f.complete()) std::cout << " ?" << opn::to_string(f.cofactor);
    std::cout << '\n';
    return f.complete() ? 0 : 2;
  }
  std::cerr << "opn cache: unknown action " << action << '\n';
  return 1;
}

void add_run_flags(CLI::App* app, RunArgs& a) {
  app->add_option("--preset", a.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--k", a.k, "number of distinct primes");
  app->add_option("--B1", a.B1, "branching bound for p < 1000");
  app->add_option("--B2", a.B2, "branching bound for p >= 1000");
  app->add_flag("--no-three", a.no_three, "exclude 3 | N");
  app->add_flag("--bootstrap", a.bootstrap, "no large-prime floors, Delta_0 only");
  app->add_option("--max-u", a.max_u, "largest u in the upper bound (0..3)");
  app->add_option("--floors", a.floors, "P1,P2,P3");
  app->add_option("--threshold", a.threshold, "congruence-search threshold");
  app->add_option("--q-max", a.q_max, "largest q analysed");
  app->add_option("--max-candidates", a.max_candidates, "interval size that becomes a roadblock");
  app->add_flag("--b-includes-forced", a.b_forced, "count forced exponents of unknown components in b");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Odd perfect number factor chain search"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "exhaust the tree for k distinct primes");
  add_run_flags(run_cmd, run);
  run_cmd->add_option("--jobs", run.jobs, "parallel workers")->check(CLI::Range(1u, 256u));
  run_cmd->add_option("--checkpoint", run.checkpoint, "checkpoint file written on interrupt");
  run_cmd->add_option("--resume", run.resume, "resume from a checkpoint");
  run_cmd->add_option("--log", run.log, "log file (default stdout)");
  run_cmd->add_option("--cache", run.cache, "factor cache file");
  run_cmd->add_option("--cert-dir", run.cert_dir, "directory of certification files");
  run_cmd->add_option("--stop-after", run.stop_after, "stop after this many nodes");

  unsigned long q_lo = 3, q_hi = 97;
  std::string rc_threshold = "1e10", rc_out;
  auto* rc = app.add_subcommand("recompute", "recompute congruence-search certifications");
  rc->add_option("--q-min", q_lo);
  rc->add_option("--q-max", q_hi);
  rc->add_option("--threshold", rc_threshold);
  rc->add_option("--out", rc_out, "write certification files here");

  std::string log_path, vcert;
  RunArgs vflags;
  bool use_flags = false;
  auto* vf = app.add_subcommand("verify", "audit a branch log");
  vf->add_option("log", log_path)->required();
  vf->add_option("--cert-dir", vcert);
  vf->add_flag("--require-config", use_flags, "fail when the footer config differs from the flags");
  add_run_flags(vf, vflags);

  std::string action, cfile, number;
  auto* cc = app.add_subcommand("cache", "inspect the factor cache");
  cc->add_option("action", action, "show, check or factor")->required();
  cc->add_option("n", number);
  cc->add_option("--cache", cfile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc_exit = app.exit(e);
    return rc_exit == 0 ? 0 : 1;
  }
  try {
    if (*run_cmd) return cmd_run(run);
    if (*rc) return cmd_recompute(q_lo, q_hi, rc_threshold, rc_out);
    if (*vf) return cmd_verify(log_path, vcert, vflags, use_flags);
    if (*cc) return cmd_cache(action, cfile, number);
  } catch (const std::exception& e) {
    std::cerr << "opn: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
