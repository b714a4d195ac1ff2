// Depth-first exhaustion of the tree with a deterministic log, checkpoints as
// child-index paths, and optional parallel subtrees merged in DFS order.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "opn/chain.hpp"

namespace opn::chain {

using Path = std::vector<unsigned>;

inline std::string format_path(const Path& p) {
  if (p.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(p[i]);
  }
  return s;
}

inline Path parse_path(const std::string& text) {
  Path p;
  if (text == "-") return p;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    unsigned long v = std::stoul(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad checkpoint path: " + text);
    p.push_back(static_cast<unsigned>(v));
  }
  return p;
}

enum class Verdict { TheoremHolds, OpnFound, Unresolved, Interrupted };

inline std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TheoremHolds: return "THEOREM_HOLDS";
    case Verdict::OpnFound: return "OPN_FOUND";
    case Verdict::Unresolved: return "UNRESOLVED";
    case Verdict::Interrupted: return "INTERRUPTED";
  }
  return "?";
}

struct Leaf {
  Path path;
  Code code = Code::Open;
  std::string detail;
};

struct Tally {
  std::uint64_t nodes = 0;
  std::map<Code, std::uint64_t> codes;
  std::vector<Leaf> roadblocks;
  std::vector<Integer> witnesses;

  void merge(const Tally& o) {
    nodes += o.nodes;
    for (const auto& [c, n] : o.codes) codes[c] += n;
    roadblocks.insert(roadblocks.end(), o.roadblocks.begin(), o.roadblocks.end());
    witnesses.insert(witnesses.end(), o.witnesses.begin(), o.witnesses.end());
  }
};

struct RunOptions {
  std::ostream* log = nullptr;
  std::uint64_t stop_after = 0;  // nodes; 0 = run to completion
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> resume;
  unsigned jobs = 1;
  bool footer = true;
  std::vector<Leaf>* leaves = nullptr;  // every closed node, in log order
  const std::atomic<bool>* cancel = nullptr;
};

struct RunResult {
  Verdict verdict = Verdict::TheoremHolds;
  Tally tally;
  std::vector<Path> frontier;  // pending paths when interrupted
};

class Search {
 public:
  explicit Search(const Engine& engine) : engine_(engine) {}

  /// Rebuilds the node at `path` by replaying child selections from the root.
  Node replay(const Path& path) const {
    Node node = engine_.root();
    for (unsigned idx : path) {
      auto ev = engine_.evaluate(node);
      auto kids = engine_.children(node, ev);
      if (idx >= kids.size()) throw std::runtime_error("checkpoint path leaves the tree: " + format_path(path));
      node = std::move(kids[idx]);
    }
    return node;
  }

  RunResult run(const RunOptions& opt) const {
    RunResult result;
    std::vector<Frame> stack;
    if (opt.resume) {
      auto ck = read_checkpoint(*opt.resume);
      result.tally = ck.tally;
      for (auto it = ck.paths.rbegin(); it != ck.paths.rend(); ++it) stack.push_back(frame_for(*it));
    } else {
      stack.push_back(Frame{engine_.root(), {}});
    }

    if (opt.jobs > 1 && !opt.resume && opt.stop_after == 0 && !opt.checkpoint) {
      run_parallel(stack.back(), opt, result.tally);
      stack.clear();
    } else {
      std::uint64_t done = 0;
      while (!stack.empty()) {
        if (opt.stop_after && done >= opt.stop_after) break;
        if (opt.cancel && opt.cancel->load()) break;
        Frame f = std::move(stack.back());
        stack.pop_back();
        visit(f, stack, opt.log, result.tally, opt.leaves);
        ++done;
      }
    }

    if (!stack.empty()) {
      result.verdict = Verdict::Interrupted;
      for (auto it = stack.rbegin(); it != stack.rend(); ++it) result.frontier.push_back(it->path);
      if (opt.checkpoint) write_checkpoint(*opt.checkpoint, result.frontier, result.tally);
      return result;
    }
    result.verdict = verdict_of(result.tally);
    if (opt.log && opt.footer) write_footer(*opt.log, result);
    if (opt.checkpoint) std::filesystem::remove(*opt.checkpoint);
    return result;
  }

  static Verdict verdict_of(const Tally& t) {
    if (!t.witnesses.empty()) return Verdict::OpnFound;
    if (!t.roadblocks.empty()) return Verdict::Unresolved;
    return Verdict::TheoremHolds;
  }

  void write_footer(std::ostream& os, const RunResult& r) const {
    os << "# opn-log v1\n";
    os << "# config " << engine_.config().canonical() << '\n';
    os << "# result " << verdict_name(r.verdict) << " nodes " << r.tally.nodes << '\n';
    os << "# probable " << engine_.db().probable().size() << '\n';
  }

 private:
  struct Frame {
    Node node;
    Path path;
  };

  struct Checkpoint {
    std::vector<Path> paths;
    Tally tally;
  };

  Frame frame_for(const Path& p) const { return Frame{replay(p), p}; }

  void visit(Frame& f, std::vector<Frame>& stack, std::ostream* log, Tally& tally, std::vector<Leaf>* leaves) const {
    Evaluation ev = engine_.evaluate(f.node);
    if (!f.path.empty()) {
      ++tally.nodes;
      if (log) *log << Engine::render_line(f.node, ev, static_cast<unsigned>(f.path.size() - 1)) << '\n';
    }
    if (ev.code != Code::Open) {
      record(f.path, ev, tally, leaves, f.node);
      return;
    }
    auto kids = engine_.children(f.node, ev);
    if (kids.empty()) {
      // An open node with nothing to branch on cannot be closed soundly.
      ev.code = Code::ROADBLOCK;
      ev.detail = "open node without children";
      record(f.path, ev, tally, leaves, f.node);
      return;
    }
    for (std::size_t i = kids.size(); i-- > 0;) {
      Path p = f.path;
      p.push_back(static_cast<unsigned>(i));
      stack.push_back(Frame{std::move(kids[i]), std::move(p)});
    }
  }

  void record(const Path& path, const Evaluation& ev, Tally& tally, std::vector<Leaf>* leaves, const Node& node) const {
    ++tally.codes[ev.code];
    if (ev.code == Code::ROADBLOCK) tally.roadblocks.push_back({path, ev.code, node.head + ": " + ev.detail});
    if (ev.code == Code::PERFECT) {
      if (auto w = engine_.perfect_witness(node.state)) tally.witnesses.push_back(*w);
    }
    if (leaves) leaves->push_back({path, ev.code, ev.detail});
  }

  // Output segments in DFS order: either a literal line or a subtree task.
  struct Segment {
    std::string line;
    std::optional<Frame> task;
    std::string out;
    Tally tally;
    std::vector<Leaf> leaves;
  };

  void expand(Frame f, unsigned depth_left, std::vector<Segment>& segs, Tally& tally) const {
    if (depth_left == 0) {
      segs.push_back(Segment{"", std::move(f), "", {}, {}});
      return;
    }
    Evaluation ev = engine_.evaluate(f.node);
    if (!f.path.empty()) {
      ++tally.nodes;
      segs.push_back(Segment{Engine::render_line(f.node, ev, static_cast<unsigned>(f.path.size() - 1)) + "\n",
                             std::nullopt, "", {}, {}});
    }
    std::vector<Leaf>* leaves = f.path.empty() ? nullptr : &segs.back().leaves;
    if (ev.code != Code::Open) {
      record(f.path, ev, tally, leaves, f.node);
      return;
    }
    auto kids = engine_.children(f.node, ev);
    if (kids.empty()) {
      ev.code = Code::ROADBLOCK;
      ev.detail = "open node without children";
      record(f.path, ev, tally, leaves, f.node);
      return;
    }
    for (std::size_t i = 0; i < kids.size(); ++i) {
      Path p = f.path;
      p.push_back(static_cast<unsigned>(i));
      expand(Frame{std::move(kids[i]), std::move(p)}, depth_left - 1, segs, tally);
    }
  }

  void run_parallel(Frame root, const RunOptions& opt, Tally& tally) const {
    std::vector<Segment> segs;
    expand(std::move(root), 3, segs, tally);
    std::vector<std::size_t> tasks;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].task) tasks.push_back(i);
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(opt.jobs);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < opt.jobs; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
            Segment& seg = segs[tasks[t]];
            std::ostringstream os;
            std::vector<Frame> stack;
            stack.push_back(std::move(*seg.task));
            while (!stack.empty()) {
              Frame f = std::move(stack.back());
              stack.pop_back();
              visit(f, stack, &os, seg.tally, opt.leaves ? &seg.leaves : nullptr);
            }
            seg.out = os.str();
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (auto& seg : segs) {
      if (opt.log) *opt.log << seg.line << seg.out;
      tally.merge(seg.tally);
      if (opt.leaves) opt.leaves->insert(opt.leaves->end(), seg.leaves.begin(), seg.leaves.end());
    }
  }

  void write_checkpoint(const std::filesystem::path& file, const std::vector<Path>& paths, const Tally& t) const {
    auto tmp = file;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw std::runtime_error("cannot write checkpoint " + file.string());
      out << "digest " << engine_.config().digest() << '\n';
      out << "nodes " << t.nodes << '\n';
      for (const auto& [c, n] : t.codes) out << "code " << code_name(c) << ' ' << n << '\n';
      for (const auto& r : t.roadblocks) out << "roadblock " << format_path(r.path) << '\n';
      for (const auto& w : t.witnesses) out << "witness " << to_string(w) << '\n';
      for (const auto& p : paths) out << "path " << format_path(p) << '\n';
    }
    std::filesystem::rename(tmp, file);
  }

  Checkpoint read_checkpoint(const std::filesystem::path& file) const {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read checkpoint " + file.string());
    Checkpoint ck;
    std::string line;
    bool digest_ok = false;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tag, a, b;
      ls >> tag >> a;
      if (tag == "digest") {
        if (a != engine_.config().digest()) throw std::runtime_error("checkpoint belongs to a different config");
        digest_ok = true;
      } else if (tag == "nodes") {
        ck.tally.nodes = std::stoull(a);
      } else if (tag == "code") {
        ls >> b;
        auto c = parse_code(a);
        if (!c) throw std::runtime_error("bad checkpoint code " + a);
        ck.tally.codes[*c] = std::stoull(b);
      } else if (tag == "roadblock") {
        ck.tally.roadblocks.push_back({parse_path(a), Code::ROADBLOCK, "from checkpoint"});
      } else if (tag == "witness") {
        ck.tally.witnesses.push_back(to_integer(a));
      } else if (tag == "path") {
        ck.paths.push_back(parse_path(a));
      } else if (!tag.empty()) {
        throw std::runtime_error("bad checkpoint line: " + line);
      }
    }
    if (!digest_ok) throw std::runtime_error("checkpoint has no digest line");
    return ck;
  }

  const Engine& engine_;
};

}  // namespace opn::chain
