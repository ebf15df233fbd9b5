#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "repot/zoo.hpp"

namespace repot {

// PDDL problem-file subset for Blocksworld: s-expressions over the predicates
// on, on-table/ontable, clear, holding, and arm-empty/handempty. Objects may
// be typed ("a b - block") or untyped; types are ignored.

struct PddlError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace pddl {

struct Node {
  std::string atom;         // empty for lists
  std::vector<Node> items;  // children for lists
  bool is_list = false;
};

inline std::string strip_comments(const std::string& text) {
  std::string out;
  bool in_comment = false;
  for (char c : text) {
    if (c == ';') in_comment = true;
    if (c == '\n') in_comment = false;
    if (!in_comment) out += c;
  }
  return out;
}

inline Node parse_sexpr(const std::string& text) {
  std::string src = strip_comments(text);
  size_t i = 0;
  auto ws = [&] {
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
  };
  std::function<Node()> parse = [&]() -> Node {
    ws();
    if (i >= src.size()) throw PddlError("unexpected end of input");
    if (src[i] == '(') {
      ++i;
      Node n;
      n.is_list = true;
      while (true) {
        ws();
        if (i >= src.size()) throw PddlError("unbalanced '('");
        if (src[i] == ')') {
          ++i;
          return n;
        }
        n.items.push_back(parse());
      }
    }
    if (src[i] == ')') throw PddlError("unbalanced ')'");
    size_t b = i;
    while (i < src.size() && !std::isspace(static_cast<unsigned char>(src[i])) &&
           src[i] != '(' && src[i] != ')')
      ++i;
    Node n;
    n.atom = to_lower(src.substr(b, i - b));
    return n;
  };
  Node root = parse();
  ws();
  if (i < src.size()) throw PddlError("trailing text after the problem definition");
  return root;
}

inline const std::string& head(const Node& n) {
  static const std::string empty;
  if (!n.is_list || n.items.empty() || n.items[0].is_list) return empty;
  return n.items[0].atom;
}

// One predicate ground atom -> canonical text ("on(a,b)", "arm_empty", ...).
inline std::string canon_predicate(const Node& n) {
  if (!n.is_list || n.items.empty() || n.items[0].is_list)
    throw PddlError("malformed predicate");
  const std::string& name = n.items[0].atom;
  std::vector<std::string> args;
  for (size_t i = 1; i < n.items.size(); ++i) {
    if (n.items[i].is_list) throw PddlError("malformed predicate argument");
    args.push_back(n.items[i].atom);
  }
  auto want_args = [&](size_t k) {
    if (args.size() != k)
      throw PddlError("predicate " + name + " expects " + std::to_string(k) + " arguments");
  };
  if (name == "on") {
    want_args(2);
    return "on(" + args[0] + "," + args[1] + ")";
  }
  if (name == "on-table" || name == "ontable") {
    want_args(1);
    return "on_table(" + args[0] + ")";
  }
  if (name == "clear") {
    want_args(1);
    return "clear(" + args[0] + ")";
  }
  if (name == "holding") {
    want_args(1);
    return "holding(" + args[0] + ")";
  }
  if (name == "arm-empty" || name == "handempty" || name == "arm_empty") {
    want_args(0);
    return "arm_empty";
  }
  throw PddlError("unknown predicate '" + name + "'");
}

}  // namespace pddl

inline ProblemInstance parse_pddl_problem(const std::string& text) {
  pddl::Node root = pddl::parse_sexpr(text);
  if (pddl::head(root) != "define") throw PddlError("expected (define ...)");

  std::string problem_name;
  std::vector<std::string> objects;
  std::vector<std::string> init_preds;
  std::vector<std::string> goal_preds;
  bool saw_init = false, saw_goal = false;

  auto collect_goal = [&](const pddl::Node& formula, auto&& self) -> void {
    if (pddl::head(formula) == "and") {
      for (size_t i = 1; i < formula.items.size(); ++i) self(formula.items[i], self);
      return;
    }
    goal_preds.push_back(pddl::canon_predicate(formula));
  };

  for (size_t i = 1; i < root.items.size(); ++i) {
    const pddl::Node& sec = root.items[i];
    const std::string& h = pddl::head(sec);
    if (h == "problem") {
      if (sec.items.size() != 2 || sec.items[1].is_list) throw PddlError("malformed (problem ...)");
      problem_name = sec.items[1].atom;
    } else if (h == ":domain") {
      continue;
    } else if (h == ":objects") {
      for (size_t k = 1; k < sec.items.size(); ++k) {
        if (sec.items[k].is_list) throw PddlError("malformed :objects");
        const std::string& a = sec.items[k].atom;
        if (a == "-") {
          ++k;  // skip the type name
          continue;
        }
        objects.push_back(a);
      }
    } else if (h == ":init") {
      saw_init = true;
      for (size_t k = 1; k < sec.items.size(); ++k)
        init_preds.push_back(pddl::canon_predicate(sec.items[k]));
    } else if (h == ":goal") {
      saw_goal = true;
      if (sec.items.size() != 2) throw PddlError("malformed (:goal ...)");
      collect_goal(sec.items[1], collect_goal);
    } else {
      throw PddlError("unsupported section '" + h + "'");
    }
  }
  if (problem_name.empty()) throw PddlError("missing (problem NAME)");
  if (!saw_init) throw PddlError("missing :init section");
  if (!saw_goal) throw PddlError("missing :goal section");
  if (objects.empty()) throw PddlError("missing or empty :objects section");

  BlocksState s;
  for (const auto& o : objects)
    if (!s.blocks.insert(o).second) throw PddlError("object '" + o + "' declared twice");

  bool claimed_arm_empty = false;
  std::set<std::string> claimed_clear;
  auto known = [&](const std::string& b, const std::string& pred) {
    if (!s.blocks.count(b))
      throw PddlError("predicate " + pred + " references undeclared object '" + b + "'");
  };
  for (const auto& p : init_preds) {
    detail::Scanner sc{p};
    std::string kind = sc.ident();
    if (kind == "arm_empty") {
      claimed_arm_empty = true;
      continue;
    }
    sc.eat('(');
    std::string a = sc.ident();
    known(a, p);
    if (kind == "on") {
      sc.eat(',');
      std::string b = sc.ident();
      known(b, p);
      if (s.on.count(a)) throw PddlError("init places " + a + " on two blocks");
      s.on[a] = b;
    } else if (kind == "on_table") {
      if (s.on_table.count(a)) throw PddlError("init repeats (on-table " + a + ")");
      s.on_table.insert(a);
    } else if (kind == "holding") {
      if (s.holding) throw PddlError("init holds two blocks");
      s.holding = a;
    } else if (kind == "clear") {
      claimed_clear.insert(a);
    }
  }
  if (claimed_arm_empty && s.holding)
    throw PddlError("init claims both handempty and (holding " + *s.holding + ")");
  for (const auto& b : s.blocks) {
    int placements = (s.on.count(b) ? 1 : 0) + (s.on_table.count(b) ? 1 : 0) +
                     (s.holding == b ? 1 : 0);
    if (placements == 0) s.on_table.insert(b);  // unplaced declared objects sit on the table
    if (placements > 1) throw PddlError("block '" + b + "' has multiple positions in :init");
  }
  if (!blocks::well_formed(s)) throw PddlError("init violates blocksworld invariants");
  for (const auto& c : claimed_clear)
    if (!blocks::is_clear(s, c))
      throw PddlError("init claims (clear " + c + ") but " + c + " is covered");

  GoalPredicates goal;
  for (const auto& p : goal_preds) {
    detail::Scanner sc{p};
    std::string kind = sc.ident();
    if (kind != "arm_empty") {
      sc.eat('(');
      std::string a = sc.ident();
      known(a, p);
      if (kind == "on") {
        sc.eat(',');
        known(sc.ident(), p);
      }
    }
    goal.predicates.insert(p);
  }

  ProblemInstance inst;
  inst.problem_id = problem_name;
  inst.environment = EnvId::blocksworld;
  inst.complexity = static_cast<int>(s.blocks.size());
  inst.initial_state = s;
  inst.goal = goal;
  inst.oracle_plan_length = 0;
  inst.natural_language_prompt = describe_problem(EnvId::blocksworld, inst.initial_state, inst.goal);
  inst.seed = hash_str(problem_name);
  return inst;
}

struct PlanbenchLoad {
  std::vector<ProblemInstance> instances;
  int file_count = 0;
};

inline PlanbenchLoad load_planbench_split(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw PddlError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pddl")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  PlanbenchLoad out;
  out.file_count = static_cast<int>(files.size());
  std::vector<std::string> failures;
  std::set<std::string> used_ids;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) {
      failures.push_back(f.string() + ": unreadable");
      continue;
    }
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
      ProblemInstance inst = parse_pddl_problem(body);
      if (!used_ids.insert(inst.problem_id).second) {
        inst.problem_id = inst.problem_id + "@" + f.stem().string();
        used_ids.insert(inst.problem_id);
      }
      out.instances.push_back(std::move(inst));
    } catch (const std::exception& e) {
      failures.push_back(f.string() + ": " + e.what());
    }
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " of " + std::to_string(out.file_count) +
                      " files failed to parse:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw PddlError(msg);
  }
  return out;
}

}  // namespace repot
