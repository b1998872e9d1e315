#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gtschr/error.hpp"
#include "gtschr/limits.hpp"

namespace gtschr {

// ============================================================================
// Terms and constraints
// ============================================================================

// A variable with an integer offset (X, X+2, X-1), an integer, or a symbol.
struct Term {
  enum class Kind : unsigned char { variable, integer, symbol };

  Kind kind = Kind::integer;
  std::string name;  // variable base or symbol
  long value = 0;    // offset of a variable, or the integer

  static Term var(std::string base, long delta = 0) { return Term{Kind::variable, std::move(base), delta}; }
  static Term num(long v) { return Term{Kind::integer, {}, v}; }
  static Term sym(std::string s) { return Term{Kind::symbol, std::move(s), 0}; }

  bool is_variable() const { return kind == Kind::variable; }
  bool is_plain_variable() const { return kind == Kind::variable && value == 0; }
  bool is_constant() const { return kind != Kind::variable; }

  // Symbols admit no arithmetic; callers check before shifting them.
  Term plus(long delta) const {
    if (kind == Kind::symbol && delta != 0) throw Error("offset applied to symbol '" + name + "'");
    Term t = *this;
    if (kind != Kind::symbol) t.value += delta;
    return t;
  }

  friend auto operator<=>(const Term&, const Term&) = default;
  friend bool operator==(const Term&, const Term&) = default;
};

inline std::string to_string(const Term& t) {
  switch (t.kind) {
    case Term::Kind::integer: return std::to_string(t.value);
    case Term::Kind::symbol: return t.name;
    case Term::Kind::variable:
      if (t.value == 0) return t.name;
      return t.name + (t.value > 0 ? "+" : "-") + std::to_string(std::labs(t.value));
  }
  return "?";
}

struct Constraint {
  std::string symbol;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }

  friend auto operator<=>(const Constraint&, const Constraint&) = default;
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

inline std::string to_string(const Constraint& c) {
  std::string s = c.symbol + "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) s += (i ? "," : "") + to_string(c.args[i]);
  return s + ")";
}

// var = rhs. A degree adjustment may remember its unsimplified form
// (rhs minus `removed` plus `added`) for display.
struct Equation {
  std::string var;
  Term rhs;
  std::optional<std::pair<long, long>> chain;

  friend bool operator==(const Equation& a, const Equation& b) { return a.var == b.var && a.rhs == b.rhs; }
};

inline std::string to_string(const Equation& e) {
  if (e.chain && e.rhs.is_variable()) {
    Term base = Term::var(e.rhs.name);
    return e.var + " = " + to_string(base) + "-" + std::to_string(e.chain->first) + "+" + std::to_string(e.chain->second);
  }
  return e.var + " = " + to_string(e.rhs);
}

struct BuiltinStore {
  bool failed = false;
  std::vector<Equation> equations;

  static BuiltinStore top() { return {}; }
  static BuiltinStore bottom() { return BuiltinStore{true, {}}; }

  friend bool operator==(const BuiltinStore&, const BuiltinStore&) = default;
};

struct ChrState {
  std::vector<Constraint> goal;
  BuiltinStore builtins;
  std::set<std::string> globals;

  friend bool operator==(const ChrState&, const ChrState&) = default;
};

// Ground comparison usable in guards: lhs <= rhs, or lhs < rhs when strict.
struct Comparison {
  Term lhs;
  bool strict = false;
  Term rhs;
};

struct ChrRule {
  std::string name;
  std::vector<Constraint> kept;
  std::vector<Constraint> removed;
  std::vector<Comparison> guard;
  std::vector<Constraint> body_user;
  std::vector<Equation> body_builtin;

  std::vector<Constraint> head() const {
    std::vector<Constraint> h = kept;
    h.insert(h.end(), removed.begin(), removed.end());
    return h;
  }
};

struct ChrProgram {
  std::vector<ChrRule> rules;

  const ChrRule* rule(std::string_view name) const {
    for (const auto& r : rules)
      if (r.name == name) return &r;
    return nullptr;
  }
};

// ============================================================================
// Printing
// ============================================================================

inline std::string join_constraints(const std::vector<Constraint>& cs, const std::string& sep = ", ") {
  std::string s;
  for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? sep : "") + to_string(cs[i]);
  return s;
}

inline std::string to_string(const BuiltinStore& b) {
  if (b.failed) return "⊥";
  if (b.equations.empty()) return "⊤";
  std::string s;
  for (std::size_t i = 0; i < b.equations.size(); ++i) s += (i ? " ∧ " : "") + to_string(b.equations[i]);
  return s;
}

inline std::string to_string(const ChrState& st) {
  std::string s = "⟨" + (st.goal.empty() ? std::string("∅") : join_constraints(st.goal, " ⊎ ")) + "; " +
                  to_string(st.builtins) + "; {";
  bool first = true;
  for (const auto& g : st.globals) {
    s += (first ? "" : ",") + g;
    first = false;
  }
  return s + "}⟩";
}

inline std::string to_string(const ChrRule& r) {
  std::string s = r.name + " @ ";
  if (!r.kept.empty()) s += join_constraints(r.kept) + " \\ ";
  s += join_constraints(r.removed) + " <=> ";
  if (!r.guard.empty()) {
    for (std::size_t i = 0; i < r.guard.size(); ++i)
      s += (i ? ", " : "") + to_string(r.guard[i].lhs) + (r.guard[i].strict ? " < " : " =< ") + to_string(r.guard[i].rhs);
    s += " | ";
  }
  std::string body = join_constraints(r.body_user);
  for (const auto& e : r.body_builtin) body += (body.empty() ? "" : ", ") + to_string(e);
  return s + (body.empty() ? "true" : body);
}

// ============================================================================
// Variables
// ============================================================================

template <class F>
void for_each_variable(const Term& t, F&& f) {
  if (t.is_variable()) f(t.name);
}

template <class F>
void for_each_variable(const std::vector<Constraint>& cs, F&& f) {
  for (const auto& c : cs)
    for (const auto& a : c.args) for_each_variable(a, f);
}

inline std::set<std::string> goal_variables(const std::vector<Constraint>& cs) {
  std::set<std::string> vs;
  for_each_variable(cs, [&](const std::string& v) { vs.insert(v); });
  return vs;
}

inline std::set<std::string> state_variables(const ChrState& st) {
  std::set<std::string> vs = goal_variables(st.goal);
  for (const auto& e : st.builtins.equations) {
    vs.insert(e.var);
    for_each_variable(e.rhs, [&](const std::string& v) { vs.insert(v); });
  }
  vs.insert(st.globals.begin(), st.globals.end());
  return vs;
}

// Supplies the per-application suffix that renames a rule copy apart.
class FreshVars {
 public:
  explicit FreshVars(std::size_t start = 0) : counter_(start) {}

  // Starts above every "#k" suffix already present in the state.
  static FreshVars after(const ChrState& st) {
    std::size_t top = 0;
    for (const auto& v : state_variables(st)) {
      auto hash = v.rfind('#');
      if (hash == std::string::npos) continue;
      top = std::max<std::size_t>(top, std::strtoul(v.c_str() + hash + 1, nullptr, 10));
    }
    return FreshVars(top);
  }

  std::string next_suffix() { return "#" + std::to_string(++counter_); }

 private:
  std::size_t counter_;
};

// ============================================================================
// Built-in solver: union-find with integer offsets (x = parent + offset)
// ============================================================================

class OffsetSolver {
 public:
  struct Resolved {
    std::string root;
    long offset = 0;            // variable = root + offset
    std::optional<Term> value;  // ground value of the variable, when known
  };

  bool failed() const { return failed_; }

  void add(const Term& a, const Term& b) {
    if (failed_) return;
    if (a.is_constant() && b.is_constant()) {
      if (!(a == b)) failed_ = true;
      return;
    }
    if (a.is_constant()) return add(b, a);
    auto [ra, oa] = find(a.name);
    oa += a.value;
    if (b.is_constant()) return bind(ra, b, oa);
    auto [rb, ob] = find(b.name);
    ob += b.value;
    if (ra == rb) {
      if (oa != ob) failed_ = true;
      return;
    }
    // ra + oa = rb + ob
    long delta = ob - oa;
    parent_[ra] = {rb, delta};
    if (auto it = bound_.find(ra); it != bound_.end()) {
      Term v = it->second;
      bound_.erase(it);
      bind(rb, v, delta);
    }
  }

  Resolved resolve(const std::string& x) {
    auto [r, o] = find(x);
    Resolved res{r, o, std::nullopt};
    if (auto it = bound_.find(r); it != bound_.end()) {
      if (it->second.kind == Term::Kind::symbol && o != 0)
        failed_ = true;
      else
        res.value = it->second.plus(o);
    }
    return res;
  }

 private:
  std::pair<std::string, long> find(const std::string& x) {
    auto it = parent_.find(x);
    if (it == parent_.end()) return {x, 0};
    auto [root, off] = find(it->second.first);
    it->second = {root, it->second.second + off};
    return it->second;
  }

  // root + k = c
  void bind(const std::string& root, const Term& c, long k) {
    Term value;
    if (c.kind == Term::Kind::symbol) {
      if (k != 0) {
        failed_ = true;
        return;
      }
      value = c;
    } else {
      value = Term::num(c.value - k);
    }
    auto [it, inserted] = bound_.emplace(root, value);
    if (!inserted && !(it->second == value)) failed_ = true;
  }

  std::map<std::string, std::pair<std::string, long>> parent_;
  std::map<std::string, Term> bound_;
  bool failed_ = false;
};

// ============================================================================
// Normalization and state equivalence
// ============================================================================

// Canonical representative of a state's ≡-class modulo renaming of locals:
// solved bindings are substituted into the goal, every variable class is
// represented by its smallest global (else its smallest goal variable),
// bindings that mention only locals are dropped, non-occurring globals are
// dropped, and an inconsistent store gives ⟨∅, ⊥, globals⟩.
inline ChrState normalize(const ChrState& st) {
  if (st.builtins.failed) return ChrState{{}, BuiltinStore::bottom(), st.globals};
  OffsetSolver solver;
  for (const auto& e : st.builtins.equations) solver.add(Term::var(e.var), e.rhs);
  if (solver.failed()) return ChrState{{}, BuiltinStore::bottom(), st.globals};

  const std::set<std::string> in_goal = goal_variables(st.goal);
  std::map<std::string, OffsetSolver::Resolved> resolved;
  std::map<std::string, std::vector<std::string>> classes;
  for (const auto& v : state_variables(st)) {
    auto r = solver.resolve(v);
    classes[r.root].push_back(v);
    resolved.emplace(v, std::move(r));
  }
  if (solver.failed()) return ChrState{{}, BuiltinStore::bottom(), st.globals};

  // variable -> replacement term
  std::map<std::string, Term> subst;
  for (const auto& [root, members] : classes) {
    const auto& probe = resolved.at(members.front());
    if (probe.value) {
      for (const auto& v : members) subst.emplace(v, *resolved.at(v).value);
      continue;
    }
    std::optional<std::string> rep;
    for (const auto& v : members)  // members are sorted
      if (st.globals.count(v)) {
        rep = v;
        break;
      }
    if (!rep)
      for (const auto& v : members)
        if (in_goal.count(v)) {
          rep = v;
          break;
        }
    if (!rep) continue;
    long rep_off = resolved.at(*rep).offset;
    for (const auto& v : members) subst.emplace(v, Term::var(*rep, resolved.at(v).offset - rep_off));
  }

  ChrState out;
  out.goal.reserve(st.goal.size());
  for (const auto& c : st.goal) {
    Constraint n{c.symbol, {}};
    for (const auto& a : c.args) n.args.push_back(a.is_variable() ? subst.at(a.name).plus(a.value) : a);
    out.goal.push_back(std::move(n));
  }
  std::sort(out.goal.begin(), out.goal.end());

  for (const auto& g : st.globals) {
    auto it = subst.find(g);
    if (it == subst.end()) continue;
    if (it->second.is_variable() && it->second.name == g) continue;
    out.builtins.equations.push_back(Equation{g, it->second, std::nullopt});
  }
  std::set<std::string> occurring = goal_variables(out.goal);
  for (const auto& e : out.builtins.equations) {
    occurring.insert(e.var);
    for_each_variable(e.rhs, [&](const std::string& v) { occurring.insert(v); });
  }
  for (const auto& g : st.globals)
    if (occurring.count(g)) out.globals.insert(g);
  return out;
}

namespace detail {

// Shape of a normalized state: equal for ≡ states. Locals are blanked.
inline std::string state_shape(const ChrState& n) {
  if (n.builtins.failed) return "#failed";
  std::vector<std::string> parts;
  for (const auto& c : n.goal) {
    std::string s = c.symbol + "(";
    for (const auto& a : c.args) {
      if (a.is_variable() && !n.globals.count(a.name))
        s += "_,";
      else
        s += to_string(a) + ",";
    }
    parts.push_back(s);
  }
  std::sort(parts.begin(), parts.end());
  std::string s;
  for (const auto& p : parts) s += p + ";";
  s += "|" + to_string(n.builtins) + "|";
  for (const auto& g : n.globals) s += g + ",";
  return s;
}

// Searches a goal bijection for two normalized, consistent states that is
// the identity on globals and maps local bases bijectively, each base with a
// constant offset shift.
class GoalMatcher {
 public:
  GoalMatcher(const ChrState& a, const ChrState& b) : a_(a), b_(b), used_(b.goal.size(), false) {}

  bool run() { return a_.goal.size() == b_.goal.size() && search(0); }

 private:
  struct LocalMap {
    std::map<std::string, std::pair<std::string, long>> fwd;
    std::map<std::string, std::string> bwd;
  };

  bool is_local(const ChrState& s, const Term& t) const { return t.is_variable() && !s.globals.count(t.name); }

  bool unify(const Term& x, const Term& y, LocalMap& m) const {
    bool lx = is_local(a_, x), ly = is_local(b_, y);
    if (!lx || !ly) return !lx && !ly && x == y;
    long shift = y.value - x.value;
    if (auto it = m.fwd.find(x.name); it != m.fwd.end()) return it->second == std::make_pair(y.name, shift);
    if (m.bwd.count(y.name)) return false;
    m.fwd.emplace(x.name, std::make_pair(y.name, shift));
    m.bwd.emplace(y.name, x.name);
    return true;
  }

  bool search(std::size_t i) {
    if (i == a_.goal.size()) return true;
    const Constraint& c = a_.goal[i];
    for (std::size_t j = 0; j < b_.goal.size(); ++j) {
      const Constraint& d = b_.goal[j];
      if (used_[j] || d.symbol != c.symbol || d.arity() != c.arity()) continue;
      LocalMap saved = map_;
      bool ok = true;
      for (std::size_t k = 0; k < c.arity() && ok; ++k) ok = unify(c.args[k], d.args[k], map_);
      if (ok) {
        used_[j] = true;
        if (search(i + 1)) return true;
        used_[j] = false;
      }
      map_ = std::move(saved);
    }
    return false;
  }

  const ChrState& a_;
  const ChrState& b_;
  std::vector<bool> used_;
  LocalMap map_;
};

// Both arguments already normalized.
inline bool normalized_equivalent(const ChrState& a, const ChrState& b) {
  if (a.builtins.failed || b.builtins.failed) return a.builtins.failed && b.builtins.failed;
  if (a.globals != b.globals || !(a.builtins == b.builtins)) return false;
  return GoalMatcher(a, b).run();
}

}  // namespace detail

inline bool states_equivalent(const ChrState& a, const ChrState& b) {
  return detail::normalized_equivalent(normalize(a), normalize(b));
}

// Set of normalized states up to ≡, bucketed by shape.
class StateSet {
 public:
  // Returns false when an equivalent state is already present. `st` must be normalized.
  bool insert(const ChrState& st) { return insert_shaped(st, detail::state_shape(st)); }

  bool contains(const ChrState& st) const {
    auto it = buckets_.find(detail::state_shape(st));
    if (it == buckets_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](std::size_t i) { return detail::normalized_equivalent(states_[i], st); });
  }

  const std::vector<ChrState>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }

 private:
  bool insert_shaped(const ChrState& st, const std::string& shape) {
    auto& bucket = buckets_[shape];
    for (std::size_t i : bucket)
      if (detail::normalized_equivalent(states_[i], st)) return false;
    bucket.push_back(states_.size());
    states_.push_back(st);
    return true;
  }

  std::unordered_map<std::string, std::vector<std::size_t>> buckets_;
  std::vector<ChrState> states_;
};

// ============================================================================
// Transitions
// ============================================================================

namespace detail {

inline Term rename_term(const Term& t, const std::string& suffix) {
  return t.is_variable() ? Term::var(t.name + suffix, t.value) : t;
}

inline std::vector<Constraint> rename_constraints(const std::vector<Constraint>& cs, const std::string& suffix) {
  std::vector<Constraint> out;
  for (const auto& c : cs) {
    Constraint r{c.symbol, {}};
    for (const auto& a : c.args) r.args.push_back(rename_term(a, suffix));
    out.push_back(std::move(r));
  }
  return out;
}

inline ChrRule rename_rule(const ChrRule& r, const std::string& suffix) {
  ChrRule out{r.name, rename_constraints(r.kept, suffix), rename_constraints(r.removed, suffix), {}, rename_constraints(r.body_user, suffix), {}};
  for (const auto& g : r.guard) out.guard.push_back({rename_term(g.lhs, suffix), g.strict, rename_term(g.rhs, suffix)});
  for (const auto& e : r.body_builtin) out.body_builtin.push_back({e.var + suffix, rename_term(e.rhs, suffix), e.chain});
  return out;
}

using Bindings = std::map<std::string, Term>;

// One-directional: a rule constant matches only an equal goal constant, a
// rule variable matches anything (consistently across its occurrences).
inline bool match_term(const Term& pattern, const Term& t, Bindings& b) {
  if (pattern.is_constant()) return pattern == t;
  if (auto it = b.find(pattern.name); it != b.end()) {
    if (it->second.kind == Term::Kind::symbol) return pattern.value == 0 && it->second == t;
    return it->second.plus(pattern.value) == t;
  }
  if (pattern.value != 0 && t.kind == Term::Kind::symbol) return false;
  b.emplace(pattern.name, t.plus(-pattern.value));
  return true;
}

inline std::optional<long> ground_value(const Term& t, const Bindings& b) {
  if (t.kind == Term::Kind::integer) return t.value;
  if (!t.is_variable()) return std::nullopt;
  auto it = b.find(t.name);
  if (it == b.end() || it->second.kind != Term::Kind::integer) return std::nullopt;
  return it->second.value + t.value;
}

inline bool guard_holds(const std::vector<Comparison>& guard, const Bindings& b) {
  for (const auto& g : guard) {
    auto l = ground_value(g.lhs, b), r = ground_value(g.rhs, b);
    if (!l || !r) return false;
    if (g.strict ? !(*l < *r) : !(*l <= *r)) return false;
  }
  return true;
}

}  // namespace detail

struct Transition {
  std::string rule;
  ChrState state;  // normalized
};

// All successors of `state` under one rule, deduplicated up to ≡.
inline std::vector<ChrState> apply_chr_rule(const ChrRule& rule, const ChrState& state, FreshVars& fresh) {
  const ChrState ns = normalize(state);
  if (ns.builtins.failed || ns.goal.empty()) return {};
  const ChrRule r = detail::rename_rule(rule, fresh.next_suffix());
  const std::vector<Constraint> head = r.head();
  if (head.empty()) return {};

  StateSet seen;
  std::vector<ChrState> out;
  std::vector<std::size_t> chosen(head.size());
  std::vector<bool> used(ns.goal.size(), false);

  auto emit = [&](const detail::Bindings& b) {
    if (!detail::guard_holds(r.guard, b)) return;
    ChrState next;
    std::vector<bool> drop(ns.goal.size(), false);
    for (std::size_t i = r.kept.size(); i < head.size(); ++i) drop[chosen[i]] = true;
    for (std::size_t j = 0; j < ns.goal.size(); ++j)
      if (!drop[j]) next.goal.push_back(ns.goal[j]);
    next.goal.insert(next.goal.end(), r.body_user.begin(), r.body_user.end());
    next.builtins = ns.builtins;
    for (const auto& [v, t] : b) next.builtins.equations.push_back({v, t, std::nullopt});
    next.builtins.equations.insert(next.builtins.equations.end(), r.body_builtin.begin(), r.body_builtin.end());
    next.globals = ns.globals;
    ChrState n = normalize(next);
    if (seen.insert(n)) out.push_back(std::move(n));
  };

  auto search = [&](auto&& self, std::size_t i, const detail::Bindings& b) -> void {
    if (i == head.size()) {
      emit(b);
      return;
    }
    const Constraint& h = head[i];
    for (std::size_t j = 0; j < ns.goal.size(); ++j) {
      const Constraint& g = ns.goal[j];
      if (used[j] || g.symbol != h.symbol || g.arity() != h.arity()) continue;
      detail::Bindings nb = b;
      bool ok = true;
      for (std::size_t k = 0; k < h.arity() && ok; ++k) ok = detail::match_term(h.args[k], g.args[k], nb);
      if (!ok) continue;
      used[j] = true;
      chosen[i] = j;
      self(self, i + 1, nb);
      used[j] = false;
    }
  };
  search(search, 0, {});
  return out;
}

// Successors under every rule, in rule order, deduplicated up to ≡.
inline std::vector<Transition> transitions(const ChrProgram& program, const ChrState& state, FreshVars& fresh) {
  std::vector<Transition> out;
  StateSet seen;
  for (const auto& r : program.rules)
    for (auto& s : apply_chr_rule(r, state, fresh))
      if (seen.insert(s)) out.push_back({r.name, std::move(s)});
  return out;
}

inline std::vector<ChrState> step_all(const ChrProgram& program, const ChrState& state) {
  FreshVars fresh = FreshVars::after(state);
  std::vector<ChrState> out;
  for (auto& t : transitions(program, state, fresh)) out.push_back(std::move(t.state));
  return out;
}

struct ChrNormalForms {
  std::vector<ChrState> finals;  // one per ≡-class, normalized
  bool exhausted = false;
  std::size_t explored = 0;
};

inline ChrNormalForms normal_forms_chr(const ChrProgram& program, const ChrState& state, const Limits& limits = {}) {
  if (limits.max_depth == 0 || limits.max_states == 0) throw Error("limits must be positive");
  ChrNormalForms result;
  FreshVars fresh = FreshVars::after(state);
  StateSet seen, finals;
  ChrState start = normalize(state);
  seen.insert(start);
  std::deque<std::pair<ChrState, std::size_t>> queue{{start, 0}};
  while (!queue.empty()) {
    auto [s, depth] = std::move(queue.front());
    queue.pop_front();
    ++result.explored;
    auto next = transitions(program, s, fresh);
    if (next.empty()) {
      if (finals.insert(s)) result.finals.push_back(std::move(s));
      continue;
    }
    if (depth >= limits.max_depth) {
      result.exhausted = true;
      continue;
    }
    for (auto& t : next) {
      if (!seen.insert(t.state)) continue;
      if (seen.size() > limits.max_states) {
        result.exhausted = true;
        return result;
      }
      queue.emplace_back(std::move(t.state), depth + 1);
    }
  }
  return result;
}

// A single committed-choice derivation taking the first successor each step.
struct ChrRun {
  std::vector<Transition> steps;
  ChrState final_state;
  bool exhausted = false;
};

inline ChrRun run_chr(const ChrProgram& program, const ChrState& state, const Limits& limits = {}) {
  ChrRun run;
  FreshVars fresh = FreshVars::after(state);
  ChrState current = normalize(state);
  for (;;) {
    auto next = transitions(program, current, fresh);
    if (next.empty()) break;
    if (run.steps.size() >= limits.max_depth) {
      run.exhausted = true;
      break;
    }
    current = next.front().state;
    run.steps.push_back(std::move(next.front()));
  }
  run.final_state = std::move(current);
  return run;
}

}  // namespace gtschr
