#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gtschr/chr.hpp"
#include "gtschr/confluence.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/encoding.hpp"
#include "gtschr/error.hpp"

namespace gtschr {

// ============================================================================
// Critical states
// ============================================================================

struct CriticalState {
  std::string source;  // "P1:rule" or "P2:rule"
  ChrState state;      // normalized
};

namespace detail {

inline std::map<std::string, std::size_t> program_symbols(const ChrProgram& p) {
  std::map<std::string, std::size_t> out;
  auto note = [&](const std::vector<Constraint>& cs) {
    for (const auto& c : cs) {
      auto [it, inserted] = out.emplace(c.symbol, c.arity());
      if (!inserted && it->second != c.arity())
        throw PreconditionError("constraint symbol '" + c.symbol + "' is used with different arities");
    }
  };
  for (const auto& r : p.rules) {
    note(r.head());
    note(r.body_user);
  }
  return out;
}

inline void require_shared_symbols(const ChrProgram& p1, const ChrProgram& p2) {
  auto s1 = program_symbols(p1), s2 = program_symbols(p2);
  bool shared = false;
  for (const auto& [sym, arity] : s1) {
    auto it = s2.find(sym);
    if (it == s2.end()) continue;
    if (it->second != arity)
      throw PreconditionError("constraint symbol '" + sym + "' has arity " + std::to_string(arity) + " in P1 and " +
                              std::to_string(it->second) + " in P2");
    shared = true;
  }
  if (!shared && !s1.empty() && !s2.empty()) throw PreconditionError("the programs share no constraint symbols");
}

}  // namespace detail

// ⟨head, ⊤, vars(head)⟩ for every rule of both programs, deduplicated up to ≡.
inline std::vector<CriticalState> critical_states(const ChrProgram& p1, const ChrProgram& p2) {
  detail::require_shared_symbols(p1, p2);
  std::vector<CriticalState> out;
  StateSet seen;
  auto add = [&](const ChrProgram& p, const std::string& tag) {
    for (const auto& r : p.rules) {
      ChrState st{r.head(), BuiltinStore::top(), goal_variables(r.head())};
      st = normalize(st);
      if (seen.insert(st)) out.push_back({tag + ":" + r.name, std::move(st)});
    }
  };
  add(p1, "P1");
  add(p2, "P2");
  return out;
}

// ============================================================================
// P1,P2-joinability
// ============================================================================

struct P1P2Result {
  JoinStatus status = JoinStatus::joinable;
  ChrState final1;
  ChrState final2;
};

// Runs the state to a final state under each program, committing to the
// first applicable rule and match at each step, and compares the results.
inline P1P2Result check_p1p2_joinable(const ChrProgram& p1, const ChrProgram& p2, const ChrState& state,
                                      const Limits& limits = {}) {
  ChrRun a = run_chr(p1, state, limits);
  ChrRun b = run_chr(p2, state, limits);
  P1P2Result r{JoinStatus::joinable, a.final_state, b.final_state};
  if (a.exhausted || b.exhausted)
    r.status = JoinStatus::exhausted;
  else if (!detail::normalized_equivalent(a.final_state, b.final_state))
    r.status = JoinStatus::not_joinable;
  return r;
}

// ============================================================================
// Operational equivalence
// ============================================================================

enum class OpEqVerdict { equivalent, not_proven, inconclusive };

inline std::string_view to_string(OpEqVerdict v) {
  switch (v) {
    case OpEqVerdict::equivalent: return "EQUIVALENT";
    case OpEqVerdict::not_proven: return "NOT_PROVEN";
    case OpEqVerdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

struct CriticalStateResult {
  CriticalState critical;
  P1P2Result result;
};

struct Precondition {
  std::string program;
  std::string status;  // "attested" or a confluence verdict
};

struct OpEqReport {
  std::vector<CriticalStateResult> critical_states;
  OpEqVerdict verdict = OpEqVerdict::equivalent;
  std::vector<Precondition> preconditions;
};

struct OpEqOptions {
  bool attest = false;  // user vouches for termination and confluence
  ConfluenceOptions confluence;
  Limits limits;
};

namespace detail {

inline Precondition confluence_precondition(const ChrProgram& p, const std::string& name, const EncodingContext& ctx,
                                            const OpEqOptions& opts) {
  if (opts.attest) return {name, "attested"};
  auto report = check_confluence(p, ctx, opts.confluence);
  std::string verdict(to_string(report.verdict));
  if (report.verdict != ConfluenceVerdict::g_confluent)
    throw PreconditionError(name + " is not shown confluent (" + verdict +
                            "); pass --attest to vouch for confluence and termination");
  return {name, verdict};
}

}  // namespace detail

inline OpEqReport check_op_equivalence(const ChrProgram& p1, const ChrProgram& p2, const EncodingContext& ctx,
                                       const OpEqOptions& opts = {}) {
  OpEqReport report;
  report.preconditions.push_back(detail::confluence_precondition(p1, "P1", ctx, opts));
  report.preconditions.push_back(detail::confluence_precondition(p2, "P2", ctx, opts));
  bool exhausted = false, failed = false;
  for (auto& cs : critical_states(p1, p2)) {
    P1P2Result r = check_p1p2_joinable(p1, p2, cs.state, opts.limits);
    failed |= r.status == JoinStatus::not_joinable;
    exhausted |= r.status == JoinStatus::exhausted;
    report.critical_states.push_back({std::move(cs), std::move(r)});
  }
  report.verdict = failed ? OpEqVerdict::not_proven : exhausted ? OpEqVerdict::inconclusive : OpEqVerdict::equivalent;
  return report;
}

inline OpEqReport check_op_equivalence(const Gts& s1, const Gts& s2, const EncoderOptions& enc = {},
                                       const OpEqOptions& opts = {}) {
  if (!s1.type_graph || !s2.type_graph || !(*s1.type_graph == *s2.type_graph))
    throw PreconditionError("the two systems are typed over different type graphs");
  return check_op_equivalence(encode_gts(s1, enc), encode_gts(s2, enc), context_for(s1, enc), opts);
}

// ============================================================================
// Redundant rules
// ============================================================================

struct RuleRedundancy {
  std::string rule;
  bool removable = false;
  std::optional<OpEqReport> evidence;
  std::string note;
};

struct RedundancyReport {
  std::vector<RuleRedundancy> rules;  // in the order they were tried
  std::vector<std::string> remaining;

  std::vector<std::string> removed() const {
    std::vector<std::string> out;
    for (const auto& r : rules)
      if (r.removable) out.push_back(r.rule);
    return out;
  }
};

// Greedy: tries to drop each rule in order from the current system and keeps
// the drop when the reduced system is shown operationally equivalent.
inline RedundancyReport redundant_rules(const Gts& gts, const EncoderOptions& enc = {}, const OpEqOptions& opts = {}) {
  const EncodingContext ctx = context_for(gts, enc);
  ChrProgram current = encode_gts(gts, enc);
  detail::confluence_precondition(current, "input program", ctx, opts);

  RedundancyReport report;
  for (const auto& dpo : gts.rules) {
    ChrProgram reduced;
    for (const auto& r : current.rules)
      if (r.name != dpo.name) reduced.rules.push_back(r);

    RuleRedundancy entry{dpo.name, false, std::nullopt, {}};
    if (!opts.attest) {
      auto conf = check_confluence(reduced, ctx, opts.confluence);
      if (conf.verdict != ConfluenceVerdict::g_confluent) {
        entry.note = "program without this rule is " + std::string(to_string(conf.verdict));
        report.rules.push_back(std::move(entry));
        continue;
      }
    }
    OpEqOptions inner = opts;
    inner.attest = true;
    OpEqReport eq = check_op_equivalence(current, reduced, ctx, inner);
    if (!opts.attest)
      for (auto& p : eq.preconditions) p.status = std::string(to_string(ConfluenceVerdict::g_confluent));
    entry.removable = eq.verdict == OpEqVerdict::equivalent;
    entry.evidence = std::move(eq);
    if (entry.removable) current = std::move(reduced);
    report.rules.push_back(std::move(entry));
  }
  for (const auto& r : current.rules) report.remaining.push_back(r.name);
  return report;
}

}  // namespace gtschr
