#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "gtschr/chr.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/encoding.hpp"

namespace gtschr {

// ============================================================================
// Overlaps
// ============================================================================

struct Overlap {
  std::string r1;
  std::string r2;
  std::vector<std::pair<std::size_t, std::size_t>> pairing;  // head index of r1, head index of r2
  ChrState sigma_cp;
  ChrState sigma1;
  ChrState sigma2;
  bool pruned = false;  // identifies an edge without both of its endpoint nodes
};

struct OverlapOptions {
  bool full_globals = true;  // all head variables global (strong joinability)
  bool prune = true;
};

namespace detail {

inline std::set<std::string> rule_variables(const ChrRule& r) {
  std::set<std::string> vs = goal_variables(r.head());
  for (const auto& v : goal_variables(r.body_user)) vs.insert(v);
  for (const auto& e : r.body_builtin) {
    vs.insert(e.var);
    if (e.rhs.is_variable()) vs.insert(e.rhs.name);
  }
  for (const auto& g : r.guard) {
    if (g.lhs.is_variable()) vs.insert(g.lhs.name);
    if (g.rhs.is_variable()) vs.insert(g.rhs.name);
  }
  return vs;
}

// Renames `r` apart from `other` by priming all of its variables.
inline ChrRule rename_apart(const ChrRule& r, const ChrRule& other) {
  const auto taken = rule_variables(other);
  const auto mine = rule_variables(r);
  std::string suffix = "'";
  for (;;) {
    bool clash = false;
    for (const auto& v : mine)
      if (taken.count(v + suffix)) clash = true;
    if (!clash) return rename_rule(r, suffix);
    suffix += "'";
  }
}

// Index of the node constraint in `head` whose identifier is `var`.
inline std::optional<std::size_t> node_with_id(const std::vector<Constraint>& head, const std::string& var,
                                               const TypeGraph& tg) {
  for (std::size_t i = 0; i < head.size(); ++i)
    if (tg.has_node_type(head[i].symbol) && head[i].arity() == 2 && head[i].args[0].is_variable() &&
        head[i].args[0].name == var)
      return i;
  return std::nullopt;
}

inline bool add_equation(BuiltinStore& store, const Term& a, const Term& b) {
  if (a.is_constant() && b.is_constant()) return a == b;
  if (a.is_variable()) {
    store.equations.push_back({a.name, b.plus(-a.value), std::nullopt});
  } else {
    store.equations.push_back({b.name, a.plus(-b.value), std::nullopt});
  }
  return true;
}

}  // namespace detail

// Overlaps of two rules: every non-empty symbol-respecting bijection between
// parts of the two heads whose unification is consistent, deduplicated up to
// ≡ (and up to swapping the sides when both rules are the same). Pruning needs
// a context to recognise edge and node constraints.
inline std::vector<Overlap> enumerate_overlaps(const ChrRule& rule1, const ChrRule& rule2,
                                               const EncodingContext* ctx = nullptr, const OverlapOptions& opts = {}) {
  const ChrRule& r1 = rule1;
  const ChrRule r2 = detail::rename_apart(rule2, rule1);
  const auto h1 = r1.head(), h2 = r2.head();
  const bool same_rule = rule1.name == rule2.name;
  const TypeGraph* tg = ctx && ctx->type_graph ? ctx->type_graph.get() : nullptr;

  std::vector<Overlap> out;
  std::vector<int> partner(h1.size(), -1);
  std::vector<bool> used(h2.size(), false);

  auto is_pruned = [&]() {
    if (!tg) return false;
    const std::size_t first = ctx->edge_identifiers ? 1 : 0;
    for (std::size_t i = 0; i < h1.size(); ++i) {
      if (partner[i] < 0 || !tg->find_edge_type(h1[i].symbol)) continue;
      const Constraint& e2 = h2[partner[i]];
      for (std::size_t k = first; k < first + 2 && k < h1[i].arity(); ++k) {
        auto n1 = detail::node_with_id(h1, h1[i].args[k].name, *tg);
        auto n2 = detail::node_with_id(h2, e2.args[k].name, *tg);
        if (n1 && n2 && partner[*n1] != static_cast<int>(*n2)) return true;
      }
    }
    return false;
  };

  auto duplicate = [&](const Overlap& o) {
    for (const auto& p : out) {
      if (!detail::normalized_equivalent(p.sigma_cp, o.sigma_cp)) continue;
      if (detail::normalized_equivalent(p.sigma1, o.sigma1) && detail::normalized_equivalent(p.sigma2, o.sigma2))
        return true;
      if (same_rule && detail::normalized_equivalent(p.sigma1, o.sigma2) &&
          detail::normalized_equivalent(p.sigma2, o.sigma1))
        return true;
    }
    return false;
  };

  auto build = [&]() {
    Overlap o{rule1.name, rule2.name, {}, {}, {}, {}, false};
    ChrState cp;
    for (std::size_t i = 0; i < h1.size(); ++i) {
      if (partner[i] < 0) continue;
      o.pairing.emplace_back(i, static_cast<std::size_t>(partner[i]));
      for (std::size_t k = 0; k < h1[i].arity(); ++k)
        if (!detail::add_equation(cp.builtins, h1[i].args[k], h2[partner[i]].args[k])) return;
    }
    if (o.pairing.empty()) return;
    o.pruned = opts.prune && is_pruned();

    cp.goal = h1;
    for (std::size_t j = 0; j < h2.size(); ++j)
      if (!used[j]) cp.goal.push_back(h2[j]);
    if (opts.full_globals) {
      cp.globals = goal_variables(h1);
      for (const auto& v : goal_variables(h2)) cp.globals.insert(v);
    }

    ChrState s1{{}, cp.builtins, cp.globals};
    for (std::size_t i = 0; i < r1.kept.size(); ++i) s1.goal.push_back(h1[i]);
    for (std::size_t j = 0; j < h2.size(); ++j)
      if (!used[j]) s1.goal.push_back(h2[j]);
    s1.goal.insert(s1.goal.end(), r1.body_user.begin(), r1.body_user.end());
    s1.builtins.equations.insert(s1.builtins.equations.end(), r1.body_builtin.begin(), r1.body_builtin.end());

    ChrState s2{{}, cp.builtins, cp.globals};
    for (std::size_t i = 0; i < h1.size(); ++i)
      if (partner[i] < 0 || static_cast<std::size_t>(partner[i]) < r2.kept.size()) s2.goal.push_back(h1[i]);
    for (std::size_t j = 0; j < r2.kept.size(); ++j)
      if (!used[j]) s2.goal.push_back(h2[j]);
    s2.goal.insert(s2.goal.end(), r2.body_user.begin(), r2.body_user.end());
    s2.builtins.equations.insert(s2.builtins.equations.end(), r2.body_builtin.begin(), r2.body_builtin.end());

    o.sigma_cp = normalize(cp);
    if (o.sigma_cp.builtins.failed) return;
    o.sigma1 = normalize(s1);
    o.sigma2 = normalize(s2);
    if (!duplicate(o)) out.push_back(std::move(o));
  };

  auto search = [&](auto&& self, std::size_t i) -> void {
    if (i == h1.size()) {
      build();
      return;
    }
    self(self, i + 1);
    for (std::size_t j = 0; j < h2.size(); ++j) {
      if (used[j] || h2[j].symbol != h1[i].symbol || h2[j].arity() != h1[i].arity()) continue;
      used[j] = true;
      partner[i] = static_cast<int>(j);
      self(self, i + 1);
      partner[i] = -1;
      used[j] = false;
    }
  };
  search(search, 0);
  return out;
}

enum class GStatus { valid, violation };

struct GCheckedOverlap {
  Overlap overlap;
  GStatus status = GStatus::valid;
  std::string violation;
};

// Pruned overlaps are tagged without running the check.
inline std::vector<GCheckedOverlap> filter_g_valid(const std::vector<Overlap>& overlaps, const EncodingContext& ctx) {
  std::vector<GCheckedOverlap> out;
  for (const auto& o : overlaps) {
    if (o.pruned) {
      out.push_back({o, GStatus::violation, "duplicate node encoding: edge identified without its endpoints"});
      continue;
    }
    auto r = check_graph_invariant(o.sigma_cp, ctx);
    if (auto* v = std::get_if<InvariantViolation>(&r))
      out.push_back({o, GStatus::violation, v->kind + ": " + v->detail});
    else
      out.push_back({o, GStatus::valid, {}});
  }
  return out;
}

// ============================================================================
// Joinability
// ============================================================================

enum class JoinStatus { joinable, not_joinable, exhausted, skipped };

inline std::string_view to_string(JoinStatus s) {
  switch (s) {
    case JoinStatus::joinable: return "joinable";
    case JoinStatus::not_joinable: return "not-joinable";
    case JoinStatus::exhausted: return "exhausted";
    case JoinStatus::skipped: return "skipped";
  }
  return "?";
}

inline JoinStatus check_joinability(const ChrProgram& program, const ChrState& s1, const ChrState& s2,
                                    const Limits& limits = {}) {
  if (states_equivalent(s1, s2)) return JoinStatus::joinable;
  auto nf1 = normal_forms_chr(program, s1, limits);
  auto nf2 = normal_forms_chr(program, s2, limits);
  for (const auto& a : nf1.finals)
    for (const auto& b : nf2.finals)
      if (detail::normalized_equivalent(a, b)) return JoinStatus::joinable;
  return nf1.exhausted || nf2.exhausted ? JoinStatus::exhausted : JoinStatus::not_joinable;
}

// ============================================================================
// Confluence
// ============================================================================

enum class ConfluenceVerdict { g_confluent, not_strongly_joinable, inconclusive };

inline std::string_view to_string(ConfluenceVerdict v) {
  switch (v) {
    case ConfluenceVerdict::g_confluent: return "G_CONFLUENT";
    case ConfluenceVerdict::not_strongly_joinable: return "NOT_STRONGLY_JOINABLE";
    case ConfluenceVerdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

struct OverlapResult {
  Overlap overlap;
  GStatus g_status = GStatus::valid;
  std::string violation;
  JoinStatus join_status = JoinStatus::skipped;
};

struct ConfluenceReport {
  std::vector<OverlapResult> overlaps;
  ConfluenceVerdict verdict = ConfluenceVerdict::g_confluent;
  std::vector<std::size_t> witnesses;  // indices of non-joinable overlaps

  std::size_t violating() const {
    std::size_t n = 0;
    for (const auto& o : overlaps) n += o.g_status == GStatus::violation;
    return n;
  }
  std::size_t joinable() const {
    std::size_t n = 0;
    for (const auto& o : overlaps) n += o.join_status == JoinStatus::joinable;
    return n;
  }
};

struct ConfluenceOptions {
  OverlapOptions overlap;
  Limits limits;
};

inline ConfluenceReport check_confluence(const ChrProgram& program, const EncodingContext& ctx,
                                         const ConfluenceOptions& opts = {}) {
  ConfluenceReport report;
  bool exhausted = false;
  for (std::size_t i = 0; i < program.rules.size(); ++i)
    for (std::size_t j = i; j < program.rules.size(); ++j) {
      auto overlaps = enumerate_overlaps(program.rules[i], program.rules[j], &ctx, opts.overlap);
      for (auto& checked : filter_g_valid(overlaps, ctx)) {
        OverlapResult r{std::move(checked.overlap), checked.status, std::move(checked.violation), JoinStatus::skipped};
        if (r.g_status == GStatus::valid)
          r.join_status = check_joinability(program, r.overlap.sigma1, r.overlap.sigma2, opts.limits);
        if (r.join_status == JoinStatus::not_joinable) report.witnesses.push_back(report.overlaps.size());
        exhausted |= r.join_status == JoinStatus::exhausted;
        report.overlaps.push_back(std::move(r));
      }
    }
  if (!report.witnesses.empty())
    report.verdict = ConfluenceVerdict::not_strongly_joinable;
  else if (exhausted)
    report.verdict = ConfluenceVerdict::inconclusive;
  return report;
}

inline EncodingContext context_for(const Gts& gts, const EncoderOptions& enc = {}) {
  return EncodingContext{gts.type_graph, enc.edge_identifiers};
}

inline ConfluenceReport check_confluence(const Gts& gts, const EncoderOptions& enc = {},
                                         const ConfluenceOptions& opts = {}) {
  return check_confluence(encode_gts(gts, enc), context_for(gts, enc), opts);
}

// Every critical GTS pair of the two rules has an isomorphic decoded 𝒢-valid overlap.
inline bool cross_validate_overlaps(const DpoRule& r1, const DpoRule& r2, const EncoderOptions& enc = {}) {
  const EncodingContext ctx{r1.left.type_graph, enc.edge_identifiers};
  std::unordered_set<std::string> decoded;
  auto overlaps = enumerate_overlaps(encode_rule(r1, enc), encode_rule(r2, enc), &ctx);
  for (const auto& c : filter_g_valid(overlaps, ctx))
    if (c.status == GStatus::valid) decoded.insert(canonical_form(decode(c.overlap.sigma_cp, ctx).graph));
  for (const auto& cp : gts_critical_pairs(r1, r2))
    if (!decoded.count(canonical_form(cp.overlap))) return false;
  return true;
}

}  // namespace gtschr
