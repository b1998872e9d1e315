#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gtschr/error.hpp"
#include "gtschr/graph.hpp"
#include "gtschr/limits.hpp"

namespace gtschr {

// ============================================================================
// Rules and systems
// ============================================================================

// Ids of the interface graph K; both L and R contain K by id sharing.
struct Interface {
  std::set<std::string> nodes;
  std::set<std::string> edges;

  friend bool operator==(const Interface&, const Interface&) = default;
};

struct DpoRule {
  std::string name;
  TypedGraph left;
  Interface interface;
  TypedGraph right;

  bool preserves_node(const std::string& id) const { return interface.nodes.count(id) > 0; }
  bool preserves_edge(const std::string& id) const { return interface.edges.count(id) > 0; }

  TypedGraph interface_graph() const {
    TypedGraph k(left.type_graph);
    for (const auto& n : left.nodes)
      if (preserves_node(n.id)) k.add_node(n.id, n.type);
    for (const auto& e : left.edges)
      if (preserves_edge(e.id)) k.add_edge(e.id, e.type, e.src, e.tgt);
    return k;
  }
};

struct Gts {
  std::shared_ptr<const TypeGraph> type_graph;
  std::vector<DpoRule> rules;

  const DpoRule* rule(std::string_view name) const {
    for (const auto& r : rules)
      if (r.name == name) return &r;
    return nullptr;
  }
};

inline std::vector<std::string> validate_rule(const DpoRule& r) {
  std::vector<std::string> problems;
  auto prefix = "rule '" + r.name + "': ";
  for (const auto& v : validate(r.left)) problems.push_back(prefix + "L: " + v.message);
  for (const auto& v : validate(r.right)) problems.push_back(prefix + "R: " + v.message);
  if (!same_type_graph(r.left, r.right)) problems.push_back(prefix + "L and R use different type graphs");

  for (const auto& id : r.interface.nodes) {
    const Node* l = r.left.node(id);
    const Node* rr = r.right.node(id);
    if (!l || !rr)
      problems.push_back(prefix + "interface node '" + id + "' missing from " + (l ? "R" : "L"));
    else if (l->type != rr->type)
      problems.push_back(prefix + "interface node '" + id + "' typed differently in L and R");
  }
  for (const auto& id : r.interface.edges) {
    const Edge* l = r.left.edge(id);
    const Edge* rr = r.right.edge(id);
    if (!l || !rr) {
      problems.push_back(prefix + "interface edge '" + id + "' missing from " + (l ? "R" : "L"));
      continue;
    }
    if (!(*l == *rr)) problems.push_back(prefix + "interface edge '" + id + "' differs between L and R");
    if (!r.preserves_node(l->src) || !r.preserves_node(l->tgt))
      problems.push_back(prefix + "interface edge '" + id + "' has an endpoint outside the interface");
  }
  for (const auto& n : r.right.nodes)
    if (r.left.node(n.id) && !r.preserves_node(n.id))
      problems.push_back(prefix + "node id '" + n.id + "' occurs in L and R but not in the interface");
  for (const auto& e : r.right.edges)
    if (r.left.edge(e.id) && !r.preserves_edge(e.id))
      problems.push_back(prefix + "edge id '" + e.id + "' occurs in L and R but not in the interface");
  return problems;
}

inline std::vector<std::string> validate_gts(const Gts& s) {
  std::vector<std::string> problems;
  if (s.type_graph)
    for (const auto& p : validate_type_graph(*s.type_graph)) problems.push_back("type graph: " + p);
  std::set<std::string> names;
  for (const auto& r : s.rules) {
    if (!names.insert(r.name).second) problems.push_back("duplicate rule name '" + r.name + "'");
    auto rp = validate_rule(r);
    problems.insert(problems.end(), rp.begin(), rp.end());
    TypedGraph probe(s.type_graph);
    if (!same_type_graph(r.left, probe)) problems.push_back("rule '" + r.name + "' uses a different type graph");
  }
  return problems;
}

// ============================================================================
// Matching and gluing
// ============================================================================

struct Match {
  std::string rule;
  GraphMorphism morphism;
};

struct GluingReport {
  bool satisfied = true;
  std::vector<std::string> dangling_edges;
};

// All injective matches L -> host, in lexicographic order of the node then edge assignment.
inline std::vector<Match> find_matches(const DpoRule& rule, const TypedGraph& host) {
  if (!same_type_graph(rule.left, host)) throw Error("find_matches: type graph mismatch");
  const auto& ln = rule.left.nodes;
  const auto& le = rule.left.edges;
  std::vector<Match> out;
  GraphMorphism m;
  std::set<std::string> used_nodes, used_edges;

  auto match_edges = [&](auto&& self, std::size_t i) -> void {
    if (i == le.size()) {
      out.push_back(Match{rule.name, m});
      return;
    }
    const Edge& e = le[i];
    const std::string& s = m.nodes.at(e.src);
    const std::string& t = m.nodes.at(e.tgt);
    for (const auto& h : host.edges) {
      if (h.type != e.type || h.src != s || h.tgt != t || used_edges.count(h.id)) continue;
      m.edges[e.id] = h.id;
      used_edges.insert(h.id);
      self(self, i + 1);
      used_edges.erase(h.id);
      m.edges.erase(e.id);
    }
  };

  auto match_nodes = [&](auto&& self, std::size_t i) -> void {
    if (i == ln.size()) {
      match_edges(match_edges, 0);
      return;
    }
    for (const auto& h : host.nodes) {
      if (h.type != ln[i].type || used_nodes.count(h.id)) continue;
      m.nodes[ln[i].id] = h.id;
      used_nodes.insert(h.id);
      self(self, i + 1);
      used_nodes.erase(h.id);
      m.nodes.erase(ln[i].id);
    }
  };
  match_nodes(match_nodes, 0);
  return out;
}

inline GluingReport check_gluing(const DpoRule& rule, const Match& match, const TypedGraph& host) {
  const auto& m = match.morphism;
  if (m.nodes.size() != rule.left.nodes.size() || m.edges.size() != rule.left.edges.size() || !m.injective())
    throw Error("check_gluing: match of rule '" + rule.name + "' is not a total injective morphism");
  std::set<std::string> deleted, image_edges;
  for (const auto& n : rule.left.nodes)
    if (!rule.preserves_node(n.id)) deleted.insert(m.nodes.at(n.id));
  for (const auto& [l, h] : m.edges) image_edges.insert(h);
  GluingReport report;
  for (const auto& e : host.edges) {
    if (image_edges.count(e.id)) continue;
    if (deleted.count(e.src) || deleted.count(e.tgt)) report.dangling_edges.push_back(e.id);
  }
  report.satisfied = report.dangling_edges.empty();
  return report;
}

// ============================================================================
// Rule application
// ============================================================================

// Monotone counter for ids of created elements; skips ids already in use.
class FreshIds {
 public:
  explicit FreshIds(std::string prefix = "x") : prefix_(std::move(prefix)) {}

  std::string node(const TypedGraph& g) {
    return next([&](const std::string& id) { return g.node(id) != nullptr; });
  }
  std::string edge(const TypedGraph& g) {
    return next([&](const std::string& id) { return g.edge(id) != nullptr; });
  }

 private:
  std::string next(const std::function<bool(const std::string&)>& taken) {
    std::string id;
    do id = prefix_ + std::to_string(++counter_);
    while (taken(id));
    return id;
  }

  std::string prefix_;
  std::size_t counter_ = 0;
};

class GluingViolation : public Error {
 public:
  explicit GluingViolation(GluingReport r)
      : Error("gluing condition violated: dangling edges present"), report_(std::move(r)) {}
  const GluingReport& report() const noexcept { return report_; }

 private:
  GluingReport report_;
};

struct DerivationStep {
  TypedGraph before;
  TypedGraph after;
  std::string rule;
  Match match;
  GraphMorphism comatch;  // R -> after
  GraphMorphism track;    // partial, before -> after
};

inline DerivationStep apply(const DpoRule& rule, const Match& match, const TypedGraph& host, FreshIds& fresh) {
  GluingReport gluing = check_gluing(rule, match, host);
  if (!gluing.satisfied) throw GluingViolation(std::move(gluing));
  const auto& m = match.morphism;

  DerivationStep step{host, host, rule.name, match, {}, {}};
  TypedGraph& h = step.after;
  for (const auto& e : rule.left.edges)
    if (!rule.preserves_edge(e.id)) h.remove_edge(m.edges.at(e.id));
  for (const auto& n : rule.left.nodes)
    if (!rule.preserves_node(n.id)) h.remove_node(m.nodes.at(n.id));
  for (const auto& n : h.nodes) step.track.nodes[n.id] = n.id;
  for (const auto& e : h.edges) step.track.edges[e.id] = e.id;

  for (const auto& n : rule.right.nodes) {
    if (rule.preserves_node(n.id)) {
      step.comatch.nodes[n.id] = m.nodes.at(n.id);
      continue;
    }
    std::string id = fresh.node(h);
    h.add_node(id, n.type);
    step.comatch.nodes[n.id] = id;
  }
  for (const auto& e : rule.right.edges) {
    if (rule.preserves_edge(e.id)) {
      step.comatch.edges[e.id] = m.edges.at(e.id);
      continue;
    }
    std::string id = fresh.edge(h);
    h.add_edge(id, e.type, step.comatch.nodes.at(e.src), step.comatch.nodes.at(e.tgt));
    step.comatch.edges[e.id] = id;
  }
  return step;
}

// One step per rule and gluing-satisfying match; each step numbers fresh ids from 1.
inline std::vector<DerivationStep> derive_all(const Gts& gts, const TypedGraph& host) {
  std::vector<DerivationStep> out;
  for (const auto& r : gts.rules)
    for (const auto& m : find_matches(r, host)) {
      if (!check_gluing(r, m, host).satisfied) continue;
      FreshIds fresh;
      out.push_back(apply(r, m, host, fresh));
    }
  return out;
}

struct GtsNormalForms {
  std::vector<TypedGraph> finals;  // one representative per isomorphism class
  bool exhausted = false;
  std::size_t explored = 0;
};

inline GtsNormalForms normal_forms_gts(const Gts& gts, const TypedGraph& host, const Limits& limits = {}) {
  if (limits.max_depth == 0 || limits.max_states == 0) throw Error("limits must be positive");
  GtsNormalForms result;
  std::unordered_set<std::string> seen{canonical_form(host)}, final_forms;
  std::deque<std::pair<TypedGraph, std::size_t>> queue{{host, 0}};
  while (!queue.empty()) {
    auto [g, depth] = std::move(queue.front());
    queue.pop_front();
    ++result.explored;
    auto steps = derive_all(gts, g);
    if (steps.empty()) {
      if (final_forms.insert(canonical_form(g)).second) result.finals.push_back(std::move(g));
      continue;
    }
    if (depth >= limits.max_depth) {
      result.exhausted = true;
      continue;
    }
    for (auto& s : steps) {
      if (!seen.insert(canonical_form(s.after)).second) continue;
      if (seen.size() > limits.max_states) {
        result.exhausted = true;
        return result;
      }
      queue.emplace_back(std::move(s.after), depth + 1);
    }
  }
  return result;
}

// ============================================================================
// Merge variants
// ============================================================================

namespace detail {

// Restricted-growth enumeration of set partitions of `items` whose blocks only
// contain pairwise `compatible` items. Each partition is a block index per item.
template <class Compatible>
std::vector<std::vector<int>> partitions(std::size_t count, Compatible compatible) {
  std::vector<std::vector<int>> out;
  std::vector<int> block(count, -1);
  auto go = [&](auto&& self, std::size_t i, int blocks) -> void {
    if (i == count) {
      out.push_back(block);
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j)
        if (block[j] == b && !compatible(j, i)) ok = false;
      if (!ok) continue;
      block[i] = b;
      self(self, i + 1, b == blocks ? blocks + 1 : blocks);
    }
    block[i] = -1;
  };
  go(go, 0, 0);
  return out;
}

inline std::string rename_or_keep(const std::map<std::string, std::string>& m, const std::string& id) {
  auto it = m.find(id);
  return it == m.end() ? id : it->second;
}

}  // namespace detail

// Rules simulating non-injective matches: one per merge of interface elements.
// The trivial merge (the rule itself) comes first.
inline std::vector<DpoRule> merge_variants(const DpoRule& rule) {
  std::vector<const Node*> kn;
  for (const auto& n : rule.left.nodes)
    if (rule.preserves_node(n.id)) kn.push_back(&n);
  std::vector<const Edge*> ke;
  for (const auto& e : rule.left.edges)
    if (rule.preserves_edge(e.id)) ke.push_back(&e);

  std::vector<DpoRule> out;
  auto node_parts = detail::partitions(kn.size(), [&](std::size_t a, std::size_t b) { return kn[a]->type == kn[b]->type; });
  for (const auto& np : node_parts) {
    std::map<std::string, std::string> node_rep;
    std::vector<std::string> first(kn.size());
    for (std::size_t i = 0; i < kn.size(); ++i) {
      if (first[np[i]].empty()) first[np[i]] = kn[i]->id;
      node_rep[kn[i]->id] = first[np[i]];
    }
    auto ends = [&](const Edge* e) {
      return std::make_pair(node_rep.at(e->src), node_rep.at(e->tgt));
    };
    auto edge_parts = detail::partitions(ke.size(), [&](std::size_t a, std::size_t b) {
      return ke[a]->type == ke[b]->type && ends(ke[a]) == ends(ke[b]);
    });
    for (const auto& ep : edge_parts) {
      std::map<std::string, std::string> edge_rep;
      std::vector<std::string> efirst(ke.size());
      for (std::size_t i = 0; i < ke.size(); ++i) {
        if (efirst[ep[i]].empty()) efirst[ep[i]] = ke[i]->id;
        edge_rep[ke[i]->id] = efirst[ep[i]];
      }

      std::string tag;
      for (const auto& [from, to] : node_rep)
        if (from != to) tag += (tag.empty() ? "" : ",") + to + "=" + from;
      for (const auto& [from, to] : edge_rep)
        if (from != to) tag += (tag.empty() ? "" : ",") + to + "=" + from;

      DpoRule merged{tag.empty() ? rule.name : rule.name + "[" + tag + "]", TypedGraph(rule.left.type_graph), {},
                     TypedGraph(rule.right.type_graph)};
      auto copy = [&](const TypedGraph& src, TypedGraph& dst) {
        for (const auto& n : src.nodes) {
          std::string id = detail::rename_or_keep(node_rep, n.id);
          if (!dst.node(id)) dst.add_node(id, n.type);
        }
        for (const auto& e : src.edges) {
          std::string id = detail::rename_or_keep(edge_rep, e.id);
          if (!dst.edge(id))
            dst.add_edge(id, e.type, detail::rename_or_keep(node_rep, e.src), detail::rename_or_keep(node_rep, e.tgt));
        }
      };
      copy(rule.left, merged.left);
      copy(rule.right, merged.right);
      for (const auto& id : rule.interface.nodes) merged.interface.nodes.insert(node_rep.at(id));
      for (const auto& id : rule.interface.edges) merged.interface.edges.insert(edge_rep.at(id));
      out.push_back(std::move(merged));
    }
  }
  return out;
}

// ============================================================================
// Critical pairs
// ============================================================================

struct CriticalGtsPair {
  TypedGraph overlap;
  GraphMorphism m1;
  GraphMorphism m2;
  bool parallel_dependent = true;
};

struct CriticalPairOptions {
  bool include_independent = false;  // also return parallel independent overlaps
};

// Jointly surjective overlaps of two left-hand sides, built from partial
// injective identifications of L1 into L2. Elements of L1 get ids "a"+id,
// elements only in L2 get "b"+id.
inline std::vector<CriticalGtsPair> gts_critical_pairs(const DpoRule& r1, const DpoRule& r2,
                                                       const CriticalPairOptions& opts = {}) {
  if (!same_type_graph(r1.left, r2.left)) throw Error("gts_critical_pairs: type graph mismatch");
  const auto& n1 = r1.left.nodes;
  const auto& e1 = r1.left.edges;
  std::map<std::string, std::string> node_pair, edge_pair;  // L1 id -> L2 id
  std::set<std::string> used_n2, used_e2;
  std::vector<CriticalGtsPair> out;

  auto build = [&]() {
    if (node_pair.empty() && edge_pair.empty()) return;
    CriticalGtsPair cp{TypedGraph(r1.left.type_graph), {}, {}, false};
    for (const auto& n : n1) {
      cp.overlap.add_node("a" + n.id, n.type);
      cp.m1.nodes[n.id] = "a" + n.id;
    }
    for (const auto& n : r2.left.nodes) {
      std::string id = "b" + n.id;
      for (const auto& [a, b] : node_pair)
        if (b == n.id) id = "a" + a;
      if (!used_n2.count(n.id)) cp.overlap.add_node(id, n.type);
      cp.m2.nodes[n.id] = id;
    }
    for (const auto& e : e1) {
      cp.overlap.add_edge("a" + e.id, e.type, "a" + e.src, "a" + e.tgt);
      cp.m1.edges[e.id] = "a" + e.id;
    }
    for (const auto& e : r2.left.edges) {
      std::string id = "b" + e.id;
      for (const auto& [a, b] : edge_pair)
        if (b == e.id) id = "a" + a;
      if (!used_e2.count(e.id)) cp.overlap.add_edge(id, e.type, cp.m2.nodes.at(e.src), cp.m2.nodes.at(e.tgt));
      cp.m2.edges[e.id] = id;
    }
    for (const auto& [a, b] : node_pair)
      if (!r1.preserves_node(a) || !r2.preserves_node(b)) cp.parallel_dependent = true;
    for (const auto& [a, b] : edge_pair)
      if (!r1.preserves_edge(a) || !r2.preserves_edge(b)) cp.parallel_dependent = true;
    if (!cp.parallel_dependent && !opts.include_independent) return;
    if (!check_gluing(r1, Match{r1.name, cp.m1}, cp.overlap).satisfied) return;
    if (!check_gluing(r2, Match{r2.name, cp.m2}, cp.overlap).satisfied) return;
    out.push_back(std::move(cp));
  };

  auto pair_edges = [&](auto&& self, std::size_t i) -> void {
    if (i == e1.size()) {
      build();
      return;
    }
    self(self, i + 1);  // leave e1[i] unidentified
    const Edge& a = e1[i];
    auto s = node_pair.find(a.src), t = node_pair.find(a.tgt);
    if (s == node_pair.end() || t == node_pair.end()) return;
    for (const auto& b : r2.left.edges) {
      if (used_e2.count(b.id) || b.type != a.type || b.src != s->second || b.tgt != t->second) continue;
      edge_pair[a.id] = b.id;
      used_e2.insert(b.id);
      self(self, i + 1);
      used_e2.erase(b.id);
      edge_pair.erase(a.id);
    }
  };

  auto pair_nodes = [&](auto&& self, std::size_t i) -> void {
    if (i == n1.size()) {
      pair_edges(pair_edges, 0);
      return;
    }
    self(self, i + 1);
    for (const auto& b : r2.left.nodes) {
      if (used_n2.count(b.id) || b.type != n1[i].type) continue;
      node_pair[n1[i].id] = b.id;
      used_n2.insert(b.id);
      self(self, i + 1);
      used_n2.erase(b.id);
      node_pair.erase(n1[i].id);
    }
  };
  pair_nodes(pair_nodes, 0);
  return out;
}

}  // namespace gtschr
