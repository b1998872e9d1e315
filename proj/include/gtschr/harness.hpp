#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "gtschr/chr.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/encoding.hpp"
#include "gtschr/graph.hpp"

namespace gtschr {

// ============================================================================
// Random instances
// ============================================================================

inline std::size_t uniform(std::mt19937& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(std::mt19937& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// One or two node types, one or two edge types between random node types.
inline std::shared_ptr<const TypeGraph> random_type_graph(std::mt19937& rng) {
  auto tg = std::make_shared<TypeGraph>();
  std::size_t nt = uniform(rng, 1, 2), et = uniform(rng, 1, 2);
  for (std::size_t i = 0; i < nt; ++i) tg->node_types.push_back("n" + std::to_string(i));
  for (std::size_t i = 0; i < et; ++i)
    tg->edge_types.push_back({"t" + std::to_string(i), tg->node_types[uniform(rng, 0, nt - 1)],
                              tg->node_types[uniform(rng, 0, nt - 1)]});
  return tg;
}

inline std::string random_node_type(std::mt19937& rng, const TypeGraph& tg) {
  return tg.node_types[uniform(rng, 0, tg.node_types.size() - 1)];
}

// Adds up to `edges` random well-typed edges between existing nodes.
inline void add_random_edges(std::mt19937& rng, TypedGraph& g, std::size_t edges, const std::string& prefix) {
  const TypeGraph& tg = *g.type_graph;
  if (g.nodes.empty() || tg.edge_types.empty()) return;
  for (std::size_t i = 0, made = 0; i < edges * 4 && made < edges; ++i) {
    const EdgeType& et = tg.edge_types[uniform(rng, 0, tg.edge_types.size() - 1)];
    const Node& s = g.nodes[uniform(rng, 0, g.nodes.size() - 1)];
    const Node& t = g.nodes[uniform(rng, 0, g.nodes.size() - 1)];
    if (s.type != et.src || t.type != et.tgt) continue;
    std::string id = prefix + std::to_string(++made);
    while (g.edge(id)) id += "_";
    g.add_edge(id, et.name, s.id, t.id);
  }
}

inline TypedGraph random_graph(std::mt19937& rng, std::shared_ptr<const TypeGraph> tg, std::size_t max_nodes,
                               std::size_t max_edges, std::size_t min_nodes = 0) {
  TypedGraph g(tg);
  std::size_t n = uniform(rng, min_nodes, max_nodes);
  for (std::size_t i = 1; i <= n; ++i) g.add_node("v" + std::to_string(i), random_node_type(rng, *tg));
  add_random_edges(rng, g, uniform(rng, 0, max_edges), "e");
  return g;
}

// A valid rule with at most `max_elements` elements in each of L and R.
inline DpoRule random_rule(std::mt19937& rng, std::shared_ptr<const TypeGraph> tg, const std::string& name,
                           std::size_t max_elements = 5) {
  DpoRule r{name, TypedGraph(tg), {}, TypedGraph(tg)};
  std::size_t ln = uniform(rng, 1, std::min<std::size_t>(3, max_elements));
  for (std::size_t i = 1; i <= ln; ++i) r.left.add_node("l" + std::to_string(i), random_node_type(rng, *tg));
  add_random_edges(rng, r.left, uniform(rng, 0, max_elements - ln), "a");

  for (const auto& n : r.left.nodes)
    if (coin(rng, 0.6)) {
      r.interface.nodes.insert(n.id);
      r.right.add_node(n.id, n.type);
    }
  for (const auto& e : r.left.edges)
    if (r.preserves_node(e.src) && r.preserves_node(e.tgt) && coin(rng)) {
      r.interface.edges.insert(e.id);
      r.right.add_edge(e.id, e.type, e.src, e.tgt);
    }
  std::size_t room = max_elements - std::min(max_elements, r.right.size());
  std::size_t extra_nodes = room ? uniform(rng, 0, std::min<std::size_t>(1, room)) : 0;
  for (std::size_t i = 1; i <= extra_nodes; ++i) r.right.add_node("r" + std::to_string(i), random_node_type(rng, *tg));
  room = max_elements - std::min(max_elements, r.right.size());
  add_random_edges(rng, r.right, uniform(rng, 0, room), "b");
  return r;
}

inline Gts random_gts(std::mt19937& rng, std::shared_ptr<const TypeGraph> tg, std::size_t max_rules = 2,
                      std::size_t max_elements = 5) {
  Gts s{tg, {}};
  std::size_t n = uniform(rng, 1, max_rules);
  for (std::size_t i = 1; i <= n; ++i) s.rules.push_back(random_rule(rng, tg, "p" + std::to_string(i), max_elements));
  return s;
}

inline std::set<std::string> random_subset(std::mt19937& rng, const TypedGraph& g, double p) {
  std::set<std::string> out;
  for (const auto& n : g.nodes)
    if (coin(rng, p)) out.insert(n.id);
  return out;
}

// ============================================================================
// One-step correspondence between the two engines
// ============================================================================

struct StepComparison {
  bool agree = false;
  std::set<std::string> gts_forms;
  std::set<std::string> chr_forms;
  std::string problem;  // set when a CHR successor fails the graph invariant
};

// Compares the isomorphism classes of one-step successors: DPO steps that keep
// every strong node, against decoded CHR successors of the ground encoding.
// With `pinned`, surviving host nodes keep their identity on both sides.
inline StepComparison compare_one_step(const Gts& gts, const TypedGraph& host, const std::set<std::string>& strong,
                                       const EncoderOptions& enc = {}, bool pinned = true) {
  StepComparison cmp;
  for (const auto& step : derive_all(gts, host)) {
    bool keeps_strong = true;
    for (const auto& s : strong) keeps_strong &= step.track.nodes.count(s) > 0;
    if (!keeps_strong) continue;
    std::map<std::string, std::string> pins;
    for (const auto& [from, to] : step.track.nodes) {
      if (pinned)
        pins[to] = "g:" + node_var(from);
      else if (strong.count(from))
        pins[to] = "strong";
    }
    cmp.gts_forms.insert(canonical_form(step.after, pins));
  }

  const EncodingContext ctx{gts.type_graph, enc.edge_identifiers};
  ChrState start = encode_graph(host, EncodeMode::ground, strong, pinned ? GlobalsPolicy::all() : GlobalsPolicy::empty(),
                                enc.edge_identifiers);
  for (const auto& next : step_all(encode_gts(gts, enc), start)) {
    auto r = check_graph_invariant(next, ctx);
    if (auto* v = std::get_if<InvariantViolation>(&r)) {
      cmp.problem = v->kind + ": " + v->detail + " in " + to_string(next);
      return cmp;
    }
    const auto& view = std::get<GraphStateView>(r);
    cmp.chr_forms.insert(canonical_form(view.graph, decoded_pins(view, next.globals)));
  }
  cmp.agree = cmp.gts_forms == cmp.chr_forms;
  return cmp;
}

}  // namespace gtschr
