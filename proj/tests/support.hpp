#pragma once

// Builders and brute-force oracles shared by the unit tests and the
// acceptance runner. The oracles deliberately avoid the library's search
// code: they enumerate permutations and tuples directly.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gtschr/chr.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/encoding.hpp"
#include "gtschr/graph.hpp"
#include "gtschr/harness.hpp"
#include "gtschr/io.hpp"

#ifndef GTSCHR_FIXTURES
#define GTSCHR_FIXTURES "fixtures"
#endif

namespace support {

using namespace gtschr;

inline std::string fixture(const std::string& name) { return std::string(GTSCHR_FIXTURES) + "/" + name + ".json"; }

inline Project load(const std::string& name) { return load_project(fixture(name)); }

inline std::shared_ptr<const TypeGraph> trivial() { return std::make_shared<TypeGraph>(trivial_type_graph()); }

// Directed n-cycle 1 -> 2 -> ... -> n -> 1 over the trivial type graph.
inline TypedGraph cycle(std::size_t n, std::shared_ptr<const TypeGraph> tg = trivial()) {
  TypedGraph g(tg);
  for (std::size_t i = 1; i <= n; ++i) g.add_node(std::to_string(i), "node");
  for (std::size_t i = 1; i <= n; ++i) g.add_edge(std::to_string(i), "edge", std::to_string(i), std::to_string(i % n + 1));
  return g;
}

inline TypedGraph loop_graph(const std::string& node = "1", std::shared_ptr<const TypeGraph> tg = trivial()) {
  TypedGraph g(tg);
  g.add_node(node, "node");
  g.add_edge("1", "edge", node, node);
  return g;
}

// ---------------------------------------------------------------------------
// Isomorphism by trying every node bijection.
// ---------------------------------------------------------------------------

inline bool brute_isomorphic(const TypedGraph& a, const TypedGraph& b,
                             const std::map<std::string, std::string>& pins_a = {},
                             const std::map<std::string, std::string>& pins_b = {}) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
  std::vector<std::size_t> perm(b.nodes.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto label = [](const std::map<std::string, std::string>& pins, const std::string& id) {
    auto it = pins.find(id);
    return it == pins.end() ? std::string() : it->second;
  };
  do {
    std::map<std::string, std::string> f;
    bool ok = true;
    for (std::size_t i = 0; i < a.nodes.size() && ok; ++i) {
      const Node& x = a.nodes[i];
      const Node& y = b.nodes[perm[i]];
      ok = x.type == y.type && label(pins_a, x.id) == label(pins_b, y.id);
      f[x.id] = y.id;
    }
    if (!ok) continue;
    std::multiset<std::tuple<std::string, std::string, std::string>> ea, eb;
    for (const auto& e : a.edges) ea.insert({e.type, f[e.src], f[e.tgt]});
    for (const auto& e : b.edges) eb.insert({e.type, e.src, e.tgt});
    if (ea == eb) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// ---------------------------------------------------------------------------
// Matches by enumerating all injective node tuples, then edge tuples.
// ---------------------------------------------------------------------------

template <class F>
void injective_tuples(std::size_t length, std::size_t range, F&& visit) {
  std::vector<std::size_t> pick;
  std::vector<bool> used(range, false);
  auto rec = [&](auto&& self) -> void {
    if (pick.size() == length) {
      visit(pick);
      return;
    }
    for (std::size_t i = 0; i < range; ++i) {
      if (used[i]) continue;
      used[i] = true;
      pick.push_back(i);
      self(self);
      pick.pop_back();
      used[i] = false;
    }
  };
  rec(rec);
}

inline std::vector<GraphMorphism> brute_matches(const TypedGraph& pattern, const TypedGraph& host) {
  std::vector<GraphMorphism> out;
  injective_tuples(pattern.nodes.size(), host.nodes.size(), [&](const std::vector<std::size_t>& nodes) {
    GraphMorphism m;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (pattern.nodes[i].type != host.nodes[nodes[i]].type) return;
      m.nodes[pattern.nodes[i].id] = host.nodes[nodes[i]].id;
    }
    injective_tuples(pattern.edges.size(), host.edges.size(), [&](const std::vector<std::size_t>& edges) {
      GraphMorphism full = m;
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& p = pattern.edges[i];
        const Edge& h = host.edges[edges[i]];
        if (p.type != h.type || full.nodes[p.src] != h.src || full.nodes[p.tgt] != h.tgt) return;
        full.edges[p.id] = h.id;
      }
      out.push_back(full);
    });
  });
  return out;
}

// Host edges outside the image that touch a node the rule deletes.
inline std::set<std::string> brute_dangling(const DpoRule& r, const GraphMorphism& m, const TypedGraph& host) {
  std::set<std::string> deleted, image, out;
  for (const auto& [l, h] : m.nodes)
    if (!r.interface.nodes.count(l)) deleted.insert(h);
  for (const auto& [l, h] : m.edges) image.insert(h);
  for (const auto& e : host.edges)
    if (!image.count(e.id) && (deleted.count(e.src) || deleted.count(e.tgt))) out.insert(e.id);
  return out;
}

// ---------------------------------------------------------------------------
// State equivalence by trying every ordering of the second goal.
// Both states normalized. Locals map bijectively, each base with one shift.
// ---------------------------------------------------------------------------

inline bool brute_equivalent(const ChrState& a, const ChrState& b) {
  if (a.builtins.failed || b.builtins.failed) return a.builtins.failed && b.builtins.failed;
  if (a.globals != b.globals || !(a.builtins == b.builtins) || a.goal.size() != b.goal.size()) return false;
  std::vector<std::size_t> perm(b.goal.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto local = [](const ChrState& s, const Term& t) { return t.is_variable() && !s.globals.count(t.name); };
  do {
    std::map<std::string, std::pair<std::string, long>> fwd;
    std::map<std::string, std::string> bwd;
    bool ok = true;
    for (std::size_t i = 0; i < a.goal.size() && ok; ++i) {
      const Constraint& c = a.goal[i];
      const Constraint& d = b.goal[perm[i]];
      ok = c.symbol == d.symbol && c.arity() == d.arity();
      for (std::size_t k = 0; ok && k < c.arity(); ++k) {
        const Term& x = c.args[k];
        const Term& y = d.args[k];
        if (local(a, x) != local(b, y)) {
          ok = false;
        } else if (!local(a, x)) {
          ok = x == y;
        } else {
          auto want = std::make_pair(y.name, y.value - x.value);
          auto [it, fresh] = fwd.emplace(x.name, want);
          ok = it->second == want;
          auto [jt, fresh_b] = bwd.emplace(y.name, x.name);
          ok = ok && jt->second == x.name;
        }
      }
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// ---------------------------------------------------------------------------
// Random graph states
// ---------------------------------------------------------------------------

inline Term rename_with(const Term& t, const ChrState& s, const std::map<std::string, long>& shifts) {
  if (!t.is_variable() || s.globals.count(t.name)) return t;
  auto it = shifts.find(t.name);
  long shift = it == shifts.end() ? 0 : it->second;
  return Term::var(t.name + "_r", t.value - shift);
}

// An ≡-variant: locals renamed, local degree bases shifted, goal shuffled.
inline ChrState equivalent_variant(std::mt19937& rng, const ChrState& s) {
  std::map<std::string, long> shifts;
  for (const auto& c : s.goal)
    if (c.arity() == 2 && c.args[1].is_variable() && !s.globals.count(c.args[1].name))
      shifts[c.args[1].name] = static_cast<long>(uniform(rng, 0, 4)) - 2;
  ChrState v{{}, s.builtins, s.globals};
  for (const auto& c : s.goal) {
    Constraint d{c.symbol, {}};
    for (const auto& a : c.args) d.args.push_back(rename_with(a, s, shifts));
    v.goal.push_back(std::move(d));
  }
  std::shuffle(v.goal.begin(), v.goal.end(), rng);
  return v;
}

inline GlobalsPolicy random_globals(std::mt19937& rng, const TypedGraph& g) {
  switch (uniform(rng, 0, 2)) {
    case 0: return GlobalsPolicy::all();
    case 1: return GlobalsPolicy::empty();
    default: {
      std::set<std::string> vs;
      for (const auto& n : g.nodes) {
        if (coin(rng)) vs.insert(node_var(n.id));
        if (coin(rng)) vs.insert(degree_var(n.id));
      }
      return GlobalsPolicy::only(vs);
    }
  }
}

// Encoded random graph with random strong nodes, globals and degree offsets.
inline ChrState random_graph_state(std::mt19937& rng, std::shared_ptr<const TypeGraph> tg, std::size_t max_nodes,
                                   std::size_t max_edges, bool edge_ids = true) {
  TypedGraph g = random_graph(rng, tg, max_nodes, max_edges);
  auto strong = random_subset(rng, g, 0.4);
  ChrState s = encode_graph(g, EncodeMode::ground, strong, random_globals(rng, g), edge_ids);
  for (auto& c : s.goal)
    if (c.arity() == 2 && c.args[1].is_variable() && coin(rng, 0.3))
      c.args[1] = c.args[1].plus(static_cast<long>(uniform(rng, 0, 2)) - 1);
  return s;
}

}  // namespace support
