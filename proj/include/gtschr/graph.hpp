#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "gtschr/error.hpp"

namespace gtschr {

// ============================================================================
// Type graphs
// ============================================================================

struct EdgeType {
  std::string name;
  std::string src;
  std::string tgt;

  friend bool operator==(const EdgeType&, const EdgeType&) = default;
};

struct TypeGraph {
  std::vector<std::string> node_types;
  std::vector<EdgeType> edge_types;

  bool has_node_type(std::string_view name) const {
    return std::find(node_types.begin(), node_types.end(), name) != node_types.end();
  }

  const EdgeType* find_edge_type(std::string_view name) const {
    for (const auto& et : edge_types)
      if (et.name == name) return &et;
    return nullptr;
  }

  friend bool operator==(const TypeGraph&, const TypeGraph&) = default;
};

// One node type "node" with one loop edge type "edge": the typing of untyped graphs.
inline TypeGraph trivial_type_graph() {
  return TypeGraph{{"node"}, {EdgeType{"edge", "node", "node"}}};
}

inline std::vector<std::string> validate_type_graph(const TypeGraph& tg) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& n : tg.node_types)
    if (!seen.insert(n).second) problems.push_back("duplicate type name '" + n + "'");
  for (const auto& e : tg.edge_types) {
    if (!seen.insert(e.name).second) problems.push_back("duplicate type name '" + e.name + "'");
    if (!tg.has_node_type(e.src))
      problems.push_back("edge type '" + e.name + "' has unknown source type '" + e.src + "'");
    if (!tg.has_node_type(e.tgt))
      problems.push_back("edge type '" + e.name + "' has unknown target type '" + e.tgt + "'");
  }
  return problems;
}

// ============================================================================
// Typed graphs
// ============================================================================

struct Node {
  std::string id;
  std::string type;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::string id;
  std::string type;
  std::string src;
  std::string tgt;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Nodes and edges are kept sorted by id. Node ids and edge ids live in
// separate namespaces. Duplicates can be inserted; validate() reports them.
struct TypedGraph {
  std::shared_ptr<const TypeGraph> type_graph;
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  TypedGraph() = default;
  explicit TypedGraph(std::shared_ptr<const TypeGraph> tg) : type_graph(std::move(tg)) {}

  const Node* node(std::string_view id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const Node& n, std::string_view k) { return n.id < k; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
  }

  const Edge* edge(std::string_view id) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), id,
                               [](const Edge& e, std::string_view k) { return e.id < k; });
    return it != edges.end() && it->id == id ? &*it : nullptr;
  }

  TypedGraph& add_node(std::string id, std::string type) {
    auto it = std::upper_bound(nodes.begin(), nodes.end(), id,
                               [](const std::string& k, const Node& n) { return k < n.id; });
    nodes.insert(it, Node{std::move(id), std::move(type)});
    return *this;
  }

  TypedGraph& add_edge(std::string id, std::string type, std::string src, std::string tgt) {
    auto it = std::upper_bound(edges.begin(), edges.end(), id,
                               [](const std::string& k, const Edge& e) { return k < e.id; });
    edges.insert(it, Edge{std::move(id), std::move(type), std::move(src), std::move(tgt)});
    return *this;
  }

  bool remove_node(std::string_view id) {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const Node& n) { return n.id == id; });
    if (it == nodes.end()) return false;
    nodes.erase(it);
    return true;
  }

  bool remove_edge(std::string_view id) {
    auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.id == id; });
    if (it == edges.end()) return false;
    edges.erase(it);
    return true;
  }

  bool empty() const { return nodes.empty() && edges.empty(); }
  std::size_t size() const { return nodes.size() + edges.size(); }
};

// Same type graph by value; a missing type graph only matches another missing one.
inline bool same_type_graph(const TypedGraph& a, const TypedGraph& b) {
  if (a.type_graph == b.type_graph) return true;
  if (!a.type_graph || !b.type_graph) return false;
  return *a.type_graph == *b.type_graph;
}

struct GraphMorphism {
  std::map<std::string, std::string> nodes;
  std::map<std::string, std::string> edges;

  bool injective() const {
    std::set<std::string> n, e;
    for (const auto& [k, v] : nodes)
      if (!n.insert(v).second) return false;
    for (const auto& [k, v] : edges)
      if (!e.insert(v).second) return false;
    return true;
  }

  friend bool operator==(const GraphMorphism&, const GraphMorphism&) = default;
};

// ============================================================================
// Validation, degree, subgraphs
// ============================================================================

struct Violation {
  enum class Kind { duplicate_id, dangling_endpoint, unknown_type, type_mismatch };
  Kind kind;
  std::string element;
  std::string message;
};

inline std::string_view to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::duplicate_id: return "duplicate id";
    case Violation::Kind::dangling_endpoint: return "dangling endpoint";
    case Violation::Kind::unknown_type: return "unknown type";
    case Violation::Kind::type_mismatch: return "type mismatch";
  }
  return "?";
}

inline std::vector<Violation> validate(const TypedGraph& g) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  for (std::size_t i = 1; i < g.nodes.size(); ++i)
    if (g.nodes[i].id == g.nodes[i - 1].id)
      out.push_back({K::duplicate_id, g.nodes[i].id, "duplicate node id '" + g.nodes[i].id + "'"});
  for (std::size_t i = 1; i < g.edges.size(); ++i)
    if (g.edges[i].id == g.edges[i - 1].id)
      out.push_back({K::duplicate_id, g.edges[i].id, "duplicate edge id '" + g.edges[i].id + "'"});

  const TypeGraph* tg = g.type_graph.get();
  if (tg)
    for (const auto& n : g.nodes)
      if (!tg->has_node_type(n.type))
        out.push_back({K::unknown_type, n.id, "node '" + n.id + "' has unknown type '" + n.type + "'"});

  for (const auto& e : g.edges) {
    const Node* s = g.node(e.src);
    const Node* t = g.node(e.tgt);
    if (!s)
      out.push_back({K::dangling_endpoint, e.id, "edge '" + e.id + "' has dangling endpoint '" + e.src + "'"});
    if (!t)
      out.push_back({K::dangling_endpoint, e.id, "edge '" + e.id + "' has dangling endpoint '" + e.tgt + "'"});
    if (!tg) continue;
    const EdgeType* et = tg->find_edge_type(e.type);
    if (!et) {
      out.push_back({K::unknown_type, e.id, "edge '" + e.id + "' has unknown type '" + e.type + "'"});
      continue;
    }
    if ((s && s->type != et->src) || (t && t->type != et->tgt))
      out.push_back({K::type_mismatch, e.id,
                     "edge '" + e.id + "' of type '" + e.type + "' connects nodes of the wrong types"});
  }
  return out;
}

// A loop counts twice.
inline std::size_t degree(const TypedGraph& g, std::string_view node_id) {
  if (!g.node(node_id)) throw Error("unknown node id '" + std::string(node_id) + "'");
  std::size_t d = 0;
  for (const auto& e : g.edges) d += (e.src == node_id) + (e.tgt == node_id);
  return d;
}

inline bool is_subgraph(const TypedGraph& h, const TypedGraph& g) {
  if (!same_type_graph(h, g)) throw Error("is_subgraph: type graph mismatch");
  for (const auto& n : h.nodes) {
    const Node* m = g.node(n.id);
    if (!m || m->type != n.type) return false;
  }
  for (const auto& e : h.edges) {
    const Edge* f = g.edge(e.id);
    if (!f || !(*f == e)) return false;
    if (!h.node(e.src) || !h.node(e.tgt)) return false;
  }
  return true;
}

// ============================================================================
// Isomorphism and canonical forms
// ============================================================================

namespace detail {

// Index-based view: node i is g.nodes[i]; adjacency as multiplicities.
struct IndexedGraph {
  std::vector<std::string> types;
  std::vector<std::string> labels;
  std::vector<std::tuple<int, int, std::string>> arcs;
  std::vector<std::map<std::pair<int, std::string>, int>> out, in;

  IndexedGraph(const TypedGraph& g, const std::map<std::string, std::string>& pins) {
    std::map<std::string, int> index;
    for (const auto& n : g.nodes) {
      index.emplace(n.id, static_cast<int>(types.size()));
      types.push_back(n.type);
      auto it = pins.find(n.id);
      labels.push_back(it == pins.end() ? std::string() : "#" + it->second);
    }
    out.resize(types.size());
    in.resize(types.size());
    for (const auto& e : g.edges) {
      int s = index.at(e.src), t = index.at(e.tgt);
      arcs.emplace_back(s, t, e.type);
      ++out[s][{t, e.type}];
      ++in[t][{s, e.type}];
    }
  }

  int n() const { return static_cast<int>(types.size()); }

  int mult(int s, int t, const std::string& type) const {
    auto it = out[s].find({t, type});
    return it == out[s].end() ? 0 : it->second;
  }

  // The transposition (u v) is an automorphism of the labelled graph.
  bool twins(int u, int v) const {
    if (types[u] != types[v] || labels[u] != labels[v]) return false;
    auto strip = [&](const std::map<std::pair<int, std::string>, int>& adj, int self, int other) {
      std::map<std::pair<int, std::string>, int> r;
      for (const auto& [k, c] : adj) {
        int w = k.first == self ? -1 : k.first == other ? -2 : k.first;
        r[{w, k.second}] += c;
      }
      return r;
    };
    return strip(out[u], u, v) == strip(out[v], v, u) && strip(in[u], u, v) == strip(in[v], v, u);
  }
};

inline std::vector<int> refine(const IndexedGraph& g, std::vector<int> colour) {
  using Signature = std::pair<int, std::vector<std::tuple<int, std::string, int, int>>>;
  std::size_t classes = std::set<int>(colour.begin(), colour.end()).size();
  for (;;) {
    std::vector<Signature> sig(g.n());
    for (int v = 0; v < g.n(); ++v) {
      sig[v].first = colour[v];
      for (const auto& [k, c] : g.out[v]) sig[v].second.emplace_back(0, k.second, colour[k.first], c);
      for (const auto& [k, c] : g.in[v]) sig[v].second.emplace_back(1, k.second, colour[k.first], c);
      std::sort(sig[v].second.begin(), sig[v].second.end());
    }
    std::vector<Signature> ranks = sig;
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    for (int v = 0; v < g.n(); ++v)
      colour[v] = static_cast<int>(std::lower_bound(ranks.begin(), ranks.end(), sig[v]) - ranks.begin());
    if (ranks.size() == classes) return colour;
    classes = ranks.size();
  }
}

inline std::string encode_leaf(const IndexedGraph& g, const std::vector<int>& pos) {
  std::vector<int> at(g.n());
  for (int v = 0; v < g.n(); ++v) at[pos[v]] = v;
  std::string s = "V";
  for (int p = 0; p < g.n(); ++p) {
    s += '|';
    s += g.types[at[p]];
    s += g.labels[at[p]];
  }
  std::vector<std::tuple<int, int, std::string>> arcs;
  for (const auto& [a, b, t] : g.arcs) arcs.emplace_back(pos[a], pos[b], t);
  std::sort(arcs.begin(), arcs.end());
  s += "/E";
  for (const auto& [a, b, t] : arcs) s += "|" + std::to_string(a) + ">" + std::to_string(b) + ":" + t;
  return s;
}

inline void canonical_search(const IndexedGraph& g, std::vector<int> colour, std::optional<std::string>& best) {
  colour = refine(g, std::move(colour));
  std::map<int, std::vector<int>> cells;
  for (int v = 0; v < g.n(); ++v) cells[colour[v]].push_back(v);
  auto target = std::find_if(cells.begin(), cells.end(), [](const auto& c) { return c.second.size() > 1; });
  if (target == cells.end()) {
    std::string leaf = encode_leaf(g, colour);
    if (!best || leaf < *best) best = std::move(leaf);
    return;
  }
  std::vector<int> tried;
  for (int v : target->second) {
    if (std::any_of(tried.begin(), tried.end(), [&](int t) { return g.twins(t, v); })) continue;
    tried.push_back(v);
    std::vector<int> next(colour.size());
    for (int w = 0; w < g.n(); ++w)
      next[w] = 2 * colour[w] + (colour[w] == target->first && w != v ? 1 : 0);
    canonical_search(g, std::move(next), best);
  }
}

}  // namespace detail

// Equal strings iff the graphs are isomorphic by a bijection that maps
// labelled nodes to nodes with the same label. Ids are not part of the form.
inline std::string canonical_form(const TypedGraph& g, const std::map<std::string, std::string>& pinned_labels = {}) {
  if (g.empty()) return "<empty>";
  detail::IndexedGraph ig(g, pinned_labels);
  std::vector<std::string> keys(ig.n());
  for (int v = 0; v < ig.n(); ++v) keys[v] = ig.types[v] + '\x1f' + ig.labels[v];
  std::vector<std::string> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> colour(ig.n());
  for (int v = 0; v < ig.n(); ++v)
    colour[v] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), keys[v]) - sorted.begin());
  std::optional<std::string> best;
  detail::canonical_search(ig, std::move(colour), best);
  return *best;
}

// Backtracking search for a type- and structure-preserving bijection g1 -> g2
// extending `pinned` (node ids of g1 to node ids of g2).
inline std::optional<GraphMorphism> find_isomorphism(const TypedGraph& g1, const TypedGraph& g2,
                                                     const std::map<std::string, std::string>& pinned = {}) {
  for (const auto& [a, b] : pinned)
    if (!g1.node(a) || !g2.node(b)) throw Error("find_isomorphism: pinned id '" + a + "' or '" + b + "' unknown");
  if (g1.nodes.size() != g2.nodes.size() || g1.edges.size() != g2.edges.size()) return std::nullopt;

  detail::IndexedGraph a(g1, {}), b(g2, {});
  const int n = a.n();
  auto profile = [](const detail::IndexedGraph& g, int v) {
    std::vector<std::tuple<int, std::string, int>> p;
    std::map<std::pair<int, std::string>, int> agg;
    for (const auto& [k, c] : g.out[v]) agg[{k.first == v ? 2 : 0, k.second}] += c;
    for (const auto& [k, c] : g.in[v])
      if (k.first != v) agg[{1, k.second}] += c;
    for (const auto& [k, c] : agg) p.emplace_back(k.first, k.second, c);
    return std::make_tuple(g.types[v], p);
  };
  std::vector<decltype(profile(a, 0))> pa, pb;
  for (int v = 0; v < n; ++v) {
    pa.push_back(profile(a, v));
    pb.push_back(profile(b, v));
  }

  std::map<std::string, int> idx1, idx2;
  for (int v = 0; v < n; ++v) {
    idx1[g1.nodes[v].id] = v;
    idx2[g2.nodes[v].id] = v;
  }
  std::vector<int> forced(n, -1);
  for (const auto& [x, y] : pinned) forced[idx1.at(x)] = idx2.at(y);

  std::vector<int> map(n, -1);
  std::vector<bool> used(n, false);
  auto compatible = [&](int v, int w) {
    if (pa[v] != pb[w]) return false;
    for (int u = 0; u < n; ++u) {
      if (map[u] < 0) continue;
      for (const auto& [k, c] : a.out[v])
        if (k.first == u && b.mult(w, map[u], k.second) != c) return false;
      for (const auto& [k, c] : a.in[v])
        if (k.first == u && b.mult(map[u], w, k.second) != c) return false;
      for (const auto& [k, c] : b.out[w])
        if (k.first == map[u] && a.mult(v, u, k.second) != c) return false;
      for (const auto& [k, c] : b.in[w])
        if (k.first == map[u] && a.mult(u, v, k.second) != c) return false;
    }
    return true;
  };

  // Pinned nodes first, then the rest in index order.
  std::vector<int> order;
  for (int v = 0; v < n; ++v)
    if (forced[v] >= 0) order.push_back(v);
  for (int v = 0; v < n; ++v)
    if (forced[v] < 0) order.push_back(v);

  auto search = [&](auto&& self, std::size_t i) -> bool {
    if (i == order.size()) return true;
    int v = order[i];
    for (int w = 0; w < n; ++w) {
      if (used[w] || (forced[v] >= 0 && forced[v] != w) || !compatible(v, w)) continue;
      map[v] = w;
      used[w] = true;
      if (self(self, i + 1)) return true;
      map[v] = -1;
      used[w] = false;
    }
    return false;
  };
  if (!search(search, 0)) return std::nullopt;

  GraphMorphism f;
  for (int v = 0; v < n; ++v) f.nodes[g1.nodes[v].id] = g2.nodes[map[v]].id;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::string>> bundles;
  for (const auto& e : g2.edges) bundles[{e.src, e.tgt, e.type}].push_back(e.id);
  for (const auto& e : g1.edges) {
    auto& ids = bundles[{f.nodes.at(e.src), f.nodes.at(e.tgt), e.type}];
    f.edges[e.id] = ids.front();
    ids.erase(ids.begin());
  }
  return f;
}

}  // namespace gtschr
