#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gtschr/chr.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/error.hpp"
#include "gtschr/graph.hpp"

namespace gtschr {

// ============================================================================
// Naming
// ============================================================================

inline std::string node_var(const std::string& id) { return "N" + id; }
inline std::string edge_var(const std::string& id) { return "E" + id; }
inline std::string degree_var(const std::string& id) { return "D" + id; }
inline std::string primed(const std::string& var) { return var + "'"; }

// ============================================================================
// Options and context
// ============================================================================

enum class EncodeMode { ground, kept };

struct EncoderOptions {
  bool variable_elimination = true;
  bool arithmetic_simplification = true;
  bool edge_identifiers = true;
  bool simpagation = false;

  static EncoderOptions verbose() { return {false, false, true, false}; }
};

struct GlobalsPolicy {
  enum class Kind { all_variables, none, explicit_set };
  Kind kind = Kind::all_variables;
  std::set<std::string> variables;

  static GlobalsPolicy all() { return {}; }
  static GlobalsPolicy empty() { return {Kind::none, {}}; }
  static GlobalsPolicy only(std::set<std::string> vs) { return {Kind::explicit_set, std::move(vs)}; }
};

// What a state is decoded against.
struct EncodingContext {
  std::shared_ptr<const TypeGraph> type_graph;
  bool edge_identifiers = true;
};

// node type -> 2; edge type -> 3, or 2 without edge identifiers.
inline std::vector<std::pair<std::string, std::size_t>> constraint_symbols(const TypeGraph& tg,
                                                                            bool edge_identifiers = true) {
  std::set<std::string> seen;
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& n : tg.node_types) {
    if (!seen.insert(n).second) throw EncodingError("type name clash on '" + n + "'");
    out.emplace_back(n, 2);
  }
  for (const auto& e : tg.edge_types) {
    if (!seen.insert(e.name).second) throw EncodingError("type name clash on '" + e.name + "'");
    out.emplace_back(e.name, edge_identifiers ? 3 : 2);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline Constraint node_constraint(const std::string& type, const std::string& id_var, Term degree) {
  return Constraint{type, {Term::var(id_var), std::move(degree)}};
}

inline Constraint edge_constraint(const Edge& e, bool with_id, const std::string& id_var, const std::string& src_var,
                                  const std::string& tgt_var) {
  Constraint c{e.type, {}};
  if (with_id) c.args.push_back(Term::var(id_var));
  c.args.push_back(Term::var(src_var));
  c.args.push_back(Term::var(tgt_var));
  return c;
}

inline void throw_invalid(const std::string& what, const std::vector<std::string>& problems) {
  std::string msg = what;
  for (const auto& p : problems) msg += "\n  " + p;
  throw ValidationError(msg, problems);
}

}  // namespace detail

// ============================================================================
// Graph and rule encoding
// ============================================================================

inline ChrState encode_graph(const TypedGraph& g, EncodeMode mode, const std::set<std::string>& strong = {},
                             const GlobalsPolicy& globals = GlobalsPolicy::all(), bool edge_identifiers = true) {
  std::vector<std::string> problems;
  for (const auto& v : validate(g)) problems.push_back(v.message);
  for (const auto& s : strong)
    if (!g.node(s)) problems.push_back("strong node '" + s + "' is not in the graph");
  if (!problems.empty()) detail::throw_invalid("cannot encode invalid graph", problems);

  ChrState st;
  for (const auto& n : g.nodes) {
    Term deg = mode == EncodeMode::kept || strong.count(n.id)
                   ? Term::var(degree_var(n.id))
                   : Term::num(static_cast<long>(degree(g, n.id)));
    st.goal.push_back(detail::node_constraint(n.type, node_var(n.id), deg));
  }
  for (const auto& e : g.edges)
    st.goal.push_back(detail::edge_constraint(e, edge_identifiers, edge_var(e.id), node_var(e.src), node_var(e.tgt)));

  switch (globals.kind) {
    case GlobalsPolicy::Kind::all_variables: st.globals = goal_variables(st.goal); break;
    case GlobalsPolicy::Kind::none: break;
    case GlobalsPolicy::Kind::explicit_set: st.globals = globals.variables; break;
  }
  return st;
}

inline ChrRule encode_rule(const DpoRule& p, const EncoderOptions& opts = {}) {
  if (auto problems = validate_rule(p); !problems.empty())
    detail::throw_invalid("cannot encode invalid rule '" + p.name + "'", problems);
  if (p.left.empty()) throw EncodingError("rule '" + p.name + "' has an empty left-hand side");

  ChrRule r;
  r.name = p.name;
  auto deg_l = [&](const std::string& id) { return static_cast<long>(degree(p.left, id)); };
  auto deg_r = [&](const std::string& id) { return static_cast<long>(degree(p.right, id)); };

  std::vector<Constraint> body_k_nodes, body_new_nodes, body_k_edges, body_new_edges;

  for (const auto& n : p.left.nodes) {
    if (!p.preserves_node(n.id)) {
      r.removed.push_back(detail::node_constraint(n.type, node_var(n.id), Term::num(deg_l(n.id))));
      continue;
    }
    const std::string nv = node_var(n.id), dv = degree_var(n.id);
    Constraint head = detail::node_constraint(n.type, nv, Term::var(dv));
    const long removed = deg_l(n.id), added = deg_r(n.id), delta = added - removed;
    if (opts.simpagation && delta == 0) {
      r.kept.push_back(std::move(head));
      continue;
    }
    r.removed.push_back(std::move(head));

    std::string body_id = nv;
    if (!opts.variable_elimination) {
      body_id = primed(nv);
      r.body_builtin.push_back(Equation{body_id, Term::var(nv), std::nullopt});
    }
    Term body_deg = Term::var(primed(dv));
    if (opts.arithmetic_simplification) {
      if (delta == 0)
        body_deg = Term::var(dv);
      else
        r.body_builtin.push_back(Equation{primed(dv), Term::var(dv, delta), std::nullopt});
    } else {
      r.body_builtin.push_back(Equation{primed(dv), Term::var(dv, delta), std::make_pair(removed, added)});
    }
    body_k_nodes.push_back(detail::node_constraint(n.type, body_id, body_deg));
  }

  const bool ids = opts.edge_identifiers;
  for (const auto& e : p.left.edges) {
    Constraint c = detail::edge_constraint(e, ids, edge_var(e.id), node_var(e.src), node_var(e.tgt));
    if (!p.preserves_edge(e.id)) {
      r.removed.push_back(std::move(c));
    } else if (opts.simpagation) {
      r.kept.push_back(std::move(c));
    } else {
      body_k_edges.push_back(c);
      r.removed.push_back(std::move(c));
    }
  }

  for (const auto& n : p.right.nodes)
    if (!p.preserves_node(n.id))
      body_new_nodes.push_back(detail::node_constraint(n.type, node_var(n.id), Term::num(deg_r(n.id))));
  for (const auto& e : p.right.edges)
    if (!p.preserves_edge(e.id))
      body_new_edges.push_back(detail::edge_constraint(e, ids, edge_var(e.id), node_var(e.src), node_var(e.tgt)));

  for (auto* part : {&body_k_nodes, &body_new_nodes, &body_k_edges, &body_new_edges})
    r.body_user.insert(r.body_user.end(), part->begin(), part->end());

  if (r.removed.empty())
    throw EncodingError("rule '" + p.name + "' removes nothing and would be a propagation rule");
  return r;
}

inline ChrProgram encode_gts(const Gts& s, const EncoderOptions& opts = {}) {
  if (auto problems = validate_gts(s); !problems.empty()) detail::throw_invalid("cannot encode invalid GTS", problems);
  if (s.type_graph) constraint_symbols(*s.type_graph, opts.edge_identifiers);
  ChrProgram prog;
  for (const auto& r : s.rules) prog.rules.push_back(encode_rule(r, opts));
  return prog;
}

// ============================================================================
// Graph invariant
// ============================================================================

struct GraphStateView {
  TypedGraph graph;
  std::set<std::string> strong;
  std::map<std::string, std::string> id_binding;  // element id -> variable
};

struct InvariantViolation {
  std::string kind;
  std::string detail;
};

using InvariantResult = std::variant<GraphStateView, InvariantViolation>;

class InvariantError : public Error {
 public:
  explicit InvariantError(InvariantViolation v) : Error(v.kind + ": " + v.detail), violation_(std::move(v)) {}
  const InvariantViolation& violation() const noexcept { return violation_; }

 private:
  InvariantViolation violation_;
};

// Decides whether a state encodes a (partial) graph, structurally:
// well-formed constraints, distinct node and edge identifiers, endpoints that
// are node identifiers of matching type, ground degrees equal to incidence
// counts, and variable degrees over bases used nowhere else.
inline InvariantResult check_graph_invariant(const ChrState& state, const EncodingContext& ctx) {
  auto fail = [](std::string kind, std::string detail) { return InvariantResult(InvariantViolation{std::move(kind), std::move(detail)}); };
  if (!ctx.type_graph) return fail("no type graph", "the encoding context has no type graph");
  const TypeGraph& tg = *ctx.type_graph;
  const ChrState n = normalize(state);
  if (n.builtins.failed) return fail("failed state", "the built-in store is inconsistent");

  struct NodeRec {
    std::string type;
    Term degree;
    std::size_t incident = 0;
  };
  std::map<std::string, NodeRec> nodes;  // id variable -> node
  std::vector<const Constraint*> edges;
  std::set<std::string> edge_ids;
  const std::size_t edge_arity = ctx.edge_identifiers ? 3 : 2;

  for (const auto& c : n.goal) {
    if (tg.has_node_type(c.symbol) && c.arity() == 2) {
      if (!c.args[0].is_plain_variable())
        return fail("malformed node constraint", to_string(c) + " has a non-variable identifier");
      if (c.args[1].kind == Term::Kind::symbol)
        return fail("malformed node constraint", to_string(c) + " has a symbolic degree");
      if (!nodes.emplace(c.args[0].name, NodeRec{c.symbol, c.args[1], 0}).second)
        return fail("duplicate node encoding", "identifier " + c.args[0].name + " encodes two nodes");
      continue;
    }
    if (tg.find_edge_type(c.symbol) && c.arity() == edge_arity) {
      for (const auto& a : c.args)
        if (!a.is_plain_variable()) return fail("malformed edge constraint", to_string(c) + " has a non-variable argument");
      if (ctx.edge_identifiers && !edge_ids.insert(c.args[0].name).second)
        return fail("duplicate edge encoding", "identifier " + c.args[0].name + " encodes two edges");
      edges.push_back(&c);
      continue;
    }
    return fail("unknown constraint", to_string(c) + " is not a node or edge encoding of the type graph");
  }

  for (const auto& id : edge_ids)
    if (nodes.count(id)) return fail("identifier clash", id + " identifies both a node and an edge");

  const std::size_t first = ctx.edge_identifiers ? 1 : 0;
  for (const Constraint* e : edges) {
    const EdgeType* et = tg.find_edge_type(e->symbol);
    const std::string& s = e->args[first].name;
    const std::string& t = e->args[first + 1].name;
    auto si = nodes.find(s), ti = nodes.find(t);
    if (si == nodes.end() || ti == nodes.end())
      return fail("dangling edge endpoint", to_string(*e) + " has an endpoint that is no node identifier");
    if (si->second.type != et->src || ti->second.type != et->tgt)
      return fail("edge type mismatch", to_string(*e) + " connects nodes of the wrong types");
    ++si->second.incident;
    ++ti->second.incident;
  }

  std::map<std::string, std::size_t> base_uses;
  for (const auto& [id, rec] : nodes)
    if (rec.degree.is_variable()) ++base_uses[rec.degree.name];
  for (const auto& [id, rec] : nodes) {
    if (rec.degree.kind == Term::Kind::integer) {
      if (rec.degree.value != static_cast<long>(rec.incident))
        return fail("degree inconsistency", "node " + id + " has degree " + std::to_string(rec.degree.value) + " but " +
                                                std::to_string(rec.incident) + " incident edges");
      continue;
    }
    const std::string& base = rec.degree.name;
    if (nodes.count(base) || edge_ids.count(base))
      return fail("degree base clash", "degree of node " + id + " uses identifier " + base);
    if (base_uses[base] > 1) return fail("shared degree variable", "degree variable " + base + " is used by several nodes");
  }

  GraphStateView view{TypedGraph(ctx.type_graph), {}, {}};
  for (const auto& [id, rec] : nodes) {
    view.graph.add_node(id, rec.type);
    view.id_binding[id] = id;
    if (rec.degree.is_variable()) view.strong.insert(id);
  }
  std::size_t synthetic = 0;
  for (const Constraint* e : edges) {
    std::string id = ctx.edge_identifiers ? e->args[0].name : "e" + std::to_string(++synthetic);
    if (ctx.edge_identifiers) view.id_binding[id] = id;
    view.graph.add_edge(id, e->symbol, e->args[first].name, e->args[first + 1].name);
  }
  return view;
}

inline GraphStateView decode(const ChrState& state, const EncodingContext& ctx) {
  auto r = check_graph_invariant(state, ctx);
  if (auto* v = std::get_if<InvariantViolation>(&r)) throw InvariantError(*v);
  return std::get<GraphStateView>(std::move(r));
}

// Pins for canonical forms of decoded states: global node identifiers keep
// their name; other strong nodes are only marked as strong.
inline std::map<std::string, std::string> decoded_pins(const GraphStateView& view, const std::set<std::string>& globals) {
  std::map<std::string, std::string> pins;
  for (const auto& n : view.graph.nodes) {
    if (globals.count(n.id))
      pins[n.id] = "g:" + n.id;
    else if (view.strong.count(n.id))
      pins[n.id] = "strong";
  }
  return pins;
}

}  // namespace gtschr
