#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gtschr/encoding.hpp"
#include "gtschr/harness.hpp"
#include "support.hpp"

using namespace gtschr;

namespace {

Term V(const std::string& name, long delta = 0) { return Term::var(name, delta); }
Term I(long v) { return Term::num(v); }
Constraint C(std::string symbol, std::vector<Term> args) { return {std::move(symbol), std::move(args)}; }

const Project& cyclic_list() {
  static const Project p = support::load("cyclic-list");
  return p;
}

EncodingContext trivial_ctx(bool edge_ids = true) { return {support::trivial(), edge_ids}; }

}  // namespace

TEST_CASE("constraint symbols of a type graph", "[encoding]") {
  using Symbols = std::vector<std::pair<std::string, std::size_t>>;
  CHECK(constraint_symbols(trivial_type_graph()) == Symbols{{"edge", 3}, {"node", 2}});
  TypeGraph fig{{"process", "resource"}, {{"use", "process", "resource"}}};
  CHECK(constraint_symbols(fig) == Symbols{{"process", 2}, {"resource", 2}, {"use", 3}});
  CHECK(constraint_symbols(TypeGraph{}).empty());
  CHECK(constraint_symbols(trivial_type_graph(), false) == Symbols{{"edge", 2}, {"node", 2}});
  CHECK_THROWS_AS(constraint_symbols(TypeGraph{{"a"}, {{"a", "a", "a"}}}), EncodingError);
}

TEST_CASE("ground and kept graph encodings", "[encoding]") {
  TypedGraph g = support::cycle(2);
  ChrState ground = encode_graph(g, EncodeMode::ground);
  CHECK(ground.goal == std::vector<Constraint>{C("node", {V("N1"), I(2)}), C("node", {V("N2"), I(2)}),
                                               C("edge", {V("E1"), V("N1"), V("N2")}),
                                               C("edge", {V("E2"), V("N2"), V("N1")})});
  CHECK(ground.builtins == BuiltinStore::top());
  CHECK(ground.globals == std::set<std::string>{"E1", "E2", "N1", "N2"});

  ChrState kept = encode_graph(g, EncodeMode::kept);
  CHECK(kept.goal[0] == C("node", {V("N1"), V("D1")}));
  CHECK(kept.goal[1] == C("node", {V("N2"), V("D2")}));

  ChrState empty = encode_graph(TypedGraph(support::trivial()), EncodeMode::ground);
  CHECK(empty.goal.empty());
  CHECK(empty.globals.empty());

  TypedGraph bad(support::trivial());
  bad.add_edge("1", "edge", "1", "2");
  CHECK_THROWS_AS(encode_graph(bad, EncodeMode::ground), ValidationError);
}

TEST_CASE("cyclic-list rules encode as in the unsimplified listing", "[encoding]") {
  ChrProgram p = encode_gts(cyclic_list().gts);
  REQUIRE(p.rules.size() == 2);
  CHECK(to_string(p.rules[0]) ==
        "unlink @ node(N1,D1), node(N2,2), node(N3,D3), edge(E1,N1,N2), edge(E2,N2,N3) <=> "
        "node(N1,D1), node(N3,D3), edge(E3,N1,N3)");
  CHECK(to_string(p.rules[1]) ==
        "twoloop @ node(N1,D1), node(N2,2), edge(E1,N1,N2), edge(E2,N2,N1) <=> node(N1,D1), edge(E3,N1,N1)");
  CHECK(encode_gts(Gts{support::trivial(), {}}).rules.empty());
}

TEST_CASE("simpagation moves unchanged nodes to the kept head", "[encoding]") {
  EncoderOptions opts;
  opts.simpagation = true;
  CHECK(to_string(encode_rule(*cyclic_list().gts.rule("twoloop"), opts)) ==
        "twoloop @ node(N1,D1) \\ node(N2,2), edge(E1,N1,N2), edge(E2,N2,N1) <=> edge(E3,N1,N1)");
  DpoRule id{"id", support::cycle(2), {{"1", "2"}, {"1", "2"}}, support::cycle(2)};
  CHECK_THROWS_AS(encode_rule(id, opts), EncodingError);
}

TEST_CASE("verbose encoding keeps renamed identifiers and degree arithmetic", "[encoding]") {
  ChrRule r = encode_rule(*cyclic_list().gts.rule("twoloop"), EncoderOptions::verbose());
  CHECK(to_string(r) ==
        "twoloop @ node(N1,D1), node(N2,2), edge(E1,N1,N2), edge(E2,N2,N1) <=> "
        "node(N1',D1'), edge(E3,N1,N1), N1' = N1, D1' = D1-2+2");
}

TEST_CASE("the two rules of the subsumption example", "[encoding]") {
  ChrProgram p = encode_gts(support::load("opeq-redundancy").gts);
  REQUIRE(p.rules.size() == 2);
  CHECK(to_string(p.rules[0]) == "r1 @ node(Nx,Dx), node(Ny,Dy), a(E1,Nx,Ny) <=> node(Nx,Dx), node(Ny,Dy), b(E2,Nx,Ny)");
  CHECK(p.rules[1].head().size() == 5);
}

TEST_CASE("graph invariant on the reduced cyclic list", "[encoding]") {
  ChrState s{{C("node", {V("N3"), V("D3")}), C("edge", {V("E'"), V("N3"), V("N3")})}, BuiltinStore::top(), {"N3", "D3"}};
  GraphStateView view = decode(s, trivial_ctx());
  CHECK(support::brute_isomorphic(view.graph, support::loop_graph()));
  CHECK(view.strong == std::set<std::string>{"N3"});
}

TEST_CASE("graph invariant violations", "[encoding]") {
  auto kind = [](const ChrState& s, bool ids = true) {
    auto r = check_graph_invariant(s, trivial_ctx(ids));
    auto* v = std::get_if<InvariantViolation>(&r);
    return v ? v->kind : std::string("ok");
  };
  // Two node constraints sharing an identifier.
  CHECK(kind({{C("node", {V("N"), I(2)}), C("node", {V("N"), I(2)}), C("edge", {V("E"), V("N"), V("N")})}, {}, {}}) ==
        "duplicate node encoding");
  CHECK(kind({{C("node", {V("N"), I(1)}), C("edge", {V("E"), V("N"), V("N")})}, {}, {}}) == "degree inconsistency");
  CHECK(kind({{C("edge", {V("E"), V("N"), V("M")})}, {}, {}}) == "dangling edge endpoint");
  CHECK(kind({{C("node", {V("N"), I(2)}), C("edge", {V("E"), V("N"), V("N")}), C("edge", {V("E"), V("N"), V("N")})},
              {},
              {}}) == "duplicate edge encoding");
  CHECK(kind({{C("node", {V("N"), V("D")}), C("node", {V("M"), V("D")})}, {}, {}}) == "shared degree variable");
  CHECK(kind({{C("node", {V("N"), V("N")})}, {}, {}}) == "degree base clash");
  CHECK(kind({{C("node", {I(1), I(0)})}, {}, {}}) == "malformed node constraint");
  CHECK(kind({{C("min", {I(1)})}, {}, {}}) == "unknown constraint");
  CHECK(kind({{C("node", {V("N"), I(0)})}, BuiltinStore::bottom(), {}}) == "failed state");
  CHECK(kind({{C("node", {V("N"), I(2)}), C("edge", {V("N"), V("N")})}, {}, {}}, false) == "ok");
  CHECK_THROWS_AS(decode({{}, BuiltinStore::bottom(), {}}, trivial_ctx()), InvariantError);
}

TEST_CASE("decoding inverts ground encoding", "[encoding][oracle]") {
  std::mt19937 rng(13);
  for (int i = 0; i < 100; ++i) {
    auto tg = random_type_graph(rng);
    TypedGraph g = random_graph(rng, tg, 6, 8);
    auto strong = random_subset(rng, g, 0.3);
    GraphStateView v = decode(encode_graph(g, EncodeMode::ground, strong), {tg, true});
    INFO("graph " << i);
    CHECK(support::brute_isomorphic(v.graph, g));
    std::set<std::string> expected;
    for (const auto& s : strong) expected.insert(node_var(s));
    CHECK(v.strong == expected);
    GraphStateView w = decode(encode_graph(g, EncodeMode::ground, {}, GlobalsPolicy::empty(), false), {tg, false});
    CHECK(support::brute_isomorphic(w.graph, g));
  }
}

TEST_CASE("graph invariant agrees with a brute-force decoder", "[encoding][oracle]") {
  // Random constraint soups over a trivial type graph: the invariant holds
  // exactly when the soup is the encoding of some graph with the stated degrees.
  std::mt19937 rng(17);
  std::size_t valid = 0;
  for (int i = 0; i < 500; ++i) {
    ChrState s;
    std::size_t nodes = uniform(rng, 0, 3), edges = uniform(rng, 0, 3);
    std::vector<std::string> ids{"A", "B", "C"};
    for (std::size_t k = 0; k < nodes; ++k)
      s.goal.push_back(C("node", {V(ids[uniform(rng, 0, 2)]), coin(rng, 0.8) ? I(uniform(rng, 0, 3))
                                                                            : V("D" + std::to_string(uniform(rng, 0, 2)))}));
    for (std::size_t k = 0; k < edges; ++k)
      s.goal.push_back(C("edge", {V("E" + std::to_string(uniform(rng, 0, 3))), V(ids[uniform(rng, 0, 2)]),
                                  V(ids[uniform(rng, 0, 2)])}));
    // oracle
    std::map<std::string, Term> deg;
    std::map<std::string, std::size_t> incident;
    std::set<std::string> eids;
    bool ok = true;
    for (const auto& c : s.goal)
      if (c.symbol == "node") ok &= deg.emplace(c.args[0].name, c.args[1]).second;
    std::map<std::string, std::size_t> base_uses;
    for (const auto& [id, d] : deg)
      if (d.is_variable()) ++base_uses[d.name];
    for (const auto& c : s.goal) {
      if (c.symbol != "edge") continue;
      ok &= eids.insert(c.args[0].name).second && deg.count(c.args[1].name) && deg.count(c.args[2].name);
      ++incident[c.args[1].name];
      ++incident[c.args[2].name];
    }
    for (const auto& [id, d] : deg) {
      if (d.is_variable())
        ok &= base_uses[d.name] == 1;
      else
        ok &= d.value == static_cast<long>(incident[id]);
    }
    bool got = std::holds_alternative<GraphStateView>(check_graph_invariant(s, trivial_ctx()));
    INFO(to_string(s));
    CHECK(got == ok);
    valid += ok;
  }
  CHECK(valid > 30);
}
