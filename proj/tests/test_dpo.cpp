#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "gtschr/dpo.hpp"
#include "gtschr/harness.hpp"
#include "support.hpp"

using namespace gtschr;
using support::cycle;

namespace {

const Gts& cyclic_list() {
  static const Gts gts = support::load("cyclic-list").gts;
  return gts;
}

const DpoRule& rule(const Gts& g, const std::string& name) {
  const DpoRule* r = g.rule(name);
  REQUIRE(r);
  return *r;
}

std::set<std::string> forms(const std::vector<TypedGraph>& gs) {
  std::set<std::string> out;
  for (const auto& g : gs) out.insert(canonical_form(g));
  return out;
}

}  // namespace

TEST_CASE("fixture rules validate", "[dpo]") {
  for (auto name : {"cyclic-list", "dangle", "remove-loop", "track-incompatible", "two-loops", "two-loops-variant",
                    "opeq-redundancy", "opeq-redundancy-reduced"}) {
    INFO(name);
    CHECK(validate_gts(support::load(name).gts).empty());
  }
}

TEST_CASE("validate_rule rejects a K edge whose endpoint is not in K", "[dpo]") {
  DpoRule r = rule(cyclic_list(), "unlink");
  r.interface.edges.insert("1");  // 1 -> 2, node 2 deleted
  CHECK_FALSE(validate_rule(r).empty());
}

TEST_CASE("twoloop on the dangle host: matches and gluing", "[dpo]") {
  Project p = support::load("dangle");
  const DpoRule& twoloop = rule(p.gts, "twoloop");
  const TypedGraph& host = p.hosts.at("dangle").graph;
  auto matches = find_matches(twoloop, host);
  REQUIRE(matches.size() == 2);
  CHECK(support::brute_matches(twoloop.left, host).size() == 2);

  std::size_t ok = 0;
  for (const auto& m : matches) {
    GluingReport g = check_gluing(twoloop, m, host);
    if (m.morphism.nodes.at("2") == "V1") {
      CHECK(g.satisfied);
      ++ok;
    } else {
      CHECK(m.morphism.nodes.at("2") == "V2");
      CHECK_FALSE(g.satisfied);
      CHECK(g.dangling_edges == std::vector<std::string>{"E3"});
      FreshIds fresh;
      CHECK_THROWS_AS(apply(twoloop, m, host, fresh), GluingViolation);
    }
  }
  CHECK(ok == 1);
}

TEST_CASE("matches and dangling edges agree with brute force", "[dpo][oracle]") {
  std::mt19937 rng(11);
  std::size_t total = 0;
  for (int i = 0; i < 300; ++i) {
    auto tg = random_type_graph(rng);
    DpoRule r = random_rule(rng, tg, "p");
    TypedGraph host = random_graph(rng, tg, 5, 7);
    auto matches = find_matches(r, host);
    auto brute = support::brute_matches(r.left, host);
    INFO("instance " << i);
    REQUIRE(matches.size() == brute.size());
    std::set<std::pair<std::map<std::string, std::string>, std::map<std::string, std::string>>> a, b;
    for (const auto& m : matches) {
      a.insert({m.morphism.nodes, m.morphism.edges});
      auto dangling = check_gluing(r, m, host).dangling_edges;
      CHECK(std::set<std::string>(dangling.begin(), dangling.end()) == support::brute_dangling(r, m.morphism, host));
    }
    for (const auto& m : brute) b.insert({m.nodes, m.edges});
    CHECK(a == b);
    total += matches.size();
  }
  CHECK(total > 100);
}

TEST_CASE("match counts on cycles", "[dpo]") {
  CHECK(find_matches(rule(cyclic_list(), "unlink"), cycle(3)).size() == 3);
  CHECK(find_matches(rule(cyclic_list(), "unlink"), TypedGraph(support::trivial())).empty());
  CHECK(support::brute_matches(rule(cyclic_list(), "unlink").left, cycle(3)).size() == 3);
}

TEST_CASE("gluing holds for rules that delete no nodes", "[dpo]") {
  const Gts gts = support::load("remove-loop").gts;
  const DpoRule& r = rule(gts, "R");
  TypedGraph host(support::trivial());
  host.add_node("a", "node").add_node("b", "node");
  host.add_edge("l", "edge", "a", "a").add_edge("m", "edge", "a", "b");
  for (const auto& m : find_matches(r, host)) CHECK(check_gluing(r, m, host).satisfied);
}

TEST_CASE("unlink at node 2 of a 3-cycle", "[dpo]") {
  const DpoRule& unlink = rule(cyclic_list(), "unlink");
  TypedGraph host = cycle(3);
  for (const auto& m : find_matches(unlink, host)) {
    if (m.morphism.nodes.at("2") != "2") continue;
    FreshIds fresh;
    DerivationStep s = apply(unlink, m, host, fresh);
    CHECK(support::brute_isomorphic(s.after, cycle(2)));
    CHECK(s.track.nodes == std::map<std::string, std::string>{{"1", "1"}, {"3", "3"}});
    CHECK(s.track.edges == std::map<std::string, std::string>{{"3", "3"}});
    CHECK(s.comatch.edges.at("3") == "x1");
  }
}

TEST_CASE("twoloop on a 2-cycle leaves a node with a loop", "[dpo]") {
  const DpoRule& twoloop = rule(cyclic_list(), "twoloop");
  auto matches = find_matches(twoloop, cycle(2));
  REQUIRE(matches.size() == 2);
  FreshIds fresh;
  CHECK(support::brute_isomorphic(apply(twoloop, matches[0], cycle(2), fresh).after, support::loop_graph()));
}

TEST_CASE("identity rule keeps the host", "[dpo]") {
  DpoRule id{"id", cycle(2), {{"1", "2"}, {"1", "2"}}, cycle(2)};
  REQUIRE(validate_rule(id).empty());
  TypedGraph host = cycle(2);
  host.add_node("3", "node").add_edge("3", "edge", "3", "3");
  auto matches = find_matches(id, host);
  REQUIRE(matches.size() == 2);
  FreshIds fresh;
  DerivationStep s = apply(id, matches.front(), host, fresh);
  CHECK(s.after.nodes == host.nodes);
  CHECK(s.after.edges == host.edges);
  CHECK(s.track.nodes.size() == 3);
  CHECK(s.track.edges.size() == 3);
}

TEST_CASE("derive_all", "[dpo]") {
  auto steps = derive_all(cyclic_list(), cycle(3));
  std::size_t unlink = 0, twoloop = 0;
  for (const auto& s : steps) (s.rule == "unlink" ? unlink : twoloop)++;
  CHECK(unlink == 3);
  CHECK(twoloop == 0);
  CHECK(derive_all(cyclic_list(), support::loop_graph()).empty());
  CHECK(derive_all(cyclic_list(), TypedGraph(support::trivial())).empty());
}

TEST_CASE("normal_forms_gts", "[dpo]") {
  auto nf = normal_forms_gts(cyclic_list(), cycle(4));
  CHECK_FALSE(nf.exhausted);
  REQUIRE(nf.finals.size() == 1);
  CHECK(support::brute_isomorphic(nf.finals[0], support::loop_graph()));

  Gts none{support::trivial(), {}};
  auto same = normal_forms_gts(none, cycle(3));
  REQUIRE(same.finals.size() == 1);
  CHECK(support::brute_isomorphic(same.finals[0], cycle(3)));

  TypedGraph path(support::trivial());
  path.add_node("1", "node").add_node("2", "node").add_edge("1", "edge", "1", "2");
  auto p = normal_forms_gts(cyclic_list(), path);
  REQUIRE(p.finals.size() == 1);
  CHECK(support::brute_isomorphic(p.finals[0], path));

  auto cut = normal_forms_gts(cyclic_list(), cycle(6), Limits{2, 10000});
  CHECK(cut.exhausted);
}

TEST_CASE("normal_forms_gts on larger cycles", "[dpo]") {
  for (std::size_t n = 2; n <= 7; ++n) {
    auto nf = normal_forms_gts(cyclic_list(), cycle(n));
    INFO("cycle " << n);
    CHECK(forms(nf.finals) == forms({support::loop_graph()}));
  }
}

TEST_CASE("merge_variants", "[dpo]") {
  CHECK(merge_variants(rule(cyclic_list(), "unlink")).size() == 2);

  DpoRule two{"two", TypedGraph(support::trivial()), {{"1", "2"}, {}}, TypedGraph(support::trivial())};
  two.left.add_node("1", "node").add_node("2", "node");
  two.right = two.left;
  CHECK(merge_variants(two).size() == 2);

  DpoRule add{"add", TypedGraph(support::trivial()), {}, TypedGraph(support::trivial())};
  add.left.add_node("1", "node");
  CHECK(merge_variants(add).size() == 1);

  // Three same-typed K nodes: Bell(3) = 5 partitions.
  DpoRule three = two;
  three.left.add_node("3", "node");
  three.right.add_node("3", "node");
  three.interface.nodes.insert("3");
  CHECK(merge_variants(three).size() == 5);
}

TEST_CASE("critical pairs of the loop-removal rule", "[dpo]") {
  const Gts gts = support::load("remove-loop").gts;
  const DpoRule& r = rule(gts, "R");
  auto dependent = gts_critical_pairs(r, r);
  CriticalPairOptions all;
  all.include_independent = true;
  auto every = gts_critical_pairs(r, r, all);

  std::set<std::string> got;
  for (const auto& cp : every) got.insert(canonical_form(cp.overlap));
  TypedGraph two_loops(support::trivial());
  two_loops.add_node("1", "node").add_edge("1", "edge", "1", "1").add_edge("2", "edge", "1", "1");
  CHECK(got.count(canonical_form(support::loop_graph())));
  CHECK(got.count(canonical_form(two_loops)));
  REQUIRE(dependent.size() == 1);
  CHECK(support::brute_isomorphic(dependent[0].overlap, support::loop_graph()));
}

TEST_CASE("critical pairs of rules over disjoint edge types", "[dpo]") {
  Gts s = support::load("track-incompatible").gts;
  DpoRule a = rule(s, "r1");
  DpoRule b = a;
  b.name = "r1b";
  b.left.edges.front().type = "b";
  b.right.edges.front().type = "a";
  REQUIRE(validate_rule(b).empty());
  // Only the preserved nodes can be identified, so every overlap is parallel independent.
  CHECK(gts_critical_pairs(a, b).empty());
}

namespace {

// Brute-force critical pairs: every partial injective identification of L1
// into L2 by plain tuple enumeration, kept when jointly surjective overlaps
// have both matches satisfying gluing and some identified element is deleted.
std::multiset<std::string> brute_critical_pairs(const DpoRule& r1, const DpoRule& r2) {
  std::multiset<std::string> out;
  const auto& n1 = r1.left.nodes;
  const auto& n2 = r2.left.nodes;
  const auto& e1 = r1.left.edges;
  const auto& e2 = r2.left.edges;
  // choice k in [0, |n2|]: k == |n2| means "not identified"
  std::vector<std::size_t> nc(n1.size(), 0), ec(e1.size(), 0);
  auto next = [](std::vector<std::size_t>& v, std::size_t base) {
    for (auto& d : v) {
      if (++d <= base) return true;
      d = 0;
    }
    return false;
  };
  do {
    std::set<std::size_t> used;
    bool ok = true;
    for (std::size_t i = 0; i < n1.size() && ok; ++i) {
      if (nc[i] == n2.size()) continue;
      ok = used.insert(nc[i]).second && n1[i].type == n2[nc[i]].type;
    }
    if (!ok) continue;
    std::fill(ec.begin(), ec.end(), 0);
    do {
      std::set<std::size_t> used_e;
      bool eok = true, any = false, dependent = false;
      auto node_index = [&](const std::string& id) {
        for (std::size_t i = 0; i < n1.size(); ++i)
          if (n1[i].id == id) return i;
        return n1.size();
      };
      for (std::size_t i = 0; i < e1.size() && eok; ++i) {
        if (ec[i] == e2.size()) continue;
        const Edge& a = e1[i];
        const Edge& b = e2[ec[i]];
        std::size_t s = nc[node_index(a.src)], t = nc[node_index(a.tgt)];
        eok = used_e.insert(ec[i]).second && a.type == b.type && s < n2.size() && t < n2.size() &&
              n2[s].id == b.src && n2[t].id == b.tgt;
        any = true;
        dependent |= !r1.preserves_edge(a.id) || !r2.preserves_edge(b.id);
      }
      if (!eok) continue;
      for (std::size_t i = 0; i < n1.size(); ++i) {
        if (nc[i] == n2.size()) continue;
        any = true;
        dependent |= !r1.preserves_node(n1[i].id) || !r2.preserves_node(n2[nc[i]].id);
      }
      if (!any || !dependent) continue;

      TypedGraph g(r1.left.type_graph);
      GraphMorphism m1, m2;
      for (std::size_t i = 0; i < n1.size(); ++i) {
        g.add_node("a" + n1[i].id, n1[i].type);
        m1.nodes[n1[i].id] = "a" + n1[i].id;
        if (nc[i] < n2.size()) m2.nodes[n2[nc[i]].id] = "a" + n1[i].id;
      }
      for (const auto& n : n2)
        if (!m2.nodes.count(n.id)) {
          g.add_node("b" + n.id, n.type);
          m2.nodes[n.id] = "b" + n.id;
        }
      for (std::size_t i = 0; i < e1.size(); ++i) {
        g.add_edge("a" + e1[i].id, e1[i].type, "a" + e1[i].src, "a" + e1[i].tgt);
        m1.edges[e1[i].id] = "a" + e1[i].id;
        if (ec[i] < e2.size()) m2.edges[e2[ec[i]].id] = "a" + e1[i].id;
      }
      for (const auto& e : e2)
        if (!m2.edges.count(e.id)) {
          g.add_edge("b" + e.id, e.type, m2.nodes.at(e.src), m2.nodes.at(e.tgt));
          m2.edges[e.id] = "b" + e.id;
        }
      if (!support::brute_dangling(r1, m1, g).empty() || !support::brute_dangling(r2, m2, g).empty()) continue;
      out.insert(canonical_form(g));
    } while (next(ec, e2.size()));
  } while (next(nc, n2.size()));
  return out;
}

}  // namespace

TEST_CASE("critical pairs agree with brute-force identification", "[dpo][oracle]") {
  auto check = [](const DpoRule& a, const DpoRule& b) {
    std::multiset<std::string> got;
    for (const auto& cp : gts_critical_pairs(a, b)) got.insert(canonical_form(cp.overlap));
    CHECK(got == brute_critical_pairs(a, b));
  };
  const DpoRule& unlink = rule(cyclic_list(), "unlink");
  const DpoRule& twoloop = rule(cyclic_list(), "twoloop");
  check(unlink, unlink);
  check(unlink, twoloop);
  check(twoloop, twoloop);
  CHECK(gts_critical_pairs(unlink, unlink).size() == brute_critical_pairs(unlink, unlink).size());

  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    auto tg = random_type_graph(rng);
    INFO("instance " << i);
    check(random_rule(rng, tg, "p", 4), random_rule(rng, tg, "q", 4));
  }
}
