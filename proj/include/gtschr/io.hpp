#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtschr/chr.hpp"
#include "gtschr/confluence.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/encoding.hpp"
#include "gtschr/error.hpp"
#include "gtschr/graph.hpp"
#include "gtschr/opeq.hpp"

namespace gtschr {

using Json = nlohmann::json;

struct Host {
  TypedGraph graph;
  std::set<std::string> strong;
};

struct Project {
  Gts gts;
  std::map<std::string, Host> hosts;
};

// ============================================================================
// Reading
// ============================================================================

namespace detail {

inline bool valid_identifier(const std::string& id) {
  if (id.empty()) return false;
  for (unsigned char c : id)
    if (!std::isalnum(c) && c != '_') return false;
  return true;
}

class ProjectReader {
 public:
  Project read(const Json& doc) {
    Project p;
    if (!doc.is_object()) return fail<Project>("project must be a JSON object");
    auto tg = std::make_shared<TypeGraph>(doc.contains("type_graph") ? read_type_graph(doc["type_graph"], "type_graph")
                                                                      : trivial_type_graph());
    for (const auto& msg : validate_type_graph(*tg)) problems_.push_back("type_graph: " + msg);
    p.gts.type_graph = tg;

    if (doc.contains("rules")) {
      if (!doc["rules"].is_array()) problems_.push_back("rules: expected an array");
      else
        for (std::size_t i = 0; i < doc["rules"].size(); ++i)
          p.gts.rules.push_back(read_rule(doc["rules"][i], tg, "rules[" + std::to_string(i) + "]"));
    }
    if (problems_.empty())
      for (const auto& msg : validate_gts(p.gts)) problems_.push_back(msg);

    if (doc.contains("hosts")) {
      if (!doc["hosts"].is_object()) problems_.push_back("hosts: expected an object");
      else
        for (const auto& [name, g] : doc["hosts"].items()) {
          Host h;
          h.graph = read_graph(g, tg, "hosts." + name, &h.strong);
          for (const auto& v : validate(h.graph)) problems_.push_back("hosts." + name + ": " + v.message);
          p.hosts.emplace(name, std::move(h));
        }
    }
    if (!problems_.empty()) throw ValidationError("invalid project", problems_);
    return p;
  }

 private:
  template <class T>
  T fail(const std::string& msg) {
    problems_.push_back(msg);
    throw ValidationError("invalid project", problems_);
  }

  std::string str(const Json& j, const char* key, const std::string& where, const char* fallback = nullptr) {
    if (!j.contains(key)) {
      if (fallback) return fallback;
      problems_.push_back(where + ": missing '" + key + "'");
      return {};
    }
    if (!j[key].is_string()) {
      problems_.push_back(where + ": '" + key + "' must be a string");
      return {};
    }
    return j[key].get<std::string>();
  }

  std::string id(const Json& j, const char* key, const std::string& where) {
    std::string s = str(j, key, where);
    if (!s.empty() && !valid_identifier(s))
      problems_.push_back(where + ": identifier '" + s + "' must match [A-Za-z0-9_]+");
    return s;
  }

  TypeGraph read_type_graph(const Json& j, const std::string& where) {
    TypeGraph tg;
    if (!j.is_object()) {
      problems_.push_back(where + ": expected an object");
      return tg;
    }
    if (j.contains("node_types"))
      for (const auto& n : j["node_types"]) {
        if (!n.is_string() || !valid_identifier(n.get<std::string>()))
          problems_.push_back(where + ": node type names must be identifiers");
        else
          tg.node_types.push_back(n.get<std::string>());
      }
    if (j.contains("edge_types"))
      for (std::size_t i = 0; i < j["edge_types"].size(); ++i) {
        const Json& e = j["edge_types"][i];
        std::string w = where + ".edge_types[" + std::to_string(i) + "]";
        tg.edge_types.push_back({id(e, "name", w), id(e, "src", w), id(e, "tgt", w)});
      }
    return tg;
  }

  TypedGraph read_graph(const Json& j, const std::shared_ptr<const TypeGraph>& tg, const std::string& where,
                        std::set<std::string>* strong = nullptr) {
    TypedGraph g(tg);
    if (!j.is_object()) {
      problems_.push_back(where + ": expected a graph object");
      return g;
    }
    if (j.contains("nodes"))
      for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
        const Json& n = j["nodes"][i];
        std::string w = where + ".nodes[" + std::to_string(i) + "]";
        std::string nid = id(n, "id", w);
        g.add_node(nid, str(n, "type", w, "node"));
        if (n.contains("strong")) {
          if (!strong) problems_.push_back(w + ": 'strong' is only allowed in host graphs");
          else if (!n["strong"].is_boolean()) problems_.push_back(w + ": 'strong' must be a boolean");
          else if (n["strong"].get<bool>()) strong->insert(nid);
        }
      }
    if (j.contains("edges"))
      for (std::size_t i = 0; i < j["edges"].size(); ++i) {
        const Json& e = j["edges"][i];
        std::string w = where + ".edges[" + std::to_string(i) + "]";
        g.add_edge(id(e, "id", w), str(e, "type", w, "edge"), id(e, "src", w), id(e, "tgt", w));
      }
    return g;
  }

  DpoRule read_rule(const Json& j, const std::shared_ptr<const TypeGraph>& tg, const std::string& where) {
    DpoRule r;
    if (!j.is_object()) {
      problems_.push_back(where + ": expected a rule object");
      return r;
    }
    r.name = id(j, "name", where);
    std::string w = r.name.empty() ? where : "rule '" + r.name + "'";
    r.left = read_graph(j.value("L", Json::object()), tg, w + ".L");
    r.right = read_graph(j.value("R", Json::object()), tg, w + ".R");
    Json k = j.value("K", Json::object());
    for (const auto& n : k.value("nodes", Json::array())) r.interface.nodes.insert(n.get<std::string>());
    for (const auto& e : k.value("edges", Json::array())) r.interface.edges.insert(e.get<std::string>());
    return r;
  }

  std::vector<std::string> problems_;
};

}  // namespace detail

inline Project parse_project(const Json& doc) { return detail::ProjectReader().read(doc); }

inline Project load_project(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'", {"cannot open '" + path + "'"});
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON", {e.what()});
  }
  return parse_project(doc);
}

// ============================================================================
// Writing
// ============================================================================

inline Json to_json(const TypedGraph& g, const std::set<std::string>& strong = {}) {
  Json nodes = Json::array(), edges = Json::array();
  for (const auto& n : g.nodes) {
    Json o{{"id", n.id}, {"type", n.type}};
    if (strong.count(n.id)) o["strong"] = true;
    nodes.push_back(std::move(o));
  }
  for (const auto& e : g.edges) edges.push_back({{"id", e.id}, {"type", e.type}, {"src", e.src}, {"tgt", e.tgt}});
  return {{"nodes", nodes}, {"edges", edges}};
}

inline Json to_json(const ChrRule& r) {
  auto list = [](const std::vector<Constraint>& cs) {
    Json a = Json::array();
    for (const auto& c : cs) a.push_back(to_string(c));
    return a;
  };
  Json builtins = Json::array();
  for (const auto& e : r.body_builtin) builtins.push_back(to_string(e));
  return {{"name", r.name},         {"kept", list(r.kept)},         {"removed", list(r.removed)},
          {"body", list(r.body_user)}, {"builtins", builtins}, {"text", to_string(r)}};
}

inline Json to_json(const ChrProgram& p) {
  Json rules = Json::array();
  for (const auto& r : p.rules) rules.push_back(to_json(r));
  return {{"rules", rules}};
}

inline Json to_json(const ConfluenceReport& rep) {
  Json overlaps = Json::array();
  for (const auto& o : rep.overlaps) {
    Json pairing = Json::array();
    for (const auto& [a, b] : o.overlap.pairing) pairing.push_back({a, b});
    Json item{{"r1", o.overlap.r1},
              {"r2", o.overlap.r2},
              {"pairing", pairing},
              {"sigma_cp", to_string(o.overlap.sigma_cp)},
              {"sigma1", to_string(o.overlap.sigma1)},
              {"sigma2", to_string(o.overlap.sigma2)},
              {"g_status", o.g_status == GStatus::valid ? "valid" : "violation"},
              {"join_status", std::string(to_string(o.join_status))}};
    if (o.g_status == GStatus::violation) item["violation"] = o.violation;
    overlaps.push_back(std::move(item));
  }
  return {{"verdict", std::string(to_string(rep.verdict))},
          {"overlaps", overlaps},
          {"witnesses", rep.witnesses},
          {"summary", {{"overlaps", rep.overlaps.size()}, {"violating", rep.violating()}, {"joinable", rep.joinable()}}},
          {"note", rep.verdict == ConfluenceVerdict::g_confluent
                       ? "G-confluence of the terminating encoded program implies confluence of the graph transformation system"
                       : "strong joinability is only sufficient; confluence is not disproved"}};
}

inline Json to_json(const OpEqReport& rep) {
  Json states = Json::array();
  for (const auto& c : rep.critical_states)
    states.push_back({{"source", c.critical.source},
                      {"state", to_string(c.critical.state)},
                      {"status", std::string(to_string(c.result.status))},
                      {"final1", to_string(c.result.final1)},
                      {"final2", to_string(c.result.final2)}});
  Json pre = Json::array();
  for (const auto& p : rep.preconditions) pre.push_back({{"program", p.program}, {"status", p.status}});
  return {{"verdict", std::string(to_string(rep.verdict))}, {"critical_states", states}, {"preconditions", pre}};
}

inline Json to_json(const RedundancyReport& rep) {
  Json rules = Json::array();
  for (const auto& r : rep.rules) {
    Json item{{"rule", r.rule}, {"removable", r.removable}};
    if (r.evidence) item["evidence"] = to_json(*r.evidence);
    if (!r.note.empty()) item["note"] = r.note;
    rules.push_back(std::move(item));
  }
  return {{"rules", rules}, {"removed", rep.removed()}, {"remaining", rep.remaining}};
}

}  // namespace gtschr
