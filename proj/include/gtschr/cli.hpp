#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gtschr/chr.hpp"
#include "gtschr/confluence.hpp"
#include "gtschr/dpo.hpp"
#include "gtschr/encoding.hpp"
#include "gtschr/error.hpp"
#include "gtschr/harness.hpp"
#include "gtschr/io.hpp"
#include "gtschr/opeq.hpp"

namespace gtschr::cli {

enum ExitCode : int { ok = 0, usage = 1, invalid = 2, exhausted = 3, precondition = 4, negative = 5 };

struct RunConfig {
  Limits limits;
  EncoderOptions encoder;
  bool full_globals = true;
  bool prune = true;
  bool assume_terminating = false;
  bool attest = false;
  bool json = false;
  std::uint32_t seed = 1;
  std::size_t samples = 0;
  std::string engine = "chr";
  std::string host;
  std::string rule;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

inline EncoderOptions parse_encoder_options(const std::string& list) {
  EncoderOptions o{false, false, false, false};
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "var-elim") o.variable_elimination = true;
    else if (item == "arith") o.arithmetic_simplification = true;
    else if (item == "edge-ids") o.edge_identifiers = true;
    else if (item == "simpagation") o.simpagation = true;
    else if (item != "none" && !item.empty()) throw UsageError("unknown encoder option '" + item + "'");
  }
  return o;
}

inline std::string describe(const TypedGraph& g, const std::set<std::string>& strong = {}) {
  if (g.empty()) return "(empty graph)";
  std::string s = "nodes";
  for (const auto& n : g.nodes) s += " " + n.id + ":" + n.type + (strong.count(n.id) ? "(strong)" : "");
  s += "; edges";
  if (g.edges.empty()) s += " none";
  for (const auto& e : g.edges) s += " " + e.id + ":" + e.type + "(" + e.src + "->" + e.tgt + ")";
  return s;
}

inline std::string describe(const GraphMorphism& m) {
  std::string s;
  for (const auto& [a, b] : m.nodes) s += (s.empty() ? "" : ", ") + a + "->" + b;
  s += ";";
  for (const auto& [a, b] : m.edges) s += " " + a + "->" + b;
  return s;
}

inline Json morphism_json(const GraphMorphism& m) { return {{"nodes", m.nodes}, {"edges", m.edges}}; }

class Commands {
 public:
  Commands(RunConfig cfg, std::ostream& out) : cfg_(std::move(cfg)), out_(out) {
    if (cfg_.assume_terminating) cfg_.limits.max_depth = std::numeric_limits<std::size_t>::max();
  }

  int encode(const Project& p) {
    ChrProgram prog = encode_gts(p.gts, cfg_.encoder);
    if (cfg_.json) return emit(to_json(prog));
    for (const auto& r : prog.rules) out_ << to_string(r) << "\n";
    return ok;
  }

  int run(const Project& p) {
    const Host& host = find_host(p);
    Json doc{{"host", cfg_.host}, {"graph", to_json(host.graph, host.strong)}};
    if (!cfg_.json) out_ << "host " << cfg_.host << ": " << describe(host.graph, host.strong) << "\n";
    bool exhausted_any = false;
    std::set<std::string> chr_forms, gts_forms;

    if (cfg_.engine == "chr" || cfg_.engine == "both") {
      const EncodingContext ctx = context_for(p.gts, cfg_.encoder);
      ChrProgram prog = encode_gts(p.gts, cfg_.encoder);
      ChrState start = encode_graph(host.graph, EncodeMode::ground, host.strong, globals(), cfg_.encoder.edge_identifiers);
      ChrRun trace = run_chr(prog, start, cfg_.limits);
      ChrNormalForms nf = normal_forms_chr(prog, start, cfg_.limits);
      exhausted_any |= trace.exhausted || nf.exhausted;
      Json steps = Json::array(), finals = Json::array();
      if (!cfg_.json) out_ << "[chr]\n  s0 = " << to_string(normalize(start)) << "\n";
      for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        steps.push_back({{"rule", trace.steps[i].rule}, {"state", to_string(trace.steps[i].state)}});
        if (!cfg_.json)
          out_ << "  s" << i + 1 << " = " << to_string(trace.steps[i].state) << "  by " << trace.steps[i].rule << "\n";
      }
      if (!cfg_.json) out_ << "  normal forms (" << nf.finals.size() << (nf.exhausted ? ", exhausted" : "") << "):\n";
      for (const auto& f : nf.finals) {
        finals.push_back(to_string(f));
        if (!cfg_.json) out_ << "    " << to_string(f) << "\n";
        chr_forms.insert(canonical_form(decode(f, ctx).graph));
      }
      doc["chr"] = {{"initial", to_string(normalize(start))},
                    {"trace", steps},
                    {"normal_forms", finals},
                    {"exhausted", trace.exhausted || nf.exhausted}};
    }

    if (cfg_.engine == "gts" || cfg_.engine == "both") {
      Json steps = Json::array(), finals = Json::array();
      if (!cfg_.json) out_ << "[gts]\n  G0 = " << describe(host.graph) << "\n";
      TypedGraph g = host.graph;
      bool trace_exhausted = false;
      for (std::size_t i = 0;; ++i) {
        auto next = derive_all(p.gts, g);
        if (next.empty()) break;
        if (i >= cfg_.limits.max_depth) {
          trace_exhausted = true;
          break;
        }
        const DerivationStep& s = next.front();
        steps.push_back({{"rule", s.rule}, {"match", morphism_json(s.match.morphism)}, {"graph", to_json(s.after)}});
        if (!cfg_.json)
          out_ << "  G" << i + 1 << " = " << describe(s.after) << "  by " << s.rule << " [" << describe(s.match.morphism)
               << "]\n";
        g = s.after;
      }
      GtsNormalForms nf = normal_forms_gts(p.gts, host.graph, cfg_.limits);
      exhausted_any |= trace_exhausted || nf.exhausted;
      if (!cfg_.json) out_ << "  normal forms (" << nf.finals.size() << (nf.exhausted ? ", exhausted" : "") << "):\n";
      for (const auto& f : nf.finals) {
        finals.push_back(to_json(f));
        if (!cfg_.json) out_ << "    " << describe(f) << "\n";
        gts_forms.insert(canonical_form(f));
      }
      doc["gts"] = {{"trace", steps}, {"normal_forms", finals}, {"exhausted", trace_exhausted || nf.exhausted}};
    }

    int code = exhausted_any ? exhausted : ok;
    if (cfg_.engine == "both" && !exhausted_any) {
      if (host.strong.empty()) {
        bool agree = chr_forms == gts_forms;
        doc["agreement"] = agree;
        if (!cfg_.json) out_ << (agree ? "engines agree" : "ENGINES DISAGREE") << "\n";
        if (!agree) code = negative;
      } else if (!cfg_.json) {
        out_ << "agreement not checked: the host has strong nodes\n";
      }
    }
    if (cfg_.json) emit(doc);
    return code;
  }

  int match(const Project& p) {
    const Host& host = find_host(p);
    Json doc = Json::array();
    bool any_rule = false;
    for (const auto& r : p.gts.rules) {
      if (!cfg_.rule.empty() && r.name != cfg_.rule) continue;
      any_rule = true;
      std::size_t applicable = 0;
      auto matches = find_matches(r, host.graph);
      for (std::size_t i = 0; i < matches.size(); ++i) {
        GluingReport gl = check_gluing(r, matches[i], host.graph);
        applicable += gl.satisfied;
        doc.push_back({{"rule", r.name},
                       {"match", morphism_json(matches[i].morphism)},
                       {"gluing", gl.satisfied},
                       {"dangling_edges", gl.dangling_edges}});
        if (cfg_.json) continue;
        out_ << r.name << " #" << i + 1 << ": " << describe(matches[i].morphism) << "  ";
        if (gl.satisfied) {
          out_ << "gluing ok\n";
        } else {
          out_ << "dangling edges {";
          for (std::size_t k = 0; k < gl.dangling_edges.size(); ++k) out_ << (k ? ", " : "") << gl.dangling_edges[k];
          out_ << "}\n";
        }
      }
      if (!cfg_.json)
        out_ << r.name << ": " << matches.size() << " matches, " << applicable << " satisfy the gluing condition\n";
    }
    if (!any_rule) throw UsageError("unknown rule '" + cfg_.rule + "'");
    if (cfg_.json) emit(doc);
    return ok;
  }

  int confluence(const Project& p) {
    ConfluenceReport rep = check_confluence(p.gts, cfg_.encoder, confluence_options());
    if (cfg_.json) {
      emit(to_json(rep));
    } else {
      for (std::size_t i = 0; i < rep.overlaps.size(); ++i) {
        const auto& o = rep.overlaps[i];
        out_ << "overlap " << i + 1 << ": " << o.overlap.r1 << " x " << o.overlap.r2 << "\n"
             << "  cp = " << to_string(o.overlap.sigma_cp) << "\n";
        if (o.g_status == GStatus::violation) {
          out_ << "  violates G: " << o.violation << "\n";
          continue;
        }
        out_ << "  s1 = " << to_string(o.overlap.sigma1) << "\n"
             << "  s2 = " << to_string(o.overlap.sigma2) << "\n"
             << "  " << to_string(o.join_status) << "\n";
      }
      std::size_t checked = rep.overlaps.size() - rep.violating();
      std::string counts = "overlaps: " + std::to_string(rep.overlaps.size()) + " (" +
                           std::to_string(rep.violating()) + " violates G), joinable: " +
                           std::to_string(rep.joinable()) + "/" + std::to_string(checked);
      switch (rep.verdict) {
        case ConfluenceVerdict::g_confluent: out_ << "G-CONFLUENT, " << counts << "\n"; break;
        case ConfluenceVerdict::not_strongly_joinable:
          out_ << counts << "\nNOT_STRONGLY_JOINABLE (confluence not disproved)\n";
          break;
        case ConfluenceVerdict::inconclusive: out_ << counts << "\nINCONCLUSIVE (limits exhausted)\n"; break;
      }
    }
    switch (rep.verdict) {
      case ConfluenceVerdict::g_confluent: return ok;
      case ConfluenceVerdict::not_strongly_joinable: return negative;
      case ConfluenceVerdict::inconclusive: return exhausted;
    }
    return ok;
  }

  int opeq(const Project& p1, const Project& p2) {
    OpEqReport rep = check_op_equivalence(p1.gts, p2.gts, cfg_.encoder, opeq_options());
    if (cfg_.json) {
      emit(to_json(rep));
    } else {
      for (const auto& pre : rep.preconditions) out_ << pre.program << ": " << pre.status << "\n";
      for (const auto& c : rep.critical_states) {
        out_ << c.critical.source << " " << to_string(c.critical.state) << "  " << to_string(c.result.status) << "\n";
        if (c.result.status == JoinStatus::not_joinable)
          out_ << "  P1 -> " << to_string(c.result.final1) << "\n  P2 -> " << to_string(c.result.final2) << "\n";
      }
      switch (rep.verdict) {
        case OpEqVerdict::equivalent: out_ << "EQUIVALENT\n"; break;
        case OpEqVerdict::not_proven: out_ << "NOT_PROVEN (inequivalence not claimed)\n"; break;
        case OpEqVerdict::inconclusive: out_ << "INCONCLUSIVE (limits exhausted)\n"; break;
      }
    }
    switch (rep.verdict) {
      case OpEqVerdict::equivalent: return ok;
      case OpEqVerdict::not_proven: return negative;
      case OpEqVerdict::inconclusive: return exhausted;
    }
    return ok;
  }

  int redundant(const Project& p) {
    RedundancyReport rep = redundant_rules(p.gts, cfg_.encoder, opeq_options());
    if (cfg_.json) return emit(to_json(rep));
    for (const auto& r : rep.rules) {
      out_ << r.rule << (r.removable ? " removable" : " kept");
      if (!r.removable && !r.note.empty()) out_ << " (" << r.note << ")";
      else if (!r.removable && r.evidence) out_ << " (" << to_string(r.evidence->verdict) << ")";
      out_ << "\n";
    }
    out_ << "remaining:";
    for (const auto& r : rep.remaining) out_ << " " << r;
    out_ << "\n";
    return ok;
  }

  int validate(const Project& p) {
    ChrProgram prog = encode_gts(p.gts, cfg_.encoder);
    const EncodingContext ctx = context_for(p.gts, cfg_.encoder);
    for (const auto& [name, h] : p.hosts) {
      ChrState st = encode_graph(h.graph, EncodeMode::ground, h.strong, globals(), cfg_.encoder.edge_identifiers);
      InvariantResult r = check_graph_invariant(st, ctx);
      if (auto* v = std::get_if<InvariantViolation>(&r))
        throw ValidationError("host '" + name + "' does not encode to a graph state", {v->kind + ": " + v->detail});
    }
    Json doc{{"rules", prog.rules.size()}, {"hosts", p.hosts.size()}};
    if (!cfg_.json) out_ << "ok: " << prog.rules.size() << " rules, " << p.hosts.size() << " hosts\n";

    int code = ok;
    if (cfg_.samples > 0) {
      std::mt19937 rng(cfg_.seed);
      std::size_t agree = 0;
      Json mismatches = Json::array();
      for (std::size_t i = 0; i < cfg_.samples; ++i) {
        TypedGraph host = random_graph(rng, p.gts.type_graph, 6, 8);
        auto strong = random_subset(rng, host, 0.3);
        StepComparison c = compare_one_step(p.gts, host, strong, cfg_.encoder, cfg_.full_globals);
        if (c.agree) {
          ++agree;
          continue;
        }
        mismatches.push_back({{"host", to_json(host, strong)}, {"problem", c.problem}});
        if (!cfg_.json) out_ << "mismatch on " << describe(host, strong) << (c.problem.empty() ? "" : ": ") << c.problem
                             << "\n";
      }
      doc["samples"] = cfg_.samples;
      doc["agreeing"] = agree;
      doc["seed"] = cfg_.seed;
      doc["mismatches"] = mismatches;
      if (!cfg_.json)
        out_ << "soundness: " << agree << "/" << cfg_.samples << " samples agree (seed " << cfg_.seed << ")\n";
      if (agree != cfg_.samples) code = negative;
    }
    if (cfg_.json) emit(doc);
    return code;
  }

 private:
  int emit(const Json& doc) {
    out_ << doc.dump(2) << "\n";
    return ok;
  }

  GlobalsPolicy globals() const { return cfg_.full_globals ? GlobalsPolicy::all() : GlobalsPolicy::empty(); }

  ConfluenceOptions confluence_options() const {
    ConfluenceOptions o;
    o.overlap.full_globals = cfg_.full_globals;
    o.overlap.prune = cfg_.prune;
    o.limits = cfg_.limits;
    return o;
  }

  OpEqOptions opeq_options() const {
    OpEqOptions o;
    o.attest = cfg_.attest;
    o.confluence = confluence_options();
    o.limits = cfg_.limits;
    return o;
  }

  const Host& find_host(const Project& p) const {
    auto it = p.hosts.find(cfg_.host);
    if (it == p.hosts.end()) throw UsageError("unknown host '" + cfg_.host + "'");
    return it->second;
  }

  RunConfig cfg_;
  std::ostream& out_;
};

// Parses `args` (without the program name) and runs one command.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph transformation systems analysed through their CHR encoding", "gtschr"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string format = "text", opts = "var-elim,arith,edge-ids", globals = "full";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--max-depth", cfg.limits.max_depth, "Derivation depth limit")->check(CLI::PositiveNumber);
  app.add_option("--max-states", cfg.limits.max_states, "Explored state limit")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Seed for randomized checks");
  app.add_option("--opts", opts, "Encoder options: var-elim,arith,edge-ids,simpagation or none");

  std::vector<std::string> files;
  auto project_arg = [&](CLI::App* sub, std::size_t count) {
    sub->add_option("project", files, "Project file")->required()->expected(static_cast<int>(count));
  };
  auto analysis_flags = [&](CLI::App* sub) {
    sub->add_option("--globals", globals, "full: strong joinability; empty: plain joinability")
        ->check(CLI::IsMember({"full", "empty"}));
    sub->add_flag("--no-prune", [&](std::int64_t) { cfg.prune = false; }, "Keep overlaps that cannot be graph states");
    sub->add_flag("--assume-terminating", cfg.assume_terminating, "Lift the depth limit");
    sub->add_flag("--attest", cfg.attest, "Vouch for termination and confluence");
  };

  auto* encode = app.add_subcommand("encode", "Print the CHR encoding of the rules");
  project_arg(encode, 1);
  auto* run = app.add_subcommand("run", "Derive a host graph to its normal forms");
  project_arg(run, 1);
  run->add_option("--host", cfg.host, "Host graph name")->required();
  run->add_option("--engine", cfg.engine, "Engine")->check(CLI::IsMember({"gts", "chr", "both"}));
  run->add_option("--globals", globals, "Global variables of the initial state")->check(CLI::IsMember({"full", "empty"}));
  auto* match = app.add_subcommand("match", "List matches and the gluing condition");
  project_arg(match, 1);
  match->add_option("--host", cfg.host, "Host graph name")->required();
  match->add_option("--rule", cfg.rule, "Rule name (default: all)");
  auto* confluence = app.add_subcommand("confluence", "Check G-local confluence via CHR overlaps");
  project_arg(confluence, 1);
  analysis_flags(confluence);
  auto* opeq = app.add_subcommand("opeq", "Check operational equivalence of two systems");
  project_arg(opeq, 2);
  analysis_flags(opeq);
  auto* redundant = app.add_subcommand("redundant", "Find rules that can be dropped");
  project_arg(redundant, 1);
  analysis_flags(redundant);
  auto* validate = app.add_subcommand("validate", "Validate a project and optionally sample the step correspondence");
  project_arg(validate, 1);
  validate->add_option("--samples", cfg.samples, "Random hosts to compare both engines on");
  validate->add_option("--globals", globals, "Pin surviving host nodes")->check(CLI::IsMember({"full", "empty"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : usage;
  }

  try {
    cfg.encoder = parse_encoder_options(opts);
    cfg.json = format == "json";
    cfg.full_globals = globals == "full";
    Commands cmd(cfg, out);
    auto* sub = app.get_subcommands().front();
    std::vector<Project> projects;
    for (const auto& f : files) projects.push_back(load_project(f));
    if (sub == encode) return cmd.encode(projects[0]);
    if (sub == run) return cmd.run(projects[0]);
    if (sub == match) return cmd.match(projects[0]);
    if (sub == confluence) return cmd.confluence(projects[0]);
    if (sub == opeq) return cmd.opeq(projects[0], projects[1]);
    if (sub == redundant) return cmd.redundant(projects[0]);
    return cmd.validate(projects[0]);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& p : e.problems()) err << "  " << p << "\n";
    return invalid;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return precondition;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return invalid;
  }
}

}  // namespace gtschr::cli
