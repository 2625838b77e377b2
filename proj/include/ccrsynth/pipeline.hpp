#pragma once

// End-to-end synthesis: parse, φ_P, tableau, model, CCRs, projection and
// unification, lock compilation, and verification. Artifacts are collected
// in memory (file name -> contents) so runs can be compared byte for byte.

#include <cstdlib>
#include <deque>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccrsynth/codegen.hpp"
#include "ccrsynth/error.hpp"
#include "ccrsynth/lang.hpp"
#include "ccrsynth/logic.hpp"
#include "ccrsynth/modelx.hpp"
#include "ccrsynth/phigen.hpp"
#include "ccrsynth/synth.hpp"
#include "ccrsynth/tableau.hpp"

namespace ccrsynth {

enum class Target { Ccr, Coarse, Fine };
enum class ObservabilityMode { Auto, ForceShared, Limited };

enum ExitCode : int { kExitOk = 0, kExitOther = 1, kExitParse = 2, kExitUnsat = 3, kExitBudget = 4, kExitVerify = 5 };

inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::SyntaxError:
    case Errc::SortError:
    case Errc::UnknownLabel:
    case Errc::DuplicateName:
    case Errc::UnknownSymbol:
      return kExitParse;
    case Errc::EmptyTableau: return kExitUnsat;
    case Errc::ResourceLimit: return kExitBudget;
    case Errc::NonTotalModel:
    case Errc::DeadlockDetected:
    case Errc::SimDeadlock:
    case Errc::ProjectionUnsound:
      return kExitVerify;
    default: return kExitOther;
  }
}

inline constexpr size_t kDefaultNodeBudget = 500000;

/// Node budget: CCRSYNTH_NODE_BUDGET overrides the default.
inline size_t default_node_budget() {
  if (const char* e = std::getenv("CCRSYNTH_NODE_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(e, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<size_t>(v);
  }
  return kDefaultNodeBudget;
}

struct PipelineConfig {
  InitMode mode = InitMode::AllInitialized;
  Target target = Target::Ccr;
  ObservabilityMode observability = ObservabilityMode::Auto;
  bool dump_tableau = false;
  bool dump_model = false;
  bool dump_guards = true;
  size_t node_budget = kDefaultNodeBudget;
  size_t sim_state_limit = 2000000;
  int jobs = 1;
};

struct ValuationRun {
  Valuation init;
  TableauStats stats;
  size_t model_states = 0;
  std::optional<Value> aux_max;
  ObservabilityVerdict verdict;
  std::string projection;  // "none", "FullyShared", ... or "fallback"
  std::string advisory;
  Synthesized result;
};

struct PipelineResult {
  int exit_code = kExitOk;
  std::string stage;
  std::string message;
  std::vector<std::string> notices;
  std::map<std::string, std::string> artifacts;
  std::vector<ValuationRun> runs;
  std::optional<Synthesized> synthesized;
  std::optional<Compiled> compiled;
  nlohmann::ordered_json report;
};

namespace detail {

inline std::string suffix(size_t n, size_t total) { return total > 1 ? "_" + std::to_string(n) : ""; }

// Variables another process's guards read (control/local), to be promoted.
inline std::vector<VarId> promoted_vars(const ConcurrentProgram& p) {
  std::vector<VarId> out;
  auto shared = sync_shared(p);
  for (VarId v = 0; v < p.symbols.num_vars(); ++v)
    if (shared[v] && owner_of(p.symbols, v) >= 0) out.push_back(v);
  return out;
}

inline ValuationRun synthesize_one(const ConcurrentProgram& p, const std::string& spec_text, const Valuation& init,
                                   const PipelineConfig& cfg, std::map<std::string, std::string>& dumps,
                                   const std::string& tag) {
  ValuationRun run;
  run.init = init;
  FormulaStore fs(p.symbols, p.num_processes());
  PhiP phi = generate_phi_p(p, fs, InitMode::WithInputs);
  FId spec = parse_spec(spec_text, fs);
  FId start = fs.mk_and(valuation_formula(fs, p.symbols, init), phi.body);
  TableauOptions topts;
  topts.node_budget = cfg.node_budget;
  Tableau t = build_tableau(fs, fs.mk_and(start, spec), topts);
  run.stats = t.stats();
  if (cfg.dump_tableau) {
    dumps["tableau" + tag + ".json"] = to_json(t).dump(1) + "\n";
    dumps["tableau" + tag + ".dot"] = to_dot(t, true);
  }
  if (!t.satisfiable()) throw Error(Errc::EmptyTableau, "specification inconsistent");
  ExtractedModel em = disambiguate(extract_model(t));
  run.model_states = static_cast<size_t>(em.model.num_states());
  run.aux_max = em.aux_max;
  Synthesized s = extract_ccrs(em, p);
  if (cfg.dump_model) {
    dumps["model" + tag + ".json"] = to_json(s.skeleton.symbols, em).dump(1) + "\n";
    dumps["model" + tag + ".dot"] = to_dot(s.skeleton.symbols, em);
  }
  run.verdict = check_observability(em, s.skeleton);
  run.projection = "none";
  bool project = cfg.observability != ObservabilityMode::ForceShared;
  if (project) {
    ObservabilityVerdict v = run.verdict;
    if (cfg.observability == ObservabilityMode::Limited) v = {Observability::LimitedObservability, {}};
    Synthesized pr = project_guards(s, em, v);
    FormulaStore fs2(pr.program.symbols, p.num_processes());
    FId spec2 = parse_spec(spec_text, fs2);
    auto ver = verify_program(pr.program, fs2, spec2, {extend_initial(pr.skeleton, init)});
    if (ver.ok) {
      run.projection = observability_name(v.kind);
      s = std::move(pr);
    } else {
      run.projection = "fallback";
      std::string names;
      for (VarId u : promoted_vars(s.program)) names += (names.empty() ? "" : ", ") + s.program.symbols.var(u).name;
      run.advisory = "projection onto " + std::string(observability_name(v.kind)) + " guards is unsound (" + ver.detail +
                     "); keeping unprojected guards";
      if (!names.empty()) run.advisory += ", which read " + names + ": these must be shared";
    }
  }
  run.result = std::move(s);
  return run;
}

inline std::string sync_header(const ConcurrentProgram& p) {
  std::string out = "// synchronized by ccrsynth\n";
  auto pv = promoted_vars(p);
  if (!pv.empty()) {
    out += "// shared for synchronization:";
    for (VarId v : pv) out += " " + p.symbols.var(v).name;
    out += "\n";
  }
  return out + "\n";
}

inline nlohmann::ordered_json stats_json(const TableauStats& s) {
  return {{"or_nodes", s.or_nodes},   {"and_nodes", s.and_nodes}, {"nodes", s.nodes()},
          {"closure", s.closure_size}, {"log2_bound", s.log2_bound()}};
}

}  // namespace detail

/// Runs the whole pipeline. Never throws for module errors: they are
/// reported through exit_code / stage / message.
inline PipelineResult run_pipeline(const std::string& program_text, const std::string& spec_text, const PipelineConfig& cfg) {
  PipelineResult res;
  auto& rep = res.report;
  rep["schema"] = "ccrsynth.report/1";
  std::string stage = "parse";
  try {
    ConcurrentProgram p = parse_program(program_text);
    {
      FormulaStore probe(p.symbols, p.num_processes());
      parse_spec(spec_text, probe);
    }
    InitMode mode = cfg.mode;
    auto inputs = input_vars(p);
    if (mode == InitMode::WithInputs && inputs.empty()) {
      res.notices.push_back("no uninitialized variables: running in all-init mode");
      mode = InitMode::AllInitialized;
    }
    if (mode == InitMode::AllInitialized && !inputs.empty())
      throw Error(Errc::UninitializedInAllInitMode,
                  "variable '" + p.symbols.var(inputs.front()).name + "' has no initial value (use with-inputs mode)");
    rep["mode"] = mode == InitMode::AllInitialized ? "all-init" : "with-inputs";
    auto inits = initial_valuations(p, mode);

    stage = "synthesis";
    std::vector<std::map<std::string, std::string>> dumps(inits.size());
    std::vector<ValuationRun> runs(inits.size());
    auto one = [&](size_t n) {
      runs[n] = detail::synthesize_one(p, spec_text, inits[n], cfg, dumps[n], detail::suffix(n, inits.size()));
    };
    if (cfg.jobs > 1 && inits.size() > 1) {
      // results land in fixed slots, so the output order does not depend on scheduling
      for (size_t base = 0; base < inits.size(); base += static_cast<size_t>(cfg.jobs)) {
        std::vector<std::future<void>> fut;
        for (size_t n = base; n < std::min(inits.size(), base + static_cast<size_t>(cfg.jobs)); ++n)
          fut.push_back(std::async(std::launch::async, one, n));
        for (auto& f : fut) f.get();
      }
    } else {
      for (size_t n = 0; n < inits.size(); ++n) one(n);
    }
    for (auto& d : dumps) res.artifacts.insert(d.begin(), d.end());

    stage = "unify";
    std::vector<Synthesized> per;
    for (const auto& r : runs) per.push_back(r.result);
    Synthesized sp = unify_inits(p, inits, per);
    if (!same_skeleton(erase_synchronization(sp.program), p))
      throw Error(Errc::Internal, "erasing synchronization does not recover the input program");

    stage = "verify";
    FormulaStore fs(sp.program.symbols, p.num_processes());
    FId spec = parse_spec(spec_text, fs);
    auto sp_inits = initial_valuations(sp.program, InitMode::WithInputs);
    auto ver = verify_program(sp.program, fs, spec, sp_inits);
    nlohmann::ordered_json vj{{"ccr", ver.ok ? "PASS" : "FAIL"}, {"ccr_states", ver.states}};
    if (!ver.ok) vj["ccr_detail"] = ver.detail;

    res.artifacts["synchronized.cp"] = detail::sync_header(sp.program) + print_program(sp.program);
    if (cfg.dump_guards) res.artifacts["guards.json"] = to_json(sp).dump(1) + "\n";

    bool ok = ver.ok;
    if (ok && cfg.target != Target::Ccr) {
      stage = "codegen";
      Compiled c = cfg.target == Target::Coarse ? compile_coarse(sp.program) : compile_fine(sp.program);
      auto disc = check_lock_discipline(c);
      SimOptions so;
      so.state_limit = cfg.sim_state_limit;
      auto sc = check_compiled(c, fs, spec, sp_inits, so);
      vj["lock_program"] = sc.deadlock_free && sc.spec_holds && !disc ? "PASS" : "FAIL";
      vj["lock_discipline"] = disc ? *disc : "ok";
      vj["deadlock_free"] = sc.deadlock_free;
      vj["spec_holds"] = sc.spec_holds;
      vj["same_reachable_states"] = sc.same_states;
      vj["same_moves"] = sc.same_moves;
      vj["micro_states"] = sc.micro_states;
      if (!sc.detail.empty()) vj["lock_detail"] = sc.detail;
      ok = sc.deadlock_free && sc.spec_holds && !disc;
      for (const auto& ep : c.processes) res.artifacts[ep.name + ".sync"] = ep.text;
      res.artifacts["lockplan.json"] = to_json(c).dump(1) + "\n";
      res.compiled = std::move(c);
    }

    auto& rv = rep["valuations"] = nlohmann::ordered_json::array();
    for (const auto& r : runs) {
      nlohmann::ordered_json j;
      j["initial"] = valuation_text(p.symbols, r.init);
      j["tableau"] = detail::stats_json(r.stats);
      j["model_states"] = r.model_states;
      j["aux_values"] = r.aux_max ? *r.aux_max + 1 : 0;
      j["observability"] = observability_name(r.verdict.kind);
      j["projection"] = r.projection;
      if (!r.advisory.empty()) j["advisory"] = r.advisory;
      rv.push_back(std::move(j));
    }
    rep["verification"] = vj;
    rep["warnings"] = sp.warnings;
    for (const auto& r : runs)
      if (!r.advisory.empty()) res.notices.push_back(r.advisory);
    res.runs = std::move(runs);
    res.synthesized = std::move(sp);
    if (!ok) {
      res.exit_code = kExitVerify;
      res.stage = stage;
      res.message = "verification failed";
    }
  } catch (const Error& e) {
    res.exit_code = exit_code_for(e.code());
    res.stage = stage;
    res.message = e.code() == Errc::EmptyTableau ? "specification inconsistent" : e.what();
    rep["error"] = {{"stage", stage}, {"message", res.message}};
  }
  rep["exit_code"] = res.exit_code;
  res.artifacts["report.json"] = rep.dump(1) + "\n";
  return res;
}

struct CheckReport {
  bool pass = false;
  std::string text;
};

namespace detail {

inline void split_conj(const FormulaStore& fs, FId f, std::vector<FId>& out) {
  if (fs.kind(f) == FKind::And) {
    split_conj(fs, fs.node(f).a, out);
    split_conj(fs, fs.node(f).b, out);
  } else {
    out.push_back(f);
  }
}

// Shortest path from an initial state to a state violating q.
inline std::vector<int> bfs_to_violation(const Model& m, const std::vector<char>& q) {
  std::vector<int> parent(m.num_states(), -2);
  std::deque<int> work;
  for (int s : m.initial) {
    parent[s] = -1;
    work.push_back(s);
  }
  while (!work.empty()) {
    int s = work.front();
    work.pop_front();
    if (!q[s]) {
      std::vector<int> path;
      for (int u = s; u >= 0; u = parent[u]) path.push_back(u);
      return {path.rbegin(), path.rend()};
    }
    for (const auto& e : m.succ[s])
      if (parent[e.to] == -2) {
        parent[e.to] = s;
        work.push_back(e.to);
      }
  }
  return {};
}

}  // namespace detail

/// Model-checks a program (CCRs allowed) against a specification. A failing
/// AG conjunct comes with a shortest path to a violating state.
inline CheckReport verify_only(const ConcurrentProgram& p, const std::string& spec_text) {
  FormulaStore fs(p.symbols, p.num_processes());
  FId spec = parse_spec(spec_text, fs);
  CheckReport r;
  auto ts = build_transition_system(p, initial_valuations(p, InitMode::WithInputs));
  if (!ts.total()) {
    r.text = "FAIL: deadlock in " + valuation_text(p.symbols, ts.states[ts.deadlocks.front()]) + " (" +
             std::to_string(ts.states.size()) + " states)";
    return r;
  }
  Model m = model_of(ts, p.num_processes());
  std::vector<FId> parts;
  detail::split_conj(fs, spec, parts);
  r.pass = true;
  std::string why;
  for (FId f : parts) {
    auto sat = model_check(m, fs, f);
    int bad = -1;
    for (int s : m.initial)
      if (!sat[s]) {
        bad = s;
        break;
      }
    if (bad < 0) continue;
    r.pass = false;
    why += "violated: " + fs.str(f) + "\n";
    if (fs.kind(f) == FKind::AG) {
      auto path = detail::bfs_to_violation(m, model_check(m, fs, fs.node(f).a));
      for (size_t n = 0; n < path.size(); ++n)
        why += "  " + std::to_string(n) + ": " + valuation_text(p.symbols, m.labels[path[n]]) + "\n";
    } else {
      why += "  from " + valuation_text(p.symbols, m.labels[bad]) + "\n";
    }
  }
  r.text = std::string(r.pass ? "PASS" : "FAIL") + " (" + std::to_string(ts.states.size()) + " states)";
  if (!why.empty()) r.text += "\n" + why.substr(0, why.size() - 1);
  return r;
}

}  // namespace ccrsynth
