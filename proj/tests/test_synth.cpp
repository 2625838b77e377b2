#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ccrsynth/phigen.hpp"
#include "ccrsynth/synth.hpp"
#include "helpers.hpp"

using namespace ccrsynth;

namespace {

struct Synth {
  ConcurrentProgram base;
  std::unique_ptr<FormulaStore> fs;
  FId spec = -1;
  ExtractedModel em;
  Synthesized sp;
};

Synth synth_text(const std::string& prog, const std::string& spec, const std::vector<Valuation>* init = nullptr) {
  Synth r;
  r.base = parse_program(prog);
  r.fs = std::make_unique<FormulaStore>(r.base.symbols, r.base.num_processes());
  auto phi = generate_phi_p(r.base, *r.fs, init ? InitMode::WithInputs : InitMode::AllInitialized);
  r.spec = parse_spec(spec, *r.fs);
  FId start = init ? valuation_formula(*r.fs, r.base.symbols, init->front()) : phi.initial;
  auto t = build_tableau(*r.fs, r.fs->conj({start, phi.body, r.spec}));
  r.em = disambiguate(extract_model(t));
  r.sp = extract_ccrs(r.em, r.base);
  return r;
}

Synth synth_bench(const std::string& name) {
  return synth_text(testutil::bench(name + ".cp"), testutil::bench(name + ".lctl"));
}

Verification verify(const Synth& r, const ConcurrentProgram& p) {
  FormulaStore fs(p.symbols, p.num_processes());
  FId spec = parse_spec(r.fs->str(r.spec), fs);
  std::vector<Valuation> inits;
  for (const auto& v : initial_valuations(r.base, InitMode::WithInputs)) inits.push_back(extend_initial(p, v));
  return verify_program(p, fs, spec, inits);
}

Cover random_cover(std::mt19937& rng, const SymbolTable& st, const std::vector<VarId>& vars) {
  Cover g;
  int n = static_cast<int>(rng() % 6);
  for (int c = 0; c < n; ++c) {
    Cube cube;
    for (VarId v : vars)
      if (rng() % 3) {
        uint64_t m = (rng() % full_mask(st, v)) + 1;
        cube.masks[v] = m;
      }
    g.cubes.push_back(cube);
  }
  return g;
}

}  // namespace

TEST(Simplify, DomainCoveringMerge) {
  SymbolTable st;
  SortId b = st.int_range_sort(0, 1);
  VarId v = st.add_variable({"v", b, VarRole::Shared});
  VarId w = st.add_variable({"w", b, VarRole::Shared});
  Cover g;
  g.cubes.push_back(point_cube(st, {v, w}, {0, 0}));
  g.cubes.push_back(point_cube(st, {v, w}, {1, 0}));
  Cover s = simplify(st, g);
  ASSERT_EQ(s.cubes.size(), 1u);
  EXPECT_EQ(s.cubes[0].masks, (std::map<VarId, uint64_t>{{w, 1}}));
  EXPECT_EQ(to_string(st, cover_to_expr(st, s)), "w = 0");
}

TEST(Simplify, SingleDisjunctUnchanged) {
  SymbolTable st;
  SortId d = st.int_range_sort(0, 2);
  VarId v = st.add_variable({"v", d, VarRole::Shared});
  VarId w = st.add_variable({"w", d, VarRole::Shared});
  Cover g;
  g.cubes.push_back(point_cube(st, {v, w}, {2, 1}));
  EXPECT_EQ(simplify(st, g).cubes, g.cubes);
}

TEST(Simplify, ForcedConstants) {
  SymbolTable st;
  VarId v = st.add_variable({"v", st.int_range_sort(0, 1), VarRole::Shared});
  Cover g;
  g.cubes.push_back(point_cube(st, {v}, {0}));
  g.cubes.push_back(point_cube(st, {v}, {1}));
  EXPECT_TRUE(simplify(st, g).is_true());
  EXPECT_TRUE(simplify(st, Cover{}).is_false());
  EXPECT_EQ(to_string(st, cover_to_expr(st, Cover::always())), "true");
  EXPECT_EQ(to_string(st, cover_to_expr(st, Cover{})), "false");
}

// Simplification, complement and printing agree with the input truth table.
TEST(SimplifyProperty, ExhaustiveEquivalence) {
  SymbolTable st;
  VarId a = st.add_variable({"a", st.int_range_sort(0, 2), VarRole::Shared});
  VarId b = st.add_variable({"b", kBoolSort, VarRole::Shared});
  VarId c = st.add_variable({"c", st.int_range_sort(0, 3), VarRole::Shared});
  std::vector<VarId> vars{a, b, c};
  auto all = enumerate_valuations(st, vars);
  ASSERT_EQ(all.size(), 24u);
  std::mt19937 rng(12);
  for (int n = 0; n < 500; ++n) {
    Cover g = random_cover(rng, st, vars);
    Cover s = simplify(st, g);
    Cover nc = complement(st, g, vars);
    Expr e = cover_to_expr(st, s);
    EXPECT_LE(s.cubes.size(), std::max<size_t>(g.cubes.size(), 1));
    for (const auto& val : all) {
      bool want = cover_holds(st, g, val);
      EXPECT_EQ(cover_holds(st, s, val), want);
      EXPECT_EQ(cover_holds(st, nc, val), !want);
      EXPECT_EQ(eval_atom(st, e, val), want) << to_string(st, e);
    }
  }
}

TEST(ExtractCcrs, GuardsMatchEnabledStates) {
  for (const char* b : {"mutex2", "prodcons", "barrier", "handoff"}) {
    auto r = synth_bench(b);
    const auto& st = r.sp.skeleton.symbols;
    const auto& m = r.em.model;
    for (const auto& row : r.sp.table.entries)
      for (const auto& g : row) {
        VarId loc = r.base.processes[g.proc].control;
        std::set<int> en(g.enabled.begin(), g.enabled.end());
        for (int s = 0; s < m.num_states(); ++s) {
          if (m.labels[s][loc] != g.loc) {
            EXPECT_FALSE(en.count(s)) << b;
            continue;
          }
          EXPECT_EQ(cover_holds(st, g.guard, m.labels[s]), en.count(s) > 0) << b << " P" << g.proc + 1 << " l" << g.loc;
          if (en.count(s)) {
            bool moves = false;
            for (const auto& e : m.succ[s]) moves = moves || e.proc == g.proc;
            EXPECT_TRUE(moves);
          }
        }
      }
  }
}

TEST(ExtractCcrs, SynthesizedProgramsVerify) {
  for (const char* b : {"mutex2", "prodcons", "barrier", "handoff", "relay"}) {
    auto r = synth_bench(b);
    auto v = verify(r, r.sp.program);
    EXPECT_TRUE(v.total) << b << ": " << v.detail;
    EXPECT_TRUE(v.ok) << b << ": " << v.detail;
  }
}

TEST(ExtractCcrs, Erasure) {
  for (const char* b : {"mutex2", "prodcons", "barrier", "handoff"}) {
    auto r = synth_bench(b);
    auto erased = erase_synchronization(r.sp.program);
    EXPECT_TRUE(same_skeleton(erased, r.base)) << b;
    for (size_t i = 0; i < erased.processes.size(); ++i)
      for (size_t l = 0; l < erased.processes[i].body.size(); ++l)
        EXPECT_EQ(instruction_to_string(erased, erased.processes[i], erased.processes[i].body[l]),
                  instruction_to_string(r.base, r.base.processes[i], r.base.processes[i].body[l]));
  }
}

TEST(ExtractCcrs, AuxUpdatesComeFirst) {
  auto r = synth_bench("mutex2");
  ASSERT_GE(r.sp.aux_var, 0) << "the mutex model repeats labels";
  const auto& x = r.sp.program.symbols.var(r.sp.aux_var);
  EXPECT_EQ(x.role, VarRole::Aux);
  EXPECT_EQ(x.init, std::optional<Value>(0));
  EXPECT_EQ(r.sp.program.symbols.sort_of(r.sp.aux_var).domain.back(), *r.em.aux_max);
  int updates = 0;
  for (const auto& proc : r.sp.program.processes)
    for (const auto& ins : proc.body) {
      ASSERT_TRUE(ins.is_ccr());
      for (size_t k = 0; k < ins.block.size(); ++k)
        if (std::holds_alternative<AuxUpdate>(ins.block[k])) {
          EXPECT_EQ(k, 0u);
          ++updates;
        }
    }
  EXPECT_GT(updates, 0);
}

TEST(ExtractCcrs, UnreachableLocation) {
  auto r = synth_text("shared v : {0..1} with v = 0;\nprocess P1 { a: if (v = 0) b, c; b: goto b; c: v := 1; d: goto d }",
                      "AG true");
  const auto& c = r.sp.table.at(0, 2);
  EXPECT_TRUE(c.unreachable);
  EXPECT_TRUE(c.guard.is_false());
  EXPECT_FALSE(r.sp.warnings.empty());
}

TEST(UnifyInits, NoInputsIsIdentity) {
  auto r = synth_bench("prodcons");
  auto inits = initial_valuations(r.base, InitMode::AllInitialized);
  auto u = unify_inits(r.base, inits, {r.sp});
  EXPECT_EQ(print_program(u.program), print_program(r.sp.program));
}

TEST(UnifyInits, ShadowGuardsAndPerValuationCheck) {
  std::string prog = testutil::bench("inputs.cp"), spec = testutil::bench("inputs.lctl");
  auto base = parse_program(prog);
  auto inits = initial_valuations(base, InitMode::WithInputs);
  ASSERT_EQ(inits.size(), 4u);
  std::vector<Synthesized> per;
  for (const auto& s : inits) {
    std::vector<Valuation> one{s};
    per.push_back(synth_text(prog, spec, &one).sp);
  }
  auto u = unify_inits(base, inits, per);
  ASSERT_EQ(u.shadows.size(), 1u);
  const auto& st = u.program.symbols;
  EXPECT_EQ(st.var(u.shadows[0]).name, "v0");
  EXPECT_EQ(st.var(u.shadows[0]).init_from, std::optional<VarId>(base.symbols.lookup("v")));
  // every cube of every guard fixes v0
  for (const auto& row : u.table.entries)
    for (const auto& g : row)
      for (const auto& c : g.guard.cubes) EXPECT_TRUE(c.masks.count(u.shadows[0]));
  EXPECT_NE(print_program(u.program).find("v0 = 3"), std::string::npos);
  FormulaStore fs(st, u.program.num_processes());
  FId f = parse_spec(spec, fs);
  for (const auto& s : inits) {
    auto v = verify_program(u.program, fs, f, {extend_initial(u.program, s)});
    EXPECT_TRUE(v.ok) << valuation_text(base.symbols, s) << " " << v.detail;
  }
}

TEST(UnifyInits, SkeletonMismatch) {
  auto a = synth_bench("prodcons");
  auto b = synth_bench("mutex2");
  auto base = parse_program("shared v : {0..1}; process P1 { a: goto a }\nprocess P2 { a: goto a }");
  try {
    unify_inits(base, initial_valuations(base, InitMode::WithInputs), {a.sp, b.sp});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SkeletonMismatch);
  }
}

namespace {

const char* kObsProgram =
    "shared v : {0..2} with v = 0;\n"
    "process P1 { a: v := 1; b: v := 2; c: v := 0; d: goto a }\n"
    "process P2 { local y : {0..1} with y = 0; a: y := 1; b: y := 0; c: goto a }";

ExtractedModel fixture(const ConcurrentProgram& p, const std::vector<std::map<std::string, Value>>& states) {
  ExtractedModel em;
  em.program_vars = p.symbols.num_vars();
  for (const auto& s : states) {
    Valuation lab(p.symbols.num_vars(), 0);
    for (const auto& [n, val] : s) lab[p.symbols.lookup(n)] = val;
    em.model.add_state(lab);
  }
  for (int s = 0; s < em.model.num_states(); ++s) em.model.add_edge(s, 0, (s + 1) % em.model.num_states());
  em.model.initial = {0};
  em.aux_assign.assign(em.model.num_states(), {std::nullopt});
  return em;
}

}  // namespace

TEST(Observability, DistinctSharedProjectionIsFullyShared) {
  auto p = parse_program(kObsProgram);
  auto em = fixture(p, {{{"v", 0}}, {{"v", 1}, {"loc1", 1}}, {{"v", 2}, {"loc1", 2}, {"P2.y", 1}}});
  auto v = check_observability(em, p);
  EXPECT_EQ(v.kind, Observability::FullyShared);
}

TEST(Observability, SingleState) {
  auto p = parse_program(kObsProgram);
  EXPECT_EQ(check_observability(fixture(p, {{{"v", 0}}}), p).kind, Observability::FullyShared);
}

TEST(Observability, LocalOnlyDifference) {
  auto p = parse_program(kObsProgram);
  auto em = fixture(p, {{{"v", 0}}, {{"v", 0}, {"P2.y", 1}, {"loc2", 1}}});
  auto v = check_observability(em, p);
  EXPECT_EQ(v.kind, Observability::PerProcessObservable);
  EXPECT_EQ(v.observable, std::vector<int>{1});
  // brute-force the defining implication for both processes
  for (int i = 0; i < 2; ++i) {
    auto vars = observable_vars(p, i);
    bool ident = true;
    for (const auto& a : em.model.labels)
      for (const auto& b : em.model.labels) {
        bool agree = true;
        for (VarId x : vars) agree = agree && a[x] == b[x];
        if (agree && a != b) ident = false;
      }
    EXPECT_EQ(ident, i == 1);
  }
}

TEST(Observability, NothingIdentifies) {
  auto p = parse_program(kObsProgram);
  auto em = fixture(p, {{{"v", 0}}, {{"v", 0}, {"loc1", 1}}, {{"v", 0}, {"P2.y", 1}}});
  EXPECT_EQ(check_observability(em, p).kind, Observability::LimitedObservability);
}

// Projected guards accept exactly the enabled model states.
TEST(Projection, ExactProjectionKeepsAcceptance) {
  for (const char* b : {"prodcons", "barrier", "handoff"}) {
    auto r = synth_bench(b);
    auto verdict = check_observability(r.em, r.sp.skeleton);
    if (verdict.kind == Observability::LimitedObservability) continue;
    auto pr = project_guards(r.sp, r.em, verdict);
    const auto& st = pr.skeleton.symbols;
    for (int i : verdict.observable)
      for (const auto& g : pr.table.entries[i])
        for (int s = 0; s < r.em.model.num_states(); ++s) {
          const auto& lab = r.em.model.labels[s];
          if (lab[r.base.processes[i].control] != g.loc) continue;
          EXPECT_EQ(cover_holds(st, g.guard, lab), cover_holds(st, r.sp.table.at(i, g.loc).guard, lab)) << b;
        }
    EXPECT_TRUE(verify(r, pr.program).ok) << b;
  }
}

// projection can merge aux conditions of states told apart only by hidden
// variables; no model state may then match two branches
TEST(Projection, AuxBranchesStayDisjoint) {
  for (const char* b : {"prodcons", "barrier", "handoff", "relay", "mutex2"}) {
    auto r = synth_bench(b);
    auto verdict = check_observability(r.em, r.sp.skeleton);
    auto pr = project_guards(r.sp, r.em, verdict);
    const auto& st = pr.skeleton.symbols;
    for (const auto& row : pr.table.entries)
      for (const auto& g : row)
        for (int s : g.enabled) {
          int hits = 0;
          for (const auto& a : g.aux) hits += cover_holds(st, a.cond, r.em.model.labels[s]);
          EXPECT_LE(hits, 1) << b;
        }
  }
}

TEST(Projection, LimitedSafetyFixturePasses) {
  auto r = synth_bench("relay");
  auto verdict = check_observability(r.em, r.sp.skeleton);
  ASSERT_EQ(verdict.kind, Observability::LimitedObservability);
  auto pr = project_guards(r.sp, r.em, verdict);
  // guards of P1 no longer mention P2.r, and vice versa
  for (int i = 0; i < 2; ++i)
    for (const auto& g : pr.table.entries[i])
      for (const auto& c : g.guard.cubes)
        for (const auto& [v, _] : c.masks) {
          const auto& var = pr.skeleton.symbols.var(v);
          EXPECT_TRUE(var.role != VarRole::Control && (var.role != VarRole::Local || var.process == i));
        }
  auto v = verify(r, pr.program);
  EXPECT_TRUE(v.ok) << v.detail;
}

// The complement construction blocks a waiting process for good.
TEST(Projection, LimitedProjectionCanBreakProgress) {
  auto r = synth_bench("mutex2");
  ObservabilityVerdict limited;
  limited.kind = Observability::LimitedObservability;
  auto pr = project_guards(r.sp, r.em, limited);
  auto v = verify(r, pr.program);
  EXPECT_FALSE(v.ok);
}

TEST(Synth, GuardsJson) {
  auto r = synth_bench("prodcons");
  auto j = to_json(r.sp);
  EXPECT_EQ(j["schema"], "ccrsynth.guards/1");
  EXPECT_EQ(to_json(synth_bench("prodcons").sp).dump(), j.dump());
}
