#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "ccrsynth/codegen.hpp"
#include "ccrsynth/pipeline.hpp"
#include "helpers.hpp"

using namespace ccrsynth;

namespace {

ConcurrentProgram synthesized(const std::string& name, InitMode mode = InitMode::AllInitialized) {
  PipelineConfig cfg;
  cfg.mode = mode;
  auto r = run_pipeline(testutil::bench(name + ".cp"), testutil::bench(name + ".lctl"), cfg);
  EXPECT_EQ(r.exit_code, kExitOk) << name << ": " << r.message;
  return r.synthesized->program;
}

SimCheck simulate(const Compiled& c, const std::string& spec_file, InitMode mode = InitMode::AllInitialized) {
  FormulaStore fs(c.program.symbols, c.program.num_processes());
  FId spec = parse_spec(testutil::bench(spec_file), fs);
  return check_compiled(c, fs, spec, initial_valuations(c.program, mode));
}

int count(const std::vector<MicroOp>& code, OpKind k) {
  return static_cast<int>(std::count_if(code.begin(), code.end(), [&](const MicroOp& o) { return o.kind == k; }));
}

const char* kDisjoint =
    "shared v, w : {0..1} with v = 0, w = 0;\n"
    "process P1 { a: when v = 0 -> { v := 1 }; b: when true -> { v := 0 }; c: when true -> { goto a } }\n"
    "process P2 { a: when w = 0 -> { w := 1 }; b: when true -> { w := 0 }; c: when true -> { goto a } }";

}  // namespace

TEST(Codegen, TrivialGuardHasNoCondvar) {
  auto p = parse_program(kDisjoint);
  auto c = compile_coarse(p);
  EXPECT_FALSE(c.plan.cv_of.count({0, 1}));
  EXPECT_TRUE(c.plan.cv_of.count({0, 0}));
  EXPECT_EQ(count(c.processes[0].code[1], OpKind::Wait), 0);
  EXPECT_EQ(c.plan.condvars.size(), 2u);
  ASSERT_EQ(c.plan.locks.size(), 1u);
  EXPECT_EQ(c.plan.locks[0].name, "l");
}

// Guards only read variables their own process writes: nothing to notify.
TEST(Codegen, DisjointWritesNeedNoSignals) {
  auto p = parse_program(kDisjoint);
  for (auto c : {compile_coarse(p), compile_fine(p)})
    for (const auto& [id, sig] : c.plan.signal_map) EXPECT_TRUE(sig.empty()) << id.first << "/" << id.second;
}

TEST(Codegen, CoarseTemplateOrder) {
  auto p = synthesized("mutex2");
  auto c = compile_coarse(p);
  bool saw_aux = false;
  for (const auto& ep : c.processes) {
    const std::string& t = ep.text;
    auto w = t.find("while (!(");
    ASSERT_NE(w, std::string::npos);
    saw_aux = saw_aux || t.find("\n  if (") != std::string::npos;
    // each location block: lock, wait loop, body, signals, closing brace
    std::istringstream in(t);
    std::string line, state = "start";
    while (std::getline(in, line)) {
      if (line == "lock(l) {") state = "locked";
      else if (line.rfind("  while", 0) == 0) EXPECT_EQ(state, "locked");
      else if (line.rfind("  signal(", 0) == 0) state = "signals";
      else if (line == "}") state = "start";
      else if (state == "signals" && line.rfind("  ", 0) == 0) ADD_FAILURE() << "statement after signal: " << line;
    }
  }
  EXPECT_TRUE(saw_aux);
  EXPECT_EQ(check_lock_discipline(c), std::nullopt);
}

TEST(Codegen, FineLocksCoverOnlyUsedVariables) {
  auto p = parse_program(
      "shared v1, v2 : {0..1} with v1 = 0, v2 = 0;\n"
      "process P1 { a: when v2 = 1 -> { v2 := 0 }; b: when true -> { goto a } }\n"
      "process P2 { a: when v1 = 0 -> { v1, v2 := 1, 1 }; b: when true -> { v1 := 0 }; c: when true -> { goto a } }");
  auto c = compile_fine(p);
  auto names = [&](const std::vector<int>& ls) {
    std::vector<std::string> out;
    for (int l : ls) out.push_back(c.plan.locks[l].name);
    return out;
  };
  EXPECT_EQ(names(c.plan.var_locks.at({0, 0})), std::vector<std::string>{"l_v2"});
  EXPECT_EQ(names(c.plan.var_locks.at({1, 0})), (std::vector<std::string>{"l_v1", "l_v2"}));
  // P2.a writes v2, read by P1.a's guard
  ASSERT_TRUE(c.plan.cv_of.count({0, 0}));
  int cv = c.plan.cv_of.at({0, 0});
  const auto& sig = c.plan.signal_map.at({1, 0});
  EXPECT_NE(std::find(sig.begin(), sig.end(), cv), sig.end());
  // signal bracketed by its own lock
  const auto& code = c.processes[1].code[0];
  bool bracketed = false;
  for (size_t n = 1; n + 1 < code.size(); ++n)
    if (code[n].kind == OpKind::Signal && code[n].cv == cv)
      bracketed = code[n - 1].kind == OpKind::Acquire && code[n + 1].kind == OpKind::Release &&
                  code[n - 1].lock == c.plan.condvars[cv].lock && code[n + 1].lock == c.plan.condvars[cv].lock;
  EXPECT_TRUE(bracketed);
  EXPECT_NE(c.processes[1].text.find("lock(l_cv_P1_a) {\n  signal(cv_P1_a);\n}"), std::string::npos);
  EXPECT_EQ(check_lock_discipline(c), std::nullopt);
}

TEST(Codegen, FineWithoutSharedVariables) {
  auto p = parse_program(
      "process P1 { local y : {0..1} with y = 0; a: when P1.y = 0 -> { y := 1 }; b: when true -> { y := 0 }; c: when true -> { goto a } }\n"
      "process P2 { local z : {0..1} with z = 0; a: when P2.z = 0 -> { z := 1 }; b: when true -> { z := 0 }; c: when true -> { goto a } }");
  auto c = compile_fine(p);
  ASSERT_FALSE(c.plan.locks.empty());
  for (const auto& lk : c.plan.locks) EXPECT_EQ(lk.kind, LockKind::CondVar) << lk.name;
}

TEST(Codegen, FineLockOrderIsGlobal) {
  auto p = synthesized("mutex3");
  auto c = compile_fine(p);
  int last_kind = -1;
  for (const auto& lk : c.plan.locks) {
    int k = lk.kind == LockKind::CondVar ? 0 : lk.kind == LockKind::Data ? 1 : 2;
    EXPECT_GE(k, last_kind);
    last_kind = k;
  }
  for (const auto& [id, ls] : c.plan.var_locks) EXPECT_TRUE(std::is_sorted(ls.begin(), ls.end()));
  EXPECT_EQ(check_lock_discipline(c), std::nullopt);
}

// Every writer/reader pair across processes has a signal, and only those.
TEST(CodegenProperty, SignalCompleteness) {
  for (const char* b : {"mutex2", "prodcons", "barrier", "mutex3"}) {
    auto p = synthesized(b);
    for (auto c : {compile_coarse(p), compile_fine(p)}) {
      std::map<CcrId, detail::Access> acc;
      for (const auto& proc : p.processes)
        for (size_t l = 0; l < proc.body.size(); ++l) acc[{proc.index, static_cast<int>(l)}] = detail::access_of(p, proc.index, l);
      for (const auto& [w, aw] : acc) {
        std::set<int> want;
        for (const auto& [g, ag] : acc) {
          if (g.first == w.first || !c.plan.cv_of.count(g)) continue;
          for (VarId v : aw.writes)
            if (std::binary_search(ag.guard_reads.begin(), ag.guard_reads.end(), v)) want.insert(c.plan.cv_of.at(g));
        }
        const auto& got = c.plan.signal_map.at(w);
        EXPECT_EQ(std::set<int>(got.begin(), got.end()), want) << b;
      }
    }
  }
}

TEST(CodegenProperty, WaitsSitInRetestLoops) {
  for (const char* b : {"mutex2", "prodcons", "barrier"}) {
    auto p = synthesized(b);
    for (auto c : {compile_coarse(p), compile_fine(p)}) {
      for (const auto& ep : c.processes)
        for (const auto& code : ep.code)
          for (size_t n = 0; n < code.size(); ++n)
            if (code[n].kind == OpKind::Wait) {
              // after a wait control returns to an earlier Test of the same guard
              bool back = false;
              for (size_t m = n + 1; m < code.size() && !back; ++m)
                if (code[m].kind == OpKind::Jump && code[m].target <= static_cast<int>(n)) {
                  for (int t = code[m].target; t < static_cast<int>(n); ++t) back = back || code[t].kind == OpKind::Test;
                }
              EXPECT_TRUE(back) << b;
            }
      EXPECT_EQ(check_lock_discipline(c), std::nullopt) << b;
    }
  }
}

TEST(CodegenProperty, DisciplineCheckerRejectsBadOrder) {
  auto p = synthesized("prodcons");
  auto c = compile_fine(p);
  bool mutated = false;
  for (auto& ep : c.processes)
    for (auto& code : ep.code) {
      std::vector<size_t> acq;
      for (size_t n = 0; n < code.size(); ++n)
        if (code[n].kind == OpKind::Acquire) acq.push_back(n);
      if (acq.size() >= 2 && code[acq[0] + 1].kind == OpKind::Acquire && !mutated) {
        std::swap(code[acq[0]], code[acq[0] + 1]);
        mutated = true;
      }
    }
  ASSERT_TRUE(mutated);
  EXPECT_NE(check_lock_discipline(c), std::nullopt);
}

TEST(CodegenSimulate, CoarseAndFinePreserveBehaviour) {
  for (const char* b : {"mutex2", "prodcons", "barrier", "handoff"}) {
    auto p = synthesized(b);
    auto coarse = simulate(compile_coarse(p), std::string(b) + ".lctl");
    EXPECT_TRUE(coarse.deadlock_free) << b << coarse.detail;
    EXPECT_TRUE(coarse.spec_holds) << b << coarse.detail;
    EXPECT_TRUE(coarse.same_states) << b;
    EXPECT_TRUE(coarse.same_moves) << b;
    auto fine = simulate(compile_fine(p), std::string(b) + ".lctl");
    EXPECT_TRUE(fine.deadlock_free) << b << fine.detail;
    EXPECT_TRUE(fine.spec_holds) << b << fine.detail;
    EXPECT_TRUE(fine.same_states) << b;
  }
}

TEST(CodegenSimulate, InputsFine) {
  auto p = synthesized("inputs", InitMode::WithInputs);
  auto r = simulate(compile_fine(p), "inputs.lctl", InitMode::WithInputs);
  EXPECT_TRUE(r.deadlock_free && r.spec_holds) << r.detail;
}

TEST(CodegenSimulate, SimDeadlockThrows) {
  auto p = parse_program("shared v : {0..1} with v = 0;\nprocess P1 { a: when v = 1 -> { v := 0 }; b: when true -> { goto b } }");
  auto c = compile_coarse(p);
  try {
    simulate_lock_semantics(c, initial_valuations(p, InitMode::AllInitialized));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SimDeadlock);
  }
}

// Dropping a needed signal leaves a waiter asleep.
TEST(CodegenMutation, DroppedSignalDetected) {
  auto p = synthesized("mutex2");
  for (auto base : {compile_coarse(p), compile_fine(p)}) {
    int detected = 0, total = 0;
    for (const auto& [id, sig] : base.plan.signal_map)
      for (int cv : sig) {
        ++total;
        auto m = drop_signal(base, id, cv);
        EXPECT_EQ(check_lock_discipline(m), std::nullopt);
        auto r = simulate(m, "mutex2.lctl");
        if (!r.deadlock_free || !r.spec_holds) ++detected;
      }
    EXPECT_GT(total, 0);
    EXPECT_GE(detected, 1) << granularity_name(base.plan.granularity) << " " << detected << "/" << total;
  }
}

TEST(Codegen, RejectsPlainInstructions) {
  auto p = parse_program(testutil::bench("mutex2.cp"));
  EXPECT_THROW(compile_coarse(p), Error);
}

TEST(Codegen, LockPlanJson) {
  auto c = compile_fine(synthesized("prodcons"));
  auto j = to_json(c);
  EXPECT_EQ(j["schema"], "ccrsynth.lock_plan/1");
  EXPECT_EQ(j.dump(), to_json(compile_fine(synthesized("prodcons"))).dump());
}
