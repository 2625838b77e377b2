#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "ccrsynth/logic.hpp"
#include "ccrsynth/tableau.hpp"
#include "helpers.hpp"

using namespace ccrsynth;

namespace {

using testutil::Vocab;
using testutil::random_formula;
using testutil::random_model;

// Bounded unrolling: on n states a path avoiding the goal for n steps loops.
std::vector<char> naive(const Model& m, FormulaStore& fs, FId f) {
  const int N = m.num_states();
  std::function<bool(FId, int)> at = [&](FId g, int s) -> bool {
    const FNode n = fs.node(g);
    auto succs = [&](int proc) {
      std::vector<int> out;
      for (const auto& e : m.succ[s])
        if (proc < 0 || e.proc == proc) out.push_back(e.to);
      return out;
    };
    std::function<bool(int, int, bool)> until = [&](int t, int d, bool all) -> bool {
      if (at(n.b, t)) return true;
      if (d == 0 || !at(n.a, t)) return false;
      for (const auto& e : m.succ[t]) {
        bool r = until(e.to, d - 1, all);
        if (all && !r) return false;
        if (!all && r) return true;
      }
      return all;
    };
    switch (n.kind) {
      case FKind::Atom: return eval_atom(fs.symbols(), n.atom, m.labels[s]);
      case FKind::NegAtom: return !eval_atom(fs.symbols(), n.atom, m.labels[s]);
      case FKind::And: return at(n.a, s) && at(n.b, s);
      case FKind::Or: return at(n.a, s) || at(n.b, s);
      case FKind::EXi: {
        for (int t : succs(n.proc))
          if (at(n.a, t)) return true;
        return false;
      }
      case FKind::AXi: {
        for (int t : succs(n.proc))
          if (!at(n.a, t)) return false;
        return true;
      }
      case FKind::EU: return until(s, N, false);
      case FKind::AU: return until(s, N, true);
      case FKind::AR: return !at(fs.eu(fs.negate(n.a), fs.negate(n.b)), s);
      case FKind::ER: return !at(fs.au(fs.negate(n.a), fs.negate(n.b)), s);
      default: ADD_FAILURE() << "non-core kind"; return false;
    }
  };
  std::vector<char> out(N);
  for (int s = 0; s < N; ++s) out[s] = at(f, s);
  return out;
}

}  // namespace

TEST(LogicParse, Examples) {
  SymbolTable st;
  SortId d = st.int_range_sort(0, 3);
  st.add_variable({"v1", d, VarRole::Shared});
  st.add_variable({"v2", d, VarRole::Shared});
  FormulaStore fs(st, 2);
  FId r = parse_spec("AG (v1 = 2 -> AF (v2 = 3))", fs);
  EXPECT_EQ(fs.kind(r), FKind::AG);
  EXPECT_EQ(fs.kind(fs.node(r).a), FKind::Implies);
  EXPECT_THROW(parse_spec("A[v1 = 0 U v1 = 1 U v1 = 2]", fs), Error);
  try {
    parse_spec("", fs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SyntaxError);
  }
  // re-parsing the printed form gives the same node
  for (const char* s : {"AG (v1 = 2 -> AF (v2 = 3))", "E[v1 = 0 U EX2 v2 = 1]", "A[v1 < v2 U AX1 !(v1 = 0)]"}) {
    FId f = parse_spec(s, fs);
    EXPECT_EQ(parse_spec(fs.str(f), fs), f) << fs.str(f);
  }
}

TEST(LogicParse, MutualExclusionOverLocations) {
  auto p = parse_program(testutil::bench("mutex2.cp"));
  FormulaStore fs(p.symbols, 2);
  FId f = parse_spec("AG !(loc1 = c & loc2 = c)", fs);
  EXPECT_EQ(fs.kind(f), FKind::AG);
  EXPECT_THROW(parse_spec("AG !(loc1 = zz)", fs), Error);
}

TEST(LogicNnf, Abbreviations) {
  Vocab vc;
  FormulaStore fs(vc.st, 2);
  FId p = fs.atom(make_eq(vc.st, vc.v, 1));
  FId np = fs.neg_atom(make_eq(vc.st, vc.v, 1));
  // ¬AG p = EF ¬p = E[true U ¬p]
  EXPECT_EQ(fs.to_nnf(fs.lnot(fs.ag(p))), fs.eu(fs.tru(), np));
  EXPECT_EQ(fs.to_nnf(fs.ax(p)), fs.mk_and(fs.axi(0, p), fs.axi(1, p)));
  EXPECT_EQ(fs.to_nnf(fs.ex(p)), fs.mk_or(fs.exi(0, p), fs.exi(1, p)));
}

TEST(LogicClassify, Shapes) {
  Vocab vc;
  FormulaStore fs(vc.st, 2);
  FId p = fs.atom(make_eq(vc.st, vc.v, 1));
  EXPECT_EQ(fs.classify(p).shape, Shape::Elementary);
  FId ag = fs.to_nnf(fs.ag(p));
  auto c = fs.classify(ag);
  EXPECT_EQ(c.shape, Shape::Alpha);
  EXPECT_EQ(c.first, p);
  EXPECT_EQ(c.second, fs.ax_all(ag));
  FId af = fs.to_nnf(fs.af(p));
  c = fs.classify(af);
  EXPECT_EQ(c.shape, Shape::Beta);
  EXPECT_EQ(c.first, p);
  EXPECT_EQ(c.second, fs.ax_all(af));
  EXPECT_EQ(fs.classify(fs.exi(0, p)).shape, Shape::Elementary);
}

TEST(LogicCheck, SmallModel) {
  Vocab vc;
  FormulaStore fs(vc.st, 2);
  Model m;
  m.k = 2;
  m.add_state({0, 0});
  m.add_state({1, 0});
  m.add_edge(0, 0, 1);
  m.add_edge(1, 0, 1);
  m.initial = {0};
  FId v1 = fs.atom(make_eq(vc.st, vc.v, 1));
  EXPECT_TRUE(model_check(m, fs, fs.af(v1))[0]);
  EXPECT_FALSE(model_check(m, fs, fs.exi(1, fs.tru()))[0]);
  EXPECT_TRUE(model_check(m, fs, fs.axi(1, fs.fls()))[0]);
  Model bad = m;
  bad.succ[1].clear();
  EXPECT_THROW(model_check(bad, fs, v1), Error);
}

// v + 1 = w has no value at v = 2: the atom is false and its negation true,
// in the checker and in the tableau alike
TEST(LogicCheck, UndefinedAtomIsFalse) {
  SymbolTable st;
  SortId d = st.int_range_sort(0, 2);
  VarId v = st.add_variable({"v", d, VarRole::Shared});
  st.add_variable({"w", d, VarRole::Shared});
  FormulaStore fs(st, 1);
  FId a = fs.atom(testutil::atom(st, "v + 1 = w"));
  FId na = fs.negate(a);
  Model m;
  m.k = 1;
  m.add_state({2, 0});
  m.add_edge(0, 0, 0);
  m.initial = {0};
  EXPECT_FALSE(model_check(m, fs, a)[0]);
  EXPECT_TRUE(model_check(m, fs, na)[0]);
  Valuation val{2, 0};
  EXPECT_EQ(fs.try_eval_prop(a, val), std::optional<bool>(false));
  EXPECT_EQ(fs.try_eval_prop(na, val), std::optional<bool>(true));
  EXPECT_FALSE(fs.eval_prop(a, val));
  // w unknown: still undetermined
  EXPECT_EQ(fs.try_eval_prop(a, Valuation{1, kUnset}), std::nullopt);
  FId init = fs.atom(make_eq(st, v, 2));
  FId prog = fs.ag(fs.exi(0, fs.tru()));
  EXPECT_TRUE(build_tableau(fs, fs.conj({init, na, fs.to_nnf(prog)})).satisfiable());
  EXPECT_FALSE(build_tableau(fs, fs.conj({init, a, fs.to_nnf(prog)})).satisfiable());
}

TEST(LogicCheck, ProgramExamples) {
  auto p = parse_program(testutil::bench("mutex2.cp"));
  FormulaStore fs(p.symbols, 2);
  auto r = program_satisfies(p, fs, parse_spec("AG !(loc1 = c & loc2 = c)", fs));
  EXPECT_FALSE(r.holds);
  ASSERT_TRUE(r.witness);
  EXPECT_TRUE(program_satisfies(p, fs, fs.tru()).holds);

  auto q = parse_program("shared v : {0..1} with v = 0; shared w : {0..1} with w = 0;\n"
                         "process P1 { a: w := 1; b: w := 0; c: goto a }");
  FormulaStore fq(q.symbols, 1);
  EXPECT_TRUE(program_satisfies(q, fq, parse_spec("AG (v = 0)", fq)).holds);
  EXPECT_FALSE(program_satisfies(q, fq, parse_spec("AG (w = 0)", fq)).holds);
}

TEST(LogicProperty, DualityOnRandomModels) {
  Vocab vc;
  std::mt19937 rng(2024);
  for (int n = 0; n < 300; ++n) {
    FormulaStore fs(vc.st, 2);
    Model m = random_model(rng, 1 + static_cast<int>(rng() % 5), 2);
    FId f = random_formula(rng, fs, vc, 3);
    auto pos = model_check(m, fs, f);
    auto neg = model_check(m, fs, fs.negate(f));
    for (int s = 0; s < m.num_states(); ++s) EXPECT_NE(pos[s] != 0, neg[s] != 0) << fs.str(f);
  }
}

TEST(LogicProperty, AgreesWithBoundedUnrolling) {
  Vocab vc;
  std::mt19937 rng(99);
  for (int n = 0; n < 300; ++n) {
    FormulaStore fs(vc.st, 2);
    Model m = random_model(rng, 1 + static_cast<int>(rng() % 4), 2);
    FId f = fs.to_nnf(random_formula(rng, fs, vc, 2));
    EXPECT_EQ(model_check(m, fs, f), naive(m, fs, f)) << fs.str(f);
  }
}

TEST(LogicExport, ModelJson) {
  Vocab vc;
  Model m;
  m.add_state({0, 1});
  m.add_edge(0, 0, 0);
  m.initial = {0};
  auto j = to_json(vc.st, m);
  EXPECT_FALSE(j.dump().empty());
  EXPECT_NE(to_dot(vc.st, m).find("digraph"), std::string::npos);
}
