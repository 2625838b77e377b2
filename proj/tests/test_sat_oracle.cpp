#include <gtest/gtest.h>

#include "sat_oracle.hpp"

using namespace ccrsynth;

TEST(BoundedOracle, HandPicked) {
  oracle::Vocab3 vc;
  FormulaStore fs(vc.st, 2);
  FId prog = fs.to_nnf(oracle::progress(fs));
  auto parse = [&](const char* s) { return fs.mk_and(fs.to_nnf(parse_spec(s, fs)), prog); };
  oracle::BoundedSat bs(fs, 4);
  EXPECT_TRUE(bs.solve(parse("AG (v = 0) -> true")));
  EXPECT_FALSE(bs.solve(parse("AG (v = 0) & EF !(v = 0)")));
  EXPECT_TRUE(bs.solve(parse("v = 0 & AF v = 2 & AG (v = 2 -> EX1 v = 1)")));
  EXPECT_FALSE(bs.solve(parse("E[v = 0 U w = 1] & AG !(w = 1)")));
  // three distinct labels on one path
  const char* chain = "v = 0 & EX1 (v = 1 & EX1 v = 2)";
  EXPECT_FALSE(oracle::BoundedSat(fs, 2).solve(parse(chain)));
  EXPECT_TRUE(bs.solve(parse(chain)));
}

TEST(BoundedOracle, WitnessesSatisfyFormula) {
  oracle::Vocab3 vc;
  std::mt19937 rng(7);
  int sat = 0;
  for (int n = 0; n < 60; ++n) {
    FormulaStore fs(vc.st, 2);
    FId f = fs.mk_and(fs.to_nnf(oracle::random_formula3(rng, fs, vc, 3)), fs.to_nnf(oracle::progress(fs)));
    oracle::BoundedSat bs(fs, 4);
    if (auto m = bs.solve(f)) {
      ++sat;
      EXPECT_TRUE(model_check(*m, fs, f)[0]) << fs.str(f);
    }
  }
  EXPECT_GT(sat, 10);
}

// the tableau decides exactly what bounded search over six-state models finds
TEST(TableauVsBoundedSearch, RandomCorpus) {
  auto r = oracle::compare_with_tableau(99, 500);
  EXPECT_EQ(r.agree, r.cases);
  for (const auto& m : r.mismatches) ADD_FAILURE() << m;
  // both verdicts represented
  EXPECT_GE(r.sat, 40);
  EXPECT_GE(r.cases - r.sat, 40);
}
