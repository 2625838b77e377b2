#pragma once

#include <random>
#include <string>

#include "ccrsynth/lang.hpp"
#include "ccrsynth/logic.hpp"
#include "ccrsynth/syntax.hpp"

namespace testutil {

inline ccrsynth::Expr atom(const ccrsynth::SymbolTable& st, const std::string& text) {
  ccrsynth::syntax::Parser p(ccrsynth::syntax::lex(text));
  auto e = p.formula(false);
  return ccrsynth::syntax::resolve_atom(st, e, ccrsynth::syntax::global_resolver(st));
}

inline ccrsynth::Expr term(const ccrsynth::SymbolTable& st, const std::string& text) {
  ccrsynth::syntax::Parser p(ccrsynth::syntax::lex(text));
  auto e = p.formula(false);
  return ccrsynth::syntax::resolve_term(st, e, ccrsynth::syntax::global_resolver(st));
}

using namespace ccrsynth;

// Two shared variables over {0,1}.
struct Vocab {
  SymbolTable st;
  VarId v, w;
  Vocab() {
    SortId d = st.int_range_sort(0, 1);
    v = st.add_variable({"v", d, VarRole::Shared});
    w = st.add_variable({"w", d, VarRole::Shared});
  }
};

inline Model random_model(std::mt19937& rng, int n, int k) {
  Model m;
  m.k = k;
  std::uniform_int_distribution<int> bit(0, 1), st(0, n - 1), pk(0, k - 1);
  for (int s = 0; s < n; ++s) m.add_state({bit(rng), bit(rng)});
  for (int s = 0; s < n; ++s) {
    m.add_edge(s, pk(rng), st(rng));
    int extra = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int e = 0; e < extra; ++e) m.add_edge(s, pk(rng), st(rng));
  }
  m.initial = {0};
  return m;
}

inline FId random_formula(std::mt19937& rng, FormulaStore& fs, const Vocab& vc, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 13 : 1);
  auto sub = [&] { return random_formula(rng, fs, vc, depth - 1); };
  const SymbolTable& st = vc.st;
  int c = pick(rng);
  switch (c) {
    case 0: return fs.atom(make_eq(st, rng() % 2 ? vc.v : vc.w, static_cast<Value>(rng() % 2)));
    case 1: return fs.neg_atom(make_eq(st, rng() % 2 ? vc.v : vc.w, static_cast<Value>(rng() % 2)));
    case 2: return fs.mk_and(sub(), sub());
    case 3: return fs.mk_or(sub(), sub());
    case 4: return fs.exi(static_cast<int>(rng() % 2), sub());
    case 5: return fs.axi(static_cast<int>(rng() % 2), sub());
    case 6: return fs.au(sub(), sub());
    case 7: return fs.eu(sub(), sub());
    case 8: return fs.ar(sub(), sub());
    case 9: return fs.er(sub(), sub());
    case 10: return fs.lnot(sub());
    case 11: return fs.ag(sub());
    case 12: return fs.af(sub());
    default: return fs.implies(sub(), sub());
  }
}

#ifdef CCRSYNTH_BENCH_DIR
inline std::string bench(const std::string& file) { return ccrsynth::read_file(std::string(CCRSYNTH_BENCH_DIR) + "/" + file); }
#endif

}  // namespace testutil
