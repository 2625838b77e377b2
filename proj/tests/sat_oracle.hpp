#pragma once

// Bounded satisfiability oracle: is there a total model with n states whose
// state 0 satisfies f? Encoded for Z3. Least fixpoints (AU/EU) carry an
// integer rank that must drop along the witnessing step; release formulas
// are greatest fixpoints, so any post-fixpoint will do. The formula is in
// NNF, hence every subformula occurs positively and one-way implications
// suffice.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <z3++.h>

#include "ccrsynth/logic.hpp"
#include "ccrsynth/tableau.hpp"
#include "helpers.hpp"

namespace oracle {

using namespace ccrsynth;

// all total valuations of the symbol table
inline std::vector<Valuation> all_valuations(const SymbolTable& st) {
  std::vector<Valuation> out{Valuation(st.num_vars(), kUnset)};
  for (VarId v = 0; v < st.num_vars(); ++v) {
    std::vector<Valuation> next;
    for (const auto& val : out)
      for (Value x : st.sort_of(v).domain) {
        next.push_back(val);
        next.back()[v] = x;
      }
    out = std::move(next);
  }
  return out;
}

class BoundedSat {
 public:
  BoundedSat(FormulaStore& fs, int states) : fs_(fs), n_(states), vals_(all_valuations(fs.symbols())) {}

  // model with `states` states satisfying f at state 0, if any
  std::optional<Model> solve(FId f) {
    memo_.clear();
    lab_.clear();
    edge_.clear();
    ctx_ = std::make_unique<z3::context>();
    z3::context& ctx = *ctx_;
    z3::solver s(ctx);
    int k = fs_.num_processes();
    edge_.assign(k, {});
    for (int i = 0; i < n_; ++i) {
      lab_.push_back(ctx.int_const(("val" + std::to_string(i)).c_str()));
      s.add(lab_[i] >= 0 && lab_[i] < static_cast<int>(vals_.size()));
    }
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          edge_[p].push_back(ctx.bool_const(("e" + std::to_string(p) + "_" + std::to_string(i) + "_" + std::to_string(j)).c_str()));
    for (int i = 0; i < n_; ++i) {
      z3::expr_vector out(ctx);
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < n_; ++j) out.push_back(e(p, i, j));
      s.add(z3::mk_or(out));
    }
    FId g = fs_.to_nnf(f);
    encode(g, s);
    s.add(memo_.at(g)[0]);
    if (s.check() != z3::sat) return std::nullopt;
    z3::model zm = s.get_model();
    Model m;
    m.k = k;
    for (int i = 0; i < n_; ++i) m.add_state(vals_[zm.eval(lab_[i], true).get_numeral_int()]);
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          if (zm.eval(e(p, i, j), true).is_true()) m.add_edge(i, p, j);
    m.initial = {0};
    return m;
  }

 private:
  z3::expr e(int p, int i, int j) const { return edge_[p][i * n_ + j]; }
  z3::expr any_edge(int i, int j) const {
    z3::expr r = ctx_->bool_val(false);
    for (const auto& rel : edge_) r = r || rel[i * n_ + j];
    return r;
  }

  z3::expr atom_at(FId f, int i) {
    z3::expr r = ctx_->bool_val(false);
    for (size_t v = 0; v < vals_.size(); ++v)
      if (*detail::safe_try_eval(fs_, f, vals_[v])) r = r || lab_[i] == static_cast<int>(v);
    return r;
  }

  void encode(FId f, z3::solver& s) {
    if (memo_.count(f)) return;
    const FNode n = fs_.node(f);
    std::vector<z3::expr> h;
    std::string tag = "f" + std::to_string(f) + "_";
    for (int i = 0; i < n_; ++i) h.push_back(ctx_->bool_const((tag + std::to_string(i)).c_str()));
    memo_.emplace(f, h);
    if (n.a >= 0) encode(n.a, s);
    if (n.b >= 0) encode(n.b, s);
    std::vector<z3::expr> rank;
    if (n.kind == FKind::AU || n.kind == FKind::EU)
      for (int i = 0; i < n_; ++i) {
        rank.push_back(ctx_->int_const((tag + "r" + std::to_string(i)).c_str()));
        s.add(rank[i] >= 0);
      }
    for (int i = 0; i < n_; ++i) {
      z3::expr body = ctx_->bool_val(true);
      auto A = [&](int j) { return memo_.at(n.a)[j]; };
      auto B = [&](int j) { return memo_.at(n.b)[j]; };
      switch (n.kind) {
        case FKind::Atom:
        case FKind::NegAtom: body = fs_.is_true(f) ? ctx_->bool_val(true) : fs_.is_false(f) ? ctx_->bool_val(false) : atom_at(f, i); break;
        case FKind::And: body = A(i) && B(i); break;
        case FKind::Or: body = A(i) || B(i); break;
        case FKind::EXi: {
          body = ctx_->bool_val(false);
          for (int j = 0; j < n_; ++j) body = body || (e(n.proc, i, j) && A(j));
          break;
        }
        case FKind::AXi: {
          for (int j = 0; j < n_; ++j) body = body && z3::implies(e(n.proc, i, j), A(j));
          break;
        }
        case FKind::EU: {
          z3::expr step = ctx_->bool_val(false);
          for (int j = 0; j < n_; ++j) step = step || (any_edge(i, j) && h[j] && rank[j] < rank[i]);
          body = B(i) || (A(i) && step);
          break;
        }
        case FKind::AU: {
          z3::expr step = ctx_->bool_val(true);
          for (int j = 0; j < n_; ++j) step = step && z3::implies(any_edge(i, j), h[j] && rank[j] < rank[i]);
          body = B(i) || (A(i) && step);
          break;
        }
        case FKind::ER: {
          z3::expr step = ctx_->bool_val(false);
          for (int j = 0; j < n_; ++j) step = step || (any_edge(i, j) && h[j]);
          body = B(i) && (A(i) || step);
          break;
        }
        case FKind::AR: {
          z3::expr step = ctx_->bool_val(true);
          for (int j = 0; j < n_; ++j) step = step && z3::implies(any_edge(i, j), h[j]);
          body = B(i) && (A(i) || step);
          break;
        }
        default: throw Error(Errc::Unsupported, "oracle expects NNF");
      }
      s.add(z3::implies(h[i], body));
    }
  }

  FormulaStore& fs_;
  int n_;
  std::vector<Valuation> vals_;
  std::unique_ptr<z3::context> ctx_;  // before the expressions, so it dies last
  std::vector<z3::expr> lab_;
  std::vector<std::vector<z3::expr>> edge_;
  std::map<FId, std::vector<z3::expr>> memo_;
};

// Two shared variables over {0..2}, two processes.
struct Vocab3 {
  SymbolTable st;
  VarId v, w;
  std::vector<Expr> atoms;
  Vocab3() {
    SortId d = st.int_range_sort(0, 2);
    v = st.add_variable({"v", d, VarRole::Shared});
    w = st.add_variable({"w", d, VarRole::Shared});
    for (const char* a : {"v = 0", "v = 1", "v = 2", "w = 0", "w = 1", "w = 2", "v = w", "v < w", "v + 1 = w"})
      atoms.push_back(testutil::atom(st, a));
  }
};

// atoms drawn from the first `pool` entries of a per-formula shuffle
inline FId random_formula3(std::mt19937& rng, FormulaStore& fs, const Vocab3& vc, int depth, const std::vector<Expr>* pool = nullptr) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 13 : 1);
  const auto& atoms = pool ? *pool : vc.atoms;
  auto sub = [&] { return random_formula3(rng, fs, vc, depth - 1, &atoms); };
  auto lit = [&] { return atoms[rng() % atoms.size()]; };
  switch (pick(rng)) {
    case 0: return fs.atom(lit());
    case 1: return fs.neg_atom(lit());
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

// NNF formula with the target-th node (preorder) flipped between its
// universal and existential (or conjunctive and disjunctive) form
inline FId mutate(FormulaStore& fs, FId f, int& target) {
  const FNode n = fs.node(f);
  bool here = target-- == 0;
  FId x = n.a >= 0 ? mutate(fs, n.a, target) : -1;
  FId y = n.b >= 0 ? mutate(fs, n.b, target) : -1;
  switch (n.kind) {
    case FKind::And: return here ? fs.mk_or(x, y) : fs.mk_and(x, y);
    case FKind::Or: return here ? fs.mk_and(x, y) : fs.mk_or(x, y);
    case FKind::EXi: return here ? fs.axi(n.proc, x) : fs.exi(n.proc, x);
    case FKind::AXi: return here ? fs.exi(n.proc, x) : fs.axi(n.proc, x);
    case FKind::AU: return here ? fs.eu(x, y) : fs.au(x, y);
    case FKind::EU: return here ? fs.au(x, y) : fs.eu(x, y);
    case FKind::AR: return here ? fs.er(x, y) : fs.ar(x, y);
    case FKind::ER: return here ? fs.ar(x, y) : fs.er(x, y);
    default: return here ? fs.negate(f) : f;
  }
}

// Mixed shapes: plain random formulas are nearly always satisfiable, so
// half the corpus is a conjunction of small pieces or a formula against
// the negation of another one.
inline FId random_formula(std::mt19937& rng, FormulaStore& fs, const Vocab3& vc) {
  std::vector<Expr> pool = vc.atoms;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(2);
  auto r = [&](int d) { return random_formula3(rng, fs, vc, d, &pool); };
  std::vector<Expr> one(pool.begin(), pool.begin() + 1);
  auto r1 = [&](int d) { return random_formula3(rng, fs, vc, d, &one); };
  switch (rng() % 8) {
    case 0: return random_formula3(rng, fs, vc, 3);
    case 1: return r(3);
    case 2: return fs.conj({r(2), r(2), r(1)});
    case 3: return fs.mk_and(r(2), fs.lnot(r(2)));
    case 4: return fs.mk_and(r1(3), fs.lnot(r1(3)));
    case 5: return fs.conj({r1(2), r1(2), r1(2)});
    default: {
      FId g = fs.to_nnf(r(3));
      int at = static_cast<int>(rng() % fs.closure(g).size());
      return fs.mk_and(g, fs.negate(mutate(fs, g, at)));
    }
  }
}

// AG (EX1 true | EX2 true): some process can always move
inline FId progress(FormulaStore& fs) { return fs.ag(fs.mk_or(fs.exi(0, fs.tru()), fs.exi(1, fs.tru()))); }

struct Agreement {
  int cases = 0, sat = 0, agree = 0;
  std::vector<std::string> mismatches;
};

// random formulas with closure <= max_closure, each conjoined with progress;
// tableau verdict vs bounded search over `states`-state models
inline Agreement compare_with_tableau(unsigned seed, int cases, size_t max_closure = 12, int states = 6) {
  Vocab3 vc;
  std::mt19937 rng(seed);
  Agreement out;
  while (out.cases < cases) {
    FormulaStore fs(vc.st, 2);
    FId g = fs.to_nnf(random_formula(rng, fs, vc));
    if (fs.closure(g).size() > max_closure || fs.is_true(g) || fs.is_false(g)) continue;
    FId f = fs.mk_and(g, fs.to_nnf(progress(fs)));
    ++out.cases;
    bool t = build_tableau(fs, f).satisfiable();
    BoundedSat bs(fs, states);
    auto m = bs.solve(f);
    bool o = m.has_value();
    // the oracle's own witness must check
    if (o && !model_check(*m, fs, f)[0]) out.mismatches.push_back("oracle witness rejected: " + fs.str(f));
    out.sat += t;
    if (t == o) {
      ++out.agree;
    } else {
      out.mismatches.push_back(std::string("tableau ") + (t ? "sat" : "unsat") + ", bounded " + (o ? "sat" : "unsat") + ": " + fs.str(f));
    }
  }
  return out;
}

}  // namespace oracle
