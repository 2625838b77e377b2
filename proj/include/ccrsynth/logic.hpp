#pragma once

// Branching-time formulas with process-indexed next-time operators, their
// negation normal form and alpha/beta classification, and an explicit-state
// model checker built on least/greatest fixpoints.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "ccrsynth/error.hpp"
#include "ccrsynth/lang.hpp"
#include "ccrsynth/syntax.hpp"
#include "ccrsynth/vocab.hpp"

namespace ccrsynth {

using FId = int;

// Core kinds first. AR/ER (release) are the duals of AU/EU and are what
// AG/EG become in negation normal form.
enum class FKind {
  Atom,
  NegAtom,
  And,
  Or,
  EXi,
  AXi,
  AU,
  EU,
  AR,
  ER,
  // surface sugar, removed by to_nnf
  Not,
  Implies,
  Iff,
  EX,
  AX,
  EF,
  AF,
  EG,
  AG,
};

/// Truth of an L-atom in a formula. A term escaping its domain makes the
/// atom false (so its negation holds).
inline bool atom_holds(const SymbolTable& st, const Expr& e, const Valuation& s) {
  try {
    return eval_atom(st, e, s);
  } catch (const Error& err) {
    if (err.code() != Errc::PartialApplication) throw;
    return false;
  }
}

struct FNode {
  FKind kind = FKind::Atom;
  Expr atom;      // Atom / NegAtom
  int proc = -1;  // EXi / AXi, 0-based
  FId a = -1;
  FId b = -1;
};

enum class Shape { Elementary, Alpha, Beta };

struct Classified {
  Shape shape = Shape::Elementary;
  FId first = -1;
  FId second = -1;
};

/// Hash-consed formula DAG. Ids are assigned in creation order, so equal
/// formulas share an id and `<` on ids is a stable canonical order.
class FormulaStore {
 public:
  FormulaStore(const SymbolTable& st, int k) : st_(&st), k_(k) {
    true_ = atom(make_bool(true));
    false_ = atom(make_bool(false));
  }

  const SymbolTable& symbols() const { return *st_; }
  void rebind(const SymbolTable& st) { st_ = &st; }
  int num_processes() const { return k_; }
  size_t size() const { return nodes_.size(); }
  const FNode& node(FId f) const { return nodes_.at(f); }
  FKind kind(FId f) const { return nodes_.at(f).kind; }

  FId tru() const { return true_; }
  FId fls() const { return false_; }
  bool is_true(FId f) const { return f == true_; }
  bool is_false(FId f) const { return f == false_; }

  FId atom(Expr e) {
    if (e->sort != kBoolSort) throw Error(Errc::SortError, "atom is not boolean: " + to_string(*st_, e));
    if (e->op == Op::Not) return neg_atom(e->args[0]);
    FNode n;
    n.kind = FKind::Atom;
    n.atom = std::move(e);
    return intern(n);
  }
  FId neg_atom(Expr e) {
    if (e->sort != kBoolSort) throw Error(Errc::SortError, "atom is not boolean: " + to_string(*st_, e));
    if (e->op == Op::Const) return atom(make_bool(e->value == 0));
    if (e->op == Op::Not) return atom(e->args[0]);
    FNode n;
    n.kind = FKind::NegAtom;
    n.atom = std::move(e);
    return intern(n);
  }
  FId mk_and(FId a, FId b) {
    if (is_false(a) || is_false(b)) return false_;
    if (is_true(a)) return b;
    if (is_true(b) || a == b) return a;
    return bin(FKind::And, a, b);
  }
  FId mk_or(FId a, FId b) {
    if (is_true(a) || is_true(b)) return true_;
    if (is_false(a)) return b;
    if (is_false(b) || a == b) return a;
    return bin(FKind::Or, a, b);
  }
  FId conj(const std::vector<FId>& fs) {
    FId r = true_;
    for (FId f : fs) r = mk_and(r, f);
    return r;
  }
  FId disj(const std::vector<FId>& fs) {
    FId r = false_;
    for (FId f : fs) r = mk_or(r, f);
    return r;
  }
  FId exi(int i, FId f) { return indexed(FKind::EXi, i, f); }
  FId axi(int i, FId f) { return indexed(FKind::AXi, i, f); }
  FId au(FId p, FId q) { return bin(FKind::AU, p, q); }
  FId eu(FId p, FId q) { return bin(FKind::EU, p, q); }
  FId ar(FId p, FId q) { return bin(FKind::AR, p, q); }
  FId er(FId p, FId q) { return bin(FKind::ER, p, q); }

  FId lnot(FId f) { return un(FKind::Not, f); }
  FId implies(FId a, FId b) { return bin(FKind::Implies, a, b); }
  FId iff(FId a, FId b) { return bin(FKind::Iff, a, b); }
  FId ex(FId f) { return un(FKind::EX, f); }
  FId ax(FId f) { return un(FKind::AX, f); }
  FId ef(FId f) { return un(FKind::EF, f); }
  FId af(FId f) { return un(FKind::AF, f); }
  FId eg(FId f) { return un(FKind::EG, f); }
  FId ag(FId f) { return un(FKind::AG, f); }

  /// ⋀ᵢ AXᵢ f and ⋁ᵢ EXᵢ f.
  FId ax_all(FId f) {
    std::vector<FId> v;
    for (int i = 0; i < k_; ++i) v.push_back(axi(i, f));
    return conj(v);
  }
  FId ex_any(FId f) {
    std::vector<FId> v;
    for (int i = 0; i < k_; ++i) v.push_back(exi(i, f));
    return disj(v);
  }

  bool is_core(FId f) const { return kind(f) <= FKind::ER; }

  /// Negation normal form over the core kinds; AX/EX are expanded per process.
  FId to_nnf(FId f) { return nnf(f, false); }
  /// NNF of ¬f.
  FId negate(FId f) { return nnf(f, true); }

  Classified classify(FId f) {
    const FNode n = node(f);
    switch (n.kind) {
      case FKind::Atom:
      case FKind::NegAtom:
      case FKind::EXi:
      case FKind::AXi: return {Shape::Elementary, -1, -1};
      case FKind::And: return {Shape::Alpha, n.a, n.b};
      case FKind::Or: return {Shape::Beta, n.a, n.b};
      case FKind::AU: return {Shape::Beta, n.b, mk_and(n.a, ax_all(f))};
      case FKind::EU: return {Shape::Beta, n.b, mk_and(n.a, ex_any(f))};
      case FKind::AR: return {Shape::Alpha, n.b, mk_or(n.a, ax_all(f))};
      case FKind::ER: return {Shape::Alpha, n.b, mk_or(n.a, ex_any(f))};
      default: throw Error(Errc::Unsupported, "classify expects a formula in negation normal form");
    }
  }

  bool is_eventuality(FId f) const { return kind(f) == FKind::AU || kind(f) == FKind::EU; }

  /// Built only from atoms, negated atoms, ∧ and ∨.
  bool is_propositional(FId f) const {
    auto it = prop_memo_.find(f);
    if (it != prop_memo_.end()) return it->second;
    const FNode& n = node(f);
    bool r;
    switch (n.kind) {
      case FKind::Atom:
      case FKind::NegAtom: r = true; break;
      case FKind::And:
      case FKind::Or: r = is_propositional(n.a) && is_propositional(n.b); break;
      default: r = false;
    }
    prop_memo_[f] = r;
    return r;
  }

  bool eval_prop(FId f, const Valuation& s) const {
    const FNode& n = node(f);
    switch (n.kind) {
      case FKind::Atom: return atom_holds(*st_, n.atom, s);
      case FKind::NegAtom: return !atom_holds(*st_, n.atom, s);
      case FKind::And: return eval_prop(n.a, s) && eval_prop(n.b, s);
      case FKind::Or: return eval_prop(n.a, s) || eval_prop(n.b, s);
      default: throw Error(Errc::Unsupported, "not a propositional formula");
    }
  }
  /// Three-valued evaluation over a partial valuation.
  std::optional<bool> try_eval_prop(FId f, const Valuation& s) const {
    const FNode& n = node(f);
    switch (n.kind) {
      case FKind::Atom:
      case FKind::NegAtom: {
        std::optional<Value> v;
        try {
          v = try_eval(*st_, n.atom, s);
        } catch (const Error& err) {
          if (err.code() != Errc::PartialApplication) throw;
          v = 0;
        }
        if (!v) return std::nullopt;
        return (*v != 0) == (n.kind == FKind::Atom);
      }
      case FKind::And: {
        auto a = try_eval_prop(n.a, s);
        if (a && !*a) return false;
        auto b = try_eval_prop(n.b, s);
        if (b && !*b) return false;
        if (a && b) return true;
        return std::nullopt;
      }
      case FKind::Or: {
        auto a = try_eval_prop(n.a, s);
        if (a && *a) return true;
        auto b = try_eval_prop(n.b, s);
        if (b && *b) return true;
        if (a && b) return false;
        return std::nullopt;
      }
      default: throw Error(Errc::Unsupported, "not a propositional formula");
    }
  }

  /// Fischer–Ladner style closure of an NNF formula: itself, the components
  /// of its alpha/beta expansions, and the bodies of next-time formulas.
  std::vector<FId> closure(FId f) {
    std::vector<FId> out;
    std::vector<char> seen;
    std::vector<FId> stack{f};
    while (!stack.empty()) {
      FId g = stack.back();
      stack.pop_back();
      if (static_cast<size_t>(g) >= seen.size()) seen.resize(size() + 1, 0);
      if (seen[g]) continue;
      seen[g] = 1;
      out.push_back(g);
      const FNode n = node(g);
      if (n.kind == FKind::EXi || n.kind == FKind::AXi) {
        stack.push_back(n.a);
        continue;
      }
      auto c = classify(g);
      if (c.shape != Shape::Elementary) {
        stack.push_back(c.first);
        stack.push_back(c.second);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Concrete syntax accepted by parse_spec.
  std::string str(FId f) const {
    const FNode& n = node(f);
    auto p = [&](FId g) { return wrap(g); };
    auto idx = [&](const char* op) { return std::string(op) + std::to_string(n.proc + 1) + " " + p(n.a); };
    switch (n.kind) {
      case FKind::Atom: return atom_text(n.atom);
      case FKind::NegAtom: return "!" + paren_atom(n.atom);
      case FKind::And: return p(n.a) + " & " + p(n.b);
      case FKind::Or: return p(n.a) + " | " + p(n.b);
      case FKind::EXi: return idx("EX");
      case FKind::AXi: return idx("AX");
      case FKind::AU: return is_true(n.a) ? "AF " + p(n.b) : "A[" + str(n.a) + " U " + str(n.b) + "]";
      case FKind::EU: return is_true(n.a) ? "EF " + p(n.b) : "E[" + str(n.a) + " U " + str(n.b) + "]";
      case FKind::AR:
        return is_false(n.a) ? "AG " + p(n.b) : "!E[" + neg_text(n.a) + " U " + neg_text(n.b) + "]";
      case FKind::ER:
        return is_false(n.a) ? "EG " + p(n.b) : "!A[" + neg_text(n.a) + " U " + neg_text(n.b) + "]";
      case FKind::Not: return "!" + p(n.a);
      case FKind::Implies: return p(n.a) + " -> " + p(n.b);
      case FKind::Iff: return p(n.a) + " <-> " + p(n.b);
      case FKind::EX: return "EX " + p(n.a);
      case FKind::AX: return "AX " + p(n.a);
      case FKind::EF: return "EF " + p(n.a);
      case FKind::AF: return "AF " + p(n.a);
      case FKind::EG: return "EG " + p(n.a);
      case FKind::AG: return "AG " + p(n.a);
    }
    return "?";
  }

  /// Variables mentioned by atoms of f.
  std::vector<VarId> vars(FId f) const {
    std::vector<VarId> out;
    std::vector<FId> stack{f};
    std::vector<char> seen(size(), 0);
    while (!stack.empty()) {
      FId g = stack.back();
      stack.pop_back();
      if (seen[g]) continue;
      seen[g] = 1;
      const FNode& n = node(g);
      if (n.atom) collect_vars(n.atom, out);
      if (n.a >= 0) stack.push_back(n.a);
      if (n.b >= 0) stack.push_back(n.b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  FId intern(const FNode& n) {
    std::string key = std::to_string(static_cast<int>(n.kind)) + "|" + std::to_string(n.proc) + "|" +
                      std::to_string(n.a) + "|" + std::to_string(n.b) + "|" + (n.atom ? expr_key(n.atom) : "");
    auto [it, fresh] = index_.emplace(std::move(key), static_cast<FId>(nodes_.size()));
    if (fresh) nodes_.push_back(n);
    return it->second;
  }
  FId bin(FKind k, FId a, FId b) {
    FNode n;
    n.kind = k;
    n.a = a;
    n.b = b;
    return intern(n);
  }
  FId un(FKind k, FId a) { return bin(k, a, -1); }
  FId indexed(FKind k, int i, FId f) {
    if (i < 0 || i >= k_) throw Error(Errc::SortError, "process index " + std::to_string(i + 1) + " out of range");
    FNode n;
    n.kind = k;
    n.proc = i;
    n.a = f;
    return intern(n);
  }

  FId nnf(FId f, bool neg) {
    auto key = std::make_pair(f, neg);
    auto it = nnf_memo_.find(key);
    if (it != nnf_memo_.end()) return it->second;
    const FNode n = node(f);
    FId r = -1;
    switch (n.kind) {
      case FKind::Atom: r = neg ? neg_atom(n.atom) : f; break;
      case FKind::NegAtom: r = neg ? atom(n.atom) : f; break;
      case FKind::And: r = neg ? mk_or(nnf(n.a, true), nnf(n.b, true)) : mk_and(nnf(n.a, false), nnf(n.b, false)); break;
      case FKind::Or: r = neg ? mk_and(nnf(n.a, true), nnf(n.b, true)) : mk_or(nnf(n.a, false), nnf(n.b, false)); break;
      case FKind::EXi: r = neg ? axi(n.proc, nnf(n.a, true)) : exi(n.proc, nnf(n.a, false)); break;
      case FKind::AXi: r = neg ? exi(n.proc, nnf(n.a, true)) : axi(n.proc, nnf(n.a, false)); break;
      case FKind::AU: r = neg ? er(nnf(n.a, true), nnf(n.b, true)) : au(nnf(n.a, false), nnf(n.b, false)); break;
      case FKind::EU: r = neg ? ar(nnf(n.a, true), nnf(n.b, true)) : eu(nnf(n.a, false), nnf(n.b, false)); break;
      case FKind::AR: r = neg ? eu(nnf(n.a, true), nnf(n.b, true)) : ar(nnf(n.a, false), nnf(n.b, false)); break;
      case FKind::ER: r = neg ? au(nnf(n.a, true), nnf(n.b, true)) : er(nnf(n.a, false), nnf(n.b, false)); break;
      case FKind::Not: r = nnf(n.a, !neg); break;
      case FKind::Implies:
        r = neg ? mk_and(nnf(n.a, false), nnf(n.b, true)) : mk_or(nnf(n.a, true), nnf(n.b, false));
        break;
      case FKind::Iff: {
        FId pa = nnf(n.a, false), na = nnf(n.a, true), pb = nnf(n.b, false), nb = nnf(n.b, true);
        r = neg ? mk_or(mk_and(pa, nb), mk_and(na, pb)) : mk_or(mk_and(pa, pb), mk_and(na, nb));
        break;
      }
      case FKind::EX: r = neg ? ax_all(nnf(n.a, true)) : ex_any(nnf(n.a, false)); break;
      case FKind::AX: r = neg ? ex_any(nnf(n.a, true)) : ax_all(nnf(n.a, false)); break;
      case FKind::EF: r = neg ? ar(false_, nnf(n.a, true)) : eu(true_, nnf(n.a, false)); break;
      case FKind::AF: r = neg ? er(false_, nnf(n.a, true)) : au(true_, nnf(n.a, false)); break;
      case FKind::EG: r = neg ? au(true_, nnf(n.a, true)) : er(false_, nnf(n.a, false)); break;
      case FKind::AG: r = neg ? eu(true_, nnf(n.a, true)) : ar(false_, nnf(n.a, false)); break;
    }
    nnf_memo_[key] = r;
    return r;
  }

  std::string wrap(FId g) const {
    const FNode& n = node(g);
    switch (n.kind) {
      case FKind::Atom:
      case FKind::NegAtom:
      case FKind::AU:
      case FKind::EU: {
        std::string s = str(g);
        if (n.kind == FKind::AU || n.kind == FKind::EU) {
          if (is_true(n.a)) return "(" + s + ")";
        }
        return s;
      }
      default: return "(" + str(g) + ")";
    }
  }
  std::string atom_text(const Expr& e) const {
    std::string s = to_string(*st_, e);
    if (e->op == Op::And || e->op == Op::Or) return "(" + s + ")";
    return s;
  }
  std::string paren_atom(const Expr& e) const {
    if (e->op == Op::Var || e->op == Op::Const) return to_string(*st_, e);
    return "(" + to_string(*st_, e) + ")";
  }
  std::string neg_text(FId f) const {
    // printed negation of an NNF subformula; reparses to an equivalent formula
    return "!" + wrap(f);
  }

  const SymbolTable* st_;
  int k_;
  std::vector<FNode> nodes_;
  std::unordered_map<std::string, FId> index_;
  std::map<std::pair<FId, bool>, FId> nnf_memo_;
  mutable std::unordered_map<FId, bool> prop_memo_;
  FId true_ = -1, false_ = -1;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline FId resolve_formula(FormulaStore& fs, const syntax::PExpr& e, const syntax::NameResolver& r) {
  using syntax::PKind;
  const SymbolTable& st = fs.symbols();
  switch (e->kind) {
    case PKind::Bool: return e->value ? fs.tru() : fs.fls();
    case PKind::Unary: return fs.lnot(resolve_formula(fs, e->kids[0], r));
    case PKind::Binary: {
      const std::string& op = e->name;
      if (op == "&" || op == "|" || op == "->" || op == "<->") {
        FId a = resolve_formula(fs, e->kids[0], r);
        FId b = resolve_formula(fs, e->kids[1], r);
        if (op == "&") return fs.mk_and(a, b);
        if (op == "|") return fs.mk_or(a, b);
        if (op == "->") return fs.implies(a, b);
        return fs.iff(a, b);
      }
      return fs.atom(syntax::resolve_atom(st, e, r));
    }
    case PKind::Temporal: {
      FId a = resolve_formula(fs, e->kids[0], r);
      const std::string& op = e->name;
      if (op == "AXi" || op == "EXi") {
        if (e->value < 1 || e->value > fs.num_processes())
          throw Error(Errc::SortError, "no process " + std::to_string(e->value), e->loc);
        int i = static_cast<int>(e->value) - 1;
        return op == "AXi" ? fs.axi(i, a) : fs.exi(i, a);
      }
      if (op == "AG") return fs.ag(a);
      if (op == "AF") return fs.af(a);
      if (op == "EG") return fs.eg(a);
      if (op == "EF") return fs.ef(a);
      if (op == "AX") return fs.ax(a);
      return fs.ex(a);
    }
    case PKind::Until: {
      FId a = resolve_formula(fs, e->kids[0], r);
      FId b = resolve_formula(fs, e->kids[1], r);
      return e->universal ? fs.au(a, b) : fs.eu(a, b);
    }
    case PKind::Ident:
    case PKind::Int: return fs.atom(syntax::resolve_atom(st, e, r));
  }
  throw Error(Errc::SyntaxError, "unresolvable formula", e->loc);
}

}  // namespace detail

/// Parses a specification over the store's symbol table. Sugar is kept.
inline FId parse_spec(std::string_view text, FormulaStore& fs) {
  syntax::Parser p(syntax::lex(text));
  if (p.at_end()) throw Error(Errc::SyntaxError, "empty specification", p.peek().loc);
  std::vector<syntax::PExpr> parts;
  // a spec file may hold several formulas separated by ';', read as a conjunction
  do {
    if (p.at_end()) break;
    parts.push_back(p.formula(true));
  } while (p.accept(";"));
  if (!p.at_end()) p.fail("unexpected trailing input");
  auto res = syntax::global_resolver(fs.symbols());
  FId out = -1;
  for (const auto& e : parts) {
    FId f = detail::resolve_formula(fs, e, res);
    out = out < 0 ? f : fs.mk_and(out, f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Models and model checking

struct Edge {
  int proc = 0;
  int to = 0;
  bool operator==(const Edge& o) const { return proc == o.proc && to == o.to; }
  bool operator<(const Edge& o) const { return std::tie(proc, to) < std::tie(o.proc, o.to); }
};

struct Model {
  std::vector<Valuation> labels;
  std::vector<std::vector<Edge>> succ;
  std::vector<int> initial;
  int k = 1;

  int num_states() const { return static_cast<int>(labels.size()); }
  int add_state(Valuation v) {
    labels.push_back(std::move(v));
    succ.emplace_back();
    return num_states() - 1;
  }
  void add_edge(int from, int proc, int to) {
    Edge e{proc, to};
    auto& s = succ.at(from);
    if (std::find(s.begin(), s.end(), e) == s.end()) s.push_back(e);
  }
  size_t num_edges() const {
    size_t n = 0;
    for (const auto& s : succ) n += s.size();
    return n;
  }
  std::vector<int> non_total_states() const {
    std::vector<int> out;
    for (int s = 0; s < num_states(); ++s)
      if (succ[s].empty()) out.push_back(s);
    return out;
  }
};

inline Model model_of(const TransitionSystem& ts, int k) {
  Model m;
  m.k = k;
  m.labels = ts.states;
  m.succ.resize(ts.states.size());
  for (const auto& t : ts.transitions) m.add_edge(t.from, t.proc, t.to);
  m.initial = ts.initial;
  return m;
}

/// Bottom-up fixpoint evaluation. Returns one flag per state.
class ModelChecker {
 public:
  ModelChecker(const Model& m, FormulaStore& fs) : m_(m), fs_(fs) {
    auto bad = m.non_total_states();
    if (!bad.empty())
      throw Error(Errc::NonTotalModel, "state " + std::to_string(bad.front()) + " has no successor (" +
                                           std::to_string(bad.size()) + " such states)");
    pred_.resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s)
      for (const auto& e : m.succ[s]) pred_[e.to].push_back(s);
  }

  const std::vector<char>& sat(FId f) {
    auto it = memo_.find(f);
    if (it != memo_.end()) return it->second;
    std::vector<char> r = compute(f);
    return memo_[f] = std::move(r);
  }

 private:
  using Set = std::vector<char>;

  Set compute(FId f) {
    const FNode n = fs_.node(f);
    const int N = m_.num_states();
    Set r(N, 0);
    switch (n.kind) {
      case FKind::Atom:
      case FKind::NegAtom:
        for (int s = 0; s < N; ++s) r[s] = atom_holds(fs_.symbols(), n.atom, m_.labels[s]) == (n.kind == FKind::Atom);
        return r;
      case FKind::And: {
        Set a = sat(n.a), b = sat(n.b);
        for (int s = 0; s < N; ++s) r[s] = a[s] && b[s];
        return r;
      }
      case FKind::Or: {
        Set a = sat(n.a), b = sat(n.b);
        for (int s = 0; s < N; ++s) r[s] = a[s] || b[s];
        return r;
      }
      case FKind::Not: return complement(sat(n.a));
      case FKind::Implies: {
        Set a = sat(n.a), b = sat(n.b);
        for (int s = 0; s < N; ++s) r[s] = !a[s] || b[s];
        return r;
      }
      case FKind::Iff: {
        Set a = sat(n.a), b = sat(n.b);
        for (int s = 0; s < N; ++s) r[s] = (a[s] != 0) == (b[s] != 0);
        return r;
      }
      case FKind::EXi:
      case FKind::AXi:
      case FKind::EX:
      case FKind::AX: {
        Set a = sat(n.a);
        bool exists = n.kind == FKind::EXi || n.kind == FKind::EX;
        int proc = (n.kind == FKind::EXi || n.kind == FKind::AXi) ? n.proc : -1;
        for (int s = 0; s < N; ++s) {
          bool any = false, all = true;
          for (const auto& e : m_.succ[s]) {
            if (proc >= 0 && e.proc != proc) continue;
            any = any || a[e.to];
            all = all && a[e.to];
          }
          r[s] = exists ? any : all;
        }
        return r;
      }
      case FKind::EU: return eu(sat(n.a), sat(n.b));
      case FKind::AU: return au(sat(n.a), sat(n.b));
      case FKind::EF: return eu(Set(N, 1), sat(n.a));
      case FKind::AF: return au(Set(N, 1), sat(n.a));
      // A[p R q] = ¬E[¬p U ¬q], E[p R q] = ¬A[¬p U ¬q]
      case FKind::AR: return complement(eu(complement(sat(n.a)), complement(sat(n.b))));
      case FKind::ER: return complement(au(complement(sat(n.a)), complement(sat(n.b))));
      case FKind::AG: return complement(eu(Set(N, 1), complement(sat(n.a))));
      case FKind::EG: return complement(au(Set(N, 1), complement(sat(n.a))));
    }
    return r;
  }

  static Set complement(Set s) {
    for (auto& c : s) c = !c;
    return s;
  }

  // least fixpoint: backward search from q through p-states
  Set eu(const Set& p, const Set& q) const {
    const int N = m_.num_states();
    Set r(N, 0);
    std::deque<int> work;
    for (int s = 0; s < N; ++s)
      if (q[s]) {
        r[s] = 1;
        work.push_back(s);
      }
    while (!work.empty()) {
      int t = work.front();
      work.pop_front();
      for (int s : pred_[t])
        if (!r[s] && p[s]) {
          r[s] = 1;
          work.push_back(s);
        }
    }
    return r;
  }

  // least fixpoint: a p-state joins once every outgoing edge leads into the set
  Set au(const Set& p, const Set& q) const {
    const int N = m_.num_states();
    Set r(N, 0);
    std::vector<int> pending(N);
    std::deque<int> work;
    for (int s = 0; s < N; ++s) {
      pending[s] = static_cast<int>(m_.succ[s].size());
      if (q[s]) {
        r[s] = 1;
        work.push_back(s);
      }
    }
    while (!work.empty()) {
      int t = work.front();
      work.pop_front();
      for (int s : pred_[t]) {
        if (r[s] || !p[s]) continue;
        if (--pending[s] == 0) {
          r[s] = 1;
          work.push_back(s);
        }
      }
    }
    return r;
  }

  const Model& m_;
  FormulaStore& fs_;
  std::vector<std::vector<int>> pred_;
  std::unordered_map<FId, Set> memo_;
};

inline std::vector<char> model_check(const Model& m, FormulaStore& fs, FId f) {
  ModelChecker mc(m, fs);
  return mc.sat(f);
}

/// True iff f holds at every initial state of m.
inline bool holds_initially(const Model& m, FormulaStore& fs, FId f) {
  auto r = model_check(m, fs, f);
  for (int s : m.initial)
    if (!r[s]) return false;
  return true;
}

struct SatisfactionResult {
  bool holds = true;
  std::optional<Valuation> witness;  // a failing initial state
  size_t states = 0;
};

/// P ⊨ f: f holds at every initial state of P's transition system.
inline SatisfactionResult program_satisfies(const ConcurrentProgram& prog, FormulaStore& fs, FId f) {
  auto ts = build_transition_system(prog, initial_valuations(prog, InitMode::WithInputs));
  if (!ts.total())
    throw Error(Errc::NonTotalModel,
                "program deadlocks in " + valuation_text(prog.symbols, ts.states[ts.deadlocks.front()]));
  Model m = model_of(ts, prog.num_processes());
  auto r = model_check(m, fs, f);
  SatisfactionResult out;
  out.states = ts.states.size();
  for (int s : m.initial)
    if (!r[s]) {
      out.holds = false;
      out.witness = m.labels[s];
      break;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json to_json(const SymbolTable& st, const Model& m) {
  nlohmann::ordered_json j;
  j["schema"] = "ccrsynth.model/1";
  j["processes"] = m.k;
  auto& states = j["states"] = nlohmann::ordered_json::array();
  for (int s = 0; s < m.num_states(); ++s) {
    nlohmann::ordered_json e;
    e["id"] = s;
    e["label"] = valuation_json(st, m.labels[s]);
    auto& out = e["succ"] = nlohmann::ordered_json::array();
    for (const auto& ed : m.succ[s]) out.push_back({{"proc", ed.proc + 1}, {"to", ed.to}});
    states.push_back(std::move(e));
  }
  j["initial"] = m.initial;
  return j;
}

inline std::string to_dot(const SymbolTable& st, const Model& m) {
  std::ostringstream out;
  out << "digraph model {\n  node [shape=box];\n";
  for (int s = 0; s < m.num_states(); ++s) {
    bool init = std::find(m.initial.begin(), m.initial.end(), s) != m.initial.end();
    out << "  m" << s << " [label=\"" << dot_escape(valuation_text(st, m.labels[s])) << "\""
        << (init ? ", penwidth=2" : "") << "];\n";
  }
  for (int s = 0; s < m.num_states(); ++s)
    for (const auto& e : m.succ[s]) out << "  m" << s << " -> m" << e.to << " [label=\"" << e.proc + 1 << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace ccrsynth
