#pragma once

// Sorts, variables and built-in symbols, plus evaluation of terms and atoms
// under a valuation.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccrsynth/error.hpp"

namespace ccrsynth {

using Value = int;
using SortId = int;
using VarId = int;

enum class SortKind { Int, Bool, Location };

struct Sort {
  std::string name;
  SortKind kind = SortKind::Int;
  std::vector<Value> domain;        // ordered; empty only for the unbounded literal sort
  std::vector<std::string> labels;  // Location: label names indexed by value
  bool bounded = true;

  bool contains(Value v) const {
    return !bounded || std::find(domain.begin(), domain.end(), v) != domain.end();
  }
  int index_of(Value v) const {
    auto it = std::find(domain.begin(), domain.end(), v);
    return it == domain.end() ? -1 : static_cast<int>(it - domain.begin());
  }
  std::string show(Value v) const {
    switch (kind) {
      case SortKind::Bool: return v ? "true" : "false";
      case SortKind::Location:
        return (v >= 0 && v < static_cast<int>(labels.size())) ? labels[v] : "?" + std::to_string(v);
      case SortKind::Int: break;
    }
    return std::to_string(v);
  }
};

enum class VarRole { Control, Shared, Local, Aux, Shadow };

struct Variable {
  std::string name;
  SortId sort = 0;
  VarRole role = VarRole::Shared;
  int process = -1;                 // owning process for Control/Local
  std::optional<Value> init;        // constant initializer
  std::optional<VarId> init_from;   // `with v0 = v`: copies another variable's initial value
};

inline constexpr SortId kBoolSort = 0;
inline constexpr SortId kIntLiteralSort = 1;

class SymbolTable {
 public:
  SymbolTable() {
    sorts_.push_back(Sort{"bool", SortKind::Bool, {0, 1}, {}, true});
    sorts_.push_back(Sort{"int", SortKind::Int, {}, {}, false});
  }

  SortId add_sort(Sort s) {
    if (s.bounded && s.domain.empty()) throw Error(Errc::SortError, "sort '" + s.name + "' has an empty domain");
    sorts_.push_back(std::move(s));
    return static_cast<SortId>(sorts_.size() - 1);
  }

  SortId int_range_sort(Value lo, Value hi) {
    std::vector<Value> d;
    for (Value v = lo; v <= hi; ++v) d.push_back(v);
    return int_sort(std::move(d));
  }

  // Structurally identical integer sorts are shared.
  SortId int_sort(std::vector<Value> domain) {
    for (SortId i = 0; i < static_cast<SortId>(sorts_.size()); ++i) {
      if (sorts_[i].kind == SortKind::Int && sorts_[i].bounded && sorts_[i].domain == domain) return i;
    }
    std::string name = "{";
    for (size_t i = 0; i < domain.size(); ++i) name += (i ? "," : "") + std::to_string(domain[i]);
    name += "}";
    return add_sort(Sort{name, SortKind::Int, std::move(domain), {}, true});
  }

  VarId add_variable(Variable v) {
    if (by_name_.count(v.name)) throw Error(Errc::DuplicateName, "duplicate variable '" + v.name + "'");
    if (v.sort < 0 || v.sort >= static_cast<SortId>(sorts_.size()))
      throw Error(Errc::UnknownSymbol, "unknown sort for '" + v.name + "'");
    if (v.init && !sorts_[v.sort].contains(*v.init))
      throw Error(Errc::SortError, "initial value of '" + v.name + "' outside its domain");
    by_name_[v.name] = static_cast<VarId>(vars_.size());
    vars_.push_back(std::move(v));
    return static_cast<VarId>(vars_.size() - 1);
  }

  std::optional<VarId> find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  VarId lookup(const std::string& name) const {
    auto id = find(name);
    if (!id) throw Error(Errc::UnknownSymbol, "undeclared identifier '" + name + "'");
    return *id;
  }

  const Variable& var(VarId id) const {
    if (id < 0 || id >= static_cast<VarId>(vars_.size()))
      throw Error(Errc::UnknownSymbol, "variable id " + std::to_string(id) + " out of range");
    return vars_[id];
  }
  Variable& var_mut(VarId id) { return vars_.at(id); }
  const Sort& sort(SortId id) const {
    if (id < 0 || id >= static_cast<SortId>(sorts_.size()))
      throw Error(Errc::UnknownSymbol, "sort id " + std::to_string(id) + " out of range");
    return sorts_[id];
  }
  const Sort& sort_of(VarId id) const { return sort(var(id).sort); }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_sorts() const { return static_cast<int>(sorts_.size()); }

  std::string show(VarId id, Value v) const { return sort_of(id).show(v); }

  static bool compatible(const Sort& a, const Sort& b, SortId ia, SortId ib) {
    if (ia == ib) return true;
    return a.kind == SortKind::Int && b.kind == SortKind::Int;
  }
  bool compatible(SortId a, SortId b) const { return compatible(sort(a), sort(b), a, b); }

 private:
  std::vector<Sort> sorts_;
  std::vector<Variable> vars_;
  std::map<std::string, VarId> by_name_;
};

/// A valuation assigns a value to every variable of a symbol table, indexed by VarId.
using Valuation = std::vector<Value>;

inline constexpr Value kUnset = INT32_MIN;

// ---------------------------------------------------------------------------
// Terms and atoms. Atoms are bool-sorted terms: equality and the ordering
// predicates are treated as bool-valued built-ins so that guards can combine
// atoms with the boolean connectives.

enum class Op { Var, Const, Add, Sub, Not, And, Or, Eq, Ne, Lt, Gt, Le, Ge };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  Op op = Op::Const;
  SortId sort = kBoolSort;
  VarId var = -1;
  Value value = 0;
  std::vector<Expr> args;
};

inline bool is_predicate(Op op) {
  return op == Op::Eq || op == Op::Ne || op == Op::Lt || op == Op::Gt || op == Op::Le || op == Op::Ge;
}

inline Expr make_var(const SymbolTable& st, VarId v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Var;
  n->var = v;
  n->sort = st.var(v).sort;
  return n;
}

inline Expr make_const(SortId sort, Value v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->sort = sort;
  n->value = v;
  return n;
}

inline Expr make_bool(bool b) { return make_const(kBoolSort, b ? 1 : 0); }

namespace detail {
inline SortId arith_result_sort(const SymbolTable& st, const std::vector<Expr>& args) {
  for (const auto& a : args)
    if (st.sort(a->sort).bounded) return a->sort;
  return kIntLiteralSort;
}
}  // namespace detail

/// Builds a well-sorted application; throws SortError on mismatch.
inline Expr make_apply(const SymbolTable& st, Op op, std::vector<Expr> args) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  auto kind = [&](size_t i) { return st.sort(args[i]->sort).kind; };
  auto need = [&](size_t arity) {
    if (args.size() != arity) throw Error(Errc::SortError, "wrong arity for built-in");
  };
  switch (op) {
    case Op::Add:
    case Op::Sub:
      need(2);
      if (kind(0) != SortKind::Int || kind(1) != SortKind::Int)
        throw Error(Errc::SortError, "arithmetic on non-integer operands");
      n->sort = detail::arith_result_sort(st, args);
      break;
    case Op::Not:
      need(1);
      if (args[0]->sort != kBoolSort) throw Error(Errc::SortError, "'!' applied to non-boolean term");
      n->sort = kBoolSort;
      break;
    case Op::And:
    case Op::Or:
      need(2);
      if (args[0]->sort != kBoolSort || args[1]->sort != kBoolSort)
        throw Error(Errc::SortError, "boolean connective applied to non-boolean term");
      n->sort = kBoolSort;
      break;
    case Op::Eq:
    case Op::Ne:
      need(2);
      if (!st.compatible(args[0]->sort, args[1]->sort))
        throw Error(Errc::SortError, "equality between terms of different sorts (" + st.sort(args[0]->sort).name +
                                         " vs " + st.sort(args[1]->sort).name + ")");
      n->sort = kBoolSort;
      break;
    case Op::Lt:
    case Op::Gt:
    case Op::Le:
    case Op::Ge:
      need(2);
      if (kind(0) != SortKind::Int || kind(1) != SortKind::Int)
        throw Error(Errc::SortError, "ordering predicate on non-integer operands");
      n->sort = kBoolSort;
      break;
    case Op::Var:
    case Op::Const:
      throw Error(Errc::SortError, "make_apply called with a leaf operator");
  }
  n->args = std::move(args);
  return n;
}

inline Expr make_eq(const SymbolTable& st, VarId v, Value val) {
  return make_apply(st, Op::Eq, {make_var(st, v), make_const(st.var(v).sort, val)});
}

inline Expr make_and(const SymbolTable& st, Expr a, Expr b) { return make_apply(st, Op::And, {std::move(a), std::move(b)}); }
inline Expr make_or(const SymbolTable& st, Expr a, Expr b) { return make_apply(st, Op::Or, {std::move(a), std::move(b)}); }
inline Expr make_not(const SymbolTable& st, Expr a) { return make_apply(st, Op::Not, {std::move(a)}); }

inline Value eval_term(const SymbolTable& st, const Expr& t, const Valuation& s) {
  switch (t->op) {
    case Op::Var:
      if (t->var < 0 || t->var >= static_cast<VarId>(s.size()))
        throw Error(Errc::UnknownSymbol, "variable id " + std::to_string(t->var) + " not in valuation");
      if (s[t->var] == kUnset) throw Error(Errc::UnknownSymbol, "variable '" + st.var(t->var).name + "' is unassigned");
      return s[t->var];
    case Op::Const: return t->value;
    case Op::Add:
    case Op::Sub: {
      Value a = eval_term(st, t->args[0], s);
      Value b = eval_term(st, t->args[1], s);
      Value r = t->op == Op::Add ? a + b : a - b;
      const Sort& rs = st.sort(t->sort);
      if (!rs.contains(r))
        throw Error(Errc::PartialApplication, std::to_string(a) + (t->op == Op::Add ? " + " : " - ") + std::to_string(b) +
                                                  " = " + std::to_string(r) + " escapes domain " + rs.name);
      return r;
    }
    case Op::Not: return eval_term(st, t->args[0], s) ? 0 : 1;
    case Op::And: return (eval_term(st, t->args[0], s) && eval_term(st, t->args[1], s)) ? 1 : 0;
    case Op::Or: return (eval_term(st, t->args[0], s) || eval_term(st, t->args[1], s)) ? 1 : 0;
    case Op::Eq: return eval_term(st, t->args[0], s) == eval_term(st, t->args[1], s);
    case Op::Ne: return eval_term(st, t->args[0], s) != eval_term(st, t->args[1], s);
    case Op::Lt: return eval_term(st, t->args[0], s) < eval_term(st, t->args[1], s);
    case Op::Gt: return eval_term(st, t->args[0], s) > eval_term(st, t->args[1], s);
    case Op::Le: return eval_term(st, t->args[0], s) <= eval_term(st, t->args[1], s);
    case Op::Ge: return eval_term(st, t->args[0], s) >= eval_term(st, t->args[1], s);
  }
  return 0;
}

inline bool eval_atom(const SymbolTable& st, const Expr& g, const Valuation& s) {
  if (g->sort != kBoolSort) throw Error(Errc::SortError, "atom is not boolean-valued");
  return eval_term(st, g, s) != 0;
}

/// Collects the variables occurring in t (sorted, unique).
inline void collect_vars(const Expr& t, std::vector<VarId>& out) {
  if (t->op == Op::Var) out.push_back(t->var);
  for (const auto& a : t->args) collect_vars(a, out);
}
inline std::vector<VarId> vars_of(const Expr& t) {
  std::vector<VarId> v;
  collect_vars(t, v);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Three-valued evaluation over a partial valuation (kUnset = unknown).
/// Returns nullopt when the value is not determined.
inline std::optional<Value> try_eval(const SymbolTable& st, const Expr& t, const Valuation& s) {
  switch (t->op) {
    case Op::Var:
      if (s[t->var] == kUnset) return std::nullopt;
      return s[t->var];
    case Op::Const: return t->value;
    case Op::And: {
      auto a = try_eval(st, t->args[0], s);
      if (a && !*a) return 0;
      auto b = try_eval(st, t->args[1], s);
      if (b && !*b) return 0;
      if (a && b) return 1;
      return std::nullopt;
    }
    case Op::Or: {
      auto a = try_eval(st, t->args[0], s);
      if (a && *a) return 1;
      auto b = try_eval(st, t->args[1], s);
      if (b && *b) return 1;
      if (a && b) return 0;
      return std::nullopt;
    }
    default:
      for (const auto& a : t->args)
        if (!try_eval(st, a, s)) return std::nullopt;
      return eval_term(st, t, s);
  }
}

namespace detail {
inline int precedence(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Not: return 3;
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Gt:
    case Op::Le:
    case Op::Ge: return 4;
    case Op::Add:
    case Op::Sub: return 5;
    default: return 6;
  }
}
inline const char* op_text(Op op) {
  switch (op) {
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::And: return " & ";
    case Op::Or: return " | ";
    case Op::Eq: return " = ";
    case Op::Ne: return " != ";
    case Op::Lt: return " < ";
    case Op::Gt: return " > ";
    case Op::Le: return " <= ";
    case Op::Ge: return " >= ";
    default: return "?";
  }
}
}  // namespace detail

/// Prints a term in the concrete syntax shared by programs and specs.
inline std::string to_string(const SymbolTable& st, const Expr& t, int parent_prec = 0) {
  std::string s;
  int p = detail::precedence(t->op);
  switch (t->op) {
    case Op::Var: return st.var(t->var).name;
    case Op::Const: return st.sort(t->sort).show(t->value);
    case Op::Not: s = "!" + to_string(st, t->args[0], p + 1); break;
    default:
      // comparisons are non-associative, arithmetic is left-associative
      s = to_string(st, t->args[0], p) + detail::op_text(t->op) + to_string(st, t->args[1], p + 1);
      break;
  }
  if (p < parent_prec || (p == 4 && parent_prec == 4)) return "(" + s + ")";
  return s;
}

/// Structural key used for hash-consing formulas (variables by id).
inline std::string expr_key(const Expr& t) {
  switch (t->op) {
    case Op::Var: return "v" + std::to_string(t->var);
    case Op::Const: return "c" + std::to_string(t->sort) + ":" + std::to_string(t->value);
    default: {
      std::string s = "(" + std::to_string(static_cast<int>(t->op));
      for (const auto& a : t->args) s += " " + expr_key(a);
      return s + ")";
    }
  }
}

}  // namespace ccrsynth
