#pragma once

// From an extracted model to a program of conditional critical regions:
// guard tables, auxiliary-variable updates, unification over input values,
// and projection of guards onto observable variables.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccrsynth/error.hpp"
#include "ccrsynth/lang.hpp"
#include "ccrsynth/logic.hpp"
#include "ccrsynth/modelx.hpp"

namespace ccrsynth {

// ---------------------------------------------------------------------------
// Guards as covers: a disjunction of cubes, each cube restricting some
// variables to a set of domain values (bit i = the i-th domain value).

struct Cube {
  std::map<VarId, uint64_t> masks;  // absent variable = unconstrained
  bool operator<(const Cube& o) const { return masks < o.masks; }
  bool operator==(const Cube& o) const { return masks == o.masks; }
};

struct Cover {
  std::vector<Cube> cubes;  // empty = false
  bool is_false() const { return cubes.empty(); }
  bool is_true() const { return cubes.size() == 1 && cubes[0].masks.empty(); }
  static Cover always() { return Cover{{Cube{}}}; }
};

inline uint64_t full_mask(const SymbolTable& st, VarId v) {
  size_t n = st.sort_of(v).domain.size();
  if (n > 63) throw Error(Errc::Unsupported, "domain of '" + st.var(v).name + "' too large for guard synthesis");
  return (uint64_t{1} << n) - 1;
}

inline uint64_t value_bit(const SymbolTable& st, VarId v, Value c) {
  int i = st.sort_of(v).index_of(c);
  if (i < 0) throw Error(Errc::SortError, "value outside domain of " + st.var(v).name);
  return uint64_t{1} << i;
}

/// The cube fixing `vars` to their values in s.
inline Cube point_cube(const SymbolTable& st, const std::vector<VarId>& vars, const Valuation& s) {
  Cube c;
  for (VarId v : vars) c.masks[v] = value_bit(st, v, s[v]);
  return c;
}

inline bool cube_holds(const SymbolTable& st, const Cube& c, const Valuation& s) {
  for (const auto& [v, m] : c.masks)
    if (!(m & value_bit(st, v, s[v]))) return false;
  return true;
}

inline bool cover_holds(const SymbolTable& st, const Cover& g, const Valuation& s) {
  for (const auto& c : g.cubes)
    if (cube_holds(st, c, s)) return true;
  return false;
}

namespace detail {

inline bool cube_subset(const SymbolTable& st, const Cube& a, const Cube& b) {
  for (const auto& [v, mb] : b.masks) {
    auto it = a.masks.find(v);
    uint64_t ma = it == a.masks.end() ? full_mask(st, v) : it->second;
    if (ma & ~mb) return false;
  }
  return true;
}

// The only variable on which a and b differ, if they agree elsewhere.
inline std::optional<VarId> differ_in_one(const Cube& a, const Cube& b) {
  if (a.masks.size() != b.masks.size()) return std::nullopt;
  std::optional<VarId> diff;
  auto ia = a.masks.begin();
  auto ib = b.masks.begin();
  for (; ia != a.masks.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return std::nullopt;
    if (ia->second != ib->second) {
      if (diff) return std::nullopt;
      diff = ia->first;
    }
  }
  return diff;
}

}  // namespace detail

/// Equivalence-preserving simplification: drops unconstrained variables,
/// absorbed cubes, and merges cubes that differ in a single variable.
inline Cover simplify(const SymbolTable& st, Cover g) {
  auto& cs = g.cubes;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Cube> next;
    for (auto& c : cs) {
      bool empty = false;
      for (auto it = c.masks.begin(); it != c.masks.end();) {
        if (it->second == 0) empty = true;
        if (it->second == full_mask(st, it->first)) it = c.masks.erase(it);
        else ++it;
      }
      if (!empty) next.push_back(std::move(c));
    }
    cs = std::move(next);
    std::sort(cs.begin(), cs.end());
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    // absorption
    std::vector<char> drop(cs.size(), 0);
    for (size_t a = 0; a < cs.size(); ++a)
      for (size_t b = 0; b < cs.size() && !drop[a]; ++b)
        if (a != b && !drop[b] && detail::cube_subset(st, cs[a], cs[b])) {
          drop[a] = 1;
          changed = true;
        }
    std::vector<Cube> kept;
    for (size_t a = 0; a < cs.size(); ++a)
      if (!drop[a]) kept.push_back(cs[a]);
    cs = std::move(kept);
    // merge
    for (size_t a = 0; a < cs.size() && !changed; ++a)
      for (size_t b = a + 1; b < cs.size(); ++b) {
        auto v = detail::differ_in_one(cs[a], cs[b]);
        if (!v) continue;
        cs[a].masks[*v] |= cs[b].masks[*v];
        cs.erase(cs.begin() + static_cast<long>(b));
        changed = true;
        break;
      }
  }
  return g;
}

/// Every valuation of `vars` (other entries kUnset) in lexicographic order.
inline std::vector<Valuation> enumerate_valuations(const SymbolTable& st, const std::vector<VarId>& vars) {
  std::vector<Valuation> out{Valuation(st.num_vars(), kUnset)};
  for (VarId v : vars) {
    std::vector<Valuation> next;
    for (const auto& b : out)
      for (Value c : st.sort_of(v).domain) {
        Valuation n = b;
        n[v] = c;
        next.push_back(std::move(n));
      }
    out = std::move(next);
  }
  return out;
}

/// ¬g over the variables `vars` (g must only constrain those).
inline Cover complement(const SymbolTable& st, const Cover& g, const std::vector<VarId>& vars) {
  Cover out;
  for (const auto& s : enumerate_valuations(st, vars))
    if (!cover_holds(st, g, s)) out.cubes.push_back(point_cube(st, vars, s));
  return simplify(st, std::move(out));
}

namespace detail {

inline Expr mask_expr(const SymbolTable& st, VarId v, uint64_t m) {
  const Sort& so = st.sort_of(v);
  const auto& dom = so.domain;
  int n = static_cast<int>(dom.size());
  int pop = std::popcount(m);
  auto val = [&](int i) { return make_const(so.kind == SortKind::Bool ? kBoolSort : st.var(v).sort, dom[i]); };
  auto var = make_var(st, v);
  auto idx_of_single = [&](uint64_t mm) { return std::countr_zero(mm); };
  if (so.kind == SortKind::Bool) return m == 2 ? var : make_not(st, var);
  if (pop == 1) return make_apply(st, Op::Eq, {var, val(idx_of_single(m))});
  if (pop == n - 1) return make_apply(st, Op::Ne, {var, val(idx_of_single(~m & full_mask(st, v)))});
  if (so.kind == SortKind::Int) {
    int lo = std::countr_zero(m), hi = 63 - std::countl_zero(m);
    bool contiguous = pop == hi - lo + 1;
    for (int i = lo + 1; contiguous && i <= hi; ++i) contiguous = dom[i] == dom[i - 1] + 1;
    if (contiguous) {
      if (lo == 0) return make_apply(st, Op::Le, {var, val(hi)});
      if (hi == n - 1) return make_apply(st, Op::Ge, {var, val(lo)});
      return make_and(st, make_apply(st, Op::Ge, {var, val(lo)}), make_apply(st, Op::Le, {var, val(hi)}));
    }
  }
  Expr out;
  for (int i = 0; i < n; ++i)
    if (m & (uint64_t{1} << i)) {
      Expr e = make_apply(st, Op::Eq, {var, val(i)});
      out = out ? make_or(st, out, e) : e;
    }
  return out;
}

}  // namespace detail

inline Expr cover_to_expr(const SymbolTable& st, const Cover& g) {
  if (g.cubes.empty()) return make_bool(false);
  Expr out;
  for (const auto& c : g.cubes) {
    Expr ce;
    for (const auto& [v, m] : c.masks) {
      Expr a = detail::mask_expr(st, v, m);
      ce = ce ? make_and(st, ce, a) : a;
    }
    if (!ce) return make_bool(true);
    out = out ? make_or(st, out, ce) : ce;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Guard tables

struct AuxBranch {
  Cover cond;
  Value value = 0;
};

struct GuardEntry {
  int proc = 0;
  int loc = 0;
  std::vector<int> enabled;  // model states where inst(loc) runs
  Cover guard;
  std::vector<AuxBranch> aux;  // first match assigns x
  bool unreachable = false;
};

struct GuardTable {
  std::vector<std::vector<GuardEntry>> entries;  // [process][location]
  GuardEntry& at(int i, int l) { return entries.at(i).at(l); }
  const GuardEntry& at(int i, int l) const { return entries.at(i).at(l); }
};

struct Synthesized {
  ConcurrentProgram skeleton;  // declarations incl. x / shadows, unguarded bodies
  ConcurrentProgram program;   // the CCR program
  GuardTable table;
  VarId aux_var = -1;
  std::vector<VarId> shadows;  // v0 per input variable, parallel to input_vars(skeleton)
  std::vector<std::string> warnings;
};

/// Strips CCR guards and auxiliary updates.
inline ConcurrentProgram erase_synchronization(const ConcurrentProgram& p) {
  ConcurrentProgram out = p;
  for (auto& proc : out.processes)
    for (auto& ins : proc.body) {
      ins.guard.reset();
      std::vector<Stmt> keep;
      for (auto& s : ins.block)
        if (!std::holds_alternative<AuxUpdate>(s)) keep.push_back(s);
      ins.block = std::move(keep);
    }
  return out;
}

/// Structural equality of process bodies (names, labels, instructions).
inline bool same_skeleton(const ConcurrentProgram& a, const ConcurrentProgram& b) {
  if (a.num_processes() != b.num_processes()) return false;
  for (int i = 0; i < a.num_processes(); ++i) {
    const Process& pa = a.processes[i];
    const Process& pb = b.processes[i];
    if (pa.name != pb.name || pa.labels != pb.labels) return false;
    for (size_t l = 0; l < pa.body.size(); ++l) {
      if (pa.body[l].guard.has_value() != pb.body[l].guard.has_value()) return false;
      if (instruction_to_string(a, pa, pa.body[l]) != instruction_to_string(b, pb, pb.body[l])) return false;
    }
  }
  return true;
}

/// Writes the guard table into a copy of the skeleton.
inline ConcurrentProgram materialize(const ConcurrentProgram& skeleton, const GuardTable& table, VarId aux_var) {
  ConcurrentProgram out = skeleton;
  const SymbolTable& st = out.symbols;
  for (auto& proc : out.processes)
    for (size_t l = 0; l < proc.body.size(); ++l) {
      const GuardEntry& g = table.at(proc.index, static_cast<int>(l));
      Instruction& ins = proc.body[l];
      ins.guard = cover_to_expr(st, g.guard);
      if (!g.aux.empty()) {
        AuxUpdate u;
        for (const auto& b : g.aux)
          u.branches.push_back({cover_to_expr(st, b.cond), aux_var, make_const(st.var(aux_var).sort, b.value)});
        ins.block.insert(ins.block.begin(), std::move(u));
      }
    }
  return out;
}

namespace detail {

inline std::string fresh_name(const SymbolTable& st, std::string base) {
  if (!st.find(base)) return base;
  for (int n = 1;; ++n)
    if (!st.find(base + std::to_string(n))) return base + std::to_string(n);
}

inline VarId declare_aux(ConcurrentProgram& p, Value max) {
  Variable x;
  x.name = fresh_name(p.symbols, "x");
  x.sort = p.symbols.int_range_sort(0, max);
  x.role = VarRole::Aux;
  x.init = 0;
  VarId id = p.symbols.add_variable(x);
  p.shared.push_back(id);
  return id;
}

// Variables a guard for process i may range over before projection.
inline std::vector<VarId> guard_vars(const ConcurrentProgram& p, int i) {
  std::vector<VarId> out;
  for (VarId v = 0; v < p.symbols.num_vars(); ++v)
    if (v != p.processes[i].control) out.push_back(v);
  return out;
}

}  // namespace detail

/// Guards and auxiliary updates from a (disambiguated) model of φ_P ∧ φ_spec.
/// `base` is the unsynchronized program the model was built for.
inline Synthesized extract_ccrs(const ExtractedModel& em, const ConcurrentProgram& base) {
  if (base.has_ccrs()) throw Error(Errc::Unsupported, "input program already contains CCRs");
  Synthesized out;
  out.skeleton = base;
  if (em.aux_max) out.aux_var = detail::declare_aux(out.skeleton, *em.aux_max);
  const SymbolTable& st = out.skeleton.symbols;
  const Model& m = em.model;
  const int nbase = base.symbols.num_vars();
  if (em.program_vars != nbase) throw Error(Errc::SkeletonMismatch, "model was extracted for a different program");
  if (st.num_vars() != static_cast<int>(m.labels.empty() ? st.num_vars() : m.labels[0].size()))
    throw Error(Errc::Internal, "model labels do not match the synthesized declarations");

  out.table.entries.resize(base.num_processes());
  for (const auto& proc : base.processes) {
    for (size_t l = 0; l < proc.body.size(); ++l) {
      GuardEntry g;
      g.proc = proc.index;
      g.loc = static_cast<int>(l);
      out.table.entries[proc.index].push_back(std::move(g));
    }
  }
  std::map<std::pair<int, int>, std::map<Value, Cover>> aux_conds;
  for (int s = 0; s < m.num_states(); ++s) {
    const Valuation& lab = m.labels[s];
    Valuation prog(lab.begin(), lab.begin() + nbase);
    std::set<int> seen_proc;
    for (size_t k = 0; k < m.succ[s].size(); ++k) {
      const Edge& e = m.succ[s][k];
      const Process& proc = base.processes[e.proc];
      int l = lab[proc.control];
      if (!seen_proc.insert(e.proc).second) {
        out.warnings.push_back("state " + std::to_string(s) + " has several successors for " + proc.name +
                               "; keeping the first");
        continue;
      }
      auto mv = execute(base, e.proc, prog);
      Valuation target(m.labels[e.to].begin(), m.labels[e.to].begin() + nbase);
      if (!mv || mv->after != target)
        throw Error(Errc::Internal, "model transition " + std::to_string(s) + " -> " + std::to_string(e.to) +
                                        " is not a move of " + proc.name);
      GuardEntry& g = out.table.at(e.proc, l);
      g.enabled.push_back(s);
      auto vars = detail::guard_vars(out.skeleton, e.proc);
      g.guard.cubes.push_back(point_cube(st, vars, lab));
      if (em.aux_assign[s][k]) aux_conds[{e.proc, l}][*em.aux_assign[s][k]].cubes.push_back(point_cube(st, vars, lab));
    }
  }
  for (auto& row : out.table.entries)
    for (auto& g : row) {
      g.guard = simplify(st, std::move(g.guard));
      if (g.enabled.empty()) {
        g.unreachable = true;
        out.warnings.push_back(base.processes[g.proc].name + "." + base.processes[g.proc].labels[g.loc] +
                               " is never enabled in the model; its guard is false");
      }
      auto it = aux_conds.find({g.proc, g.loc});
      if (it != aux_conds.end())
        for (auto& [val, cov] : it->second) g.aux.push_back({simplify(st, std::move(cov)), val});
    }
  out.program = materialize(out.skeleton, out.table, out.aux_var);
  return out;
}

/// Merges per-initial-valuation results into one program reading shadow
/// copies v0 of the input variables. `inits[n]` is the valuation of `per[n]`.
inline Synthesized unify_inits(const ConcurrentProgram& base, const std::vector<Valuation>& inits,
                               const std::vector<Synthesized>& per) {
  if (per.size() != inits.size() || per.empty()) throw Error(Errc::SkeletonMismatch, "one program per initial valuation required");
  auto inputs = input_vars(base);
  if (inputs.empty()) {
    if (per.size() != 1) throw Error(Errc::SkeletonMismatch, "several results without input variables");
    return per.front();
  }
  for (const auto& p : per)
    if (!same_skeleton(erase_synchronization(p.program), base)) throw Error(Errc::SkeletonMismatch, "process skeletons differ");

  Synthesized out;
  out.skeleton = base;
  Value xmax = 0;
  bool any_aux = false;
  for (const auto& p : per)
    if (p.aux_var >= 0) {
      any_aux = true;
      xmax = std::max(xmax, p.skeleton.symbols.sort_of(p.aux_var).domain.back());
    }
  if (any_aux) out.aux_var = detail::declare_aux(out.skeleton, xmax);
  for (VarId v : inputs) {
    Variable s;
    s.name = detail::fresh_name(out.skeleton.symbols, base.symbols.var(v).name + "0");
    s.sort = base.symbols.var(v).sort;
    s.role = VarRole::Shadow;
    s.init_from = v;
    VarId id = out.skeleton.symbols.add_variable(s);
    out.skeleton.shared.push_back(id);
    out.shadows.push_back(id);
  }
  const SymbolTable& st = out.skeleton.symbols;
  // per-valuation ids carry over: x (when present) is the first variable added
  // after the base program, and x's bits keep their meaning as its domain grows
  auto remap = [](const Synthesized&, const Cube& c) { return c; };
  auto with_inputs = [&](const Cube& c, const Valuation& init) {
    Cube r = c;
    for (size_t n = 0; n < inputs.size(); ++n) r.masks[out.shadows[n]] = value_bit(st, out.shadows[n], init[inputs[n]]);
    return r;
  };
  out.table.entries.resize(base.num_processes());
  for (const auto& proc : base.processes)
    for (size_t l = 0; l < proc.body.size(); ++l) {
      GuardEntry g;
      g.proc = proc.index;
      g.loc = static_cast<int>(l);
      std::map<Value, Cover> aux;
      bool reachable = false;
      for (size_t n = 0; n < per.size(); ++n) {
        const GuardEntry& src = per[n].table.at(proc.index, static_cast<int>(l));
        reachable = reachable || !src.unreachable;
        for (const auto& c : src.guard.cubes) g.guard.cubes.push_back(with_inputs(remap(per[n], c), inits[n]));
        for (const auto& b : src.aux)
          for (const auto& c : b.cond.cubes) aux[b.value].cubes.push_back(with_inputs(remap(per[n], c), inits[n]));
      }
      g.unreachable = !reachable;
      for (auto& [val, cov] : aux) g.aux.push_back({std::move(cov), val});
      out.table.entries[proc.index].push_back(std::move(g));
    }
  for (const auto& p : per)
    for (const auto& w : p.warnings)
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) out.warnings.push_back(w);
  out.program = materialize(out.skeleton, out.table, out.aux_var);
  return out;
}

// ---------------------------------------------------------------------------
// Observability

enum class Observability { FullyShared, PerProcessObservable, LimitedObservability };

inline const char* observability_name(Observability o) {
  switch (o) {
    case Observability::FullyShared: return "FullyShared";
    case Observability::PerProcessObservable: return "PerProcessObservable";
    case Observability::LimitedObservability: return "LimitedObservability";
  }
  return "?";
}

struct ObservabilityVerdict {
  Observability kind = Observability::FullyShared;
  std::vector<int> observable;  // processes that distinguish all states by {loc_i} ∪ Var_i
};

namespace detail {

// X: shared data variables, including x and shadow copies.
inline std::vector<VarId> shared_vars(const ConcurrentProgram& p) {
  std::vector<VarId> out;
  for (VarId v = 0; v < p.symbols.num_vars(); ++v) {
    auto r = p.symbols.var(v).role;
    if (r == VarRole::Shared || r == VarRole::Aux || r == VarRole::Shadow) out.push_back(v);
  }
  return out;
}

inline Valuation project(const Valuation& s, const std::vector<VarId>& vars) {
  Valuation out;
  for (VarId v : vars) out.push_back(s[v]);
  return out;
}

// States agreeing on `vars` agree everywhere.
inline bool identifies(const Model& m, const std::vector<VarId>& vars) {
  std::map<Valuation, const Valuation*> seen;
  for (const auto& lab : m.labels) {
    auto [it, fresh] = seen.emplace(project(lab, vars), &lab);
    if (!fresh && *it->second != lab) return false;
  }
  return true;
}

}  // namespace detail

/// Var_i ∪ {loc_i} for process i of p.
inline std::vector<VarId> observable_vars(const ConcurrentProgram& p, int i) {
  auto v = p.accessible_vars(i);
  v.push_back(p.processes[i].control);
  std::sort(v.begin(), v.end());
  return v;
}

/// `sp` supplies the variable roles (x and shadows count as shared).
inline ObservabilityVerdict check_observability(const ExtractedModel& em, const ConcurrentProgram& sp) {
  ObservabilityVerdict v;
  const Model& m = em.model;
  if (detail::identifies(m, detail::shared_vars(sp))) {
    v.kind = Observability::FullyShared;
    for (int i = 0; i < sp.num_processes(); ++i) v.observable.push_back(i);
    return v;
  }
  for (int i = 0; i < sp.num_processes(); ++i)
    if (detail::identifies(m, observable_vars(sp, i))) v.observable.push_back(i);
  v.kind = v.observable.empty() ? Observability::LimitedObservability : Observability::PerProcessObservable;
  return v;
}

/// Rewrites guards (and auxiliary conditions) over variables visible to each
/// process: X for FullyShared, Var_i for observable processes, and the safe
/// complement of disabled states elsewhere. The result must be re-verified.
inline Synthesized project_guards(const Synthesized& sp, const ExtractedModel& em, const ObservabilityVerdict& verdict) {
  Synthesized out = sp;
  const ConcurrentProgram& p = sp.skeleton;
  const SymbolTable& st = p.symbols;
  const Model& m = em.model;
  auto X = detail::shared_vars(p);
  for (int i = 0; i < p.num_processes(); ++i) {
    bool exact = std::find(verdict.observable.begin(), verdict.observable.end(), i) != verdict.observable.end();
    std::vector<VarId> vars = verdict.kind == Observability::FullyShared ? X : p.accessible_vars(i);
    const Process& proc = p.processes[i];
    for (size_t l = 0; l < proc.body.size(); ++l) {
      GuardEntry& g = out.table.at(i, static_cast<int>(l));
      std::set<int> enabled(g.enabled.begin(), g.enabled.end());
      Cover on, off;
      for (int s = 0; s < m.num_states(); ++s) {
        if (m.labels[s][proc.control] != static_cast<Value>(l)) continue;
        (enabled.count(s) ? on : off).cubes.push_back(point_cube(st, vars, m.labels[s]));
      }
      if (exact) g.guard = simplify(st, std::move(on));
      else g.guard = complement(st, simplify(st, std::move(off)), vars);
      // states an earlier branch already claims would make a later one dead
      std::set<std::map<VarId, uint64_t>> claimed;
      std::vector<AuxBranch> kept;
      for (auto& b : g.aux) {
        Cover c;
        for (int s : g.enabled)
          if (cover_holds(st, b.cond, m.labels[s])) {
            Cube q = point_cube(st, vars, m.labels[s]);
            if (claimed.insert(q.masks).second) c.cubes.push_back(std::move(q));
          }
        if (c.is_false()) continue;
        kept.push_back({simplify(st, std::move(c)), b.value});
      }
      g.aux = std::move(kept);
    }
  }
  out.program = materialize(out.skeleton, out.table, out.aux_var);
  return out;
}

// ---------------------------------------------------------------------------
// Verification

struct Verification {
  bool ok = false;
  bool total = true;
  std::optional<Valuation> witness;  // failing initial state or deadlock
  size_t states = 0;
  std::string detail;
};

/// Checks that p is deadlock-free from `inits` and satisfies spec there.
inline Verification verify_program(const ConcurrentProgram& p, FormulaStore& fs, FId spec, const std::vector<Valuation>& inits) {
  Verification v;
  auto ts = build_transition_system(p, inits);
  v.states = ts.states.size();
  if (!ts.total()) {
    v.total = false;
    v.witness = ts.states[ts.deadlocks.front()];
    v.detail = "deadlock in " + valuation_text(p.symbols, *v.witness);
    return v;
  }
  Model m = model_of(ts, p.num_processes());
  auto sat = model_check(m, fs, spec);
  v.ok = true;
  for (int s : m.initial)
    if (!sat[s]) {
      v.ok = false;
      v.witness = m.labels[s];
      v.detail = "specification fails from " + valuation_text(p.symbols, m.labels[s]);
      break;
    }
  return v;
}

/// Extends a valuation of `base` with the initial values of variables the
/// synthesizer added (x = 0, shadows copied from their inputs).
inline Valuation extend_initial(const ConcurrentProgram& sp, const Valuation& base) {
  Valuation out = base;
  const SymbolTable& st = sp.symbols;
  for (VarId v = static_cast<VarId>(base.size()); v < st.num_vars(); ++v) {
    const Variable& var = st.var(v);
    if (var.init) out.push_back(*var.init);
    else if (var.init_from) out.push_back(out[*var.init_from]);
    else throw Error(Errc::Internal, "added variable '" + var.name + "' has no initial value");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json to_json(const Synthesized& s) {
  const ConcurrentProgram& p = s.program;
  nlohmann::ordered_json j;
  j["schema"] = "ccrsynth.guards/1";
  if (s.aux_var >= 0)
    j["aux"] = {{"name", p.symbols.var(s.aux_var).name}, {"domain", p.symbols.sort_of(s.aux_var).domain}};
  auto& sh = j["shadows"] = nlohmann::ordered_json::array();
  for (VarId v : s.shadows) sh.push_back(p.symbols.var(v).name);
  auto& procs = j["processes"] = nlohmann::ordered_json::array();
  for (const auto& proc : p.processes) {
    nlohmann::ordered_json pj;
    pj["name"] = proc.name;
    auto& locs = pj["locations"] = nlohmann::ordered_json::array();
    for (size_t l = 0; l < proc.body.size(); ++l) {
      const GuardEntry& g = s.table.at(proc.index, static_cast<int>(l));
      nlohmann::ordered_json lj;
      lj["label"] = proc.labels[l];
      lj["guard"] = to_string(p.symbols, cover_to_expr(p.symbols, g.guard));
      lj["enabled_states"] = g.enabled;
      if (g.unreachable) lj["unreachable"] = true;
      auto& aux = lj["aux_updates"] = nlohmann::ordered_json::array();
      for (const auto& b : g.aux) aux.push_back({{"if", to_string(p.symbols, cover_to_expr(p.symbols, b.cond))}, {"x", b.value}});
      locs.push_back(std::move(lj));
    }
    procs.push_back(std::move(pj));
  }
  j["warnings"] = s.warnings;
  return j;
}

}  // namespace ccrsynth
