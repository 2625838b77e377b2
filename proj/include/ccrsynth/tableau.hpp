#pragma once

// AND/OR tableau for satisfiability of NNF formulas: construction with
// on-the-fly merging of equivalent nodes, then deletion of inconsistent
// nodes until a fixpoint.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "ccrsynth/error.hpp"
#include "ccrsynth/logic.hpp"
#include "ccrsynth/vocab.hpp"

namespace ccrsynth {

enum class NodeKind { Or, And };

struct TSucc {
  int proc = -1;  // process index on AND→OR edges, -1 on OR→AND edges
  int node = 0;
  bool operator==(const TSucc& o) const { return proc == o.proc && node == o.node; }
};

struct TNode {
  NodeKind kind = NodeKind::Or;
  // OR: the label. AND: the elementary next-time formulas; propositional
  // content is absorbed into `valuation`.
  std::vector<FId> formulas;
  std::vector<FId> fulfilled;  // AND: eventualities discharged at this node
  Valuation valuation;         // AND: total; OR: empty
  std::vector<TSucc> succ;
  bool alive = true;
  bool pseudo = false;  // AND root joining several initial OR-nodes
  int deleted_by = 0;   // deletion rule 1-4, 0 while alive
};

struct AndLabel {
  Valuation valuation;
  std::vector<FId> formulas;
  std::vector<FId> fulfilled;
  bool operator<(const AndLabel& o) const {
    return std::tie(valuation, formulas, fulfilled) < std::tie(o.valuation, o.formulas, o.fulfilled);
  }
  bool operator==(const AndLabel& o) const {
    return valuation == o.valuation && formulas == o.formulas && fulfilled == o.fulfilled;
  }
};

struct TableauStats {
  size_t or_nodes = 0;
  size_t and_nodes = 0;
  size_t merged = 0;           // successor requests answered by an existing node
  size_t rule1_pruned = 0;     // temporary-tree branches closed by contradiction
  size_t deleted[5] = {0, 0, 0, 0, 0};
  size_t closure_size = 0;
  double log2_valuations = 0;  // log2 of the number of total valuations
  double log2_bound() const { return std::log2(std::exp2(log2_valuations) + 1) + static_cast<double>(closure_size); }
  size_t nodes() const { return or_nodes + and_nodes; }
};

struct TableauOptions {
  size_t node_budget = 500'000;
  // add a third branch taking both disjuncts of a disjunction of next-time
  // formulas, so extraction can keep several processes enabled
  bool both_branch = true;
};

inline constexpr int kInfRank = std::numeric_limits<int>::max();

class Tableau {
 public:
  Tableau(FormulaStore& fs, TableauOptions opts = {}) : fs_(&fs), opts_(opts) {}

  FormulaStore& formulas() const { return *fs_; }
  const TableauOptions& options() const { return opts_; }
  const std::vector<TNode>& nodes() const { return nodes_; }
  const TNode& node(int n) const { return nodes_.at(n); }
  int root() const { return root_; }
  bool satisfiable() const { return root_ >= 0 && nodes_[root_].alive; }
  const TableauStats& stats() const { return stats_; }
  TableauStats& stats() { return stats_; }

  /// Eventualities occurring in AND-nodes, ascending.
  const std::vector<FId>& eventualities() const { return events_; }
  /// rank(e, n): steps to fulfil eventuality e from AND-node n (kInfRank if
  /// impossible or n does not carry e). Valid after delete_inconsistent.
  int rank(size_t event_index, int n) const { return ranks_.at(event_index).at(n); }
  int event_index(FId e) const {
    auto it = std::lower_bound(events_.begin(), events_.end(), e);
    return it != events_.end() && *it == e ? static_cast<int>(it - events_.begin()) : -1;
  }

  /// Whether AND-node n carries eventuality e (discharged here or pending).
  bool carries(int n, FId e) const {
    const TNode& d = nodes_[n];
    if (std::binary_search(d.fulfilled.begin(), d.fulfilled.end(), e)) return true;
    return pending(n, e);
  }
  bool fulfilled_at(int n, FId e) const {
    const TNode& d = nodes_[n];
    return std::binary_search(d.fulfilled.begin(), d.fulfilled.end(), e);
  }
  // AU is unrolled into AXᵢ e for every i; a lone AX1 e only obliges the
  // 1-successors, which carry e themselves
  bool pending(int n, FId e) const {
    const TNode& d = nodes_[n];
    std::vector<char> ax(fs_->num_processes(), 0);
    for (FId f : d.formulas) {
      const FNode& fn = fs_->node(f);
      if (fn.a != e) continue;
      if (fs_->kind(e) == FKind::AU && fn.kind == FKind::AXi) ax[fn.proc] = 1;
      if (fs_->kind(e) == FKind::EU && fn.kind == FKind::EXi) return true;
    }
    return !ax.empty() && std::all_of(ax.begin(), ax.end(), [](char c) { return c != 0; });
  }

  // Manual construction (tests and hand-built fixtures).
  int add_node(NodeKind kind, std::vector<FId> formulas, Valuation valuation = {}, std::vector<FId> fulfilled = {}) {
    normalize(formulas);
    normalize(fulfilled);
    TNode n;
    n.kind = kind;
    n.formulas = std::move(formulas);
    n.valuation = std::move(valuation);
    n.fulfilled = std::move(fulfilled);
    nodes_.push_back(std::move(n));
    if (kind == NodeKind::Or) ++stats_.or_nodes;
    else ++stats_.and_nodes;
    return static_cast<int>(nodes_.size()) - 1;
  }
  void add_edge(int from, int to, int proc = -1) {
    TSucc s{proc, to};
    auto& v = nodes_.at(from).succ;
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  }
  void set_root(int r) { root_ = r; }

  std::vector<TNode>& mutable_nodes() { return nodes_; }
  void set_eventualities(std::vector<FId> ev) {
    normalize(ev);
    events_ = std::move(ev);
  }
  std::vector<std::vector<int>>& mutable_ranks() { return ranks_; }

  static void normalize(std::vector<FId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

 private:
  FormulaStore* fs_;
  TableauOptions opts_;
  std::vector<TNode> nodes_;
  int root_ = -1;
  TableauStats stats_;
  std::vector<FId> events_;
  std::vector<std::vector<int>> ranks_;
};

// ---------------------------------------------------------------------------
// Node expansion

namespace detail {

// v = t (or t = v) with v unset and t determined: the value to bind.
inline std::optional<std::pair<VarId, Value>> simple_binding(const SymbolTable& st, const FNode& n, const Valuation& val) {
  const Expr& e = n.atom;
  if (e->op == Op::Var && val[e->var] == kUnset && e->sort == kBoolSort)
    return std::make_pair(e->var, n.kind == FKind::Atom ? 1 : 0);
  if (n.kind != FKind::Atom || e->op != Op::Eq) return std::nullopt;
  for (int side = 0; side < 2; ++side) {
    const Expr& a = e->args[side];
    const Expr& b = e->args[1 - side];
    if (a->op != Op::Var || val[a->var] != kUnset) continue;
    std::optional<Value> t;
    try {
      t = try_eval(st, b, val);
    } catch (const Error& err) {
      if (err.code() != Errc::PartialApplication) throw;
      return std::nullopt;
    }
    if (t) return std::make_pair(a->var, *t);
  }
  return std::nullopt;
}

// undefined terms already make their atom false inside try_eval_prop
inline std::optional<bool> safe_try_eval(const FormulaStore& fs, FId f, const Valuation& val) {
  return fs.try_eval_prop(f, val);
}

inline bool is_ex_positive(const FormulaStore& fs, FId f) {
  const FNode& n = fs.node(f);
  switch (n.kind) {
    case FKind::EXi: return true;
    case FKind::Or:
    case FKind::And: return is_ex_positive(fs, n.a) && is_ex_positive(fs, n.b);
    default: return false;
  }
}

class OrExpander {
 public:
  OrExpander(FormulaStore& fs, const TableauOptions& opts, size_t& rule1) : fs_(fs), st_(fs.symbols()), opts_(opts), rule1_(rule1) {}

  std::vector<AndLabel> run(const std::vector<FId>& label) {
    Path p;
    p.val.assign(st_.num_vars(), kUnset);
    for (auto it = label.rbegin(); it != label.rend(); ++it) p.todo.push_back(*it);
    expand(std::move(p));
    std::sort(out_.begin(), out_.end());
    out_.erase(std::unique(out_.begin(), out_.end()), out_.end());
    return out_;
  }

 private:
  struct Path {
    std::vector<FId> todo;  // stack
    std::set<FId> seen;
    Valuation val;
    std::vector<FId> props;  // undecided propositional formulas
    std::vector<FId> elem;
    std::vector<FId> betas;
    std::vector<FId> fulfilled;
  };

  // Returns false when the path is contradictory.
  bool saturate(Path& p) {
    for (;;) {
      while (!p.todo.empty()) {
        FId f = p.todo.back();
        p.todo.pop_back();
        if (!p.seen.insert(f).second) continue;
        const FNode& n = fs_.node(f);
        if (fs_.is_propositional(f)) {
          if (n.kind == FKind::And) {
            p.todo.push_back(n.b);
            p.todo.push_back(n.a);
          } else {
            p.props.push_back(f);
          }
          continue;
        }
        switch (n.kind) {
          case FKind::EXi:
          case FKind::AXi: p.elem.push_back(f); break;
          case FKind::And:
          case FKind::AR:
          case FKind::ER: {
            auto c = fs_.classify(f);
            p.todo.push_back(c.second);
            p.todo.push_back(c.first);
            break;
          }
          case FKind::Or:
          case FKind::AU:
          case FKind::EU: p.betas.push_back(f); break;
          default: throw Error(Errc::Unsupported, "tableau expects formulas in negation normal form");
        }
      }
      // bind simple atoms and evaluate what is decided
      bool changed = true;
      while (changed) {
        changed = false;
        std::vector<FId> keep;
        for (FId f : p.props) {
          auto r = safe_try_eval(fs_, f, p.val);
          if (r) {
            if (!*r) return false;
            continue;
          }
          const FNode& n = fs_.node(f);
          if (n.kind == FKind::Atom || n.kind == FKind::NegAtom) {
            if (auto b = simple_binding(st_, n, p.val)) {
              if (!st_.sort_of(b->first).contains(b->second)) return false;
              p.val[b->first] = b->second;
              changed = true;
              continue;
            }
          }
          keep.push_back(f);
        }
        p.props = std::move(keep);
      }
      if (p.todo.empty()) return true;
    }
  }

  void expand(Path p) {
    if (!saturate(p)) {
      ++rule1_;
      return;
    }
    if (p.betas.empty()) {
      leaf(p);
      return;
    }
    FId b = p.betas.front();
    p.betas.erase(p.betas.begin());
    auto c = fs_.classify(b);
    bool eventuality = fs_.is_eventuality(b);
    auto take = [&](std::vector<FId> add, bool fulfil) {
      Path q = p;
      for (auto it = add.rbegin(); it != add.rend(); ++it) q.todo.push_back(*it);
      if (fulfil) q.fulfilled.push_back(b);
      expand(std::move(q));
    };
    auto decided = [&](FId side) -> std::optional<bool> {
      if (!fs_.is_propositional(side)) return std::nullopt;
      return safe_try_eval(fs_, side, p.val);
    };
    auto d1 = decided(c.first);
    if (d1 && *d1) return take({c.first}, eventuality);
    if (d1 && !*d1) return take({c.second}, false);
    auto d2 = decided(c.second);
    if (d2 && !*d2) return take({c.first}, eventuality);
    if (!eventuality) {
      if (p.seen.count(c.first)) return take({c.first}, false);
      if (p.seen.count(c.second)) return take({c.second}, false);
    }
    take({c.first}, eventuality);
    take({c.second}, false);
    if (!eventuality && opts_.both_branch && is_ex_positive(fs_, c.first) && is_ex_positive(fs_, c.second))
      take({c.first, c.second}, false);
  }

  void leaf(const Path& p) {
    std::vector<VarId> open;
    for (VarId v = 0; v < st_.num_vars(); ++v)
      if (p.val[v] == kUnset) open.push_back(v);
    AndLabel base;
    base.formulas = p.elem;
    base.fulfilled = p.fulfilled;
    Tableau::normalize(base.formulas);
    Tableau::normalize(base.fulfilled);
    Valuation val = p.val;
    std::function<void(size_t)> complete = [&](size_t i) {
      if (i == open.size()) {
        for (FId f : p.props) {
          auto r = safe_try_eval(fs_, f, val);
          if (!r || !*r) {
            ++rule1_;
            return;
          }
        }
        AndLabel l = base;
        l.valuation = val;
        out_.push_back(std::move(l));
        return;
      }
      for (Value c : st_.sort_of(open[i]).domain) {
        val[open[i]] = c;
        complete(i + 1);
      }
      val[open[i]] = kUnset;
    };
    complete(0);
  }

  FormulaStore& fs_;
  const SymbolTable& st_;
  const TableauOptions& opts_;
  size_t& rule1_;
  std::vector<AndLabel> out_;
};

}  // namespace detail

/// AND-node labels of the temporary tree rooted at an OR-node labelled `label`.
inline std::vector<AndLabel> expand_or_node(FormulaStore& fs, const std::vector<FId>& label, TableauOptions opts = {},
                                            size_t* rule1 = nullptr) {
  size_t dummy = 0;
  detail::OrExpander ex(fs, opts, rule1 ? *rule1 : dummy);
  return ex.run(label);
}

/// OR-successor labels of an AND-node: one per EXᵢ ψ, carrying ψ and the
/// bodies of all AXᵢ formulas with the same i.
inline std::vector<std::pair<int, std::vector<FId>>> expand_and_node(const FormulaStore& fs, const std::vector<FId>& formulas) {
  std::vector<std::pair<int, std::vector<FId>>> out;
  for (FId f : formulas) {
    const FNode& n = fs.node(f);
    if (n.kind != FKind::EXi) continue;
    std::vector<FId> label{n.a};
    for (FId g : formulas) {
      const FNode& m = fs.node(g);
      if (m.kind == FKind::AXi && m.proc == n.proc) label.push_back(m.a);
    }
    Tableau::normalize(label);
    out.emplace_back(n.proc, std::move(label));
  }
  if (out.empty()) throw Error(Errc::NoSuccessor, "AND-node has no EX formula (missing progress clause?)");
  return out;
}

/// Rule 1 for explicitly labelled nodes: contradictory simple atoms, or a
/// propositional formula that is false under them.
inline bool internally_inconsistent(const FormulaStore& fs, const TNode& n) {
  const SymbolTable& st = fs.symbols();
  Valuation val = n.valuation;
  if (val.empty()) val.assign(st.num_vars(), kUnset);
  std::vector<FId> props;
  for (FId f : n.formulas)
    if (fs.is_propositional(f)) props.push_back(f);
  bool changed = true;
  while (changed) {
    changed = false;
    for (FId f : props) {
      const FNode& fn = fs.node(f);
      if (fn.kind != FKind::Atom && fn.kind != FKind::NegAtom) continue;
      // two simple atoms fixing one variable differently
      const Expr& e = fn.atom;
      if (fn.kind == FKind::Atom && e->op == Op::Eq && e->args[0]->op == Op::Var && e->args[1]->op == Op::Const) {
        VarId v = e->args[0]->var;
        if (val[v] != kUnset && val[v] != e->args[1]->value) return true;
      }
      if (auto b = detail::simple_binding(st, fn, val)) {
        val[b->first] = b->second;
        changed = true;
      }
    }
  }
  for (FId f : props) {
    auto r = detail::safe_try_eval(fs, f, val);
    if (r && !*r) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {

using NodeKey = std::tuple<int, Valuation, std::vector<FId>, std::vector<FId>>;

inline NodeKey key_of(const TNode& n) {
  return {n.kind == NodeKind::Or ? 0 : 1, n.valuation, n.formulas, n.fulfilled};
}

inline double log2_valuations(const SymbolTable& st) {
  double s = 0;
  for (VarId v = 0; v < st.num_vars(); ++v) s += std::log2(static_cast<double>(st.sort_of(v).domain.size()));
  return s;
}

}  // namespace detail

/// Builds the graph (no deletion). Several initial labels give an AND root
/// with one OR-successor per label.
inline Tableau construct_tableau(FormulaStore& fs, const std::vector<std::vector<FId>>& initial_labels,
                                 TableauOptions opts = {}) {
  if (initial_labels.empty()) throw Error(Errc::EmptyTableau, "no initial label");
  Tableau t(fs, opts);
  std::map<detail::NodeKey, int> index;
  std::deque<int> work;
  auto budget = [&] {
    if (t.nodes().size() >= opts.node_budget)
      throw Error(Errc::ResourceLimit, "tableau exceeds node budget of " + std::to_string(opts.node_budget));
  };
  auto intern = [&](NodeKind kind, std::vector<FId> formulas, Valuation val, std::vector<FId> fulfilled) {
    TNode probe;
    probe.kind = kind;
    probe.formulas = formulas;
    probe.valuation = val;
    probe.fulfilled = fulfilled;
    Tableau::normalize(probe.formulas);
    Tableau::normalize(probe.fulfilled);
    auto key = detail::key_of(probe);
    auto it = index.find(key);
    if (it != index.end()) {
      ++t.stats().merged;
      return it->second;
    }
    budget();
    int id = t.add_node(kind, std::move(probe.formulas), std::move(probe.valuation), std::move(probe.fulfilled));
    index.emplace(std::move(key), id);
    work.push_back(id);
    return id;
  };

  std::vector<FId> roots;
  std::vector<int> root_ors;
  for (const auto& l : initial_labels) {
    std::vector<FId> nl;
    for (FId f : l) nl.push_back(fs.to_nnf(f));
    for (FId f : nl) roots.push_back(f);
    root_ors.push_back(intern(NodeKind::Or, nl, {}, {}));
  }
  if (root_ors.size() == 1) {
    t.set_root(root_ors.front());
  } else {
    int r = t.add_node(NodeKind::And, {}, {}, {});
    t.mutable_nodes()[r].pseudo = true;
    for (int o : root_ors) t.add_edge(r, o, -1);
    t.set_root(r);
  }

  while (!work.empty()) {
    int id = work.front();
    work.pop_front();
    if (t.node(id).kind == NodeKind::Or) {
      auto labels = expand_or_node(fs, t.node(id).formulas, opts, &t.stats().rule1_pruned);
      for (auto& l : labels) {
        int c = intern(NodeKind::And, std::move(l.formulas), std::move(l.valuation), std::move(l.fulfilled));
        t.add_edge(id, c, -1);
      }
    } else {
      auto succ = expand_and_node(fs, t.node(id).formulas);
      for (auto& [i, l] : succ) {
        int c = intern(NodeKind::Or, std::move(l), {}, {});
        t.add_edge(id, c, i);
      }
    }
  }

  std::set<FId> closure;
  for (FId f : roots)
    for (FId g : fs.closure(f)) closure.insert(g);
  t.stats().closure_size = closure.size();
  t.stats().log2_valuations = detail::log2_valuations(fs.symbols());

  std::vector<FId> ev;
  for (const auto& n : t.nodes()) {
    if (n.kind != NodeKind::And) continue;
    for (FId e : n.fulfilled) ev.push_back(e);
    for (FId f : n.formulas) {
      FId a = fs.node(f).a;
      if (fs.is_eventuality(a)) ev.push_back(a);
    }
  }
  t.set_eventualities(std::move(ev));
  return t;
}

/// Unifies nodes with equal canonical keys and redirects edges. Construction
/// already merges on the fly; this pass serves hand-built graphs.
inline void merge_equivalent(Tableau& t) {
  auto& nodes = t.mutable_nodes();
  std::map<detail::NodeKey, int> first;
  std::vector<int> rep(nodes.size());
  for (size_t n = 0; n < nodes.size(); ++n) {
    auto [it, fresh] = first.emplace(detail::key_of(nodes[n]), static_cast<int>(n));
    rep[n] = it->second;
  }
  std::vector<int> renum(nodes.size(), -1);
  std::vector<TNode> out;
  for (size_t n = 0; n < nodes.size(); ++n)
    if (rep[n] == static_cast<int>(n)) {
      renum[n] = static_cast<int>(out.size());
      out.push_back(nodes[n]);
      out.back().succ.clear();
    }
  for (size_t n = 0; n < nodes.size(); ++n) {
    TNode& dst = out[renum[rep[n]]];
    for (const auto& s : nodes[n].succ) {
      TSucc ns{s.proc, renum[rep[s.node]]};
      if (std::find(dst.succ.begin(), dst.succ.end(), ns) == dst.succ.end()) dst.succ.push_back(ns);
    }
  }
  t.stats().merged += nodes.size() - out.size();
  int root = t.root() >= 0 ? renum[rep[t.root()]] : -1;
  nodes = std::move(out);
  t.set_root(root);
}

// ---------------------------------------------------------------------------
// Deletion

namespace detail {

// Least-fixpoint ranks of eventuality e over alive AND-nodes.
inline std::vector<int> eventuality_ranks(const Tableau& t, FId e) {
  const auto& nodes = t.nodes();
  const FormulaStore& fs = t.formulas();
  bool universal = fs.kind(e) == FKind::AU;
  std::vector<int> rank(nodes.size(), kInfRank);
  std::vector<int> cand;
  for (size_t n = 0; n < nodes.size(); ++n) {
    if (!nodes[n].alive || nodes[n].kind != NodeKind::And || nodes[n].pseudo) continue;
    if (t.fulfilled_at(static_cast<int>(n), e)) rank[n] = 0;
    else if (t.pending(static_cast<int>(n), e)) cand.push_back(static_cast<int>(n));
  }
  auto or_value = [&](int o) {
    int best = kInfRank;
    for (const auto& s : nodes[o].succ)
      if (nodes[s.node].alive) best = std::min(best, rank[s.node]);
    return best;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int n : cand) {
      int val = universal ? 0 : kInfRank;
      bool any = false;
      for (const auto& s : nodes[n].succ) {
        if (!nodes[s.node].alive) continue;
        if (!universal) {
          // only successors created from EXᵢ e carry the obligation
          bool carries = false;
          for (FId f : nodes[n].formulas) {
            const FNode& fn = fs.node(f);
            if (fn.kind == FKind::EXi && fn.a == e && fn.proc == s.proc &&
                std::binary_search(nodes[s.node].formulas.begin(), nodes[s.node].formulas.end(), e))
              carries = true;
          }
          if (!carries) continue;
        }
        int v = or_value(s.node);
        any = true;
        if (universal) val = std::max(val, v);
        else val = std::min(val, v);
      }
      if (!any) val = kInfRank;
      int r = val == kInfRank ? kInfRank : val + 1;
      if (r < rank[n]) {
        rank[n] = r;
        changed = true;
      }
    }
  }
  return rank;
}

}  // namespace detail

/// Applies deletion rules 1-4 to a fixpoint and records eventuality ranks.
inline void delete_inconsistent(Tableau& t) {
  auto& nodes = t.mutable_nodes();
  const FormulaStore& fs = t.formulas();
  auto kill = [&](size_t n, int rule) {
    nodes[n].alive = false;
    nodes[n].deleted_by = rule;
    ++t.stats().deleted[rule];
  };
  for (size_t n = 0; n < nodes.size(); ++n)
    if (nodes[n].alive && internally_inconsistent(fs, nodes[n])) kill(n, 1);

  bool changed = true;
  while (changed) {
    changed = false;
    // rule 2
    bool local = true;
    while (local) {
      local = false;
      for (size_t n = 0; n < nodes.size(); ++n) {
        if (!nodes[n].alive) continue;
        bool dead;
        if (nodes[n].kind == NodeKind::And) {
          dead = nodes[n].succ.empty() && !nodes[n].pseudo;
          for (const auto& s : nodes[n].succ) dead = dead || !nodes[s.node].alive;
        } else {
          dead = true;
          for (const auto& s : nodes[n].succ) dead = dead && !nodes[s.node].alive;
        }
        if (dead) {
          kill(n, 2);
          local = changed = true;
        }
      }
    }
    // rules 3 and 4
    for (FId e : t.eventualities()) {
      auto rank = detail::eventuality_ranks(t, e);
      int rule = fs.kind(e) == FKind::AU ? 4 : 3;
      for (size_t n = 0; n < nodes.size(); ++n) {
        if (!nodes[n].alive || nodes[n].kind != NodeKind::And || nodes[n].pseudo) continue;
        if (rank[n] == kInfRank && t.carries(static_cast<int>(n), e)) {
          kill(n, rule);
          changed = true;
        }
      }
    }
  }
  auto& ranks = t.mutable_ranks();
  ranks.clear();
  for (FId e : t.eventualities()) ranks.push_back(detail::eventuality_ranks(t, e));
}

/// Construction followed by deletion. `phi` need not be in NNF.
inline Tableau build_tableau(FormulaStore& fs, FId phi, TableauOptions opts = {}) {
  Tableau t = construct_tableau(fs, {{phi}}, opts);
  delete_inconsistent(t);
  return t;
}

inline Tableau build_tableau(FormulaStore& fs, const std::vector<std::vector<FId>>& initial_labels, TableauOptions opts = {}) {
  Tableau t = construct_tableau(fs, initial_labels, opts);
  delete_inconsistent(t);
  return t;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json to_json(const Tableau& t) {
  const FormulaStore& fs = t.formulas();
  nlohmann::ordered_json j;
  j["schema"] = "ccrsynth.tableau/1";
  j["root"] = t.root();
  j["satisfiable"] = t.satisfiable();
  const auto& s = t.stats();
  j["stats"] = {{"or_nodes", s.or_nodes},
                {"and_nodes", s.and_nodes},
                {"merged", s.merged},
                {"rule1_pruned", s.rule1_pruned},
                {"deleted", {{"rule1", s.deleted[1]}, {"rule2", s.deleted[2]}, {"rule3", s.deleted[3]}, {"rule4", s.deleted[4]}}},
                {"closure_size", s.closure_size}};
  auto& arr = j["nodes"] = nlohmann::ordered_json::array();
  for (size_t n = 0; n < t.nodes().size(); ++n) {
    const TNode& d = t.node(static_cast<int>(n));
    nlohmann::ordered_json e;
    e["id"] = n;
    e["kind"] = d.kind == NodeKind::Or ? "or" : "and";
    e["alive"] = d.alive;
    if (!d.alive) e["deleted_by"] = d.deleted_by;
    if (!d.valuation.empty()) e["valuation"] = valuation_json(fs.symbols(), d.valuation);
    auto& fl = e["formulas"] = nlohmann::ordered_json::array();
    for (FId f : d.formulas) fl.push_back(fs.str(f));
    if (!d.fulfilled.empty()) {
      auto& ff = e["fulfilled"] = nlohmann::ordered_json::array();
      for (FId f : d.fulfilled) ff.push_back(fs.str(f));
    }
    auto& sc = e["succ"] = nlohmann::ordered_json::array();
    for (const auto& x : d.succ) {
      if (x.proc >= 0) sc.push_back({{"proc", x.proc + 1}, {"to", x.node}});
      else sc.push_back({{"to", x.node}});
    }
    arr.push_back(std::move(e));
  }
  return j;
}

inline std::string to_dot(const Tableau& t, bool keep_deleted) {
  const FormulaStore& fs = t.formulas();
  std::ostringstream out;
  out << "digraph tableau {\n";
  auto shown = [&](int n) { return keep_deleted || t.node(n).alive; };
  for (size_t n = 0; n < t.nodes().size(); ++n) {
    const TNode& d = t.node(static_cast<int>(n));
    if (!shown(static_cast<int>(n))) continue;
    std::string label;
    if (!d.valuation.empty()) label = dot_escape(valuation_text(fs.symbols(), d.valuation)) + "\\n";
    for (FId f : d.formulas) label += dot_escape(fs.str(f)) + "\\n";
    out << "  n" << n << " [shape=" << (d.kind == NodeKind::Or ? "diamond" : "box") << ", label=\"" << n << ": "
        << label << "\"";
    if (!d.alive) out << ", color=gray, fontcolor=gray";
    if (static_cast<int>(n) == t.root()) out << ", penwidth=2";
    out << "];\n";
  }
  for (size_t n = 0; n < t.nodes().size(); ++n) {
    if (!shown(static_cast<int>(n))) continue;
    for (const auto& s : t.node(static_cast<int>(n)).succ) {
      if (!shown(s.node)) continue;
      out << "  n" << n << " -> n" << s.node;
      if (s.proc >= 0) out << " [label=\"" << s.proc + 1 << "\"]";
      out << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace ccrsynth
