#pragma once

// Model extraction from a tableau, bisimulation quotient, and the auxiliary
// variable x that separates states with equal labels.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "ccrsynth/error.hpp"
#include "ccrsynth/logic.hpp"
#include "ccrsynth/tableau.hpp"

namespace ccrsynth {

struct Fragment {
  int root = -1;
  FId eventuality = -1;
  std::vector<int> nodes;                        // AND-nodes, root first
  std::vector<std::tuple<int, int, int>> edges;  // (from, process, to)
  std::vector<int> frontier;
  int depth = 0;  // longest root-to-frontier path
  bool fulfilled = false;
};

struct ExtractedModel {
  Model model;
  int program_vars = 0;                // labels[s][0..program_vars) are program variables
  std::vector<int> tableau_node;       // origin of each state
  std::vector<std::vector<std::optional<Value>>> aux_assign;  // parallel to model.succ
  std::optional<Value> aux_max;        // x ∈ {0..aux_max} when present
  VarId aux_var() const { return aux_max ? program_vars : -1; }
};

namespace detail {

inline int ex_count(const Tableau& t, int n) {
  int c = 0;
  for (FId f : t.node(n).formulas) c += t.formulas().kind(f) == FKind::EXi;
  return c;
}

// Alive AND-child of OR-node o: lowest rank for the targeted eventuality,
// then most enabled processes, then lowest id.
inline int choose_child(const Tableau& t, int o, int ev) {
  int best = -1;
  std::tuple<int, int, int> best_key;
  for (const auto& s : t.node(o).succ) {
    if (!t.node(s.node).alive) continue;
    int r = ev >= 0 ? t.rank(ev, s.node) : 0;
    std::tuple<int, int, int> key{r, -ex_count(t, s.node), s.node};
    if (best < 0 || key < best_key) {
      best = s.node;
      best_key = key;
    }
  }
  if (best < 0) throw Error(Errc::Internal, "alive OR-node " + std::to_string(o) + " has no alive successor");
  return best;
}

inline int or_value(const Tableau& t, int o, int ev) {
  int best = kInfRank;
  for (const auto& s : t.node(o).succ)
    if (t.node(s.node).alive) best = std::min(best, t.rank(ev, s.node));
  return best;
}

// The OR-successor of d that continues a shortest witness for EU eventuality e.
inline int eu_witness(const Tableau& t, int d, int ev) {
  FId e = t.eventualities()[ev];
  const FormulaStore& fs = t.formulas();
  int best = -1, best_val = kInfRank;
  for (const auto& s : t.node(d).succ) {
    bool from_e = false;
    for (FId f : t.node(d).formulas) {
      const FNode& n = fs.node(f);
      if (n.kind == FKind::EXi && n.proc == s.proc && n.a == e) from_e = true;
    }
    const auto& fl = t.node(s.node).formulas;
    if (!from_e || !std::binary_search(fl.begin(), fl.end(), e)) continue;
    int v = or_value(t, s.node, ev);
    if (v < best_val) {
      best = s.node;
      best_val = v;
    }
  }
  return best;
}

inline bool relevant_edge(const Tableau& t, int d, int o, int ev) {
  if (ev < 0) return false;
  FId e = t.eventualities()[ev];
  if (t.formulas().kind(e) == FKind::AU) return true;
  return eu_witness(t, d, ev) == o;
}

// First eventuality pending at d in cyclic order from `from`; -1 if none.
inline int next_target(const Tableau& t, int d, int from) {
  int m = static_cast<int>(t.eventualities().size());
  for (int k = 0; k < m; ++k) {
    int j = (from + k) % m;
    FId e = t.eventualities()[j];
    if (t.pending(d, e) && !t.fulfilled_at(d, e)) return j;
  }
  return -1;
}

inline int choose_initial(const Tableau& t, int o) { return choose_child(t, o, -1); }

}  // namespace detail

/// Rooted DAG of AND-nodes fulfilling eventuality e at `root`, built from
/// minimal-rank choices, so its depth is minimal among fulfilling sub-DAGs.
inline Fragment build_fragment(const Tableau& t, int root, FId e) {
  Fragment fr;
  fr.root = root;
  fr.eventuality = e;
  int ev = t.event_index(e);
  if (ev < 0 || !t.carries(root, e) || t.rank(ev, root) == kInfRank) return fr;
  fr.fulfilled = true;
  std::map<int, int> depth_of;
  std::function<int(int)> visit = [&](int d) -> int {
    auto it = depth_of.find(d);
    if (it != depth_of.end()) return it->second;
    fr.nodes.push_back(d);
    if (t.fulfilled_at(d, e)) {
      fr.frontier.push_back(d);
      return depth_of[d] = 0;
    }
    int depth = 0;
    for (const auto& s : t.node(d).succ) {
      if (!detail::relevant_edge(t, d, s.node, ev)) continue;
      int c = detail::choose_child(t, s.node, ev);
      fr.edges.emplace_back(d, s.proc, c);
      depth = std::max(depth, 1 + visit(c));
    }
    return depth_of[d] = depth;
  };
  fr.depth = visit(root);
  return fr;
}

/// Coarsest partition of states with equal labels and matching indexed
/// successor blocks. Returns the block of every state.
inline std::vector<int> bisimulation_classes(const Model& m) {
  const int N = m.num_states();
  std::vector<int> block(N);
  {
    std::map<Valuation, int> ids;
    for (int s = 0; s < N; ++s) block[s] = ids.emplace(m.labels[s], static_cast<int>(ids.size())).first->second;
  }
  for (;;) {
    std::map<std::pair<int, std::vector<std::pair<int, int>>>, int> sig_ids;
    std::vector<int> next(N);
    for (int s = 0; s < N; ++s) {
      std::vector<std::pair<int, int>> sig;
      for (const auto& e : m.succ[s]) sig.emplace_back(e.proc, block[e.to]);
      std::sort(sig.begin(), sig.end());
      sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
      next[s] = sig_ids.emplace(std::make_pair(block[s], std::move(sig)), static_cast<int>(sig_ids.size())).first->second;
    }
    bool stable = sig_ids.size() == static_cast<size_t>(*std::max_element(block.begin(), block.end()) + 1);
    block = std::move(next);
    if (stable) break;
  }
  // renumber by first occurrence
  std::map<int, int> renum;
  for (int s = 0; s < N; ++s) block[s] = renum.emplace(block[s], static_cast<int>(renum.size())).first->second;
  return block;
}

struct ExtractOptions {
  bool quotient = true;  // merge bisimilar states
  bool verify = true;    // model-check the root labels on the result
};

inline ExtractedModel extract_model(const Tableau& t, ExtractOptions opts = {}) {
  if (!t.satisfiable()) throw Error(Errc::EmptyTableau, "tableau root was deleted");
  FormulaStore& fs = t.formulas();
  const int nvars = fs.symbols().num_vars();

  std::vector<int> init_ors;
  if (t.node(t.root()).kind == NodeKind::Or) init_ors.push_back(t.root());
  else
    for (const auto& s : t.node(t.root()).succ) init_ors.push_back(s.node);

  ExtractedModel em;
  em.program_vars = nvars;
  Model& m = em.model;
  m.k = fs.num_processes();
  std::map<std::pair<int, int>, int> state_of;
  std::vector<std::pair<int, int>> info;
  std::deque<int> work;
  auto intern = [&](int d, int j) {
    auto [it, fresh] = state_of.emplace(std::make_pair(d, j), m.num_states());
    if (fresh) {
      m.add_state(t.node(d).valuation);
      info.emplace_back(d, j);
      work.push_back(it->second);
    }
    return it->second;
  };
  std::vector<int> init_state;  // model state chosen for each initial OR-node
  for (int o : init_ors) {
    int d = detail::choose_initial(t, o);
    int s = intern(d, detail::next_target(t, d, 0));
    init_state.push_back(s);
    if (std::find(m.initial.begin(), m.initial.end(), s) == m.initial.end()) m.initial.push_back(s);
  }
  const int ne = static_cast<int>(t.eventualities().size());
  while (!work.empty()) {
    int s = work.front();
    work.pop_front();
    auto [d, j] = info[s];
    for (const auto& o : t.node(d).succ) {
      bool rel = detail::relevant_edge(t, d, o.node, j);
      int c = detail::choose_child(t, o.node, rel ? j : -1);
      int nj;
      FId e = j >= 0 ? t.eventualities()[j] : -1;
      if (rel && t.pending(c, e) && !t.fulfilled_at(c, e)) nj = j;
      else nj = ne ? detail::next_target(t, c, j >= 0 ? (j + 1) % ne : 0) : -1;
      m.add_edge(s, o.proc, intern(c, nj));
    }
  }
  for (int s = 0; s < m.num_states(); ++s) em.tableau_node.push_back(info[s].first);

  if (opts.quotient) {
    auto block = bisimulation_classes(m);
    int nb = block.empty() ? 0 : *std::max_element(block.begin(), block.end()) + 1;
    Model q;
    q.k = m.k;
    std::vector<int> tnode(nb, -1);
    for (int b = 0; b < nb; ++b) q.add_state({});
    for (int s = 0; s < m.num_states(); ++s) {
      int b = block[s];
      if (tnode[b] >= 0) continue;
      tnode[b] = em.tableau_node[s];
      q.labels[b] = m.labels[s];
      for (const auto& e : m.succ[s]) q.add_edge(b, e.proc, block[e.to]);
    }
    for (int s : m.initial)
      if (std::find(q.initial.begin(), q.initial.end(), block[s]) == q.initial.end()) q.initial.push_back(block[s]);
    m = std::move(q);
    em.tableau_node = std::move(tnode);
    for (int& s : init_state) s = block[s];
  }
  for (auto& s : m.succ) std::sort(s.begin(), s.end());
  em.aux_assign.assign(m.num_states(), {});
  for (int s = 0; s < m.num_states(); ++s) em.aux_assign[s].assign(m.succ[s].size(), std::nullopt);

  if (opts.verify) {
    auto bad = m.non_total_states();
    if (!bad.empty()) throw Error(Errc::Internal, "extracted model is not total");
    ModelChecker mc(m, fs);
    for (size_t r = 0; r < init_ors.size(); ++r) {
      FId phi = fs.conj(t.node(init_ors[r]).formulas);
      if (!mc.sat(phi)[init_state[r]]) throw Error(Errc::Internal, "extracted model violates the formula at an initial state");
    }
  }
  return em;
}

/// Adds x to every label (appended after the program variables) so that no
/// two states share a label. Initial states keep x = 0.
inline ExtractedModel disambiguate(ExtractedModel em) {
  Model& m = em.model;
  std::map<Valuation, std::vector<int>> groups;
  for (int s = 0; s < m.num_states(); ++s) groups[m.labels[s]].push_back(s);
  std::vector<Value> x(m.num_states(), 0);
  Value maxx = 0;
  for (auto& [label, members] : groups) {
    if (members.size() < 2) continue;
    // an initial member takes x = 0; the rest are numbered in state order
    std::stable_partition(members.begin(), members.end(), [&](int s) {
      return std::find(m.initial.begin(), m.initial.end(), s) != m.initial.end();
    });
    bool first_initial = std::find(m.initial.begin(), m.initial.end(), members.front()) != m.initial.end();
    Value next = 1;
    for (size_t i = 0; i < members.size(); ++i) {
      if (i == 0 && first_initial) continue;
      x[members[i]] = next++;
    }
    maxx = std::max(maxx, next - 1);
  }
  if (maxx == 0) return em;
  em.aux_max = maxx;
  for (int s = 0; s < m.num_states(); ++s) m.labels[s].push_back(x[s]);
  for (int s = 0; s < m.num_states(); ++s)
    for (size_t k = 0; k < m.succ[s].size(); ++k) {
      int to = m.succ[s][k].to;
      if (x[to] != 0) em.aux_assign[s][k] = x[to];
      else if (x[s] != 0) em.aux_assign[s][k] = 0;
    }
  return em;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json to_json(const SymbolTable& st, const ExtractedModel& em) {
  nlohmann::ordered_json j;
  j["schema"] = "ccrsynth.extracted_model/1";
  j["processes"] = em.model.k;
  if (em.aux_max) j["aux_domain"] = {0, *em.aux_max};
  auto& states = j["states"] = nlohmann::ordered_json::array();
  for (int s = 0; s < em.model.num_states(); ++s) {
    nlohmann::ordered_json e;
    e["id"] = s;
    Valuation prog(em.model.labels[s].begin(), em.model.labels[s].begin() + em.program_vars);
    e["label"] = valuation_json(st, prog);
    if (em.aux_max) e["label"]["x"] = em.model.labels[s][em.program_vars];
    e["tableau_node"] = em.tableau_node[s];
    auto& out = e["succ"] = nlohmann::ordered_json::array();
    for (size_t k = 0; k < em.model.succ[s].size(); ++k) {
      nlohmann::ordered_json ed{{"proc", em.model.succ[s][k].proc + 1}, {"to", em.model.succ[s][k].to}};
      if (em.aux_assign[s][k]) ed["x"] = *em.aux_assign[s][k];
      out.push_back(std::move(ed));
    }
    states.push_back(std::move(e));
  }
  j["initial"] = em.model.initial;
  return j;
}

inline std::string to_dot(const SymbolTable& st, const ExtractedModel& em) {
  std::ostringstream out;
  out << "digraph model {\n  node [shape=box];\n";
  const Model& m = em.model;
  for (int s = 0; s < m.num_states(); ++s) {
    Valuation prog(m.labels[s].begin(), m.labels[s].begin() + em.program_vars);
    std::string label = valuation_text(st, prog);
    if (em.aux_max) label += " x=" + std::to_string(m.labels[s][em.program_vars]);
    bool init = std::find(m.initial.begin(), m.initial.end(), s) != m.initial.end();
    out << "  m" << s << " [label=\"" << dot_escape(label) << "\"" << (init ? ", penwidth=2" : "") << "];\n";
  }
  for (int s = 0; s < m.num_states(); ++s)
    for (size_t k = 0; k < m.succ[s].size(); ++k) {
      out << "  m" << s << " -> m" << m.succ[s][k].to << " [label=\"" << m.succ[s][k].proc + 1;
      if (em.aux_assign[s][k]) out << " x:=" << *em.aux_assign[s][k];
      out << "\"];\n";
    }
  out << "}\n";
  return out.str();
}

}  // namespace ccrsynth
