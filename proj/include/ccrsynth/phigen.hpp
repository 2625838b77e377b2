#pragma once

// Derives the formula φ_P describing a CCR-free program's interleaving
// semantics.

#include <string>
#include <vector>

#include "ccrsynth/error.hpp"
#include "ccrsynth/lang.hpp"
#include "ccrsynth/logic.hpp"

namespace ccrsynth {

struct PhiP {
  FId initial = -1;
  FId interleaving = -1;
  FId progress = -1;
  std::vector<FId> interleaving_groups;  // one AG per ordered pair (i, j≠i)
  std::vector<FId> per_instruction;      // one entry per assignment / goto, two per condition test
  std::vector<std::pair<int, int>> origin;  // (process, location) of each per_instruction entry
  std::vector<FId> frame;                   // data frame of condition tests and gotos
  FId body = -1;         // everything except the initial condition
  FId conjunction = -1;  // initial ∧ body
};

namespace detail {

struct InstructionShape {
  std::vector<VarId> reads;   // variables whose values determine the effect
  std::vector<VarId> writes;  // every variable the instruction may assign
  int ifs = 0, gotos = 0, assigns = 0;
};

inline InstructionShape shape_of(const ConcurrentProgram& prog, const Instruction& ins) {
  InstructionShape sh;
  std::vector<VarId> definite;
  bool jumped = false;
  for (const auto& stmt : ins.block) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Assign>) {
            ++sh.assigns;
            for (const auto& e : s.sources) collect_vars(e, sh.reads);
            for (VarId t : s.targets) {
              sh.writes.push_back(t);
              if (!jumped) definite.push_back(t);
            }
          } else if constexpr (std::is_same_v<T, IfGoto>) {
            ++sh.ifs;
            collect_vars(s.guard, sh.reads);
            jumped = true;
          } else if constexpr (std::is_same_v<T, Goto>) {
            ++sh.gotos;
            jumped = true;
          } else {
            ++sh.assigns;
            for (const auto& b : s.branches) {
              collect_vars(b.cond, sh.reads);
              collect_vars(b.value, sh.reads);
              sh.writes.push_back(b.target);
            }
          }
        },
        stmt);
  }
  auto norm = [](std::vector<VarId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  norm(sh.writes);
  norm(definite);
  // a variable that may keep its old value must be part of the hypothesis
  for (VarId w : sh.writes)
    if (!std::binary_search(definite.begin(), definite.end(), w)) sh.reads.push_back(w);
  norm(sh.reads);
  std::vector<VarId> data;
  for (VarId v : sh.reads)
    if (prog.symbols.var(v).role != VarRole::Control) data.push_back(v);
  sh.reads = data;
  return sh;
}

inline FId eq_atom(FormulaStore& fs, const SymbolTable& st, VarId v, Value c) { return fs.atom(make_eq(st, v, c)); }

// ⋀_{u ∉ except} ⋀_c (u=c → AXᵢ u=c)
inline FId data_frame(FormulaStore& fs, const ConcurrentProgram& prog, int i, const std::vector<VarId>& except) {
  const SymbolTable& st = prog.symbols;
  std::vector<FId> parts;
  for (VarId u : prog.data_vars()) {
    if (std::find(except.begin(), except.end(), u) != except.end()) continue;
    for (Value c : st.sort_of(u).domain) {
      FId a = eq_atom(fs, st, u, c);
      parts.push_back(fs.implies(a, fs.axi(i, a)));
    }
  }
  return fs.conj(parts);
}

}  // namespace detail

/// Conjunction fixing every variable of s.
inline FId valuation_formula(FormulaStore& fs, const SymbolTable& st, const Valuation& s) {
  std::vector<FId> parts;
  for (VarId v = 0; v < static_cast<VarId>(s.size()); ++v)
    if (s[v] != kUnset) parts.push_back(detail::eq_atom(fs, st, v, s[v]));
  return fs.conj(parts);
}

inline PhiP generate_phi_p(const ConcurrentProgram& prog, FormulaStore& fs, InitMode mode) {
  if (prog.has_ccrs()) throw Error(Errc::Unsupported, "φ_P is defined for programs without CCRs");
  if (fs.num_processes() != prog.num_processes())
    throw Error(Errc::SortError, "formula store built for a different number of processes");
  const SymbolTable& st = prog.symbols;
  const int k = prog.num_processes();
  PhiP out;

  // clause 1
  auto inputs = input_vars(prog);
  if (mode == InitMode::AllInitialized && !inputs.empty())
    throw Error(Errc::UninitializedInAllInitMode, "variable '" + st.var(inputs.front()).name + "' has no initial value");
  std::vector<FId> init;
  for (const auto& p : prog.processes) init.push_back(detail::eq_atom(fs, st, p.control, 0));
  for (VarId v : prog.data_vars()) {
    const Variable& var = st.var(v);
    if (var.init) {
      init.push_back(detail::eq_atom(fs, st, v, *var.init));
    } else if (var.init_from) {
      init.push_back(fs.atom(make_apply(st, Op::Eq, {make_var(st, v), make_var(st, *var.init_from)})));
    } else {
      std::vector<FId> alts;
      for (Value c : st.sort_of(v).domain) alts.push_back(detail::eq_atom(fs, st, v, c));
      init.push_back(fs.disj(alts));
    }
  }
  out.initial = fs.conj(init);

  // clause 2: a move of process j leaves loc_i unchanged
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const Process& pi = prog.processes[i];
      std::vector<FId> parts;
      for (size_t l = 0; l < pi.labels.size(); ++l) {
        FId at = detail::eq_atom(fs, st, pi.control, static_cast<Value>(l));
        parts.push_back(fs.implies(at, fs.axi(j, at)));
      }
      out.interleaving_groups.push_back(fs.ag(fs.conj(parts)));
    }
  out.interleaving = fs.conj(out.interleaving_groups);

  // clause 3
  out.progress = fs.ag(fs.ex_any(fs.tru()));

  // clauses 4-6
  for (int i = 0; i < k; ++i) {
    const Process& proc = prog.processes[i];
    for (size_t l = 0; l < proc.body.size(); ++l) {
      const Instruction& ins = proc.body[l];
      FId at = detail::eq_atom(fs, st, proc.control, static_cast<Value>(l));
      auto emit = [&](FId f) {
        out.per_instruction.push_back(fs.ag(f));
        out.origin.emplace_back(i, static_cast<int>(l));
      };
      if (ins.block.size() == 1 && std::holds_alternative<Goto>(ins.block[0])) {
        int target = std::get<Goto>(ins.block[0]).target;
        emit(fs.implies(at, fs.axi(i, detail::eq_atom(fs, st, proc.control, target))));
        out.frame.push_back(fs.ag(fs.implies(at, detail::data_frame(fs, prog, i, {}))));
        continue;
      }
      if (ins.block.size() == 1 && std::holds_alternative<IfGoto>(ins.block[0])) {
        const IfGoto& g = std::get<IfGoto>(ins.block[0]);
        FId cond = fs.to_nnf(fs.atom(g.guard));
        FId ncond = fs.negate(cond);
        emit(fs.implies(fs.mk_and(at, cond), fs.axi(i, detail::eq_atom(fs, st, proc.control, g.then_loc))));
        emit(fs.implies(fs.mk_and(at, ncond), fs.axi(i, detail::eq_atom(fs, st, proc.control, g.else_loc))));
        out.frame.push_back(fs.ag(fs.implies(at, detail::data_frame(fs, prog, i, {}))));
        continue;
      }
      // Assignments (and blocks). One implication per valuation of the
      // variables the effect depends on; everything else is framed.
      auto sh = detail::shape_of(prog, ins);
      std::vector<FId> cases;
      Valuation s(st.num_vars(), kUnset);
      for (const auto& p : prog.processes) s[p.control] = 0;
      s[proc.control] = static_cast<Value>(l);
      std::function<void(size_t)> enumerate = [&](size_t idx) {
        if (idx == sh.reads.size()) {
          std::vector<FId> hyp;
          for (VarId r : sh.reads) hyp.push_back(detail::eq_atom(fs, st, r, s[r]));
          FId effect;
          try {
            auto mv = execute(prog, i, s);
            std::vector<FId> post{detail::eq_atom(fs, st, proc.control, mv->next_loc)};
            for (VarId w : sh.writes) post.push_back(detail::eq_atom(fs, st, w, mv->after[w]));
            effect = fs.axi(i, fs.conj(post));
          } catch (const Error& e) {
            if (e.code() != Errc::PartialApplication) throw;
            effect = fs.axi(i, fs.fls());
          }
          FId h = fs.conj(hyp);
          cases.push_back(fs.is_true(h) ? effect : fs.implies(h, effect));
          return;
        }
        VarId r = sh.reads[idx];
        for (Value c : st.sort_of(r).domain) {
          s[r] = c;
          enumerate(idx + 1);
        }
        s[r] = kUnset;
      };
      enumerate(0);
      cases.push_back(detail::data_frame(fs, prog, i, sh.writes));
      emit(fs.implies(at, fs.conj(cases)));
    }
  }

  std::vector<FId> body{out.interleaving, out.progress};
  body.insert(body.end(), out.per_instruction.begin(), out.per_instruction.end());
  body.insert(body.end(), out.frame.begin(), out.frame.end());
  out.body = fs.conj(body);
  out.conjunction = fs.mk_and(out.initial, out.body);
  return out;
}

/// φ_P in .lctl syntax, one clause per line, ';'-separated.
inline std::string dump_phi(const ConcurrentProgram& prog, FormulaStore& fs, const PhiP& phi) {
  std::string out;
  auto line = [&](const std::string& tag, FId f) { out += "// " + tag + "\n" + fs.str(f) + ";\n"; };
  line("initial", phi.initial);
  for (FId f : phi.interleaving_groups) line("interleaving", f);
  line("progress", phi.progress);
  for (size_t n = 0; n < phi.per_instruction.size(); ++n) {
    const auto& [i, l] = phi.origin[n];
    line(prog.processes[i].name + "." + prog.processes[i].labels[l], phi.per_instruction[n]);
  }
  for (FId f : phi.frame) line("frame", f);
  if (!out.empty()) out.erase(out.size() - 2, 1);  // no separator after the last clause
  return out;
}

}  // namespace ccrsynth
