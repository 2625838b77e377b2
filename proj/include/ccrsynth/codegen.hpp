#pragma once

// Compilation of CCR programs to lock / condition-variable pseudocode, and an
// exhaustive simulator of the lock semantics used to validate it.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "ccrsynth/error.hpp"
#include "ccrsynth/lang.hpp"
#include "ccrsynth/logic.hpp"

namespace ccrsynth {

enum class Granularity { Coarse, Fine };

inline const char* granularity_name(Granularity g) { return g == Granularity::Coarse ? "coarse" : "fine"; }

enum class LockKind { Global, CondVar, Data, Aux };

struct LockInfo {
  std::string name;
  LockKind kind = LockKind::Global;
  VarId var = -1;  // Data / Aux
  int cv = -1;     // CondVar
};

struct CondVar {
  int proc = 0;
  int loc = 0;
  std::string name;
  int lock = -1;  // l for coarse, l_cv for fine
};

using CcrId = std::pair<int, int>;  // (process, location)

struct LockPlan {
  Granularity granularity = Granularity::Coarse;
  std::vector<LockInfo> locks;  // position = rank in the global acquisition order
  std::vector<CondVar> condvars;
  std::map<CcrId, int> cv_of;                   // only locations with a non-trivial guard
  std::map<CcrId, std::vector<int>> signal_map;  // condvars to notify after the CCR
  std::map<CcrId, std::vector<int>> var_locks;   // fine: locks taken by the guard subroutine
  std::map<VarId, int> lock_of_var;
};

enum class OpKind { Acquire, Release, Test, Exec, Wait, Signal, Jump, End };

struct MicroOp {
  OpKind kind = OpKind::Jump;
  int lock = -1;
  int cv = -1;
  int target = -1;  // Test: where to go when the guard is false; Jump
};

struct EmittedProcess {
  int proc = 0;
  std::string name;
  std::vector<std::vector<MicroOp>> code;  // per location
  std::string text;                   // the .sync pseudocode
};

struct Compiled {
  ConcurrentProgram program;  // the CCR program being compiled
  LockPlan plan;
  std::vector<EmittedProcess> processes;
};

namespace detail {

struct Access {
  std::vector<VarId> reads, writes, guard_reads;
};

inline void sort_unique(std::vector<VarId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline Access access_of(const ConcurrentProgram& p, int i, int l) {
  const Instruction& ins = p.processes[i].body[l];
  Access a;
  if (ins.guard) collect_vars(*ins.guard, a.guard_reads);
  a.reads = a.guard_reads;
  for (const auto& stmt : ins.block)
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Assign>) {
            for (const auto& e : s.sources) collect_vars(e, a.reads);
            for (VarId t : s.targets) a.writes.push_back(t);
          } else if constexpr (std::is_same_v<T, IfGoto>) {
            collect_vars(s.guard, a.reads);
          } else if constexpr (std::is_same_v<T, AuxUpdate>) {
            for (const auto& b : s.branches) {
              collect_vars(b.cond, a.reads);
              collect_vars(b.value, a.reads);
              a.writes.push_back(b.target);
            }
          }
        },
        stmt);
  a.writes.push_back(p.processes[i].control);
  sort_unique(a.reads);
  sort_unique(a.writes);
  sort_unique(a.guard_reads);
  return a;
}

inline bool trivially_true(const Instruction& ins) {
  return !ins.guard || ((*ins.guard)->op == Op::Const && (*ins.guard)->value != 0);
}

inline int owner_of(const SymbolTable& st, VarId v) {
  const Variable& var = st.var(v);
  return (var.role == VarRole::Control || var.role == VarRole::Local) ? var.process : -1;
}

// Variables touched by more than one process: everything shared, plus control
// and local variables that another process's CCR reads.
inline std::vector<char> sync_shared(const ConcurrentProgram& p) {
  const SymbolTable& st = p.symbols;
  std::vector<char> out(st.num_vars(), 0);
  for (VarId v = 0; v < st.num_vars(); ++v) out[v] = owner_of(st, v) < 0;
  for (const auto& proc : p.processes)
    for (size_t l = 0; l < proc.body.size(); ++l)
      for (VarId v : access_of(p, proc.index, static_cast<int>(l)).reads)
        if (owner_of(st, v) >= 0 && owner_of(st, v) != proc.index) out[v] = 1;
  return out;
}

inline std::string cv_name(const Process& proc, int l) { return "cv_" + proc.name + "_" + proc.labels[l]; }

}  // namespace detail

/// Lock plan for a CCR program. Global order: condvar locks, then data
/// locks by name, then the auxiliary lock (condvar locks are the outer
/// locks of the fine template).
inline LockPlan plan_locks(const ConcurrentProgram& p, Granularity g) {
  const SymbolTable& st = p.symbols;
  LockPlan plan;
  plan.granularity = g;
  if (g == Granularity::Coarse) plan.locks.push_back({"l", LockKind::Global, -1, -1});
  for (const auto& proc : p.processes)
    for (size_t l = 0; l < proc.body.size(); ++l)
      if (!detail::trivially_true(proc.body[l])) {
        int c = static_cast<int>(plan.condvars.size());
        plan.condvars.push_back({proc.index, static_cast<int>(l), detail::cv_name(proc, static_cast<int>(l)), 0});
        plan.cv_of[{proc.index, static_cast<int>(l)}] = c;
        if (g == Granularity::Fine) {
          plan.condvars[c].lock = static_cast<int>(plan.locks.size());
          plan.locks.push_back({"l_" + plan.condvars[c].name, LockKind::CondVar, -1, c});
        }
      }
  auto shared = detail::sync_shared(p);
  if (g == Granularity::Fine) {
    std::vector<VarId> data, aux;
    for (VarId v = 0; v < st.num_vars(); ++v)
      if (shared[v]) (st.var(v).role == VarRole::Aux ? aux : data).push_back(v);
    auto by_name = [&](VarId a, VarId b) { return st.var(a).name < st.var(b).name; };
    std::sort(data.begin(), data.end(), by_name);
    std::sort(aux.begin(), aux.end(), by_name);
    for (VarId v : data) {
      plan.lock_of_var[v] = static_cast<int>(plan.locks.size());
      plan.locks.push_back({"l_" + st.var(v).name, LockKind::Data, v, -1});
    }
    for (VarId v : aux) {
      plan.lock_of_var[v] = static_cast<int>(plan.locks.size());
      plan.locks.push_back({"l_" + st.var(v).name, LockKind::Aux, v, -1});
    }
  }
  for (const auto& proc : p.processes)
    for (size_t l = 0; l < proc.body.size(); ++l) {
      CcrId id{proc.index, static_cast<int>(l)};
      auto acc = detail::access_of(p, proc.index, static_cast<int>(l));
      auto& sig = plan.signal_map[id];
      for (const auto& [other, c] : plan.cv_of) {
        if (other.first == proc.index) continue;
        auto gr = detail::access_of(p, other.first, other.second).guard_reads;
        bool hit = std::any_of(acc.writes.begin(), acc.writes.end(),
                               [&](VarId w) { return std::binary_search(gr.begin(), gr.end(), w); });
        if (hit) sig.push_back(c);
      }
      if (g == Granularity::Fine) {
        std::vector<VarId> touched = acc.reads;
        touched.insert(touched.end(), acc.writes.begin(), acc.writes.end());
        detail::sort_unique(touched);
        auto& ls = plan.var_locks[id];
        for (VarId v : touched)
          if (shared[v]) ls.push_back(plan.lock_of_var.at(v));
        std::sort(ls.begin(), ls.end());
      }
    }
  return plan;
}

namespace detail {

inline std::vector<MicroOp> lower_coarse(const LockPlan& plan, CcrId id) {
  std::vector<MicroOp> ops;
  auto cv = plan.cv_of.find(id);
  ops.push_back({OpKind::Acquire, 0});
  int test = -1;
  if (cv != plan.cv_of.end()) {
    test = static_cast<int>(ops.size());
    ops.push_back({OpKind::Test});
  }
  ops.push_back({OpKind::Exec});
  for (int c : plan.signal_map.at(id)) ops.push_back({OpKind::Signal, -1, c});
  ops.push_back({OpKind::Release, 0});
  ops.push_back({OpKind::End});
  if (test >= 0) {
    ops[test].target = static_cast<int>(ops.size());
    ops.push_back({OpKind::Wait, 0, cv->second});
    ops.push_back({OpKind::Jump, -1, -1, test});
  }
  return ops;
}

inline std::vector<MicroOp> lower_fine(const LockPlan& plan, CcrId id) {
  std::vector<MicroOp> ops;
  const auto& vl = plan.var_locks.at(id);
  auto cv = plan.cv_of.find(id);
  auto signals = [&] {
    for (int c : plan.signal_map.at(id)) {
      int lk = plan.condvars[c].lock;
      ops.push_back({OpKind::Acquire, lk});
      ops.push_back({OpKind::Signal, -1, c});
      ops.push_back({OpKind::Release, lk});
    }
  };
  if (cv == plan.cv_of.end()) {
    for (int lk : vl) ops.push_back({OpKind::Acquire, lk});
    ops.push_back({OpKind::Exec});
    for (auto it = vl.rbegin(); it != vl.rend(); ++it) ops.push_back({OpKind::Release, *it});
    signals();
    ops.push_back({OpKind::End});
    return ops;
  }
  int lcv = plan.condvars[cv->second].lock;
  ops.push_back({OpKind::Acquire, lcv});
  int loop = static_cast<int>(ops.size());
  for (int lk : vl) ops.push_back({OpKind::Acquire, lk});
  int test = static_cast<int>(ops.size());
  ops.push_back({OpKind::Test});
  ops.push_back({OpKind::Exec});
  for (auto it = vl.rbegin(); it != vl.rend(); ++it) ops.push_back({OpKind::Release, *it});
  ops.push_back({OpKind::Release, lcv});
  signals();
  ops.push_back({OpKind::End});
  ops[test].target = static_cast<int>(ops.size());
  for (auto it = vl.rbegin(); it != vl.rend(); ++it) ops.push_back({OpKind::Release, *it});
  ops.push_back({OpKind::Wait, lcv, cv->second});
  ops.push_back({OpKind::Jump, -1, -1, loop});
  return ops;
}

// ---- pseudocode text

inline std::string indent(int n) { return std::string(static_cast<size_t>(n) * 2, ' '); }

inline std::vector<std::string> body_lines(const ConcurrentProgram& p, const Process& proc, const Instruction& ins) {
  std::vector<std::string> out;
  for (const auto& s : ins.block) {
    if (const auto* u = std::get_if<AuxUpdate>(&s)) {
      for (size_t k = 0; k < u->branches.size(); ++k) {
        const auto& b = u->branches[k];
        out.push_back(std::string(k ? "else if (" : "if (") + to_string(p.symbols, b.cond) + ")");
        out.push_back("  " + p.symbols.var(b.target).name + " := " + to_string(p.symbols, b.value) + ";");
      }
    } else {
      out.push_back(stmt_to_string(p, proc, s) + ";");
    }
  }
  return out;
}

inline std::string lock_list(const LockPlan& plan, const std::vector<int>& ls) {
  std::string s;
  for (size_t n = 0; n < ls.size(); ++n) s += (n ? ", " : "") + plan.locks[ls[n]].name;
  return s;
}

inline std::string header_text(const ConcurrentProgram& p, const Process& proc, const LockPlan& plan) {
  std::string out = "// " + proc.name + ", " + granularity_name(plan.granularity) + "-grained\n";
  for (const auto& lk : plan.locks) out += "lock " + lk.name + ";\n";
  for (const auto& cv : plan.condvars) out += "condition " + cv.name + ";\n";
  (void)p;
  return out + "\n";
}

inline std::string coarse_text(const ConcurrentProgram& p, const Process& proc, const LockPlan& plan) {
  std::string out = header_text(p, proc, plan);
  for (size_t l = 0; l < proc.body.size(); ++l) {
    CcrId id{proc.index, static_cast<int>(l)};
    const Instruction& ins = proc.body[l];
    out += proc.labels[l] + ":\n";
    out += "lock(l) {\n";
    auto cv = plan.cv_of.find(id);
    if (cv != plan.cv_of.end()) {
      out += indent(1) + "while (!(" + to_string(p.symbols, *ins.guard) + "))\n";
      out += indent(2) + "wait(" + plan.condvars[cv->second].name + ", l);\n";
    }
    for (const auto& line : body_lines(p, proc, ins)) out += indent(1) + line + "\n";
    for (int c : plan.signal_map.at(id)) out += indent(1) + "signal(" + plan.condvars[c].name + ");\n";
    out += "}\n";
  }
  return out;
}

inline std::string fine_text(const ConcurrentProgram& p, const Process& proc, const LockPlan& plan) {
  std::string out = header_text(p, proc, plan);
  for (size_t l = 0; l < proc.body.size(); ++l) {
    CcrId id{proc.index, static_cast<int>(l)};
    if (!plan.cv_of.count(id)) continue;
    const Instruction& ins = proc.body[l];
    const auto& vl = plan.var_locks.at(id);
    int d = 1;
    out += "boolean Guard_" + proc.name + "_" + proc.labels[l] + "() {\n";
    if (!vl.empty()) out += indent(d++) + "lock(" + lock_list(plan, vl) + ") {\n";
    out += indent(d) + "if (" + to_string(p.symbols, *ins.guard) + ") {\n";
    for (const auto& line : body_lines(p, proc, ins)) out += indent(d + 1) + line + "\n";
    out += indent(d + 1) + "return(true);\n" + indent(d) + "}\n";
    out += indent(d) + "else return(false);\n";
    if (!vl.empty()) out += indent(--d) + "}\n";
    out += "}\n\n";
  }
  for (size_t l = 0; l < proc.body.size(); ++l) {
    CcrId id{proc.index, static_cast<int>(l)};
    const Instruction& ins = proc.body[l];
    out += proc.labels[l] + ":\n";
    auto cv = plan.cv_of.find(id);
    if (cv != plan.cv_of.end()) {
      const CondVar& c = plan.condvars[cv->second];
      const std::string& lk = plan.locks[c.lock].name;
      out += "lock(" + lk + ") {\n";
      out += indent(1) + "while (!Guard_" + proc.name + "_" + proc.labels[l] + "())\n";
      out += indent(2) + "wait(" + c.name + ", " + lk + ");\n";
      out += "}\n";
    } else {
      const auto& vl = plan.var_locks.at(id);
      int d = 0;
      if (!vl.empty()) out += "lock(" + lock_list(plan, vl) + ") {\n", d = 1;
      for (const auto& line : body_lines(p, proc, ins)) out += indent(d) + line + "\n";
      if (d) out += "}\n";
    }
    for (int c : plan.signal_map.at(id)) {
      const CondVar& s = plan.condvars[c];
      out += "lock(" + plan.locks[s.lock].name + ") {\n" + indent(1) + "signal(" + s.name + ");\n}\n";
    }
  }
  return out;
}

inline Compiled compile(const ConcurrentProgram& sp, Granularity g) {
  for (const auto& proc : sp.processes)
    for (const auto& ins : proc.body)
      if (!ins.is_ccr()) throw Error(Errc::Unsupported, proc.name + " has an unsynchronized instruction; compile a CCR program");
  Compiled c;
  c.program = sp;
  c.plan = plan_locks(sp, g);
  for (const auto& proc : sp.processes) {
    EmittedProcess ep;
    ep.proc = proc.index;
    ep.name = proc.name;
    for (size_t l = 0; l < proc.body.size(); ++l) {
      CcrId id{proc.index, static_cast<int>(l)};
      ep.code.push_back(g == Granularity::Coarse ? lower_coarse(c.plan, id) : lower_fine(c.plan, id));
    }
    ep.text = g == Granularity::Coarse ? coarse_text(sp, proc, c.plan) : fine_text(sp, proc, c.plan);
    c.processes.push_back(std::move(ep));
  }
  return c;
}

}  // namespace detail

inline Compiled compile_coarse(const ConcurrentProgram& sp) { return detail::compile(sp, Granularity::Coarse); }
inline Compiled compile_fine(const ConcurrentProgram& sp) { return detail::compile(sp, Granularity::Fine); }

/// Removes condvar c from the signals sent after CCR id (mutation testing).
inline Compiled drop_signal(Compiled c, CcrId id, int cv) {
  auto& sig = c.plan.signal_map.at(id);
  sig.erase(std::remove(sig.begin(), sig.end(), cv), sig.end());
  auto& code = c.processes.at(id.first).code.at(id.second);
  std::vector<MicroOp> out;
  std::vector<int> remap(code.size() + 1, 0);
  for (size_t n = 0; n < code.size(); ++n) {
    remap[n] = static_cast<int>(out.size());
    bool is_sig = code[n].kind == OpKind::Signal && code[n].cv == cv;
    // fine signals are bracketed by the condvar's own lock
    bool bracket = c.plan.granularity == Granularity::Fine && n + 1 < code.size() && code[n].kind == OpKind::Acquire &&
                   code[n + 1].kind == OpKind::Signal && code[n + 1].cv == cv;
    bool closing = c.plan.granularity == Granularity::Fine && n > 0 && code[n].kind == OpKind::Release &&
                   code[n - 1].kind == OpKind::Signal && code[n - 1].cv == cv;
    if (!is_sig && !bracket && !closing) out.push_back(code[n]);
  }
  remap[code.size()] = static_cast<int>(out.size());
  for (auto& op : out)
    if (op.target >= 0) op.target = remap[op.target];
  code = std::move(out);
  return c;
}

/// Every nested acquisition follows the global order, and every wait sits
/// in a loop re-testing its guard. Returns the first violation, if any.
inline std::optional<std::string> check_lock_discipline(const Compiled& c) {
  for (const auto& ep : c.processes)
    for (size_t l = 0; l < ep.code.size(); ++l) {
      const auto& ops = ep.code[l];
      const std::string where = ep.name + "." + c.program.processes[ep.proc].labels[l];
      const int n = static_cast<int>(ops.size());
      std::set<std::pair<int, std::vector<int>>> seen;
      std::vector<std::pair<int, std::vector<int>>> work{{0, {}}};
      while (!work.empty()) {
        auto [pc, held] = work.back();
        work.pop_back();
        if (pc < 0 || pc >= n) return where + ": control leaves the emitted code";
        if (!seen.emplace(pc, held).second) continue;
        const MicroOp& op = ops[pc];
        switch (op.kind) {
          case OpKind::Acquire:
            for (int h : held)
              if (h >= op.lock) return where + ": " + c.plan.locks[op.lock].name + " acquired under " + c.plan.locks[h].name;
            held.push_back(op.lock);
            work.emplace_back(pc + 1, held);
            break;
          case OpKind::Release: {
            auto it = std::find(held.begin(), held.end(), op.lock);
            if (it == held.end()) return where + ": releases " + c.plan.locks[op.lock].name + " without holding it";
            held.erase(it);
            work.emplace_back(pc + 1, held);
            break;
          }
          case OpKind::Test:
            work.emplace_back(pc + 1, held);
            work.emplace_back(op.target, held);
            break;
          case OpKind::Wait: {
            if (held != std::vector<int>{op.lock}) return where + ": wait must hold exactly its own lock";
            bool retest = false;
            if (pc + 1 < n && ops[pc + 1].kind == OpKind::Jump)
              for (int m = ops[pc + 1].target; m < pc; ++m) retest = retest || ops[m].kind == OpKind::Test;
            if (!retest) return where + ": wait outside a re-test loop";
            work.emplace_back(pc + 1, held);
            break;
          }
          case OpKind::Jump:
            work.emplace_back(op.target, held);
            break;
          case OpKind::End:
            if (!held.empty()) return where + ": locks still held at the end of the CCR";
            break;
          default:
            work.emplace_back(pc + 1, held);
        }
      }
    }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Simulator

struct SimOptions {
  size_t state_limit = 2000000;
  bool throw_on_deadlock = true;
};

struct SimResult {
  size_t micro_states = 0;
  Model micro;               // micro states labelled by program valuations
  Model projected;           // valuations with moves taking an Exec step
  std::optional<Valuation> deadlock;
  std::string deadlock_detail;
};

namespace detail {

enum : int { kRun = 0, kWaiting = 1, kReacquire = 2 };

struct MicroLayout {
  int nvars, k, nlocks;
  int proc_base(int i) const { return nvars + 3 * i; }
  int lock_base() const { return nvars + 3 * k; }
};

}  // namespace detail

/// Explores every interleaving of the lock-based program from `initials`.
inline SimResult simulate_lock_semantics(const Compiled& c, const std::vector<Valuation>& initials, SimOptions opts = {}) {
  const ConcurrentProgram& p = c.program;
  const int k = p.num_processes();
  detail::MicroLayout L{p.symbols.num_vars(), k, static_cast<int>(c.plan.locks.size())};
  using Micro = std::vector<int>;
  std::map<Micro, int> index;
  std::vector<Micro> states;
  SimResult r;
  r.micro.k = r.projected.k = k;
  std::map<Valuation, int> proj_index;
  auto proj = [&](const Valuation& v) {
    auto [it, fresh] = proj_index.emplace(v, r.projected.num_states());
    if (fresh) r.projected.add_state(v);
    return it->second;
  };
  std::deque<int> work;
  auto normalize = [&](Micro& m, int i) {
    int& pc = m[L.proc_base(i) + 1];
    const auto& ops = c.processes[i].code[m[L.proc_base(i)]];
    for (int guard = 0; ops[pc].kind == OpKind::Jump; ++guard) {
      if (guard > 1000) throw Error(Errc::Internal, "jump cycle in emitted code");
      pc = ops[pc].target;
    }
  };
  auto intern = [&](Micro m) {
    auto [it, fresh] = index.emplace(m, static_cast<int>(states.size()));
    if (fresh) {
      if (states.size() >= opts.state_limit) throw Error(Errc::ResourceLimit, "simulator state limit reached");
      states.push_back(m);
      r.micro.add_state(Valuation(m.begin(), m.begin() + L.nvars));
      proj(Valuation(m.begin(), m.begin() + L.nvars));
      work.push_back(it->second);
    }
    return it->second;
  };
  for (const auto& v : initials) {
    Micro m(v.begin(), v.end());
    for (int i = 0; i < k; ++i) {
      m.push_back(v[p.processes[i].control]);
      m.push_back(0);
      m.push_back(detail::kRun);
    }
    m.resize(L.lock_base() + L.nlocks, -1);
    for (int i = 0; i < k; ++i) normalize(m, i);
    int s = intern(m);
    if (std::find(r.micro.initial.begin(), r.micro.initial.end(), s) == r.micro.initial.end()) r.micro.initial.push_back(s);
    int ps = proj(v);
    if (std::find(r.projected.initial.begin(), r.projected.initial.end(), ps) == r.projected.initial.end())
      r.projected.initial.push_back(ps);
  }
  while (!work.empty()) {
    int sid = work.front();
    work.pop_front();
    const Micro cur = states[sid];
    bool any = false;
    for (int i = 0; i < k; ++i) {
      const int b = L.proc_base(i);
      const auto& ops = c.processes[i].code[cur[b]];
      const MicroOp& op = ops[cur[b + 1]];
      std::vector<Micro> next;
      Micro m = cur;
      auto holder = [&](int lk) -> int& { return m[L.lock_base() + lk]; };
      bool exec = false;
      if (cur[b + 2] == detail::kWaiting) continue;
      if (cur[b + 2] == detail::kReacquire) {
        if (holder(op.lock) != -1) continue;
        holder(op.lock) = i;
        m[b + 2] = detail::kRun;
        m[b + 1] += 1;
        next.push_back(m);
      } else {
        switch (op.kind) {
          case OpKind::Acquire:
            if (holder(op.lock) == i) throw Error(Errc::Internal, "re-entrant acquisition of " + c.plan.locks[op.lock].name);
            if (holder(op.lock) != -1) continue;
            holder(op.lock) = i;
            m[b + 1] += 1;
            next.push_back(m);
            break;
          case OpKind::Release:
            if (holder(op.lock) != i) throw Error(Errc::Internal, "release of a lock not held: " + c.plan.locks[op.lock].name);
            holder(op.lock) = -1;
            m[b + 1] += 1;
            next.push_back(m);
            break;
          case OpKind::Test: {
            Valuation v(cur.begin(), cur.begin() + L.nvars);
            bool g = eval_atom(p.symbols, *p.processes[i].body[cur[b]].guard, v);
            m[b + 1] = g ? m[b + 1] + 1 : op.target;
            next.push_back(m);
            break;
          }
          case OpKind::Exec: {
            Valuation v(cur.begin(), cur.begin() + L.nvars);
            auto mv = execute(p, i, v);
            if (!mv) throw Error(Errc::Internal, "CCR executed with a false guard");
            std::copy(mv->after.begin(), mv->after.end(), m.begin());
            m[b + 1] += 1;
            exec = true;
            next.push_back(m);
            break;
          }
          case OpKind::Wait:
            if (holder(op.lock) != i) throw Error(Errc::Internal, "wait without holding its lock");
            holder(op.lock) = -1;
            m[b + 2] = detail::kWaiting;
            next.push_back(m);
            break;
          case OpKind::Signal: {
            m[b + 1] += 1;
            bool woke = false;
            for (int j = 0; j < k; ++j) {
              const int bj = L.proc_base(j);
              const MicroOp& oj = c.processes[j].code[cur[bj]][cur[bj + 1]];
              if (j == i || cur[bj + 2] != detail::kWaiting || oj.cv != op.cv) continue;
              Micro w = m;
              w[bj + 2] = detail::kReacquire;
              next.push_back(w);
              woke = true;
            }
            if (!woke) next.push_back(m);
            break;
          }
          case OpKind::End:
            m[b] = m[p.processes[i].control];
            m[b + 1] = 0;
            next.push_back(m);
            break;
          case OpKind::Jump:
            throw Error(Errc::Internal, "unnormalized jump");
        }
      }
      for (auto& n : next) {
        normalize(n, i);
        any = true;
        int to = intern(n);
        r.micro.add_edge(sid, i, to);
        if (exec)
          r.projected.add_edge(proj(Valuation(cur.begin(), cur.begin() + L.nvars)), i,
                               proj(Valuation(n.begin(), n.begin() + L.nvars)));
      }
    }
    if (!any && !r.deadlock) {
      r.deadlock = Valuation(cur.begin(), cur.begin() + L.nvars);
      r.deadlock_detail = "all processes blocked in " + valuation_text(p.symbols, *r.deadlock);
      if (opts.throw_on_deadlock) throw Error(Errc::SimDeadlock, r.deadlock_detail);
    }
  }
  r.micro_states = states.size();
  for (auto& s : r.projected.succ) std::sort(s.begin(), s.end());
  return r;
}

/// True if f uses a next-time operator (these are not stutter-invariant).
inline bool has_next_time(const FormulaStore& fs, FId f) {
  std::vector<FId> stack{f};
  std::set<FId> seen;
  while (!stack.empty()) {
    FId g = stack.back();
    stack.pop_back();
    if (g < 0 || !seen.insert(g).second) continue;
    FKind kd = fs.kind(g);
    if (kd == FKind::EXi || kd == FKind::AXi || kd == FKind::EX || kd == FKind::AX) return true;
    stack.push_back(fs.node(g).a);
    stack.push_back(fs.node(g).b);
  }
  return false;
}

struct SimCheck {
  bool deadlock_free = true;
  bool spec_holds = false;
  bool same_states = false;  // projected valuations == CCR reachable states
  bool same_moves = false;
  bool micro_level = true;   // spec checked on micro states (no next-time operators)
  size_t micro_states = 0;
  size_t projected_states = 0;
  std::string detail;
};

/// Simulates c and compares against the CCR program's transition system.
inline SimCheck check_compiled(const Compiled& c, FormulaStore& fs, FId spec, const std::vector<Valuation>& initials,
                               SimOptions opts = {}) {
  SimCheck out;
  opts.throw_on_deadlock = false;
  auto r = simulate_lock_semantics(c, initials, opts);
  out.micro_states = r.micro_states;
  out.projected_states = static_cast<size_t>(r.projected.num_states());
  if (r.deadlock) {
    out.deadlock_free = false;
    out.detail = r.deadlock_detail;
    return out;
  }
  out.micro_level = !has_next_time(fs, spec);
  const Model& m = out.micro_level ? r.micro : r.projected;
  if (!m.non_total_states().empty()) {
    out.detail = "projected system is not total";
    return out;
  }
  auto sat = model_check(m, fs, spec);
  out.spec_holds = std::all_of(m.initial.begin(), m.initial.end(), [&](int s) { return sat[s] != 0; });
  if (!out.spec_holds) out.detail = "specification fails on the lock-based program";

  auto ts = build_transition_system(c.program, initials);
  std::set<Valuation> a(ts.states.begin(), ts.states.end());
  std::set<Valuation> b(r.projected.labels.begin(), r.projected.labels.end());
  out.same_states = a == b;
  std::set<std::tuple<Valuation, int, Valuation>> ea, eb;
  for (const auto& t : ts.transitions) ea.emplace(ts.states[t.from], t.proc, ts.states[t.to]);
  for (int s = 0; s < r.projected.num_states(); ++s)
    for (const auto& e : r.projected.succ[s]) eb.emplace(r.projected.labels[s], e.proc, r.projected.labels[e.to]);
  out.same_moves = ea == eb;
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json to_json(const Compiled& c) {
  const ConcurrentProgram& p = c.program;
  nlohmann::ordered_json j;
  j["schema"] = "ccrsynth.lock_plan/1";
  j["granularity"] = granularity_name(c.plan.granularity);
  auto& locks = j["locks"] = nlohmann::ordered_json::array();
  for (const auto& lk : c.plan.locks) {
    const char* kind = lk.kind == LockKind::Global ? "global" : lk.kind == LockKind::CondVar ? "condvar" : lk.kind == LockKind::Data ? "data" : "aux";
    nlohmann::ordered_json e{{"name", lk.name}, {"kind", kind}};
    if (lk.var >= 0) e["variable"] = p.symbols.var(lk.var).name;
    locks.push_back(std::move(e));
  }
  auto& cvs = j["condvars"] = nlohmann::ordered_json::array();
  for (const auto& cv : c.plan.condvars)
    cvs.push_back({{"name", cv.name},
                   {"process", p.processes[cv.proc].name},
                   {"location", p.processes[cv.proc].labels[cv.loc]},
                   {"lock", c.plan.locks[cv.lock].name}});
  auto& sig = j["signal_map"] = nlohmann::ordered_json::array();
  for (const auto& [id, list] : c.plan.signal_map) {
    nlohmann::ordered_json e{{"process", p.processes[id.first].name}, {"location", p.processes[id.first].labels[id.second]}};
    auto& names = e["signals"] = nlohmann::ordered_json::array();
    for (int cv : list) names.push_back(c.plan.condvars[cv].name);
    if (c.plan.granularity == Granularity::Fine) {
      auto& ls = e["locks"] = nlohmann::ordered_json::array();
      for (int lk : c.plan.var_locks.at(id)) ls.push_back(c.plan.locks[lk].name);
    }
    sig.push_back(std::move(e));
  }
  return j;
}

}  // namespace ccrsynth
