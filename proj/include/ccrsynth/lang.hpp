#pragma once

// Concurrent programs: AST, the .cp parser and printer, and the explicit
// interleaving semantics (S, S0, R).

#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "ccrsynth/error.hpp"
#include "ccrsynth/syntax.hpp"
#include "ccrsynth/vocab.hpp"

namespace ccrsynth {

using StateId = int;

struct Assign {
  std::vector<VarId> targets;
  std::vector<Expr> sources;
};
struct IfGoto {
  Expr guard;
  int then_loc = 0;
  int else_loc = 0;
};
struct Goto {
  int target = 0;
};
// `if (c1) x := e1 else if (c2) x := e2 ...`: conditions are tested in order
// and only the first match assigns.
struct AuxUpdate {
  struct Branch {
    Expr cond;
    VarId target = -1;
    Expr value;
  };
  std::vector<Branch> branches;
};

using Stmt = std::variant<Assign, IfGoto, Goto, AuxUpdate>;

struct Instruction {
  std::optional<Expr> guard;  // present for CCRs
  bool atomic_block = false;  // user-declared `atomic { ... }`
  std::vector<Stmt> block;
  SourceLoc loc;

  bool is_ccr() const { return guard.has_value(); }
};

struct Process {
  std::string name;
  int index = 0;  // 0-based; surface syntax is 1-based (loc1, AX1)
  VarId control = -1;
  SortId loc_sort = -1;
  std::vector<std::string> labels;
  std::vector<Instruction> body;  // body[l] is inst(l)
  std::vector<VarId> locals;

  int label_index(const std::string& l) const {
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == l) return static_cast<int>(i);
    return -1;
  }
};

struct ConcurrentProgram {
  SymbolTable symbols;
  std::vector<VarId> shared;  // X, in declaration order
  std::vector<Process> processes;

  int num_processes() const { return static_cast<int>(processes.size()); }

  /// Data variables Var = X ∪ Y₁ ∪ … ∪ Y_k, in VarId order.
  std::vector<VarId> data_vars() const {
    std::vector<VarId> out;
    for (VarId v = 0; v < symbols.num_vars(); ++v)
      if (symbols.var(v).role != VarRole::Control) out.push_back(v);
    return out;
  }
  std::vector<VarId> control_vars() const {
    std::vector<VarId> out;
    for (const auto& p : processes) out.push_back(p.control);
    return out;
  }
  /// Var_i = X ∪ Y_i.
  std::vector<VarId> accessible_vars(int i) const {
    std::vector<VarId> out;
    for (VarId v = 0; v < symbols.num_vars(); ++v) {
      const auto& var = symbols.var(v);
      if (var.role == VarRole::Control) continue;
      if (var.role == VarRole::Local && var.process != i) continue;
      out.push_back(v);
    }
    return out;
  }
  bool has_ccrs() const {
    for (const auto& p : processes)
      for (const auto& ins : p.body)
        if (ins.is_ccr()) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

inline SortId parse_domain(syntax::Parser& p, SymbolTable& st) {
  if (p.accept_word("bool")) return kBoolSort;
  p.expect("{");
  std::vector<Value> dom;
  long first = p.expect_int();
  if (p.accept("..")) {
    long last = p.expect_int();
    if (last < first) p.fail("empty range");
    for (long v = first; v <= last; ++v) dom.push_back(static_cast<Value>(v));
  } else {
    dom.push_back(static_cast<Value>(first));
    while (p.accept(",")) dom.push_back(static_cast<Value>(p.expect_int()));
  }
  p.expect("}");
  std::set<Value> uniq(dom.begin(), dom.end());
  if (uniq.size() != dom.size()) p.fail("duplicate value in domain");
  return st.int_sort(dom);
}

// `names : domain [with n = value, ...] ;`
inline void parse_declaration(syntax::Parser& p, ConcurrentProgram& prog, VarRole role, int process,
                              const std::string& prefix, std::vector<VarId>& out) {
  SymbolTable& st = prog.symbols;
  std::vector<std::pair<std::string, SourceLoc>> names;
  do {
    SourceLoc at = p.peek().loc;
    std::string n = p.expect_ident("variable name");
    if (n.find('.') != std::string::npos) throw Error(Errc::SyntaxError, "variable names may not contain '.'", at);
    names.emplace_back(n, at);
  } while (p.accept(","));
  p.expect(":");
  SortId sort = parse_domain(p, st);
  std::vector<VarId> ids;
  for (const auto& [n, at] : names) {
    Variable v;
    v.name = prefix + n;
    v.sort = sort;
    v.role = role;
    v.process = process;
    if (st.find(v.name)) throw Error(Errc::DuplicateName, "duplicate variable '" + v.name + "'", at);
    ids.push_back(st.add_variable(v));
  }
  out.insert(out.end(), ids.begin(), ids.end());
  if (p.accept_word("with")) {
    do {
      SourceLoc at = p.peek().loc;
      std::string n = p.expect_ident("variable name");
      p.expect("=");
      auto id = st.find(prefix + n);
      if (!id || std::find(ids.begin(), ids.end(), *id) == ids.end())
        throw Error(Errc::SortError, "'" + n + "' is not declared in this declaration", at);
      Variable& var = st.var_mut(*id);
      const Sort& s = st.sort(var.sort);
      if (p.peek().kind == syntax::Tok::Ident && p.peek().text != "true" && p.peek().text != "false") {
        std::string src = p.next().text;
        auto sid = st.find(prefix + src);
        if (!sid) sid = st.find(src);
        if (!sid) throw Error(Errc::SortError, "undeclared variable '" + src + "' in initializer", at);
        if (!st.compatible(st.var(*sid).sort, var.sort))
          throw Error(Errc::SortError, "initializer of '" + n + "' has a different sort", at);
        var.init_from = *sid;
      } else {
        Value v;
        if (p.accept_word("true")) v = 1;
        else if (p.accept_word("false")) v = 0;
        else v = static_cast<Value>(p.expect_int());
        if (!s.contains(v)) throw Error(Errc::SortError, "initial value of '" + n + "' outside its domain", at);
        var.init = v;
      }
    } while (p.accept(","));
  }
  p.expect(";");
}

struct RawStmt {
  enum Kind { Assign, If, Goto, Aux } kind = Assign;
  std::vector<std::string> targets;
  std::vector<syntax::PExpr> exprs;  // sources, or if-guard, or aux conditions
  std::vector<syntax::PExpr> values; // aux values
  std::string then_label, else_label;
  std::vector<SourceLoc> label_locs;
  SourceLoc loc;
};

struct RawInstruction {
  std::string label;
  SourceLoc label_loc;
  std::optional<syntax::PExpr> guard;
  bool atomic = false;
  std::vector<RawStmt> stmts;
  SourceLoc loc;
};

inline RawStmt parse_stmt(syntax::Parser& p, bool in_block) {
  RawStmt s;
  s.loc = p.peek().loc;
  if (p.accept_word("goto")) {
    s.kind = RawStmt::Goto;
    s.label_locs.push_back(p.peek().loc);
    s.then_label = p.expect_ident("label");
    return s;
  }
  if (p.accept_word("if")) {
    p.expect("(");
    syntax::PExpr g = p.formula(false);
    p.expect(")");
    // `if (G) l1, l2` transfers control; `if (G) x := e [else if ...]` is a conditional update
    if (p.peek().kind == syntax::Tok::Ident && p.is_punct(":=", 1)) {
      if (!in_block) p.fail("conditional assignment is only allowed inside a block");
      s.kind = RawStmt::Aux;
      for (;;) {
        s.exprs.push_back(g);
        s.targets.push_back(p.expect_ident());
        p.expect(":=");
        s.values.push_back(p.formula(false));
        if (!p.is_word("else")) break;
        p.next();
        p.expect_word("if");
        p.expect("(");
        g = p.formula(false);
        p.expect(")");
      }
      return s;
    }
    s.kind = RawStmt::If;
    s.exprs.push_back(g);
    s.label_locs.push_back(p.peek().loc);
    s.then_label = p.expect_ident("label");
    p.expect(",");
    s.label_locs.push_back(p.peek().loc);
    s.else_label = p.expect_ident("label");
    return s;
  }
  s.kind = RawStmt::Assign;
  do s.targets.push_back(p.expect_ident("assignment target"));
  while (p.accept(","));
  p.expect(":=");
  do s.exprs.push_back(p.formula(false));
  while (p.accept(","));
  if (s.targets.size() != s.exprs.size())
    throw Error(Errc::SortError, "parallel assignment has " + std::to_string(s.targets.size()) + " targets but " +
                                     std::to_string(s.exprs.size()) + " sources",
                s.loc);
  return s;
}

inline std::vector<RawStmt> parse_block(syntax::Parser& p) {
  std::vector<RawStmt> out;
  p.expect("{");
  while (!p.is_punct("}")) {
    out.push_back(parse_stmt(p, true));
    if (!p.accept(";")) break;
  }
  p.expect("}");
  return out;
}

inline RawInstruction parse_instruction(syntax::Parser& p) {
  RawInstruction ri;
  ri.label_loc = p.peek().loc;
  ri.label = p.expect_ident("label");
  p.expect(":");
  ri.loc = p.peek().loc;
  if (p.accept_word("when")) {
    ri.guard = p.condition();
    p.expect("->");
    ri.stmts = parse_block(p);
  } else if (p.accept_word("atomic")) {
    ri.atomic = true;
    ri.stmts = parse_block(p);
  } else {
    ri.stmts.push_back(parse_stmt(p, false));
  }
  if (ri.stmts.empty()) throw Error(Errc::SyntaxError, "empty instruction block", ri.loc);
  return ri;
}

}  // namespace detail

/// Name resolution inside process i: own locals by short name, then shared
/// variables. With `global` set (CCR guards), any variable is visible by its
/// qualified name, including control variables.
inline syntax::NameResolver process_resolver(const ConcurrentProgram& prog, int i, bool global) {
  return [&prog, i, global](const std::string& n) -> std::optional<VarId> {
    const SymbolTable& st = prog.symbols;
    if (i >= 0 && i < prog.num_processes()) {
      if (auto id = st.find(prog.processes[i].name + "." + n)) return id;
    }
    auto id = st.find(n);
    if (!id) return std::nullopt;
    const Variable& v = st.var(*id);
    if (global) return id;
    if (v.role == VarRole::Control) return std::nullopt;
    if (v.role == VarRole::Local && v.process != i) return std::nullopt;
    return id;
  };
}

inline ConcurrentProgram parse_program(std::string_view text) {
  syntax::Parser p(syntax::lex(text));
  ConcurrentProgram prog;
  SymbolTable& st = prog.symbols;

  struct RawProcess {
    std::string name;
    SourceLoc loc;
    std::vector<detail::RawInstruction> body;
  };
  std::vector<RawProcess> raws;

  while (p.accept_word("shared")) detail::parse_declaration(p, prog, VarRole::Shared, -1, "", prog.shared);
  if (!p.is_word("process")) p.fail("expected 'process'");
  std::vector<std::vector<VarId>> locals;
  while (p.accept_word("process")) {
    RawProcess rp;
    rp.loc = p.peek().loc;
    rp.name = p.expect_ident("process name");
    for (const auto& other : raws)
      if (other.name == rp.name) throw Error(Errc::DuplicateName, "duplicate process '" + rp.name + "'", rp.loc);
    if (st.find(rp.name)) throw Error(Errc::DuplicateName, "process name '" + rp.name + "' clashes with a variable", rp.loc);
    p.expect("{");
    locals.emplace_back();
    while (p.accept_word("local"))
      detail::parse_declaration(p, prog, VarRole::Local, static_cast<int>(raws.size()), rp.name + ".", locals.back());
    while (!p.is_punct("}")) {
      rp.body.push_back(detail::parse_instruction(p));
      if (!p.accept(";") && !p.is_punct("}")) p.fail("expected ';' or '}'");
    }
    p.expect("}");
    if (rp.body.empty()) throw Error(Errc::SyntaxError, "process '" + rp.name + "' has no instructions", rp.loc);
    raws.push_back(std::move(rp));
  }
  if (!p.at_end()) p.fail("unexpected trailing input");

  // Control variables and location sorts.
  for (size_t i = 0; i < raws.size(); ++i) {
    Process proc;
    proc.name = raws[i].name;
    proc.index = static_cast<int>(i);
    for (const auto& ri : raws[i].body) {
      if (proc.label_index(ri.label) >= 0)
        throw Error(Errc::DuplicateName, "duplicate label '" + ri.label + "' in " + proc.name, ri.label_loc);
      proc.labels.push_back(ri.label);
    }
    Sort ls;
    ls.name = "L(" + proc.name + ")";
    ls.kind = SortKind::Location;
    ls.labels = proc.labels;
    for (size_t l = 0; l < proc.labels.size(); ++l) ls.domain.push_back(static_cast<Value>(l));
    proc.loc_sort = st.add_sort(ls);
    Variable cv;
    cv.name = "loc" + std::to_string(i + 1);
    cv.sort = proc.loc_sort;
    cv.role = VarRole::Control;
    cv.process = static_cast<int>(i);
    cv.init = 0;
    if (st.find(cv.name)) throw Error(Errc::DuplicateName, "'" + cv.name + "' is reserved for control variables", raws[i].loc);
    proc.control = st.add_variable(cv);
    proc.locals = locals[i];
    prog.processes.push_back(std::move(proc));
  }

  // Pass 2: resolve instruction bodies.
  for (size_t i = 0; i < raws.size(); ++i) {
    Process& proc = prog.processes[i];
    auto local_res = process_resolver(prog, static_cast<int>(i), false);
    auto guard_res = process_resolver(prog, static_cast<int>(i), true);
    auto label = [&](const std::string& l, SourceLoc at) {
      int idx = proc.label_index(l);
      if (idx < 0) throw Error(Errc::UnknownLabel, "unknown label '" + l + "' in " + proc.name, at);
      return idx;
    };
    auto target = [&](const std::string& n, SourceLoc at, const syntax::NameResolver& r) {
      auto id = r(n);
      if (!id) throw Error(Errc::SortError, "undeclared variable '" + n + "'", at);
      if (st.var(*id).role == VarRole::Control) throw Error(Errc::SortError, "cannot assign control variable", at);
      return *id;
    };
    for (size_t l = 0; l < raws[i].body.size(); ++l) {
      const auto& ri = raws[i].body[l];
      Instruction ins;
      ins.loc = ri.loc;
      ins.atomic_block = ri.atomic;
      if (ri.guard) ins.guard = syntax::resolve_atom(st, *ri.guard, guard_res);
      bool falls_through = true;
      for (const auto& rs : ri.stmts) {
        switch (rs.kind) {
          case detail::RawStmt::Goto:
            ins.block.push_back(Goto{label(rs.then_label, rs.label_locs[0])});
            falls_through = false;
            break;
          case detail::RawStmt::If:
            ins.block.push_back(IfGoto{syntax::resolve_atom(st, rs.exprs[0], local_res), label(rs.then_label, rs.label_locs[0]),
                                       label(rs.else_label, rs.label_locs[1])});
            falls_through = false;
            break;
          case detail::RawStmt::Assign: {
            Assign a;
            std::set<VarId> seen;
            for (size_t k = 0; k < rs.targets.size(); ++k) {
              VarId t = target(rs.targets[k], rs.loc, local_res);
              if (!seen.insert(t).second) throw Error(Errc::SortError, "assignment targets must be distinct", rs.loc);
              Expr src = syntax::resolve_term(st, rs.exprs[k], local_res);
              if (!st.compatible(st.var(t).sort, src->sort))
                throw Error(Errc::SortError, "assignment to '" + st.var(t).name + "' has mismatched sort", rs.loc);
              a.targets.push_back(t);
              a.sources.push_back(src);
            }
            ins.block.push_back(std::move(a));
            falls_through = true;
            break;
          }
          case detail::RawStmt::Aux: {
            AuxUpdate u;
            for (size_t k = 0; k < rs.targets.size(); ++k) {
              VarId t = target(rs.targets[k], rs.loc, guard_res);
              Expr v = syntax::resolve_term(st, rs.values[k], guard_res);
              if (!st.compatible(st.var(t).sort, v->sort))
                throw Error(Errc::SortError, "conditional assignment has mismatched sort", rs.loc);
              u.branches.push_back({syntax::resolve_atom(st, rs.exprs[k], guard_res), t, v});
            }
            ins.block.push_back(std::move(u));
            falls_through = true;
            break;
          }
        }
        if (!falls_through && &rs != &ri.stmts.back())
          throw Error(Errc::SyntaxError, "statements after a jump are unreachable", rs.loc);
      }
      if (falls_through && l + 1 == raws[i].body.size())
        throw Error(Errc::SyntaxError, "control falls off the end of " + proc.name + " (end with 'halt: goto halt')",
                    ri.loc);
      proc.body.push_back(std::move(ins));
    }
  }
  return prog;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Printer

namespace detail {

inline std::string domain_text(const SymbolTable& st, SortId s) {
  const Sort& so = st.sort(s);
  if (so.kind == SortKind::Bool) return "bool";
  bool contiguous = so.domain.size() > 2;
  for (size_t i = 1; i < so.domain.size(); ++i) contiguous = contiguous && so.domain[i] == so.domain[i - 1] + 1;
  if (contiguous) return "{" + std::to_string(so.domain.front()) + ".." + std::to_string(so.domain.back()) + "}";
  std::string out = "{";
  for (size_t i = 0; i < so.domain.size(); ++i) out += (i ? ", " : "") + std::to_string(so.domain[i]);
  return out + "}";
}

inline std::string short_name(const SymbolTable& st, VarId v) {
  const auto& n = st.var(v).name;
  auto dot = n.find('.');
  return dot == std::string::npos ? n : n.substr(dot + 1);
}

inline std::string decl_text(const SymbolTable& st, VarId v) {
  const Variable& var = st.var(v);
  std::string n = short_name(st, v);
  std::string s = n + " : " + domain_text(st, var.sort);
  if (var.init) s += " with " + n + " = " + st.sort(var.sort).show(*var.init);
  else if (var.init_from) s += " with " + n + " = " + st.var(*var.init_from).name;
  return s + ";";
}

}  // namespace detail

inline std::string stmt_to_string(const ConcurrentProgram& prog, const Process& proc, const Stmt& st) {
  const SymbolTable& sy = prog.symbols;
  auto name = [&](VarId v) {
    const auto& var = sy.var(v);
    return var.role == VarRole::Local && var.process == proc.index ? detail::short_name(sy, v) : var.name;
  };
  return std::visit(
      [&](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Assign>) {
          std::string l, r;
          for (size_t k = 0; k < s.targets.size(); ++k) {
            l += (k ? ", " : "") + name(s.targets[k]);
            r += (k ? ", " : "") + to_string(sy, s.sources[k]);
          }
          return l + " := " + r;
        } else if constexpr (std::is_same_v<T, IfGoto>) {
          return "if (" + to_string(sy, s.guard) + ") " + proc.labels[s.then_loc] + ", " + proc.labels[s.else_loc];
        } else if constexpr (std::is_same_v<T, Goto>) {
          return "goto " + proc.labels[s.target];
        } else {
          std::string out;
          for (size_t k = 0; k < s.branches.size(); ++k) {
            out += (k ? " else if (" : "if (") + to_string(sy, s.branches[k].cond) + ") " + name(s.branches[k].target) +
                   " := " + to_string(sy, s.branches[k].value);
          }
          return out;
        }
      },
      st);
}

inline std::string instruction_to_string(const ConcurrentProgram& prog, const Process& proc, const Instruction& ins) {
  auto block = [&] {
    std::string b = "{ ";
    for (size_t k = 0; k < ins.block.size(); ++k) b += (k ? "; " : "") + stmt_to_string(prog, proc, ins.block[k]);
    return b + " }";
  };
  if (ins.guard) return "when " + to_string(prog.symbols, *ins.guard) + " -> " + block();
  if (ins.atomic_block || ins.block.size() != 1) return "atomic " + block();
  return stmt_to_string(prog, proc, ins.block[0]);
}

/// Prints a program in the .cp syntax; parse_program(print_program(p)) ≅ p.
inline std::string print_program(const ConcurrentProgram& prog) {
  std::ostringstream out;
  const SymbolTable& st = prog.symbols;
  for (VarId v : prog.shared) out << "shared " << detail::decl_text(st, v) << "\n";
  for (const auto& proc : prog.processes) {
    out << "\nprocess " << proc.name << " {\n";
    for (VarId v : proc.locals) out << "  local " << detail::decl_text(st, v) << "\n";
    for (size_t l = 0; l < proc.body.size(); ++l)
      out << "  " << proc.labels[l] << ": " << instruction_to_string(prog, proc, proc.body[l]) << ";\n";
    out << "}\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Semantics

struct LocalMove {
  int next_loc = 0;
  Valuation after;
};

/// Executes inst(loc_i) from s. Returns nullopt when a CCR guard is false.
/// Throws PartialApplication naming the state and instruction.
inline std::optional<LocalMove> execute(const ConcurrentProgram& prog, int i, const Valuation& s) {
  const Process& proc = prog.processes[i];
  const SymbolTable& st = prog.symbols;
  int l = s[proc.control];
  const Instruction& ins = proc.body[l];
  try {
    if (ins.guard && !eval_atom(st, *ins.guard, s)) return std::nullopt;
    LocalMove m;
    m.after = s;
    m.next_loc = l + 1;
    for (const auto& stmt : ins.block) {
      bool jumped = false;
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Assign>) {
              std::vector<Value> vals;
              for (const auto& src : x.sources) vals.push_back(eval_term(st, src, m.after));
              for (size_t k = 0; k < x.targets.size(); ++k) {
                const Sort& so = st.sort_of(x.targets[k]);
                if (!so.contains(vals[k]))
                  throw Error(Errc::PartialApplication, "value " + std::to_string(vals[k]) + " outside domain of " +
                                                            st.var(x.targets[k]).name);
                m.after[x.targets[k]] = vals[k];
              }
            } else if constexpr (std::is_same_v<T, IfGoto>) {
              m.next_loc = eval_atom(st, x.guard, m.after) ? x.then_loc : x.else_loc;
              jumped = true;
            } else if constexpr (std::is_same_v<T, Goto>) {
              m.next_loc = x.target;
              jumped = true;
            } else {
              for (const auto& b : x.branches) {
                if (eval_atom(st, b.cond, m.after)) {
                  Value v = eval_term(st, b.value, m.after);
                  if (!st.sort_of(b.target).contains(v))
                    throw Error(Errc::PartialApplication, "value outside domain of " + st.var(b.target).name);
                  m.after[b.target] = v;
                  break;
                }
              }
            }
          },
          stmt);
      if (jumped) break;
    }
    m.after[proc.control] = m.next_loc;
    return m;
  } catch (const Error& e) {
    if (e.code() != Errc::PartialApplication) throw;
    std::string where = proc.name + "." + proc.labels[l] + " (line " + std::to_string(ins.loc.line) + ")";
    std::string state;
    for (VarId v = 0; v < st.num_vars(); ++v) state += (v ? ", " : "") + st.var(v).name + "=" + st.show(v, s[v]);
    throw Error(Errc::PartialApplication, e.detail() + " at " + where + " in state {" + state + "}");
  }
}

struct Transition {
  StateId from = 0;
  int proc = 0;
  StateId to = 0;
};

struct TransitionSystem {
  std::vector<Valuation> states;
  std::vector<StateId> initial;
  std::vector<Transition> transitions;
  std::vector<std::vector<std::pair<int, StateId>>> succ;  // (process, target)
  std::vector<StateId> deadlocks;                           // reachable states without successors

  bool total() const { return deadlocks.empty(); }
};

enum class InitMode { AllInitialized, WithInputs };

/// Variables whose initial value is chosen by the environment (Var_inp).
inline std::vector<VarId> input_vars(const ConcurrentProgram& prog) {
  std::vector<VarId> out;
  for (VarId v : prog.data_vars()) {
    const auto& var = prog.symbols.var(v);
    if (!var.init && !var.init_from) out.push_back(v);
  }
  return out;
}

/// S0: one valuation in AllInitialized mode, the cross product over the input
/// variables' domains in WithInputs mode (ordered lexicographically by VarId).
inline std::vector<Valuation> initial_valuations(const ConcurrentProgram& prog, InitMode mode) {
  const SymbolTable& st = prog.symbols;
  auto inputs = input_vars(prog);
  if (mode == InitMode::AllInitialized && !inputs.empty())
    throw Error(Errc::UninitializedInAllInitMode, "variable '" + st.var(inputs.front()).name + "' has no initial value");
  Valuation base(st.num_vars(), kUnset);
  for (VarId v = 0; v < st.num_vars(); ++v)
    if (st.var(v).init) base[v] = *st.var(v).init;
  std::vector<Valuation> out{base};
  for (VarId v : inputs) {
    std::vector<Valuation> next;
    for (const auto& b : out)
      for (Value d : st.sort_of(v).domain) {
        Valuation c = b;
        c[v] = d;
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  for (auto& val : out)
    for (VarId v = 0; v < st.num_vars(); ++v)
      if (st.var(v).init_from) val[v] = val[*st.var(v).init_from];
  return out;
}

struct BuildOptions {
  bool throw_on_deadlock = false;
  size_t state_limit = 2'000'000;
};

inline std::string valuation_text(const SymbolTable& st, const Valuation& s) {
  std::string out = "{";
  for (VarId v = 0; v < static_cast<VarId>(s.size()); ++v)
    out += std::string(v ? ", " : "") + st.var(v).name + "=" + (s[v] == kUnset ? "?" : st.show(v, s[v]));
  return out + "}";
}

inline TransitionSystem build_transition_system(const ConcurrentProgram& prog, const std::vector<Valuation>& initials,
                                                BuildOptions opts = {}) {
  TransitionSystem ts;
  std::map<Valuation, StateId> index;
  std::deque<StateId> work;
  auto intern = [&](const Valuation& v) {
    auto [it, fresh] = index.emplace(v, static_cast<StateId>(ts.states.size()));
    if (fresh) {
      if (ts.states.size() >= opts.state_limit) throw Error(Errc::ResourceLimit, "transition system exceeds state limit");
      ts.states.push_back(v);
      ts.succ.emplace_back();
      work.push_back(it->second);
    }
    return it->second;
  };
  for (const auto& v : initials) {
    if (static_cast<int>(v.size()) != prog.symbols.num_vars())
      throw Error(Errc::SortError, "initial valuation has wrong arity");
    StateId id = intern(v);
    if (std::find(ts.initial.begin(), ts.initial.end(), id) == ts.initial.end()) ts.initial.push_back(id);
  }
  while (!work.empty()) {
    StateId s = work.front();
    work.pop_front();
    for (int i = 0; i < prog.num_processes(); ++i) {
      Valuation cur = ts.states[s];
      auto mv = execute(prog, i, cur);
      if (!mv) continue;
      StateId t = intern(mv->after);
      ts.succ[s].emplace_back(i, t);
      ts.transitions.push_back({s, i, t});
    }
    if (ts.succ[s].empty()) {
      ts.deadlocks.push_back(s);
      if (opts.throw_on_deadlock)
        throw Error(Errc::DeadlockDetected, "no process can move in " + valuation_text(prog.symbols, ts.states[s]));
    }
  }
  std::sort(ts.deadlocks.begin(), ts.deadlocks.end());
  return ts;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json valuation_json(const SymbolTable& st, const Valuation& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (VarId v = 0; v < static_cast<VarId>(s.size()); ++v) {
    const Sort& so = st.sort_of(v);
    if (so.kind == SortKind::Int) j[st.var(v).name] = s[v];
    else j[st.var(v).name] = so.show(s[v]);
  }
  return j;
}

inline nlohmann::ordered_json to_json(const ConcurrentProgram& prog, const TransitionSystem& ts) {
  nlohmann::ordered_json j;
  j["schema"] = "ccrsynth.transition_system/1";
  auto& vars = j["variables"] = nlohmann::ordered_json::array();
  for (VarId v = 0; v < prog.symbols.num_vars(); ++v) vars.push_back(prog.symbols.var(v).name);
  auto& states = j["states"] = nlohmann::ordered_json::array();
  for (size_t s = 0; s < ts.states.size(); ++s) states.push_back(valuation_json(prog.symbols, ts.states[s]));
  j["initial"] = ts.initial;
  auto& tr = j["transitions"] = nlohmann::ordered_json::array();
  for (const auto& t : ts.transitions) tr.push_back({t.from, t.proc + 1, t.to});
  j["deadlocks"] = ts.deadlocks;
  return j;
}

inline std::string dot_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    o += c;
  }
  return o;
}

inline std::string to_dot(const ConcurrentProgram& prog, const TransitionSystem& ts) {
  std::ostringstream out;
  out << "digraph ts {\n  node [shape=ellipse];\n";
  std::set<StateId> init(ts.initial.begin(), ts.initial.end());
  for (size_t s = 0; s < ts.states.size(); ++s) {
    out << "  s" << s << " [label=\"" << dot_escape(valuation_text(prog.symbols, ts.states[s])) << "\"";
    if (init.count(static_cast<StateId>(s))) out << ", penwidth=2";
    out << "];\n";
  }
  for (const auto& t : ts.transitions) out << "  s" << t.from << " -> s" << t.to << " [label=\"" << t.proc + 1 << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace ccrsynth
