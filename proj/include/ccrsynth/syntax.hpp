#pragma once

// Lexer and the expression/formula grammar shared by the program (.cp) and
// specification (.lctl) parsers. Parsing yields an untyped tree which is then
// resolved against a symbol table.

#include <cctype>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "ccrsynth/error.hpp"
#include "ccrsynth/vocab.hpp"

namespace ccrsynth::syntax {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long value = 0;
  SourceLoc loc;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static const char* kMulti[] = {"<->", ":=", "->", "<=", ">=", "!=", "..", "==", "&&", "||"};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      SourceLoc at{line, col};
      advance(2);
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= src.size()) throw Error(Errc::SyntaxError, "unterminated comment", at);
      advance(2);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::Int;
      t.text = std::string(src.substr(i, j - i));
      t.value = std::stol(t.text);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                (src[j] == '.' && j + 1 < src.size() && src[j + 1] != '.' &&
                                 (std::isalpha(static_cast<unsigned char>(src[j + 1])) || src[j + 1] == '_'))))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    t.kind = Tok::Punct;
    bool matched = false;
    for (const char* m : kMulti) {
      std::string_view mv(m);
      if (src.substr(i, mv.size()) == mv) {
        t.text = std::string(mv);
        advance(mv.size());
        matched = true;
        break;
      }
    }
    if (!matched) {
      if (std::string_view("{}()[],;:=<>!&|+-").find(c) == std::string_view::npos)
        throw Error(Errc::SyntaxError, std::string("unexpected character '") + c + "'", t.loc);
      t.text = std::string(1, c);
      advance(1);
    }
    if (t.text == "==") t.text = "=";
    if (t.text == "&&") t.text = "&";
    if (t.text == "||") t.text = "|";
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

// Untyped parse tree.
enum class PKind { Ident, Int, Bool, Unary, Binary, Temporal, Until };

struct PNode;
using PExpr = std::shared_ptr<PNode>;

struct PNode {
  PKind kind = PKind::Ident;
  std::string name;  // Ident name, operator text, or temporal operator (AG, AXi, ...)
  long value = 0;    // Int literal, Bool literal, process index (1-based) for AXi/EXi
  bool universal = false;  // Until: A vs E
  std::vector<PExpr> kids;
  SourceLoc loc;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is_punct(std::string_view p, size_t k = 0) const { return peek(k).kind == Tok::Punct && peek(k).text == p; }
  bool is_word(std::string_view w, size_t k = 0) const { return peek(k).kind == Tok::Ident && peek(k).text == w; }
  bool accept(std::string_view p) {
    if (is_punct(p)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_word(std::string_view w) {
    if (is_word(w)) {
      next();
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string near = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw Error(Errc::SyntaxError, msg + " near " + near, t.loc);
  }
  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "'");
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail("expected '" + std::string(w) + "'");
  }
  std::string expect_ident(const char* what = "identifier") {
    if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
    return next().text;
  }
  long expect_int() {
    bool neg = accept("-");
    if (peek().kind != Tok::Int) fail("expected integer");
    long v = next().value;
    return neg ? -v : v;
  }

  // formula := iff
  PExpr formula(bool temporal) {
    temporal_ = temporal;
    return iff();
  }
  // Boolean condition without implication, for contexts where '->' is a separator.
  PExpr condition() {
    temporal_ = false;
    return disj();
  }

 private:
  static PExpr mk(PKind k, std::string name, SourceLoc loc, std::vector<PExpr> kids = {}) {
    auto n = std::make_shared<PNode>();
    n->kind = k;
    n->name = std::move(name);
    n->loc = loc;
    n->kids = std::move(kids);
    return n;
  }

  PExpr iff() {
    PExpr l = imp();
    while (is_punct("<->")) {
      SourceLoc at = next().loc;
      l = mk(PKind::Binary, "<->", at, {l, imp()});
    }
    return l;
  }
  PExpr imp() {
    PExpr l = disj();
    if (is_punct("->")) {
      SourceLoc at = next().loc;
      return mk(PKind::Binary, "->", at, {l, imp()});
    }
    return l;
  }
  PExpr disj() {
    PExpr l = conj();
    while (is_punct("|")) {
      SourceLoc at = next().loc;
      l = mk(PKind::Binary, "|", at, {l, conj()});
    }
    return l;
  }
  PExpr conj() {
    PExpr l = unary();
    while (is_punct("&")) {
      SourceLoc at = next().loc;
      l = mk(PKind::Binary, "&", at, {l, unary()});
    }
    return l;
  }

  static bool temporal_word(const std::string& w, std::string& op, long& proc) {
    static const std::regex indexed("^(AX|EX)([0-9]+)$");
    std::smatch m;
    if (w == "AG" || w == "AF" || w == "EG" || w == "EF" || w == "AX" || w == "EX") {
      op = w;
      proc = 0;
      return true;
    }
    if (std::regex_match(w, m, indexed)) {
      op = m[1].str() + "i";
      proc = std::stol(m[2].str());
      return true;
    }
    return false;
  }

  PExpr unary() {
    if (is_punct("!")) {
      SourceLoc at = next().loc;
      return mk(PKind::Unary, "!", at, {unary()});
    }
    if (peek().kind == Tok::Ident) {
      std::string op;
      long proc = 0;
      if (temporal_word(peek().text, op, proc)) {
        if (!temporal_) fail("temporal operator not allowed here");
        SourceLoc at = next().loc;
        if (proc == 0 && (op == "AXi" || op == "EXi")) fail("process indices start at 1");
        auto n = mk(PKind::Temporal, op, at, {unary()});
        n->value = proc;
        return n;
      }
    }
    return comparison();
  }

  PExpr comparison() {
    PExpr l = sum();
    static const char* rel[] = {"=", "!=", "<", ">", "<=", ">="};
    for (const char* r : rel) {
      if (is_punct(r)) {
        SourceLoc at = next().loc;
        PExpr rhs = sum();
        for (const char* r2 : rel)
          if (is_punct(r2)) fail("comparison operators do not chain");
        return mk(PKind::Binary, r, at, {l, rhs});
      }
    }
    return l;
  }

  PExpr sum() {
    PExpr l = primary();
    while (is_punct("+") || is_punct("-")) {
      const Token& t = next();
      l = mk(PKind::Binary, t.text, t.loc, {l, primary()});
    }
    return l;
  }

  PExpr primary() {
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      next();
      auto n = mk(PKind::Int, t.text, t.loc);
      n->value = t.value;
      return n;
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      next();
      bool saved = temporal_;
      PExpr e = iff();
      temporal_ = saved;
      expect(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      if ((t.text == "A" || t.text == "E") && is_punct("[", 1)) {
        if (!temporal_) fail("temporal operator not allowed here");
        SourceLoc at = t.loc;
        bool universal = t.text == "A";
        next();
        next();
        PExpr lhs = iff();
        expect_word("U");
        PExpr rhs = iff();
        if (is_word("U")) fail("'U' is binary; nest until-formulas explicitly");
        expect("]");
        auto n = mk(PKind::Until, "U", at, {lhs, rhs});
        n->universal = universal;
        return n;
      }
      if (t.text == "true" || t.text == "false") {
        next();
        auto n = mk(PKind::Bool, t.text, t.loc);
        n->value = t.text == "true";
        return n;
      }
      if (t.text == "U") fail("unexpected 'U'");
      next();
      return mk(PKind::Ident, t.text, t.loc);
    }
    fail("expected expression");
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  bool temporal_ = false;
};

/// Maps identifiers to variables; lets callers implement scoping (e.g. locals).
using NameResolver = std::function<std::optional<VarId>(const std::string&)>;

inline NameResolver global_resolver(const SymbolTable& st) {
  return [&st](const std::string& n) { return st.find(n); };
}

namespace detail {

inline bool is_label_candidate(const PExpr& e, const NameResolver& r) {
  return e->kind == PKind::Ident && !r(e->name);
}

inline Expr resolve_label(const SymbolTable& st, SortId loc_sort, const PExpr& e) {
  const Sort& s = st.sort(loc_sort);
  for (size_t i = 0; i < s.labels.size(); ++i)
    if (s.labels[i] == e->name) return make_const(loc_sort, static_cast<Value>(i));
  throw Error(Errc::UnknownLabel, "'" + e->name + "' is not a label of " + s.name, e->loc);
}

}  // namespace detail

/// Resolves an untyped tree to a well-sorted term.
inline Expr resolve_term(const SymbolTable& st, const PExpr& e, const NameResolver& r) {
  auto wrap = [&](auto&& fn) -> Expr {
    try {
      return fn();
    } catch (const Error& err) {
      if (err.location()) throw;
      throw Error(err.code(), err.detail(), e->loc);
    }
  };
  switch (e->kind) {
    case PKind::Int: return make_const(kIntLiteralSort, static_cast<Value>(e->value));
    case PKind::Bool: return make_bool(e->value != 0);
    case PKind::Ident: {
      auto v = r(e->name);
      if (!v) throw Error(Errc::SortError, "undeclared variable '" + e->name + "'", e->loc);
      return make_var(st, *v);
    }
    case PKind::Unary: return wrap([&] { return make_not(st, resolve_term(st, e->kids[0], r)); });
    case PKind::Binary: {
      const std::string& op = e->name;
      if (op == "=" || op == "!=") {
        // a bare identifier compared with a location-sorted term names a label
        const PExpr& a = e->kids[0];
        const PExpr& b = e->kids[1];
        Expr ta, tb;
        if (detail::is_label_candidate(b, r) && !detail::is_label_candidate(a, r)) {
          ta = resolve_term(st, a, r);
          if (st.sort(ta->sort).kind == SortKind::Location) tb = detail::resolve_label(st, ta->sort, b);
        } else if (detail::is_label_candidate(a, r) && !detail::is_label_candidate(b, r)) {
          tb = resolve_term(st, b, r);
          if (st.sort(tb->sort).kind == SortKind::Location) ta = detail::resolve_label(st, tb->sort, a);
        }
        if (!ta) ta = resolve_term(st, a, r);
        if (!tb) tb = resolve_term(st, b, r);
        return wrap([&] { return make_apply(st, op == "=" ? Op::Eq : Op::Ne, {ta, tb}); });
      }
      Op o;
      if (op == "+") o = Op::Add;
      else if (op == "-") o = Op::Sub;
      else if (op == "&") o = Op::And;
      else if (op == "|") o = Op::Or;
      else if (op == "<") o = Op::Lt;
      else if (op == ">") o = Op::Gt;
      else if (op == "<=") o = Op::Le;
      else if (op == ">=") o = Op::Ge;
      else if (op == "->") {
        Expr a = resolve_term(st, e->kids[0], r);
        Expr b = resolve_term(st, e->kids[1], r);
        return wrap([&] { return make_or(st, make_not(st, a), b); });
      } else if (op == "<->") {
        Expr a = resolve_term(st, e->kids[0], r);
        Expr b = resolve_term(st, e->kids[1], r);
        return wrap([&] { return make_apply(st, Op::Eq, {a, b}); });
      } else {
        throw Error(Errc::SyntaxError, "unknown operator '" + op + "'", e->loc);
      }
      Expr a = resolve_term(st, e->kids[0], r);
      Expr b = resolve_term(st, e->kids[1], r);
      return wrap([&] { return make_apply(st, o, {a, b}); });
    }
    case PKind::Temporal:
    case PKind::Until: throw Error(Errc::SyntaxError, "temporal operator inside a term", e->loc);
  }
  throw Error(Errc::SyntaxError, "unresolvable expression", e->loc);
}

/// Resolves a tree that must denote an atom (bool-sorted term).
inline Expr resolve_atom(const SymbolTable& st, const PExpr& e, const NameResolver& r) {
  Expr t = resolve_term(st, e, r);
  if (t->sort != kBoolSort) throw Error(Errc::SortError, "expected a boolean condition", e->loc);
  return t;
}

}  // namespace ccrsynth::syntax
