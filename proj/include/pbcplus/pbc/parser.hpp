#pragma once

#include <cctype>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/pbc/ast.hpp"
#include "pbcplus/pbc/lexer.hpp"
#include "pbcplus/pbc/query_spec.hpp"

namespace pbcplus::pbc {

namespace detail {

/// Formula before grounding; names may still be schematic variables.
struct Raw {
  enum class Kind { True, False, Ref, Eq, Neq, Not, Tilde, And, Or, Choice, Stamp };
  Kind kind = Kind::True;
  std::string name;
  std::vector<std::string> args;
  std::string rhs;
  std::vector<std::string> rhs_args;
  bool rhs_call = false;  // rhs written with an argument list
  bool parens = false;
  unsigned step = 0;
  std::vector<Raw> kids;
  std::size_t line = 0;
  std::size_t column = 0;
};

inline std::string ground_name(const std::string& base, const std::vector<std::string>& args) {
  if (args.empty()) return base;
  std::string out = base + "(";
  for (std::size_t k = 0; k < args.size(); ++k) out += (k ? "," : "") + args[k];
  return out + ")";
}

inline std::string base_of(const std::string& ground) { return ground.substr(0, ground.find('(')); }

inline std::size_t arity_of(const std::string& ground) {
  auto open = ground.find('(');
  if (open == std::string::npos) return 0;
  std::size_t n = 1;
  for (char c : ground) n += c == ',';
  return n;
}

inline std::optional<ConstKind> kind_word(std::string_view w) {
  for (auto k : {ConstKind::Fluent, ConstKind::SdFluent, ConstKind::AbFluent, ConstKind::Action,
                 ConstKind::Pf, ConstKind::InitPf}) {
    if (w == keyword(k)) return k;
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  ActionDescription description() {
    sig_ = &desc_.signature;
    while (!at(Tok::End)) {
      const Token& t = peek();
      if (t.kind != Tok::Name) fail("expected a declaration or a law", t);
      if (t.text == "sort") {
        sort_decl();
      } else if (kind_word(t.text)) {
        const_decl();
      } else if (t.text == "caused") {
        caused();
      } else if (t.text == "initially") {
        initially();
      } else if (t.text == "default") {
        ++pos_;
        Raw f = formula();
        expect(Tok::Dot, "'.'");
        each_binding({&f}, [&] { desc_.laws.push_back(DefaultLaw{ground(f)}); });
      } else if (t.text == "caused_ab") {
        caused_ab();
      } else if (t.text == "enable_ab") {
        ++pos_;
        expect(Tok::Dot, "'.'");
        desc_.laws.push_back(EnableAb{});
      } else {
        fail("unknown statement '" + t.text + "'", t);
      }
    }
    return std::move(desc_);
  }

  QuerySpec query(const ActionDescription& d) {
    sig_ = &d.signature;
    query_ = &spec_;
    bool have_steps = false;
    bool have_query = false;
    std::vector<std::pair<unsigned, Token>> obs_steps;
    std::vector<std::pair<unsigned, Token>> act_steps;
    while (!at(Tok::End)) {
      const Token t = peek();
      if (t.kind != Tok::Name) fail("expected a query statement", t);
      ++pos_;
      if (t.text == "steps") {
        spec_.steps = integer();
        have_steps = true;
      } else if (t.text == "observe") {
        Token at_tok = peek();
        unsigned step = integer();
        expect(Tok::Colon, "':'");
        Raw f = formula();
        Raw stamped;
        stamped.kind = Raw::Kind::Stamp;
        stamped.step = step;
        stamped.line = at_tok.line;
        stamped.column = at_tok.column;
        stamped.kids.push_back(std::move(f));
        spec_.observations.push_back({step, ground(stamped)});
        obs_steps.push_back({step, at_tok});
      } else if (t.text == "do") {
        Token at_tok = peek();
        unsigned step = integer();
        expect(Tok::Colon, "':'");
        bool positive = true;
        if (at(Tok::Tilde)) {
          ++pos_;
          positive = false;
        } else if (at_word("not")) {
          ++pos_;
          positive = false;
        }
        Token name_tok = peek();
        std::string name = expect(Tok::Name, "an action name").text;
        std::vector<std::string> args = arguments();
        ConstId c = resolve(name, args, name_tok);
        if (sig_->kind(c) != ConstKind::Action) fail("'" + sig_->name(c) + "' is not an action", name_tok);
        spec_.actions.push_back({step, c, positive});
        act_steps.push_back({step, at_tok});
      } else if (t.text == "query") {
        if (have_query) fail("only one query statement is allowed", t);
        have_query = true;
        query_target();
      } else {
        fail("unknown statement '" + t.text + "'", t);
      }
      expect(Tok::Dot, "'.'");
    }
    if (!have_query) fail("missing 'query' statement", peek());
    (void)have_steps;
    const unsigned m = spec_.steps;
    for (auto& [s, tok] : obs_steps) {
      if (s > m) fail("observation step " + std::to_string(s) + " exceeds steps " + std::to_string(m), tok);
    }
    for (auto& [s, tok] : act_steps) {
      if (s >= m) fail("action step " + std::to_string(s) + " must be below steps " + std::to_string(m), tok);
    }
    for (AtomId id = 0; id < spec_.stamps.size(); ++id) {
      const auto& sa = spec_.stamps.at(id);
      ConstId c = sig_->base().constant_of(sa.atom);
      ConstKind k = sig_->kind(c);
      bool ok = sig_->is_fluent(c) ? sa.step <= m
                : k == ConstKind::InitPf ? sa.step == 0
                                         : sa.step < m;
      if (!ok) {
        fail("step " + std::to_string(sa.step) + " is out of range for '" + sig_->name(c) + "' with steps " +
                 std::to_string(m),
             stamp_pos_[id]);
      }
    }
    return std::move(spec_);
  }

 private:
  // ---- tokens ----
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_word(std::string_view w, std::size_t k = 0) const {
    return peek(k).kind == Tok::Name && peek(k).text == w;
  }
  [[noreturn]] static void fail(const std::string& msg, const Token& t) {
    throw ParseError(msg, t.line, t.column);
  }
  const Token& expect(Tok k, const char* what) {
    if (!at(k)) {
      const Token& t = peek();
      fail(std::string("expected ") + what + (t.kind == Tok::End ? " before end of input" : ", found '" + t.text + "'"),
           t);
    }
    return toks_[pos_++];
  }
  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("expected '" + std::string(w) + "'", peek());
    ++pos_;
  }
  std::string value_token() {
    if (at(Tok::Name) || at(Tok::Int)) return toks_[pos_++].text;
    fail("expected a value", peek());
  }
  unsigned integer() {
    const Token& t = expect(Tok::Int, "an integer");
    return static_cast<unsigned>(std::stoul(t.text));
  }
  std::vector<std::string> arguments() {
    std::vector<std::string> out;
    if (!at(Tok::LParen)) return out;
    ++pos_;
    out.push_back(value_token());
    while (at(Tok::Comma)) {
      ++pos_;
      out.push_back(value_token());
    }
    expect(Tok::RParen, "')'");
    return out;
  }
  std::vector<std::string> value_set() {
    expect(Tok::LBrace, "'{'");
    std::vector<std::string> out{value_token()};
    while (at(Tok::Comma)) {
      ++pos_;
      out.push_back(value_token());
    }
    expect(Tok::RBrace, "'}'");
    return out;
  }
  void optional_dot() {
    if (at(Tok::Dot)) ++pos_;
  }

  // ---- declarations ----
  void sort_decl() {
    const Token& kw = toks_[pos_++];
    std::string name = expect(Tok::Name, "a sort name").text;
    expect(Tok::Eq, "'='");
    auto elems = value_set();
    optional_dot();
    try {
      desc_.signature.add_sort({name, elems});
    } catch (const Error& e) {
      fail(e.what(), kw);
    }
  }

  void const_decl() {
    const Token kw = toks_[pos_++];
    ConstKind kind = *kind_word(kw.text);
    const Token name_tok = peek();
    std::string name = expect(Tok::Name, "a constant name").text;
    std::vector<std::vector<std::string>> params;
    for (const auto& a : arguments()) {
      if (const Sort* s = sig_->find_sort(a)) {
        params.push_back(s->elements);
      } else {
        params.push_back({a});
      }
    }
    std::vector<std::string> domain{"t", "f"};
    if (at(Tok::Colon)) {
      ++pos_;
      if (at(Tok::LBrace)) {
        domain = value_set();
      } else {
        const Token& st = expect(Tok::Name, "a sort name or '{'");
        const Sort* s = sig_->find_sort(st.text);
        if (!s) fail("unknown sort '" + st.text + "'", st);
        domain = s->elements;
      }
    }
    optional_dot();
    std::vector<std::string> chosen;
    std::function<void(std::size_t)> expand = [&](std::size_t k) {
      if (k == params.size()) {
        try {
          desc_.signature.add(ground_name(name, chosen), domain, kind);
        } catch (const Error& e) {
          fail(e.what(), name_tok);
        }
        return;
      }
      for (const auto& v : params[k]) {
        chosen.push_back(v);
        expand(k + 1);
        chosen.pop_back();
      }
    };
    expand(0);
  }

  bool at_prob_decl() const {
    std::size_t k = 1;
    if (peek(k).kind != Tok::Name) return false;
    ++k;
    if (peek(k).kind == Tok::LParen) {
      while (peek(k).kind != Tok::RParen && peek(k).kind != Tok::End) ++k;
      ++k;
    }
    return peek(k).kind == Tok::Eq && peek(k + 1).kind == Tok::LBrace;
  }

  void caused() {
    if (at_prob_decl()) {
      prob_decl();
      return;
    }
    ++pos_;
    Raw head = formula();
    std::optional<Raw> body, after;
    if (at_word("if")) {
      ++pos_;
      body = formula();
    }
    if (at_word("after")) {
      ++pos_;
      after = formula();
    }
    expect(Tok::Dot, "'.'");
    if (!body && !after && head.kind == Raw::Kind::Ref && head.name == kAbName && head.args.empty() &&
        !sig_->base().find(kAbName)) {
      desc_.laws.push_back(EnableAb{});
      return;
    }
    std::vector<const Raw*> parts{&head};
    if (body) parts.push_back(&*body);
    if (after) parts.push_back(&*after);
    each_binding(parts, [&] {
      Formula h = ground(head);
      auto b = body ? ground_body(*body) : std::optional<Formula>(Formula::top());
      if (!b) return;
      if (after) {
        auto a = ground_body(*after);
        if (!a) return;
        desc_.laws.push_back(DynamicLaw{h, *b, *a});
      } else {
        desc_.laws.push_back(StaticLaw{h, *b});
      }
    });
  }

  void caused_ab() {
    ++pos_;
    Raw head = formula();
    std::optional<Raw> body;
    if (at_word("if")) {
      ++pos_;
      body = formula();
    }
    expect_word("after");
    Raw after = formula();
    expect(Tok::Dot, "'.'");
    std::vector<const Raw*> parts{&head};
    if (body) parts.push_back(&*body);
    parts.push_back(&after);
    each_binding(parts, [&] {
      Formula h = ground(head);
      auto b = body ? ground_body(*body) : std::optional<Formula>(Formula::top());
      if (!b) return;
      auto a = ground_body(after);
      if (!a) return;
      desc_.laws.push_back(CausedAb{h, *b, *a});
    });
  }

  void initially() {
    ++pos_;
    Raw head = formula();
    std::optional<Raw> body;
    if (at_word("if")) {
      ++pos_;
      body = formula();
    }
    expect(Tok::Dot, "'.'");
    std::vector<const Raw*> parts{&head};
    if (body) parts.push_back(&*body);
    each_binding(parts, [&] {
      Formula h = ground(head);
      auto b = body ? ground_body(*body) : std::optional<Formula>(Formula::top());
      if (b) desc_.laws.push_back(InitStatic{h, *b});
    });
  }

  void prob_decl() {
    ++pos_;
    Raw ref;
    ref.kind = Raw::Kind::Ref;
    const Token name_tok = peek();
    ref.name = expect(Tok::Name, "a constant name").text;
    ref.args = arguments();
    ref.line = name_tok.line;
    ref.column = name_tok.column;
    expect(Tok::Eq, "'='");
    expect(Tok::LBrace, "'{'");
    std::vector<std::pair<Token, double>> entries;
    do {
      if (!entries.empty()) ++pos_;
      Token v = peek();
      value_token();
      expect(Tok::Colon, "':'");
      if (!at(Tok::Number) && !at(Tok::Int)) fail("expected a probability", peek());
      double p = std::strtod(toks_[pos_++].text.c_str(), nullptr);
      entries.push_back({v, p});
    } while (at(Tok::Comma));
    expect(Tok::RBrace, "'}'");
    expect(Tok::Dot, "'.'");
    each_binding({&ref}, [&] {
      ConstId c = resolve(ref.name, ref.args, name_tok);
      std::vector<ProbEntry> out;
      for (const auto& [tok, p] : entries) {
        auto v = sig_->base().find_value(c, tok.text);
        if (!v) fail("'" + tok.text + "' is not a value of '" + sig_->name(c) + "'", tok);
        out.push_back({*v, p});
      }
      if (sig_->kind(c) == ConstKind::Pf) {
        desc_.laws.push_back(PfDecl{c, std::move(out)});
      } else if (sig_->kind(c) == ConstKind::InitPf) {
        desc_.laws.push_back(InitPfDecl{c, std::move(out)});
      } else {
        fail("'" + sig_->name(c) + "' is not a pf or initpf constant", name_tok);
      }
    });
  }

  void query_target() {
    const Token t = peek();
    std::string w = expect(Tok::Name, "a query kind").text;
    auto timed = [&] { return ground(formula()); };
    if (w == "marginal") {
      spec_.kind = QueryKind::Marginal;
      spec_.target = timed();
    } else if (w == "conditional") {
      spec_.kind = QueryKind::Conditional;
      spec_.target = timed();
      expect_word("given");
      spec_.given = timed();
    } else if (w == "map") {
      spec_.kind = QueryKind::Map;
    } else if (w == "plan") {
      spec_.kind = QueryKind::Plan;
      expect_word("goal");
      spec_.goal = timed();
      expect_word("init");
      Token it = peek();
      spec_.init = timed();
      for (AtomId a : lpmln::atoms_of(spec_.init)) {
        if (spec_.stamps.at(a).step != 0) fail("the init formula may only mention step 0", it);
      }
    } else if (w == "diagnose") {
      spec_.kind = QueryKind::Diagnose;
    } else if (w == "argmax") {
      spec_.kind = QueryKind::Argmax;
      spec_.target = timed();
    } else {
      fail("unknown query kind '" + w + "'", t);
    }
  }

  // ---- formulas ----
  Raw formula() {
    Raw first = conjunction();
    if (!at(Tok::Bar)) return first;
    Raw out = node(Raw::Kind::Or, first);
    out.kids.push_back(std::move(first));
    while (at(Tok::Bar)) {
      ++pos_;
      out.kids.push_back(conjunction());
    }
    return out;
  }

  Raw conjunction() {
    Raw first = unary();
    if (!at(Tok::Amp)) return first;
    Raw out = node(Raw::Kind::And, first);
    out.kids.push_back(std::move(first));
    while (at(Tok::Amp)) {
      ++pos_;
      out.kids.push_back(unary());
    }
    return out;
  }

  static Raw node(Raw::Kind k, const Raw& pos) {
    Raw r;
    r.kind = k;
    r.line = pos.line;
    r.column = pos.column;
    return r;
  }
  static Raw node(Raw::Kind k, const Token& t) {
    Raw r;
    r.kind = k;
    r.line = t.line;
    r.column = t.column;
    return r;
  }

  Raw unary() {
    const Token& t = peek();
    if (at(Tok::Tilde) || at_word("not")) {
      ++pos_;
      Raw r = node(t.kind == Tok::Tilde ? Raw::Kind::Tilde : Raw::Kind::Not, t);
      r.kids.push_back(unary());
      return r;
    }
    if (query_ && at(Tok::Int) && peek(1).kind == Tok::Colon) {
      Raw r = node(Raw::Kind::Stamp, t);
      r.step = integer();
      ++pos_;
      r.kids.push_back(unary());
      return r;
    }
    return primary();
  }

  Raw primary() {
    const Token t = peek();
    if (at_word("true")) {
      ++pos_;
      return node(Raw::Kind::True, t);
    }
    if (at_word("false")) {
      ++pos_;
      return node(Raw::Kind::False, t);
    }
    if (at(Tok::LParen)) {
      ++pos_;
      Raw r = formula();
      expect(Tok::RParen, "')'");
      r.parens = true;
      return r;
    }
    if (at(Tok::LBrace)) {
      ++pos_;
      Raw r = node(Raw::Kind::Choice, t);
      r.kids.push_back(formula());
      expect(Tok::RBrace, "'}'");
      return r;
    }
    if (!at(Tok::Name) && !at(Tok::Int)) {
      fail(t.kind == Tok::End ? "unexpected end of input in formula" : "unexpected '" + t.text + "' in formula", t);
    }
    Raw r = node(Raw::Kind::Ref, t);
    r.name = toks_[pos_++].text;
    r.args = arguments();
    if (at(Tok::Eq) || at(Tok::Neq)) {
      r.kind = toks_[pos_++].kind == Tok::Eq ? Raw::Kind::Eq : Raw::Kind::Neq;
      r.rhs = value_token();
      if (at(Tok::LParen)) {
        r.rhs_args = arguments();
        r.rhs_call = true;
      }
    }
    return r;
  }

  // ---- schematic variables ----
  bool is_value(const std::string& n) const {
    for (const auto& s : sig_->sorts()) {
      for (const auto& e : s.elements) {
        if (e == n) return true;
      }
    }
    for (ConstId c = 0; c < sig_->size(); ++c) {
      if (sig_->base().find_value(c, n)) return true;
    }
    return false;
  }

  /// A sort name, or a sort name followed by digits that is not already a
  /// value or constant (t1, t2 range over sort t).
  bool is_var(const std::string& n) const {
    if (query_) return false;
    if (sig_->find_sort(n)) return true;
    std::size_t k = n.size();
    while (k > 0 && std::isdigit(static_cast<unsigned char>(n[k - 1]))) --k;
    if (k == n.size() || k == 0 || !sig_->find_sort(n.substr(0, k))) return false;
    return !is_value(n) && !sig_->base().find(n);
  }

  const Sort& sort_of_var(const std::string& n) const {
    if (const Sort* s = sig_->find_sort(n)) return *s;
    std::size_t k = n.size();
    while (k > 0 && std::isdigit(static_cast<unsigned char>(n[k - 1]))) --k;
    return *sig_->find_sort(n.substr(0, k));
  }

  const std::vector<std::string>* domain_of_base(const std::string& base) const {
    for (ConstId c = 0; c < sig_->size(); ++c) {
      if (base_of(sig_->name(c)) == base) return &sig_->domain(c);
    }
    return nullptr;
  }

  static bool contains(const std::vector<std::string>* dom, const std::string& v) {
    if (!dom) return false;
    for (const auto& x : *dom) {
      if (x == v) return true;
    }
    return false;
  }

  void collect_vars(const Raw& r, std::vector<std::string>& out) const {
    auto add = [&](const std::string& n) {
      if (!is_var(n)) return;
      for (const auto& v : out) {
        if (v == n) return;
      }
      out.push_back(n);
    };
    using K = Raw::Kind;
    if (r.kind == K::Ref || r.kind == K::Eq || r.kind == K::Neq) {
      const auto* dom = domain_of_base(r.name);
      if (r.kind == K::Neq && !dom && r.args.empty()) add(r.name);
      for (const auto& a : r.args) add(a);
      if (r.kind != K::Ref) {
        if (r.rhs_call) {
          for (const auto& a : r.rhs_args) add(a);
        } else if (!contains(dom, r.rhs)) {
          add(r.rhs);
        }
      }
    }
    for (const auto& k : r.kids) collect_vars(k, out);
  }

  template <class Fn>
  void each_binding(const std::vector<const Raw*>& parts, Fn&& fn) {
    std::vector<std::string> vars;
    for (const Raw* p : parts) collect_vars(*p, vars);
    binding_.clear();
    std::function<void(std::size_t)> go = [&](std::size_t k) {
      if (k == vars.size()) {
        fn();
        return;
      }
      for (const auto& e : sort_of_var(vars[k]).elements) {
        binding_.push_back({vars[k], e});
        go(k + 1);
        binding_.pop_back();
      }
    };
    go(0);
  }

  const std::string& subst(const std::string& n) const {
    for (const auto& [v, e] : binding_) {
      if (v == n) return e;
    }
    return n;
  }

  // ---- grounding ----
  std::optional<ConstId> try_resolve(const std::string& name, const std::vector<std::string>& args) const {
    std::vector<std::string> ground_args;
    for (const auto& a : args) ground_args.push_back(subst(a));
    return sig_->base().find(ground_name(subst(name), ground_args));
  }

  ConstId resolve(const std::string& name, const std::vector<std::string>& args, const Token& at_tok) const {
    if (auto c = try_resolve(name, args)) return *c;
    std::vector<std::string> ground_args;
    for (const auto& a : args) ground_args.push_back(subst(a));
    for (ConstId c = 0; c < sig_->size(); ++c) {
      if (base_of(sig_->name(c)) == name && arity_of(sig_->name(c)) != args.size()) {
        fail("arity mismatch: '" + name + "' takes " + std::to_string(arity_of(sig_->name(c))) + " argument(s)",
             at_tok);
      }
    }
    fail("unknown constant '" + ground_name(subst(name), ground_args) + "'", at_tok);
  }

  static Token token_of(const Raw& r) { return {Tok::Name, r.name, r.line, r.column}; }

  Formula atom(ConstId c, ValueIndex v, const Raw& r, std::optional<unsigned> step) {
    AtomId a = sig_->base().atom(c, v);
    if (!query_) return Formula::atom(a);
    if (!step) fail("atom '" + sig_->base().atom_name(a) + "' needs a time stamp 'i:'", token_of(r));
    AtomId id = spec_.stamps.intern(*step, a);
    if (id == stamp_pos_.size()) stamp_pos_.push_back(token_of(r));
    return Formula::atom(id);
  }

  Formula equal_constants(ConstId c, ConstId d, const Raw& r, std::optional<unsigned> step) {
    std::vector<Formula> alts;
    for (ValueIndex v = 0; v < sig_->domain(c).size(); ++v) {
      auto w = sig_->base().find_value(d, sig_->domain(c)[v]);
      if (w) alts.push_back(lpmln::conj(atom(c, v, r, step), atom(d, *w, r, step)));
    }
    return lpmln::disj(std::move(alts));
  }

  Formula equality(const Raw& r, std::optional<unsigned> step) {
    const Token tok = token_of(r);
    ConstId c = resolve(r.name, r.args, tok);
    if (r.rhs_call) return equal_constants(c, resolve(r.rhs, r.rhs_args, tok), r, step);
    const std::string& v = subst(r.rhs);
    if (auto idx = sig_->base().find_value(c, v)) return atom(c, *idx, r, step);
    if (auto d = sig_->base().find(v)) return equal_constants(c, *d, r, step);
    fail("'" + v + "' is not a value of '" + sig_->name(c) + "'", tok);
  }

  bool is_comparison(const Raw& r) const {
    return r.kind == Raw::Kind::Neq && !try_resolve(r.name, r.args);
  }

  Formula ground(const Raw& r, std::optional<unsigned> step = std::nullopt) {
    using K = Raw::Kind;
    switch (r.kind) {
      case K::True:
        return Formula::top();
      case K::False:
        return Formula::bottom();
      case K::Ref: {
        ConstId c = resolve(r.name, r.args, token_of(r));
        if (!sig_->is_boolean(c)) {
          fail("'" + sig_->name(c) + "' is not Boolean; write " + sig_->name(c) + "=v", token_of(r));
        }
        return atom(c, sig_->true_value(c), r, step);
      }
      case K::Eq:
        return equality(r, step);
      case K::Neq:
        if (is_comparison(r)) fail("a comparison may only appear as a conjunct of 'if' or 'after'", token_of(r));
        return lpmln::neg(equality(r, step));
      case K::Not:
        return lpmln::neg(ground(r.kids[0], step));
      case K::Tilde: {
        const Raw& k = r.kids[0];
        if (k.kind == K::Ref && !k.parens) {
          ConstId c = resolve(k.name, k.args, token_of(k));
          if (!sig_->is_boolean(c)) {
            fail("'~" + sig_->name(c) + "' needs a Boolean constant", token_of(k));
          }
          return atom(c, sig_->false_value(c), k, step);
        }
        return lpmln::neg(ground(k, step));
      }
      case K::And:
      case K::Or: {
        std::vector<Formula> parts;
        for (const auto& k : r.kids) parts.push_back(ground(k, step));
        return r.kind == K::And ? lpmln::conj(std::move(parts)) : lpmln::disj(std::move(parts));
      }
      case K::Choice:
        return lpmln::choice(ground(r.kids[0], step));
      case K::Stamp:
        if (!query_) fail("time stamps are only allowed in queries", token_of(r));
        if (step) fail("nested time stamp", token_of(r));
        return ground(r.kids[0], r.step);
    }
    return Formula::top();
  }

  bool compare(const Raw& r) const { return subst(r.name) != subst(r.rhs); }

  /// nullopt when a variable comparison fails and the instance is dropped.
  std::optional<Formula> ground_body(const Raw& r) {
    if (is_comparison(r)) {
      if (!compare(r)) return std::nullopt;
      return Formula::top();
    }
    if (r.kind != Raw::Kind::And) return ground(r);
    std::vector<Formula> parts;
    for (const auto& k : r.kids) {
      if (is_comparison(k)) {
        if (!compare(k)) return std::nullopt;
        continue;
      }
      parts.push_back(ground(k));
    }
    return lpmln::conj(std::move(parts));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const PbcSignature* sig_ = nullptr;
  ActionDescription desc_;
  QuerySpec spec_;
  QuerySpec* query_ = nullptr;
  std::vector<Token> stamp_pos_;
  std::vector<std::pair<std::string, std::string>> binding_;
};

}  // namespace detail

inline ActionDescription parse_description(std::string_view src) {
  return detail::Parser(src).description();
}

inline QuerySpec parse_query(std::string_view src, const ActionDescription& d) {
  return detail::Parser(src).query(d);
}

}  // namespace pbcplus::pbc
