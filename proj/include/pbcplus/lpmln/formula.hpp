#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbcplus/lpmln/signature.hpp"

namespace pbcplus::lpmln {

enum class Connective : std::uint8_t {
  Top,
  Bottom,
  Atom,
  Not,
  And,
  Or,
  Implies,
  Choice,  // {F}^ch, read as F | not F
};

/// Immutable propositional formula over atom ids. Copies share structure.
class Formula {
 public:
  Formula() : node_(top_node()) {}

  static Formula top() { return Formula(); }
  static Formula bottom() {
    static const auto node = std::make_shared<const Node>(Node{Connective::Bottom, 0, {}});
    return Formula(node);
  }
  static Formula atom(AtomId a) {
    return Formula(std::make_shared<const Node>(Node{Connective::Atom, a, {}}));
  }

  Connective kind() const { return node_->kind; }
  AtomId atom_id() const { return node_->atom; }
  std::span<const Formula> children() const { return node_->children; }
  const Formula& child(std::size_t i = 0) const { return node_->children.at(i); }

  bool is_top() const { return kind() == Connective::Top; }
  bool is_bottom() const { return kind() == Connective::Bottom; }

  friend bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    if (a.kind() == Connective::Atom) return a.atom_id() == b.atom_id();
    auto ca = a.children();
    auto cb = b.children();
    if (ca.size() != cb.size()) return false;
    for (std::size_t i = 0; i < ca.size(); ++i) {
      if (!(ca[i] == cb[i])) return false;
    }
    return true;
  }

  friend Formula make(Connective kind, std::vector<Formula> children);

 private:
  struct Node {
    Connective kind;
    AtomId atom;
    std::vector<Formula> children;
  };

  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static const std::shared_ptr<const Node>& top_node() {
    static const auto node = std::make_shared<const Node>(Node{Connective::Top, 0, {}});
    return node;
  }

  std::shared_ptr<const Node> node_;
};

inline Formula make(Connective kind, std::vector<Formula> children) {
  return Formula(std::make_shared<const Formula::Node>(
      Formula::Node{kind, 0, std::move(children)}));
}

inline Formula neg(Formula f) { return make(Connective::Not, {std::move(f)}); }

inline Formula choice(Formula f) { return make(Connective::Choice, {std::move(f)}); }

inline Formula implies(Formula body, Formula head) {
  return make(Connective::Implies, {std::move(body), std::move(head)});
}

/// Conjunction; the empty conjunction is top and a singleton is its element.
inline Formula conj(std::vector<Formula> fs) {
  if (fs.empty()) return Formula::top();
  if (fs.size() == 1) return std::move(fs.front());
  return make(Connective::And, std::move(fs));
}

inline Formula conj(Formula a, Formula b) { return conj(std::vector<Formula>{std::move(a), std::move(b)}); }

inline Formula disj(std::vector<Formula> fs) {
  if (fs.empty()) return Formula::bottom();
  if (fs.size() == 1) return std::move(fs.front());
  return make(Connective::Or, std::move(fs));
}

inline Formula disj(Formula a, Formula b) { return disj(std::vector<Formula>{std::move(a), std::move(b)}); }

/// Formula for c=v. For propositional constants c=f is the negated atom.
inline Formula literal(const Signature& sig, ConstId c, ValueIndex v) {
  const Constant& k = sig.constant(c);
  if (k.propositional && v == Signature::kPropFalse) {
    return neg(Formula::atom(k.first_atom));
  }
  return Formula::atom(sig.atom(c, v));
}

enum class Truth : std::uint8_t { False = 0, True = 1, Unknown = 2 };

inline Truth truth_of(bool b) { return b ? Truth::True : Truth::False; }

/// Classical satisfaction; `value(a)` returns whether atom a is true.
template <class AtomValue>
bool holds(const Formula& f, const AtomValue& value) {
  switch (f.kind()) {
    case Connective::Top:
      return true;
    case Connective::Bottom:
      return false;
    case Connective::Atom:
      return value(f.atom_id());
    case Connective::Not:
      return !holds(f.child(), value);
    case Connective::And:
      for (const auto& c : f.children()) {
        if (!holds(c, value)) return false;
      }
      return true;
    case Connective::Or:
      for (const auto& c : f.children()) {
        if (holds(c, value)) return true;
      }
      return false;
    case Connective::Implies:
      return !holds(f.child(0), value) || holds(f.child(1), value);
    case Connective::Choice:
      return true;
  }
  return false;
}

template <class Visit>
void for_each_atom(const Formula& f, Visit&& visit) {
  if (f.kind() == Connective::Atom) {
    visit(f.atom_id());
    return;
  }
  for (const auto& c : f.children()) for_each_atom(c, visit);
}

inline std::vector<AtomId> atoms_of(const Formula& f) {
  std::vector<AtomId> out;
  for_each_atom(f, [&](AtomId a) { out.push_back(a); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Replaces every atom a by `map(a)` (a Formula).
template <class Map>
Formula substitute(const Formula& f, const Map& map) {
  switch (f.kind()) {
    case Connective::Top:
    case Connective::Bottom:
      return f;
    case Connective::Atom:
      return map(f.atom_id());
    default: {
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      for (const auto& c : f.children()) kids.push_back(substitute(c, map));
      return make(f.kind(), std::move(kids));
    }
  }
}

/// Flat postfix encoding of a formula for fast repeated three-valued
/// evaluation during search.
class CompiledFormula {
 public:
  CompiledFormula() = default;
  explicit CompiledFormula(const Formula& f) { emit(f); }

  /// `truth` is indexed by atom id.
  Truth evaluate(std::span<const Truth> truth) const {
    Truth stack[64];
    std::vector<Truth> heap;
    Truth* st = stack;
    if (depth_ > 64) {
      heap.resize(depth_);
      st = heap.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : code_) {
      switch (in.op) {
        case Connective::Top:
          st[sp++] = Truth::True;
          break;
        case Connective::Bottom:
          st[sp++] = Truth::False;
          break;
        case Connective::Atom:
          st[sp++] = truth[in.arg];
          break;
        case Connective::Choice:
          st[sp - 1] = Truth::True;
          break;
        case Connective::Not:
          st[sp - 1] = negate(st[sp - 1]);
          break;
        case Connective::And: {
          Truth r = Truth::True;
          for (std::uint32_t i = 0; i < in.arg; ++i) {
            Truth t = st[--sp];
            if (t == Truth::False) r = Truth::False;
            else if (t == Truth::Unknown && r == Truth::True) r = Truth::Unknown;
          }
          st[sp++] = r;
          break;
        }
        case Connective::Or: {
          Truth r = Truth::False;
          for (std::uint32_t i = 0; i < in.arg; ++i) {
            Truth t = st[--sp];
            if (t == Truth::True) r = Truth::True;
            else if (t == Truth::Unknown && r == Truth::False) r = Truth::Unknown;
          }
          st[sp++] = r;
          break;
        }
        case Connective::Implies: {
          Truth head = st[--sp];
          Truth body = st[--sp];
          Truth nb = negate(body);
          Truth r;
          if (nb == Truth::True || head == Truth::True) r = Truth::True;
          else if (nb == Truth::False && head == Truth::False) r = Truth::False;
          else r = Truth::Unknown;
          st[sp++] = r;
          break;
        }
      }
    }
    return sp == 0 ? Truth::True : st[sp - 1];
  }

 private:
  struct Instr {
    Connective op;
    std::uint32_t arg;
  };

  static Truth negate(Truth t) {
    if (t == Truth::Unknown) return t;
    return t == Truth::True ? Truth::False : Truth::True;
  }

  void emit(const Formula& f) {
    for (const auto& c : f.children()) emit(c);
    switch (f.kind()) {
      case Connective::Atom:
        code_.push_back({f.kind(), f.atom_id()});
        ++cur_;
        break;
      case Connective::Top:
      case Connective::Bottom:
        code_.push_back({f.kind(), 0});
        ++cur_;
        break;
      case Connective::Not:
      case Connective::Choice:
        code_.push_back({f.kind(), 1});
        break;
      case Connective::And:
      case Connective::Or:
      case Connective::Implies: {
        auto n = static_cast<std::uint32_t>(f.children().size());
        code_.push_back({f.kind(), n});
        if (n == 0) {
          ++cur_;
        } else {
          cur_ -= n - 1;
        }
        break;
      }
    }
    depth_ = std::max(depth_, cur_);
  }

  std::vector<Instr> code_;
  std::size_t cur_ = 0;
  std::size_t depth_ = 0;
};

namespace detail {

inline int precedence(Connective k) {
  switch (k) {
    case Connective::Implies:
      return 1;
    case Connective::Or:
      return 2;
    case Connective::And:
      return 3;
    default:
      return 4;
  }
}

template <class AtomName>
void print_formula(std::string& out, const Formula& f, const AtomName& name, int parent) {
  switch (f.kind()) {
    case Connective::Top:
      out += "true";
      return;
    case Connective::Bottom:
      out += "false";
      return;
    case Connective::Atom:
      out += name(f.atom_id());
      return;
    case Connective::Not:
      out += "not ";
      print_formula(out, f.child(), name, 4);
      return;
    case Connective::Choice:
      out += "{";
      print_formula(out, f.child(), name, 0);
      out += "}";
      return;
    default:
      break;
  }
  // Nested binary connectives are always parenthesised so that the printed
  // text reparses to the same tree.
  const bool paren = parent > 0;
  const char* sep = f.kind() == Connective::And ? " & "
                    : f.kind() == Connective::Or ? " | "
                                                 : " -> ";
  if (paren) out += "(";
  bool first = true;
  for (const auto& c : f.children()) {
    if (!first) out += sep;
    first = false;
    print_formula(out, c, name, precedence(f.kind()));
  }
  if (paren) out += ")";
}

}  // namespace detail

template <class AtomName>
std::string to_string(const Formula& f, const AtomName& name) {
  std::string out;
  detail::print_formula(out, f, name, 0);
  return out;
}

inline std::string to_string(const Formula& f, const Signature& sig) {
  return to_string(f, [&](AtomId a) { return sig.atom_name(a); });
}

}  // namespace pbcplus::lpmln
