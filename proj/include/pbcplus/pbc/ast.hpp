#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/formula.hpp"
#include "pbcplus/lpmln/signature.hpp"

namespace pbcplus::pbc {

using lpmln::AtomId;
using lpmln::ConstId;
using lpmln::Formula;
using lpmln::ValueIndex;

enum class ConstKind { Fluent, SdFluent, AbFluent, Action, Pf, InitPf };

inline const char* keyword(ConstKind k) {
  switch (k) {
    case ConstKind::Fluent:
      return "fluent";
    case ConstKind::SdFluent:
      return "sdFluent";
    case ConstKind::AbFluent:
      return "abFluent";
    case ConstKind::Action:
      return "action";
    case ConstKind::Pf:
      return "pf";
    case ConstKind::InitPf:
      return "initpf";
  }
  return "?";
}

struct Sort {
  std::string name;
  std::vector<std::string> elements;
  friend bool operator==(const Sort&, const Sort&) = default;
};

/// Ground constants of an action description, each tagged with its class.
/// Formulas of the description are over the atoms of `base()`.
class PbcSignature {
 public:
  ConstId add(std::string name, std::vector<std::string> domain, ConstKind kind) {
    ConstId c = base_.add_constant(std::move(name), std::move(domain));
    kinds_.push_back(kind);
    if (kind == ConstKind::Action && !is_boolean(c)) {
      throw ValidationError("action constant '" + base_.constant(c).name + "' must be Boolean");
    }
    return c;
  }

  void add_sort(Sort s) {
    if (find_sort(s.name)) throw ValidationError("duplicate sort '" + s.name + "'");
    if (s.elements.empty()) throw ValidationError("sort '" + s.name + "' is empty");
    sorts_.push_back(std::move(s));
  }

  const lpmln::Signature& base() const { return base_; }
  const std::vector<Sort>& sorts() const { return sorts_; }
  std::size_t size() const { return kinds_.size(); }

  const Sort* find_sort(const std::string& name) const {
    for (const auto& s : sorts_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  ConstKind kind(ConstId c) const { return kinds_.at(c); }
  const std::string& name(ConstId c) const { return base_.constant(c).name; }
  const std::vector<std::string>& domain(ConstId c) const { return base_.constant(c).domain; }

  bool is_fluent(ConstId c) const {
    auto k = kind(c);
    return k == ConstKind::Fluent || k == ConstKind::SdFluent || k == ConstKind::AbFluent;
  }
  /// Abnormal fluents behave as regular ones.
  bool is_regular(ConstId c) const {
    return kind(c) == ConstKind::Fluent || kind(c) == ConstKind::AbFluent;
  }

  bool is_boolean(ConstId c) const {
    const auto& d = domain(c);
    return d.size() == 2 && ((d[0] == "t" && d[1] == "f") || (d[0] == "f" && d[1] == "t"));
  }

  ValueIndex true_value(ConstId c) const { return *base_.find_value(c, "t"); }
  ValueIndex false_value(ConstId c) const { return *base_.find_value(c, "f"); }

  std::vector<ConstId> of_kind(std::initializer_list<ConstKind> ks) const {
    std::vector<ConstId> out;
    for (ConstId c = 0; c < size(); ++c) {
      for (auto k : ks) {
        if (kind(c) == k) {
          out.push_back(c);
          break;
        }
      }
    }
    return out;
  }
  std::vector<ConstId> fluents() const {
    return of_kind({ConstKind::Fluent, ConstKind::SdFluent, ConstKind::AbFluent});
  }
  std::vector<ConstId> actions() const { return of_kind({ConstKind::Action}); }
  std::vector<ConstId> pfs() const { return of_kind({ConstKind::Pf}); }
  std::vector<ConstId> initpfs() const { return of_kind({ConstKind::InitPf}); }

  friend bool operator==(const PbcSignature& a, const PbcSignature& b) {
    return a.base_ == b.base_ && a.kinds_ == b.kinds_ && a.sorts_ == b.sorts_;
  }

 private:
  lpmln::Signature base_;
  std::vector<ConstKind> kinds_;
  std::vector<Sort> sorts_;
};

struct ProbEntry {
  ValueIndex value;
  double p;
  friend bool operator==(const ProbEntry&, const ProbEntry&) = default;
};

/// caused F if G
struct StaticLaw {
  Formula head, body;
  friend bool operator==(const StaticLaw&, const StaticLaw&) = default;
};
/// caused F if G after H
struct DynamicLaw {
  Formula head, body, after;
  friend bool operator==(const DynamicLaw&, const DynamicLaw&) = default;
};
/// caused c = {v1: p1, ...} for a pf constant
struct PfDecl {
  ConstId constant;
  std::vector<ProbEntry> entries;
  friend bool operator==(const PfDecl&, const PfDecl&) = default;
};
/// The same for an initpf constant.
struct InitPfDecl {
  ConstId constant;
  std::vector<ProbEntry> entries;
  friend bool operator==(const InitPfDecl&, const InitPfDecl&) = default;
};
/// initially F if G; F is an atom c=v (or false).
struct InitStatic {
  Formula head, body;
  friend bool operator==(const InitStatic&, const InitStatic&) = default;
};
/// default F
struct DefaultLaw {
  Formula formula;
  friend bool operator==(const DefaultLaw&, const DefaultLaw&) = default;
};
/// caused_ab F if G after H
struct CausedAb {
  Formula head, body, after;
  friend bool operator==(const CausedAb&, const CausedAb&) = default;
};
/// caused ab
struct EnableAb {
  friend bool operator==(const EnableAb&, const EnableAb&) = default;
};

using CausalLaw =
    std::variant<StaticLaw, DynamicLaw, PfDecl, InitPfDecl, InitStatic, DefaultLaw, CausedAb, EnableAb>;

inline bool is_sugar(const CausalLaw& l) {
  return std::holds_alternative<DefaultLaw>(l) || std::holds_alternative<CausedAb>(l) ||
         std::holds_alternative<EnableAb>(l);
}

struct ActionDescription {
  PbcSignature signature;
  std::vector<CausalLaw> laws;

  friend bool operator==(const ActionDescription&, const ActionDescription&) = default;
};

inline const std::string kAbName = "ab";

// ---- printing ---------------------------------------------------------

/// Shortest decimal that reads back as the same double.
inline std::string format_probability(double p) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, r.ptr);
}

inline std::string print_formula(const ActionDescription& d, const Formula& f) {
  return lpmln::to_string(f, d.signature.base());
}

namespace detail {

inline std::string print_entries(const ActionDescription& d, ConstId c,
                                 const std::vector<ProbEntry>& entries) {
  std::string out = "caused " + d.signature.name(c) + " = {";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k) out += ", ";
    out += d.signature.domain(c).at(entries[k].value) + ": " + format_probability(entries[k].p);
  }
  return out + "}.";
}

}  // namespace detail

inline std::string print_law(const ActionDescription& d, const CausalLaw& law) {
  auto fml = [&](const Formula& f) { return print_formula(d, f); };
  return std::visit(
      [&](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, StaticLaw>) {
          return "caused " + fml(l.head) + " if " + fml(l.body) + ".";
        } else if constexpr (std::is_same_v<T, DynamicLaw>) {
          return "caused " + fml(l.head) + " if " + fml(l.body) + " after " + fml(l.after) + ".";
        } else if constexpr (std::is_same_v<T, PfDecl> || std::is_same_v<T, InitPfDecl>) {
          return detail::print_entries(d, l.constant, l.entries);
        } else if constexpr (std::is_same_v<T, InitStatic>) {
          return "initially " + fml(l.head) + " if " + fml(l.body) + ".";
        } else if constexpr (std::is_same_v<T, DefaultLaw>) {
          return "default " + fml(l.formula) + ".";
        } else if constexpr (std::is_same_v<T, CausedAb>) {
          return "caused_ab " + fml(l.head) + " if " + fml(l.body) + " after " + fml(l.after) + ".";
        } else {
          return "enable_ab.";
        }
      },
      law);
}

/// Ground normal form; parsing it yields an identical description.
inline std::string print_description(const ActionDescription& d) {
  std::string out;
  for (const auto& s : d.signature.sorts()) {
    out += "sort " + s.name + " = {";
    for (std::size_t k = 0; k < s.elements.size(); ++k) {
      out += (k ? ", " : "") + s.elements[k];
    }
    out += "}\n";
  }
  for (ConstId c = 0; c < d.signature.size(); ++c) {
    out += std::string(keyword(d.signature.kind(c))) + " " + d.signature.name(c) + " : {";
    const auto& dom = d.signature.domain(c);
    for (std::size_t k = 0; k < dom.size(); ++k) out += (k ? ", " : "") + dom[k];
    out += "}\n";
  }
  for (const auto& l : d.laws) out += print_law(d, l) + "\n";
  return out;
}

}  // namespace pbcplus::pbc
