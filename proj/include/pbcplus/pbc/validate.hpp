#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pbcplus/pbc/ast.hpp"

namespace pbcplus::pbc {

struct Diagnostic {
  std::size_t law;  // index into laws; npos for signature-level findings
  std::string clause;
  std::string message;
  bool warning = false;
};

inline std::string to_string(const Diagnostic& d) {
  std::string where = d.law == std::string::npos ? "signature" : "law " + std::to_string(d.law);
  return where + ": " + (d.warning ? "warning: " : "error: ") + d.message + " [" + d.clause + "]";
}

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds) {
    if (!d.warning) return true;
  }
  return false;
}

namespace detail {

template <class Pred>
bool mentions(const PbcSignature& sig, const Formula& f, Pred pred) {
  bool hit = false;
  lpmln::for_each_atom(f, [&](AtomId a) {
    if (!sig.base().contains(a) || pred(sig.base().constant_of(a))) hit = true;
  });
  return hit;
}

inline void check_entries(const PbcSignature& sig, std::size_t i, ConstId c,
                          const std::vector<ProbEntry>& entries, ConstKind kind,
                          std::vector<Diagnostic>& out) {
  const char* what = kind == ConstKind::Pf ? "pf" : "initpf";
  if (c >= sig.size() || sig.kind(c) != kind) {
    out.push_back({i, "declaration", std::string("declared constant is not a ") + what + " constant"});
    return;
  }
  const auto& dom = sig.domain(c);
  std::vector<bool> seen(dom.size(), false);
  double sum = 0.0;
  bool range = true;
  for (const auto& e : entries) {
    if (e.value >= dom.size() || seen[e.value]) {
      out.push_back({i, "declaration", "entries must list each domain value once"});
      return;
    }
    seen[e.value] = true;
    if (!(e.p > 0.0 && e.p < 1.0)) range = false;
    sum += e.p;
  }
  for (bool s : seen) {
    if (!s) {
      out.push_back({i, "declaration", "entries must cover the domain of '" + sig.name(c) + "'"});
      return;
    }
  }
  if (!range) out.push_back({i, "0<p<1", "every probability must lie strictly between 0 and 1"});
  if (std::abs(sum - 1.0) > 1e-9) {
    out.push_back({i, "sum", "probabilities sum to " + std::to_string(sum) + ", not 1"});
  }
}

}  // namespace detail

/// Empty iff the description is well formed. Warnings do not count.
inline std::vector<Diagnostic> validate(const ActionDescription& d) {
  const PbcSignature& sig = d.signature;
  std::vector<Diagnostic> out;
  auto non_fluent = [&](ConstId c) { return !sig.is_fluent(c); };
  auto sd = [&](ConstId c) { return sig.kind(c) == ConstKind::SdFluent; };
  auto initpf = [&](ConstId c) { return sig.kind(c) == ConstKind::InitPf; };
  auto act_or_pf = [&](ConstId c) {
    return sig.kind(c) == ConstKind::Action || sig.kind(c) == ConstKind::Pf;
  };
  auto unknown = [&](const Formula& f) {
    return detail::mentions(sig, f, [](ConstId) { return false; });
  };

  std::vector<int> declared(sig.size(), 0);
  std::vector<bool> has_static(sig.size(), false);
  bool any_ab_law = false;

  for (std::size_t i = 0; i < d.laws.size(); ++i) {
    const auto& law = d.laws[i];
    std::vector<const Formula*> formulas;
    if (auto* l = std::get_if<StaticLaw>(&law)) {
      formulas = {&l->head, &l->body};
      if (detail::mentions(sig, l->head, non_fluent) || detail::mentions(sig, l->body, non_fluent)) {
        out.push_back({i, "static F,G", "static law must only mention fluent constants"});
      }
      lpmln::for_each_atom(l->head, [&](AtomId a) {
        if (sig.base().contains(a)) has_static[sig.base().constant_of(a)] = true;
      });
    } else if (auto* l = std::get_if<DynamicLaw>(&law)) {
      formulas = {&l->head, &l->body, &l->after};
      if (detail::mentions(sig, l->head, non_fluent) || detail::mentions(sig, l->body, non_fluent)) {
        out.push_back({i, "dynamic F,G", "F and G of a fluent dynamic law must be fluent formulas"});
      }
      if (detail::mentions(sig, l->head, sd)) {
        out.push_back({i, "dynamic F", "F must not contain statically determined constants"});
      }
      if (detail::mentions(sig, l->after, initpf)) {
        out.push_back({i, "dynamic H", "H must not contain initpf constants"});
      }
    } else if (auto* l = std::get_if<PfDecl>(&law)) {
      detail::check_entries(sig, i, l->constant, l->entries, ConstKind::Pf, out);
      if (l->constant < sig.size() && declared[l->constant]++) {
        out.push_back({i, "declaration", "'" + sig.name(l->constant) + "' is declared twice"});
      }
    } else if (auto* l = std::get_if<InitPfDecl>(&law)) {
      detail::check_entries(sig, i, l->constant, l->entries, ConstKind::InitPf, out);
      if (l->constant < sig.size() && declared[l->constant]++) {
        out.push_back({i, "declaration", "'" + sig.name(l->constant) + "' is declared twice"});
      }
    } else if (auto* l = std::get_if<InitStatic>(&law)) {
      formulas = {&l->head, &l->body};
      bool atom_head = l->head.is_bottom() ||
                       (l->head.kind() == lpmln::Connective::Atom &&
                        sig.base().contains(l->head.atom_id()) &&
                        sig.is_fluent(sig.base().constant_of(l->head.atom_id())));
      if (!atom_head) {
        out.push_back({i, "initial F", "F of an initial static law must be a fluent atom"});
      }
      if (detail::mentions(sig, l->body, act_or_pf)) {
        out.push_back({i, "initial G", "G must contain neither action nor pf constants"});
      }
    } else if (auto* l = std::get_if<DefaultLaw>(&law)) {
      formulas = {&l->formula};
      if (detail::mentions(sig, l->formula, non_fluent)) {
        out.push_back({i, "default F", "default law must be a fluent formula"});
      }
      lpmln::for_each_atom(l->formula, [&](AtomId a) {
        if (sig.base().contains(a)) has_static[sig.base().constant_of(a)] = true;
      });
    } else if (auto* l = std::get_if<CausedAb>(&law)) {
      formulas = {&l->head, &l->body, &l->after};
      any_ab_law = true;
      if (detail::mentions(sig, l->head, non_fluent) || detail::mentions(sig, l->body, non_fluent)) {
        out.push_back({i, "caused_ab F,G", "F and G must be fluent formulas"});
      }
      if (detail::mentions(sig, l->head, sd)) {
        out.push_back({i, "caused_ab F", "F must not contain statically determined constants"});
      }
      if (detail::mentions(sig, l->after, initpf)) {
        out.push_back({i, "caused_ab H", "H must not contain initpf constants"});
      }
    } else {
      any_ab_law = true;
    }
    for (const Formula* f : formulas) {
      if (unknown(*f)) out.push_back({i, "signature", "formula mentions an unknown atom"});
    }
  }

  if (any_ab_law && sig.of_kind({ConstKind::AbFluent}).empty() && !sig.base().find(kAbName)) {
    out.push_back({std::string::npos, "abnormal", "caused_ab/enable_ab used without an abnormal fluent"});
  }
  for (ConstId c = 0; c < sig.size(); ++c) {
    auto k = sig.kind(c);
    if ((k == ConstKind::Pf || k == ConstKind::InitPf) && !declared[c]) {
      out.push_back({std::string::npos, "declaration",
                     "'" + sig.name(c) + "' has no probability declaration"});
    }
    if (k == ConstKind::SdFluent && !has_static[c] && sig.name(c) != kAbName) {
      out.push_back({std::string::npos, "static", "statically determined fluent '" + sig.name(c) +
                                                      "' has no static law", true});
    }
  }
  return out;
}

}  // namespace pbcplus::pbc
