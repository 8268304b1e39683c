#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/program.hpp"
#include "pbcplus/lpmln/signature.hpp"
#include "pbcplus/mvpp.hpp"
#include "pbcplus/pbc/ast.hpp"
#include "pbcplus/pbc/query_spec.hpp"
#include "pbcplus/pbc/sugar.hpp"
#include "pbcplus/pbc/validate.hpp"

namespace pbcplus {

using lpmln::AtomId;
using lpmln::ConstId;
using lpmln::Formula;
using lpmln::ValueIndex;
using pbc::ActionDescription;
using pbc::ConstKind;
using pbc::PbcSignature;

/// Signature of Tr(D,m): fluents at 0..m, actions and pf constants at
/// 0..m-1, initpf constants at 0. Constant `i:c` keeps the domain of c.
class TimedSignature {
 public:
  TimedSignature(const PbcSignature& base, unsigned m, bool with_initpf = true)
      : base_(base), m_(m), index_(m + 1, std::vector<std::optional<ConstId>>(base.size())) {
    if (with_initpf) {
      for (ConstId c : base.initpfs()) add(0, c);
    }
    for (unsigned i = 0; i <= m; ++i) {
      for (ConstId c : base.fluents()) add(i, c);
      if (i == m) break;
      for (ConstId c : base.actions()) add(i, c);
      for (ConstId c : base.pfs()) add(i, c);
    }
  }

  const PbcSignature& base() const { return base_; }
  unsigned steps() const { return m_; }
  const lpmln::Signature& signature() const { return sig_; }

  std::optional<ConstId> find(unsigned step, ConstId c) const {
    if (step > m_) return std::nullopt;
    return index_[step][c];
  }
  ConstId at(unsigned step, ConstId c) const {
    auto t = find(step, c);
    if (!t) {
      throw SignatureError("'" + std::to_string(step) + ":" + base_.name(c) +
                           "' is not part of the signature for " + std::to_string(m_) + " steps");
    }
    return *t;
  }
  AtomId atom(unsigned step, AtomId base_atom) const {
    const auto& b = base_.base();
    return sig_.atom(at(step, b.constant_of(base_atom)), b.value_of(base_atom));
  }

  unsigned step_of(ConstId timed) const { return origin_.at(timed).first; }
  ConstId base_of(ConstId timed) const { return origin_.at(timed).second; }

  /// i:F
  Formula stamp(const Formula& f, unsigned step) const {
    return lpmln::substitute(f, [&](AtomId a) { return Formula::atom(atom(step, a)); });
  }

  /// A query formula over stamped atoms, as a formula over this signature.
  Formula resolve(const pbc::Stamps& stamps, const Formula& f) const {
    return lpmln::substitute(f, [&](AtomId a) {
      const auto& s = stamps.at(a);
      return Formula::atom(atom(s.step, s.atom));
    });
  }

 private:
  void add(unsigned step, ConstId c) {
    ConstId t = sig_.add_constant(std::to_string(step) + ":" + base_.name(c), base_.domain(c));
    index_[step][c] = t;
    origin_.push_back({step, c});
  }

  PbcSignature base_;
  unsigned m_;
  lpmln::Signature sig_;
  std::vector<std::vector<std::optional<ConstId>>> index_;
  std::vector<std::pair<unsigned, ConstId>> origin_;
};

enum class Schema {
  Static,          // i:F <- i:G
  Dynamic,         // i+1:F <- i+1:G & i:H
  InitialChoice,   // {0:c=v} for regular fluents
  ActionChoice,    // {i:a=t}, {i:a=f}
  PfDeclaration,   // i:pf
  InitPfDeclaration,
  InitConstraint,  // false <- not 0:F & 0:G
};

inline const char* name_of(Schema s) {
  switch (s) {
    case Schema::Static:
      return "static";
    case Schema::Dynamic:
      return "dynamic";
    case Schema::InitialChoice:
      return "initial-choice";
    case Schema::ActionChoice:
      return "action-choice";
    case Schema::PfDeclaration:
      return "pf";
    case Schema::InitPfDeclaration:
      return "initpf";
    case Schema::InitConstraint:
      return "init";
  }
  return "?";
}

struct Provenance {
  Schema schema;
  std::size_t law;  // npos for schema-generated rules
  unsigned step;
};

struct TranslateOptions {
  /// Include D_init (initpf declarations and initial static laws).
  bool with_init = true;
};

struct TranslationOutput {
  ActionDescription description;  // sugar-free
  TimedSignature timed;
  mvpp::Program program;
  std::vector<Provenance> rule_origin;         // parallel to program.rules()
  std::vector<Provenance> declaration_origin;  // parallel to program.declarations()
};

/// expand_sugar followed by validate; throws ValidationError on errors.
inline ActionDescription prepare(const ActionDescription& d) {
  ActionDescription e = pbc::expand_sugar(d);
  auto diags = pbc::validate(e);
  if (pbc::has_errors(diags)) {
    std::string msg = "invalid action description:";
    for (const auto& x : diags) {
      if (!x.warning) msg += "\n  " + pbc::to_string(x);
    }
    throw ValidationError(msg);
  }
  return e;
}

namespace detail {

inline void emit_translation(TranslationOutput& out, unsigned m, const TranslateOptions& opt) {
  const ActionDescription& d = out.description;
  const PbcSignature& sig = d.signature;
  const TimedSignature& ts = out.timed;
  const std::size_t none = std::string::npos;
  auto rule = [&](Formula head, Formula body, Provenance p) {
    out.program.add_rule(std::move(head), std::move(body));
    out.rule_origin.push_back(p);
  };
  auto declare = [&](ConstId c, unsigned step, const std::vector<pbc::ProbEntry>& entries, Provenance p) {
    mvpp::ProbDeclaration decl{ts.at(step, c), {}};
    for (const auto& e : entries) decl.entries.push_back({e.value, e.p});
    out.program.declare(std::move(decl));
    out.declaration_origin.push_back(p);
  };

  for (std::size_t l = 0; l < d.laws.size(); ++l) {
    const auto& law = d.laws[l];
    if (auto* s = std::get_if<pbc::StaticLaw>(&law)) {
      for (unsigned i = 0; i <= m; ++i) {
        rule(ts.stamp(s->head, i), ts.stamp(s->body, i), {Schema::Static, l, i});
      }
    } else if (auto* s = std::get_if<pbc::DynamicLaw>(&law)) {
      for (unsigned i = 0; i < m; ++i) {
        Formula g = ts.stamp(s->body, i + 1);
        Formula h = ts.stamp(s->after, i);
        rule(ts.stamp(s->head, i + 1), g.is_top() ? h : h.is_top() ? g : lpmln::conj(g, h),
             {Schema::Dynamic, l, i});
      }
    } else if (auto* s = std::get_if<pbc::PfDecl>(&law)) {
      for (unsigned i = 0; i < m; ++i) declare(s->constant, i, s->entries, {Schema::PfDeclaration, l, i});
    } else if (auto* s = std::get_if<pbc::InitPfDecl>(&law)) {
      if (opt.with_init) declare(s->constant, 0, s->entries, {Schema::InitPfDeclaration, l, 0});
    } else if (auto* s = std::get_if<pbc::InitStatic>(&law)) {
      if (opt.with_init) {
        rule(Formula::bottom(), lpmln::conj(lpmln::neg(ts.stamp(s->head, 0)), ts.stamp(s->body, 0)),
             {Schema::InitConstraint, l, 0});
      }
    } else {
      throw ValidationError("translate needs a sugar-free description");
    }
  }
  for (ConstId c : sig.fluents()) {
    if (!sig.is_regular(c)) continue;
    for (ValueIndex v = 0; v < sig.domain(c).size(); ++v) {
      rule(lpmln::choice(Formula::atom(ts.signature().atom(ts.at(0, c), v))), Formula::top(),
           {Schema::InitialChoice, none, 0});
    }
  }
  for (unsigned i = 0; i < m; ++i) {
    for (ConstId a : sig.actions()) {
      for (ValueIndex v : {sig.true_value(a), sig.false_value(a)}) {
        rule(lpmln::choice(Formula::atom(ts.signature().atom(ts.at(i, a), v))), Formula::top(),
             {Schema::ActionChoice, none, i});
      }
    }
  }
}

}  // namespace detail

/// Tr(D,m) as a multi-valued probabilistic program, or D_m alone when
/// `with_init` is off (then the signature has no initpf constants).
inline TranslationOutput translate(const ActionDescription& d, unsigned m, TranslateOptions opt = {}) {
  ActionDescription e = prepare(d);
  TimedSignature ts(e.signature, m, opt.with_init);
  mvpp::Program program(ts.signature());
  TranslationOutput out{std::move(e), std::move(ts), std::move(program), {}, {}};
  detail::emit_translation(out, m, opt);
  return out;
}

/// The LP^MLN program T(Tr(D,m)).
inline lpmln::WeightedProgram to_lpmln(const TranslationOutput& t) {
  return mvpp::translate_mvpp(t.program);
}

/// One line per LP^MLN rule with its origin.
inline std::string explain(const TranslationOutput& t) {
  auto traced = mvpp::translate_traced(t.program);
  const auto& sig = t.timed.signature();
  std::string out;
  const auto& rules = traced.program.rules();
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto& rule = rules[r];
    std::string w = rule.weight.is_hard() ? "hard" : pbc::format_probability(rule.weight.value());
    out += w + ": " + lpmln::to_string(rule.formula, sig);
    const auto& o = traced.origins[r];
    auto where = [&](const Provenance& p) {
      std::string s = std::string(name_of(p.schema)) + " @" + std::to_string(p.step);
      if (p.law != std::string::npos) s += " law " + std::to_string(p.law);
      return s;
    };
    switch (o.kind) {
      case mvpp::Origin::Kind::Declaration:
        out += "   % " + where(t.declaration_origin[o.index]);
        break;
      case mvpp::Origin::Kind::Rule:
        out += "   % " + where(t.rule_origin[o.index]);
        break;
      case mvpp::Origin::Kind::Uniqueness:
        out += "   % uniqueness " + sig.constant(o.index).name;
        break;
      case mvpp::Origin::Kind::Existence:
        out += "   % existence " + sig.constant(o.index).name;
        break;
    }
    out += "\n";
  }
  return out;
}

}  // namespace pbcplus
