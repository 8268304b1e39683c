#pragma once

#include "pbcplus/pbc/ast.hpp"

namespace pbcplus::pbc {

/// Rewrites `default`, `caused_ab` and `enable_ab` into plain laws. When
/// an abnormal fluent is declared, the Boolean statically determined
/// fluent `ab` is added with `default ~ab` appended.
inline ActionDescription expand_sugar(const ActionDescription& d) {
  ActionDescription out{d.signature, {}};
  PbcSignature& sig = out.signature;
  const bool abnormal = !sig.of_kind({ConstKind::AbFluent}).empty();
  auto existing = sig.base().find(kAbName);
  if (existing && (sig.kind(*existing) != ConstKind::SdFluent || !sig.is_boolean(*existing))) {
    throw ValidationError("'ab' is reserved for a Boolean statically determined fluent");
  }
  bool injected = false;
  if (abnormal && !existing) {
    existing = sig.add(kAbName, {"t", "f"}, ConstKind::SdFluent);
    injected = true;
  }
  auto ab_atom = [&](bool value) {
    if (!existing) {
      throw ValidationError("caused_ab and enable_ab need at least one abnormal fluent");
    }
    ValueIndex v = value ? sig.true_value(*existing) : sig.false_value(*existing);
    return Formula::atom(sig.base().atom(*existing, v));
  };

  for (const auto& law : d.laws) {
    if (auto* l = std::get_if<DefaultLaw>(&law)) {
      out.laws.push_back(StaticLaw{lpmln::choice(l->formula), Formula::top()});
    } else if (auto* l = std::get_if<CausedAb>(&law)) {
      out.laws.push_back(DynamicLaw{l->head, lpmln::conj(ab_atom(true), l->body), l->after});
    } else if (std::holds_alternative<EnableAb>(law)) {
      out.laws.push_back(StaticLaw{ab_atom(true), Formula::top()});
    } else {
      out.laws.push_back(law);
    }
  }
  if (injected) {
    out.laws.push_back(StaticLaw{lpmln::choice(ab_atom(false)), Formula::top()});
  }
  return out;
}

}  // namespace pbcplus::pbc
