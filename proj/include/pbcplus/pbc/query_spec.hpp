#pragma once

#include <map>
#include <utility>
#include <vector>

#include "pbcplus/pbc/ast.hpp"

namespace pbcplus::pbc {

/// Atom `step:c=v` of a time-stamped formula.
struct StampedAtom {
  unsigned step;
  AtomId atom;  // atom of the description's base signature
  friend bool operator==(const StampedAtom&, const StampedAtom&) = default;
  friend auto operator<=>(const StampedAtom&, const StampedAtom&) = default;
};

/// Interning table; formulas in a QuerySpec use its ids as atoms.
class Stamps {
 public:
  AtomId intern(unsigned step, AtomId atom) {
    auto [it, fresh] = ids_.try_emplace({step, atom}, static_cast<AtomId>(atoms_.size()));
    if (fresh) atoms_.push_back({step, atom});
    return it->second;
  }
  const StampedAtom& at(AtomId id) const { return atoms_.at(id); }
  std::size_t size() const { return atoms_.size(); }

 private:
  std::map<StampedAtom, AtomId> ids_;
  std::vector<StampedAtom> atoms_;
};

struct Observation {
  unsigned step;
  Formula formula;
};

struct ActionFact {
  unsigned step;
  ConstId action;
  bool positive;
};

enum class QueryKind { Marginal, Conditional, Map, Plan, Diagnose, Argmax };

struct QuerySpec {
  unsigned steps = 0;
  Stamps stamps;
  std::vector<Observation> observations;
  std::vector<ActionFact> actions;
  QueryKind kind = QueryKind::Map;
  Formula target;  // marginal, conditional, argmax
  Formula given;   // conditional
  Formula goal;    // plan
  Formula init;    // plan, over step 0
};

inline const char* name_of(QueryKind k) {
  switch (k) {
    case QueryKind::Marginal:
      return "marginal";
    case QueryKind::Conditional:
      return "conditional";
    case QueryKind::Map:
      return "map";
    case QueryKind::Plan:
      return "plan";
    case QueryKind::Diagnose:
      return "diagnose";
    case QueryKind::Argmax:
      return "argmax";
  }
  return "?";
}

/// Observations and action facts as one stamped conjunction.
inline Formula evidence_formula(QuerySpec& q, const PbcSignature& sig) {
  std::vector<Formula> parts;
  for (const auto& o : q.observations) parts.push_back(o.formula);
  for (const auto& a : q.actions) {
    ValueIndex v = a.positive ? sig.true_value(a.action) : sig.false_value(a.action);
    parts.push_back(Formula::atom(q.stamps.intern(a.step, sig.base().atom(a.action, v))));
  }
  return lpmln::conj(std::move(parts));
}

}  // namespace pbcplus::pbc
