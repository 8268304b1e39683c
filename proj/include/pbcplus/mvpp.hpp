#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/formula.hpp"
#include "pbcplus/lpmln/program.hpp"
#include "pbcplus/lpmln/signature.hpp"

namespace pbcplus::mvpp {

using lpmln::ConstId;
using lpmln::Formula;
using lpmln::Signature;
using lpmln::ValueIndex;

struct ProbEntry {
  ValueIndex value;
  double p;
};

/// p_1 :: c=v_1 | ... | p_n :: c=v_n
struct ProbDeclaration {
  ConstId constant;
  std::vector<ProbEntry> entries;
};

/// Head <- Body; neither side may contain an implication.
struct Rule {
  Formula head;
  Formula body;
};

class Program {
 public:
  Program() = default;
  explicit Program(Signature sig) : sig_(std::move(sig)) {}

  const Signature& signature() const { return sig_; }
  const std::vector<ProbDeclaration>& declarations() const { return decls_; }
  const std::vector<Rule>& rules() const { return rules_; }

  void declare(ProbDeclaration d) { decls_.push_back(std::move(d)); }
  void add_rule(Formula head, Formula body = Formula::top()) {
    rules_.push_back({std::move(head), std::move(body)});
  }

  /// A constant is probabilistic iff it has a declaration.
  bool is_probabilistic(ConstId c) const { return declaration_of(c) != nullptr; }

  const ProbDeclaration* declaration_of(ConstId c) const {
    for (const auto& d : decls_) {
      if (d.constant == c) return &d;
    }
    return nullptr;
  }

  /// M(c=v), if c is probabilistic.
  std::optional<double> probability_of(ConstId c, ValueIndex v) const {
    const ProbDeclaration* d = declaration_of(c);
    if (!d) return std::nullopt;
    for (const auto& e : d->entries) {
      if (e.value == v) return e.p;
    }
    return 0.0;
  }

 private:
  Signature sig_;
  std::vector<ProbDeclaration> decls_;
  std::vector<Rule> rules_;
};

/// Which part of the source program an emitted LP^MLN rule comes from.
struct Origin {
  enum class Kind { Declaration, Rule, Uniqueness, Existence };
  Kind kind;
  std::size_t index;  // declaration, rule or constant index
};

struct Translation {
  lpmln::WeightedProgram program;
  std::vector<Origin> origins;  // parallel to program.rules()
};

namespace detail {

inline bool has_implication(const Formula& f) {
  if (f.kind() == lpmln::Connective::Implies) return true;
  for (const auto& c : f.children()) {
    if (has_implication(c)) return true;
  }
  return false;
}

inline void validate(const Program& m) {
  const Signature& sig = m.signature();
  for (const auto& k : sig.constants()) {
    if (k.propositional) {
      throw ValidationError("constant '" + k.name + "' must be multi-valued in a multi-valued program");
    }
  }
  std::vector<int> declared(sig.constant_count(), 0);
  for (const auto& d : m.declarations()) {
    const auto& k = sig.constant(d.constant);
    if (declared[d.constant]++) {
      throw ValidationError("duplicate probabilistic declaration for '" + k.name + "'");
    }
    std::vector<bool> seen(k.domain.size(), false);
    double sum = 0.0;
    for (const auto& e : d.entries) {
      if (e.value >= k.domain.size()) {
        throw SignatureError("declaration for '" + k.name + "' names a value outside its domain");
      }
      if (seen[e.value]) {
        throw ValidationError("declaration for '" + k.name + "' repeats value '" +
                              k.domain[e.value] + "'");
      }
      seen[e.value] = true;
      if (!(e.p >= 0.0 && e.p <= 1.0)) {
        throw ValidationError("declaration for '" + k.name + "' has a probability outside [0, 1]");
      }
      sum += e.p;
    }
    for (std::size_t v = 0; v < seen.size(); ++v) {
      if (!seen[v]) {
        throw ValidationError("declaration for '" + k.name + "' omits value '" + k.domain[v] + "'");
      }
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("probabilities declared for '" + k.name + "' sum to " +
                            std::to_string(sum) + ", not 1");
    }
  }
  for (std::size_t r = 0; r < m.rules().size(); ++r) {
    const Rule& rule = m.rules()[r];
    if (has_implication(rule.head) || has_implication(rule.body)) {
      throw ValidationError("rule " + std::to_string(r) + " contains an implication");
    }
    lpmln::for_each_atom(rule.head, [&](lpmln::AtomId a) {
      ConstId c = sig.constant_of(a);
      if (declared[c]) {
        throw ValidationError("probabilistic constant '" + sig.constant(c).name +
                              "' occurs in the head of rule " + std::to_string(r));
      }
    });
    lpmln::for_each_atom(rule.body, [&](lpmln::AtomId a) { sig.constant_of(a); });
  }
}

}  // namespace detail

/// T(m) together with the origin of every emitted rule.
inline Translation translate_traced(const Program& m) {
  detail::validate(m);
  const Signature& sig = m.signature();
  Translation out{lpmln::WeightedProgram(sig), {}};
  auto emit = [&](lpmln::WeightedRule r, Origin o) {
    out.program.add(std::move(r));
    out.origins.push_back(o);
  };

  for (std::size_t d = 0; d < m.declarations().size(); ++d) {
    const auto& decl = m.declarations()[d];
    for (const auto& e : decl.entries) {
      Formula atom = Formula::atom(sig.atom(decl.constant, e.value));
      Origin o{Origin::Kind::Declaration, d};
      if (e.p == 1.0) {
        emit(lpmln::hard_rule(atom), o);
      } else if (e.p == 0.0) {
        emit(lpmln::constraint(atom), o);
      } else {
        emit(lpmln::soft_rule(std::log(e.p), atom), o);
      }
    }
  }
  for (std::size_t r = 0; r < m.rules().size(); ++r) {
    const Rule& rule = m.rules()[r];
    emit(lpmln::hard_rule(lpmln::implies(rule.body, rule.head)), {Origin::Kind::Rule, r});
  }
  for (ConstId c = 0; c < sig.constant_count(); ++c) {
    const auto& k = sig.constant(c);
    const auto n = static_cast<ValueIndex>(k.domain.size());
    // Each unordered pair once; the ordered duplicates are the same rule.
    for (ValueIndex x = 0; x < n; ++x) {
      for (ValueIndex y = x + 1; y < n; ++y) {
        emit(lpmln::constraint(lpmln::conj(Formula::atom(sig.atom(c, x)),
                                           Formula::atom(sig.atom(c, y)))),
             {Origin::Kind::Uniqueness, c});
      }
    }
    std::vector<Formula> values;
    for (ValueIndex v = 0; v < n; ++v) values.push_back(Formula::atom(sig.atom(c, v)));
    emit(lpmln::constraint(lpmln::neg(lpmln::disj(std::move(values)))),
         {Origin::Kind::Existence, c});
  }
  return out;
}

inline lpmln::WeightedProgram translate_mvpp(const Program& m) {
  return translate_traced(m).program;
}

}  // namespace pbcplus::mvpp
