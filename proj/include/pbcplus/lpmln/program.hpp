#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pbcplus/lpmln/formula.hpp"
#include "pbcplus/lpmln/signature.hpp"

namespace pbcplus::lpmln {

class RuleWeight {
 public:
  static RuleWeight soft(double w) {
    if (!std::isfinite(w)) throw ValidationError("soft rule weight must be finite");
    return RuleWeight(false, w);
  }
  static RuleWeight hard() { return RuleWeight(true, 0.0); }

  bool is_hard() const { return hard_; }
  double value() const { return value_; }

  friend bool operator==(const RuleWeight&, const RuleWeight&) = default;

 private:
  RuleWeight(bool hard, double value) : hard_(hard), value_(value) {}
  bool hard_;
  double value_;
};

struct WeightedRule {
  RuleWeight weight;
  Formula formula;  // Head <- Body is stored as Body -> Head
};

inline WeightedRule hard_rule(Formula f) { return {RuleWeight::hard(), std::move(f)}; }
inline WeightedRule soft_rule(double w, Formula f) { return {RuleWeight::soft(w), std::move(f)}; }

/// Hard constraint `false <- body`.
inline WeightedRule constraint(Formula body) {
  return hard_rule(implies(std::move(body), Formula::bottom()));
}

class WeightedProgram {
 public:
  WeightedProgram() = default;
  explicit WeightedProgram(Signature sig) : sig_(std::move(sig)) {}

  const Signature& signature() const { return sig_; }
  const std::vector<WeightedRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }

  std::size_t hard_count() const {
    std::size_t n = 0;
    for (const auto& r : rules_) n += r.weight.is_hard();
    return n;
  }

  void add(WeightedRule rule) {
    check_atoms(rule.formula);
    rules_.push_back(std::move(rule));
  }
  void add_hard(Formula f) { add(hard_rule(std::move(f))); }
  void add_soft(double w, Formula f) { add(soft_rule(w, std::move(f))); }

  /// Throws SignatureError if f mentions an atom outside the signature.
  void check_atoms(const Formula& f) const {
    for_each_atom(f, [&](AtomId a) {
      if (!sig_.contains(a)) {
        throw SignatureError("atom id " + std::to_string(a) + " is outside the program signature");
      }
    });
  }

 private:
  Signature sig_;
  std::vector<WeightedRule> rules_;
};

/// Unnormalized weight in the alpha -> infinity limit: hard rules count
/// first, soft weights break ties.
struct Weight2 {
  std::size_t hard_count = 0;
  double soft_sum = 0.0;

  friend bool operator==(const Weight2&, const Weight2&) = default;
  friend std::partial_ordering operator<=>(const Weight2& a, const Weight2& b) {
    if (auto c = a.hard_count <=> b.hard_count; c != 0) return c;
    return a.soft_sum <=> b.soft_sum;
  }
};

}  // namespace pbcplus::lpmln
