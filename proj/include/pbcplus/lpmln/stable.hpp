#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/formula.hpp"
#include "pbcplus/lpmln/interpretation.hpp"
#include "pbcplus/lpmln/program.hpp"

namespace pbcplus::lpmln {

/// Reduct of f relative to i: every maximal subformula false in i becomes
/// false. {F} is read as F | not F. The result is simplified with the
/// usual top/bottom identities, so it never contains negation.
inline Formula reduct(const Formula& f, const Interpretation& i) {
  if (!i.satisfies(f)) return Formula::bottom();
  switch (f.kind()) {
    case Connective::Top:
    case Connective::Atom:
      return f;
    case Connective::Bottom:
      return Formula::bottom();
    case Connective::Not:
      return Formula::top();
    case Connective::Choice:
      // F | not F: whichever disjunct is true in i survives.
      return i.satisfies(f.child()) ? reduct(f.child(), i) : Formula::top();
    case Connective::And: {
      std::vector<Formula> kids;
      for (const auto& c : f.children()) {
        Formula r = reduct(c, i);
        if (!r.is_top()) kids.push_back(std::move(r));
      }
      return conj(std::move(kids));
    }
    case Connective::Or: {
      std::vector<Formula> kids;
      for (const auto& c : f.children()) {
        Formula r = reduct(c, i);
        if (r.is_top()) return r;
        if (!r.is_bottom()) kids.push_back(std::move(r));
      }
      return disj(std::move(kids));
    }
    case Connective::Implies: {
      Formula body = reduct(f.child(0), i);
      if (body.is_bottom()) return Formula::top();
      Formula head = reduct(f.child(1), i);
      if (head.is_top()) return head;
      if (body.is_top()) return head;
      return implies(std::move(body), std::move(head));
    }
  }
  return f;
}

struct StableOptions {
  /// Subsets tried by the exhaustive minimality check used for reducts
  /// that are not Horn.
  std::uint64_t max_candidates = std::uint64_t{1} << 24;
};

namespace detail {

/// Definite clauses distilled from a reduct. `ok` is false when some part
/// carries a genuine disjunction.
struct HornClauses {
  struct Clause {
    std::vector<AtomId> body;
    AtomId head;
  };
  std::vector<Clause> clauses;
  bool ok = true;
};

using Terms = std::vector<std::vector<AtomId>>;

constexpr std::size_t kMaxTerms = 4096;

// Body in disjunctive normal form. Returns false if it cannot be
// represented (nested implication or blow-up).
inline bool body_terms(const Formula& f, Terms& out) {
  switch (f.kind()) {
    case Connective::Top:
      out = {{}};
      return true;
    case Connective::Bottom:
      out.clear();
      return true;
    case Connective::Atom:
      out = {{f.atom_id()}};
      return true;
    case Connective::Or: {
      out.clear();
      for (const auto& c : f.children()) {
        Terms t;
        if (!body_terms(c, t)) return false;
        out.insert(out.end(), t.begin(), t.end());
        if (out.size() > kMaxTerms) return false;
      }
      return true;
    }
    case Connective::And: {
      out = {{}};
      for (const auto& c : f.children()) {
        Terms t;
        if (!body_terms(c, t)) return false;
        Terms next;
        if (out.size() * t.size() > kMaxTerms) return false;
        for (const auto& a : out) {
          for (const auto& b : t) {
            auto merged = a;
            merged.insert(merged.end(), b.begin(), b.end());
            next.push_back(std::move(merged));
          }
        }
        out = std::move(next);
      }
      return true;
    }
    default:
      return false;
  }
}

inline void head_clauses(const Formula& f, const Terms& body, HornClauses& out) {
  if (!out.ok) return;
  switch (f.kind()) {
    case Connective::Top:
    case Connective::Bottom:
      // Constraints never matter here: i satisfies the reduct, and the
      // least model of the definite part is contained in i.
      return;
    case Connective::Atom:
      for (const auto& t : body) out.clauses.push_back({t, f.atom_id()});
      return;
    case Connective::And:
      for (const auto& c : f.children()) head_clauses(c, body, out);
      return;
    case Connective::Implies: {
      Terms inner;
      if (!body_terms(f.child(0), inner)) {
        out.ok = false;
        return;
      }
      Terms combined;
      if (body.size() * inner.size() > kMaxTerms) {
        out.ok = false;
        return;
      }
      for (const auto& a : body) {
        for (const auto& b : inner) {
          auto merged = a;
          merged.insert(merged.end(), b.begin(), b.end());
          combined.push_back(std::move(merged));
        }
      }
      head_clauses(f.child(1), combined, out);
      return;
    }
    default:
      out.ok = false;
      return;
  }
}

// Clauses of the reduct read directly off a formula i satisfies, without
// building the reduct. Returns false where the reduct is not Horn or the
// shape is not covered; callers then take the general route.
inline bool reduct_body(const Formula& f, const Interpretation& i, Terms& out) {
  switch (f.kind()) {
    case Connective::Top:
    case Connective::Not:
      out = {{}};
      return true;
    case Connective::Atom:
      out = {{f.atom_id()}};
      return true;
    case Connective::Choice:
      if (i.satisfies(f.child())) return reduct_body(f.child(), i, out);
      out = {{}};
      return true;
    case Connective::Or: {
      out.clear();
      for (const auto& c : f.children()) {
        if (!i.satisfies(c)) continue;
        Terms t;
        if (!reduct_body(c, i, t)) return false;
        out.insert(out.end(), t.begin(), t.end());
        if (out.size() > kMaxTerms) return false;
      }
      return true;
    }
    case Connective::And: {
      out = {{}};
      for (const auto& c : f.children()) {
        Terms t;
        if (!reduct_body(c, i, t)) return false;
        if (t.size() == 1 && t.front().empty()) continue;
        if (out.size() * t.size() > kMaxTerms) return false;
        Terms next;
        for (const auto& a : out) {
          for (const auto& b : t) {
            auto merged = a;
            merged.insert(merged.end(), b.begin(), b.end());
            next.push_back(std::move(merged));
          }
        }
        out = std::move(next);
      }
      return true;
    }
    default:
      return false;
  }
}

inline bool reduct_head(const Formula& f, const Interpretation& i, const Terms& body, HornClauses& out) {
  switch (f.kind()) {
    case Connective::Top:
    case Connective::Bottom:
    case Connective::Not:
      return true;
    case Connective::Atom:
      if (i.test(f.atom_id())) {
        for (const auto& t : body) out.clauses.push_back({t, f.atom_id()});
      }
      return true;
    case Connective::Choice:
      return !i.satisfies(f.child()) || reduct_head(f.child(), i, body, out);
    case Connective::And:
      for (const auto& c : f.children()) {
        if (!reduct_head(c, i, body, out)) return false;
      }
      return true;
    case Connective::Or: {
      const Formula* only = nullptr;
      for (const auto& c : f.children()) {
        if (!i.satisfies(c)) continue;
        if (only) return false;
        only = &c;
      }
      return !only || reduct_head(*only, i, body, out);
    }
    case Connective::Implies: {
      if (!i.satisfies(f.child(0))) return true;
      Terms inner;
      if (!reduct_body(f.child(0), i, inner)) return false;
      if (body.size() * inner.size() > kMaxTerms) return false;
      Terms combined;
      for (const auto& a : body) {
        for (const auto& b : inner) {
          auto merged = a;
          merged.insert(merged.end(), b.begin(), b.end());
          combined.push_back(std::move(merged));
        }
      }
      return reduct_head(f.child(1), i, combined, out);
    }
  }
  return false;
}

inline bool is_constraint(const Formula& f) {
  return f.kind() == Connective::Implies && f.child(1).is_bottom();
}

// Least model of the definite clauses, by counting propagation.
inline Interpretation least_model(std::size_t atom_count, const HornClauses& h) {
  Interpretation m(atom_count);
  std::vector<std::size_t> missing(h.clauses.size());
  std::vector<std::vector<std::size_t>> watch(atom_count);
  std::vector<AtomId> queue;
  for (std::size_t k = 0; k < h.clauses.size(); ++k) {
    auto body = h.clauses[k].body;
    std::sort(body.begin(), body.end());
    body.erase(std::unique(body.begin(), body.end()), body.end());
    missing[k] = body.size();
    for (AtomId a : body) watch[a].push_back(k);
    if (body.empty() && !m.test(h.clauses[k].head)) {
      m.set(h.clauses[k].head);
      queue.push_back(h.clauses[k].head);
    }
  }
  while (!queue.empty()) {
    AtomId a = queue.back();
    queue.pop_back();
    for (std::size_t k : watch[a]) {
      if (--missing[k] == 0) {
        AtomId head = h.clauses[k].head;
        if (!m.test(head)) {
          m.set(head);
          queue.push_back(head);
        }
      }
    }
  }
  return m;
}

inline bool minimal_by_subsets(const std::vector<Formula>& reducts, const Interpretation& i,
                               const StableOptions& opt) {
  std::vector<AtomId> on = i.true_atoms();
  if (on.size() >= 63 || (std::uint64_t{1} << on.size()) > opt.max_candidates) {
    throw CapacityError("minimality check over " + std::to_string(on.size()) + " true atoms",
                        opt.max_candidates);
  }
  const std::uint64_t full = (std::uint64_t{1} << on.size()) - 1;
  for (std::uint64_t mask = 0; mask < full; ++mask) {
    Interpretation j(i.size());
    for (std::size_t k = 0; k < on.size(); ++k) {
      if ((mask >> k) & 1u) j.set(on[k]);
    }
    bool model = true;
    for (const auto& r : reducts) {
      if (!j.satisfies(r)) {
        model = false;
        break;
      }
    }
    if (model) return false;
  }
  return true;
}

}  // namespace detail

/// Whether i is a minimal model of the reduct of the given formulas, all
/// of which i must satisfy.
inline bool is_stable_for(const std::vector<Formula>& satisfied, const Interpretation& i,
                          const StableOptions& opt = {}) {
  {
    detail::HornClauses direct;
    const detail::Terms unit{{}};
    bool ok = true;
    for (const auto& f : satisfied) {
      if (detail::is_constraint(f)) continue;
      if (!detail::reduct_head(f, i, unit, direct)) {
        ok = false;
        break;
      }
    }
    if (ok) return detail::least_model(i.size(), direct) == i;
  }
  detail::HornClauses h;
  std::vector<Formula> reducts;
  reducts.reserve(satisfied.size());
  for (const auto& f : satisfied) {
    if (detail::is_constraint(f)) continue;
    Formula r = reduct(f, i);
    if (r.is_top()) continue;
    detail::head_clauses(r, {{}}, h);
    reducts.push_back(std::move(r));
  }
  if (h.ok) return detail::least_model(i.size(), h) == i;
  return detail::minimal_by_subsets(reducts, i, opt);
}

inline void check_interpretation(const WeightedProgram& p, const Interpretation& i) {
  if (i.size() != p.signature().atom_count()) {
    throw SignatureError("interpretation has " + std::to_string(i.size()) +
                         " atoms, the program signature has " +
                         std::to_string(p.signature().atom_count()));
  }
}

/// Stable model of the rules of p that i satisfies.
inline bool is_stable_model(const WeightedProgram& p, const Interpretation& i,
                            const StableOptions& opt = {}) {
  check_interpretation(p, i);
  std::vector<Formula> sat;
  for (const auto& r : p.rules()) {
    if (i.satisfies(r.formula)) sat.push_back(r.formula);
  }
  return is_stable_for(sat, i, opt);
}

/// Weight of i, or nullopt when i is not a stable model of p.
inline std::optional<Weight2> weight_of(const WeightedProgram& p, const Interpretation& i,
                                        const StableOptions& opt = {}) {
  check_interpretation(p, i);
  std::vector<Formula> sat;
  Weight2 w;
  for (const auto& r : p.rules()) {
    if (!i.satisfies(r.formula)) continue;
    sat.push_back(r.formula);
    if (r.weight.is_hard()) {
      ++w.hard_count;
    } else {
      w.soft_sum += r.weight.value();
    }
  }
  if (!is_stable_for(sat, i, opt)) return std::nullopt;
  return w;
}

}  // namespace pbcplus::lpmln
