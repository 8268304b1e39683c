#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <utility>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/formula.hpp"
#include "pbcplus/lpmln/interpretation.hpp"
#include "pbcplus/lpmln/program.hpp"
#include "pbcplus/lpmln/stable.hpp"

namespace pbcplus::lpmln {

struct EnumerateOptions {
  /// Cap on complete candidate interpretations examined.
  std::uint64_t max_candidates = std::uint64_t{1} << 24;
  unsigned threads = 1;
  /// Only keep models satisfying every hard rule; if there are none the
  /// result is empty instead of falling back to fewer hard rules.
  bool require_hard_models = false;
  Formula evidence;
  /// Constants to branch on first, in this order.
  std::vector<ConstId> order;
};

struct StableModel {
  Interpretation interpretation;
  Weight2 weight;
};

namespace detail {

inline void sort_models(const Signature& sig, std::vector<StableModel>& models) {
  InterpretationOrder less(sig);
  std::sort(models.begin(), models.end(), [&](const StableModel& a, const StableModel& b) {
    return less(a.interpretation, b.interpretation);
  });
}

/// Depth-first search over interpretations that satisfy every hard rule
/// and the evidence, pruned by three-valued evaluation and by support: a
/// true atom of a stable model must occur in the head of some rule whose
/// body can still hold.
class HardModelSearch {
 public:
  HardModelSearch(const WeightedProgram& p, const EnumerateOptions& opt,
                  std::atomic<std::uint64_t>& leaves)
      : p_(&p), opt_(&opt), leaves_(&leaves) {
    const Signature& sig = p.signature();
    const std::size_t n = sig.atom_count();
    truth_.assign(n, Truth::Unknown);
    rules_of_.resize(n);
    hard_of_.resize(n);
    head_of_.resize(n);
    evidence_atom_.assign(n, false);

    for (std::size_t r = 0; r < p.rules().size(); ++r) {
      const auto& rule = p.rules()[r];
      const Formula& f = rule.formula;
      full_.emplace_back(f);
      const bool imp = f.kind() == Connective::Implies;
      body_.emplace_back(imp ? f.child(0) : Formula::top());
      // Hard rules mentioning atoms are settled by consistent() once the
      // last of their atoms is assigned.
      settled_.push_back(rule.weight.is_hard() && !atoms_of(f).empty());
      for (AtomId a : atoms_of(f)) {
        rules_of_[a].push_back(r);
        if (rule.weight.is_hard()) hard_of_[a].push_back(r);
      }
      flat_.push_back(flatten(f));
      auto heads = atoms_of(imp ? f.child(1) : f);
      for (AtomId a : heads) head_of_[a].push_back(r);
      heads_.push_back(std::move(heads));
    }
    stamp_.assign(p.rules().size(), 0);

    evidence_ = CompiledFormula(opt.evidence);
    for (AtomId a : atoms_of(opt.evidence)) evidence_atom_[a] = true;

    build_groups();
  }

  std::size_t depth() const { return groups_.size(); }

  /// Calls visit(truth) for every consistent assignment of the first k
  /// groups.
  template <class Visit>
  void prefixes(std::size_t k, Visit&& visit) {
    walk(0, k, visit);
  }

  template <class Visit>
  void run_from(const std::vector<Truth>& prefix, std::size_t k, Visit&& visit) {
    truth_ = prefix;
    auto leaf = [&](const std::vector<Truth>&) { finish(visit); };
    walk(k, groups_.size(), leaf);
  }

  template <class Visit>
  void run(Visit&& visit) {
    auto leaf = [&](const std::vector<Truth>&) { finish(visit); };
    walk(0, groups_.size(), leaf);
  }

 private:
  struct Group {
    std::vector<AtomId> atoms;
    bool exactly_one;  // otherwise a single free Boolean atom
  };

  void build_groups() {
    const Signature& sig = p_->signature();
    std::set<std::pair<AtomId, AtomId>> pairs;
    std::set<std::vector<AtomId>> exists;
    for (const auto& rule : p_->rules()) {
      if (!rule.weight.is_hard() || !is_constraint(rule.formula)) continue;
      const Formula& b = rule.formula.child(0);
      if (b.kind() == Connective::And && b.children().size() == 2 &&
          b.child(0).kind() == Connective::Atom && b.child(1).kind() == Connective::Atom) {
        AtomId x = b.child(0).atom_id();
        AtomId y = b.child(1).atom_id();
        pairs.insert({std::min(x, y), std::max(x, y)});
      } else if (b.kind() == Connective::Not) {
        const Formula& d = b.child();
        bool flat = d.kind() == Connective::Atom || d.kind() == Connective::Or;
        for (const auto& c : d.children()) flat = flat && c.kind() == Connective::Atom;
        if (flat) exists.insert(atoms_of(d));
      }
    }
    auto grouped = [&](const Constant& k) {
      if (k.propositional) return false;
      std::vector<AtomId> atoms;
      for (std::size_t j = 0; j < k.domain.size(); ++j) {
        atoms.push_back(static_cast<AtomId>(k.first_atom + j));
      }
      if (!exists.count(atoms)) return false;
      for (std::size_t x = 0; x < atoms.size(); ++x) {
        for (std::size_t y = x + 1; y < atoms.size(); ++y) {
          if (!pairs.count({atoms[x], atoms[y]})) return false;
        }
      }
      return true;
    };

    std::vector<bool> placed(sig.constant_count(), false);
    std::vector<ConstId> order;
    for (ConstId c : opt_->order) {
      if (c < sig.constant_count() && !placed[c]) {
        placed[c] = true;
        order.push_back(c);
      }
    }
    for (ConstId c = 0; c < sig.constant_count(); ++c) {
      if (!placed[c]) order.push_back(c);
    }
    for (ConstId c : order) {
      const Constant& k = sig.constant(c);
      if (grouped(k)) {
        Group g{{}, true};
        for (std::size_t j = 0; j < k.domain.size(); ++j) {
          g.atoms.push_back(static_cast<AtomId>(k.first_atom + j));
        }
        groups_.push_back(std::move(g));
      } else {
        for (std::size_t j = 0; j < k.atom_count(); ++j) {
          groups_.push_back({{static_cast<AtomId>(k.first_atom + j)}, false});
        }
      }
    }
  }

  template <class Visit>
  void walk(std::size_t d, std::size_t stop, Visit& visit) {
    if (d == stop) {
      visit(truth_);
      return;
    }
    const Group& g = groups_[d];
    const std::size_t choices = g.exactly_one ? g.atoms.size() : 2;
    for (std::size_t v = 0; v < choices; ++v) {
      if (g.exactly_one) {
        for (std::size_t j = 0; j < g.atoms.size(); ++j) truth_[g.atoms[j]] = truth_of(j == v);
      } else {
        truth_[g.atoms[0]] = truth_of(v == 1);
      }
      if (consistent(g.atoms)) walk(d + 1, stop, visit);
    }
    for (AtomId a : g.atoms) truth_[a] = Truth::Unknown;
  }

  bool supported(AtomId a) const {
    for (std::size_t r : head_of_[a]) {
      if (full_[r].evaluate(truth_) != Truth::False && body_[r].evaluate(truth_) != Truth::False) {
        return true;
      }
    }
    return false;
  }

  bool consistent(const std::vector<AtomId>& changed) {
    ++generation_;
    for (AtomId x : changed) {
      for (std::size_t r : hard_of_[x]) {
        if (stamp_[r] == generation_) continue;
        stamp_[r] = generation_;
        if (full_[r].evaluate(truth_) == Truth::False) return false;
      }
    }
    for (AtomId x : changed) {
      if (evidence_atom_[x]) {
        if (evidence_.evaluate(truth_) == Truth::False) return false;
        break;
      }
    }
    for (AtomId x : changed) {
      if (truth_[x] == Truth::True && !supported(x)) return false;
      for (std::size_t r : rules_of_[x]) {
        for (AtomId y : heads_[r]) {
          if (y != x && truth_[y] == Truth::True && !supported(y)) return false;
        }
      }
    }
    return true;
  }

  // `pos -> head` rules whose body is a conjunction of atoms and negated
  // formulas, with an atom, {atom} or false as head. The reduct of such a
  // rule is the definite clause pos -> head when i satisfies the body and
  // the head atom, and trivial otherwise.
  struct Flat {
    std::vector<AtomId> pos;
    std::optional<AtomId> head;
  };

  static std::optional<Flat> flatten(const Formula& f) {
    Flat out;
    const Formula* head = &f;
    if (f.kind() == Connective::Implies) {
      head = &f.child(1);
      const Formula& b = f.child(0);
      auto literal = [&](const Formula& x) {
        if (x.kind() == Connective::Atom) {
          out.pos.push_back(x.atom_id());
          return true;
        }
        return x.kind() == Connective::Not || x.kind() == Connective::Top;
      };
      if (b.kind() == Connective::And) {
        for (const auto& c : b.children()) {
          if (!literal(c)) return std::nullopt;
        }
      } else if (!literal(b)) {
        return std::nullopt;
      }
    }
    const Formula* h = head->kind() == Connective::Choice ? &head->child() : head;
    if (h->kind() == Connective::Atom) {
      out.head = h->atom_id();
    } else if (h->kind() != Connective::Bottom && h->kind() != Connective::Top) {
      return std::nullopt;
    }
    return out;
  }

  // Least model of the collected clauses equals i.
  bool least_is(const Interpretation& i) {
    Interpretation m(i.size());
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [body, head] : clauses_) {
        if (m.test(head)) continue;
        bool fire = true;
        for (AtomId a : *body) {
          if (!m.test(a)) {
            fire = false;
            break;
          }
        }
        if (fire) {
          m.set(head);
          changed = true;
        }
      }
      for (const auto& c : extra_.clauses) {
        if (m.test(c.head)) continue;
        bool fire = true;
        for (AtomId a : c.body) fire = fire && m.test(a);
        if (fire) {
          m.set(c.head);
          changed = true;
        }
      }
    }
    return m == i;
  }

  template <class Visit>
  void finish(Visit& visit) {
    if (leaves_->fetch_add(1) + 1 > opt_->max_candidates) {
      throw CapacityError("stable model search examined too many candidate interpretations",
                          opt_->max_candidates);
    }
    Interpretation i(truth_.size());
    for (AtomId a = 0; a < truth_.size(); ++a) {
      if (truth_[a] == Truth::True) i.set(a);
    }
    Weight2 w;
    clauses_.clear();
    extra_ = {};
    bool direct = true;
    const Terms unit{{}};
    const auto& rules = p_->rules();
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (!settled_[r] && full_[r].evaluate(truth_) != Truth::True) {
        if (rules[r].weight.is_hard()) return;  // an atomless hard rule
        continue;
      }
      if (rules[r].weight.is_hard()) {
        ++w.hard_count;
      } else {
        w.soft_sum += rules[r].weight.value();
      }
      if (!direct) continue;
      if (const auto& fl = flat_[r]) {
        if (fl->head && truth_[*fl->head] == Truth::True && body_[r].evaluate(truth_) == Truth::True) {
          clauses_.push_back({&fl->pos, *fl->head});
        }
      } else if (!is_constraint(rules[r].formula) && !reduct_head(rules[r].formula, i, unit, extra_)) {
        direct = false;
      }
    }
    if (direct) {
      if (!least_is(i)) return;
      visit(i, w);
      return;
    }
    slow_finish(i, w, visit);
  }

  template <class Visit>
  void slow_finish(const Interpretation& i, const Weight2& w, Visit& visit) {
    std::vector<Formula> sat;
    for (const auto& rule : p_->rules()) {
      if (i.satisfies(rule.formula)) sat.push_back(rule.formula);
    }
    if (!is_stable_for(sat, i, StableOptions{opt_->max_candidates})) return;
    visit(i, w);
  }

  const WeightedProgram* p_;
  const EnumerateOptions* opt_;
  std::atomic<std::uint64_t>* leaves_;

  std::vector<CompiledFormula> full_;
  std::vector<CompiledFormula> body_;
  std::vector<std::optional<Flat>> flat_;
  std::vector<bool> settled_;
  std::vector<std::pair<const std::vector<AtomId>*, AtomId>> clauses_;
  HornClauses extra_;
  std::vector<std::vector<AtomId>> heads_;
  std::vector<std::vector<std::size_t>> rules_of_;
  std::vector<std::vector<std::size_t>> hard_of_;
  std::vector<std::vector<std::size_t>> head_of_;
  CompiledFormula evidence_;
  std::vector<bool> evidence_atom_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t generation_ = 0;

  std::vector<Group> groups_;
  std::vector<Truth> truth_;
};

inline void check_brute_force(std::size_t atoms, std::uint64_t cap) {
  if (atoms >= 63 || (std::uint64_t{1} << atoms) > cap) {
    throw CapacityError("exhaustive search over " + std::to_string(atoms) + " atoms", cap);
  }
}

// Every stable model over the full atom space, any hard count.
inline std::vector<StableModel> brute_force(const WeightedProgram& p, const EnumerateOptions& opt) {
  const std::size_t n = p.signature().atom_count();
  check_brute_force(n, opt.max_candidates);
  std::vector<StableModel> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    Interpretation i(n);
    for (std::size_t a = 0; a < n; ++a) {
      if ((mask >> a) & 1u) i.set(static_cast<AtomId>(a));
    }
    if (!i.satisfies(opt.evidence)) continue;
    if (auto w = weight_of(p, i, StableOptions{opt.max_candidates})) out.push_back({i, *w});
  }
  return out;
}

}  // namespace detail

/// Streams every evidence-satisfying stable model that satisfies all hard
/// rules, in search order. Single-threaded.
template <class Visit>
void for_each_hard_model(const WeightedProgram& p, const EnumerateOptions& opt, Visit&& visit) {
  p.check_atoms(opt.evidence);
  std::atomic<std::uint64_t> leaves{0};
  detail::HardModelSearch search(p, opt, leaves);
  search.run([&](const Interpretation& i, const Weight2& w) { visit(i, w); });
}

inline std::vector<StableModel> enumerate_hard_models(const WeightedProgram& p,
                                                      const EnumerateOptions& opt) {
  p.check_atoms(opt.evidence);
  std::atomic<std::uint64_t> leaves{0};
  std::vector<StableModel> out;
  if (opt.threads <= 1) {
    detail::HardModelSearch search(p, opt, leaves);
    search.run([&](const Interpretation& i, const Weight2& w) { out.push_back({i, w}); });
    detail::sort_models(p.signature(), out);
    return out;
  }

  // Split on a prefix of the branching order; each prefix is solved
  // independently and the pieces are merged in prefix order.
  detail::HardModelSearch root(p, opt, leaves);
  std::vector<std::vector<Truth>> prefixes;
  std::size_t k = 0;
  while (k < root.depth()) {
    ++k;
    prefixes.clear();
    root.prefixes(k, [&](const std::vector<Truth>& t) { prefixes.push_back(t); });
    if (prefixes.size() >= 4 * static_cast<std::size_t>(opt.threads)) break;
  }
  if (root.depth() == 0) prefixes.assign(1, {});
  std::vector<std::vector<StableModel>> parts(prefixes.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    detail::HardModelSearch search(p, opt, leaves);
    for (std::size_t j = next++; j < prefixes.size(); j = next++) {
      try {
        search.run_from(prefixes[j], k, [&](const Interpretation& i, const Weight2& w) {
          parts[j].push_back({i, w});
        });
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = prefixes.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < opt.threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  for (auto& part : parts) {
    for (auto& m : part) out.push_back(std::move(m));
  }
  detail::sort_models(p.signature(), out);
  return out;
}

/// The evidence-satisfying stable models of maximal hard count (the ones
/// that carry probability), each with its weight, in deterministic order.
inline std::vector<StableModel> enumerate_stable_models(const WeightedProgram& p,
                                                        const EnumerateOptions& opt = {}) {
  auto out = enumerate_hard_models(p, opt);
  if (!out.empty() || opt.require_hard_models) return out;
  auto all = detail::brute_force(p, opt);
  std::size_t best = 0;
  for (const auto& m : all) best = std::max(best, m.weight.hard_count);
  for (auto& m : all) {
    if (m.weight.hard_count == best) out.push_back(std::move(m));
  }
  detail::sort_models(p.signature(), out);
  return out;
}

/// All of SM[p] regardless of hard count. Exhaustive over the atom space.
inline std::vector<StableModel> enumerate_all_stable_models(const WeightedProgram& p,
                                                            const EnumerateOptions& opt = {}) {
  p.check_atoms(opt.evidence);
  auto out = detail::brute_force(p, opt);
  detail::sort_models(p.signature(), out);
  return out;
}

struct Masses {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Pr(query) over models of equal hard count, accumulated in log space.
inline Masses probability_of(const std::vector<StableModel>& models, const Formula& query) {
  if (models.empty()) throw ConditioningError("no stable model satisfies the evidence");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& m : models) top = std::max(top, m.weight.soft_sum);
  double num = 0.0;
  double den = 0.0;
  for (const auto& m : models) {
    double w = std::exp(m.weight.soft_sum - top);
    den += w;
    if (m.interpretation.satisfies(query)) num += w;
  }
  const double scale = std::exp(top);
  return {num / den, num * scale, den * scale};
}

inline double probability(const WeightedProgram& p, const Formula& query,
                          const Formula& evidence = Formula::top(), EnumerateOptions opt = {}) {
  p.check_atoms(query);
  opt.evidence = evidence;
  return probability_of(enumerate_stable_models(p, opt), query).value;
}

/// Models whose soft sum is within 1e-12 of the best.
inline std::vector<StableModel> most_probable(const std::vector<StableModel>& models) {
  if (models.empty()) throw ConditioningError("no stable model satisfies the evidence");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& m : models) top = std::max(top, m.weight.soft_sum);
  std::vector<StableModel> out;
  for (const auto& m : models) {
    if (m.weight.soft_sum >= top - 1e-12) out.push_back(m);
  }
  return out;
}

inline std::vector<Interpretation> map_models(const WeightedProgram& p,
                                              const Formula& evidence = Formula::top(),
                                              EnumerateOptions opt = {}) {
  opt.evidence = evidence;
  std::vector<Interpretation> out;
  for (auto& m : most_probable(enumerate_stable_models(p, opt))) {
    out.push_back(std::move(m.interpretation));
  }
  return out;
}

}  // namespace pbcplus::lpmln
