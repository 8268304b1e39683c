#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/enumerate.hpp"
#include "pbcplus/pbc/query_spec.hpp"
#include "pbcplus/transition.hpp"
#include "pbcplus/translator.hpp"

namespace pbcplus {

enum class Engine { Auto, Fast, Enumeration };
enum class PlanMode { Map, Argmax };

inline const char* name_of(Engine e) {
  switch (e) {
    case Engine::Auto:
      return "auto";
    case Engine::Fast:
      return "fast";
    case Engine::Enumeration:
      return "enumeration";
  }
  return "?";
}

inline const char* name_of(PlanMode m) { return m == PlanMode::Map ? "map" : "argmax"; }

struct QueryOptions {
  Engine engine = Engine::Auto;
  PlanMode plan_mode = PlanMode::Map;
  TransitionOptions limits;
};

/// Action facts i:a / i:~a and observations i:c=v.
struct Evidence {
  struct Act {
    unsigned step;
    ConstId action;
    bool positive;
  };
  struct Obs {
    unsigned step;
    AtomId atom;  // fluent atom of the base signature
  };
  std::vector<Act> acts;
  std::vector<Obs> obs;

  Formula formula(const TimedSignature& ts) const {
    const PbcSignature& sig = ts.base();
    std::vector<Formula> parts;
    for (const auto& a : acts) {
      if (sig.kind(a.action) != ConstKind::Action) throw UsageError("'" + sig.name(a.action) + "' is not an action");
      if (a.step >= ts.steps()) throw UsageError("action fact step " + std::to_string(a.step) + " out of range");
      ValueIndex v = a.positive ? sig.true_value(a.action) : sig.false_value(a.action);
      parts.push_back(Formula::atom(ts.atom(a.step, sig.base().atom(a.action, v))));
    }
    for (const auto& o : obs) {
      if (!sig.is_fluent(sig.base().constant_of(o.atom))) throw UsageError("observations must be fluent atoms");
      if (o.step > ts.steps()) throw UsageError("observation step " + std::to_string(o.step) + " out of range");
      parts.push_back(Formula::atom(ts.atom(o.step, o.atom)));
    }
    return lpmln::conj(std::move(parts));
  }
};

struct MapResult {
  std::vector<Interpretation> models;
  double probability = 0.0;
};

struct PlanResult {
  std::vector<Assignment> actions;  // per step, over Analysis::actions()
  double probability = 0.0;         // Pr(goal | init, actions)
  PlanMode mode = PlanMode::Map;
  std::string note;
};

struct ArgmaxResult {
  std::vector<ConstId> constants;  // timed constants
  std::vector<Assignment> best;    // tied assignments, deterministic order
  double probability = 0.0;
};

struct DiagnoseResult {
  struct Abnormality {
    unsigned step;
    ConstId fluent;  // base constant
  };
  std::vector<std::vector<Abnormality>> abnormal;  // per MAP model
  std::vector<Interpretation> models;
  double probability = 0.0;
};

namespace detail {

/// Depth-first search over paths of Tr(D,m) assembled from the single-step
/// tables of an Analysis. Exact for any description: every stable model of
/// Tr(D,m) is a chain of D_1 outcomes from a D_init state. Outcomes that
/// only differ in pf values are merged unless a formula mentions pf atoms.
class PathSearch {
 public:
  struct Row {
    std::size_t state;  // start state (init rows) or successor
    std::size_t event = 0;
    std::vector<std::size_t> choices;  // initpf or pf choice indices
    double mass = 0.0;
    double best = 0.0;
    std::vector<std::size_t> best_choices;
  };
  struct Path {
    std::size_t init;
    std::vector<std::size_t> steps;  // row index within rows_[from]
  };

  PathSearch(const Analysis& a, const TimedSignature& ts, bool keep_choices, std::uint64_t max_paths)
      : a_(&a), ts_(&ts), max_paths_(max_paths), truth_(ts.signature().atom_count(), lpmln::Truth::Unknown) {
    keep_ = keep_choices;
    auto merge = [&](std::vector<Row>& rows, Row r, std::size_t choice) {
      for (auto& x : rows) {
        if (!keep_ && x.state == r.state && x.event == r.event) {
          x.mass += r.mass;
          x.choices.push_back(choice);
          if (r.mass > x.best * (1 + 1e-12)) {
            x.best = r.mass;
            x.best_choices = {choice};
          } else if (std::abs(r.mass - x.best) <= 1e-12 * x.best) {
            x.best_choices.push_back(choice);
          }
          return;
        }
      }
      r.choices = {choice};
      r.best = r.mass;
      r.best_choices = {choice};
      rows.push_back(std::move(r));
    };
    for (const auto& i : a.initial()) merge(init_, Row{i.state, 0, {}, i.mass, 0, {}}, i.initpf);
    rows_.assign(a.states().size(), {});
    for (const auto& o : a.outcomes()) merge(rows_[o.from], Row{o.to, o.event, {}, o.mass, 0, {}}, o.pf);
  }

  /// visit(path, mass, best) for every path whose atoms satisfy evidence.
  template <class Visit>
  void run(const lpmln::CompiledFormula& evidence, Visit&& visit) {
    leaves_ = 0;
    Path path{0, std::vector<std::size_t>(ts_->steps())};
    for (std::size_t r = 0; r < init_.size(); ++r) {
      const Row& row = init_[r];
      if (keep_) put(0, a_->initpfs(), a_->initpf_choices()[row.choices.front()]);
      put(0, a_->fluents(), a_->states()[row.state]);
      if (evidence.evaluate(truth_) != lpmln::Truth::False) {
        path.init = r;
        descend(0, row.state, row.mass, row.best, evidence, path, visit);
      }
      clear(0, a_->initpfs());
      clear(0, a_->fluents());
    }
  }

  const std::vector<lpmln::Truth>& truth() const { return truth_; }
  const Row& init_row(std::size_t r) const { return init_[r]; }
  const Row& step_row(std::size_t from, std::size_t r) const { return rows_[from][r]; }

  /// Every full stable model on a path, taking the best choices of merged rows.
  std::vector<Interpretation> best_models(const Path& p) const {
    const auto& tsig = ts_->signature();
    std::vector<Interpretation> out{Interpretation(tsig.atom_count())};
    auto spread = [&](const std::vector<std::size_t>& choices, unsigned step, const std::vector<ConstId>& cs,
                      const std::vector<Assignment>& table) {
      std::vector<Interpretation> next;
      for (const auto& i : out) {
        for (std::size_t c : choices) {
          Interpretation j = i;
          for (std::size_t k = 0; k < cs.size(); ++k) j.assign(tsig, ts_->at(step, cs[k]), table[c][k]);
          next.push_back(std::move(j));
        }
      }
      out = std::move(next);
    };
    auto fix = [&](unsigned step, const std::vector<ConstId>& cs, const Assignment& a) {
      for (auto& i : out) {
        for (std::size_t k = 0; k < cs.size(); ++k) i.assign(tsig, ts_->at(step, cs[k]), a[k]);
      }
    };
    const Row& init = init_[p.init];
    spread(init.best_choices, 0, a_->initpfs(), a_->initpf_choices());
    fix(0, a_->fluents(), a_->states()[init.state]);
    std::size_t s = init.state;
    for (unsigned i = 0; i < ts_->steps(); ++i) {
      const Row& row = rows_[s][p.steps[i]];
      fix(i, a_->actions(), a_->events()[row.event]);
      spread(row.best_choices, i, a_->pfs(), a_->pf_choices());
      fix(i + 1, a_->fluents(), a_->states()[row.state]);
      s = row.state;
    }
    return out;
  }

  std::size_t end_state(const Path& p) const {
    std::size_t s = init_[p.init].state;
    for (unsigned i = 0; i < ts_->steps(); ++i) s = rows_[s][p.steps[i]].state;
    return s;
  }
  const Row& row_at(const Path& p, unsigned i) const {
    std::size_t s = init_[p.init].state;
    for (unsigned k = 0; k < i; ++k) s = rows_[s][p.steps[k]].state;
    return rows_[s][p.steps[i]];
  }

 private:
  template <class Visit>
  void descend(unsigned i, std::size_t s, double mass, double best, const lpmln::CompiledFormula& evidence,
               Path& path, Visit& visit) {
    if (i == ts_->steps()) {
      if (++leaves_ > max_paths_) throw CapacityError("paths exceed the cap", max_paths_);
      if (evidence.evaluate(truth_) == lpmln::Truth::True) visit(const_cast<const Path&>(path), mass, best);
      return;
    }
    const auto& rows = rows_[s];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Row& row = rows[r];
      put(i, a_->actions(), a_->events()[row.event]);
      if (keep_) put(i, a_->pfs(), a_->pf_choices()[row.choices.front()]);
      put(i + 1, a_->fluents(), a_->states()[row.state]);
      if (evidence.evaluate(truth_) != lpmln::Truth::False) {
        path.steps[i] = r;
        descend(i + 1, row.state, mass * row.mass, best * row.best, evidence, path, visit);
      }
    }
    clear(i, a_->actions());
    clear(i, a_->pfs());
    clear(i + 1, a_->fluents());
  }

  void put(unsigned step, const std::vector<ConstId>& cs, const Assignment& a) {
    const auto& tsig = ts_->signature();
    for (std::size_t k = 0; k < cs.size(); ++k) {
      auto tc = ts_->find(step, cs[k]);
      if (!tc) continue;
      const auto& c = tsig.constant(*tc);
      for (std::size_t v = 0; v < c.domain.size(); ++v) {
        truth_[c.first_atom + v] = v == a[k] ? lpmln::Truth::True : lpmln::Truth::False;
      }
    }
  }
  void clear(unsigned step, const std::vector<ConstId>& cs) {
    const auto& tsig = ts_->signature();
    for (ConstId c0 : cs) {
      auto tc = ts_->find(step, c0);
      if (!tc) continue;
      const auto& c = tsig.constant(*tc);
      for (std::size_t v = 0; v < c.domain.size(); ++v) truth_[c.first_atom + v] = lpmln::Truth::Unknown;
    }
  }

  const Analysis* a_;
  const TimedSignature* ts_;
  std::uint64_t max_paths_;
  std::uint64_t leaves_ = 0;
  bool keep_ = false;
  std::vector<lpmln::Truth> truth_;
  std::vector<Row> init_;
  std::vector<std::vector<Row>> rows_;
};

}  // namespace detail

/// Answers queries over Tr(D,m) of one description.
class Reasoner {
 public:
  Reasoner(const ActionDescription& d, unsigned m, QueryOptions opt = {})
      : desc_(prepare(d)), opt_(opt), ts_(desc_.signature, m) {
    if (opt_.engine == Engine::Auto) opt_.engine = Engine::Fast;
  }

  const ActionDescription& description() const { return desc_; }
  const TimedSignature& timed() const { return ts_; }
  unsigned steps() const { return ts_.steps(); }
  Engine engine() const { return opt_.engine; }

  const Analysis& analysis() const {
    if (!analysis_) analysis_ = std::make_shared<Analysis>(desc_, opt_.limits);
    return *analysis_;
  }

  /// Pr(query | evidence) with the masses behind it.
  lpmln::Masses probability(const Formula& query, const Formula& evidence = Formula::top()) const {
    if (opt_.engine == Engine::Enumeration) {
      return lpmln::probability_of(models(evidence), query);
    }
    auto search = fast(mentions_choice(query) || mentions_choice(evidence));
    lpmln::CompiledFormula ev(evidence);
    lpmln::CompiledFormula q(query);
    double num = 0.0;
    double den = 0.0;
    search->run(ev, [&](const detail::PathSearch::Path&, double mass, double) {
      den += mass;
      if (q.evaluate(search->truth()) == lpmln::Truth::True) num += mass;
    });
    if (den == 0.0) throw ConditioningError("no stable model satisfies the evidence");
    return {num / den, num, den};
  }

  /// Most probable stable models of Tr(D,m) given the evidence.
  MapResult map(const Formula& evidence = Formula::top()) const {
    MapResult out;
    if (opt_.engine == Engine::Enumeration) {
      auto all = models(evidence);
      auto masses = lpmln::probability_of(all, Formula::top());
      auto best = lpmln::most_probable(all);
      for (auto& m : best) out.models.push_back(m.interpretation);
      out.probability = std::exp(best.front().weight.soft_sum) / masses.denominator;
      return out;
    }
    auto search = fast(mentions_choice(evidence));
    lpmln::CompiledFormula ev(evidence);
    double den = 0.0;
    double top = -std::numeric_limits<double>::infinity();
    std::vector<detail::PathSearch::Path> best;
    search->run(ev, [&](const detail::PathSearch::Path& p, double mass, double b) {
      den += mass;
      double lb = std::log(b);
      if (lb > top + 1e-12) {
        top = lb;
        best.clear();
      }
      if (lb >= top - 1e-12) best.push_back(p);
    });
    if (den == 0.0) throw ConditioningError("no stable model satisfies the evidence");
    for (const auto& p : best) {
      for (auto& i : search->best_models(p)) {
        if (i.satisfies(evidence)) out.models.push_back(std::move(i));
      }
    }
    std::sort(out.models.begin(), out.models.end(), lpmln::InterpretationOrder(ts_.signature()));
    out.models.erase(std::unique(out.models.begin(), out.models.end()), out.models.end());
    out.probability = std::exp(top) / den;
    return out;
  }

  /// Most probable joint value of the timed constants mentioned in `target`.
  ArgmaxResult argmax(const Formula& target, const Formula& evidence = Formula::top()) const {
    ArgmaxResult out;
    const auto& tsig = ts_.signature();
    for (AtomId a : lpmln::atoms_of(target)) {
      ConstId c = tsig.constant_of(a);
      if (std::find(out.constants.begin(), out.constants.end(), c) == out.constants.end()) {
        out.constants.push_back(c);
      }
    }
    std::sort(out.constants.begin(), out.constants.end());
    std::map<Assignment, double> mass;
    double den = 0.0;
    auto add = [&](const Interpretation& i, double w) {
      Assignment key;
      for (ConstId c : out.constants) key.push_back(*i.value(tsig, c));
      mass[key] += w;
      den += w;
    };
    if (opt_.engine == Engine::Enumeration) {
      auto all = models(evidence);
      double top = -std::numeric_limits<double>::infinity();
      for (const auto& m : all) top = std::max(top, m.weight.soft_sum);
      for (const auto& m : all) add(m.interpretation, std::exp(m.weight.soft_sum - top));
    } else {
      auto search = fast(mentions_choice(target) || mentions_choice(evidence));
      lpmln::CompiledFormula ev(evidence);
      search->run(ev, [&](const detail::PathSearch::Path&, double w, double) {
        Assignment key;
        for (ConstId c : out.constants) {
          const auto& k = tsig.constant(c);
          ValueIndex v = 0;
          while (search->truth()[k.first_atom + v] != lpmln::Truth::True) ++v;
          key.push_back(v);
        }
        mass[key] += w;
        den += w;
      });
    }
    if (den == 0.0) throw ConditioningError("no stable model satisfies the evidence");
    double top = 0.0;
    for (const auto& [k, w] : mass) top = std::max(top, w);
    for (const auto& [k, w] : mass) {
      if (w >= top * (1 - 1e-12)) out.best.push_back(k);
    }
    out.probability = top / den;
    return out;
  }

  /// The no-action option first, then actions by name.
  std::vector<Assignment> plan_options() const {
    const Analysis& a = analysis();
    auto events = a.single_events();
    std::sort(events.begin() + 1, events.end(), [&](const Assignment& x, const Assignment& y) {
      return describe_event(desc_.signature, a.actions(), x) < describe_event(desc_.signature, a.actions(), y);
    });
    return events;
  }

  Formula actions_formula(const std::vector<Assignment>& acts) const {
    const Analysis& a = analysis();
    std::vector<Formula> parts;
    for (unsigned i = 0; i < acts.size(); ++i) {
      for (std::size_t k = 0; k < a.actions().size(); ++k) {
        parts.push_back(Formula::atom(ts_.signature().atom(ts_.at(i, a.actions()[k]), acts[i][k])));
      }
    }
    return lpmln::conj(std::move(parts));
  }

  PlanResult plan(const Formula& init, const Formula& goal, PlanMode mode,
                  const Formula& evidence = Formula::top()) const {
    const Analysis& a = analysis();
    PlanResult out;
    out.mode = mode;
    const unsigned m = ts_.steps();
    auto goal_given = [&](const std::vector<Assignment>& acts) -> std::optional<double> {
      try {
        return probability(goal, lpmln::conj({init, evidence, actions_formula(acts)})).value;
      } catch (const ConditioningError&) {
        return std::nullopt;
      }
    };
    // Zero-mass init is an error in both modes.
    probability(Formula::top(), lpmln::conj(init, evidence));
    if (mode == PlanMode::Map) {
      MapResult best;
      try {
        best = map(lpmln::conj({init, goal, evidence}));
      } catch (const ConditioningError&) {
        out.note = "goal unreachable from init";
        return out;
      }
      const Interpretation& model = best.models.front();
      for (unsigned i = 0; i < m; ++i) out.actions.push_back(Analysis::read(model, ts_, i, a.actions()));
      out.probability = goal_given(out.actions).value_or(0.0);
      return out;
    }
    auto options = plan_options();
    std::vector<std::size_t> pick(m, 0);
    double best = -1.0;
    std::vector<Assignment> acts(m);
    while (true) {
      for (unsigned i = 0; i < m; ++i) acts[i] = options[pick[i]];
      double p = goal_given(acts).value_or(-1.0);
      if (p > best + 1e-12) {
        best = p;
        out.actions = acts;
      }
      unsigned i = m;
      while (i > 0 && ++pick[i - 1] == options.size()) pick[--i] = 0;
      if (i == 0) break;
    }
    if (best <= 0.0) {
      out.probability = 0.0;
      out.note = "no plan reaches the goal";
    } else {
      out.probability = best;
    }
    return out;
  }

 private:
  bool mentions_choice(const Formula& f) const {
    const auto& sig = desc_.signature;
    for (AtomId a : lpmln::atoms_of(f)) {
      ConstKind k = sig.kind(ts_.base_of(ts_.signature().constant_of(a)));
      if (k == ConstKind::Pf || k == ConstKind::InitPf) return true;
    }
    return false;
  }

  std::shared_ptr<detail::PathSearch> fast(bool keep) const {
    auto& slot = keep ? full_ : merged_;
    if (!slot) slot = std::make_shared<detail::PathSearch>(analysis(), ts_, keep, opt_.limits.max_paths);
    return slot;
  }

  std::vector<lpmln::StableModel> models(const Formula& evidence) const {
    if (!program_) program_ = std::make_shared<lpmln::WeightedProgram>(to_lpmln(translate(desc_, ts_.steps())));
    lpmln::EnumerateOptions eo;
    eo.max_candidates = opt_.limits.max_candidates;
    eo.threads = opt_.limits.threads;
    eo.require_hard_models = true;
    eo.evidence = evidence;
    return lpmln::enumerate_stable_models(*program_, eo);
  }

  ActionDescription desc_;
  QueryOptions opt_;
  TimedSignature ts_;
  mutable std::shared_ptr<Analysis> analysis_;
  mutable std::shared_ptr<detail::PathSearch> merged_, full_;
  mutable std::shared_ptr<lpmln::WeightedProgram> program_;
};

inline lpmln::Masses predict(const Reasoner& r, const Evidence& ev, const Formula& result) {
  return r.probability(result, ev.formula(r.timed()));
}

/// Pr(initial condition | evidence); the condition may only mention step-0 fluents.
inline lpmln::Masses postdict(const Reasoner& r, const Evidence& ev, const Formula& initial) {
  const auto& ts = r.timed();
  for (AtomId a : lpmln::atoms_of(initial)) {
    ConstId c = ts.signature().constant_of(a);
    if (ts.step_of(c) != 0 || !ts.base().is_fluent(ts.base_of(c))) {
      throw UsageError("the initial condition may only mention step-0 fluents");
    }
  }
  return r.probability(initial, ev.formula(ts));
}

inline PlanResult plan(const Reasoner& r, const Formula& init, const Formula& goal, PlanMode mode) {
  for (AtomId a : lpmln::atoms_of(init)) {
    if (r.timed().step_of(r.timed().signature().constant_of(a)) != 0) {
      throw UsageError("the init formula may only mention step 0");
    }
  }
  return r.plan(init, goal, mode);
}

/// MAP under the evidence with abnormalities enabled; lists the true
/// abnormal fluents of each MAP model.
inline DiagnoseResult diagnose(const ActionDescription& d, unsigned m, const Formula& evidence,
                               QueryOptions opt = {}) {
  if (d.signature.of_kind({ConstKind::AbFluent}).empty()) {
    throw ValidationError("diagnosis needs at least one abnormal fluent");
  }
  ActionDescription enabled = d;
  bool has = false;
  for (const auto& l : d.laws) has = has || std::holds_alternative<pbc::EnableAb>(l);
  if (!has) enabled.laws.push_back(pbc::EnableAb{});
  Reasoner r(enabled, m, opt);
  auto best = r.map(evidence);
  DiagnoseResult out;
  out.probability = best.probability;
  const auto& ts = r.timed();
  const auto& sig = r.description().signature;
  for (const auto& model : best.models) {
    std::vector<DiagnoseResult::Abnormality> ab;
    for (unsigned i = 0; i <= m; ++i) {
      for (ConstId c : sig.of_kind({ConstKind::AbFluent})) {
        if (model.value(ts.signature(), ts.at(i, c)) == sig.true_value(c)) ab.push_back({i, c});
      }
    }
    out.abnormal.push_back(std::move(ab));
  }
  out.models = std::move(best.models);
  return out;
}

struct QueryResult {
  pbc::QueryKind kind;
  Engine engine;
  std::optional<lpmln::Masses> probability;
  std::optional<MapResult> map;
  std::optional<PlanResult> plan;
  std::optional<ArgmaxResult> argmax;
  std::optional<DiagnoseResult> diagnose;
};

/// Runs a parsed query file against its description.
inline QueryResult run_query(const ActionDescription& d, pbc::QuerySpec q, QueryOptions opt = {}) {
  QueryResult out{q.kind, opt.engine == Engine::Auto ? Engine::Fast : opt.engine, {}, {}, {}, {}, {}};
  Formula ev_stamped = pbc::evidence_formula(q, d.signature);
  if (q.kind == pbc::QueryKind::Diagnose) {
    ActionDescription e = prepare(d);
    TimedSignature ts(e.signature, q.steps);
    out.diagnose = diagnose(d, q.steps, ts.resolve(q.stamps, ev_stamped), opt);
    return out;
  }
  Reasoner r(d, q.steps, opt);
  const auto& ts = r.timed();
  Formula ev = ts.resolve(q.stamps, ev_stamped);
  switch (q.kind) {
    case pbc::QueryKind::Marginal:
      out.probability = r.probability(ts.resolve(q.stamps, q.target), ev);
      break;
    case pbc::QueryKind::Conditional:
      out.probability = r.probability(ts.resolve(q.stamps, q.target), lpmln::conj(ev, ts.resolve(q.stamps, q.given)));
      break;
    case pbc::QueryKind::Map:
      out.map = r.map(ev);
      break;
    case pbc::QueryKind::Plan:
      out.plan = r.plan(ts.resolve(q.stamps, q.init), ts.resolve(q.stamps, q.goal), opt.plan_mode, ev);
      break;
    case pbc::QueryKind::Argmax:
      out.argmax = r.argmax(ts.resolve(q.stamps, q.target), ev);
      break;
    case pbc::QueryKind::Diagnose:
      break;
  }
  return out;
}

}  // namespace pbcplus
