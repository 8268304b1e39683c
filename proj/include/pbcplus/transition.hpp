#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/lpmln/enumerate.hpp"
#include "pbcplus/translator.hpp"

namespace pbcplus {

using lpmln::Interpretation;

/// Values of an ordered list of constants (fluents, actions, pfs, ...).
using Assignment = std::vector<ValueIndex>;

struct TransitionOptions {
  std::uint64_t max_candidates = std::uint64_t{1} << 24;
  unsigned threads = 1;
  std::size_t max_states = std::size_t{1} << 20;
  std::uint64_t max_paths = std::uint64_t{1} << 26;
};

inline std::string describe(const PbcSignature& sig, const std::vector<ConstId>& cs, const Assignment& a) {
  std::string out;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    out += (k ? ", " : "") + sig.name(cs[k]) + "=" + sig.domain(cs[k]).at(a.at(k));
  }
  return out;
}

/// True actions joined by ", ", or "noop".
inline std::string describe_event(const PbcSignature& sig, const std::vector<ConstId>& actions, const Assignment& e) {
  std::string out;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (e.at(k) == sig.true_value(actions[k])) out += (out.empty() ? "" : ", ") + sig.name(actions[k]);
  }
  return out.empty() ? "noop" : out;
}

struct Edge {
  std::size_t from;
  Assignment event;
  std::size_t to;
  double probability;
};

struct ProbTransitionSystem {
  PbcSignature signature;
  std::vector<ConstId> fluents;
  std::vector<ConstId> actions;
  std::vector<Assignment> states;
  std::vector<Edge> edges;  // by (from, event, to)
};

struct StateSpace {
  std::vector<Assignment> states;   // stable models of D_0
  std::vector<Assignment> initial;  // additionally consistent with D_init
};

struct AssumptionCheck {
  bool holds = true;
  std::string witness;
};

struct AssumptionReport {
  AssumptionCheck no_concurrency;
  AssumptionCheck pf_controlled;
  AssumptionCheck initpf_controlled;
  bool all() const { return no_concurrency.holds && pf_controlled.holds && initpf_controlled.holds; }
};

struct StationarityReport {
  bool pass = true;
  double max_deviation = 0.0;
  std::size_t comparisons = 0;
};

/// Values of the initpf constants and of the pf constants at every step.
struct TotalChoice {
  Assignment initpf;
  std::vector<Assignment> pf;
};

struct FastPath {
  Interpretation model;
  double probability;
};

/// States and single-step outcomes of a description, read off the stable
/// models of D_0, D_init with D_0, and D_1.
class Analysis {
 public:
  struct Initial {
    std::size_t initpf;  // index into initpf_choices()
    std::size_t state;
    double mass;
  };
  struct Outcome {
    std::size_t from;
    std::size_t event;  // index into events()
    std::size_t pf;     // index into pf_choices()
    std::size_t to;
    double mass;  // product of the pf probabilities
  };

  explicit Analysis(const ActionDescription& d, TransitionOptions opt = {}) : desc_(prepare(d)), opt_(opt) {
    const PbcSignature& sig = desc_.signature;
    fluents_ = sig.fluents();
    actions_ = sig.actions();
    pfs_ = sig.pfs();
    initpfs_ = sig.initpfs();
    for (const auto& law : desc_.laws) {
      if (auto* p = std::get_if<pbc::PfDecl>(&law)) {
        for (const auto& e : p->entries) prob_[{p->constant, e.value}] = e.p;
      } else if (auto* p = std::get_if<pbc::InitPfDecl>(&law)) {
        for (const auto& e : p->entries) prob_[{p->constant, e.value}] = e.p;
      }
    }
    compute();
  }

  const ActionDescription& description() const { return desc_; }
  const PbcSignature& signature() const { return desc_.signature; }
  const std::vector<ConstId>& fluents() const { return fluents_; }
  const std::vector<ConstId>& actions() const { return actions_; }
  const std::vector<ConstId>& pfs() const { return pfs_; }
  const std::vector<ConstId>& initpfs() const { return initpfs_; }

  const std::vector<Assignment>& states() const { return states_; }
  const std::vector<Assignment>& events() const { return events_; }
  const std::vector<Assignment>& pf_choices() const { return pf_choices_; }
  const std::vector<Assignment>& initpf_choices() const { return initpf_choices_; }
  const std::vector<Initial>& initial() const { return initial_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  /// Indices into outcomes() leaving state s.
  const std::vector<std::size_t>& outcomes_from(std::size_t s) const { return by_from_.at(s); }

  std::optional<std::size_t> state_index(const Assignment& s) const { return find(state_ids_, s); }
  std::optional<std::size_t> event_index(const Assignment& e) const { return find(event_ids_, e); }
  std::optional<std::size_t> pf_index(const Assignment& p) const { return find(pf_ids_, p); }

  /// M(c=v) for a pf or initpf constant.
  double probability_of(ConstId c, ValueIndex v) const { return prob_.at({c, v}); }

  StateSpace state_space() const {
    StateSpace out{states_, {}};
    std::set<std::size_t> seen;
    for (const auto& i : initial_) seen.insert(i.state);
    for (std::size_t s : seen) out.initial.push_back(states_[s]);
    return out;
  }

  /// Pr(0:s) under D_init with D_0.
  double initial_probability(const Assignment& s) const {
    double num = 0.0;
    double den = 0.0;
    auto idx = state_index(s);
    for (const auto& i : initial_) {
      den += i.mass;
      if (idx && i.state == *idx) num += i.mass;
    }
    if (den == 0.0) throw ConditioningError("D_init has no stable model");
    return num / den;
  }

  ProbTransitionSystem transition_system() const {
    ProbTransitionSystem ts{desc_.signature, fluents_, actions_, states_, {}};
    std::map<std::tuple<std::size_t, Assignment, std::size_t>, double> mass;
    std::map<std::pair<std::size_t, Assignment>, double> total;
    for (const auto& o : outcomes_) {
      mass[{o.from, events_[o.event], o.to}] += o.mass;
      total[{o.from, events_[o.event]}] += o.mass;
    }
    for (const auto& [key, m] : mass) {
      const auto& [from, event, to] = key;
      ts.edges.push_back({from, event, to, m / total.at({from, event})});
    }
    return ts;
  }

  /// Pr(1:s2 | 0:s, 0:e) over D_1.
  double transition_probability(const Assignment& s, const Assignment& e, const Assignment& s2) const {
    auto from = state_index(s);
    auto ev = event_index(e);
    double num = 0.0;
    double den = 0.0;
    if (from && ev) {
      auto to = state_index(s2);
      for (std::size_t k : by_from_[*from]) {
        const auto& o = outcomes_[k];
        if (o.event != *ev) continue;
        den += o.mass;
        if (to && o.to == *to) num += o.mass;
      }
    }
    if (den == 0.0) {
      throw ConditioningError("no transition leaves {" + describe(desc_.signature, fluents_, s) + "} under " +
                              describe_event(desc_.signature, actions_, e));
    }
    return num / den;
  }

  /// The successor of s under event e and pf choice pf.
  Assignment phi(const Assignment& s, const Assignment& e, const Assignment& pf) const {
    std::vector<std::size_t> to = successors(s, e, pf);
    if (to.size() != 1) {
      std::string w = "state {" + describe(desc_.signature, fluents_, s) + "}, event " +
                      describe_event(desc_.signature, actions_, e) + ", pf {" +
                      describe(desc_.signature, pfs_, pf) + "}";
      throw AssumptionError(std::to_string(to.size()) + " successors instead of one", w);
    }
    return states_[to.front()];
  }

  AssumptionReport check_assumptions() const {
    const PbcSignature& sig = desc_.signature;
    AssumptionReport r;
    for (const auto& o : outcomes_) {
      std::size_t on = 0;
      for (std::size_t k = 0; k < actions_.size(); ++k) on += events_[o.event][k] == sig.true_value(actions_[k]);
      if (on > 1) {
        r.no_concurrency = {false, "state {" + describe(sig, fluents_, states_[o.from]) + "}, event " +
                                       describe_event(sig, actions_, events_[o.event])};
        break;
      }
    }
    auto all_pf = product(pfs_);
    auto events = single_events();
    check_cap(static_cast<double>(states_.size()) * events.size() * all_pf.size());
    for (std::size_t s = 0; s < states_.size() && r.pf_controlled.holds; ++s) {
      for (const auto& e : events) {
        for (const auto& pf : all_pf) {
          auto to = successors(states_[s], e, pf);
          if (to.size() != 1) {
            r.pf_controlled = {false, std::to_string(to.size()) + " successors for state {" +
                                          describe(sig, fluents_, states_[s]) + "}, event " +
                                          describe_event(sig, actions_, e) + ", pf {" + describe(sig, pfs_, pf) +
                                          "}"};
            break;
          }
        }
        if (!r.pf_controlled.holds) break;
      }
    }
    for (const auto& choice : product(initpfs_)) {
      std::set<std::size_t> found;
      if (auto idx = find(initpf_ids_, choice)) {
        for (const auto& i : initial_) {
          if (i.initpf == *idx) found.insert(i.state);
        }
      }
      if (found.size() != 1) {
        r.initpf_controlled = {false, std::to_string(found.size()) + " initial states for initpf {" +
                                          describe(sig, initpfs_, choice) + "}"};
        break;
      }
    }
    return r;
  }

  /// Every assignment to `cs`, first constant most significant.
  std::vector<Assignment> product(const std::vector<ConstId>& cs) const {
    double n = 1.0;
    for (ConstId c : cs) n *= static_cast<double>(desc_.signature.domain(c).size());
    check_cap(n);
    std::vector<Assignment> out{Assignment{}};
    for (ConstId c : cs) {
      std::vector<Assignment> next;
      for (const auto& a : out) {
        for (ValueIndex v = 0; v < desc_.signature.domain(c).size(); ++v) {
          next.push_back(a);
          next.back().push_back(v);
        }
      }
      out = std::move(next);
    }
    return out;
  }

  /// The no-action event first, then one event per action in signature order.
  std::vector<Assignment> single_events() const {
    const PbcSignature& sig = desc_.signature;
    Assignment none;
    for (ConstId a : actions_) none.push_back(sig.false_value(a));
    std::vector<Assignment> out{none};
    for (std::size_t k = 0; k < actions_.size(); ++k) {
      out.push_back(none);
      out.back()[k] = sig.true_value(actions_[k]);
    }
    return out;
  }

  /// The stable model of Tr(D,m) fixed by a total choice and an action
  /// sequence, built forward from the initial state by phi.
  FastPath path(const TimedSignature& ts, const TotalChoice& tc, const std::vector<Assignment>& acts) const {
    const PbcSignature& sig = desc_.signature;
    const unsigned m = ts.steps();
    if (acts.size() != m || tc.pf.size() != m) throw UsageError("need one action and pf assignment per step");
    std::set<std::size_t> starts;
    if (auto idx = find(initpf_ids_, tc.initpf)) {
      for (const auto& i : initial_) {
        if (i.initpf == *idx) starts.insert(i.state);
      }
    }
    if (starts.size() != 1) {
      throw AssumptionError(std::to_string(starts.size()) + " initial states instead of one",
                            "initpf {" + describe(sig, initpfs_, tc.initpf) + "}");
    }
    const lpmln::Signature& tsig = ts.signature();
    Interpretation model(tsig.atom_count());
    auto put = [&](unsigned step, const std::vector<ConstId>& cs, const Assignment& a) {
      for (std::size_t k = 0; k < cs.size(); ++k) model.assign(tsig, ts.at(step, cs[k]), a.at(k));
    };
    double p = 1.0;
    for (std::size_t k = 0; k < initpfs_.size(); ++k) p *= probability_of(initpfs_[k], tc.initpf[k]);
    put(0, initpfs_, tc.initpf);
    Assignment s = states_[*starts.begin()];
    put(0, fluents_, s);
    for (unsigned i = 0; i < m; ++i) {
      std::size_t on = 0;
      for (std::size_t k = 0; k < actions_.size(); ++k) on += acts[i].at(k) == sig.true_value(actions_[k]);
      if (on > 1) throw UsageError("step " + std::to_string(i) + " executes more than one action");
      for (std::size_t k = 0; k < pfs_.size(); ++k) p *= probability_of(pfs_[k], tc.pf[i].at(k));
      put(i, actions_, acts[i]);
      put(i, pfs_, tc.pf[i]);
      s = phi(s, acts[i], tc.pf[i]);
      put(i + 1, fluents_, s);
    }
    p /= std::pow(static_cast<double>(actions_.size() + 1), m);
    return {std::move(model), p};
  }

  FastPath path(unsigned m, const TotalChoice& tc, const std::vector<Assignment>& acts) const {
    return path(TimedSignature(desc_.signature, m), tc, acts);
  }

  /// Compares Pr(i+1:s' | i:s, i:e) on Tr(D,m) at every step against the
  /// D_1 transition probability.
  StationarityReport stationarity(unsigned m) const {
    auto t = translate(desc_, m);
    auto program = to_lpmln(t);
    const TimedSignature& ts = t.timed;
    using Key = std::tuple<unsigned, Assignment, Assignment>;
    std::map<Key, double> den;
    std::map<std::tuple<unsigned, Assignment, Assignment, Assignment>, double> num;
    lpmln::EnumerateOptions eo;
    eo.max_candidates = opt_.max_candidates;
    lpmln::for_each_hard_model(program, eo, [&](const Interpretation& i, const lpmln::Weight2& w) {
      double mass = std::exp(w.soft_sum);
      Assignment s = read(i, ts, 0, fluents_);
      for (unsigned k = 0; k < m; ++k) {
        Assignment e = read(i, ts, k, actions_);
        Assignment s2 = read(i, ts, k + 1, fluents_);
        den[{k, s, e}] += mass;
        num[{k, s, e, s2}] += mass;
        s = std::move(s2);
      }
    });
    StationarityReport r;
    for (const auto& [key, d] : den) {
      if (d <= 0.0) continue;
      const auto& [k, s, e] = key;
      std::set<Assignment> targets;
      if (auto from = state_index(s)) {
        if (auto ev = event_index(e)) {
          for (std::size_t o : by_from_[*from]) {
            if (outcomes_[o].event == *ev) targets.insert(states_[outcomes_[o].to]);
          }
        }
      }
      for (auto it = num.lower_bound({k, s, e, {}}); it != num.end(); ++it) {
        const auto& [k2, s2, e2, to] = it->first;
        if (k2 != k || s2 != s || e2 != e) break;
        targets.insert(to);
      }
      for (const auto& to : targets) {
        auto n = num.find({k, s, e, to});
        double p_step = n == num.end() ? 0.0 : n->second / d;
        double p_one = 0.0;
        try {
          p_one = transition_probability(s, e, to);
        } catch (const ConditioningError&) {
          p_one = 0.0;
        }
        r.max_deviation = std::max(r.max_deviation, std::abs(p_step - p_one));
        ++r.comparisons;
      }
    }
    r.pass = r.max_deviation <= 1e-9;
    return r;
  }

  static Assignment read(const Interpretation& i, const TimedSignature& ts, unsigned step,
                         const std::vector<ConstId>& cs) {
    Assignment out;
    out.reserve(cs.size());
    for (ConstId c : cs) {
      auto v = i.value(ts.signature(), ts.at(step, c));
      if (!v) throw std::logic_error("stable model without a value for " + ts.signature().constant(ts.at(step, c)).name);
      out.push_back(*v);
    }
    return out;
  }

 private:
  template <class Map>
  static std::optional<std::size_t> find(const Map& ids, const Assignment& a) {
    auto it = ids.find(a);
    if (it == ids.end()) return std::nullopt;
    return it->second;
  }

  static std::size_t intern(std::map<Assignment, std::size_t>& ids, std::vector<Assignment>& list,
                            const Assignment& a) {
    auto [it, fresh] = ids.try_emplace(a, list.size());
    if (fresh) list.push_back(a);
    return it->second;
  }

  /// Renumbers `list` in sorted order; returns old index -> new index.
  static std::vector<std::size_t> sort_ids(std::map<Assignment, std::size_t>& ids, std::vector<Assignment>& list) {
    std::vector<std::size_t> remap(list.size());
    std::size_t k = 0;
    list.clear();
    for (auto& [a, id] : ids) {
      remap[id] = k;
      id = k++;
      list.push_back(a);
    }
    return remap;
  }

  void check_cap(double n) const {
    if (n > static_cast<double>(opt_.max_paths)) throw CapacityError("combinations exceed the cap", opt_.max_paths);
  }

  lpmln::EnumerateOptions enumerate_options() const {
    lpmln::EnumerateOptions eo;
    eo.max_candidates = opt_.max_candidates;
    eo.threads = opt_.threads;
    eo.require_hard_models = true;
    return eo;
  }

  std::vector<std::size_t> successors(const Assignment& s, const Assignment& e, const Assignment& pf) const {
    std::vector<std::size_t> out;
    auto from = state_index(s);
    auto ev = event_index(e);
    auto p = pf_index(pf);
    if (!from || !ev || !p) return out;
    auto it = step_index_.find({*from, *ev, *p});
    if (it != step_index_.end()) out = it->second;
    return out;
  }

  void compute() {
    // D_0
    {
      auto t = translate(desc_, 0, {false});
      auto program = to_lpmln(t);
      for (const auto& m : lpmln::enumerate_hard_models(program, enumerate_options())) {
        intern(state_ids_, states_, read(m.interpretation, t.timed, 0, fluents_));
        if (states_.size() > opt_.max_states) throw CapacityError("states exceed the cap", opt_.max_states);
      }
      sort_ids(state_ids_, states_);
    }
    // D_init with D_0
    {
      auto t = translate(desc_, 0);
      auto program = to_lpmln(t);
      for (const auto& m : lpmln::enumerate_hard_models(program, enumerate_options())) {
        auto s = state_index(read(m.interpretation, t.timed, 0, fluents_));
        if (!s) throw std::logic_error("initial state outside the D_0 states");
        std::size_t c = intern(initpf_ids_, initpf_choices_, read(m.interpretation, t.timed, 0, initpfs_));
        initial_.push_back({c, *s, std::exp(m.weight.soft_sum)});
      }
      auto remap = sort_ids(initpf_ids_, initpf_choices_);
      for (auto& i : initial_) i.initpf = remap[i.initpf];
      std::sort(initial_.begin(), initial_.end(),
                [](const Initial& a, const Initial& b) { return std::tie(a.initpf, a.state) < std::tie(b.initpf, b.state); });
    }
    // D_1
    {
      auto t = translate(desc_, 1, {false});
      auto program = to_lpmln(t);
      for (const auto& m : lpmln::enumerate_hard_models(program, enumerate_options())) {
        auto from = state_index(read(m.interpretation, t.timed, 0, fluents_));
        auto to = state_index(read(m.interpretation, t.timed, 1, fluents_));
        if (!from || !to) throw std::logic_error("transition endpoint outside the D_0 states");
        std::size_t e = intern(event_ids_, events_, read(m.interpretation, t.timed, 0, actions_));
        std::size_t p = intern(pf_ids_, pf_choices_, read(m.interpretation, t.timed, 0, pfs_));
        outcomes_.push_back({*from, e, p, *to, std::exp(m.weight.soft_sum)});
      }
      auto re = sort_ids(event_ids_, events_);
      auto rp = sort_ids(pf_ids_, pf_choices_);
      for (auto& o : outcomes_) {
        o.event = re[o.event];
        o.pf = rp[o.pf];
      }
      std::sort(outcomes_.begin(), outcomes_.end(), [](const Outcome& a, const Outcome& b) {
        return std::tie(a.from, a.event, a.pf, a.to) < std::tie(b.from, b.event, b.pf, b.to);
      });
      by_from_.assign(states_.size(), {});
      for (std::size_t k = 0; k < outcomes_.size(); ++k) {
        const auto& o = outcomes_[k];
        by_from_[o.from].push_back(k);
        step_index_[{o.from, o.event, o.pf}].push_back(o.to);
      }
    }
  }

  ActionDescription desc_;
  TransitionOptions opt_;
  std::vector<ConstId> fluents_, actions_, pfs_, initpfs_;
  std::map<std::pair<ConstId, ValueIndex>, double> prob_;

  std::vector<Assignment> states_, events_, pf_choices_, initpf_choices_;
  std::map<Assignment, std::size_t> state_ids_, event_ids_, pf_ids_, initpf_ids_;
  std::vector<Initial> initial_;
  std::vector<Outcome> outcomes_;
  std::vector<std::vector<std::size_t>> by_from_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::size_t>> step_index_;
};

inline StateSpace compute_states(const ActionDescription& d, TransitionOptions opt = {}) {
  return Analysis(d, opt).state_space();
}

inline ProbTransitionSystem compute_transitions(const ActionDescription& d, TransitionOptions opt = {}) {
  return Analysis(d, opt).transition_system();
}

inline double transition_probability(const ActionDescription& d, const Assignment& s, const Assignment& e,
                                     const Assignment& s2) {
  return Analysis(d).transition_probability(s, e, s2);
}

inline Assignment phi(const ActionDescription& d, const Assignment& s, const Assignment& e, const Assignment& pf) {
  return Analysis(d).phi(s, e, pf);
}

inline AssumptionReport check_assumptions(const ActionDescription& d, TransitionOptions opt = {}) {
  return Analysis(d, opt).check_assumptions();
}

inline FastPath path_probability_fast(const ActionDescription& d, unsigned m, const TotalChoice& tc,
                                      const std::vector<Assignment>& acts) {
  return Analysis(d).path(m, tc, acts);
}

inline StationarityReport verify_stationarity(const ActionDescription& d, unsigned m, TransitionOptions opt = {}) {
  return Analysis(d, opt).stationarity(m);
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

/// DOT digraph; nodes s0, s1, ... in state order, edges "event : p".
inline std::string export_dot(const ProbTransitionSystem& ts) {
  std::string out = "digraph {\n";
  for (std::size_t s = 0; s < ts.states.size(); ++s) {
    out += "  s" + std::to_string(s) + " [label=\"" +
           detail::dot_escape(describe(ts.signature, ts.fluents, ts.states[s])) + "\"];\n";
  }
  for (const auto& e : ts.edges) {
    char p[32];
    std::snprintf(p, sizeof p, "%.3f", e.probability);
    out += "  s" + std::to_string(e.from) + " -> s" + std::to_string(e.to) + " [label=\"" +
           detail::dot_escape(describe_event(ts.signature, ts.actions, e.event)) + " : " + p + "\"];\n";
  }
  return out + "}\n";
}

}  // namespace pbcplus
