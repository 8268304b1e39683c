#pragma once

// Whole-description properties checked against plain enumeration of
// Tr(D,m): the fast path construction, the product form of path
// probabilities, and edge endpoints.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pbcplus/lpmln/enumerate.hpp"
#include "pbcplus/transition.hpp"

namespace props {

using namespace pbcplus;

struct Enumerated {
  TranslationOutput translation;
  std::vector<lpmln::StableModel> models;
  double z = 0.0;
};

inline Enumerated enumerate(const Analysis& a, unsigned m) {
  Enumerated e{translate(a.description(), m), {}, 0.0};
  lpmln::EnumerateOptions eo;
  eo.require_hard_models = true;
  e.models = lpmln::enumerate_hard_models(to_lpmln(e.translation), eo);
  for (const auto& s : e.models) e.z += std::exp(s.weight.soft_sum);
  return e;
}

struct Comparison {
  bool ok = true;
  double max_deviation = 0.0;
  std::size_t count = 0;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
  void deviate(double a, double b, double tol, const std::string& what) {
    double d = std::abs(a - b);
    max_deviation = std::max(max_deviation, d);
    if (d > tol) fail(what + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
};

/// Every (total choice, action sequence) pair, built by phi, against the
/// stable models of Tr(D,m) and their probabilities.
inline Comparison fast_vs_enumeration(const Analysis& a, unsigned m, double tol = 1e-9) {
  Comparison c;
  auto e = enumerate(a, m);
  const TimedSignature& ts = e.translation.timed;
  std::map<Interpretation, double> expected;
  for (const auto& s : e.models) expected[s.interpretation] = std::exp(s.weight.soft_sum) / e.z;

  auto inits = a.product(a.initpfs());
  auto pfs = a.product(a.pfs());
  auto events = a.single_events();
  std::map<Interpretation, double> fast;
  std::vector<std::size_t> pf_at(m, 0), ev_at(m, 0);
  for (const auto& init : inits) {
    // Odometer over pf choices and events at every step.
    std::fill(pf_at.begin(), pf_at.end(), 0);
    std::fill(ev_at.begin(), ev_at.end(), 0);
    for (;;) {
      TotalChoice tc{init, {}};
      std::vector<Assignment> acts;
      for (unsigned i = 0; i < m; ++i) {
        tc.pf.push_back(pfs[pf_at[i]]);
        acts.push_back(events[ev_at[i]]);
      }
      auto p = a.path(ts, tc, acts);
      if (!fast.emplace(p.model, p.probability).second) c.fail("two choices give the same model");
      ++c.count;
      unsigned i = 0;
      for (; i < m; ++i) {
        if (++ev_at[i] < events.size()) break;
        ev_at[i] = 0;
        if (++pf_at[i] < pfs.size()) break;
        pf_at[i] = 0;
      }
      if (i == m) break;
    }
  }
  for (const auto& [model, p] : fast) {
    auto it = expected.find(model);
    if (it == expected.end()) {
      c.fail("fast model missing from enumeration");
      continue;
    }
    c.deviate(p, it->second, tol, "model probability");
  }
  for (const auto& [model, p] : expected) {
    if (!fast.count(model)) c.fail("stable model not built by any choice");
  }
  return c;
}

/// Pr(path | actions) from enumeration against Pr(0:s0) * prod p(X^i).
inline Comparison product_form(const Analysis& a, unsigned m, double tol = 1e-9) {
  Comparison c;
  auto e = enumerate(a, m);
  const TimedSignature& ts = e.translation.timed;
  using Path = std::vector<Assignment>;  // s0, e0, s1, ..., sm
  std::map<Path, double> path_mass;
  std::map<Path, double> event_mass;  // e0..e_{m-1}
  for (const auto& s : e.models) {
    double w = std::exp(s.weight.soft_sum);
    Path p{Analysis::read(s.interpretation, ts, 0, a.fluents())};
    Path ev;
    for (unsigned i = 0; i < m; ++i) {
      ev.push_back(Analysis::read(s.interpretation, ts, i, a.actions()));
      p.push_back(ev.back());
      p.push_back(Analysis::read(s.interpretation, ts, i + 1, a.fluents()));
    }
    path_mass[p] += w;
    event_mass[ev] += w;
  }
  std::map<Path, double> rhs_total;
  for (const auto& [p, w] : path_mass) {
    Path ev;
    double rhs = a.initial_probability(p[0]);
    for (unsigned i = 0; i < m; ++i) {
      ev.push_back(p[2 * i + 1]);
      rhs *= a.transition_probability(p[2 * i], p[2 * i + 1], p[2 * i + 2]);
    }
    c.deviate(w / event_mass.at(ev), rhs, tol, "path probability");
    rhs_total[ev] += rhs;
    ++c.count;
  }
  // The product puts no mass on paths that enumeration never produced.
  for (const auto& [ev, total] : rhs_total) c.deviate(total, 1.0, tol, "product mass per action sequence");
  return c;
}

/// Edge endpoints are states; every state is a stable model of D_0 and the
/// two ends of each edge come from one stable model of D_1.
inline Comparison endpoints(const Analysis& a) {
  Comparison c;
  auto ts = a.transition_system();
  auto d0 = translate(a.description(), 0, {false});
  auto d1 = translate(a.description(), 1, {false});
  lpmln::EnumerateOptions eo;
  eo.require_hard_models = true;
  std::set<Assignment> states;
  for (const auto& s : lpmln::enumerate_hard_models(to_lpmln(d0), eo)) {
    states.insert(Analysis::read(s.interpretation, d0.timed, 0, a.fluents()));
  }
  std::set<std::pair<Assignment, Assignment>> pairs;
  for (const auto& s : lpmln::enumerate_hard_models(to_lpmln(d1), eo)) {
    auto from = Analysis::read(s.interpretation, d1.timed, 0, a.fluents());
    auto to = Analysis::read(s.interpretation, d1.timed, 1, a.fluents());
    if (!states.count(from) || !states.count(to)) c.fail("D_1 endpoint is not a D_0 state");
    pairs.insert({from, to});
  }
  if (std::set<Assignment>(ts.states.begin(), ts.states.end()) != states) c.fail("state set differs from D_0");
  for (const auto& e : ts.edges) {
    ++c.count;
    if (e.from >= ts.states.size() || e.to >= ts.states.size()) {
      c.fail("edge index out of range");
      continue;
    }
    if (!pairs.count({ts.states[e.from], ts.states[e.to]})) c.fail("edge not backed by a D_1 model");
  }
  return c;
}

}  // namespace props
