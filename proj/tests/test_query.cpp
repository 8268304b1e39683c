#include <catch_amalgamated.hpp>

#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "pbcplus/pbc/parser.hpp"
#include "pbcplus/query.hpp"
#include "random_pbc.hpp"

using namespace pbcplus;
using Catch::Approx;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(PBC_CORPUS_DIR) + "/" + name);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ActionDescription load(const std::string& name) { return pbc::parse_description(slurp(name)); }

QueryResult run(const std::string& desc, const std::string& query, QueryOptions opt = {}) {
  auto d = load(desc);
  return run_query(d, pbc::parse_query(slurp(query), d), opt);
}

Formula at(const Reasoner& r, const std::string& timed, const std::string& value = "t") {
  return Formula::atom(r.timed().signature().atom(timed, value));
}

ConstId id(const Reasoner& r, const std::string& name) { return r.description().signature.base().require(name); }

std::vector<std::string> plan_names(const Reasoner& r, const PlanResult& p) {
  std::vector<std::string> out;
  for (const auto& e : p.actions) out.push_back(describe_event(r.description().signature, r.analysis().actions(), e));
  return out;
}

std::vector<std::string> abnormal_names(const ActionDescription& d, const DiagnoseResult& res) {
  std::vector<std::string> out;
  auto p = prepare(d);
  for (const auto& ab : res.abnormal.at(0)) out.push_back(std::to_string(ab.step) + ":" + p.signature.name(ab.fluent));
  return out;
}

// Pr(goal at m | init over step 0, actions) by pushing the state
// distribution through the one-step transition probabilities.
double forward(const Analysis& a, const std::function<bool(const Assignment&)>& init,
               const std::vector<Assignment>& acts, const std::function<bool(const Assignment&)>& goal) {
  std::map<Assignment, double> dist;
  double total = 0.0;
  for (const auto& s : a.states()) {
    if (!init(s)) continue;
    double p = a.initial_probability(s);
    if (p > 0) dist[s] = p;
    total += p;
  }
  for (auto& [s, p] : dist) p /= total;
  for (const auto& e : acts) {
    std::map<Assignment, double> next;
    for (const auto& [s, p] : dist) {
      for (const auto& t : a.states()) {
        double q = a.transition_probability(s, e, t);
        if (q > 0) next[t] += p * q;
      }
    }
    dist = std::move(next);
  }
  double out = 0.0;
  for (const auto& [s, p] : dist) out += goal(s) ? p : 0.0;
  return out;
}

}  // namespace

TEST_CASE("PSD path probability") {
  auto r = run("psd.pbc", "path024.pq");
  REQUIRE(r.probability);
  CHECK(std::abs(r.probability->value - 0.024) <= 1e-9);
  auto e = run("psd.pbc", "path024.pq", {Engine::Enumeration});
  CHECK(std::abs(e.probability->value - 0.024) <= 1e-9);
}

TEST_CASE("Yale prediction and postdiction") {
  auto p = run("yale.pbc", "yale_predict.pq");
  CHECK(std::abs(p.probability->value - 0.700000449318) <= 1e-6);
  auto q = run("yale.pbc", "yale_postdict.pq");
  CHECK(std::abs(q.probability->value - 0.666661211973) <= 1e-4);
  CHECK(std::abs(q.probability->value - 0.666667) <= 1e-4);
  CHECK(q.probability->value == Approx(2.0 / 3.0).margin(1e-12));
  for (auto* f : {"yale_predict.pq", "yale_postdict.pq"}) {
    auto fast = run("yale.pbc", f);
    auto en = run("yale.pbc", f, {Engine::Enumeration});
    CHECK(fast.probability->value == Approx(en.probability->value).margin(1e-9));
  }
}

TEST_CASE("Yale plan") {
  auto d = load("yale.pbc");
  auto q = pbc::parse_query(slurp("yale_plan.pq"), d);
  Reasoner r(d, 4);
  const std::vector<std::string> expected{"load", "fire(slimTurkey)", "load", "fire(fatTurkey)"};
  auto map = run_query(d, q);
  REQUIRE(map.plan);
  CHECK(plan_names(r, *map.plan) == expected);

  // Probability of that plan, computed without the path search.
  const Analysis& a = r.analysis();
  const auto& sig = a.signature();
  auto val = [&](const Assignment& s, const std::string& name) {
    for (std::size_t k = 0; k < a.fluents().size(); ++k) {
      if (sig.name(a.fluents()[k]) == name) return sig.domain(a.fluents()[k]).at(s[k]);
    }
    FAIL("no fluent " << name);
    return std::string();
  };
  auto init = [&](const Assignment& s) {
    return val(s, "alive(slimTurkey)") == "t" && val(s, "alive(fatTurkey)") == "t" && val(s, "loaded") == "f";
  };
  auto goal = [&](const Assignment& s) { return val(s, "alive(slimTurkey)") == "f" && val(s, "alive(fatTurkey)") == "f"; };
  double reference = forward(a, init, map.plan->actions, goal);
  CHECK(reference == Approx(0.6 * 0.7).margin(1e-12));
  CHECK(map.plan->probability == Approx(reference).margin(1e-9));

  QueryOptions opt;
  opt.plan_mode = PlanMode::Argmax;
  auto best = run_query(d, q, opt);
  CHECK(best.plan->probability >= reference - 1e-9);
  CHECK(forward(a, init, best.plan->actions, goal) == Approx(best.plan->probability).margin(1e-9));
  CHECK(best.plan->note.empty());
}

TEST_CASE("robot diagnoses") {
  auto d = load("robot.pbc");
  auto diag = [&](const char* f) { return abnormal_names(d, *run_query(d, pbc::parse_query(slurp(f), d)).diagnose); };
  CHECK(diag("robot_diag1.pq") == std::vector<std::string>{"1:pickupFailed"});
  CHECK(diag("robot_diag2.pq") == std::vector<std::string>{"2:dropBook"});
  CHECK(diag("robot_diag3.pq") == std::vector<std::string>{"2:enterFailed"});

  auto q = pbc::parse_query(slurp("robot_diag1.pq"), d);
  auto fast = run_query(d, q).diagnose;
  auto en = run_query(d, q, {Engine::Enumeration}).diagnose;
  CHECK(fast->models == en->models);
  CHECK(fast->probability == Approx(en->probability).margin(1e-9));
}

TEST_CASE("diagnosis of an expected outcome needs no abnormality") {
  auto d = load("robot.pbc");
  auto q = pbc::parse_query(
      "steps 3.\nobserve 0: locRobot = r1 & locBook = r1 & ~hasBook.\n"
      "do 0: pickUpBook.\ndo 1: goto(r2).\ndo 2: putdownBook.\nobserve 3: locBook = r2.\nquery diagnose.\n",
      d);
  auto res = run_query(d, q).diagnose;
  REQUIRE(res);
  REQUIRE(res->abnormal.size() == 1);
  CHECK(res->abnormal[0].empty());

  auto psd = load("psd.pbc");
  Reasoner r(psd, 1);
  CHECK_THROWS_AS(diagnose(psd, 1, Formula::top()), ValidationError);
}

TEST_CASE("PSD prediction, postdiction and planning") {
  auto d = load("psd.pbc");
  Reasoner r(d, 1);
  ConstId P = id(r, "P"), A = id(r, "A");
  const auto& base = r.description().signature.base();

  Evidence ev;
  ev.obs.push_back({0, base.atom(P, *base.find_value(P, "t"))});
  ev.acts.push_back({0, A, true});
  CHECK(predict(r, ev, at(r, "1:P", "f")).value == Approx(0.8).margin(1e-12));

  Evidence back;
  back.acts.push_back({0, A, true});
  back.obs.push_back({1, base.atom(P, *base.find_value(P, "t"))});
  auto m = postdict(r, back, at(r, "0:P"));
  CHECK(m.value == Approx(0.12 / 0.44).margin(1e-12));
  CHECK_THROWS_AS(postdict(r, back, at(r, "1:P")), UsageError);

  for (auto mode : {PlanMode::Map, PlanMode::Argmax}) {
    auto p = plan(r, at(r, "0:P", "f"), at(r, "1:P"), mode);
    CHECK(plan_names(r, p) == std::vector<std::string>{"A"});
    CHECK(p.probability == Approx(0.8).margin(1e-12));
    auto top = plan(r, at(r, "0:P", "f"), Formula::top(), mode);
    CHECK(top.probability == Approx(1.0).margin(1e-12));
    auto none = plan(r, at(r, "0:P", "f"), lpmln::conj(at(r, "1:P"), at(r, "1:P", "f")), mode);
    CHECK(none.probability == 0.0);
    CHECK_FALSE(none.note.empty());
    CHECK_THROWS_AS(plan(r, at(r, "1:P"), Formula::top(), mode), UsageError);
  }
  CHECK(r.probability(Formula::top()).value == Approx(1.0).margin(1e-12));
}

TEST_CASE("impossible evidence and bad facts") {
  auto d = load("psd.pbc");
  Reasoner r(d, 1);
  CHECK_THROWS_AS(r.probability(Formula::top(), lpmln::conj(at(r, "0:P"), at(r, "0:P", "f"))), ConditioningError);
  CHECK_THROWS_AS(r.map(lpmln::conj(at(r, "1:P"), at(r, "1:P", "f"))), ConditioningError);
  Evidence ev;
  ev.acts.push_back({1, id(r, "A"), true});
  CHECK_THROWS_AS(ev.formula(r.timed()), UsageError);
  Evidence wrong;
  wrong.acts.push_back({0, id(r, "P"), true});
  CHECK_THROWS_AS(wrong.formula(r.timed()), UsageError);
  Reasoner e(d, 1, {Engine::Enumeration});
  CHECK_THROWS_AS(e.probability(Formula::top(), lpmln::conj(at(e, "0:P"), at(e, "0:P", "f"))), ConditioningError);
}

TEST_CASE("Bayes consistency of postdiction") {
  auto d = load("yale.pbc");
  auto q = pbc::parse_query(slurp("yale_postdict.pq"), d);
  Reasoner r(d, q.steps);
  Formula ev = r.timed().resolve(q.stamps, pbc::evidence_formula(q, d.signature));
  Formula init = r.timed().resolve(q.stamps, q.target);
  double post = r.probability(init, ev).value;
  double pev = r.probability(ev).value;
  double joint = r.probability(lpmln::conj(init, ev)).value;
  CHECK(post * pev == Approx(joint).margin(1e-12));
  CHECK(pev > 0.0);
}

TEST_CASE("argmax is the best assignment of the mentioned constants") {
  auto d = load("yale.pbc");
  Reasoner r(d, 1);
  Formula target = lpmln::conj(at(r, "1:alive(fatTurkey)"), at(r, "0:loaded", "f"));
  Formula ev = at(r, "0:fire(fatTurkey)");
  auto res = r.argmax(target, ev);
  REQUIRE(res.constants.size() == 2);
  const auto& sig = r.timed().signature();
  double best = -1.0;
  std::vector<Assignment> ties;
  for (ValueIndex x = 0; x < sig.constant(res.constants[0]).domain.size(); ++x) {
    for (ValueIndex y = 0; y < sig.constant(res.constants[1]).domain.size(); ++y) {
      Formula f = lpmln::conj(Formula::atom(sig.atom(res.constants[0], x)), Formula::atom(sig.atom(res.constants[1], y)));
      double p = r.probability(f, ev).value;
      if (p > best + 1e-12) {
        best = p;
        ties = {{x, y}};
      } else if (std::abs(p - best) <= 1e-12) {
        ties.push_back({x, y});
      }
    }
  }
  CHECK(res.probability == Approx(best).margin(1e-12));
  CHECK(res.best == ties);
}

TEST_CASE("fast engine agrees with enumeration") {
  std::vector<ActionDescription> ds{load("psd.pbc"), load("yale.pbc"), load("robot.pbc")};
  for (auto& s : randpbc::passing(11, 6)) ds.push_back(s.description);
  std::mt19937 rng(5);
  for (const auto& d : ds) {
    for (unsigned m = 0; m <= 2; ++m) {
      Reasoner fast(d, m), en(d, m, {Engine::Enumeration});
      const auto& ts = fast.timed();
      const auto& sig = ts.signature();
      std::vector<AtomId> fluent_atoms, action_atoms;
      for (AtomId a = 0; a < sig.atom_count(); ++a) {
        ConstKind k = ts.base().kind(ts.base_of(sig.constant_of(a)));
        if (k == ConstKind::Action) action_atoms.push_back(a);
        if (k == ConstKind::Fluent || k == ConstKind::SdFluent || k == ConstKind::AbFluent) fluent_atoms.push_back(a);
      }
      auto any = [&](const std::vector<AtomId>& v) {
        return Formula::atom(v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]);
      };
      for (int round = 0; round < 5; ++round) {
        std::vector<Formula> parts;
        if (!action_atoms.empty()) parts.push_back(any(action_atoms));
        parts.push_back(any(fluent_atoms));
        Formula ev = lpmln::conj(parts);
        Formula target = round % 2 ? any(fluent_atoms) : lpmln::disj({any(fluent_atoms), lpmln::neg(any(fluent_atoms))});
        INFO(lpmln::to_string(ev, sig) << " | " << lpmln::to_string(target, sig));
        std::optional<double> a, b;
        try {
          a = fast.probability(target, ev).value;
        } catch (const ConditioningError&) {
        }
        try {
          b = en.probability(target, ev).value;
        } catch (const ConditioningError&) {
        }
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(*a == Approx(*b).margin(1e-9));
        if (a) {
          auto x = fast.map(ev);
          auto y = en.map(ev);
          CHECK(x.models == y.models);
          CHECK(x.probability == Approx(y.probability).margin(1e-9));
        }
      }
      if (m >= 1) {
        Formula init = Formula::atom(fluent_atoms.front());
        Formula goal = Formula::atom(fluent_atoms.back());
        for (auto mode : {PlanMode::Map, PlanMode::Argmax}) {
          std::optional<PlanResult> x, y;
          try {
            x = fast.plan(init, goal, mode);
          } catch (const ConditioningError&) {
          }
          try {
            y = en.plan(init, goal, mode);
          } catch (const ConditioningError&) {
          }
          REQUIRE(x.has_value() == y.has_value());
          if (!x) continue;
          CHECK(x->actions == y->actions);
          CHECK(x->probability == Approx(y->probability).margin(1e-9));
          CHECK(x->note == y->note);
        }
      }
    }
  }
}
