#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pbcplus/lpmln/enumerate.hpp"
#include "pbcplus/pbc/parser.hpp"
#include "pbcplus/translator.hpp"

using namespace pbcplus;
using Catch::Approx;

namespace {

ActionDescription load(const std::string& name) {
  std::ifstream in(std::string(PBC_CORPUS_DIR) + "/" + name);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return pbc::parse_description(s.str());
}

// Per-schema tally read off the rule shapes alone, without provenance.
struct ShapeCount {
  std::size_t dynamic = 0, inertia = 0, action_choice = 0, init_choice = 0, init_constraint = 0;
};

ShapeCount count_shapes(const TranslationOutput& t) {
  ShapeCount n;
  const auto& ts = t.timed;
  const auto& sig = ts.base();
  for (const auto& r : t.program.rules()) {
    if (r.head.is_bottom()) {
      ++n.init_constraint;
      continue;
    }
    if (r.head.kind() == lpmln::Connective::Choice && r.body.is_top()) {
      ConstId c = ts.signature().constant_of(r.head.child().atom_id());
      if (sig.kind(ts.base_of(c)) == ConstKind::Action) {
        ++n.action_choice;
      } else {
        ++n.init_choice;
      }
      continue;
    }
    if (r.head.kind() == lpmln::Connective::Choice) {
      ++n.inertia;
    } else {
      ++n.dynamic;
    }
  }
  return n;
}

// Value of every timed constant of `sub`, read from a model over `full`.
std::vector<ValueIndex> project(const lpmln::Interpretation& i, const TimedSignature& full, const TimedSignature& sub) {
  std::vector<ValueIndex> out;
  for (ConstId c = 0; c < sub.signature().constant_count(); ++c) {
    ConstId f = full.at(sub.step_of(c), sub.base_of(c));
    out.push_back(*i.value(full.signature(), f));
  }
  return out;
}

std::set<std::vector<ValueIndex>> hard_models(const TranslationOutput& t, const TimedSignature* full = nullptr,
                                              const TimedSignature* sub = nullptr) {
  auto p = to_lpmln(t);
  lpmln::EnumerateOptions eo;
  eo.require_hard_models = true;
  std::set<std::vector<ValueIndex>> out;
  const TimedSignature& f = full ? *full : t.timed;
  const TimedSignature& s = sub ? *sub : t.timed;
  lpmln::for_each_hard_model(p, eo, [&](const lpmln::Interpretation& i, const lpmln::Weight2&) {
    out.insert(project(i, f, s));
  });
  return out;
}

}  // namespace

TEST_CASE("PSD rule counts per schema") {
  auto psd = load("psd.pbc");
  for (unsigned m = 0; m <= 4; ++m) {
    auto t = translate(psd, m);
    auto n = count_shapes(t);
    CHECK(n.dynamic == 2 * m);
    CHECK(n.inertia == 2 * m);
    CHECK(n.action_choice == 2 * m);
    CHECK(n.init_choice == 2);
    CHECK(n.init_constraint == 2);
    CHECK(t.program.declarations().size() == m + 1);
    CHECK(t.program.rules().size() == 6 * m + 4);

    std::map<Schema, std::size_t> by;
    for (const auto& o : t.rule_origin) ++by[o.schema];
    CHECK(by[Schema::Dynamic] == n.dynamic + n.inertia);
    CHECK(by[Schema::ActionChoice] == n.action_choice);
    CHECK(by[Schema::InitialChoice] == n.init_choice);
    CHECK(by[Schema::InitConstraint] == n.init_constraint);
    CHECK(t.rule_origin.size() == t.program.rules().size());
    CHECK(t.declaration_origin.size() == t.program.declarations().size());
  }
}

TEST_CASE("PSD one step matches the worked program") {
  auto t = translate(load("psd.pbc"), 1);
  auto p = to_lpmln(t);
  const auto& sig = p.signature();
  std::map<std::string, double> soft;
  for (const auto& r : p.rules()) {
    if (!r.weight.is_hard()) soft[lpmln::to_string(r.formula, sig)] = r.weight.value();
  }
  CHECK(soft.size() == 4);
  CHECK(soft["0:Pf=t"] == Approx(std::log(0.8)));
  CHECK(soft["0:Pf=f"] == Approx(std::log(0.2)));
  CHECK(soft["0:InitP=t"] == Approx(std::log(0.6)));
  CHECK(soft["0:InitP=f"] == Approx(std::log(0.4)));

  std::set<std::string> rules;
  for (const auto& r : t.program.rules()) {
    rules.insert(lpmln::to_string(r.head, sig) + " <- " + lpmln::to_string(r.body, sig));
  }
  CHECK(rules.count("1:P=t <- 0:P=f & 0:A=t & 0:Pf=t"));
  CHECK(rules.count("1:P=f <- 0:P=t & 0:A=t & 0:Pf=t"));
  CHECK(rules.count("{1:P=t} <- 0:P=t"));
  CHECK(rules.count("{0:A=t} <- true"));
  CHECK(rules.count("{0:A=f} <- true"));
  CHECK(rules.count("{0:P=t} <- true"));
  CHECK(rules.count("false <- not 0:P=t & 0:InitP=t"));
}

TEST_CASE("m = 0 keeps only the initial part") {
  for (auto* name : {"psd.pbc", "yale.pbc", "robot.pbc"}) {
    auto d = load(name);
    auto t = translate(d, 0);
    for (const auto& o : t.rule_origin) CHECK(o.schema != Schema::Dynamic);
    for (const auto& o : t.rule_origin) CHECK(o.schema != Schema::ActionChoice);
    for (ConstId c = 0; c < t.timed.signature().constant_count(); ++c) {
      auto k = t.timed.base().kind(t.timed.base_of(c));
      CHECK(k != ConstKind::Action);
      CHECK(k != ConstKind::Pf);
      CHECK(t.timed.step_of(c) == 0);
    }
  }
}

TEST_CASE("timed signature layout") {
  auto yale = load("yale.pbc");
  auto t = translate(yale, 2);
  const auto& ts = t.timed;
  const auto& base = ts.base();
  std::size_t expected = base.initpfs().size() + 3 * base.fluents().size() +
                         2 * (base.actions().size() + base.pfs().size());
  CHECK(ts.signature().constant_count() == expected);
  CHECK(ts.signature().constant(0).name == "0:init_alive(slimTurkey)");
  CHECK_FALSE(ts.find(2, base.actions().front()));
  CHECK(ts.find(2, base.fluents().front()));
  CHECK_THROWS_AS(ts.at(1, base.initpfs().front()), SignatureError);
  CHECK_FALSE(ts.find(3, base.fluents().front()));

  // Total choice constants: 0:initpf and every i:pf.
  std::set<ConstId> probabilistic;
  for (const auto& d : t.program.declarations()) probabilistic.insert(d.constant);
  std::set<ConstId> expected_pc;
  for (ConstId c : base.initpfs()) expected_pc.insert(ts.at(0, c));
  for (unsigned i = 0; i < 2; ++i) {
    for (ConstId c : base.pfs()) expected_pc.insert(ts.at(i, c));
  }
  CHECK(probabilistic == expected_pc);

  // Every atom of every rule belongs to the timed signature.
  auto p = to_lpmln(t);
  for (const auto& r : p.rules()) {
    for (auto a : lpmln::atoms_of(r.formula)) CHECK(a < ts.signature().atom_count());
  }
}

TEST_CASE("explain lists one line per rule with its origin") {
  auto t = translate(load("psd.pbc"), 1);
  auto text = explain(t);
  auto p = to_lpmln(t);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == p.rules().size());
  CHECK(text.find("% dynamic @0 law 0") != std::string::npos);
  CHECK(text.find("% pf @0 law 4") != std::string::npos);
  CHECK(text.find("% initpf @0 law 5") != std::string::npos);
  CHECK(text.find("% init @0 law 6") != std::string::npos);
  CHECK(text.find("% uniqueness 1:P") != std::string::npos);
  CHECK(text.find("% existence 0:A") != std::string::npos);
}

TEST_CASE("translation rejects invalid descriptions") {
  auto bad = pbc::parse_description("fluent P\npf Pf\ncaused P if true after Pf.\n");
  CHECK_THROWS_AS(translate(bad, 1), ValidationError);
}

TEST_CASE("D_m alone has no initpf constants") {
  auto t = translate(load("psd.pbc"), 2, TranslateOptions{false});
  for (const auto& o : t.rule_origin) CHECK(o.schema != Schema::InitConstraint);
  CHECK(t.program.declarations().size() == 2);
  CHECK_FALSE(t.timed.signature().by_name().empty());
  CHECK_FALSE(t.timed.find(0, t.timed.base().initpfs().front()));
}

TEST_CASE("splicing: prefixes of Tr(D,m) are the models of Tr(D,k)") {
  struct Case {
    const char* name;
    unsigned m;
  };
  for (auto [name, m] : {Case{"psd.pbc", 3}, Case{"yale.pbc", 3}, Case{"robot.pbc", 3}}) {
    auto d = load(name);
    auto full = translate(d, m);
    std::vector<TranslationOutput> subs;
    for (unsigned k = 0; k < m; ++k) subs.push_back(translate(d, k));
    std::vector<std::set<std::vector<ValueIndex>>> projected(m);
    auto p = to_lpmln(full);
    lpmln::EnumerateOptions eo;
    eo.require_hard_models = true;
    lpmln::for_each_hard_model(p, eo, [&](const lpmln::Interpretation& i, const lpmln::Weight2&) {
      for (unsigned k = 0; k < m; ++k) projected[k].insert(project(i, full.timed, subs[k].timed));
    });
    for (unsigned k = 0; k < m; ++k) {
      INFO(name << " k=" << k);
      CHECK(projected[k] == hard_models(subs[k]));
    }
  }
}
