#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pbcplus/error.hpp"
#include "pbcplus/pbc/parser.hpp"
#include "pbcplus/query.hpp"
#include "pbcplus/transition.hpp"
#include "pbcplus/translator.hpp"

namespace pbcplus::cli {

using json = nlohmann::ordered_json;

enum class Format { Text, Json };

struct Config {
  std::uint64_t max_interp = std::uint64_t{1} << 24;
  std::uint64_t max_states = std::uint64_t{1} << 20;
  double tolerance = 1e-9;
  Format format = Format::Text;
  unsigned threads = 1;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Rounded to 9 decimals so JSON prints the same digits as text.
inline double round9(double x) { return std::round(x * 1e9) / 1e9; }

inline std::string fixed9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", x);
  return buf;
}

template <class F>
auto parse_file(const std::string& path, F&& parse) {
  std::string src = read_file(path);
  try {
    return parse(src);
  } catch (const ParseError& e) {
    throw UsageError(path + ":" + e.what());
  }
}

inline std::uint64_t env_cap(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  unsigned long long n = std::strtoull(v, &end, 10);
  if (*end || n < 1) throw UsageError(std::string(name) + " must be a positive integer");
  return n;
}

inline TransitionOptions limits(const Config& c) {
  TransitionOptions o;
  o.max_candidates = c.max_interp;
  o.max_states = c.max_states;
  o.threads = c.threads;
  return o;
}

/// `i:c=v` for every constant with a value, in signature order.
inline std::vector<std::string> model_atoms(const lpmln::Signature& sig, const Interpretation& i) {
  std::vector<std::string> out;
  for (ConstId c = 0; c < sig.constant_count(); ++c) {
    if (auto v = i.value(sig, c)) out.push_back(sig.constant(c).name + "=" + sig.constant(c).domain[*v]);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) out += (k ? sep : "") + xs[k];
  return out;
}

inline void cmd_parse(const std::string& file, const Config& cfg, std::ostream& out) {
  auto d = parse_file(file, [](const std::string& s) { return pbc::parse_description(s); });
  auto diags = pbc::validate(pbc::expand_sugar(d));
  if (cfg.format == Format::Json) {
    json j;
    j["constants"] = json::array();
    for (ConstId c = 0; c < d.signature.size(); ++c) {
      j["constants"].push_back({{"name", d.signature.name(c)},
                                {"kind", pbc::keyword(d.signature.kind(c))},
                                {"domain", d.signature.domain(c)}});
    }
    j["laws"] = json::array();
    for (const auto& l : d.laws) j["laws"].push_back(pbc::print_law(d, l));
    j["diagnostics"] = json::array();
    for (const auto& x : diags) j["diagnostics"].push_back(pbc::to_string(x));
    out << j.dump(2) << "\n";
  } else {
    out << pbc::print_description(d);
    for (const auto& x : diags) out << "% " << pbc::to_string(x) << "\n";
  }
  if (pbc::has_errors(diags)) throw ValidationError("the description has errors");
}

inline void cmd_translate(const std::string& file, unsigned m, bool explain_rules, const Config& cfg,
                          std::ostream& out) {
  auto d = parse_file(file, [](const std::string& s) { return pbc::parse_description(s); });
  auto t = translate(d, m);
  if (cfg.format == Format::Json) {
    auto p = to_lpmln(t);
    json j;
    j["steps"] = m;
    j["rules"] = json::array();
    for (const auto& r : p.rules()) {
      json w = r.weight.is_hard() ? json("hard") : json(r.weight.value());
      j["rules"].push_back({{"weight", w}, {"formula", lpmln::to_string(r.formula, p.signature())}});
    }
    out << j.dump(2) << "\n";
    return;
  }
  if (explain_rules) {
    out << explain(t);
    return;
  }
  auto p = to_lpmln(t);
  for (const auto& r : p.rules()) {
    out << (r.weight.is_hard() ? std::string("hard") : pbc::format_probability(r.weight.value())) << ": "
        << lpmln::to_string(r.formula, p.signature()) << "\n";
  }
}

inline void cmd_ts(const std::string& file, const std::string& dot, const Config& cfg, std::ostream& out) {
  auto d = parse_file(file, [](const std::string& s) { return pbc::parse_description(s); });
  Analysis a(d, limits(cfg));
  auto sys = a.transition_system();
  auto space = a.state_space();
  const auto& sig = a.signature();
  if (!dot.empty()) {
    std::ofstream f(dot, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + dot + "'");
    f << export_dot(sys);
  }
  if (cfg.format == Format::Json) {
    json j;
    j["states"] = json::array();
    for (const auto& s : sys.states) j["states"].push_back(describe(sig, sys.fluents, s));
    j["initial"] = json::array();
    for (const auto& s : space.initial) j["initial"].push_back(*a.state_index(s));
    j["edges"] = json::array();
    for (const auto& e : sys.edges) {
      j["edges"].push_back({{"from", e.from},
                            {"event", describe_event(sig, sys.actions, e.event)},
                            {"to", e.to},
                            {"probability", round9(e.probability)}});
    }
    out << j.dump(2) << "\n";
    return;
  }
  out << sys.states.size() << " states, " << sys.edges.size() << " edges\n";
  for (std::size_t s = 0; s < sys.states.size(); ++s) {
    out << "s" << s << ": " << describe(sig, sys.fluents, sys.states[s]);
    if (std::find(space.initial.begin(), space.initial.end(), sys.states[s]) != space.initial.end()) {
      out << "  (initial " << fixed9(a.initial_probability(sys.states[s])) << ")";
    }
    out << "\n";
  }
  for (const auto& e : sys.edges) {
    out << "s" << e.from << " -> s" << e.to << "  " << describe_event(sig, sys.actions, e.event) << " : "
        << fixed9(e.probability) << "\n";
  }
}

inline void cmd_check(const std::string& file, unsigned m, const Config& cfg, std::ostream& out) {
  auto d = parse_file(file, [](const std::string& s) { return pbc::parse_description(s); });
  Analysis a(d, limits(cfg));
  auto rep = a.check_assumptions();
  auto st = a.stationarity(m);
  const bool stationary = st.max_deviation <= cfg.tolerance;
  auto line = [](const AssumptionCheck& c) { return c.holds ? std::string("pass") : "FAIL (" + c.witness + ")"; };
  if (cfg.format == Format::Json) {
    auto item = [](const AssumptionCheck& c) { return json{{"holds", c.holds}, {"witness", c.witness}}; };
    json j;
    j["no_concurrency"] = item(rep.no_concurrency);
    j["pf_controlled"] = item(rep.pf_controlled);
    j["initpf_controlled"] = item(rep.initpf_controlled);
    j["stationarity"] = {{"steps", m},
                         {"pass", stationary},
                         {"max_deviation", st.max_deviation},
                         {"comparisons", st.comparisons}};
    out << j.dump(2) << "\n";
    return;
  }
  out << "assumption 1 (no concurrency): " << line(rep.no_concurrency) << "\n";
  out << "assumption 2 (pf determines successor): " << line(rep.pf_controlled) << "\n";
  out << "assumption 3 (initpf determines initial state): " << line(rep.initpf_controlled) << "\n";
  out << "stationarity m=" << m << ": " << (stationary ? "pass" : "FAIL") << " (max deviation " << st.max_deviation
      << ", " << st.comparisons << " comparisons)\n";
}

inline void cmd_query(const std::string& file, const std::string& qfile, std::optional<PlanMode> mode,
                      Engine engine, const Config& cfg, std::ostream& out) {
  auto d = parse_file(file, [](const std::string& s) { return pbc::parse_description(s); });
  auto q = parse_file(qfile, [&](const std::string& s) { return pbc::parse_query(s, d); });
  QueryOptions opt;
  opt.engine = engine;
  opt.plan_mode = mode.value_or(PlanMode::Map);
  opt.limits = limits(cfg);
  const unsigned steps = q.steps;
  auto r = run_query(d, std::move(q), opt);
  ActionDescription e = prepare(d);
  TimedSignature ts(e.signature, steps);
  const auto& tsig = ts.signature();
  const bool js = cfg.format == Format::Json;
  json j;
  j["query"] = pbc::name_of(r.kind);
  std::ostringstream text;
  text << "query: " << pbc::name_of(r.kind) << "\n";

  if (r.probability) {
    j["probability"] = round9(r.probability->value);
    j["masses"] = {{"numerator", r.probability->numerator}, {"denominator", r.probability->denominator}};
    text << "probability: " << fixed9(r.probability->value) << "\n";
    text << "masses: " << r.probability->numerator << " / " << r.probability->denominator << "\n";
  }
  if (r.map) {
    j["probability"] = round9(r.map->probability);
    j["models"] = json::array();
    for (const auto& m : r.map->models) j["models"].push_back(model_atoms(tsig, m));
    text << "probability: " << fixed9(r.map->probability) << "\n";
    for (const auto& m : r.map->models) text << "model: " << join(model_atoms(tsig, m), " ") << "\n";
  }
  if (r.plan) {
    std::vector<ConstId> actions = e.signature.actions();
    j["mode"] = name_of(r.plan->mode);
    j["plan"] = json::array();
    text << "mode: " << name_of(r.plan->mode) << "\n";
    for (std::size_t i = 0; i < r.plan->actions.size(); ++i) {
      std::string ev = describe_event(e.signature, actions, r.plan->actions[i]);
      j["plan"].push_back(ev);
      text << "step " << i << ": " << ev << "\n";
    }
    j["probability"] = round9(r.plan->probability);
    text << "probability: " << fixed9(r.plan->probability) << "\n";
    if (!r.plan->note.empty()) {
      j["note"] = r.plan->note;
      text << "note: " << r.plan->note << "\n";
    }
  }
  if (r.argmax) {
    j["probability"] = round9(r.argmax->probability);
    j["assignments"] = json::array();
    text << "probability: " << fixed9(r.argmax->probability) << "\n";
    for (const auto& a : r.argmax->best) {
      std::vector<std::string> xs;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const auto& c = tsig.constant(r.argmax->constants[k]);
        xs.push_back(c.name + "=" + c.domain[a[k]]);
      }
      j["assignments"].push_back(xs);
      text << "assignment: " << join(xs, " ") << "\n";
    }
  }
  if (r.diagnose) {
    j["probability"] = round9(r.diagnose->probability);
    j["models"] = json::array();
    text << "probability: " << fixed9(r.diagnose->probability) << "\n";
    for (std::size_t k = 0; k < r.diagnose->models.size(); ++k) {
      std::vector<std::string> ab;
      for (const auto& x : r.diagnose->abnormal[k]) ab.push_back(std::to_string(x.step) + ":" + e.signature.name(x.fluent));
      j["models"].push_back({{"abnormal", ab}, {"atoms", model_atoms(tsig, r.diagnose->models[k])}});
      text << "abnormal: " << (ab.empty() ? "none" : join(ab, " ")) << "\n";
    }
  }
  j["engine"] = name_of(r.engine);
  text << "engine: " << name_of(r.engine) << "\n";
  if (js) {
    out << j.dump(2) << "\n";
  } else {
    out << text.str();
  }
}

/// Exit code 0 on success, 1 on user errors, 2 when a cap is exceeded.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pBC+ action descriptions: translation, transition systems and exact inference", "pbc"};
  app.require_subcommand(1);
  Config cfg;
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tolerance", cfg.tolerance, "Stationarity tolerance")->check(CLI::PositiveNumber);

  std::string input, qfile, dot;
  unsigned m = 2;
  bool explain_flag = false, map_flag = false, argmax_flag = false;
  std::string engine = "auto";

  auto* parse = app.add_subcommand("parse", "Print the parsed description and its diagnostics");
  parse->add_option("-i,--input", input)->required();
  auto* tr = app.add_subcommand("translate", "Print the LP^MLN program for m steps");
  tr->add_option("-i,--input", input)->required();
  tr->add_option("-m,--steps", m)->required();
  tr->add_flag("--explain", explain_flag, "Annotate each rule with its origin");
  auto* ts = app.add_subcommand("ts", "Print the transition system");
  ts->add_option("-i,--input", input)->required();
  ts->add_option("--dot", dot, "Write a DOT graph to this file");
  auto* check = app.add_subcommand("check", "Check the assumptions and stationarity");
  check->add_option("-i,--input", input)->required();
  check->add_option("-m,--steps", m, "Steps for the stationarity check")->capture_default_str();
  auto* query = app.add_subcommand("query", "Answer a query file");
  query->add_option("-i,--input", input)->required();
  query->add_option("-q,--query", qfile)->required();
  auto* mapf = query->add_flag("--map", map_flag, "Plan with the most probable stable model");
  query->add_flag("--argmax", argmax_flag, "Plan by maximizing the goal probability")->excludes(mapf);
  query->add_option("--engine", engine)->check(CLI::IsMember({"auto", "fast", "enumeration"}));
  for (auto* sub : {parse, tr, ts, check, query}) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", cfg.tolerance)->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? 0 : 1;
  }
  cfg.format = format == "json" ? Format::Json : Format::Text;

  try {
    cfg.max_interp = env_cap("PBC_MAX_INTERP", cfg.max_interp);
    cfg.max_states = env_cap("PBC_MAX_STATES", cfg.max_states);
    if (*parse) {
      cmd_parse(input, cfg, out);
    } else if (*tr) {
      cmd_translate(input, m, explain_flag, cfg, out);
    } else if (*ts) {
      cmd_ts(input, dot, cfg, out);
    } else if (*check) {
      cmd_check(input, m, cfg, out);
    } else if (*query) {
      std::optional<PlanMode> mode;
      if (map_flag) mode = PlanMode::Map;
      if (argmax_flag) mode = PlanMode::Argmax;
      Engine en = engine == "fast" ? Engine::Fast : engine == "enumeration" ? Engine::Enumeration : Engine::Auto;
      cmd_query(input, qfile, mode, en, cfg, out);
    }
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pbcplus::cli
