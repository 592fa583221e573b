#include "pccsl/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pccsl/driver.hpp"
#include "pccsl/uppaal.hpp"
#include "pccsl/validate.hpp"

namespace pccsl::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string spec_path;
  std::string bound_text = "10s";
  std::string seed_text;
  double alpha = 0.05, beta = 0.05, delta = 0.01, epsilon = 0.05,
         confidence = 0.95;
  std::string out_dir = ".";
  std::string format = "text";
  int jobs = 1;
  int pool_size = 64;
  std::uint64_t runs = 0;
  std::uint64_t cap = 1'000'000;
  std::string rel, rel2;
  std::string observable;
  std::string mode = "max";
  std::string observables;
  bool trace = false;
};

double parse_bound(const std::string& text) {
  std::size_t pos = 0;
  double v = std::stod(text, &pos);
  std::string unit = text.substr(pos);
  if (unit.empty() || unit == "s") return v;
  if (unit == "ms") return v * 1e-3;
  if (unit == "us") return v * 1e-6;
  throw SpecError("bound unit must be us, ms or s: " + text);
}

std::uint64_t resolve_seed(const Options& opt) {
  if (!opt.seed_text.empty()) return std::stoull(opt.seed_text);
  if (const char* env = std::getenv("PCCSL_SEED")) return std::stoull(env);
  return 0;
}

driver::VerifyOptions verify_options(const Options& opt) {
  driver::VerifyOptions v;
  v.bound = parse_bound(opt.bound_text);
  v.seed = resolve_seed(opt);
  v.cfg.alpha = opt.alpha;
  v.cfg.beta = opt.beta;
  v.cfg.delta = opt.delta;
  v.cfg.epsilon = opt.epsilon;
  v.cfg.confidence = opt.confidence;
  v.jobs = opt.jobs;
  v.cap = opt.cap;
  return v;
}

json params_json(const driver::VerifyOptions& v) {
  return json{{"alpha", v.cfg.alpha},
              {"beta", v.cfg.beta},
              {"delta", v.cfg.delta},
              {"epsilon", v.cfg.epsilon},
              {"confidence", v.cfg.confidence},
              {"bound", v.bound},
              {"seed", v.seed}};
}

int load_spec(const Options& opt, std::ostream& err, dsl::Validated& out) {
  dsl::ParseResult parsed = dsl::parse_file(opt.spec_path);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diags)
      err << opt.spec_path << ":" << d.to_string() << "\n";
    return 1;
  }
  dsl::ValidateResult validated = dsl::validate(*parsed.ast);
  if (!validated.ok()) {
    for (const auto& d : validated.diags)
      err << opt.spec_path << ":" << d.to_string() << "\n";
    return 1;
  }
  out = std::move(*validated.value);
  return 0;
}

const RelationSpec* pick_relation(const dsl::Validated& v,
                                  const std::string& name, std::ostream& err) {
  if (!name.empty()) {
    const RelationSpec* rel = v.find_relation(name);
    if (!rel) err << "unknown relation: " << name << "\n";
    return rel;
  }
  if (v.relations.size() == 1) return &v.relations.front();
  err << "specify --rel <name> (the spec declares " << v.relations.size()
      << " relations)\n";
  return nullptr;
}

std::optional<dsl::Observable> parse_observable(const dsl::Validated& v,
                                                const std::string& text,
                                                bool allow_history,
                                                std::ostream& err) {
  std::string name = text;
  dsl::ObservableKind kind = dsl::ObservableKind::Auto;
  if (text.size() > 9 && text.substr(0, 8) == "history(" && text.back() == ')') {
    kind = dsl::ObservableKind::History;
    name = text.substr(8, text.size() - 9);
  } else if (text.size() > 7 && text.substr(0, 6) == "dense(" &&
             text.back() == ')') {
    kind = dsl::ObservableKind::Dense;
    name = text.substr(6, text.size() - 7);
  }
  dsl::Observable obs;
  obs.name = name;
  if (kind == dsl::ObservableKind::History) {
    if (!allow_history) {
      err << "history() observables are only available in simulate\n";
      return std::nullopt;
    }
    if (auto c = v.spec.clocks.find(name); c && !v.spec.clocks.is_dense(*c)) {
      obs.kind = dsl::Observable::Kind::History;
      obs.clock = *c;
      return obs;
    }
    err << "history() needs a logical clock: " << name << "\n";
    return std::nullopt;
  }
  for (std::uint32_t i = 0; i < v.spec.vars.size(); ++i)
    if (v.spec.vars[i].name == name && kind == dsl::ObservableKind::Auto) {
      obs.kind = dsl::Observable::Kind::Var;
      obs.var = i;
      return obs;
    }
  if (auto c = v.spec.clocks.find(name); c && v.spec.clocks.is_dense(*c)) {
    obs.kind = dsl::Observable::Kind::Dense;
    obs.clock = *c;
    return obs;
  }
  err << "observable '" << name << "' is neither a variable nor a dense clock\n";
  return std::nullopt;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_check(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  if (opt.format == "json") {
    json j{{"command", "check"},
           {"spec", opt.spec_path},
           {"clocks", v.spec.clocks.size()},
           {"expressions", v.spec.exprs.size()},
           {"relations", v.relations.size()},
           {"queries", v.queries.size()}};
    out << j.dump(2) << "\n";
  } else {
    out << "ok: " << v.spec.clocks.size() << " clocks, "
        << v.spec.exprs.size() << " expressions, " << v.relations.size()
        << " relations, " << v.queries.size() << " queries\n";
  }
  return 0;
}

int cmd_verify(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  driver::VerifyOptions vo = verify_options(opt);
  std::vector<RelationSpec> relations;
  for (const RelationSpec& rel : v.relations)
    if (opt.rel.empty() || rel.name == opt.rel) relations.push_back(rel);
  if (relations.empty()) {
    err << (opt.rel.empty() ? "spec declares no relations"
                            : "unknown relation: " + opt.rel)
        << "\n";
    return 1;
  }
  std::vector<driver::RelationVerdict> verdicts;
  try {
    verdicts = driver::verify(v.spec, relations, vo);
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  bool rejected = false, inconclusive = false;
  json jrels = json::array();
  for (const auto& r : verdicts) {
    rejected = rejected || r.decision == Decision::RejectH0;
    inconclusive = inconclusive || r.decision == Decision::Inconclusive;
    if (opt.format == "json") {
      jrels.push_back(json{{"relation", r.relation},
                           {"kind", relation_kind_name(r.kind)},
                           {"verdict", decision_name(r.decision)},
                           {"runs", r.runs},
                           {"satisfied", r.satisfied},
                           {"ratio", r.ratio},
                           {"threshold", r.threshold}});
    } else {
      out << r.relation << ": " << relation_kind_name(r.kind) << " p>="
          << uppaal::format_probability(r.threshold) << " -> "
          << decision_name(r.decision) << " (runs=" << r.runs
          << ", ratio=" << format_double(r.ratio) << ")\n";
    }
  }
  if (opt.format == "json") {
    json j{{"command", "verify"},
           {"spec", opt.spec_path},
           {"params", params_json(vo)},
           {"relations", jrels}};
    out << j.dump(2) << "\n";
  }
  if (opt.trace) {
    for (const auto& r : verdicts) {
      if (r.decision == Decision::AcceptH0) continue;
      const RelationSpec* rel = v.find_relation(r.relation);
      auto ce = driver::find_counterexample(v.spec, *rel, vo, 10000);
      if (ce) {
        driver::write_counterexample_files(*ce, opt.out_dir);
        out << "counter-example for " << r.relation << " written to "
            << opt.out_dir << "\n";
      }
    }
  }
  if (rejected) return 2;
  if (inconclusive) return 3;
  return 0;
}

int cmd_estimate(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  const RelationSpec* rel = pick_relation(v, opt.rel, err);
  if (!rel) return 1;
  driver::VerifyOptions vo = verify_options(opt);
  EstimateResult res;
  try {
    if (opt.runs > 0) {
      // fixed-k ratio with a Clopper-Pearson interval
      auto source = driver::relation_source(v.spec, *rel, vo);
      std::uint64_t m = 0;
      for (std::uint64_t i = 0; i < opt.runs; ++i) m += source() ? 1 : 0;
      auto [lo, hi] = clopper_pearson(m, opt.runs, vo.cfg.confidence);
      res = EstimateResult{opt.runs, m,
                           static_cast<double>(m) / static_cast<double>(opt.runs),
                           lo, hi};
    } else {
      res = driver::estimate_relation(v.spec, *rel, vo);
    }
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  if (opt.format == "json") {
    json j{{"command", "estimate"},
           {"relation", rel->name},
           {"verdict", res.point >= rel->threshold ? "ratio >= threshold"
                                                   : "ratio < threshold"},
           {"runs", res.runs},
           {"ratio", res.point},
           {"interval", json::array({res.lo, res.hi})},
           {"params", params_json(vo)}};
    out << j.dump(2) << "\n";
  } else {
    out << rel->name << ": ratio " << format_double(res.point) << " ("
        << res.successes << "/" << res.runs << "), "
        << format_double(100 * vo.cfg.confidence) << "% interval ["
        << format_double(res.lo) << ", " << format_double(res.hi) << "]\n";
  }
  return 0;
}

int cmd_compare(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  if (opt.rel.empty() || opt.rel2.empty()) {
    err << "compare needs --rel and --rel2\n";
    return 1;
  }
  const RelationSpec* left = v.find_relation(opt.rel);
  const RelationSpec* right = v.find_relation(opt.rel2);
  if (!left || !right) {
    err << "unknown relation: " << (left ? opt.rel2 : opt.rel) << "\n";
    return 1;
  }
  driver::VerifyOptions vo = verify_options(opt);
  CompareResult res;
  try {
    res = driver::compare_relations(v.spec, *left, *right, vo);
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  if (opt.format == "json") {
    json j{{"command", "compare"},
           {"left", left->name},
           {"right", right->name},
           {"verdict", compare_outcome_name(res.outcome)},
           {"pairs", res.pairs},
           {"difference", res.diff},
           {"params", params_json(vo)}};
    out << j.dump(2) << "\n";
  } else {
    out << left->name << " vs " << right->name << ": "
        << compare_outcome_name(res.outcome) << " (pairs=" << res.pairs
        << ", diff=" << format_double(res.diff) << ")\n";
  }
  return res.hit_cap ? 3 : 0;
}

int cmd_expected(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  if (opt.observable.empty()) {
    err << "expected needs --observable\n";
    return 1;
  }
  auto obs = parse_observable(v, opt.observable, false, err);
  if (!obs) return 1;
  bool want_max = opt.mode != "min";
  driver::VerifyOptions vo = verify_options(opt);
  std::uint64_t runs = opt.runs ? opt.runs : 200;
  driver::ExpectedReport rep;
  try {
    rep = driver::expected_value(v.spec, *obs, want_max, vo.bound, runs,
                                 vo.seed);
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  if (opt.format == "json") {
    json j{{"command", "expected"},
           {"observable", rep.observable},
           {"mode", want_max ? "max" : "min"},
           {"runs", rep.ci.n},
           {"mean", rep.ci.mean},
           {"interval",
            json::array({rep.ci.mean - rep.ci.half_width,
                         rep.ci.mean + rep.ci.half_width})},
           {"params", params_json(vo)}};
    out << j.dump(2) << "\n";
  } else {
    out << "E[" << (want_max ? "max" : "min") << " " << rep.observable
        << "] = " << format_double(rep.ci.mean) << " +- "
        << format_double(rep.ci.half_width) << " (" << rep.ci.n << " runs)\n";
  }
  return 0;
}

int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  driver::VerifyOptions vo = verify_options(opt);
  std::vector<dsl::Observable> observables;
  std::uint64_t runs = opt.runs ? opt.runs : 1;
  if (!opt.observables.empty()) {
    for (const std::string& item : split_list(opt.observables)) {
      auto obs = parse_observable(v, item, true, err);
      if (!obs) return 1;
      observables.push_back(*obs);
    }
  } else {
    for (const dsl::Query& q : v.queries)
      if (q.kind == dsl::QueryKind::Simulate) {
        observables = q.observables;
        if (!opt.runs && q.runs > 0) runs = static_cast<std::uint64_t>(q.runs);
        break;
      }
    if (observables.empty()) {
      err << "simulate needs --observables or a simulate query in the spec\n";
      return 1;
    }
  }
  try {
    driver::simulate_query(v.spec, observables, vo.bound, runs, vo.seed, out);
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int cmd_export(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  uppaal::ExportOptions eo;
  eo.pool_size = opt.pool_size;
  eo.default_bound = parse_bound(opt.bound_text);
  uppaal::NtaModel model;
  try {
    model = uppaal::export_model(v.spec, v.relations, eo);
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  uppaal::CheckReport check = uppaal::check_model(model);
  if (!check.ok) {
    for (const std::string& p : check.problems) err << "model: " << p << "\n";
    return 3;
  }
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  std::string base = fs::path(opt.spec_path).stem().string();
  fs::path xml_path = fs::path(opt.out_dir) / (base + ".xml");
  fs::path q_path = fs::path(opt.out_dir) / (base + ".q");
  {
    std::ofstream xml(xml_path);
    xml << uppaal::write_xml(model);
  }
  {
    std::ofstream q(q_path);
    q << uppaal::write_queries(model);
  }
  if (opt.format == "json") {
    json j{{"command", "export"},
           {"model", xml_path.string()},
           {"queries", q_path.string()},
           {"templates", model.templates.size()},
           {"observers", check.observer_instances}};
    out << j.dump(2) << "\n";
  } else {
    out << "wrote " << xml_path.string() << " (" << model.templates.size()
        << " templates, " << check.observer_instances << " observers)\n";
    out << "wrote " << q_path.string() << " (" << model.queries.size()
        << " queries)\n";
  }
  return 0;
}

int cmd_trace(const Options& opt, std::ostream& out, std::ostream& err) {
  dsl::Validated v;
  if (int rc = load_spec(opt, err, v)) return rc;
  driver::VerifyOptions vo = verify_options(opt);
  std::uint64_t max_runs = opt.runs ? opt.runs : 10000;
  std::vector<const RelationSpec*> candidates;
  if (!opt.rel.empty()) {
    const RelationSpec* rel = v.find_relation(opt.rel);
    if (!rel) {
      err << "unknown relation: " << opt.rel << "\n";
      return 1;
    }
    candidates.push_back(rel);
  } else {
    for (const RelationSpec& rel : v.relations) candidates.push_back(&rel);
  }
  try {
    for (const RelationSpec* rel : candidates) {
      auto ce = driver::find_counterexample(v.spec, *rel, vo, max_runs);
      if (!ce) continue;
      driver::write_counterexample_files(*ce, opt.out_dir);
      const RelationMonitor monitor = [&] {
        RelationMonitor m(ce->relation);
        for (const Instant& in : ce->run.instants) m.step(in);
        return m;
      }();
      const MonitorState* failure = monitor.first_failure();
      if (opt.format == "json") {
        json j{{"command", "trace"},
               {"relation", rel->name},
               {"run_index", ce->run_index},
               {"failed_at", failure ? failure->failed_at : 0.0},
               {"out", opt.out_dir}};
        out << j.dump(2) << "\n";
      } else {
        out << rel->name << ": violation in run " << ce->run_index << " at t="
            << format_double(failure ? failure->failed_at : 0.0)
            << "; counter-example written to " << opt.out_dir << "\n";
      }
      return 0;
    }
  } catch (const PccslError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  out << "no violation found within " << max_runs << " runs\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"PrCCSL* toolkit: simulate, verify and export clocked "
               "stochastic specifications"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("spec", opt.spec_path, "specification file (.pccsl)")
        ->required();
    cmd->add_option("--bound", opt.bound_text, "time bound, e.g. 10000ms");
    cmd->add_option("--seed", opt.seed_text, "run seed (PCCSL_SEED fallback)");
    cmd->add_option("--alpha", opt.alpha, "type-I error");
    cmd->add_option("--beta", opt.beta, "type-II error");
    cmd->add_option("--delta", opt.delta, "SPRT indifference half-width");
    cmd->add_option("--epsilon", opt.epsilon, "estimation half-width");
    cmd->add_option("--confidence", opt.confidence, "interval confidence");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--format", opt.format, "text | json")
        ->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--jobs", opt.jobs, "parallel runs");
    cmd->add_option("--runs", opt.runs, "run count, where applicable");
    cmd->add_option("--cap", opt.cap, "sequential-test run cap");
    return cmd;
  };

  add_common(app.add_subcommand("check", "parse and validate only"));
  CLI::App* verify = add_common(
      app.add_subcommand("verify", "SPRT verdict for every relation"));
  verify->add_option("--rel", opt.rel, "verify one relation only");
  verify->add_flag("--trace", opt.trace,
                   "write counter-examples for rejected relations");
  CLI::App* estimate = add_common(
      app.add_subcommand("estimate", "probability estimate for a relation"));
  estimate->add_option("--rel", opt.rel, "relation name");
  CLI::App* compare = add_common(
      app.add_subcommand("compare", "compare two relation probabilities"));
  compare->add_option("--rel", opt.rel, "left relation");
  compare->add_option("--rel2", opt.rel2, "right relation");
  CLI::App* expected = add_common(app.add_subcommand(
      "expected", "mean per-run extremum of an observable"));
  expected->add_option("--observable", opt.observable,
                       "variable or dense clock");
  expected->add_option("--mode", opt.mode, "min | max")
      ->check(CLI::IsMember({"min", "max"}));
  CLI::App* simulate = add_common(app.add_subcommand(
      "simulate", "time series of observables along runs (CSV)"));
  simulate->add_option("--observables", opt.observables,
                       "comma list: var, history(c), dense(c)");
  CLI::App* do_export = add_common(app.add_subcommand(
      "export", "write the UPPAAL-SMC model and query files"));
  do_export->add_option("--pool-size", opt.pool_size,
                        "delay instances per DelayFor expression");
  CLI::App* trace = add_common(app.add_subcommand(
      "trace", "counter-example CSV for the first failed relation"));
  trace->add_option("--rel", opt.rel, "relation name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help and friends
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand("check")) return cmd_check(opt, out, err);
    if (app.got_subcommand("verify")) return cmd_verify(opt, out, err);
    if (app.got_subcommand("estimate")) return cmd_estimate(opt, out, err);
    if (app.got_subcommand("compare")) return cmd_compare(opt, out, err);
    if (app.got_subcommand("expected")) return cmd_expected(opt, out, err);
    if (app.got_subcommand("simulate")) return cmd_simulate(opt, out, err);
    if (app.got_subcommand("export")) return cmd_export(opt, out, err);
    if (app.got_subcommand("trace")) return cmd_trace(opt, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  err << "no subcommand\n";
  return 1;
}

}  // namespace pccsl::cli
