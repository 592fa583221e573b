// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Run through ctest (one ctest entry per criterion) or directly.

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "pccsl/cli.hpp"
#include "pccsl/driver.hpp"
#include "pccsl/uppaal.hpp"
#include "pccsl/validate.hpp"
#include "testutil.hpp"

using namespace pccsl;

#ifndef PCCSL_SOURCE_DIR
#define PCCSL_SOURCE_DIR "."
#endif

namespace {

struct Criterion {
  int number;
  bool ok = true;

  void require(bool cond) { ok = ok && cond; }
  ~Criterion() {
    std::printf("[criterion %d] %s\n", number, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};

dsl::Validated load(const std::string& rel_path) {
  auto parsed = dsl::parse_file(std::string(PCCSL_SOURCE_DIR) + "/" + rel_path);
  REQUIRE(parsed.ok());
  auto validated = dsl::validate(*parsed.ast);
  REQUIRE(validated.ok());
  return std::move(*validated.value);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::function<bool()> bernoulli(double q, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng, q] { return rng->uniform01() < q; };
}

}  // namespace

TEST_CASE("criterion 1: monitor-oracle equivalence on 10^4 random traces") {
  Criterion c{1};
  Rng rng(20260808);
  const RelationKind kinds[] = {RelationKind::Subclock, RelationKind::Coincidence,
                                RelationKind::Exclusion, RelationKind::Precedence,
                                RelationKind::Causality};
  std::uint64_t checked = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    Run run = testutil::random_trace(rng, 10, 50);
    std::size_t n = run.clock_names.size();
    for (RelationKind kind : kinds)
      for (ClockIdx i = 0; i < n; ++i)
        for (ClockIdx j = 0; j < n; ++j) {
          if (i == j) continue;
          RelationSpec rel;
          rel.name = "r";
          rel.kind = kind;
          rel.clocks = {i, j};
          rel.threshold = 0.5;
          bool monitor = check_nary(rel, run);
          bool oracle = testutil::oracle_binary(kind, run, i, j, run.bound);
          if (monitor != oracle) c.require(false);
          ++checked;
        }
  }
  MESSAGE("pair verdicts checked: ", checked);
  c.require(checked > 0);
  CHECK(c.ok);
}

TEST_CASE("criterion 2: n-ary chain and pairwise laws on 10^3 traces") {
  Criterion c{2};
  Rng rng(31415926);
  const RelationKind transitive[] = {RelationKind::Subclock,
                                     RelationKind::Coincidence,
                                     RelationKind::Precedence,
                                     RelationKind::Causality};
  int done = 0;
  while (done < 1000) {
    Run run = testutil::random_trace(rng, 4, 50);
    if (run.clock_names.size() < 4) continue;
    ++done;
    std::vector<ClockIdx> clocks = {0, 1, 2, 3};
    for (RelationKind kind : transitive) {
      RelationSpec rel;
      rel.name = "r";
      rel.kind = kind;
      rel.clocks = clocks;
      rel.threshold = 0.5;
      bool chain = check_nary(rel, run);
      bool pairwise =
          testutil::oracle_nary_pairwise(kind, run, clocks, run.bound);
      if (chain != pairwise) c.require(false);
    }
    RelationSpec excl;
    excl.name = "x";
    excl.kind = RelationKind::Exclusion;
    excl.clocks = clocks;
    excl.threshold = 0.5;
    if (check_nary(excl, run) !=
        testutil::oracle_nary_pairwise(RelationKind::Exclusion, run, clocks,
                                       run.bound))
      c.require(false);
  }
  CHECK(c.ok);
}

TEST_CASE("criterion 3: analytic (2/3)^5 probability within +-0.03") {
  Criterion c{3};
  const char* model = R"dsl(
denseclocktype MsUnit { reference idealClk; factor 1000; }
clock ms : MsUnit
clock camera stimulus uniform(35ms, 65ms)
expr src = filter(camera, "111110(0)")
expr fltr = filter(camera, "011111(0)")
expr d40 = delay(src, 40, ms)
expr d60 = delay(src, 60, ms)
rel W = precedence[0.1](d40, fltr, d60) within 1000ms
)dsl";
  auto parsed = dsl::parse(model);
  REQUIRE(parsed.ok());
  auto validated = dsl::validate(*parsed.ast);
  REQUIRE(validated.ok());
  const auto& v = *validated.value;
  auto batches = simulate_batch(v.spec, v.relations, 1.0, 2000, 424242,
                                BatchOptions{1, false});
  double ratio = run_ratio(batches.at(0).verdicts);
  double expect = std::pow(2.0 / 3.0, 5);  // 0.131687...
  MESSAGE("observed ", ratio, " expected ", expect);
  c.require(std::abs(ratio - expect) <= 0.03);
  CHECK(c.ok);
}

TEST_CASE("criterion 4: sprt calibration on bernoulli oracles") {
  Criterion c{4};
  struct Setting {
    double q, p, delta;
    Decision want;
  };
  const Setting settings[] = {
      {0.9, 0.5, 0.01, Decision::AcceptH0},
      {0.2, 0.95, 0.01, Decision::RejectH0},
      {0.97, 0.95, 0.005, Decision::AcceptH0},
  };
  int setting_index = 0;
  for (const Setting& s : settings) {
    SmcConfig cfg;
    cfg.delta = s.delta;
    int correct = 0;
    for (int rep = 0; rep < 200; ++rep) {
      auto r = hypothesis_test(
          bernoulli(s.q, derive_seed(777000 + setting_index, rep)), s.p, cfg);
      if (r.decision == s.want) ++correct;
    }
    MESSAGE("q=", s.q, " p=", s.p, " delta=", s.delta, ": ", correct,
            "/200 correct");
    c.require(correct >= 190);
    ++setting_index;
  }
  CHECK(c.ok);
}

TEST_CASE("criterion 5: expression law property suites") {
  Criterion c{5};
  Rng rng(5550123);

  // FilterBy result is a subclock of its base
  for (int rep = 0; rep < 100; ++rep) {
    PcbsSpec spec;
    StimulusDecl st;
    st.kind = StimulusKind::UniformInterarrival;
    st.lo = 0.01;
    st.hi = 0.05;
    ClockIdx base = spec.add_stimulus("base", st);
    FilterWord word;
    std::size_t plen = static_cast<std::size_t>(rng.uniform_int(0, 3));
    std::size_t vlen = static_cast<std::size_t>(rng.uniform_int(1, 4));
    for (std::size_t i = 0; i < plen; ++i)
      word.prefix.push_back(rng.uniform01() < 0.5);
    for (std::size_t i = 0; i < vlen; ++i)
      word.period.push_back(rng.uniform01() < 0.5);
    ExprDecl f;
    f.kind = ExprKind::FilterBy;
    f.operands = {base};
    f.word = word;
    ClockIdx res = spec.add_expr("res", f);
    finalize(spec);
    Run run = simulate_run(spec, 2.0, derive_seed(1, rep));
    RelationSpec sub;
    sub.name = "s";
    sub.kind = RelationKind::Subclock;
    sub.clocks = {res, base};
    sub.threshold = 1.0;
    if (!check_nary(sub, run)) c.require(false);
  }

  // Infimum/Supremum history laws, exact, at every instant
  for (int rep = 0; rep < 100; ++rep) {
    PcbsSpec spec;
    std::size_t arity = static_cast<std::size_t>(rng.uniform_int(2, 4));
    std::vector<ClockIdx> ops;
    for (std::size_t k = 0; k < arity; ++k) {
      StimulusDecl st;
      st.kind = StimulusKind::UniformInterarrival;
      st.lo = 0.01;
      st.hi = 0.08;
      ops.push_back(spec.add_stimulus("c" + std::to_string(k), st));
    }
    ExprDecl inf;
    inf.kind = ExprKind::Infimum;
    inf.operands = ops;
    ClockIdx inf_c = spec.add_expr("infc", inf);
    ExprDecl sup;
    sup.kind = ExprKind::Supremum;
    sup.operands = ops;
    ClockIdx sup_c = spec.add_expr("supc", sup);
    finalize(spec);
    Run run = simulate_run(spec, 2.0, derive_seed(2, rep));
    for (const Instant& in : run.instants) {
      std::int64_t mx = 0, mn = INT64_MAX;
      for (ClockIdx op : ops) {
        std::int64_t h = history(run, op, in.time);
        mx = std::max(mx, h);
        mn = std::min(mn, h);
      }
      if (history(run, inf_c, in.time) != mx) c.require(false);
      if (history(run, sup_c, in.time) != mn) c.require(false);
    }
  }

  // PeriodicOn: exactly n base ticks between consecutive result ticks
  for (int rep = 0; rep < 100; ++rep) {
    PcbsSpec spec;
    StimulusDecl st;
    st.kind = StimulusKind::UniformInterarrival;
    st.lo = 0.005;
    st.hi = 0.03;
    ClockIdx base = spec.add_stimulus("base", st);
    std::int64_t n = rng.uniform_int(1, 9);
    ExprDecl p;
    p.kind = ExprKind::PeriodicOn;
    p.operands = {base};
    p.period_n = n;
    ClockIdx res = spec.add_expr("res", p);
    finalize(spec);
    Run run = simulate_run(spec, 2.0, derive_seed(3, rep));
    const auto& base_ticks = run.tick_times[base];
    const auto& res_ticks = run.tick_times[res];
    double prev = -1.0;
    for (double t : res_ticks) {
      std::int64_t between = 0;
      for (double bt : base_ticks)
        if (bt > prev && bt <= t) ++between;
      if (between != n) c.require(false);
      prev = t;
    }
    // alignment: the k-th result tick is the (k*n)-th base tick
    for (std::size_t k = 0; k < res_ticks.size(); ++k)
      if (res_ticks[k] != base_ticks[(k + 1) * n - 1]) c.require(false);
  }

  // DelayFor over a dense base shifts tick times by exactly d/r
  for (int rep = 0; rep < 100; ++rep) {
    PcbsSpec spec;
    spec.ensure_ideal();
    DenseClockTypeDecl dt;
    dt.name = "U";
    dt.reference = *spec.ideal;
    dt.factor = rng.uniform(0.5, 2000.0);
    std::uint32_t type = spec.add_type(dt);
    ClockIdx unit = spec.add_dense("unit", type);
    StimulusDecl st;
    st.kind = StimulusKind::UniformInterarrival;
    st.lo = 0.01;
    st.hi = 0.09;
    ClockIdx ref = spec.add_stimulus("ref", st);
    double d = rng.uniform(0.0, 80.0);
    ExprDecl delay;
    delay.kind = ExprKind::DelayFor;
    delay.operands = {ref, unit};
    delay.lower = delay.upper = d;
    ClockIdx res = spec.add_expr("res", delay);
    finalize(spec);
    const double bound = 2.0;
    Run run = simulate_run(spec, bound, derive_seed(4, rep));
    double rate = spec.effective_rate(unit);
    std::vector<double> expect;
    for (double t : run.tick_times[ref])
      if (t + d / rate <= bound) expect.push_back(t + d / rate);
    if (run.tick_times[res] != expect) c.require(false);
  }
  CHECK(c.ok);
}

TEST_CASE("criterion 6: probabilistic action branch frequencies") {
  Criterion c{6};
  std::vector<VarDecl> vars = {{"v", VarDomain::Int, Value::ofInt(0)}};
  ProbActionDecl pa;
  pa.branches = {{0.2, {{0, VExpr::constant(Value::ofInt(0))}}},
                 {0.3, {{0, VExpr::constant(Value::ofInt(1))}}},
                 {0.5, {{0, VExpr::constant(Value::ofInt(2))}}}};
  validate_prob_action(pa, vars);
  VarStore store;
  store.vals = {vars[0].initial};
  Rng rng(60646);
  std::vector<std::uint64_t> counts(3, 0);
  for (int i = 0; i < 100000; ++i)
    ++counts[execute_prob_action(store, pa, vars, rng, 0.0)];
  double stat = testutil::chi_square_stat(counts, {0.2, 0.3, 0.5});
  MESSAGE("chi-square statistic ", stat, " vs 9.21");
  c.require(stat < testutil::chi2_crit_99(2));
  CHECK(c.ok);
}

TEST_CASE("criterion 7: corpus verdicts and the B4 counter-example") {
  Criterion c{7};
  driver::VerifyOptions opts;
  opts.bound = 10.0;
  opts.seed = 7;

  // AV: A1-A7 accepted at the published thresholds
  dsl::Validated av = load("corpus/av.pccsl");
  const std::vector<std::pair<std::string, double>> av_expect = {
      {"A1", 0.96}, {"A2", 0.95}, {"A3", 0.96}, {"A4", 0.95},
      {"A5", 0.95}, {"A6", 0.95}, {"A7", 0.95}};
  c.require(av.relations.size() == av_expect.size());
  for (std::size_t i = 0; i < av_expect.size(); ++i) {
    c.require(av.relations[i].name == av_expect[i].first);
    c.require(av.relations[i].threshold == av_expect[i].second);
  }
  auto av_verdicts = driver::verify(av.spec, av.relations, opts);
  for (const auto& v : av_verdicts) {
    MESSAGE("AV ", v.relation, ": ", decision_name(v.decision), " after ",
            v.runs, " runs");
    c.require(v.decision == Decision::AcceptH0);
  }

  // CAS pre-fix: B4 rejected, everything else accepted
  dsl::Validated cas = load("corpus/cas.pccsl");
  c.require(cas.find_relation("B5")->threshold == 0.98);
  auto cas_verdicts = driver::verify(cas.spec, cas.relations, opts);
  for (const auto& v : cas_verdicts) {
    MESSAGE("CAS ", v.relation, ": ", decision_name(v.decision), " after ",
            v.runs, " runs");
    if (v.relation == "B4")
      c.require(v.decision == Decision::RejectH0);
    else
      c.require(v.decision == Decision::AcceptH0);
  }

  // CAS fixed: B4 becomes valid
  dsl::Validated fixed = load("corpus/cas_fixed.pccsl");
  auto fixed_verdicts = driver::verify(fixed.spec, fixed.relations, opts);
  for (const auto& v : fixed_verdicts) c.require(v.decision == Decision::AcceptH0);

  // the B4 counter-example shows a lead turn with no follow turn in 500ms
  auto ce = driver::find_counterexample(cas.spec, *cas.find_relation("B4"),
                                        opts, 1000);
  c.require(ce.has_value());
  if (ce) {
    const Run& run = ce->run;
    auto lead = run.find_clock("leadTurnLeft");
    auto follow = run.find_clock("followTurn");
    c.require(lead.has_value() && follow.has_value());
    bool found_gap = false;
    for (double t : run.tick_times[*lead]) {
      bool responded = false;
      for (double f : run.tick_times[*follow])
        if (f > t && f <= t + 0.5) responded = true;
      if (!responded) found_gap = true;
    }
    c.require(found_gap);
  }
  CHECK(c.ok);
}

TEST_CASE("criterion 8: export golden files and published query strings") {
  Criterion c{8};
  std::string dir = std::string(PCCSL_SOURCE_DIR) + "/tests/golden/";
  dsl::Validated av = load("corpus/av.pccsl");
  uppaal::NtaModel av_model = uppaal::export_model(av.spec, av.relations);
  c.require(uppaal::write_xml(av_model) == slurp(dir + "av.xml"));
  c.require(uppaal::write_queries(av_model) == slurp(dir + "av.q"));

  dsl::Validated cas = load("corpus/cas.pccsl");
  uppaal::NtaModel cas_model = uppaal::export_model(cas.spec, cas.relations);
  c.require(uppaal::write_xml(cas_model) == slurp(dir + "cas.xml"));
  c.require(uppaal::write_queries(cas_model) == slurp(dir + "cas.q"));

  // published query forms in ASCII (<= for the bound bracket, not for
  // negation; "not"/">=" spelled out; forall in concrete UPPAAL syntax)
  c.require(av_model.queries[0] ==
            "Pr[<=10000]([] forall (i:int[1,2]) not A1_Precedence(i).fail) "
            ">= 0.96");
  c.require(cas_model.queries[1] ==
            "Pr[<=10000]([] not B2_Precedence.fail) >= 0.95");
  c.require(cas_model.queries[3] ==
            "Pr[<=10000]([] forall (i:int[1,2]) not B5_Coincidence(i).fail) "
            ">= 0.98");

  uppaal::CheckReport av_check = uppaal::check_model(av_model);
  uppaal::CheckReport cas_check = uppaal::check_model(cas_model);
  c.require(av_check.ok);
  c.require(cas_check.ok);
  c.require(av_check.observer_instances == 10);
  c.require(cas_check.observer_instances == 9);
  CHECK(c.ok);
}

TEST_CASE("criterion 9: fixed-seed determinism of every command") {
  Criterion c{9};
  namespace fs = std::filesystem;
  std::string av = std::string(PCCSL_SOURCE_DIR) + "/corpus/av.pccsl";
  std::string cas = std::string(PCCSL_SOURCE_DIR) + "/corpus/cas.pccsl";

  auto run_cli = [&](std::vector<std::string> args) {
    std::vector<const char*> argv = {"pccsl"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::pair<int, std::string>(rc, out.str() + "\n--err--\n" + err.str());
  };

  const std::vector<std::vector<std::string>> commands = {
      {"verify", av, "--seed", "7", "--format", "json"},
      {"verify", cas, "--seed", "3", "--format", "json"},
      {"estimate", av, "--rel", "A1", "--seed", "5", "--runs", "200",
       "--format", "json"},
      {"expected", av, "--observable", "mode", "--mode", "max", "--seed", "9",
       "--runs", "50", "--format", "json"},
      {"simulate", av, "--observables", "history(camera),mode", "--seed", "11",
       "--runs", "2"},
      {"check", cas, "--format", "json"},
  };
  for (const auto& cmd : commands) {
    auto first = run_cli(cmd);
    auto second = run_cli(cmd);
    if (first != second) {
      MESSAGE("nondeterministic: ", cmd[0]);
      c.require(false);
    }
  }

  // export and trace write files; compare bytes across two invocations
  fs::path dir1 = fs::temp_directory_path() / "pccsl_det1";
  fs::path dir2 = fs::temp_directory_path() / "pccsl_det2";
  for (auto* d : {&dir1, &dir2}) {
    fs::remove_all(*d);
    fs::create_directories(*d);
  }
  run_cli({"export", cas, "--out", dir1.string()});
  run_cli({"export", cas, "--out", dir2.string()});
  run_cli({"trace", cas, "--rel", "B4", "--seed", "7", "--out", dir1.string()});
  run_cli({"trace", cas, "--rel", "B4", "--seed", "7", "--out", dir2.string()});
  for (const char* f : {"cas.xml", "cas.q", "B4_trace.csv", "B4_dense.csv",
                        "B4_summary.csv"})
    c.require(slurp((dir1 / f).string()) == slurp((dir2 / f).string()));

  // jobs do not change verdicts
  auto seq = run_cli({"verify", av, "--seed", "7", "--format", "json"});
  auto par = run_cli({"verify", av, "--seed", "7", "--jobs", "4", "--format",
                      "json"});
  c.require(seq == par);
  CHECK(c.ok);
}
