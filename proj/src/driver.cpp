#include "pccsl/driver.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

namespace pccsl::driver {

namespace {

double relation_bound(const RelationSpec& rel, double query_bound) {
  return rel.has_bound() ? rel.bound : query_bound;
}

/// Simulates runs [begin, begin+count) in parallel, returning them in index
/// order.
std::vector<Run> simulate_block(const PcbsSpec& spec, double bound,
                                std::uint64_t seed, std::uint64_t begin,
                                std::uint64_t count, int jobs) {
  std::vector<Run> runs(count);
  auto one = [&](std::uint64_t i) {
    try {
      runs[i] = simulate_run(spec, bound, derive_seed(seed, begin + i));
    } catch (const SimError& e) {
      throw SimError("run " + std::to_string(begin + i) + ": " + e.what(),
                     e.time);
    }
  };
  if (jobs <= 1 || count <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) one(i);
    return runs;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::uint64_t i = t; i < count; i += jobs) one(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return runs;
}

}  // namespace

std::vector<RelationVerdict> verify(const PcbsSpec& spec,
                                    const std::vector<RelationSpec>& relations,
                                    const VerifyOptions& opts) {
  opts.cfg.validate();
  std::vector<SprtTest> tests;
  tests.reserve(relations.size());
  for (const RelationSpec& rel : relations) {
    validate_relation(rel, spec.clocks.size());
    tests.emplace_back(rel.threshold, opts.cfg, opts.cap);
  }
  std::uint64_t index = 0;
  std::uint64_t block = std::max(1, opts.jobs);
  auto all_done = [&] {
    for (const SprtTest& t : tests)
      if (!t.done()) return false;
    return true;
  };
  while (!all_done() && index < opts.cap) {
    std::uint64_t count = std::min<std::uint64_t>(block, opts.cap - index);
    std::vector<Run> runs =
        simulate_block(spec, opts.bound, opts.seed, index, count, opts.jobs);
    for (const Run& run : runs) {
      for (std::size_t r = 0; r < relations.size(); ++r) {
        if (tests[r].done()) continue;
        RelationSpec rel = relations[r];
        rel.bound = relation_bound(rel, opts.bound);
        tests[r].update(check_nary(rel, run));
      }
    }
    index += count;
  }
  std::vector<RelationVerdict> out;
  for (std::size_t r = 0; r < relations.size(); ++r) {
    RelationVerdict v;
    v.relation = relations[r].name;
    v.kind = relations[r].kind;
    v.threshold = relations[r].threshold;
    v.decision = tests[r].decision();
    v.runs = tests[r].samples();
    v.satisfied = tests[r].successes();
    v.ratio = tests[r].ratio();
    out.push_back(std::move(v));
  }
  return out;
}

std::function<bool()> relation_source(const PcbsSpec& spec,
                                      const RelationSpec& rel,
                                      const VerifyOptions& opts) {
  RelationSpec bounded = rel;
  bounded.bound = relation_bound(rel, opts.bound);
  auto index = std::make_shared<std::uint64_t>(0);
  double bound = opts.bound;
  std::uint64_t seed = opts.seed;
  return [&spec, bounded, index, bound, seed] {
    Run run = simulate_run(spec, bound, derive_seed(seed, (*index)++));
    return check_nary(bounded, run);
  };
}

EstimateResult estimate_relation(const PcbsSpec& spec, const RelationSpec& rel,
                                 const VerifyOptions& opts) {
  return estimate_probability(relation_source(spec, rel, opts), opts.cfg);
}

CompareResult compare_relations(const PcbsSpec& spec, const RelationSpec& left,
                                const RelationSpec& right,
                                const VerifyOptions& opts) {
  VerifyOptions right_opts = opts;
  right_opts.seed = derive_seed(opts.seed, 0x9E3779B9);  // independent stream
  return compare_probabilities(relation_source(spec, left, opts),
                               relation_source(spec, right, right_opts),
                               opts.cfg, opts.cap);
}

namespace {

double observe_extremum(const Run& run, const dsl::Observable& obs,
                        bool want_max, double initial_var_value) {
  auto better = [&](double a, double b) { return want_max ? a > b : a < b; };
  switch (obs.kind) {
    case dsl::Observable::Kind::Dense: {
      const DenseTrace& tr = run.dense.at(obs.clock);
      double best = tr.points.empty() ? 0.0 : tr.points.front().value;
      for (const DensePoint& p : tr.points)
        if (better(p.value, best)) best = p.value;
      return best;
    }
    case dsl::Observable::Kind::Var: {
      double best = initial_var_value;  // value held over [0, first instant)
      for (const auto& row : run.var_values) {
        const Value& v = row.at(obs.var);
        double x = v.kind == Value::Kind::Bool ? (v.b ? 1.0 : 0.0) : v.num;
        if (better(x, best)) best = x;
      }
      return best;
    }
    case dsl::Observable::Kind::History:
      return static_cast<double>(run.tick_times.at(obs.clock).size());
  }
  return 0.0;
}

}  // namespace

ExpectedReport expected_value(const PcbsSpec& spec,
                              const dsl::Observable& observable, bool want_max,
                              double bound, std::uint64_t runs,
                              std::uint64_t seed) {
  if (runs < 1) throw SpecError("expected_value: need at least one run");
  double initial = 0.0;
  if (observable.kind == dsl::Observable::Kind::Var) {
    const Value& v = spec.vars.at(observable.var).initial;
    initial = v.kind == Value::Kind::Bool ? (v.b ? 1.0 : 0.0) : v.num;
  }
  std::vector<double> extrema;
  extrema.reserve(runs);
  for (std::uint64_t i = 0; i < runs; ++i) {
    Run run = simulate_run(spec, bound, derive_seed(seed, i));
    extrema.push_back(observe_extremum(run, observable, want_max, initial));
  }
  ExpectedReport report;
  report.observable = observable.name;
  report.want_max = want_max;
  report.ci = mean_ci(extrema);
  return report;
}

namespace {

std::string observable_column(const dsl::Observable& o) {
  if (o.kind == dsl::Observable::Kind::History) return o.name + "-his";
  return o.name;
}

std::string observable_value(const PcbsSpec& spec, const Run& run,
                             const dsl::Observable& o, double time,
                             std::size_t instant_index) {
  switch (o.kind) {
    case dsl::Observable::Kind::History:
      return std::to_string(history(run, o.clock, time));
    case dsl::Observable::Kind::Dense:
      return format_double(dense_value(run, o.clock, time));
    case dsl::Observable::Kind::Var: {
      if (instant_index == SIZE_MAX || run.var_values.empty())
        return value_to_string(spec.vars.at(o.var).initial);
      std::size_t row = std::min(instant_index, run.var_values.size() - 1);
      return value_to_string(run.var_values[row].at(o.var));
    }
  }
  return {};
}

}  // namespace

void simulate_query(const PcbsSpec& spec,
                    const std::vector<dsl::Observable>& observables,
                    double bound, std::uint64_t runs, std::uint64_t seed,
                    std::ostream& out) {
  out << "run,time";
  for (const dsl::Observable& o : observables)
    out << ',' << observable_column(o);
  out << '\n';
  for (std::uint64_t i = 0; i < runs; ++i) {
    Run run = simulate_run(spec, bound, derive_seed(seed, i));
    for (std::size_t k = 0; k < run.instants.size(); ++k) {
      out << i << ',' << format_double(run.instants[k].time);
      for (const dsl::Observable& o : observables)
        out << ',' << observable_value(spec, run, o, run.instants[k].time, k);
      out << '\n';
    }
    out << i << ',' << format_double(bound);
    for (const dsl::Observable& o : observables)
      out << ','
          << observable_value(spec, run, o, bound,
                              run.instants.empty() ? SIZE_MAX
                                                   : run.instants.size() - 1);
    out << '\n';
  }
}

std::optional<Counterexample> find_counterexample(const PcbsSpec& spec,
                                                  const RelationSpec& rel,
                                                  const VerifyOptions& opts,
                                                  std::uint64_t max_runs) {
  RelationSpec bounded = rel;
  bounded.bound = relation_bound(rel, opts.bound);
  for (std::uint64_t i = 0; i < max_runs; ++i) {
    Run run = simulate_run(spec, opts.bound, derive_seed(opts.seed, i));
    if (!check_nary(bounded, run)) {
      Counterexample ce;
      ce.run_index = i;
      ce.run = std::move(run);
      ce.relation = bounded;
      return ce;
    }
  }
  return std::nullopt;
}

void write_counterexample_files(const Counterexample& ce,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::path base = fs::path(out_dir) / ce.relation.name;
  {
    std::ofstream trace(base.string() + "_trace.csv");
    write_trace_csv(ce.run, trace);
  }
  {
    std::ofstream dense(base.string() + "_dense.csv");
    write_dense_csv(ce.run, dense);
  }
  {
    RelationMonitor monitor(ce.relation);
    for (const Instant& in : ce.run.instants) {
      if (in.time > ce.relation.bound && ce.relation.has_bound()) break;
      monitor.step(in);
    }
    std::ofstream summary(base.string() + "_summary.csv");
    write_counterexample_summary(summary, ce.relation, monitor, ce.run);
  }
}

}  // namespace pccsl::driver
