#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pccsl/monitor.hpp"
#include "pccsl/sim.hpp"
#include "pccsl/smc.hpp"
#include "pccsl/validate.hpp"

namespace pccsl::driver {

struct VerifyOptions {
  double bound = 10.0;  // seconds
  std::uint64_t seed = 0;
  SmcConfig cfg;
  int jobs = 1;
  std::uint64_t cap = 1'000'000;
};

struct RelationVerdict {
  std::string relation;
  RelationKind kind = RelationKind::Coincidence;
  double threshold = 1.0;
  Decision decision = Decision::Inconclusive;
  std::uint64_t runs = 0;
  std::uint64_t satisfied = 0;
  double ratio = 0.0;
};

/// SPRT per relation over one shared run stream: run i is simulated once
/// and scored by every still-undecided relation. Verdicts are consumed in
/// run-index order regardless of `jobs`.
std::vector<RelationVerdict> verify(const PcbsSpec& spec,
                                    const std::vector<RelationSpec>& relations,
                                    const VerifyOptions& opts);

/// Per-run verdict source for one relation (fresh derived-seed stream).
std::function<bool()> relation_source(const PcbsSpec& spec,
                                      const RelationSpec& rel,
                                      const VerifyOptions& opts);

EstimateResult estimate_relation(const PcbsSpec& spec, const RelationSpec& rel,
                                 const VerifyOptions& opts);

CompareResult compare_relations(const PcbsSpec& spec, const RelationSpec& left,
                                const RelationSpec& right,
                                const VerifyOptions& opts);

struct ExpectedReport {
  std::string observable;
  bool want_max = true;
  MeanCi ci;
};

ExpectedReport expected_value(const PcbsSpec& spec,
                              const dsl::Observable& observable, bool want_max,
                              double bound, std::uint64_t runs,
                              std::uint64_t seed);

/// Plot-ready CSV: `run,time,<col>,...`, one row per instant plus the bound
/// endpoint. History columns are named `<clock>-his`.
void simulate_query(const PcbsSpec& spec,
                    const std::vector<dsl::Observable>& observables,
                    double bound, std::uint64_t runs, std::uint64_t seed,
                    std::ostream& out);

struct Counterexample {
  std::uint64_t run_index = 0;
  Run run;
  RelationSpec relation;
};

/// First falsifying run for the relation, if any within `max_runs`.
std::optional<Counterexample> find_counterexample(const PcbsSpec& spec,
                                                  const RelationSpec& rel,
                                                  const VerifyOptions& opts,
                                                  std::uint64_t max_runs);

/// Writes <name>_trace.csv, <name>_dense.csv and <name>_summary.csv.
void write_counterexample_files(const Counterexample& ce,
                                const std::string& out_dir);

}  // namespace pccsl::driver
