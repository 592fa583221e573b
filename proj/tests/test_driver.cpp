#include <doctest.h>

#include <sstream>

#include "pccsl/driver.hpp"
#include "testutil.hpp"

using namespace pccsl;

namespace {

dsl::Observable dense_obs(const PcbsSpec& spec, const std::string& name) {
  dsl::Observable o;
  o.kind = dsl::Observable::Kind::Dense;
  o.name = name;
  o.clock = *spec.clocks.find(name);
  return o;
}

}  // namespace

TEST_CASE("expected max of an unreset dense clock is the bound") {
  PcbsSpec spec;
  spec.ensure_ideal();
  DenseClockTypeDecl dt;
  dt.name = "Unit";
  dt.reference = *spec.ideal;
  dt.factor = 1.0;
  spec.add_dense("level", spec.add_type(dt));
  StimulusDecl st;
  st.kind = StimulusKind::Periodic;
  st.period = 1.0;
  spec.add_stimulus("beat", st);
  finalize(spec);
  auto report = driver::expected_value(spec, dense_obs(spec, "level"), true,
                                       10.0, 20, 5);
  CHECK(report.ci.mean == doctest::Approx(10.0));
  CHECK(report.ci.half_width == doctest::Approx(0.0));
}

TEST_CASE("expected max between uniform resets matches the analytic mean") {
  // rate-1 clock reset by Uniform[1,2]s arrivals, bound 2s: the run max is
  // the first reset time U itself (the tail ramp reaches 2-U <= 1 <= U),
  // so the expectation is E[U] = 1.5
  PcbsSpec spec;
  spec.ensure_ideal();
  StimulusDecl st;
  st.kind = StimulusKind::UniformInterarrival;
  st.lo = 1.0;
  st.hi = 2.0;
  ClockIdx reset = spec.add_stimulus("reset", st);
  DenseClockTypeDecl dt;
  dt.name = "Ramp";
  dt.reference = *spec.ideal;
  dt.factor = 1.0;
  dt.resets = {reset};
  spec.add_dense("ramp", spec.add_type(dt));
  finalize(spec);
  auto report = driver::expected_value(spec, dense_obs(spec, "ramp"), true,
                                       2.0, 2000, 99);
  CHECK(std::abs(report.ci.mean - 1.5) <= 0.05);
}

TEST_CASE("simulated history of a periodic clock is a staircase") {
  PcbsSpec spec;
  StimulusDecl st;
  st.kind = StimulusKind::Periodic;
  st.period = 0.25;
  ClockIdx c = spec.add_stimulus("c", st);
  finalize(spec);
  dsl::Observable his;
  his.kind = dsl::Observable::Kind::History;
  his.name = "c";
  his.clock = c;
  std::ostringstream out;
  driver::simulate_query(spec, {his}, 1.0, 1, 3, out);
  CHECK(out.str() ==
        "run,time,c-his\n"
        "0,0.25,1\n"
        "0,0.5,2\n"
        "0,0.75,3\n"
        "0,1,4\n"
        "0,1,4\n");  // final row samples the bound endpoint
}

TEST_CASE("single-run batches give a 0/1 ratio") {
  PcbsSpec spec;
  StimulusDecl st;
  st.kind = StimulusKind::Periodic;
  st.period = 0.1;
  ClockIdx c = spec.add_stimulus("c", st);
  finalize(spec);
  RelationSpec rel;
  rel.name = "r";
  rel.kind = RelationKind::Subclock;
  rel.clocks = {c, c};
  rel.threshold = 0.5;
  auto batches = simulate_batch(spec, {rel}, 1.0, 1, 0);
  double ratio = run_ratio(batches[0].verdicts);
  CHECK((ratio == 0.0 || ratio == 1.0));
  CHECK(ratio == 1.0);
}

TEST_CASE("always-satisfied relations accept and retain no counterexample") {
  PcbsSpec spec;
  StimulusDecl st;
  st.kind = StimulusKind::UniformInterarrival;
  st.lo = 0.05;
  st.hi = 0.1;
  ClockIdx c = spec.add_stimulus("c", st);
  ExprDecl f;
  f.kind = ExprKind::FilterBy;
  f.operands = {c};
  f.word = parse_filter_word("0(1)");
  ClockIdx sub = spec.add_expr("sub", f);
  finalize(spec);
  RelationSpec rel;
  rel.name = "r";
  rel.kind = RelationKind::Subclock;
  rel.clocks = {sub, c};
  rel.threshold = 0.9;
  driver::VerifyOptions opts;
  opts.bound = 2.0;
  opts.seed = 5;
  auto verdicts = driver::verify(spec, {rel}, opts);
  REQUIRE(verdicts.size() == 1);
  CHECK(verdicts[0].decision == Decision::AcceptH0);
  CHECK(verdicts[0].runs == 133);  // Wald bound at p=0.9, delta=0.01
  auto batches = simulate_batch(spec, {rel}, 2.0, 16, 5);
  CHECK(!batches[0].counterexample.has_value());
}
