#include <doctest.h>

#include <set>
#include "pccsl/action.hpp"
#include "testutil.hpp"

using namespace pccsl;

namespace {

std::vector<VarDecl> three_ints() {
  return {{"v0", VarDomain::Int, Value::ofInt(-1)},
          {"v1", VarDomain::Int, Value::ofInt(-1)},
          {"v2", VarDomain::Int, Value::ofInt(-1)}};
}

VarStore store_for(const std::vector<VarDecl>& vars) {
  VarStore s;
  for (const auto& v : vars) s.vals.push_back(v.initial);
  return s;
}

Assign assign_const(std::uint32_t var, std::int64_t v) {
  return Assign{var, VExpr::constant(Value::ofInt(v))};
}

}  // namespace

TEST_CASE("action assigns each listed variable") {
  auto vars = three_ints();
  auto store = store_for(vars);
  std::vector<Assign> body = {assign_const(0, 0), assign_const(1, 1),
                              assign_const(2, 2)};
  validate_action_body(body, vars);
  execute_action(store, body, vars, 1.0);
  CHECK(store.vals[0] == Value::ofInt(0));
  CHECK(store.vals[1] == Value::ofInt(1));
  CHECK(store.vals[2] == Value::ofInt(2));
}

TEST_CASE("empty body leaves the store unchanged") {
  auto vars = three_ints();
  auto store = store_for(vars);
  execute_action(store, {}, vars, 0.0);
  CHECK(store.vals == store_for(vars).vals);
}

TEST_CASE("repeated increment accumulates") {
  std::vector<VarDecl> vars = {{"x", VarDomain::Int, Value::ofInt(0)}};
  auto store = store_for(vars);
  std::vector<Assign> body = {
      {0, VExpr::binary(VOp::Add, VExpr::variable(0),
                        VExpr::constant(Value::ofInt(1)))}};
  for (int i = 0; i < 3; ++i) execute_action(store, body, vars, i);
  CHECK(store.vals[0] == Value::ofInt(3));
}

TEST_CASE("right-hand sides read pre-action values") {
  std::vector<VarDecl> vars = {{"x", VarDomain::Int, Value::ofInt(1)},
                               {"y", VarDomain::Int, Value::ofInt(10)}};
  auto store = store_for(vars);
  // x = y; y = x  must swap, not chain
  std::vector<Assign> body = {{0, VExpr::variable(1)}, {1, VExpr::variable(0)}};
  execute_action(store, body, vars, 0.0);
  CHECK(store.vals[0] == Value::ofInt(10));
  CHECK(store.vals[1] == Value::ofInt(1));
}

TEST_CASE("double assignment within one action is rejected") {
  auto vars = three_ints();
  std::vector<Assign> body = {assign_const(0, 1), assign_const(0, 2)};
  CHECK_THROWS_AS(validate_action_body(body, vars), SpecError);
}

TEST_CASE("random malformed bodies are rejected, well-formed pass") {
  auto vars = three_ints();
  Rng rng(1234);
  for (int rep = 0; rep < 2000; ++rep) {
    std::size_t len = static_cast<std::size_t>(rng.uniform_int(0, 6));
    std::vector<Assign> body;
    std::set<std::uint32_t> seen;
    bool dup = false;
    for (std::size_t i = 0; i < len; ++i) {
      auto var = static_cast<std::uint32_t>(rng.uniform_int(0, 2));
      dup = dup || !seen.insert(var).second;
      body.push_back(assign_const(var, 0));
    }
    if (dup)
      CHECK_THROWS_AS(validate_action_body(body, vars), SpecError);
    else
      CHECK_NOTHROW(validate_action_body(body, vars));
  }
}

TEST_CASE("probability normalization is enforced") {
  std::vector<VarDecl> vars = {{"v", VarDomain::Int, Value::ofInt(0)}};
  ProbActionDecl pa;
  pa.branches = {{0.5, {assign_const(0, 0)}}, {0.4, {assign_const(0, 1)}}};
  CHECK_THROWS_AS(validate_prob_action(pa, vars), SpecError);
  pa.branches[1].p = 0.5;
  CHECK_NOTHROW(validate_prob_action(pa, vars));
  pa.branches = {{0.5, {}}, {0.4999999995, {}}};
  CHECK_NOTHROW(validate_prob_action(pa, vars));  // sum inside the 1e-9 band
}

TEST_CASE("single branch equals the deterministic action") {
  std::vector<VarDecl> vars = {{"v", VarDomain::Int, Value::ofInt(0)}};
  ProbActionDecl pa;
  pa.branches = {{1.0, {assign_const(0, 7)}}};
  auto store = store_for(vars);
  Rng rng(5);
  execute_prob_action(store, pa, vars, rng, 0.0);
  CHECK(store.vals[0] == Value::ofInt(7));
}

TEST_CASE("branch frequencies follow the declared distribution") {
  // paper example: v gets 0,1,2 with probability 0.2, 0.3, 0.5
  std::vector<VarDecl> vars = {{"v", VarDomain::Int, Value::ofInt(0)}};
  ProbActionDecl pa;
  pa.branches = {{0.2, {assign_const(0, 0)}},
                 {0.3, {assign_const(0, 1)}},
                 {0.5, {assign_const(0, 2)}}};
  validate_prob_action(pa, vars);
  auto store = store_for(vars);
  Rng rng(2024);
  std::vector<std::uint64_t> counts(3, 0);
  for (int i = 0; i < 10000; ++i)
    ++counts[execute_prob_action(store, pa, vars, rng, 0.0)];
  double stat = testutil::chi_square_stat(counts, {0.2, 0.3, 0.5});
  CHECK(stat < testutil::chi2_crit_99(2));
}

TEST_CASE("branch frequency convergence for arbitrary branch counts") {
  for (std::size_t nb : {2ul, 4ul, 8ul}) {
    std::vector<VarDecl> vars = {{"v", VarDomain::Int, Value::ofInt(0)}};
    ProbActionDecl pa;
    std::vector<double> probs;
    double left = 1.0;
    for (std::size_t i = 0; i < nb; ++i) {
      double p = (i + 1 == nb) ? left : left / 2.0;
      left -= (i + 1 == nb) ? 0.0 : p;
      probs.push_back(p);
      pa.branches.push_back({p, {assign_const(0, static_cast<std::int64_t>(i))}});
    }
    validate_prob_action(pa, vars);
    auto store = store_for(vars);
    Rng rng(31 + nb);
    std::vector<std::uint64_t> counts(nb, 0);
    for (int i = 0; i < 20000; ++i)
      ++counts[execute_prob_action(store, pa, vars, rng, 0.0)];
    CHECK(testutil::chi_square_stat(counts, probs) <
          testutil::chi2_crit_99(nb - 1));
  }
}

TEST_CASE("fixed seed reproduces the branch sequence") {
  std::vector<VarDecl> vars = {{"v", VarDomain::Int, Value::ofInt(0)}};
  ProbActionDecl pa;
  pa.branches = {{0.5, {assign_const(0, 0)}}, {0.5, {assign_const(0, 1)}}};
  auto run_once = [&] {
    auto store = store_for(vars);
    Rng rng(77);
    std::vector<std::size_t> picks;
    for (int i = 0; i < 100; ++i)
      picks.push_back(execute_prob_action(store, pa, vars, rng, 0.0));
    return picks;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("expression evaluation: arithmetic, functions, errors") {
  std::vector<VarDecl> vars = {{"x", VarDomain::Real, Value::ofReal(4.0)}};
  VarStore store = store_for(vars);
  auto x = VExpr::variable(0);
  CHECK(eval_vexpr(VExpr::binary(VOp::Div, x, VExpr::constant(Value::ofInt(2))),
                   store, 0.0)
            .num == doctest::Approx(2.0));
  CHECK(eval_vexpr(VExpr::binary(VOp::Min, x, VExpr::constant(Value::ofInt(1))),
                   store, 0.0)
            .num == doctest::Approx(1.0));
  CHECK(eval_vexpr(VExpr::unary(VOp::Abs, VExpr::unary(VOp::Neg, x)), store, 0.0)
            .num == doctest::Approx(4.0));
  CHECK_THROWS_AS(
      eval_vexpr(VExpr::binary(VOp::Div, x, VExpr::constant(Value::ofInt(0))),
                 store, 1.5),
      SimError);
  CHECK_THROWS_AS(
      eval_vexpr(VExpr::binary(VOp::And, x, VExpr::constant(Value::ofBool(true))),
                 store, 0.0),
      SimError);
}

TEST_CASE("domain violations abort") {
  std::vector<VarDecl> vars = {{"n", VarDomain::Int, Value::ofInt(0)},
                               {"b", VarDomain::Bool, Value::ofBool(false)}};
  auto store = store_for(vars);
  std::vector<Assign> bad_int = {{0, VExpr::constant(Value::ofReal(1.5))}};
  CHECK_THROWS_AS(execute_action(store, bad_int, vars, 0.0), SimError);
  std::vector<Assign> bad_bool = {{1, VExpr::constant(Value::ofInt(1))}};
  CHECK_THROWS_AS(execute_action(store, bad_bool, vars, 0.0), SimError);
}
