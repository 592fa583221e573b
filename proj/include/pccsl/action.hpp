#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pccsl/core.hpp"

namespace pccsl {

enum class VarDomain { Int, Real, Bool };

struct VarDecl {
  std::string name;
  VarDomain domain = VarDomain::Int;
  Value initial;
};

/// Arithmetic/boolean expression over the variable store. These back both
/// action right-hand sides and ITE predicates.
enum class VOp {
  Const, Var,
  Add, Sub, Mul, Div, Neg,
  Min, Max, Abs,
  Eq, Ne, Lt, Le, Gt, Ge,
  And, Or, Not
};

struct VExpr {
  VOp op = VOp::Const;
  Value lit;
  std::uint32_t var = 0;
  std::vector<VExpr> kids;

  static VExpr constant(Value v);
  static VExpr variable(std::uint32_t idx);
  static VExpr unary(VOp op, VExpr a);
  static VExpr binary(VOp op, VExpr a, VExpr b);
  bool operator==(const VExpr&) const = default;
};

struct VarStore {
  std::vector<Value> vals;  // aligned with the VarDecl list
};

/// Evaluates an expression; throws SimError on division by zero and
/// SpecError on type mismatches (the validator rules those out for specs
/// that went through it).
Value eval_vexpr(const VExpr& e, const VarStore& store, double at_time);

struct Assign {
  std::uint32_t var = 0;
  VExpr rhs;
};

struct ActionDecl {
  ClockIdx trigger = 0;
  std::vector<Assign> body;
};

struct ProbBranch {
  double p = 0.0;
  std::vector<Assign> body;
};

struct ProbActionDecl {
  ClockIdx trigger = 0;
  std::vector<ProbBranch> branches;
};

/// Rejects bodies assigning one variable twice.
void validate_action_body(const std::vector<Assign>& body,
                          const std::vector<VarDecl>& vars);

/// Rejects branch lists whose probabilities do not sum to 1 within 1e-9,
/// or with a probability outside [0,1]; each branch body is validated too.
void validate_prob_action(const ProbActionDecl& pa,
                          const std::vector<VarDecl>& vars);

/// Applies all assignments simultaneously: every right-hand side reads the
/// store as it was when the action started.
void execute_action(VarStore& store, const std::vector<Assign>& body,
                    const std::vector<VarDecl>& vars, double at_time);

/// Selects exactly one branch with its probability, then applies it.
/// Returns the selected branch index.
std::size_t execute_prob_action(VarStore& store, const ProbActionDecl& pa,
                                const std::vector<VarDecl>& vars, Rng& rng,
                                double at_time);

}  // namespace pccsl
