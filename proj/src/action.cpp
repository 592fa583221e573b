#include "pccsl/action.hpp"

#include <cmath>
#include <set>

namespace pccsl {

VExpr VExpr::constant(Value v) {
  VExpr e;
  e.op = VOp::Const;
  e.lit = v;
  return e;
}

VExpr VExpr::variable(std::uint32_t idx) {
  VExpr e;
  e.op = VOp::Var;
  e.var = idx;
  return e;
}

VExpr VExpr::unary(VOp op, VExpr a) {
  VExpr e;
  e.op = op;
  e.kids.push_back(std::move(a));
  return e;
}

VExpr VExpr::binary(VOp op, VExpr a, VExpr b) {
  VExpr e;
  e.op = op;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

namespace {

double num_of(const Value& v, double at_time) {
  if (!v.isNumeric())
    throw SimError("expected a numeric operand, got a boolean", at_time);
  return v.num;
}

bool bool_of(const Value& v, double at_time) {
  if (v.kind != Value::Kind::Bool)
    throw SimError("expected a boolean operand, got a number", at_time);
  return v.b;
}

Value make_num(double v) {
  // keep intness when the result is exactly integral
  if (std::floor(v) == v && std::abs(v) < 9.0e15) {
    Value r = Value::ofInt(static_cast<std::int64_t>(v));
    return r;
  }
  return Value::ofReal(v);
}

}  // namespace

Value eval_vexpr(const VExpr& e, const VarStore& store, double at_time) {
  switch (e.op) {
    case VOp::Const:
      return e.lit;
    case VOp::Var:
      if (e.var >= store.vals.size())
        throw SpecError("expression references an undeclared variable");
      return store.vals[e.var];
    case VOp::Neg:
      return make_num(-num_of(eval_vexpr(e.kids[0], store, at_time), at_time));
    case VOp::Abs:
      return make_num(
          std::abs(num_of(eval_vexpr(e.kids[0], store, at_time), at_time)));
    case VOp::Not:
      return Value::ofBool(
          !bool_of(eval_vexpr(e.kids[0], store, at_time), at_time));
    default:
      break;
  }
  Value lhs = eval_vexpr(e.kids[0], store, at_time);
  if (e.op == VOp::And || e.op == VOp::Or) {
    bool a = bool_of(lhs, at_time);
    if (e.op == VOp::And && !a) return Value::ofBool(false);
    if (e.op == VOp::Or && a) return Value::ofBool(true);
    return Value::ofBool(bool_of(eval_vexpr(e.kids[1], store, at_time), at_time));
  }
  Value rhs = eval_vexpr(e.kids[1], store, at_time);
  if (e.op == VOp::Eq || e.op == VOp::Ne) {
    bool eq;
    if (lhs.kind == Value::Kind::Bool || rhs.kind == Value::Kind::Bool)
      eq = bool_of(lhs, at_time) == bool_of(rhs, at_time);
    else
      eq = lhs.num == rhs.num;
    return Value::ofBool(e.op == VOp::Eq ? eq : !eq);
  }
  double a = num_of(lhs, at_time);
  double b = num_of(rhs, at_time);
  switch (e.op) {
    case VOp::Add: return make_num(a + b);
    case VOp::Sub: return make_num(a - b);
    case VOp::Mul: return make_num(a * b);
    case VOp::Div:
      if (b == 0.0) throw SimError("division by zero", at_time);
      return make_num(a / b);
    case VOp::Min: return make_num(std::min(a, b));
    case VOp::Max: return make_num(std::max(a, b));
    case VOp::Lt: return Value::ofBool(a < b);
    case VOp::Le: return Value::ofBool(a <= b);
    case VOp::Gt: return Value::ofBool(a > b);
    case VOp::Ge: return Value::ofBool(a >= b);
    default:
      throw SpecError("malformed expression node");
  }
}

void validate_action_body(const std::vector<Assign>& body,
                          const std::vector<VarDecl>& vars) {
  std::set<std::uint32_t> seen;
  for (const Assign& a : body) {
    if (a.var >= vars.size())
      throw SpecError("action assigns an undeclared variable");
    if (!seen.insert(a.var).second)
      throw SpecError("action assigns variable '" + vars[a.var].name +
                      "' more than once");
  }
}

void validate_prob_action(const ProbActionDecl& pa,
                          const std::vector<VarDecl>& vars) {
  if (pa.branches.empty())
    throw SpecError("probabilistic action needs at least one branch");
  double sum = 0.0;
  for (const ProbBranch& br : pa.branches) {
    if (br.p < 0.0 || br.p > 1.0)
      throw SpecError("branch probability outside [0,1]");
    sum += br.p;
    validate_action_body(br.body, vars);
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw SpecError("branch probabilities must sum to 1");
}

namespace {

void store_value(VarStore& store, const std::vector<VarDecl>& vars,
                 std::uint32_t idx, const Value& v, double at_time) {
  const VarDecl& decl = vars.at(idx);
  switch (decl.domain) {
    case VarDomain::Bool:
      if (v.kind != Value::Kind::Bool)
        throw SimError("assignment of a number to boolean '" + decl.name + "'",
                       at_time);
      store.vals[idx] = v;
      return;
    case VarDomain::Int: {
      if (!v.isNumeric())
        throw SimError("assignment of a boolean to integer '" + decl.name + "'",
                       at_time);
      double r = std::round(v.num);
      if (std::abs(v.num - r) > 1e-9)
        throw SimError("non-integral value assigned to integer '" + decl.name +
                           "'",
                       at_time);
      store.vals[idx] = Value::ofInt(static_cast<std::int64_t>(r));
      return;
    }
    case VarDomain::Real:
      if (!v.isNumeric())
        throw SimError("assignment of a boolean to real '" + decl.name + "'",
                       at_time);
      store.vals[idx] = Value::ofReal(v.num);
      return;
  }
}

}  // namespace

void execute_action(VarStore& store, const std::vector<Assign>& body,
                    const std::vector<VarDecl>& vars, double at_time) {
  std::vector<std::pair<std::uint32_t, Value>> staged;
  staged.reserve(body.size());
  for (const Assign& a : body)
    staged.emplace_back(a.var, eval_vexpr(a.rhs, store, at_time));
  for (const auto& [idx, v] : staged) store_value(store, vars, idx, v, at_time);
}

std::size_t execute_prob_action(VarStore& store, const ProbActionDecl& pa,
                                const std::vector<VarDecl>& vars, Rng& rng,
                                double at_time) {
  double u = rng.uniform01();
  double acc = 0.0;
  std::size_t pick = pa.branches.size() - 1;
  for (std::size_t i = 0; i < pa.branches.size(); ++i) {
    acc += pa.branches[i].p;
    if (u < acc) {
      pick = i;
      break;
    }
  }
  execute_action(store, pa.branches[pick].body, vars, at_time);
  return pick;
}

}  // namespace pccsl
