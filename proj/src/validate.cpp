#include "pccsl/validate.hpp"

#include <cmath>
#include <map>

namespace pccsl::dsl {

const RelationSpec* Validated::find_relation(const std::string& name) const {
  for (const RelationSpec& r : relations)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

enum class VType { Num, Bool };

class Validator {
 public:
  explicit Validator(const SpecAst& ast) : ast_(ast) {}

  ValidateResult run() {
    register_clock_names();
    build_vars();
    build_types();
    build_clocks();
    build_exprs();
    build_actions();
    build_relations();
    build_queries();
    if (diags_.empty()) {
      try {
        finalize(out_.spec);
      } catch (const SpecError& e) {
        semantic(SourceLoc{}, e.what());
      }
    }
    ValidateResult res;
    res.diags = std::move(diags_);
    if (res.diags.empty()) res.value = std::move(out_);
    return res;
  }

 private:
  void semantic(SourceLoc loc, const std::string& msg) {
    diags_.push_back(
        Diagnostic{Diagnostic::Category::Semantic, loc.line, loc.col, msg});
  }

  SourceLoc loc_of(std::size_t i) const {
    return i < ast_.locs.size() ? ast_.locs[i] : SourceLoc{};
  }

  // pass 1: clock names come from clock declarations and expression results
  void register_clock_names() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      const AstDecl& decl = ast_.decls[i];
      if (auto* c = std::get_if<AstClockDecl>(&decl)) {
        add_clock_name(c->name, c->dense ? ClockKind::Dense : ClockKind::Logical,
                       loc_of(i));
      } else if (auto* e = std::get_if<AstExprDecl>(&decl)) {
        add_clock_name(e->name, ClockKind::Logical, loc_of(i));
      } else if (auto* u = std::get_if<AstUseDecl>(&decl)) {
        semantic(loc_of(i), "unresolved use directive '" + u->path +
                                "' (load the spec through parse_file)");
      }
    }
  }

  void add_clock_name(const std::string& name, ClockKind kind, SourceLoc loc) {
    if (name == "idealClk" || name == "always" || name == "never") {
      semantic(loc, "'" + name + "' is built in and cannot be redeclared");
      return;
    }
    try {
      out_.spec.clocks.add(name, kind);
    } catch (const SpecError& e) {
      semantic(loc, e.what());
    }
  }

  std::optional<ClockIdx> resolve_clock(const std::string& name, SourceLoc loc) {
    if (name == "idealClk") return out_.spec.ensure_ideal();
    if (name == "always") return out_.spec.ensure_always();
    if (name == "never") return out_.spec.ensure_never();
    if (auto c = out_.spec.clocks.find(name)) return c;
    semantic(loc, "unknown clock: " + name);
    return std::nullopt;
  }

  void build_vars() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      auto* v = std::get_if<AstVarDecl>(&ast_.decls[i]);
      if (!v) continue;
      try {
        var_index_[v->name] =
            out_.spec.add_var(v->name, v->domain, v->initial);
      } catch (const SpecError& e) {
        semantic(loc_of(i), e.what());
      }
    }
  }

  void build_types() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      auto* t = std::get_if<AstDenseTypeDecl>(&ast_.decls[i]);
      if (!t) continue;
      SourceLoc loc = loc_of(i);
      if (type_index_.count(t->name)) {
        semantic(loc, "duplicate dense clock type: " + t->name);
        continue;
      }
      DenseClockTypeDecl decl;
      decl.name = t->name;
      decl.factor = t->factor;
      auto ref = resolve_clock(t->reference, loc);
      if (!ref) continue;
      decl.reference = *ref;
      bool ok = true;
      for (const auto& [trig, amount] : t->offsets) {
        auto c = resolve_clock(trig, loc);
        if (!c) {
          ok = false;
          continue;
        }
        decl.offsets.emplace_back(*c, amount);
      }
      for (const std::string& trig : t->resets) {
        auto c = resolve_clock(trig, loc);
        if (!c) {
          ok = false;
          continue;
        }
        decl.resets.push_back(*c);
      }
      if (!ok) continue;
      type_index_[t->name] = out_.spec.add_type(std::move(decl));
    }
  }

  void build_clocks() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      auto* c = std::get_if<AstClockDecl>(&ast_.decls[i]);
      if (!c) continue;
      SourceLoc loc = loc_of(i);
      auto id = out_.spec.clocks.find(c->name);
      if (!id) continue;  // registration already failed
      if (c->dense) {
        auto type = type_index_.find(c->type);
        if (type == type_index_.end()) {
          semantic(loc, "unknown dense clock type: " + c->type);
          continue;
        }
        out_.spec.dense_instances.push_back(DenseInstance{*id, type->second});
      } else {
        StimulusDecl st;
        st.clock = *id;
        st.kind = c->stimulus.kind;
        st.period = c->stimulus.period;
        st.jitter = c->stimulus.jitter;
        st.lo = c->stimulus.lo;
        st.hi = c->stimulus.hi;
        st.times = c->stimulus.times;
        out_.spec.stimuli.push_back(std::move(st));
      }
    }
  }

  std::optional<VType> check_vexpr(const AstVExpr& e, VExpr& out, SourceLoc loc) {
    switch (e.op) {
      case VOp::Const:
        out = VExpr::constant(e.lit);
        return e.lit.kind == Value::Kind::Bool ? VType::Bool : VType::Num;
      case VOp::Var: {
        auto it = var_index_.find(e.name);
        if (it == var_index_.end()) {
          semantic(loc, "undeclared variable: " + e.name);
          return std::nullopt;
        }
        out = VExpr::variable(it->second);
        return out_.spec.vars[it->second].domain == VarDomain::Bool
                   ? VType::Bool
                   : VType::Num;
      }
      default:
        break;
    }
    out.op = e.op;
    out.kids.resize(e.kids.size());
    std::vector<VType> kid_types;
    for (std::size_t k = 0; k < e.kids.size(); ++k) {
      auto t = check_vexpr(e.kids[k], out.kids[k], loc);
      if (!t) return std::nullopt;
      kid_types.push_back(*t);
    }
    auto want = [&](VType t, const char* what) -> bool {
      for (VType kt : kid_types)
        if (kt != t) {
          semantic(loc, std::string("operand of ") + what + " must be " +
                            (t == VType::Num ? "numeric" : "boolean"));
          return false;
        }
      return true;
    };
    switch (e.op) {
      case VOp::Add: case VOp::Sub: case VOp::Mul: case VOp::Div:
      case VOp::Neg: case VOp::Min: case VOp::Max: case VOp::Abs:
        if (!want(VType::Num, "an arithmetic operator")) return std::nullopt;
        return VType::Num;
      case VOp::Lt: case VOp::Le: case VOp::Gt: case VOp::Ge:
        if (!want(VType::Num, "a comparison")) return std::nullopt;
        return VType::Bool;
      case VOp::Eq: case VOp::Ne:
        if (kid_types[0] != kid_types[1]) {
          semantic(loc, "'==' needs operands of one type");
          return std::nullopt;
        }
        return VType::Bool;
      case VOp::And: case VOp::Or: case VOp::Not:
        if (!want(VType::Bool, "a boolean operator")) return std::nullopt;
        return VType::Bool;
      default:
        return std::nullopt;
    }
  }

  void build_exprs() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      auto* e = std::get_if<AstExprDecl>(&ast_.decls[i]);
      if (!e) continue;
      SourceLoc loc = loc_of(i);
      auto result = out_.spec.clocks.find(e->name);
      if (!result) continue;
      ExprDecl decl;
      decl.result = *result;
      decl.kind = e->kind;
      decl.lower = e->lower;
      decl.upper = e->upper;
      decl.period_n = e->period_n;
      decl.step = e->step;
      bool ok = true;
      for (const std::string& op : e->operands) {
        auto c = resolve_clock(op, loc);
        if (!c) {
          ok = false;
          continue;
        }
        decl.operands.push_back(*c);
      }
      if (!ok) continue;
      if (e->kind == ExprKind::FilterBy) {
        try {
          decl.word = parse_filter_word(e->word);
        } catch (const SpecError& err) {
          semantic(loc, err.what());
          continue;
        }
      }
      if (e->kind == ExprKind::Ite) {
        auto t = check_vexpr(e->predicate, decl.predicate, loc);
        if (!t) continue;
        if (*t != VType::Bool) {
          semantic(loc, "ite predicate must be boolean");
          continue;
        }
      }
      if (e->kind == ExprKind::IntervalDelayFor ||
          e->kind == ExprKind::DelayFor) {
        if (!(e->upper >= e->lower && e->lower >= 0.0)) {
          semantic(loc, "delay bounds need upper >= lower >= 0");
          continue;
        }
      }
      out_.spec.exprs.push_back(std::move(decl));
    }
  }

  std::optional<std::vector<Assign>> build_assigns(
      const std::vector<AstAssign>& body, SourceLoc loc) {
    std::vector<Assign> out;
    for (const AstAssign& a : body) {
      auto it = var_index_.find(a.var);
      if (it == var_index_.end()) {
        semantic(loc, "undeclared variable: " + a.var);
        return std::nullopt;
      }
      Assign assign;
      assign.var = it->second;
      auto t = check_vexpr(a.rhs, assign.rhs, loc);
      if (!t) return std::nullopt;
      VarDomain dom = out_.spec.vars[it->second].domain;
      if ((dom == VarDomain::Bool) != (*t == VType::Bool)) {
        semantic(loc, "assignment type does not fit variable '" + a.var + "'");
        return std::nullopt;
      }
      out.push_back(std::move(assign));
    }
    return out;
  }

  void build_actions() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      SourceLoc loc = loc_of(i);
      if (auto* a = std::get_if<AstActionDecl>(&ast_.decls[i])) {
        auto trigger = resolve_clock(a->trigger, loc);
        auto body = build_assigns(a->body, loc);
        if (!trigger || !body) continue;
        ActionDecl decl;
        decl.trigger = *trigger;
        decl.body = std::move(*body);
        try {
          validate_action_body(decl.body, out_.spec.vars);
        } catch (const SpecError& e) {
          semantic(loc, e.what());
          continue;
        }
        out_.spec.actions.push_back(std::move(decl));
      } else if (auto* pa = std::get_if<AstPActionDecl>(&ast_.decls[i])) {
        auto trigger = resolve_clock(pa->trigger, loc);
        if (!trigger) continue;
        ProbActionDecl decl;
        decl.trigger = *trigger;
        bool ok = true;
        for (const AstBranch& br : pa->branches) {
          auto body = build_assigns(br.body, loc);
          if (!body) {
            ok = false;
            continue;
          }
          decl.branches.push_back(ProbBranch{br.p, std::move(*body)});
        }
        if (!ok) continue;
        try {
          validate_prob_action(decl, out_.spec.vars);
        } catch (const SpecError& e) {
          semantic(loc, e.what());
          continue;
        }
        out_.spec.pactions.push_back(std::move(decl));
      }
    }
  }

  void build_relations() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      auto* r = std::get_if<AstRelationDecl>(&ast_.decls[i]);
      if (!r) continue;
      SourceLoc loc = loc_of(i);
      if (out_.find_relation(r->name)) {
        semantic(loc, "duplicate relation: " + r->name);
        continue;
      }
      RelationSpec rel;
      rel.name = r->name;
      rel.kind = r->kind;
      rel.threshold = r->threshold;
      rel.bound = r->bound;
      bool ok = true;
      for (const std::string& c : r->clocks) {
        auto id = resolve_clock(c, loc);
        if (!id) {
          ok = false;
          continue;
        }
        if (out_.spec.clocks.is_dense(*id)) {
          semantic(loc, "relations range over logical clocks; '" + c +
                            "' is dense");
          ok = false;
          continue;
        }
        rel.clocks.push_back(*id);
      }
      if (!ok) continue;
      if (rel.clocks.size() < 2) {
        semantic(loc, "relation '" + r->name + "' needs at least two clocks");
        continue;
      }
      if (rel.threshold < 0.0 || rel.threshold > 1.0) {
        semantic(loc, "relation threshold must lie in [0,1]");
        continue;
      }
      out_.relations.push_back(std::move(rel));
    }
  }

  std::optional<Observable> resolve_observable(const AstObservable& o,
                                               SourceLoc loc,
                                               bool allow_history) {
    Observable obs;
    obs.name = o.name;
    switch (o.kind) {
      case ObservableKind::History: {
        if (!allow_history) {
          semantic(loc, "expected-value observables are dense clocks or "
                        "variables");
          return std::nullopt;
        }
        auto c = resolve_clock(o.name, loc);
        if (!c) return std::nullopt;
        if (out_.spec.clocks.is_dense(*c)) {
          semantic(loc, "history() needs a logical clock");
          return std::nullopt;
        }
        obs.kind = Observable::Kind::History;
        obs.clock = *c;
        return obs;
      }
      case ObservableKind::Dense: {
        auto c = resolve_clock(o.name, loc);
        if (!c) return std::nullopt;
        if (!out_.spec.clocks.is_dense(*c)) {
          semantic(loc, "dense() needs a dense clock");
          return std::nullopt;
        }
        obs.kind = Observable::Kind::Dense;
        obs.clock = *c;
        return obs;
      }
      case ObservableKind::Auto: {
        if (auto it = var_index_.find(o.name); it != var_index_.end()) {
          obs.kind = Observable::Kind::Var;
          obs.var = it->second;
          return obs;
        }
        if (auto c = out_.spec.clocks.find(o.name);
            c && out_.spec.clocks.is_dense(*c)) {
          obs.kind = Observable::Kind::Dense;
          obs.clock = *c;
          return obs;
        }
        semantic(loc, "observable '" + o.name +
                          "' is neither a variable nor a dense clock");
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  void build_queries() {
    for (std::size_t i = 0; i < ast_.decls.size(); ++i) {
      auto* q = std::get_if<AstQueryDecl>(&ast_.decls[i]);
      if (!q) continue;
      SourceLoc loc = loc_of(i);
      Query query;
      query.name = q->name;
      query.kind = q->kind;
      query.rel = q->rel;
      query.rel2 = q->rel2;
      query.want_max = q->want_max;
      query.runs = q->runs;
      bool ok = true;
      auto need_rel = [&](const std::string& name) {
        if (!name.empty() && !out_.find_relation(name)) {
          semantic(loc, "query references unknown relation: " + name);
          ok = false;
        }
      };
      switch (q->kind) {
        case QueryKind::Hypothesis:
        case QueryKind::Estimate:
          need_rel(q->rel);
          break;
        case QueryKind::Compare:
          need_rel(q->rel);
          need_rel(q->rel2);
          break;
        case QueryKind::Expected: {
          auto obs = resolve_observable(q->observables.at(0), loc, false);
          if (!obs) {
            ok = false;
            break;
          }
          query.observables.push_back(*obs);
          break;
        }
        case QueryKind::Simulate:
          for (const AstObservable& o : q->observables) {
            auto obs = resolve_observable(o, loc, true);
            if (!obs) {
              ok = false;
              continue;
            }
            query.observables.push_back(*obs);
          }
          break;
      }
      if (ok) out_.queries.push_back(std::move(query));
    }
  }

  const SpecAst& ast_;
  Validated out_;
  std::vector<Diagnostic> diags_;
  std::map<std::string, std::uint32_t> var_index_;
  std::map<std::string, std::uint32_t> type_index_;
};

}  // namespace

ValidateResult validate(const SpecAst& ast) { return Validator(ast).run(); }

}  // namespace pccsl::dsl
