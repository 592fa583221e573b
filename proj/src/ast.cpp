#include <sstream>

#include "pccsl/ast.hpp"

namespace pccsl::dsl {

namespace {

// printer precedence levels, loosest to tightest
constexpr int kOr = 1, kAnd = 2, kNot = 3, kCmp = 4, kAdd = 5, kMul = 6,
              kNeg = 7, kPrim = 8;

struct Rendered {
  std::string text;
  int prec = kPrim;
};

std::string wrap(const Rendered& r, int need) {
  if (r.prec >= need) return r.text;
  return "(" + r.text + ")";
}

Rendered render(const AstVExpr& e) {
  auto bin = [&](const char* sym, int prec) {
    Rendered l = render(e.kids[0]);
    Rendered r = render(e.kids[1]);
    return Rendered{wrap(l, prec) + " " + sym + " " + wrap(r, prec + 1), prec};
  };
  switch (e.op) {
    case VOp::Const:
      return Rendered{value_to_string(e.lit), kPrim};
    case VOp::Var:
      return Rendered{e.name, kPrim};
    case VOp::Or: return bin("||", kOr);
    case VOp::And: return bin("&&", kAnd);
    case VOp::Not:
      return Rendered{"!" + wrap(render(e.kids[0]), kPrim), kNot};
    case VOp::Eq: return bin("==", kCmp);
    case VOp::Ne: return bin("!=", kCmp);
    case VOp::Lt: return bin("<", kCmp);
    case VOp::Le: return bin("<=", kCmp);
    case VOp::Gt: return bin(">", kCmp);
    case VOp::Ge: return bin(">=", kCmp);
    case VOp::Add: return bin("+", kAdd);
    case VOp::Sub: return bin("-", kAdd);
    case VOp::Mul: return bin("*", kMul);
    case VOp::Div: return bin("/", kMul);
    case VOp::Neg:
      return Rendered{"-" + wrap(render(e.kids[0]), kNeg), kNeg};
    case VOp::Min:
      return Rendered{"min(" + render(e.kids[0]).text + ", " +
                          render(e.kids[1]).text + ")",
                      kPrim};
    case VOp::Max:
      return Rendered{"max(" + render(e.kids[0]).text + ", " +
                          render(e.kids[1]).text + ")",
                      kPrim};
    case VOp::Abs:
      return Rendered{"abs(" + render(e.kids[0]).text + ")", kPrim};
  }
  return Rendered{"?", kPrim};
}

std::string time_text(double seconds) { return format_double(seconds) + "s"; }

std::string assigns_text(const std::vector<AstAssign>& body) {
  std::string out = "{ ";
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += "; ";
    out += body[i].var + " = " + render(body[i].rhs).text;
  }
  if (body.empty()) out = "{";
  out += body.empty() ? "}" : " }";
  return out;
}

std::string observable_text(const AstObservable& o) {
  switch (o.kind) {
    case ObservableKind::Auto: return o.name;
    case ObservableKind::History: return "history(" + o.name + ")";
    case ObservableKind::Dense: return "dense(" + o.name + ")";
  }
  return o.name;
}

struct DeclPrinter {
  std::ostream& out;

  void operator()(const AstUseDecl& d) { out << "use \"" << d.path << "\""; }

  void operator()(const AstConstDecl& d) {
    out << "const " << d.name << " = " << format_double(d.value);
  }

  void operator()(const AstDenseTypeDecl& d) {
    out << "denseclocktype " << d.name << " { reference " << d.reference
        << "; factor " << format_double(d.factor) << ";";
    if (!d.offsets.empty()) {
      out << " offset { ";
      for (std::size_t i = 0; i < d.offsets.size(); ++i) {
        if (i) out << ", ";
        out << "(" << d.offsets[i].first << ", "
            << format_double(d.offsets[i].second) << ")";
      }
      out << " }";
    }
    if (!d.resets.empty()) {
      out << " reset { ";
      for (std::size_t i = 0; i < d.resets.size(); ++i) {
        if (i) out << ", ";
        out << d.resets[i];
      }
      out << " }";
    }
    out << " }";
  }

  void operator()(const AstClockDecl& d) {
    out << "clock " << d.name;
    if (d.dense) {
      out << " : " << d.type;
      return;
    }
    out << " stimulus ";
    const AstStimulus& s = d.stimulus;
    switch (s.kind) {
      case StimulusKind::Silent:
        out << "silent";
        break;
      case StimulusKind::Periodic:
        out << "periodic(" << time_text(s.period) << ", jitter "
            << time_text(s.jitter) << ")";
        break;
      case StimulusKind::UniformInterarrival:
        out << "uniform(" << time_text(s.lo) << ", " << time_text(s.hi) << ")";
        break;
      case StimulusKind::Scripted:
        out << "scripted(";
        for (std::size_t i = 0; i < s.times.size(); ++i) {
          if (i) out << ", ";
          out << time_text(s.times[i]);
        }
        out << ")";
        break;
    }
  }

  void operator()(const AstVarDecl& d) {
    const char* dom = d.domain == VarDomain::Int    ? "int"
                      : d.domain == VarDomain::Real ? "real"
                                                    : "bool";
    out << "var " << d.name << " : " << dom << " = "
        << value_to_string(d.initial);
  }

  void operator()(const AstExprDecl& d) {
    out << "expr " << d.name << " = ";
    switch (d.kind) {
      case ExprKind::FilterBy:
        out << "filter(" << d.operands[0] << ", \"" << d.word << "\")";
        break;
      case ExprKind::DelayFor:
        out << "delay(" << d.operands[0] << ", " << format_double(d.lower)
            << ", " << d.operands[1] << ")";
        break;
      case ExprKind::IntervalDelayFor:
        out << "delay(" << d.operands[0] << ", [" << format_double(d.lower)
            << ", " << format_double(d.upper) << "], " << d.operands[1] << ")";
        break;
      case ExprKind::PeriodicOn:
        out << "periodic(" << d.operands[0] << ", " << d.period_n << ")";
        break;
      case ExprKind::Ite:
        out << "ite(" << render(d.predicate).text << ", " << d.operands[0]
            << ", " << d.operands[1] << ")";
        break;
      case ExprKind::Infimum:
      case ExprKind::Supremum:
        out << (d.kind == ExprKind::Infimum ? "inf(" : "sup(");
        for (std::size_t i = 0; i < d.operands.size(); ++i) {
          if (i) out << ", ";
          out << d.operands[i];
        }
        out << ")";
        break;
      case ExprKind::DiscretizedBy:
        out << "discretize(" << d.operands[0] << ", " << format_double(d.step)
            << ")";
        break;
    }
  }

  void operator()(const AstActionDecl& d) {
    out << "action " << d.trigger << " -> " << assigns_text(d.body);
  }

  void operator()(const AstPActionDecl& d) {
    out << "paction " << d.trigger << " -> { ";
    for (std::size_t i = 0; i < d.branches.size(); ++i) {
      if (i) out << " | ";
      out << format_double(d.branches[i].p) << ": "
          << assigns_text(d.branches[i].body);
    }
    out << " }";
  }

  void operator()(const AstRelationDecl& d) {
    out << "rel " << d.name << " = " << relation_kind_name(d.kind) << "["
        << format_double(d.threshold) << "](";
    for (std::size_t i = 0; i < d.clocks.size(); ++i) {
      if (i) out << ", ";
      out << d.clocks[i];
    }
    out << ")";
    if (d.bound > 0.0) out << " within " << time_text(d.bound);
  }

  void operator()(const AstQueryDecl& d) {
    out << "query " << d.name << " = ";
    switch (d.kind) {
      case QueryKind::Hypothesis:
        out << "hypothesis(" << d.rel << ")";
        break;
      case QueryKind::Estimate:
        out << "estimate(" << d.rel << ")";
        break;
      case QueryKind::Compare:
        out << "compare(" << d.rel << ", " << d.rel2 << ")";
        break;
      case QueryKind::Expected:
        out << "expected(" << (d.want_max ? "max" : "min") << ", "
            << observable_text(d.observables.at(0)) << ")";
        break;
      case QueryKind::Simulate:
        out << "simulate(" << d.runs;
        for (const AstObservable& o : d.observables)
          out << ", " << observable_text(o);
        out << ")";
        break;
    }
  }
};

}  // namespace

std::string print(const SpecAst& ast) {
  std::ostringstream out;
  for (const AstDecl& decl : ast.decls) {
    std::visit(DeclPrinter{out}, decl);
    out << '\n';
  }
  return out.str();
}

}  // namespace pccsl::dsl
