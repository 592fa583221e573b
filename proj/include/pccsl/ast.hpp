#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pccsl/action.hpp"
#include "pccsl/expr.hpp"
#include "pccsl/monitor.hpp"
#include "pccsl/sim.hpp"

namespace pccsl::dsl {

// Value expressions with unresolved identifiers (variables or constants).
struct AstVExpr {
  VOp op = VOp::Const;
  Value lit;
  std::string name;  // VOp::Var: identifier
  std::vector<AstVExpr> kids;
  bool operator==(const AstVExpr&) const = default;
};

struct AstUseDecl {
  std::string path;
  bool operator==(const AstUseDecl&) const = default;
};

struct AstConstDecl {
  std::string name;
  double value = 0.0;
  bool operator==(const AstConstDecl&) const = default;
};

struct AstDenseTypeDecl {
  std::string name;
  std::string reference;
  double factor = 1.0;
  std::vector<std::pair<std::string, double>> offsets;
  std::vector<std::string> resets;
  bool operator==(const AstDenseTypeDecl&) const = default;
};

struct AstStimulus {
  StimulusKind kind = StimulusKind::Silent;
  double period = 0.0, jitter = 0.0;  // seconds
  double lo = 0.0, hi = 0.0;          // seconds
  std::vector<double> times;          // seconds
  bool operator==(const AstStimulus&) const = default;
};

struct AstClockDecl {
  std::string name;
  bool dense = false;
  std::string type;      // dense instance
  AstStimulus stimulus;  // logical clock
  bool operator==(const AstClockDecl&) const = default;
};

struct AstVarDecl {
  std::string name;
  VarDomain domain = VarDomain::Int;
  Value initial;
  bool operator==(const AstVarDecl&) const = default;
};

struct AstExprDecl {
  std::string name;
  ExprKind kind = ExprKind::FilterBy;
  std::vector<std::string> operands;
  AstVExpr predicate;          // ite
  double lower = 0.0, upper = 0.0;
  bool interval = false;       // delay: [lo,hi] vs fixed
  std::int64_t period_n = 0;
  std::string word;            // canonical filter word text
  double step = 0.0;
  bool operator==(const AstExprDecl&) const = default;
};

struct AstAssign {
  std::string var;
  AstVExpr rhs;
  bool operator==(const AstAssign&) const = default;
};

struct AstActionDecl {
  std::string trigger;
  std::vector<AstAssign> body;
  bool operator==(const AstActionDecl&) const = default;
};

struct AstBranch {
  double p = 0.0;
  std::vector<AstAssign> body;
  bool operator==(const AstBranch&) const = default;
};

struct AstPActionDecl {
  std::string trigger;
  std::vector<AstBranch> branches;
  bool operator==(const AstPActionDecl&) const = default;
};

struct AstRelationDecl {
  std::string name;
  RelationKind kind = RelationKind::Coincidence;
  double threshold = 1.0;
  std::vector<std::string> clocks;
  double bound = 0.0;  // seconds; 0 = query bound
  bool operator==(const AstRelationDecl&) const = default;
};

enum class QueryKind { Hypothesis, Estimate, Compare, Expected, Simulate };

enum class ObservableKind { Auto, History, Dense };  // Auto: var or dense clock

struct AstObservable {
  ObservableKind kind = ObservableKind::Auto;
  std::string name;
  bool operator==(const AstObservable&) const = default;
};

struct AstQueryDecl {
  std::string name;
  QueryKind kind = QueryKind::Hypothesis;
  std::string rel, rel2;
  bool want_max = true;
  std::vector<AstObservable> observables;  // expected: exactly one
  std::int64_t runs = 0;                   // simulate; 0 = CLI default
  bool operator==(const AstQueryDecl&) const = default;
};

using AstDecl =
    std::variant<AstUseDecl, AstConstDecl, AstDenseTypeDecl, AstClockDecl,
                 AstVarDecl, AstExprDecl, AstActionDecl, AstPActionDecl,
                 AstRelationDecl, AstQueryDecl>;

struct SourceLoc {
  int line = 0, col = 0;
};

struct SpecAst {
  std::vector<AstDecl> decls;
  std::vector<SourceLoc> locs;  // parallel to decls, ignored by ==

  bool operator==(const SpecAst& o) const { return decls == o.decls; }
};

struct Diagnostic {
  enum class Category { Lexical, Syntax, Semantic };
  Category category = Category::Syntax;
  int line = 0, col = 0;
  std::string message;

  std::string to_string() const;
};

struct ParseResult {
  std::optional<SpecAst> ast;
  std::vector<Diagnostic> diags;
  bool ok() const { return ast.has_value() && diags.empty(); }
};

/// Parses one buffer. `use` directives are kept as declarations.
ParseResult parse(std::string_view text);

/// Parses a file, resolving `use` directives relative to the file's
/// directory and splicing the included declarations in place.
ParseResult parse_file(const std::string& path);

/// Canonical pretty-printer; parse(print(ast)) == ast.
std::string print(const SpecAst& ast);

}  // namespace pccsl::dsl
