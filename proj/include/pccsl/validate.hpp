#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pccsl/ast.hpp"
#include "pccsl/monitor.hpp"
#include "pccsl/sim.hpp"

namespace pccsl::dsl {

struct Observable {
  enum class Kind { Var, Dense, History };
  Kind kind = Kind::Var;
  std::string name;       // display name
  ClockIdx clock = 0;     // Dense / History
  std::uint32_t var = 0;  // Var
};

struct Query {
  std::string name;
  QueryKind kind = QueryKind::Hypothesis;
  std::string rel, rel2;
  bool want_max = true;
  std::vector<Observable> observables;
  std::int64_t runs = 0;
};

struct Validated {
  PcbsSpec spec;
  std::vector<RelationSpec> relations;
  std::vector<Query> queries;

  const RelationSpec* find_relation(const std::string& name) const;
};

struct ValidateResult {
  std::optional<Validated> value;
  std::vector<Diagnostic> diags;
  bool ok() const { return value.has_value() && diags.empty(); }
};

/// Name resolution, dense/logical typing, derivation DAG, action rules,
/// probability normalization. Produces executable spec objects.
ValidateResult validate(const SpecAst& ast);

}  // namespace pccsl::dsl
