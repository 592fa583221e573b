#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pccsl/action.hpp"
#include "pccsl/core.hpp"
#include "pccsl/expr.hpp"
#include "pccsl/monitor.hpp"

namespace pccsl {

enum class StimulusKind { Periodic, UniformInterarrival, Scripted, Silent };

/// Tick source for a base logical clock.
struct StimulusDecl {
  ClockIdx clock = 0;
  StimulusKind kind = StimulusKind::Silent;
  double period = 0.0, jitter = 0.0;  // periodic: k-th arrival k*period + U[-j,+j]
  double lo = 0.0, hi = 0.0;          // uniform inter-arrival
  std::vector<double> times;          // scripted, strictly increasing
};

struct DenseClockTypeDecl {
  std::string name;
  ClockIdx reference = 0;  // dense clock, or idealClk
  double factor = 1.0;
  std::vector<std::pair<ClockIdx, double>> offsets;  // (trigger, amount)
  std::vector<ClockIdx> resets;
};

struct DenseInstance {
  ClockIdx clock = 0;
  std::uint32_t type = 0;  // index into PcbsSpec::types
};

/// A probabilistic clock based system: clock types, dense and logical
/// clocks, expressions, actions and probabilistic actions, plus the tick
/// sources that drive base logical clocks.
struct PcbsSpec {
  ClockTable clocks;
  std::optional<ClockIdx> ideal;         // "idealClk", rate 1, unit seconds
  std::optional<ClockIdx> always_clock;  // ticks at every produced instant
  std::optional<ClockIdx> never_clock;   // never ticks

  std::vector<DenseClockTypeDecl> types;
  std::vector<DenseInstance> dense_instances;
  std::vector<StimulusDecl> stimuli;
  std::vector<ExprDecl> exprs;
  std::vector<VarDecl> vars;
  std::vector<ActionDecl> actions;
  std::vector<ProbActionDecl> pactions;

  // construction helpers (tests and the validator use these)
  ClockIdx ensure_ideal();
  ClockIdx ensure_always();
  ClockIdx ensure_never();
  std::uint32_t add_type(DenseClockTypeDecl t);
  ClockIdx add_dense(const std::string& name, std::uint32_t type);
  ClockIdx add_stimulus(const std::string& name, StimulusDecl stim);
  ClockIdx add_expr(const std::string& name, ExprDecl decl);
  std::uint32_t add_var(const std::string& name, VarDomain domain, Value init);

  /// Effective derivative of a dense clock against ideal time.
  double effective_rate(ClockIdx dense) const;

  // filled by finalize()
  struct Node {
    enum class Kind { DenseUpdate, Expr } kind;
    std::uint32_t index;
  };
  std::vector<Node> eval_order;
  bool finalized = false;
};

/// Validates the spec (typing, derivation DAG, action rules, stimulus
/// parameters) and computes the per-instant evaluation order. Throws
/// SpecError on any violated invariant.
void finalize(PcbsSpec& spec);

inline constexpr std::uint64_t kInstantExplosionGuard = 10'000'000;

/// One bounded discrete-event execution. Deterministic given the seed.
Run simulate_run(const PcbsSpec& spec, double bound, std::uint64_t seed);

struct BatchOptions {
  int jobs = 1;
  bool retain_first_failure = true;
};

struct RelationBatch {
  std::vector<bool> verdicts;        // per run, index order
  std::optional<Run> counterexample; // first falsifying run
};

/// k runs with derived seeds; each run scored by every relation monitor.
std::vector<RelationBatch> simulate_batch(const PcbsSpec& spec,
                                          const std::vector<RelationSpec>& rels,
                                          double bound, std::uint64_t k,
                                          std::uint64_t seed,
                                          const BatchOptions& opts = {});

}  // namespace pccsl
