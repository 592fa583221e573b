#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pccsl/action.hpp"
#include "pccsl/core.hpp"

namespace pccsl {

enum class ExprKind {
  Ite,
  DelayFor,          // fixed delay (lower == upper)
  IntervalDelayFor,  // uniform delay over [lower, upper]
  FilterBy,
  PeriodicOn,
  Infimum,
  Supremum,
  DiscretizedBy
};

/// Binary word u(v): finite prefix u, infinitely repeated period v.
struct FilterWord {
  std::vector<bool> prefix;
  std::vector<bool> period;  // non-empty

  bool bit(std::uint64_t i) const {  // 0-based tick index
    if (i < prefix.size()) return prefix[i];
    return period[(i - prefix.size()) % period.size()];
  }
  bool operator==(const FilterWord&) const = default;
};

FilterWord parse_filter_word(const std::string& text);  // "01(10)"
std::string filter_word_to_string(const FilterWord& w);

struct ExprDecl {
  ClockIdx result = 0;
  ExprKind kind = ExprKind::FilterBy;
  std::vector<ClockIdx> operands;  // ite: {c1,c2}; delay: {ref,base};
                                   // filter/periodic: {base};
                                   // discretize: {dense};
                                   // inf/sup: all, n >= 2
  VExpr predicate;                 // ite only
  double lower = 0.0;              // delay amount (units or ticks of base)
  double upper = 0.0;
  std::int64_t period_n = 0;       // periodic
  FilterWord word;                 // filter
  double step = 0.0;               // discretize
};

// --- incremental evaluators ----------------------------------------------
//
// One evaluator instance per expression per run. The simulator drives them
// in dependency order within each instant; they are also driven directly by
// unit tests with synthetic tick streams.

class FilterEval {
 public:
  explicit FilterEval(const FilterWord& w) : word_(w) {}
  bool on_base_tick() { return word_.bit(index_++); }

 private:
  FilterWord word_;
  std::uint64_t index_ = 0;
};

class PeriodicEval {
 public:
  explicit PeriodicEval(std::int64_t n) : n_(n) {
    if (n <= 0) throw SpecError("periodic: n must be >= 1");
  }
  bool on_base_tick() {
    if (++count_ == n_) {
      count_ = 0;
      return true;
    }
    return false;
  }

 private:
  std::int64_t n_;
  std::int64_t count_ = 0;
};

/// Infimum ticks when max of the operand histories increases; supremum when
/// the min increases. N-ary operand lists reduce to the same bookkeeping.
class InfSupEval {
 public:
  InfSupEval(bool is_infimum, std::size_t arity)
      : inf_(is_infimum), hist_(arity, 0) {}
  bool on_instant(const std::vector<bool>& operand_ticks);
  std::int64_t result_history() const { return extremum_; }

 private:
  bool inf_;
  std::vector<std::int64_t> hist_;
  std::int64_t extremum_ = 0;
};

/// Pending-delay bookkeeping for one DelayFor/IntervalDelayFor expression.
/// Each ref tick spawns an independent pending delay. For a dense base the
/// maturation time is returned for scheduling; for a discrete base pendings
/// mature on counted base ticks (ticks coincident with the spawn excluded).
class DelayEval {
 public:
  DelayEval(bool dense_base, double base_rate, double lower, double upper);

  struct StepResult {
    bool tick = false;                 // result ticks at this instant
    std::vector<double> schedule;      // future maturation times (dense base)
  };

  /// `matured` — count of scheduled maturations arriving at this instant.
  StepResult on_instant(double now, bool ref_ticks, bool base_ticks,
                        int matured, Rng& rng);

 private:
  bool dense_;
  double rate_;
  double lower_, upper_;
  std::int64_t base_count_ = 0;
  // discrete base: pending maturation tick indices; random interval draws
  // can mature out of spawn order
  std::multiset<std::int64_t> pending_;
};

/// Threshold bookkeeping for DiscretizedBy: the result ticks whenever the
/// source dense value reaches k*step for some not yet consumed k >= 1.
/// Downward jumps lower the next threshold without ticking.
class DiscretizeEval {
 public:
  explicit DiscretizeEval(double step);

  std::uint64_t generation() const { return gen_; }
  std::int64_t next_k() const { return next_k_; }

  /// Called when the source jumped at an instant; returns true when the jump
  /// reached or crossed the pending threshold (one collapsed tick).
  bool on_jump(double post_value);

  /// Called when a scheduled crossing event fires (already generation-checked
  /// by the caller); consumes threshold k.
  void on_crossing() { ++next_k_; }

  void invalidate() { ++gen_; }

  /// Next crossing time from breakpoint (t0, v0) at the given rate, if any.
  std::optional<double> next_cross_time(double t0, double v0,
                                        double rate) const;

 private:
  double step_;
  std::int64_t next_k_ = 1;
  std::uint64_t gen_ = 0;
};

}  // namespace pccsl
