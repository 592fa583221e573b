#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pccsl/core.hpp"

namespace pccsl {

enum class RelationKind { Subclock, Coincidence, Exclusion, Precedence, Causality };

std::string relation_kind_name(RelationKind k);  // "precedence", ...
std::string relation_kind_observer(RelationKind k);  // "Precedence", ...

/// A (probabilistic, possibly n-ary) relation among logical clocks.
struct RelationSpec {
  std::string name;
  RelationKind kind = RelationKind::Coincidence;
  std::vector<ClockIdx> clocks;  // ordered, n >= 2
  double threshold = 1.0;        // p in [0,1]
  double bound = 0.0;            // seconds; 0 means "use the query bound"

  bool has_bound() const { return bound > 0.0; }
};

void validate_relation(const RelationSpec& rel, std::size_t clock_count);

/// Observer state for one ordered clock pair. Once failed, stays failed.
struct MonitorState {
  ClockIdx ci = 0, cj = 0;
  std::int64_t hi = 0, hj = 0;
  bool failed = false;
  double failed_at = 0.0;

  void step(RelationKind kind, const Instant& instant);
};

/// Monitor for one (n-ary) relation: the n-1 adjacent pairs for the four
/// transitive kinds, all n(n-1)/2 ordered pairs for exclusion.
class RelationMonitor {
 public:
  explicit RelationMonitor(const RelationSpec& rel);

  void step(const Instant& instant);
  bool ok() const;
  const std::vector<MonitorState>& pairs() const { return pairs_; }
  const MonitorState* first_failure() const;  // earliest failed pair, if any

 private:
  RelationKind kind_;
  std::vector<MonitorState> pairs_;
};

/// Replays a whole run through a fresh monitor; instants after `bound`
/// (relation bound, falling back to the run bound) are ignored.
bool check_nary(const RelationSpec& rel, const Run& run);

/// m/k over a non-empty verdict list.
double run_ratio(const std::vector<bool>& verdicts);

/// Counter-example summary: `relation,kind,failed_at,clock_i,clock_j,h_i,h_j`.
void write_counterexample_summary(std::ostream& out, const RelationSpec& rel,
                                  const RelationMonitor& monitor,
                                  const Run& run);

}  // namespace pccsl
