#include "pccsl/monitor.hpp"

#include <ostream>

namespace pccsl {

std::string relation_kind_name(RelationKind k) {
  switch (k) {
    case RelationKind::Subclock: return "subclock";
    case RelationKind::Coincidence: return "coincidence";
    case RelationKind::Exclusion: return "exclusion";
    case RelationKind::Precedence: return "precedence";
    case RelationKind::Causality: return "causality";
  }
  return "?";
}

std::string relation_kind_observer(RelationKind k) {
  switch (k) {
    case RelationKind::Subclock: return "Subclock";
    case RelationKind::Coincidence: return "Coincidence";
    case RelationKind::Exclusion: return "Exclusion";
    case RelationKind::Precedence: return "Precedence";
    case RelationKind::Causality: return "Causality";
  }
  return "?";
}

void validate_relation(const RelationSpec& rel, std::size_t clock_count) {
  if (rel.clocks.size() < 2)
    throw SpecError("relation '" + rel.name + "' needs at least two clocks");
  if (rel.threshold < 0.0 || rel.threshold > 1.0)
    throw SpecError("relation '" + rel.name + "': threshold outside [0,1]");
  for (ClockIdx c : rel.clocks)
    if (c >= clock_count)
      throw SpecError("relation '" + rel.name + "': undeclared clock operand");
}

void MonitorState::step(RelationKind kind, const Instant& instant) {
  if (failed) return;
  bool a = instant.ticks(ci);
  bool b = instant.ticks(cj);
  bool bad = false;
  switch (kind) {
    case RelationKind::Subclock:
      bad = a && !b;
      break;
    case RelationKind::Coincidence:
      bad = a != b;
      break;
    case RelationKind::Exclusion:
      bad = a && b;
      break;
    case RelationKind::Causality:
      // taking cj's tick would make hj exceed hi
      bad = b && !a && hi == hj;
      break;
    case RelationKind::Precedence:
      // strict: cj must not tick when histories are equal, simultaneity
      // included
      bad = b && hi == hj;
      break;
  }
  if (bad) {
    // freeze the pre-instant histories that made the check fail
    failed = true;
    failed_at = instant.time;
    return;
  }
  if (a) ++hi;
  if (b) ++hj;
}

RelationMonitor::RelationMonitor(const RelationSpec& rel) : kind_(rel.kind) {
  const auto& cs = rel.clocks;
  if (cs.size() < 2) throw SpecError("relation needs at least two clocks");
  if (kind_ == RelationKind::Exclusion) {
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j)
        pairs_.push_back(MonitorState{cs[i], cs[j]});
  } else {
    for (std::size_t i = 0; i + 1 < cs.size(); ++i)
      pairs_.push_back(MonitorState{cs[i], cs[i + 1]});
  }
}

void RelationMonitor::step(const Instant& instant) {
  for (MonitorState& p : pairs_) p.step(kind_, instant);
}

bool RelationMonitor::ok() const {
  for (const MonitorState& p : pairs_)
    if (p.failed) return false;
  return true;
}

const MonitorState* RelationMonitor::first_failure() const {
  const MonitorState* first = nullptr;
  for (const MonitorState& p : pairs_)
    if (p.failed && (!first || p.failed_at < first->failed_at)) first = &p;
  return first;
}

bool check_nary(const RelationSpec& rel, const Run& run) {
  RelationMonitor mon(rel);
  double bound = rel.has_bound() ? rel.bound : run.bound;
  for (const Instant& in : run.instants) {
    if (in.time > bound) break;
    mon.step(in);
    if (!mon.ok()) return false;
  }
  return mon.ok();
}

double run_ratio(const std::vector<bool>& verdicts) {
  if (verdicts.empty())
    throw SpecError("run_ratio: verdict list must be non-empty");
  std::size_t m = 0;
  for (bool v : verdicts) m += v ? 1 : 0;
  return static_cast<double>(m) / static_cast<double>(verdicts.size());
}

void write_counterexample_summary(std::ostream& out, const RelationSpec& rel,
                                  const RelationMonitor& monitor,
                                  const Run& run) {
  out << "relation,kind,failed_at,clock_i,clock_j,h_i,h_j\n";
  for (const MonitorState& p : monitor.pairs()) {
    if (!p.failed) continue;
    out << rel.name << ',' << relation_kind_name(rel.kind) << ','
        << format_double(p.failed_at) << ',' << run.clock_names.at(p.ci) << ','
        << run.clock_names.at(p.cj) << ',' << p.hi << ',' << p.hj << '\n';
  }
}

}  // namespace pccsl
