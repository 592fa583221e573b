#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pccsl {

class PccslError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Declaration / usage errors (unknown clocks, malformed specs).
class SpecError : public PccslError {
 public:
  using PccslError::PccslError;
};

/// Errors raised while a run executes (division by zero, unreachable delay,
/// event explosion). Carries the run time at which the run aborted.
class SimError : public PccslError {
 public:
  SimError(const std::string& msg, double at_time)
      : PccslError(msg), time(at_time) {}
  double time;
};

class ExportError : public PccslError {
 public:
  using PccslError::PccslError;
};

using ClockIdx = std::uint32_t;

enum class ClockKind { Logical, Dense };

/// Interned clock declarations. Names are unique within one specification.
class ClockTable {
 public:
  ClockIdx add(std::string name, ClockKind kind);
  std::optional<ClockIdx> find(const std::string& name) const;
  ClockIdx require(const std::string& name) const;
  const std::string& name(ClockIdx c) const { return names_.at(c); }
  ClockKind kind(ClockIdx c) const { return kinds_.at(c); }
  bool is_dense(ClockIdx c) const { return kind(c) == ClockKind::Dense; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<ClockKind> kinds_;
  std::map<std::string, ClockIdx> index_;
};

/// Runtime value of a state variable.
struct Value {
  enum class Kind { Int, Real, Bool };
  Kind kind = Kind::Int;
  double num = 0.0;  // Int payload kept integral
  bool b = false;

  static Value ofInt(std::int64_t v);
  static Value ofReal(double v) { return Value{Kind::Real, v, false}; }
  static Value ofBool(bool v) { return Value{Kind::Bool, 0.0, v}; }
  bool isNumeric() const { return kind != Kind::Bool; }
  bool operator==(const Value&) const = default;
};

std::string value_to_string(const Value& v);
Value value_from_string(const std::string& s);

/// One discrete point of a run: a timestamp and the set of clocks that tick
/// there. A `ticking` set is sorted and non-empty; instants in a run strictly
/// increase in time.
struct Instant {
  double time = 0.0;
  std::vector<ClockIdx> ticking;

  bool ticks(ClockIdx c) const;
  bool operator==(const Instant&) const = default;
};

enum class DensePointKind { Segment, Jump };

/// Breakpoint of a piecewise-linear dense-clock trajectory. Between
/// breakpoints the value evolves linearly at the trace rate; a Jump point
/// records the post-jump value at an offset/reset instant.
struct DensePoint {
  double time = 0.0;
  double value = 0.0;
  DensePointKind kind = DensePointKind::Segment;
  bool operator==(const DensePoint&) const = default;
};

struct DenseTrace {
  double rate = 0.0;  // effective derivative vs ideal time
  std::vector<DensePoint> points;

  /// Value at time t, post-jump convention at jump instants.
  double value_at(double t) const;
  bool operator==(const DenseTrace&) const = default;
};

/// One simulated execution of a PCBS.
struct Run {
  std::vector<std::string> clock_names;         // index -> name
  std::vector<Instant> instants;                // strictly increasing times
  std::vector<std::vector<double>> tick_times;  // per clock, ascending
  std::map<ClockIdx, DenseTrace> dense;         // dense clocks only
  std::vector<std::string> var_names;
  std::vector<std::vector<Value>> var_values;   // per instant, post-instant
  std::uint64_t seed = 0;
  double bound = 0.0;

  std::optional<ClockIdx> find_clock(const std::string& name) const;
};

/// Number of instants with timestamp <= t whose ticking set contains c.
std::int64_t history(const Run& run, ClockIdx c, double t);
std::int64_t history(const Run& run, const std::string& clock, double t);

/// Dense-clock valuation at time t (post-jump at jump instants).
double dense_value(const Run& run, ClockIdx c, double t);
double dense_value(const Run& run, const std::string& clock, double t);

// --- trace serialization ------------------------------------------------
//
// Instants: one row per instant, `time,clock1|clock2|...,var1=val,...`.
// Dense traces: header `time,clock,value,kind` then breakpoint rows with
// kind `segment` or `jump`.

void write_trace_csv(const Run& run, std::ostream& out);
void write_dense_csv(const Run& run, std::ostream& out);
Run read_trace_csv(std::istream& in);
void read_dense_csv(Run& run, std::istream& in);

std::string format_double(double v);  // shortest round-trip text
double parse_double(const std::string& s);

/// Deterministic per-run generator. All stochastic draws of a run come from
/// one instance; distributions are derived from raw bits so streams do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next_u64() { return eng_(); }
  double uniform01();
  double uniform(double lo, double hi);
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive

 private:
  std::mt19937_64 eng_;
};

/// Derives the seed of run `index` within a batch (seed xor index, mixed).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace pccsl
