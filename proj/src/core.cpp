#include "pccsl/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pccsl {

ClockIdx ClockTable::add(std::string name, ClockKind kind) {
  if (name.empty()) throw SpecError("clock name must be non-empty");
  if (index_.count(name))
    throw SpecError("duplicate clock declaration: " + name);
  ClockIdx id = static_cast<ClockIdx>(names_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  kinds_.push_back(kind);
  return id;
}

std::optional<ClockIdx> ClockTable::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ClockIdx ClockTable::require(const std::string& name) const {
  auto id = find(name);
  if (!id) throw SpecError("unknown clock: " + name);
  return *id;
}

Value Value::ofInt(std::int64_t v) {
  Value r;
  r.kind = Kind::Int;
  r.num = static_cast<double>(v);
  return r;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw SpecError("malformed number: '" + s + "'");
  return v;
}

std::string value_to_string(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Bool:
      return v.b ? "true" : "false";
    case Value::Kind::Int: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%lld",
                    static_cast<long long>(std::llround(v.num)));
      return buf;
    }
    case Value::Kind::Real: {
      std::string s = format_double(v.num);
      // keep reals distinguishable from ints on re-read
      if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
      return s;
    }
  }
  return {};
}

Value value_from_string(const std::string& s) {
  if (s == "true") return Value::ofBool(true);
  if (s == "false") return Value::ofBool(false);
  if (s.find_first_of(".eEni") != std::string::npos)
    return Value::ofReal(parse_double(s));
  return Value::ofInt(static_cast<std::int64_t>(std::llround(parse_double(s))));
}

bool Instant::ticks(ClockIdx c) const {
  return std::binary_search(ticking.begin(), ticking.end(), c);
}

double DenseTrace::value_at(double t) const {
  if (points.empty()) return 0.0;
  // latest breakpoint with time <= t; the last one wins at jump instants
  auto it = std::upper_bound(
      points.begin(), points.end(), t,
      [](double lhs, const DensePoint& p) { return lhs < p.time; });
  if (it == points.begin()) return points.front().value;
  const DensePoint& p = *(it - 1);
  return p.value + rate * (t - p.time);
}

std::optional<ClockIdx> Run::find_clock(const std::string& name) const {
  for (std::size_t i = 0; i < clock_names.size(); ++i)
    if (clock_names[i] == name) return static_cast<ClockIdx>(i);
  return std::nullopt;
}

std::int64_t history(const Run& run, ClockIdx c, double t) {
  if (c >= run.tick_times.size())
    throw SpecError("history: clock index out of range");
  const auto& times = run.tick_times[c];
  return std::upper_bound(times.begin(), times.end(), t) - times.begin();
}

std::int64_t history(const Run& run, const std::string& clock, double t) {
  auto c = run.find_clock(clock);
  if (!c) throw SpecError("history: unknown clock: " + clock);
  return history(run, *c, t);
}

double dense_value(const Run& run, ClockIdx c, double t) {
  auto it = run.dense.find(c);
  if (it == run.dense.end())
    throw SpecError("dense_value: clock is not dense");
  return it->second.value_at(t);
}

double dense_value(const Run& run, const std::string& clock, double t) {
  auto c = run.find_clock(clock);
  if (!c) throw SpecError("dense_value: unknown clock: " + clock);
  return dense_value(run, *c, t);
}

void write_trace_csv(const Run& run, std::ostream& out) {
  for (std::size_t i = 0; i < run.instants.size(); ++i) {
    const Instant& in = run.instants[i];
    out << format_double(in.time) << ',';
    for (std::size_t k = 0; k < in.ticking.size(); ++k) {
      if (k) out << '|';
      out << run.clock_names.at(in.ticking[k]);
    }
    for (std::size_t v = 0; v < run.var_names.size(); ++v)
      out << ',' << run.var_names[v] << '='
          << value_to_string(run.var_values.at(i).at(v));
    out << '\n';
  }
}

void write_dense_csv(const Run& run, std::ostream& out) {
  out << "time,clock,value,kind\n";
  for (const auto& [clock, trace] : run.dense) {
    for (const DensePoint& p : trace.points)
      out << format_double(p.time) << ',' << run.clock_names.at(clock) << ','
          << format_double(p.value) << ','
          << (p.kind == DensePointKind::Segment ? "segment" : "jump") << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Run read_trace_csv(std::istream& in) {
  Run run;
  std::map<std::string, ClockIdx> clocks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() < 2) throw SpecError("trace row needs time and ticking");
    Instant inst;
    inst.time = parse_double(fields[0]);
    for (const std::string& name : split(fields[1], '|')) {
      if (name.empty()) throw SpecError("empty clock name in trace row");
      auto it = clocks.find(name);
      ClockIdx id;
      if (it == clocks.end()) {
        id = static_cast<ClockIdx>(run.clock_names.size());
        clocks.emplace(name, id);
        run.clock_names.push_back(name);
        run.tick_times.emplace_back();
      } else {
        id = it->second;
      }
      inst.ticking.push_back(id);
    }
    std::sort(inst.ticking.begin(), inst.ticking.end());
    inst.ticking.erase(std::unique(inst.ticking.begin(), inst.ticking.end()),
                       inst.ticking.end());
    std::vector<Value> vals;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      std::size_t eq = fields[f].find('=');
      if (eq == std::string::npos)
        throw SpecError("malformed var field: " + fields[f]);
      std::string name = fields[f].substr(0, eq);
      if (run.var_values.empty()) run.var_names.push_back(name);
      vals.push_back(value_from_string(fields[f].substr(eq + 1)));
    }
    if (!run.instants.empty() && inst.time <= run.instants.back().time)
      throw SpecError("trace rows must strictly increase in time");
    for (ClockIdx c : inst.ticking) run.tick_times[c].push_back(inst.time);
    run.instants.push_back(std::move(inst));
    run.var_values.push_back(std::move(vals));
  }
  if (!run.instants.empty()) run.bound = run.instants.back().time;
  return run;
}

void read_dense_csv(Run& run, std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return;  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 4) throw SpecError("dense row needs 4 fields");
    ClockIdx id;
    if (auto found = run.find_clock(fields[1])) {
      id = *found;
    } else {
      id = static_cast<ClockIdx>(run.clock_names.size());
      run.clock_names.push_back(fields[1]);
      run.tick_times.emplace_back();
    }
    DensePoint p;
    p.time = parse_double(fields[0]);
    p.value = parse_double(fields[2]);
    if (fields[3] == "segment")
      p.kind = DensePointKind::Segment;
    else if (fields[3] == "jump")
      p.kind = DensePointKind::Jump;
    else
      throw SpecError("dense row kind must be segment or jump");
    run.dense[id].points.push_back(p);
  }
  // recover rates from the first segment pair with positive extent
  for (auto& [clock, trace] : run.dense) {
    trace.rate = 0.0;
    for (std::size_t i = 0; i + 1 < trace.points.size(); ++i) {
      const DensePoint& a = trace.points[i];
      const DensePoint& b = trace.points[i + 1];
      if (b.kind == DensePointKind::Segment && b.time > a.time) {
        trace.rate = (b.value - a.value) / (b.time - a.time);
        break;
      }
    }
  }
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw SpecError("uniform_int: empty range");
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
  std::int64_t off =
      static_cast<std::int64_t>(std::floor(uniform01() * static_cast<double>(span)));
  if (off >= static_cast<std::int64_t>(span)) off = static_cast<std::int64_t>(span) - 1;
  return lo + off;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = (base ^ index) + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace pccsl
