#include "pccsl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <thread>
#include <variant>

namespace pccsl {

ClockIdx PcbsSpec::ensure_ideal() {
  if (!ideal) ideal = clocks.add("idealClk", ClockKind::Dense);
  return *ideal;
}

ClockIdx PcbsSpec::ensure_always() {
  if (!always_clock) always_clock = clocks.add("always", ClockKind::Logical);
  return *always_clock;
}

ClockIdx PcbsSpec::ensure_never() {
  if (!never_clock) never_clock = clocks.add("never", ClockKind::Logical);
  return *never_clock;
}

std::uint32_t PcbsSpec::add_type(DenseClockTypeDecl t) {
  types.push_back(std::move(t));
  return static_cast<std::uint32_t>(types.size() - 1);
}

ClockIdx PcbsSpec::add_dense(const std::string& name, std::uint32_t type) {
  if (type >= types.size()) throw SpecError("dense clock: unknown type index");
  ClockIdx c = clocks.add(name, ClockKind::Dense);
  dense_instances.push_back(DenseInstance{c, type});
  return c;
}

ClockIdx PcbsSpec::add_stimulus(const std::string& name, StimulusDecl stim) {
  ClockIdx c = clocks.add(name, ClockKind::Logical);
  stim.clock = c;
  stimuli.push_back(std::move(stim));
  return c;
}

ClockIdx PcbsSpec::add_expr(const std::string& name, ExprDecl decl) {
  ClockIdx c = clocks.add(name, ClockKind::Logical);
  decl.result = c;
  exprs.push_back(std::move(decl));
  return c;
}

std::uint32_t PcbsSpec::add_var(const std::string& name, VarDomain domain,
                                Value init) {
  for (const VarDecl& v : vars)
    if (v.name == name) throw SpecError("duplicate variable: " + name);
  vars.push_back(VarDecl{name, domain, init});
  return static_cast<std::uint32_t>(vars.size() - 1);
}

double PcbsSpec::effective_rate(ClockIdx dense) const {
  std::set<ClockIdx> seen;
  double rate = 1.0;
  ClockIdx cur = dense;
  while (true) {
    if (ideal && cur == *ideal) return rate;
    if (!seen.insert(cur).second)
      throw SpecError("dense clock type references form a cycle");
    const DenseInstance* inst = nullptr;
    for (const DenseInstance& d : dense_instances)
      if (d.clock == cur) inst = &d;
    if (!inst)
      throw SpecError("dense reference does not resolve: " + clocks.name(cur));
    const DenseClockTypeDecl& t = types.at(inst->type);
    rate *= t.factor;
    cur = t.reference;
  }
}

namespace {

// producer bookkeeping: every logical clock ticks from exactly one source
enum class Producer { None, Stimulus, Expr, Builtin };

struct Graph {
  // unified node ids: dense updates first, then expressions
  std::size_t dense_count;
  std::vector<std::vector<std::size_t>> deps;  // node -> prerequisite nodes
};

}  // namespace

void finalize(PcbsSpec& spec) {
  const std::size_t n_clocks = spec.clocks.size();

  std::vector<Producer> producer(n_clocks, Producer::None);
  std::vector<std::size_t> expr_of(n_clocks, SIZE_MAX);
  std::vector<std::size_t> dense_of(n_clocks, SIZE_MAX);

  if (spec.always_clock) producer[*spec.always_clock] = Producer::Builtin;
  if (spec.never_clock) producer[*spec.never_clock] = Producer::Builtin;

  for (std::size_t i = 0; i < spec.dense_instances.size(); ++i) {
    const DenseInstance& d = spec.dense_instances[i];
    if (!spec.clocks.is_dense(d.clock))
      throw SpecError("dense instance over a logical clock");
    if (dense_of[d.clock] != SIZE_MAX)
      throw SpecError("dense clock declared twice: " +
                      spec.clocks.name(d.clock));
    dense_of[d.clock] = i;
    if (d.type >= spec.types.size())
      throw SpecError("dense clock references an unknown type");
  }
  if (spec.ideal && dense_of[*spec.ideal] != SIZE_MAX)
    throw SpecError("idealClk cannot be redeclared");

  for (const DenseClockTypeDecl& t : spec.types) {
    if (t.factor < 0.0)
      throw SpecError("dense type '" + t.name + "': factor must be >= 0");
    bool ref_ok = spec.clocks.is_dense(t.reference) &&
                  ((spec.ideal && t.reference == *spec.ideal) ||
                   dense_of[t.reference] != SIZE_MAX);
    if (!ref_ok)
      throw SpecError("dense type '" + t.name +
                      "': reference must resolve to a dense clock");
    for (const auto& [trig, amount] : t.offsets) {
      (void)amount;
      if (spec.clocks.is_dense(trig))
        throw SpecError("dense type '" + t.name + "': offset trigger must be logical");
    }
    for (ClockIdx trig : t.resets)
      if (spec.clocks.is_dense(trig))
        throw SpecError("dense type '" + t.name + "': reset trigger must be logical");
  }
  // rate resolution doubles as the reference-cycle check
  for (const DenseInstance& d : spec.dense_instances)
    (void)spec.effective_rate(d.clock);

  for (const StimulusDecl& s : spec.stimuli) {
    if (spec.clocks.is_dense(s.clock))
      throw SpecError("stimulus on a dense clock");
    if (producer[s.clock] != Producer::None)
      throw SpecError("clock has two tick sources: " +
                      spec.clocks.name(s.clock));
    producer[s.clock] = Producer::Stimulus;
    switch (s.kind) {
      case StimulusKind::Periodic:
        if (!(s.period > 0.0)) throw SpecError("periodic stimulus: period must be > 0");
        if (s.jitter < 0.0) throw SpecError("periodic stimulus: jitter must be >= 0");
        break;
      case StimulusKind::UniformInterarrival:
        if (!(s.hi >= s.lo && s.lo >= 0.0))
          throw SpecError("uniform stimulus: need hi >= lo >= 0");
        break;
      case StimulusKind::Scripted:
        for (std::size_t i = 0; i < s.times.size(); ++i) {
          if (s.times[i] < 0.0) throw SpecError("scripted stimulus: negative time");
          if (i > 0 && s.times[i] <= s.times[i - 1])
            throw SpecError("scripted stimulus: times must strictly increase");
        }
        break;
      case StimulusKind::Silent:
        break;
    }
  }

  for (std::size_t e = 0; e < spec.exprs.size(); ++e) {
    const ExprDecl& x = spec.exprs[e];
    if (spec.clocks.is_dense(x.result))
      throw SpecError("expression result must be a logical clock");
    if (producer[x.result] != Producer::None ||
        dense_of[x.result] != SIZE_MAX)
      throw SpecError("clock has two tick sources: " +
                      spec.clocks.name(x.result));
    producer[x.result] = Producer::Expr;
    expr_of[x.result] = e;
    for (ClockIdx op : x.operands)
      if (op >= n_clocks) throw SpecError("expression operand out of range");
    auto want_logical = [&](ClockIdx c, const char* what) {
      if (spec.clocks.is_dense(c))
        throw SpecError(std::string("expression: ") + what +
                        " must be a logical clock");
    };
    switch (x.kind) {
      case ExprKind::FilterBy:
        if (x.operands.size() != 1) throw SpecError("filter: one base clock");
        want_logical(x.operands[0], "filter base");
        if (x.word.period.empty())
          throw SpecError("filter: period must be non-empty");
        break;
      case ExprKind::PeriodicOn:
        if (x.operands.size() != 1) throw SpecError("periodic: one base clock");
        want_logical(x.operands[0], "periodic base");
        if (x.period_n < 1) throw SpecError("periodic: n must be >= 1");
        break;
      case ExprKind::Ite:
        if (x.operands.size() != 2) throw SpecError("ite: two branch clocks");
        want_logical(x.operands[0], "ite branch");
        want_logical(x.operands[1], "ite branch");
        break;
      case ExprKind::Infimum:
      case ExprKind::Supremum:
        if (x.operands.size() < 2)
          throw SpecError("inf/sup: at least two operands");
        for (ClockIdx op : x.operands) want_logical(op, "inf/sup operand");
        break;
      case ExprKind::DelayFor:
      case ExprKind::IntervalDelayFor: {
        if (x.operands.size() != 2)
          throw SpecError("delay: reference and base clocks");
        want_logical(x.operands[0], "delay reference");
        if (!(x.upper >= x.lower && x.lower >= 0.0))
          throw SpecError("delay: need upper >= lower >= 0");
        if (x.kind == ExprKind::DelayFor && x.lower != x.upper)
          throw SpecError("delay: fixed delay needs lower == upper");
        bool dense_base = spec.clocks.is_dense(x.operands[1]);
        if (!dense_base &&
            (std::floor(x.lower) != x.lower || std::floor(x.upper) != x.upper))
          throw SpecError("delay: discrete base needs integral tick counts");
        if (dense_base) {
          bool resolves = (spec.ideal && x.operands[1] == *spec.ideal) ||
                          dense_of[x.operands[1]] != SIZE_MAX;
          if (!resolves) throw SpecError("delay base does not resolve");
        }
        break;
      }
      case ExprKind::DiscretizedBy: {
        if (x.operands.size() != 1) throw SpecError("discretize: one dense clock");
        if (!spec.clocks.is_dense(x.operands[0]))
          throw SpecError("discretize: source must be a dense clock");
        bool resolves = (spec.ideal && x.operands[0] == *spec.ideal) ||
                        dense_of[x.operands[0]] != SIZE_MAX;
        if (!resolves) throw SpecError("discretize source does not resolve");
        if (!(x.step > 0.0)) throw SpecError("discretize: step must be > 0");
        break;
      }
    }
  }

  for (ClockIdx c = 0; c < n_clocks; ++c) {
    if (spec.clocks.is_dense(c)) {
      bool known = (spec.ideal && c == *spec.ideal) || dense_of[c] != SIZE_MAX;
      if (!known)
        throw SpecError("dense clock without a type: " + spec.clocks.name(c));
    } else if (producer[c] == Producer::None) {
      throw SpecError("logical clock without a tick source: " +
                      spec.clocks.name(c));
    }
  }

  for (const VarDecl& v : spec.vars) {
    bool ok = (v.domain == VarDomain::Bool && v.initial.kind == Value::Kind::Bool) ||
              (v.domain == VarDomain::Int && v.initial.kind == Value::Kind::Int) ||
              (v.domain == VarDomain::Real && v.initial.isNumeric());
    if (!ok)
      throw SpecError("variable '" + v.name + "': initial value outside domain");
  }

  std::set<ClockIdx> action_triggers, paction_triggers;
  for (const ActionDecl& a : spec.actions) {
    if (spec.clocks.is_dense(a.trigger))
      throw SpecError("action trigger must be a logical clock");
    if (!action_triggers.insert(a.trigger).second)
      throw SpecError("two actions share trigger: " +
                      spec.clocks.name(a.trigger));
    validate_action_body(a.body, spec.vars);
  }
  for (const ProbActionDecl& pa : spec.pactions) {
    if (spec.clocks.is_dense(pa.trigger))
      throw SpecError("action trigger must be a logical clock");
    if (!paction_triggers.insert(pa.trigger).second)
      throw SpecError("two probabilistic actions share trigger: " +
                      spec.clocks.name(pa.trigger));
    validate_prob_action(pa, spec.vars);
    if (action_triggers.count(pa.trigger)) {
      // both fire at every trigger tick: written sets must stay disjoint
      std::set<std::uint32_t> written;
      for (const ActionDecl& a : spec.actions)
        if (a.trigger == pa.trigger)
          for (const Assign& as : a.body) written.insert(as.var);
      for (const ProbBranch& br : pa.branches)
        for (const Assign& as : br.body)
          if (written.count(as.var))
            throw SpecError("action and probabilistic action on '" +
                            spec.clocks.name(pa.trigger) +
                            "' both assign variable '" +
                            spec.vars[as.var].name + "'");
    }
  }

  // evaluation graph: dense-update nodes, then expression nodes
  const std::size_t n_dense = spec.dense_instances.size();
  const std::size_t n_nodes = n_dense + spec.exprs.size();
  std::vector<std::vector<std::size_t>> deps(n_nodes);

  auto producer_node = [&](ClockIdx c) -> std::optional<std::size_t> {
    if (!spec.clocks.is_dense(c)) {
      if (expr_of[c] != SIZE_MAX) return n_dense + expr_of[c];
      return std::nullopt;  // stimulus / builtin: available at instant start
    }
    if (dense_of[c] != SIZE_MAX) return dense_of[c];
    return std::nullopt;  // idealClk: never jumps
  };

  for (std::size_t i = 0; i < n_dense; ++i) {
    const DenseClockTypeDecl& t = spec.types[spec.dense_instances[i].type];
    for (const auto& [trig, amount] : t.offsets) {
      (void)amount;
      if (auto p = producer_node(trig)) deps[i].push_back(*p);
    }
    for (ClockIdx trig : t.resets)
      if (auto p = producer_node(trig)) deps[i].push_back(*p);
  }
  for (std::size_t e = 0; e < spec.exprs.size(); ++e) {
    const ExprDecl& x = spec.exprs[e];
    for (ClockIdx op : x.operands)
      if (auto p = producer_node(op)) deps[n_dense + e].push_back(*p);
  }

  // Kahn topological sort, stable on node id
  std::vector<std::size_t> indeg(n_nodes, 0);
  std::vector<std::vector<std::size_t>> rdeps(n_nodes);
  for (std::size_t v = 0; v < n_nodes; ++v)
    for (std::size_t d : deps[v]) {
      rdeps[d].push_back(v);
      ++indeg[v];
    }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> q;
  for (std::size_t v = 0; v < n_nodes; ++v)
    if (indeg[v] == 0) q.push(v);
  spec.eval_order.clear();
  while (!q.empty()) {
    std::size_t v = q.top();
    q.pop();
    spec.eval_order.push_back(
        v < n_dense
            ? PcbsSpec::Node{PcbsSpec::Node::Kind::DenseUpdate,
                             static_cast<std::uint32_t>(v)}
            : PcbsSpec::Node{PcbsSpec::Node::Kind::Expr,
                             static_cast<std::uint32_t>(v - n_dense)});
    for (std::size_t w : rdeps[v])
      if (--indeg[w] == 0) q.push(w);
  }
  if (spec.eval_order.size() != n_nodes)
    throw SpecError("clock derivation graph has a cycle");
  spec.finalized = true;
}

namespace {

enum class EvKind { Stimulus, DelayMature, Crossing };

struct Event {
  double time;
  std::uint64_t serial;  // stable pop order among equal times
  EvKind kind;
  std::uint32_t index;   // stimulus / expr index
  std::uint64_t gen;     // crossing generation
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.serial > b.serial;
  }
};

struct DenseState {
  ClockIdx clock;
  double rate;
  std::vector<std::pair<ClockIdx, double>> offsets;
  std::vector<ClockIdx> resets;
  double value = 0.0;
  double last_t = 0.0;
};

using EvalState = std::variant<std::monostate, FilterEval, PeriodicEval,
                               InfSupEval, DelayEval, DiscretizeEval>;

}  // namespace

Run simulate_run(const PcbsSpec& spec, double bound, std::uint64_t seed) {
  if (!spec.finalized) throw SpecError("simulate_run: spec not finalized");
  if (!(bound >= 0.0)) throw SpecError("simulate_run: bound must be >= 0");

  const std::size_t n_clocks = spec.clocks.size();
  Rng rng(seed);

  Run run;
  run.seed = seed;
  run.bound = bound;
  for (ClockIdx c = 0; c < n_clocks; ++c)
    run.clock_names.push_back(spec.clocks.name(c));
  run.tick_times.assign(n_clocks, {});
  for (const VarDecl& v : spec.vars) run.var_names.push_back(v.name);

  VarStore store;
  for (const VarDecl& v : spec.vars) store.vals.push_back(v.initial);

  // dense runtime (idealClk first when present)
  std::vector<DenseState> dense;
  std::vector<std::size_t> dense_rt_of(n_clocks, SIZE_MAX);
  if (spec.ideal) {
    dense_rt_of[*spec.ideal] = dense.size();
    dense.push_back(DenseState{*spec.ideal, 1.0, {}, {}});
  }
  std::vector<std::size_t> instance_rt(spec.dense_instances.size());
  for (std::size_t i = 0; i < spec.dense_instances.size(); ++i) {
    const DenseInstance& d = spec.dense_instances[i];
    const DenseClockTypeDecl& t = spec.types[d.type];
    DenseState st{d.clock, spec.effective_rate(d.clock), t.offsets, t.resets};
    instance_rt[i] = dense.size();
    dense_rt_of[d.clock] = dense.size();
    dense.push_back(std::move(st));
  }
  for (DenseState& st : dense)
    run.dense[st.clock].points.push_back(DensePoint{0.0, 0.0});

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue;
  std::uint64_t serial = 0;
  auto push_event = [&](double t, EvKind kind, std::uint32_t index,
                        std::uint64_t gen = 0) {
    if (t > bound) return;
    queue.push(Event{t, serial++, kind, index, gen});
  };

  // stimulus scheduling: periodic and scripted arrivals are generated up
  // front (jitter can reorder neighbours); uniform inter-arrivals are
  // generated lazily on pop
  for (std::size_t s = 0; s < spec.stimuli.size(); ++s) {
    const StimulusDecl& st = spec.stimuli[s];
    switch (st.kind) {
      case StimulusKind::Periodic: {
        if (bound / st.period > 2.0e7)
          throw SimError("stimulus would generate too many arrivals", 0.0);
        for (std::uint64_t k = 1;
             static_cast<double>(k) * st.period - st.jitter <= bound; ++k) {
          double t = static_cast<double>(k) * st.period +
                     rng.uniform(-st.jitter, st.jitter);
          if (t < 0.0) t = 0.0;
          push_event(t, EvKind::Stimulus, static_cast<std::uint32_t>(s));
        }
        break;
      }
      case StimulusKind::UniformInterarrival:
        push_event(rng.uniform(st.lo, st.hi), EvKind::Stimulus,
                   static_cast<std::uint32_t>(s));
        break;
      case StimulusKind::Scripted:
        for (double t : st.times)
          push_event(t, EvKind::Stimulus, static_cast<std::uint32_t>(s));
        break;
      case StimulusKind::Silent:
        break;
    }
  }

  // expression evaluator states
  std::vector<EvalState> evals(spec.exprs.size());
  for (std::size_t e = 0; e < spec.exprs.size(); ++e) {
    const ExprDecl& x = spec.exprs[e];
    switch (x.kind) {
      case ExprKind::FilterBy:
        evals[e] = FilterEval(x.word);
        break;
      case ExprKind::PeriodicOn:
        evals[e] = PeriodicEval(x.period_n);
        break;
      case ExprKind::Infimum:
      case ExprKind::Supremum:
        evals[e] = InfSupEval(x.kind == ExprKind::Infimum, x.operands.size());
        break;
      case ExprKind::DelayFor:
      case ExprKind::IntervalDelayFor: {
        bool dense_base = spec.clocks.is_dense(x.operands[1]);
        double rate = dense_base ? spec.effective_rate(x.operands[1]) : 0.0;
        evals[e] = DelayEval(dense_base, rate, x.lower, x.upper);
        break;
      }
      case ExprKind::DiscretizedBy: {
        DiscretizeEval d(x.step);
        const DenseState& src = dense[dense_rt_of[x.operands[0]]];
        if (auto t = d.next_cross_time(0.0, 0.0, src.rate))
          push_event(*t, EvKind::Crossing, static_cast<std::uint32_t>(e),
                     d.generation());
        evals[e] = std::move(d);
        break;
      }
      case ExprKind::Ite:
        evals[e] = std::monostate{};
        break;
    }
  }

  std::vector<char> flags(n_clocks, 0);
  std::vector<int> matured(spec.exprs.size(), 0);
  std::vector<char> crossing(spec.exprs.size(), 0);
  std::vector<char> jumped(dense.size(), 0);
  std::vector<bool> op_ticks;

  while (!queue.empty()) {
    double now = queue.top().time;
    if (now > bound) break;

    std::fill(flags.begin(), flags.end(), 0);
    std::fill(matured.begin(), matured.end(), 0);
    std::fill(crossing.begin(), crossing.end(), 0);
    std::fill(jumped.begin(), jumped.end(), 0);
    bool any_seed = false;

    while (!queue.empty() && queue.top().time == now) {
      Event ev = queue.top();
      queue.pop();
      switch (ev.kind) {
        case EvKind::Stimulus: {
          const StimulusDecl& st = spec.stimuli[ev.index];
          flags[st.clock] = 1;
          any_seed = true;
          if (st.kind == StimulusKind::UniformInterarrival)
            push_event(now + rng.uniform(st.lo, st.hi), EvKind::Stimulus,
                       ev.index);
          break;
        }
        case EvKind::DelayMature:
          ++matured[ev.index];
          any_seed = true;
          break;
        case EvKind::Crossing: {
          const auto& d = std::get<DiscretizeEval>(evals[ev.index]);
          if (ev.gen == d.generation()) {
            crossing[ev.index] = 1;
            any_seed = true;
          }
          break;
        }
      }
    }
    if (!any_seed) continue;

    if (spec.always_clock) flags[*spec.always_clock] = 1;

    for (const PcbsSpec::Node& node : spec.eval_order) {
      if (node.kind == PcbsSpec::Node::Kind::DenseUpdate) {
        DenseState& st = dense[instance_rt[node.index]];
        double pre = st.value + st.rate * (now - st.last_t);
        double post = pre;
        bool jump = false;
        for (const auto& [trig, amount] : st.offsets)
          if (flags[trig]) {
            post += amount;
            jump = true;
          }
        for (ClockIdx trig : st.resets)
          if (flags[trig]) {
            post = 0.0;
            jump = true;
          }
        if (jump) {
          auto& points = run.dense[st.clock].points;
          points.push_back(DensePoint{now, pre, DensePointKind::Segment});
          points.push_back(DensePoint{now, post, DensePointKind::Jump});
          st.value = post;
          st.last_t = now;
          jumped[instance_rt[node.index]] = 1;
        }
        continue;
      }
      const std::size_t e = node.index;
      const ExprDecl& x = spec.exprs[e];
      bool tick = false;
      switch (x.kind) {
        case ExprKind::FilterBy:
          if (flags[x.operands[0]])
            tick = std::get<FilterEval>(evals[e]).on_base_tick();
          break;
        case ExprKind::PeriodicOn:
          if (flags[x.operands[0]])
            tick = std::get<PeriodicEval>(evals[e]).on_base_tick();
          break;
        case ExprKind::Ite: {
          Value v = eval_vexpr(x.predicate, store, now);
          if (v.kind != Value::Kind::Bool)
            throw SimError("ite predicate must be boolean", now);
          tick = flags[x.operands[v.b ? 0 : 1]] != 0;
          break;
        }
        case ExprKind::Infimum:
        case ExprKind::Supremum: {
          op_ticks.clear();
          for (ClockIdx op : x.operands) op_ticks.push_back(flags[op] != 0);
          tick = std::get<InfSupEval>(evals[e]).on_instant(op_ticks);
          break;
        }
        case ExprKind::DelayFor:
        case ExprKind::IntervalDelayFor: {
          bool dense_base = spec.clocks.is_dense(x.operands[1]);
          auto res = std::get<DelayEval>(evals[e]).on_instant(
              now, flags[x.operands[0]] != 0,
              !dense_base && flags[x.operands[1]] != 0, matured[e], rng);
          tick = res.tick;
          for (double t : res.schedule)
            push_event(t, EvKind::DelayMature, static_cast<std::uint32_t>(e));
          break;
        }
        case ExprKind::DiscretizedBy: {
          auto& d = std::get<DiscretizeEval>(evals[e]);
          const DenseState& src = dense[dense_rt_of[x.operands[0]]];
          if (jumped[dense_rt_of[x.operands[0]]]) {
            // the jump superseded any in-flight crossing
            tick = d.on_jump(src.value);
            if (auto t = d.next_cross_time(src.last_t, src.value, src.rate))
              push_event(*t, EvKind::Crossing, static_cast<std::uint32_t>(e),
                         d.generation());
          } else if (crossing[e]) {
            tick = true;
            d.on_crossing();
            if (auto t = d.next_cross_time(src.last_t, src.value, src.rate))
              push_event(*t, EvKind::Crossing, static_cast<std::uint32_t>(e),
                         d.generation());
          }
          break;
        }
      }
      if (tick) flags[x.result] = 1;
    }

    Instant inst;
    inst.time = now;
    for (ClockIdx c = 0; c < n_clocks; ++c)
      if (flags[c]) {
        inst.ticking.push_back(c);
        run.tick_times[c].push_back(now);
      }
    run.instants.push_back(std::move(inst));
    if (run.instants.size() > kInstantExplosionGuard)
      throw SimError("event explosion: instant guard exceeded", now);

    // actions fire after the ticking set is complete; two actions writing
    // the same variable in one instant abort the run
    std::set<std::uint32_t> written;
    auto mark_writes = [&](const std::vector<Assign>& body) {
      for (const Assign& a : body)
        if (!written.insert(a.var).second)
          throw SimError("two actions assign variable '" +
                             spec.vars[a.var].name + "' in one instant",
                         now);
    };
    for (const ActionDecl& a : spec.actions)
      if (flags[a.trigger]) {
        mark_writes(a.body);
        execute_action(store, a.body, spec.vars, now);
      }
    for (const ProbActionDecl& pa : spec.pactions)
      if (flags[pa.trigger]) {
        std::size_t pick = execute_prob_action(store, pa, spec.vars, rng, now);
        mark_writes(pa.branches[pick].body);
      }

    run.var_values.push_back(store.vals);
  }

  for (DenseState& st : dense) {
    auto& trace = run.dense[st.clock];
    trace.rate = st.rate;
    if (trace.points.empty() || trace.points.back().time < bound) {
      double v_end = st.value + st.rate * (bound - st.last_t);
      trace.points.push_back(DensePoint{bound, v_end, DensePointKind::Segment});
    }
  }
  return run;
}

namespace {

void score_run(const Run& run, const std::vector<RelationSpec>& rels,
               std::vector<RelationBatch>& out, std::size_t run_index) {
  for (std::size_t r = 0; r < rels.size(); ++r)
    out[r].verdicts[run_index] = check_nary(rels[r], run);
}

}  // namespace

std::vector<RelationBatch> simulate_batch(const PcbsSpec& spec,
                                          const std::vector<RelationSpec>& rels,
                                          double bound, std::uint64_t k,
                                          std::uint64_t seed,
                                          const BatchOptions& opts) {
  if (k < 1) throw SpecError("simulate_batch: k must be >= 1");
  std::vector<RelationBatch> out(rels.size());
  for (auto& rb : out) rb.verdicts.assign(k, false);

  auto worker = [&](std::uint64_t begin, std::uint64_t step) {
    for (std::uint64_t i = begin; i < k; i += step) {
      Run run;
      try {
        run = simulate_run(spec, bound, derive_seed(seed, i));
      } catch (const SimError& e) {
        throw SimError("run " + std::to_string(i) + ": " + e.what(), e.time);
      }
      score_run(run, rels, out, i);
    }
  };

  int jobs = std::max(1, opts.jobs);
  if (jobs == 1 || k == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        try {
          worker(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(jobs));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  if (opts.retain_first_failure) {
    for (std::size_t r = 0; r < rels.size(); ++r) {
      for (std::uint64_t i = 0; i < k; ++i)
        if (!out[r].verdicts[i]) {
          // re-simulate the falsifying run; runs are cheap and deterministic
          out[r].counterexample = simulate_run(spec, bound, derive_seed(seed, i));
          break;
        }
    }
  }
  return out;
}

}  // namespace pccsl
