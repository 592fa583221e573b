#include "pccsl/uppaal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace pccsl::uppaal {

std::string format_model_number(double v) {
  if (std::floor(v) == v && std::abs(v) < 9.0e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  return format_double(v);
}

std::string format_probability(double p) {
  std::string s = format_double(p);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::vector<long long> probability_weights(const std::vector<double>& probs) {
  constexpr long long kCap = 1'000'000;
  long long denom = 1;
  for (double p : probs) {
    long long d = 0;
    for (long long cand = 1; cand <= kCap; ++cand) {
      double scaled = p * static_cast<double>(cand);
      if (std::abs(scaled - std::round(scaled)) < 1e-7) {
        d = cand;
        break;
      }
    }
    if (d == 0)
      throw ExportError("branch probability " + format_double(p) +
                        " has no integer ratio with denominator <= 1e6");
    denom = std::lcm(denom, d);
    if (denom > kCap)
      throw ExportError("branch probabilities need a common denominator "
                        "beyond 1e6");
  }
  std::vector<long long> weights;
  for (double p : probs)
    weights.push_back(static_cast<long long>(std::llround(p * static_cast<double>(denom))));
  long long g = 0;
  for (long long w : weights) g = std::gcd(g, w);
  if (g > 1)
    for (long long& w : weights) w /= g;
  return weights;
}

std::string emit_query(const RelationSpec& rel, double bound_seconds,
                       double scale) {
  std::string bound = format_model_number(bound_seconds * scale);
  std::string obs = rel.name + "_" + relation_kind_observer(rel.kind);
  std::string p = format_probability(rel.threshold);
  std::size_t n = rel.clocks.size();
  if (n == 2)
    return "Pr[<=" + bound + "]([] not " + obs + ".fail) >= " + p;
  if (rel.kind == RelationKind::Exclusion) {
    std::string nn = std::to_string(n);
    return "Pr[<=" + bound + "]([] forall (i:int[1," + nn +
           "]) forall (j:int[1," + nn + "]) (i < j imply not " + obs +
           "(i,j).fail)) >= " + p;
  }
  return "Pr[<=" + bound + "]([] forall (i:int[1," + std::to_string(n - 1) +
         "]) not " + obs + "(i).fail) >= " + p;
}

namespace {

// guard/update rendering for resolved value expressions
struct VRender {
  std::string text;
  int prec = 8;
};

std::string vwrap(const VRender& r, int need) {
  return r.prec >= need ? r.text : "(" + r.text + ")";
}

VRender render_vexpr(const VExpr& e, const std::vector<VarDecl>& vars) {
  auto bin = [&](const char* sym, int prec) {
    VRender l = render_vexpr(e.kids[0], vars);
    VRender r = render_vexpr(e.kids[1], vars);
    return VRender{vwrap(l, prec) + " " + sym + " " + vwrap(r, prec + 1), prec};
  };
  switch (e.op) {
    case VOp::Const:
      if (e.lit.kind == Value::Kind::Bool) return {e.lit.b ? "true" : "false", 8};
      return {format_model_number(e.lit.num), 8};
    case VOp::Var:
      return {vars.at(e.var).name, 8};
    case VOp::Or: return bin("||", 1);
    case VOp::And: return bin("&&", 2);
    case VOp::Not:
      return {"!" + vwrap(render_vexpr(e.kids[0], vars), 8), 3};
    case VOp::Eq: return bin("==", 4);
    case VOp::Ne: return bin("!=", 4);
    case VOp::Lt: return bin("<", 4);
    case VOp::Le: return bin("<=", 4);
    case VOp::Gt: return bin(">", 4);
    case VOp::Ge: return bin(">=", 4);
    case VOp::Add: return bin("+", 5);
    case VOp::Sub: return bin("-", 5);
    case VOp::Mul: return bin("*", 6);
    case VOp::Div: return bin("/", 6);
    case VOp::Neg:
      return {"-" + vwrap(render_vexpr(e.kids[0], vars), 8), 7};
    case VOp::Min:
      return {"fmin(" + render_vexpr(e.kids[0], vars).text + ", " +
                  render_vexpr(e.kids[1], vars).text + ")",
              8};
    case VOp::Max:
      return {"fmax(" + render_vexpr(e.kids[0], vars).text + ", " +
                  render_vexpr(e.kids[1], vars).text + ")",
              8};
    case VOp::Abs:
      return {"fabs(" + render_vexpr(e.kids[0], vars).text + ")", 8};
  }
  return {"?", 8};
}

class Exporter {
 public:
  Exporter(const PcbsSpec& spec, const std::vector<RelationSpec>& rels,
           const ExportOptions& opts)
      : spec_(spec), rels_(rels), opts_(opts) {}

  NtaModel run() {
    assign_channels();
    collect_history_needs();
    build_globals();
    build_stimuli();
    build_dense();
    build_exprs();
    build_actions();
    build_history();
    build_observers();
    finish_system();
    for (const RelationSpec& rel : rels_) {
      double bound = rel.has_bound() ? rel.bound : opts_.default_bound;
      model_.queries.push_back(emit_query(rel, bound, opts_.scale));
    }
    return std::move(model_);
  }

 private:
  std::string fresh_id() { return "id" + std::to_string(next_id_++); }

  bool is_builtin_pseudo(ClockIdx c) const {
    return (spec_.always_clock && c == *spec_.always_clock) ||
           (spec_.never_clock && c == *spec_.never_clock);
  }

  void require_channel(ClockIdx c, const std::string& where) const {
    if (is_builtin_pseudo(c))
      throw ExportError("'" + spec_.clocks.name(c) +
                        "' has no synchronization channel; it cannot be used "
                        "in " + where);
  }

  std::string chan(ClockIdx c) const {
    return "clk[" + spec_.clocks.name(c) + "]";
  }

  void assign_channels() {
    int index = 0;
    for (ClockIdx c = 0; c < spec_.clocks.size(); ++c) {
      if (spec_.clocks.is_dense(c) || is_builtin_pseudo(c)) continue;
      channel_index_[c] = index++;
    }
    n_channels_ = index;
  }

  void collect_history_needs() {
    for (const RelationSpec& rel : rels_)
      if (rel.kind == RelationKind::Precedence ||
          rel.kind == RelationKind::Causality)
        for (ClockIdx c : rel.clocks) history_clocks_.insert(c);
  }

  void declare_ident(const std::string& name) {
    if (!model_.declared_idents.insert(name).second)
      throw ExportError("name '" + name +
                        "' is used twice in the exported model");
  }

  void build_globals() {
    std::ostringstream g;
    g << "// clocks as broadcast channels\n";
    g << "broadcast chan clk[" << n_channels_ << "];\n";
    model_.declared_channels.insert("clk");
    declare_ident("clk");
    for (ClockIdx c = 0; c < spec_.clocks.size(); ++c) {
      auto it = channel_index_.find(c);
      if (it == channel_index_.end()) continue;
      g << "const int " << spec_.clocks.name(c) << " = " << it->second
        << ";\n";
      declare_ident(spec_.clocks.name(c));
    }
    if (!history_clocks_.empty()) {
      g << "int h[" << n_channels_ << "];\n";
      declare_ident("h");
    }
    if (spec_.ideal || !spec_.dense_instances.empty())
      g << "// dense clocks\n";
    for (const DenseInstance& d : spec_.dense_instances) {
      g << "clock " << spec_.clocks.name(d.clock) << ";\n";
      declare_ident(spec_.clocks.name(d.clock));
    }
    if (!spec_.vars.empty()) g << "// state variables\n";
    for (const VarDecl& v : spec_.vars) {
      declare_ident(v.name);
      switch (v.domain) {
        case VarDomain::Int:
          g << "int " << v.name << " = " << value_to_string(v.initial)
            << ";\n";
          break;
        case VarDomain::Real:
          g << "double " << v.name << " = " << format_double(v.initial.num)
            << ";\n";
          break;
        case VarDomain::Bool:
          g << "bool " << v.name << " = " << (v.initial.b ? "true" : "false")
            << ";\n";
          break;
      }
    }
    for (const ExprDecl& e : spec_.exprs) {
      if (e.kind != ExprKind::DelayFor && e.kind != ExprKind::IntervalDelayFor)
        continue;
      std::string base = spec_.clocks.name(e.result);
      g << "broadcast chan go_" << base << "[" << opts_.pool_size << "];\n";
      g << "bool busy_" << base << "[" << opts_.pool_size << "];\n";
      model_.declared_channels.insert("go_" + base);
      declare_ident("go_" + base);
      declare_ident("busy_" + base);
    }
    model_.global_declaration = g.str();
  }

  Template& new_template(const std::string& name, const std::string& parameter,
                         const std::string& declaration) {
    model_.templates.push_back(Template{name, parameter, declaration, {}, {}, "", {}});
    return model_.templates.back();
  }

  std::string add_location(Template& t, const std::string& name,
                           const std::string& invariant = "",
                           bool committed = false) {
    Location loc;
    loc.id = fresh_id();
    loc.name = name;
    loc.committed = committed;
    loc.x = static_cast<int>(t.locations.size()) * 200;
    if (!invariant.empty()) loc.labels.push_back(Label{"invariant", invariant});
    t.locations.push_back(loc);
    return t.locations.back().id;
  }

  void add_transition(Template& t, const std::string& from,
                      const std::string& to, const std::string& select,
                      const std::string& guard, const std::string& sync,
                      const std::string& update,
                      const std::string& probability = "") {
    Transition tr;
    tr.source = from;
    tr.target = to;
    if (!select.empty()) tr.labels.push_back(Label{"select", select});
    if (!guard.empty()) tr.labels.push_back(Label{"guard", guard});
    if (!sync.empty()) tr.labels.push_back(Label{"synchronisation", sync});
    if (!update.empty()) tr.labels.push_back(Label{"assignment", update});
    if (!probability.empty())
      tr.labels.push_back(Label{"probability", probability});
    t.transitions.push_back(std::move(tr));
  }

  void use_template(const std::string& name) {
    model_.system_processes.push_back(name);
  }

  // --- stimuli ------------------------------------------------------------

  void build_stimuli() {
    for (const StimulusDecl& st : spec_.stimuli) {
      if (st.kind == StimulusKind::Silent) continue;
      std::string cname = spec_.clocks.name(st.clock);
      std::string name = "Stim_" + cname;
      switch (st.kind) {
        case StimulusKind::Periodic: {
          double period = st.period * opts_.scale;
          double jitter = st.jitter * opts_.scale;
          Template& t = new_template(name, "", "clock t;\nint k = 1;");
          std::string hi = jitter > 0.0
                               ? "t <= k*" + format_model_number(period) +
                                     " + " + format_model_number(jitter)
                               : "t <= k*" + format_model_number(period);
          std::string lo = jitter > 0.0
                               ? "t >= k*" + format_model_number(period) +
                                     " - " + format_model_number(jitter)
                               : "t >= k*" + format_model_number(period);
          std::string w = add_location(t, "wait", hi);
          t.init_ref = w;
          add_transition(t, w, w, "", lo, chan(st.clock) + "!",
                         "k = k + 1");
          break;
        }
        case StimulusKind::UniformInterarrival: {
          Template& t = new_template(name, "", "clock x;");
          std::string w = add_location(
              t, "wait", "x <= " + format_model_number(st.hi * opts_.scale));
          t.init_ref = w;
          add_transition(t, w, w, "",
                         "x >= " + format_model_number(st.lo * opts_.scale),
                         chan(st.clock) + "!", "x = 0");
          break;
        }
        case StimulusKind::Scripted: {
          std::size_t n = st.times.size();
          if (n == 0) continue;
          std::ostringstream decl;
          decl << "clock t;\nint k = 0;\nconst double times[" << n << "] = {";
          for (std::size_t i = 0; i < n; ++i) {
            if (i) decl << ", ";
            decl << format_double(st.times[i] * opts_.scale);
          }
          decl << "};";
          Template& t = new_template(name, "", decl.str());
          std::string w = add_location(t, "wait", "t <= times[k]");
          std::string done = add_location(t, "done");
          t.init_ref = w;
          if (n > 1)
            add_transition(t, w, w, "",
                           "t >= times[k] && k < " + std::to_string(n - 1),
                           chan(st.clock) + "!", "k = k + 1");
          add_transition(t, w, done, "",
                         "t >= times[k] && k == " + std::to_string(n - 1),
                         chan(st.clock) + "!", "");
          break;
        }
        case StimulusKind::Silent:
          break;
      }
      use_template(name);
    }
  }

  // --- dense clock types ---------------------------------------------------

  void build_dense() {
    for (const DenseInstance& d : spec_.dense_instances) {
      const DenseClockTypeDecl& ty = spec_.types.at(d.type);
      std::string cname = spec_.clocks.name(d.clock);
      std::string name = "DT_" + cname;
      Template& t = new_template(name, "", "");
      double rate = spec_.effective_rate(d.clock) / opts_.scale;
      std::string l0 = add_location(
          t, "run", cname + "' == " + format_model_number(rate));
      t.init_ref = l0;
      for (const auto& [trig, amount] : ty.offsets) {
        require_channel(trig, "dense clock offsets");
        add_transition(t, l0, l0, "", "", chan(trig) + "?",
                       cname + " = " + cname + " + " +
                           format_model_number(amount));
      }
      for (ClockIdx trig : ty.resets) {
        require_channel(trig, "dense clock resets");
        add_transition(t, l0, l0, "", "", chan(trig) + "?",
                       cname + " = 0");
      }
      use_template(name);
    }
  }

  // --- expressions ----------------------------------------------------------

  bool dense_has_jumps(ClockIdx c) const {
    for (const DenseInstance& d : spec_.dense_instances)
      if (d.clock == c) {
        const DenseClockTypeDecl& ty = spec_.types.at(d.type);
        return !ty.offsets.empty() || !ty.resets.empty();
      }
    return false;
  }

  void build_exprs() {
    for (const ExprDecl& e : spec_.exprs) {
      std::string rname = spec_.clocks.name(e.result);
      switch (e.kind) {
        case ExprKind::DiscretizedBy: build_discretize(e, rname); break;
        case ExprKind::FilterBy: build_filter(e, rname); break;
        case ExprKind::PeriodicOn: build_periodic(e, rname); break;
        case ExprKind::Ite: build_ite(e, rname); break;
        case ExprKind::Infimum:
        case ExprKind::Supremum: build_infsup(e, rname); break;
        case ExprKind::DelayFor:
        case ExprKind::IntervalDelayFor: build_delay(e, rname); break;
      }
    }
  }

  void build_discretize(const ExprDecl& e, const std::string& rname) {
    ClockIdx src = e.operands[0];
    if (dense_has_jumps(src))
      throw ExportError(
          "discretize over a dense clock with offsets/resets is not "
          "exportable; the simulator handles it natively");
    double rate = spec_.effective_rate(src);  // per second
    if (rate <= 0.0)
      throw ExportError("discretize over a rate-0 dense clock never ticks");
    double period_model = e.step / rate * opts_.scale;
    std::string name = "Tick_" + rname;
    Template& t = new_template(name, "", "clock x;");
    std::string w =
        add_location(t, "wait", "x <= " + format_model_number(period_model));
    t.init_ref = w;
    add_transition(t, w, w, "",
                   "x >= " + format_model_number(period_model),
                   chan(e.result) + "!",
                   "x = x - " + format_model_number(period_model));
    use_template(name);
  }

  void build_filter(const ExprDecl& e, const std::string& rname) {
    require_channel(e.operands[0], "filter bases");
    std::string name = "Filter_" + rname;
    std::ostringstream decl;
    decl << "int n = 0;\n";
    const FilterWord& w = e.word;
    if (!w.prefix.empty()) {
      decl << "const bool pref[" << w.prefix.size() << "] = {";
      for (std::size_t i = 0; i < w.prefix.size(); ++i)
        decl << (i ? ", " : "") << (w.prefix[i] ? "true" : "false");
      decl << "};\n";
    }
    decl << "const bool per[" << w.period.size() << "] = {";
    for (std::size_t i = 0; i < w.period.size(); ++i)
      decl << (i ? ", " : "") << (w.period[i] ? "true" : "false");
    decl << "};";
    std::string bit;
    if (w.prefix.empty()) {
      bit = "per[n % " + std::to_string(w.period.size()) + "]";
    } else {
      bit = "(n < " + std::to_string(w.prefix.size()) + " ? pref[n] : per[(n - " +
            std::to_string(w.prefix.size()) + ") % " +
            std::to_string(w.period.size()) + "])";
    }
    Template& t = new_template(name, "", decl.str());
    std::string idle = add_location(t, "idle");
    std::string emit = add_location(t, "emit", "", true);
    t.init_ref = idle;
    add_transition(t, idle, emit, "", bit, chan(e.operands[0]) + "?",
                   "n = n + 1");
    add_transition(t, idle, idle, "", "!" + bit,
                   chan(e.operands[0]) + "?", "n = n + 1");
    add_transition(t, emit, idle, "", "", chan(e.result) + "!", "");
    use_template(name);
  }

  void build_periodic(const ExprDecl& e, const std::string& rname) {
    require_channel(e.operands[0], "periodic bases");
    std::string name = "Periodic_" + rname;
    Template& t = new_template(name, "", "int n = 0;");
    std::string idle = add_location(t, "idle");
    std::string emit = add_location(t, "emit", "", true);
    t.init_ref = idle;
    std::string n1 = std::to_string(e.period_n - 1);
    if (e.period_n > 1)
      add_transition(t, idle, idle, "", "n < " + n1,
                     chan(e.operands[0]) + "?", "n = n + 1");
    add_transition(t, idle, emit, "", "n == " + n1,
                   chan(e.operands[0]) + "?", "n = 0");
    add_transition(t, emit, idle, "", "", chan(e.result) + "!", "");
    use_template(name);
  }

  void build_ite(const ExprDecl& e, const std::string& rname) {
    std::string name = "Ite_" + rname;
    Template& t = new_template(name, "", "clock z;");
    std::string idle = add_location(t, "idle");
    std::string emit = add_location(t, "emit", "", true);
    t.init_ref = idle;
    std::string pred = render_vexpr(e.predicate, spec_.vars).text;
    auto listeners = [&](ClockIdx branch,
                         bool positive) -> std::vector<ClockIdx> {
      if (spec_.never_clock && branch == *spec_.never_clock) return {};
      if (spec_.always_clock && branch == *spec_.always_clock) {
        std::vector<ClockIdx> all;
        for (const auto& [c, idx] : channel_index_) {
          (void)idx;
          if (c != e.result) all.push_back(c);
        }
        return all;
      }
      (void)positive;
      return {branch};
    };
    auto add_edges = [&](ClockIdx branch, const std::string& cond) {
      for (ClockIdx c : listeners(branch, true))
        add_transition(t, idle, emit, "", "(" + cond + ") && z > 0",
                       chan(c) + "?", "");
    };
    add_edges(e.operands[0], pred);
    add_edges(e.operands[1], "!(" + pred + ")");
    add_transition(t, emit, idle, "", "", chan(e.result) + "!", "z = 0");
    use_template(name);
  }

  void build_infsup(const ExprDecl& e, const std::string& rname) {
    bool inf = e.kind == ExprKind::Infimum;
    std::string name = (inf ? "Inf_" : "Sup_") + rname;
    std::size_t nops = e.operands.size();
    Template& t = new_template(
        name, "",
        "int hh[" + std::to_string(nops) + "];\nint m = 0;");
    std::string idle = add_location(t, "idle");
    std::string emit = add_location(t, "emit", "", true);
    t.init_ref = idle;
    for (std::size_t i = 0; i < nops; ++i) {
      require_channel(e.operands[i], "inf/sup operands");
      std::string hi = "hh[" + std::to_string(i) + "]";
      std::string grow, stay, bump_grow;
      if (inf) {
        grow = hi + " + 1 > m";
        stay = hi + " + 1 <= m";
        bump_grow = hi + " = " + hi + " + 1, m = " + hi;
      } else {
        std::string all_above = "forall (q : int[0," + std::to_string(nops - 1) +
                                "]) (q == " + std::to_string(i) +
                                " || hh[q] > m)";
        grow = hi + " == m && " + all_above;
        stay = "!(" + grow + ")";
        bump_grow = hi + " = " + hi + " + 1, m = m + 1";
      }
      add_transition(t, idle, emit, "", grow,
                     chan(e.operands[i]) + "?", bump_grow);
      add_transition(t, idle, idle, "", stay,
                     chan(e.operands[i]) + "?", hi + " = " + hi + " + 1");
    }
    add_transition(t, emit, idle, "", "", chan(e.result) + "!", "");
    use_template(name);
  }

  void build_delay(const ExprDecl& e, const std::string& rname) {
    require_channel(e.operands[0], "delay references");
    bool dense_base = spec_.clocks.is_dense(e.operands[1]);
    std::string pool_top = std::to_string(opts_.pool_size - 1);
    std::string go = "go_" + rname;
    std::string busy = "busy_" + rname;

    // Detect: grabs a free pool slot per reference tick (spawn emulation)
    {
      std::string name = "Detect_" + rname;
      Template& t = new_template(name, "", "int slot;");
      std::string idle = add_location(t, "idle");
      std::string grab = add_location(t, "spawn", "", true);
      std::string overflow = add_location(t, "overflow");
      t.init_ref = idle;
      add_transition(t, idle, grab, "s : int[0," + pool_top + "]",
                     "!" + busy + "[s]", chan(e.operands[0]) + "?",
                     "slot = s, " + busy + "[s] = true");
      add_transition(t, grab, idle, "", "", go + "[slot]!", "");
      add_transition(t, idle, overflow, "",
                     "forall (s : int[0," + pool_top + "]) " + busy + "[s]",
                     chan(e.operands[0]) + "?", "");
      use_template(name);
    }

    std::string name = "Delay_" + rname;
    std::string param = "const int[0," + pool_top + "] s";
    if (dense_base) {
      double rate = spec_.effective_rate(e.operands[1]) / opts_.scale;
      // measures base units: local clock with the base rate
      Template& t = new_template(name, param, "clock x;");
      std::string rate_inv = "x' == " + format_model_number(rate);
      std::string idle = add_location(t, "idle");
      if (e.upper == 0.0) {
        std::string emit = add_location(t, "emit", "", true);
        t.init_ref = idle;
        add_transition(t, idle, emit, "", "", go + "[s]?", "");
        add_transition(t, emit, idle, "", "", chan(e.result) + "!",
                       busy + "[s] = false");
      } else {
        std::string run = add_location(
            t, "delaying",
            rate_inv + " && x <= " + format_model_number(e.upper));
        t.init_ref = idle;
        add_transition(t, idle, run, "", "", go + "[s]?", "x = 0");
        add_transition(t, run, idle, "",
                       "x >= " + format_model_number(e.lower),
                       chan(e.result) + "!", busy + "[s] = false");
      }
      use_template(name);
      return;
    }

    require_channel(e.operands[1], "delay bases");
    // counts base ticks strictly after the spawn
    Template& t = new_template(name, param, "int n;\nint target;");
    std::string idle = add_location(t, "idle");
    std::string counting = add_location(t, "counting");
    std::string emit = add_location(t, "emit", "", true);
    t.init_ref = idle;
    long long lo = static_cast<long long>(e.lower);
    long long hi = static_cast<long long>(e.upper);
    std::string select =
        lo == hi ? "" : "k : int[" + std::to_string(lo) + "," +
                            std::to_string(hi) + "]";
    std::string pick = lo == hi ? std::to_string(lo) : "k";
    if (lo == 0)
      add_transition(t, idle, emit, select,
                     select.empty() ? "" : "k == 0", go + "[s]?", "");
    if (hi > 0)
      add_transition(t, idle, counting, select,
                     lo == 0 && !select.empty() ? "k > 0" : "",
                     go + "[s]?", "n = 0, target = " + pick);
    add_transition(t, counting, counting, "", "n < target - 1",
                   chan(e.operands[1]) + "?", "n = n + 1");
    add_transition(t, counting, emit, "", "n == target - 1",
                   chan(e.operands[1]) + "?", "");
    add_transition(t, emit, idle, "", "", chan(e.result) + "!",
                   busy + "[s] = false");
    use_template(name);
  }

  // --- actions --------------------------------------------------------------

  std::string assigns_text(const std::vector<Assign>& body) {
    std::string out;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (i) out += ", ";
      out += spec_.vars.at(body[i].var).name + " = " +
             render_vexpr(body[i].rhs, spec_.vars).text;
    }
    return out;
  }

  void build_actions() {
    for (const ActionDecl& a : spec_.actions) {
      require_channel(a.trigger, "action triggers");
      std::string name = "Action_" + spec_.clocks.name(a.trigger);
      Template& t = new_template(name, "", "");
      std::string idle = add_location(t, "idle");
      t.init_ref = idle;
      add_transition(t, idle, idle, "", "", chan(a.trigger) + "?",
                     assigns_text(a.body));
      use_template(name);
    }
    for (const ProbActionDecl& pa : spec_.pactions) {
      require_channel(pa.trigger, "action triggers");
      std::string name = "PAction_" + spec_.clocks.name(pa.trigger);
      Template& t = new_template(name, "", "");
      std::string idle = add_location(t, "idle");
      t.init_ref = idle;
      Branchpoint bp;
      bp.id = fresh_id();
      bp.x = 200;
      t.branchpoints.push_back(bp);
      add_transition(t, idle, bp.id, "", "", chan(pa.trigger) + "?", "");
      std::vector<double> probs;
      for (const ProbBranch& br : pa.branches) probs.push_back(br.p);
      std::vector<long long> weights = probability_weights(probs);
      for (std::size_t i = 0; i < pa.branches.size(); ++i)
        add_transition(t, bp.id, idle, "", "", "",
                       assigns_text(pa.branches[i].body),
                       std::to_string(weights[i]));
      use_template(name);
    }
  }

  // --- histories ------------------------------------------------------------

  void build_history() {
    if (history_clocks_.empty()) return;
    Template& t = new_template("History", "const int c", "");
    std::string idle = add_location(t, "count");
    t.init_ref = idle;
    add_transition(t, idle, idle, "", "", "clk[c]?",
                   "h[c] = h[c] + 1");
    std::ostringstream sys;
    for (ClockIdx c : history_clocks_) {
      require_channel(c, "histories");
      std::string inst = "H_" + spec_.clocks.name(c);
      sys << inst << " = History(" << spec_.clocks.name(c) << ");\n";
      history_instances_.push_back(inst);
    }
    model_.system_declaration += sys.str();
  }

  // --- observers ------------------------------------------------------------

  struct PairContext {
    std::string a, b;    // channel expressions (without ? / !)
    std::string ha, hb;  // history expressions
    std::string extra;   // guard conjunct, e.g. "i < j"
  };

  std::string guard_with(const PairContext& ctx, const std::string& cond) {
    if (ctx.extra.empty()) return cond;
    if (cond.empty()) return ctx.extra;
    return ctx.extra + " && (" + cond + ")";
  }

  void observer_body(Template& t, RelationKind kind, const PairContext& ctx) {
    std::string idle = add_location(t, "idle");
    t.init_ref = idle;
    switch (kind) {
      case RelationKind::Coincidence: {
        std::string p1 = add_location(t, "sawFirst");
        std::string p2 = add_location(t, "sawSecond");
        std::string success = add_location(t, "success", "", true);
        std::string fail = add_location(t, "fail");
        add_transition(t, idle, p1, "", guard_with(ctx, ""),
                       ctx.a + "?", "t = 0");
        add_transition(t, idle, p2, "", guard_with(ctx, ""),
                       ctx.b + "?", "t = 0");
        add_transition(t, p1, success, "", guard_with(ctx, "t == 0"),
                       ctx.b + "?", "");
        add_transition(t, p1, fail, "", guard_with(ctx, "t > 0"),
                       ctx.b + "?", "");
        add_transition(t, p1, fail, "", guard_with(ctx, "t > 0"),
                       ctx.a + "?", "");
        add_transition(t, p2, success, "", guard_with(ctx, "t == 0"),
                       ctx.a + "?", "");
        add_transition(t, p2, fail, "", guard_with(ctx, "t > 0"),
                       ctx.a + "?", "");
        add_transition(t, p2, fail, "", guard_with(ctx, "t > 0"),
                       ctx.b + "?", "");
        add_transition(t, success, idle, "", "", "", "");
        break;
      }
      case RelationKind::Exclusion: {
        std::string l1 = add_location(t, "lastFirst");
        std::string l2 = add_location(t, "lastSecond");
        std::string fail = add_location(t, "fail");
        add_transition(t, idle, l1, "", guard_with(ctx, ""), ctx.a + "?",
                       "t = 0");
        add_transition(t, idle, l2, "", guard_with(ctx, ""), ctx.b + "?",
                       "t = 0");
        add_transition(t, l1, l1, "", guard_with(ctx, ""), ctx.a + "?",
                       "t = 0");
        add_transition(t, l1, fail, "", guard_with(ctx, "t == 0"),
                       ctx.b + "?", "");
        add_transition(t, l1, l2, "", guard_with(ctx, "t > 0"),
                       ctx.b + "?", "t = 0");
        add_transition(t, l2, l2, "", guard_with(ctx, ""), ctx.b + "?",
                       "t = 0");
        add_transition(t, l2, fail, "", guard_with(ctx, "t == 0"),
                       ctx.a + "?", "");
        add_transition(t, l2, l1, "", guard_with(ctx, "t > 0"),
                       ctx.a + "?", "t = 0");
        break;
      }
      case RelationKind::Subclock: {
        std::string pending = add_location(t, "pending");
        std::string success = add_location(t, "success", "", true);
        std::string fail = add_location(t, "fail");
        add_transition(t, idle, pending, "", guard_with(ctx, ""),
                       ctx.a + "?", "t = 0");
        add_transition(t, idle, idle, "", guard_with(ctx, ""),
                       ctx.b + "?", "");
        add_transition(t, pending, success, "",
                       guard_with(ctx, "t == 0"), ctx.b + "?", "");
        add_transition(t, pending, fail, "", guard_with(ctx, "t > 0"),
                       ctx.b + "?", "");
        add_transition(t, pending, fail, "", guard_with(ctx, "t > 0"),
                       ctx.a + "?", "");
        add_transition(t, success, idle, "", "", "", "");
        break;
      }
      case RelationKind::Causality: {
        std::string pending = add_location(t, "pending");
        std::string success = add_location(t, "success", "", true);
        std::string fail = add_location(t, "fail");
        add_transition(t, idle, idle, "", guard_with(ctx, ""),
                       ctx.a + "?", "");
        add_transition(t, idle, idle, "",
                       guard_with(ctx, ctx.ha + " > " + ctx.hb), ctx.b + "?",
                       "");
        add_transition(t, idle, pending, "",
                       guard_with(ctx, ctx.ha + " == " + ctx.hb), ctx.b + "?",
                       "t = 0");
        add_transition(t, pending, success, "",
                       guard_with(ctx, "t == 0"), ctx.a + "?", "");
        add_transition(t, pending, fail, "", guard_with(ctx, "t > 0"),
                       ctx.a + "?", "");
        add_transition(t, pending, fail, "", guard_with(ctx, ""),
                       ctx.b + "?", "");
        add_transition(t, success, idle, "", "", "", "");
        break;
      }
      case RelationKind::Precedence: {
        std::string fail = add_location(t, "fail");
        add_transition(t, idle, idle, "", guard_with(ctx, ""),
                       ctx.a + "?", "t = 0");
        add_transition(
            t, idle, fail, "",
            guard_with(ctx, ctx.ha + " == " + ctx.hb + " || (" + ctx.ha +
                                " == " + ctx.hb + " + 1 && t == 0)"),
            ctx.b + "?", "");
        add_transition(
            t, idle, idle, "",
            guard_with(ctx, ctx.ha + " > " + ctx.hb + " + 1 || (" + ctx.ha +
                                " == " + ctx.hb + " + 1 && t > 0)"),
            ctx.b + "?", "");
        break;
      }
    }
  }

  void build_observers() {
    for (const RelationSpec& rel : rels_) {
      for (ClockIdx c : rel.clocks)
        require_channel(c, "relations (wrap always/never in an ite clock)");
      std::string name = rel.name + "_" + relation_kind_observer(rel.kind);
      model_.observer_templates.insert(name);
      std::size_t n = rel.clocks.size();
      std::ostringstream cmap;
      cmap << "const int cmap[int[1," << n << "]] = {";
      for (std::size_t i = 0; i < n; ++i)
        cmap << (i ? ", " : "") << spec_.clocks.name(rel.clocks[i]);
      cmap << "};\n";
      if (n == 2) {
        PairContext ctx;
        ctx.a = chan(rel.clocks[0]);
        ctx.b = chan(rel.clocks[1]);
        ctx.ha = "h[" + spec_.clocks.name(rel.clocks[0]) + "]";
        ctx.hb = "h[" + spec_.clocks.name(rel.clocks[1]) + "]";
        Template& t = new_template(name, "", "clock t;");
        observer_body(t, rel.kind, ctx);
        model_.observer_instances += 1;
      } else if (rel.kind == RelationKind::Exclusion) {
        PairContext ctx;
        ctx.a = "clk[cmap[i]]";
        ctx.b = "clk[cmap[j]]";
        ctx.extra = "i < j";
        std::string nn = std::to_string(n);
        Template& t =
            new_template(name, "const int[1," + nn + "] i, const int[1," +
                                   nn + "] j",
                         cmap.str() + "clock t;");
        observer_body(t, rel.kind, ctx);
        model_.observer_instances += n * (n - 1) / 2;
      } else {
        PairContext ctx;
        ctx.a = "clk[cmap[i]]";
        ctx.b = "clk[cmap[i+1]]";
        ctx.ha = "h[cmap[i]]";
        ctx.hb = "h[cmap[i+1]]";
        Template& t = new_template(
            name, "const int[1," + std::to_string(n - 1) + "] i",
            cmap.str() + "clock t;");
        observer_body(t, rel.kind, ctx);
        model_.observer_instances += n - 1;
      }
      use_template(name);
    }
  }

  void finish_system() {
    // histories update after expression templates: keep H_* between the
    // machinery and the observers in the process order
    std::vector<std::string> processes;
    for (const std::string& p : model_.system_processes) {
      if (model_.observer_templates.count(p)) continue;
      processes.push_back(p);
    }
    for (const std::string& h : history_instances_) processes.push_back(h);
    for (const std::string& p : model_.system_processes)
      if (model_.observer_templates.count(p)) processes.push_back(p);
    model_.system_processes = std::move(processes);
  }

  const PcbsSpec& spec_;
  const std::vector<RelationSpec>& rels_;
  ExportOptions opts_;
  NtaModel model_;
  std::map<ClockIdx, int> channel_index_;
  int n_channels_ = 0;
  std::set<ClockIdx> history_clocks_;
  std::vector<std::string> history_instances_;
  int next_id_ = 0;
};

}  // namespace

NtaModel export_model(const PcbsSpec& spec,
                      const std::vector<RelationSpec>& relations,
                      const ExportOptions& opts) {
  if (!spec.finalized)
    throw ExportError("export_model: spec not finalized");
  for (const RelationSpec& rel : relations)
    validate_relation(rel, spec.clocks.size());
  return Exporter(spec, relations, opts).run();
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c; break;
    }
  }
  return out;
}

}  // namespace

std::string write_xml(const NtaModel& model) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";
  out << "<!DOCTYPE nta PUBLIC '-//Uppaal Team//DTD Flat System 1.1//EN' "
         "'http://www.it.uu.se/research/group/darts/uppaal/flat-1_1.dtd'>\n";
  out << "<nta>\n";
  out << "  <declaration>" << xml_escape(model.global_declaration)
      << "</declaration>\n";
  for (const Template& t : model.templates) {
    out << "  <template>\n";
    out << "    <name>" << xml_escape(t.name) << "</name>\n";
    if (!t.parameter.empty())
      out << "    <parameter>" << xml_escape(t.parameter) << "</parameter>\n";
    if (!t.declaration.empty())
      out << "    <declaration>" << xml_escape(t.declaration)
          << "</declaration>\n";
    for (const Location& loc : t.locations) {
      out << "    <location id=\"" << loc.id << "\" x=\"" << loc.x << "\" y=\""
          << loc.y << "\">";
      if (!loc.name.empty()) out << "<name>" << xml_escape(loc.name) << "</name>";
      for (const Label& l : loc.labels)
        out << "<label kind=\"" << l.kind << "\">" << xml_escape(l.text)
            << "</label>";
      if (loc.committed) out << "<committed/>";
      out << "</location>\n";
    }
    for (const Branchpoint& bp : t.branchpoints)
      out << "    <branchpoint id=\"" << bp.id << "\" x=\"" << bp.x
          << "\" y=\"" << bp.y << "\"/>\n";
    out << "    <init ref=\"" << t.init_ref << "\"/>\n";
    for (const Transition& tr : t.transitions) {
      out << "    <transition><source ref=\"" << tr.source
          << "\"/><target ref=\"" << tr.target << "\"/>";
      for (const Label& l : tr.labels)
        out << "<label kind=\"" << l.kind << "\">" << xml_escape(l.text)
            << "</label>";
      out << "</transition>\n";
    }
    out << "  </template>\n";
  }
  out << "  <system>" << xml_escape(model.system_declaration);
  out << "system ";
  for (std::size_t i = 0; i < model.system_processes.size(); ++i)
    out << (i ? ", " : "") << model.system_processes[i];
  out << ";</system>\n";
  out << "  <queries>\n";
  for (const std::string& q : model.queries) {
    out << "    <query><formula>" << xml_escape(q)
        << "</formula><comment></comment></query>\n";
  }
  out << "  </queries>\n";
  out << "</nta>\n";
  return out.str();
}

std::string write_queries(const NtaModel& model) {
  std::string out;
  for (const std::string& q : model.queries) {
    out += q;
    out += '\n';
  }
  return out;
}

CheckReport check_model(const NtaModel& model) {
  CheckReport report;
  report.observer_instances = model.observer_instances;
  auto problem = [&](const std::string& p) {
    report.ok = false;
    report.problems.push_back(p);
  };

  std::set<std::string> ids;
  std::set<std::string> template_names;
  for (const Template& t : model.templates) {
    if (!template_names.insert(t.name).second)
      problem("duplicate template name: " + t.name);
    std::set<std::string> local_ids;
    for (const Location& loc : t.locations) {
      if (!ids.insert(loc.id).second)
        problem("duplicate location id: " + loc.id);
      local_ids.insert(loc.id);
    }
    for (const Branchpoint& bp : t.branchpoints) {
      if (!ids.insert(bp.id).second)
        problem("duplicate branchpoint id: " + bp.id);
      local_ids.insert(bp.id);
    }
    if (!local_ids.count(t.init_ref))
      problem("template " + t.name + ": init ref not a location");
    for (const Transition& tr : t.transitions) {
      if (!local_ids.count(tr.source) || !local_ids.count(tr.target))
        problem("template " + t.name + ": dangling transition endpoint");
      for (const Label& l : tr.labels) {
        if (l.kind != "synchronisation") continue;
        std::string text = l.text;
        if (text.empty()) continue;
        std::size_t cut = text.find_first_of("[!?");
        std::string chan_name = text.substr(0, cut);
        if (!model.declared_channels.count(chan_name))
          problem("sync label '" + text + "' references undeclared channel '" +
                  chan_name + "'");
      }
    }
  }

  std::set<std::string> instantiated;
  for (const std::string& p : model.system_processes) instantiated.insert(p);
  // instantiation lines: H_x = History(x);
  std::istringstream sys(model.system_declaration);
  std::string line;
  while (std::getline(sys, line)) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::size_t paren = line.find('(', eq);
    if (paren == std::string::npos) continue;
    std::string tmpl = line.substr(eq + 1, paren - eq - 1);
    tmpl.erase(0, tmpl.find_first_not_of(" \t"));
    tmpl.erase(tmpl.find_last_not_of(" \t") + 1);
    instantiated.insert(tmpl);
  }
  for (const Template& t : model.templates)
    if (!instantiated.count(t.name))
      problem("template never instantiated: " + t.name);

  for (const std::string& q : model.queries) {
    bool references_observer = false;
    for (const std::string& obs : model.observer_templates)
      if (q.find(obs) != std::string::npos) references_observer = true;
    if (!references_observer)
      problem("query references no exported observer: " + q);
  }
  return report;
}

}  // namespace pccsl::uppaal
