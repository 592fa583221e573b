#pragma once

#include <set>
#include <string>
#include <vector>

#include "pccsl/monitor.hpp"
#include "pccsl/sim.hpp"

namespace pccsl::uppaal {

struct Label {
  std::string kind;  // guard | synchronisation | assignment | invariant |
                     // select | probability
  std::string text;
};

struct Location {
  std::string id;
  std::string name;
  std::vector<Label> labels;  // invariant
  bool committed = false;
  int x = 0, y = 0;
};

struct Branchpoint {
  std::string id;
  int x = 0, y = 0;
};

struct Transition {
  std::string source, target;
  std::vector<Label> labels;
};

struct Template {
  std::string name;
  std::string parameter;    // may be empty
  std::string declaration;  // local declarations
  std::vector<Location> locations;
  std::vector<Branchpoint> branchpoints;
  std::string init_ref;
  std::vector<Transition> transitions;
};

/// Abstract UPPAAL model; element order is deterministic for golden-file
/// stability.
struct NtaModel {
  std::string global_declaration;
  std::vector<Template> templates;
  std::string system_declaration;           // instantiation lines
  std::vector<std::string> system_processes;
  std::vector<std::string> queries;

  // bookkeeping for structural checks
  std::set<std::string> declared_channels;   // channel (array) names
  std::set<std::string> declared_idents;     // global consts/vars/clocks
  std::size_t observer_instances = 0;        // live observer count
  std::set<std::string> observer_templates;
};

struct ExportOptions {
  int pool_size = 64;          // Delay instances per DelayFor expression
  double scale = 1000.0;       // model time units per second (ms)
  double default_bound = 10.0; // seconds, for relations without a bound
};

/// Translates a validated spec plus its relations into an UPPAAL-SMC model
/// with observer automata and one query per relation.
NtaModel export_model(const PcbsSpec& spec,
                      const std::vector<RelationSpec>& relations,
                      const ExportOptions& opts = {});

/// Query string for one relation:
///   binary     Pr[<=B]([] not Name_Kind.fail) >= p
///   chain      Pr[<=B]([] forall (i:int[1,n-1]) not Name_Kind(i).fail) >= p
///   exclusion  Pr[<=B]([] forall (i:int[1,n]) forall (j:int[1,n])
///              (i < j imply not Name_Exclusion(i,j).fail)) >= p
std::string emit_query(const RelationSpec& rel, double bound_seconds,
                       double scale);

std::string write_xml(const NtaModel& model);
std::string write_queries(const NtaModel& model);  // one per line

struct CheckReport {
  bool ok = true;
  std::vector<std::string> problems;
  std::size_t observer_instances = 0;
};

/// Structural validation: unique location ids, channel closure of sync
/// labels, every template instantiated, queries referencing exported
/// observers only.
CheckReport check_model(const NtaModel& model);

std::string format_model_number(double v);  // integral -> integer text
std::string format_probability(double p);   // always keeps a decimal point

/// Integer branch weights for probabilities (smallest common denominator,
/// capped at 1e6). Throws ExportError when not representable.
std::vector<long long> probability_weights(const std::vector<double>& probs);

}  // namespace pccsl::uppaal
