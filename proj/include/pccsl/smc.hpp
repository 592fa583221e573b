#pragma once

#include <cstdint>
#include <functional>

#include "pccsl/core.hpp"

namespace pccsl {

struct SmcConfig {
  double alpha = 0.05;       // type-I error
  double beta = 0.05;        // type-II error
  double delta = 0.01;       // SPRT indifference half-width
  double epsilon = 0.05;     // estimation half-width
  double confidence = 0.95;  // estimation / interval confidence

  void validate() const;
};

enum class Decision { AcceptH0, RejectH0, Inconclusive };

std::string decision_name(Decision d);

/// Wald SPRT for H0: q >= p against H1: q < p with indifference region
/// (p - delta, p + delta). Error bounded by alpha (resp. beta) outside the
/// region. Hits the cap -> Inconclusive.
class SprtTest {
 public:
  SprtTest(double p, const SmcConfig& cfg, std::uint64_t cap = 1'000'000);

  void update(bool satisfied);
  bool done() const { return decision_ != Decision::Inconclusive || samples_ >= cap_; }
  Decision decision() const;
  std::uint64_t samples() const { return samples_; }
  std::uint64_t successes() const { return successes_; }
  double ratio() const;
  double llr() const { return llr_; }

 private:
  double inc_sat_, inc_unsat_;  // per-verdict log-likelihood increments
  double accept_bound_, reject_bound_;
  std::uint64_t cap_;
  double llr_ = 0.0;
  std::uint64_t samples_ = 0, successes_ = 0;
  Decision decision_ = Decision::Inconclusive;
};

struct HypothesisResult {
  Decision decision = Decision::Inconclusive;
  std::uint64_t runs = 0;
  std::uint64_t successes = 0;
  double ratio = 0.0;
};

HypothesisResult hypothesis_test(const std::function<bool()>& source, double p,
                                 const SmcConfig& cfg,
                                 std::uint64_t cap = 1'000'000);

/// Chernoff-Hoeffding sample count: ceil(ln(2/(1-confidence)) / (2 eps^2)).
std::uint64_t chernoff_runs(double epsilon, double confidence);

/// Clopper-Pearson interval for m successes out of k at `confidence`.
std::pair<double, double> clopper_pearson(std::uint64_t m, std::uint64_t k,
                                          double confidence);

struct EstimateResult {
  std::uint64_t runs = 0;
  std::uint64_t successes = 0;
  double point = 0.0;
  double lo = 0.0, hi = 1.0;
};

EstimateResult estimate_probability(const std::function<bool()>& source,
                                    const SmcConfig& cfg);

enum class CompareOutcome { LeftGE, LeftLT, Indifferent };

std::string compare_outcome_name(CompareOutcome o);

struct CompareResult {
  CompareOutcome outcome = CompareOutcome::Indifferent;
  std::uint64_t pairs = 0;
  double diff = 0.0;  // mean of left - right
  bool hit_cap = false;
};

/// Sequential comparison of two Bernoulli sources via a Hoeffding confidence
/// interval on the paired difference; stops when the interval excludes 0 or
/// fits inside (-delta, +delta).
CompareResult compare_probabilities(const std::function<bool()>& left,
                                    const std::function<bool()>& right,
                                    const SmcConfig& cfg,
                                    std::uint64_t cap = 1'000'000);

// numeric support
double regularized_incomplete_beta(double a, double b, double x);
double beta_quantile(double a, double b, double q);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal approximation
  std::uint64_t n = 0;
};

MeanCi mean_ci(const std::vector<double>& samples);

}  // namespace pccsl
