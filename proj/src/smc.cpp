#include "pccsl/smc.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pccsl {

void SmcConfig::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(alpha) || !in_unit(beta) || !in_unit(delta) ||
      !in_unit(epsilon) || !in_unit(confidence))
    throw SpecError("smc config: alpha, beta, delta, epsilon, confidence "
                    "must lie in (0,1)");
}

std::string decision_name(Decision d) {
  switch (d) {
    case Decision::AcceptH0: return "accepted";
    case Decision::RejectH0: return "rejected";
    case Decision::Inconclusive: return "inconclusive";
  }
  return "?";
}

SprtTest::SprtTest(double p, const SmcConfig& cfg, std::uint64_t cap)
    : cap_(cap) {
  cfg.validate();
  if (!(p > 0.0 && p < 1.0))
    throw SpecError("sprt: threshold must lie in (0,1)");
  if (cfg.delta >= std::min(p, 1.0 - p))
    throw SpecError("sprt: delta must be smaller than min(p, 1-p)");
  double p0 = p + cfg.delta;  // H0 representative
  double p1 = p - cfg.delta;  // H1 representative
  inc_sat_ = std::log(p1 / p0);
  inc_unsat_ = std::log((1.0 - p1) / (1.0 - p0));
  reject_bound_ = std::log((1.0 - cfg.beta) / cfg.alpha);
  accept_bound_ = std::log(cfg.beta / (1.0 - cfg.alpha));
}

void SprtTest::update(bool satisfied) {
  if (done()) return;
  ++samples_;
  if (satisfied) {
    ++successes_;
    llr_ += inc_sat_;
  } else {
    llr_ += inc_unsat_;
  }
  if (llr_ >= reject_bound_)
    decision_ = Decision::RejectH0;
  else if (llr_ <= accept_bound_)
    decision_ = Decision::AcceptH0;
}

Decision SprtTest::decision() const { return decision_; }

double SprtTest::ratio() const {
  return samples_ ? static_cast<double>(successes_) /
                        static_cast<double>(samples_)
                  : 0.0;
}

HypothesisResult hypothesis_test(const std::function<bool()>& source, double p,
                                 const SmcConfig& cfg, std::uint64_t cap) {
  SprtTest test(p, cfg, cap);
  while (!test.done()) test.update(source());
  return HypothesisResult{test.decision(), test.samples(), test.successes(),
                          test.ratio()};
}

std::uint64_t chernoff_runs(double epsilon, double confidence) {
  if (!(epsilon > 0.0 && epsilon < 1.0) ||
      !(confidence > 0.0 && confidence < 1.0))
    throw SpecError("chernoff_runs: epsilon and confidence must lie in (0,1)");
  return static_cast<std::uint64_t>(
      std::ceil(std::log(2.0 / (1.0 - confidence)) / (2.0 * epsilon * epsilon)));
}

// regularized incomplete beta via the Lentz continued fraction
namespace {

double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-14;
  constexpr double kTiny = 1.0e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log(1.0 - x) + a * std::log(x)) *
                   betacf(b, a, 1.0 - x) / b;
}

double beta_quantile(double a, double b, double q) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < q)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> clopper_pearson(std::uint64_t m, std::uint64_t k,
                                          double confidence) {
  if (k == 0) throw SpecError("clopper_pearson: k must be >= 1");
  if (m > k) throw SpecError("clopper_pearson: m must be <= k");
  double a2 = (1.0 - confidence) / 2.0;
  double md = static_cast<double>(m), kd = static_cast<double>(k);
  double lo = (m == 0) ? 0.0 : beta_quantile(md, kd - md + 1.0, a2);
  double hi = (m == k) ? 1.0 : beta_quantile(md + 1.0, kd - md, 1.0 - a2);
  return {lo, hi};
}

EstimateResult estimate_probability(const std::function<bool()>& source,
                                    const SmcConfig& cfg) {
  cfg.validate();
  std::uint64_t k = chernoff_runs(cfg.epsilon, cfg.confidence);
  std::uint64_t m = 0;
  for (std::uint64_t i = 0; i < k; ++i) m += source() ? 1 : 0;
  auto [lo, hi] = clopper_pearson(m, k, cfg.confidence);
  return EstimateResult{k, m,
                        static_cast<double>(m) / static_cast<double>(k), lo,
                        hi};
}

std::string compare_outcome_name(CompareOutcome o) {
  switch (o) {
    case CompareOutcome::LeftGE: return "left >= right";
    case CompareOutcome::LeftLT: return "left < right";
    case CompareOutcome::Indifferent: return "indifferent";
  }
  return "?";
}

CompareResult compare_probabilities(const std::function<bool()>& left,
                                    const std::function<bool()>& right,
                                    const SmcConfig& cfg, std::uint64_t cap) {
  cfg.validate();
  double sum = 0.0;
  std::uint64_t n = 0;
  double log_term = std::log(2.0 / cfg.alpha);
  while (n < cap) {
    double l = left() ? 1.0 : 0.0;
    double r = right() ? 1.0 : 0.0;
    sum += l - r;
    ++n;
    if (n < 16) continue;  // settle before testing
    double mean = sum / static_cast<double>(n);
    // Hoeffding: differences live in [-1,1], range 2
    double hw = 2.0 * std::sqrt(log_term / (2.0 * static_cast<double>(n)));
    if (mean - hw > 0.0)
      return CompareResult{CompareOutcome::LeftGE, n, mean, false};
    if (mean + hw < 0.0)
      return CompareResult{CompareOutcome::LeftLT, n, mean, false};
    if (mean - hw > -cfg.delta && mean + hw < cfg.delta)
      return CompareResult{CompareOutcome::Indifferent, n, mean, false};
  }
  return CompareResult{CompareOutcome::Indifferent, n,
                       n ? sum / static_cast<double>(n) : 0.0, true};
}

MeanCi mean_ci(const std::vector<double>& samples) {
  MeanCi out;
  out.n = samples.size();
  if (samples.empty()) return out;
  double sum = 0.0;
  for (double s : samples) sum += s;
  out.mean = sum / static_cast<double>(samples.size());
  if (samples.size() < 2) return out;
  double ss = 0.0;
  for (double s : samples) ss += (s - out.mean) * (s - out.mean);
  double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  out.half_width =
      1.959963984540054 * sd / std::sqrt(static_cast<double>(samples.size()));
  return out;
}

}  // namespace pccsl
