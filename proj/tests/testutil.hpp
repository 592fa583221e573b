#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pccsl/core.hpp"
#include "pccsl/monitor.hpp"

namespace testutil {

// --- statistics ----------------------------------------------------------

/// Two-sided Kolmogorov-Smirnov statistic against a cdf.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

/// Asymptotic critical value at alpha = 0.01.
inline double ks_critical_01(std::size_t n) {
  return 1.6276 / std::sqrt(static_cast<double>(n));
}

inline double chi_square_stat(const std::vector<std::uint64_t>& counts,
                              const std::vector<double>& probs) {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double expected = probs[i] * static_cast<double>(n);
    double diff = static_cast<double>(counts[i]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

/// 99th percentile of chi-square, df = 1..8.
inline double chi2_crit_99(std::size_t df) {
  static const double table[] = {6.634896601, 9.210340372, 11.34486673,
                                 13.2767041,  15.08627247, 16.81189383,
                                 18.47530691, 20.09023503};
  return table[df - 1];
}

// --- random traces -------------------------------------------------------

/// A synthetic run: up to `max_clocks` clocks, up to `max_instants` instants
/// at times 1,2,3,..., each with a random non-empty ticking set.
inline pccsl::Run random_trace(pccsl::Rng& rng, std::size_t max_clocks = 10,
                               std::size_t max_instants = 50) {
  pccsl::Run run;
  std::size_t n_clocks = 2 + static_cast<std::size_t>(
                                 rng.uniform_int(0, static_cast<int>(max_clocks) - 2));
  for (std::size_t c = 0; c < n_clocks; ++c)
    run.clock_names.push_back("c" + std::to_string(c));
  run.tick_times.assign(n_clocks, {});
  std::size_t n_instants =
      static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(max_instants)));
  for (std::size_t i = 0; i < n_instants; ++i) {
    pccsl::Instant in;
    in.time = static_cast<double>(i + 1);
    for (std::size_t c = 0; c < n_clocks; ++c)
      if (rng.uniform01() < 0.4) in.ticking.push_back(static_cast<pccsl::ClockIdx>(c));
    if (in.ticking.empty())
      in.ticking.push_back(static_cast<pccsl::ClockIdx>(
          rng.uniform_int(0, static_cast<int>(n_clocks) - 1)));
    for (pccsl::ClockIdx c : in.ticking) run.tick_times[c].push_back(in.time);
    run.instants.push_back(std::move(in));
  }
  run.bound = static_cast<double>(n_instants + 1);
  return run;
}

// --- brute-force relation oracles ---------------------------------------
//
// Direct evaluation of the defining conditions, written against the whole
// trace (prefix history counting via pccsl::history). Independent of the
// incremental monitors.

inline bool oracle_binary(pccsl::RelationKind kind, const pccsl::Run& run,
                          pccsl::ClockIdx c1, pccsl::ClockIdx c2,
                          double bound) {
  using pccsl::RelationKind;
  for (const pccsl::Instant& in : run.instants) {
    if (in.time > bound) break;
    bool a = in.ticks(c1);
    bool b = in.ticks(c2);
    switch (kind) {
      case RelationKind::Subclock:
        if (a && !b) return false;
        break;
      case RelationKind::Coincidence:
        if (a != b) return false;
        break;
      case RelationKind::Exclusion:
        if (a && b) return false;
        break;
      case RelationKind::Causality:
        // history of c2 must never exceed history of c1
        if (pccsl::history(run, c2, in.time) > pccsl::history(run, c1, in.time))
          return false;
        break;
      case RelationKind::Precedence: {
        // c1's history not less than c2's, and c2 must not tick when the
        // histories (before this instant) are equal
        std::int64_t h1_pre = pccsl::history(run, c1, in.time) - (a ? 1 : 0);
        std::int64_t h2_pre = pccsl::history(run, c2, in.time) - (b ? 1 : 0);
        if (b && h1_pre == h2_pre) return false;
        if (pccsl::history(run, c2, in.time) > pccsl::history(run, c1, in.time))
          return false;
        break;
      }
    }
  }
  return true;
}

/// Full pairwise-conjunction oracle for n-ary relations (Definition 3.6).
inline bool oracle_nary_pairwise(pccsl::RelationKind kind,
                                 const pccsl::Run& run,
                                 const std::vector<pccsl::ClockIdx>& clocks,
                                 double bound) {
  for (std::size_t i = 0; i < clocks.size(); ++i)
    for (std::size_t j = i + 1; j < clocks.size(); ++j)
      if (!oracle_binary(kind, run, clocks[i], clocks[j], bound)) return false;
  return true;
}

inline bool runs_equal(const pccsl::Run& a, const pccsl::Run& b) {
  return a.instants == b.instants && a.clock_names == b.clock_names &&
         a.tick_times == b.tick_times && a.var_names == b.var_names &&
         a.var_values == b.var_values && a.dense == b.dense;
}

}  // namespace testutil
