#include "pccsl/expr.hpp"

#include <algorithm>
#include <cmath>

namespace pccsl {

FilterWord parse_filter_word(const std::string& text) {
  FilterWord w;
  std::vector<bool>* target = &w.prefix;
  bool in_period = false;
  for (char c : text) {
    switch (c) {
      case '0':
      case '1':
        if (!target) throw SpecError("filter word: bits after the period");
        target->push_back(c == '1');
        break;
      case '(':
        if (in_period || !target)
          throw SpecError("filter word: misplaced '('");
        in_period = true;
        target = &w.period;
        break;
      case ')':
        if (!in_period) throw SpecError("filter word: unmatched ')'");
        in_period = false;
        target = nullptr;
        break;
      default:
        throw SpecError(std::string("filter word: unexpected character '") +
                        c + "'");
    }
  }
  if (in_period) throw SpecError("filter word: missing ')'");
  if (w.period.empty()) throw SpecError("filter word: period must be non-empty");
  return w;
}

std::string filter_word_to_string(const FilterWord& w) {
  std::string s;
  for (bool b : w.prefix) s += b ? '1' : '0';
  s += '(';
  for (bool b : w.period) s += b ? '1' : '0';
  s += ')';
  return s;
}

bool InfSupEval::on_instant(const std::vector<bool>& operand_ticks) {
  if (operand_ticks.size() != hist_.size())
    throw SpecError("inf/sup: operand arity mismatch");
  for (std::size_t i = 0; i < hist_.size(); ++i)
    if (operand_ticks[i]) ++hist_[i];
  std::int64_t now = inf_ ? *std::max_element(hist_.begin(), hist_.end())
                          : *std::min_element(hist_.begin(), hist_.end());
  if (now > extremum_) {
    extremum_ = now;
    return true;
  }
  return false;
}

DelayEval::DelayEval(bool dense_base, double base_rate, double lower,
                     double upper)
    : dense_(dense_base), rate_(base_rate), lower_(lower), upper_(upper) {
  if (upper_ < lower_ || lower_ < 0)
    throw SpecError("delay: need upper >= lower >= 0");
  if (!dense_ &&
      (std::floor(lower_) != lower_ || std::floor(upper_) != upper_))
    throw SpecError("delay: discrete base needs integral bounds");
}

DelayEval::StepResult DelayEval::on_instant(double now, bool ref_ticks,
                                            bool base_ticks, int matured,
                                            Rng& rng) {
  StepResult out;
  if (dense_) {
    if (matured > 0) out.tick = true;  // co-timed maturations collapse
    if (ref_ticks) {
      double d = (lower_ == upper_) ? lower_ : rng.uniform(lower_, upper_);
      if (d == 0.0) {
        out.tick = true;
      } else {
        if (rate_ <= 0.0)
          throw SimError("delay over a dense base with rate 0 never matures",
                         now);
        out.schedule.push_back(now + d / rate_);
      }
    }
    return out;
  }
  // discrete base: count base ticks strictly after each spawn
  if (base_ticks) {
    ++base_count_;
    while (!pending_.empty() && *pending_.begin() <= base_count_) {
      pending_.erase(pending_.begin());
      out.tick = true;
    }
  }
  if (ref_ticks) {
    std::int64_t d =
        (lower_ == upper_)
            ? static_cast<std::int64_t>(lower_)
            : rng.uniform_int(static_cast<std::int64_t>(lower_),
                              static_cast<std::int64_t>(upper_));
    if (d == 0)
      out.tick = true;
    else
      pending_.insert(base_count_ + d);
  }
  return out;
}

DiscretizeEval::DiscretizeEval(double step) : step_(step) {
  if (!(step > 0.0)) throw SpecError("discretize: step must be > 0");
}

bool DiscretizeEval::on_jump(double post_value) {
  ++gen_;
  bool crossed = post_value >= static_cast<double>(next_k_) * step_;
  next_k_ = static_cast<std::int64_t>(std::floor(post_value / step_)) + 1;
  return crossed;
}

std::optional<double> DiscretizeEval::next_cross_time(double t0, double v0,
                                                      double rate) const {
  if (rate <= 0.0) return std::nullopt;
  double target = static_cast<double>(next_k_) * step_;
  double dt = (target - v0) / rate;
  if (dt < 0.0) dt = 0.0;
  return t0 + dt;
}

}  // namespace pccsl
