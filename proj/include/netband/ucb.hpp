#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fourier.hpp"
#include "policy.hpp"

namespace netband {

/// UCB1 over the A^N joint profiles, paid the unit-averaged reward.
/// Round-robin over all arms first, then argmax of mean + sqrt(2 log t / n_a);
/// ties go to the smallest profile index.
class Ucb1 : public Policy {
 public:
  Ucb1(int units, int arms, std::int64_t horizon)
      : Policy(units, arms, horizon), arms_total_(profile_count(units, arms)), pulls_(arms_total_, 0), sums_(arms_total_, 0.0) {}

  std::string name() const override { return "ucb"; }

  std::int64_t pulls(std::uint64_t arm) const { return pulls_.at(arm); }

 protected:
  std::uint64_t choose() override {
    const auto t = static_cast<std::uint64_t>(rounds_played()) + 1;
    if (t <= arms_total_) {
      phase_ = Phase::explore;
      return t - 1;
    }
    phase_ = Phase::ucb;
    const double log_t = std::log(static_cast<double>(t));
    std::uint64_t best = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (std::uint64_t a = 0; a < arms_total_; ++a) {
      const auto n = static_cast<double>(pulls_[a]);
      const double index = sums_[a] / n + std::sqrt(2.0 * log_t / n);
      if (index > best_index) {
        best_index = index;
        best = a;
      }
    }
    return best;
  }

  void update(std::uint64_t played, const RewardObservation& obs) override {
    ++pulls_[played];
    sums_[played] += obs.mean;
  }

 private:
  std::uint64_t arms_total_;
  std::vector<std::int64_t> pulls_;
  std::vector<double> sums_;
};

inline std::unique_ptr<Ucb1> ucb_baseline(int units, int arms, std::int64_t horizon) {
  return std::make_unique<Ucb1>(units, arms, horizon);
}

}  // namespace netband
