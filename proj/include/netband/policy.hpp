#pragma once

// Round-based policy contract shared by every bandit algorithm:
// next_action() then observe(), alternating for t = 1..T.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "environment.hpp"
#include "fourier.hpp"

namespace netband {

enum class Phase { explore, commit, epoch, ucb };

inline std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::explore: return "explore";
    case Phase::commit: return "commit";
    case Phase::epoch: return "epoch";
    case Phase::ucb: return "ucb";
  }
  return "unknown";
}

struct PolicyDiagnostics {
  /// Rounds played before committing (ETC family); T when it never commits.
  std::optional<std::int64_t> exploration_rounds;
  /// Regularization used per unit (Lasso units only; NaN for OLS units).
  std::vector<double> lambdas;
  /// Lasso convergence per unit, false entries also appear in `warnings`.
  std::vector<bool> converged;
  int epochs_completed = 0;
  std::vector<std::string> warnings;
};

class Policy {
 public:
  Policy(int units, int arms, std::int64_t horizon) : units_(units), arms_(arms), horizon_(horizon) {
    if (units < 1) throw std::invalid_argument("policy needs at least one unit");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    bits_per_unit(arms);
  }
  virtual ~Policy() = default;

  Policy(const Policy&) = delete;
  Policy& operator=(const Policy&) = delete;

  virtual std::string name() const = 0;

  ActionProfile next_action() {
    if (awaiting_) throw std::logic_error("next_action called twice without observe");
    if (rounds_ >= horizon_) throw std::logic_error("horizon exhausted");
    last_ = choose();
    awaiting_ = true;
    return ActionProfile::from_index(last_, units_, arms_);
  }

  void observe(const RewardObservation& obs) {
    if (!awaiting_) throw std::logic_error("observe called without a pending action");
    if (static_cast<int>(obs.per_unit.size()) != units_) throw std::invalid_argument("observation has wrong unit count");
    awaiting_ = false;
    ++rounds_;
    update(last_, obs);
  }

  /// Phase of the most recently emitted action.
  Phase phase() const { return phase_; }
  std::int64_t rounds_played() const { return rounds_; }
  std::int64_t horizon() const { return horizon_; }
  int units() const { return units_; }
  int arms() const { return arms_; }
  virtual PolicyDiagnostics diagnostics() const { return {}; }

 protected:
  /// Index of the profile to play in round rounds_played() + 1; must set phase_.
  virtual std::uint64_t choose() = 0;
  /// Called after rounds_played() has been incremented.
  virtual void update(std::uint64_t played, const RewardObservation& obs) = 0;

  Phase phase_ = Phase::explore;

 private:
  int units_;
  int arms_;
  std::int64_t horizon_;
  std::int64_t rounds_ = 0;
  bool awaiting_ = false;
  std::uint64_t last_ = 0;
};

}  // namespace netband
