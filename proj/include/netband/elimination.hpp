#pragma once

// Sequential action elimination over an explicit set of surviving profiles.
// Each epoch sweeps every unit's local configurations, plays one surviving
// representative per configuration E_l times, and eliminates profiles whose
// aggregated local estimate falls more than 2^-l below the best.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "environment.hpp"
#include "fourier.hpp"
#include "policy.hpp"
#include "random.hpp"

namespace netband {

/// E_l = ceil(8 sigma^2 4^l log(2 N A^s / delta_l)), delta_l = delta / (l (l + 1)).
/// sigma = 1 is the 1-sub-Gaussian schedule; smaller sigma shrinks the
/// epochs in proportion to the noise variance.
inline std::int64_t elimination_epoch_length(int epoch, int units, int arms, int sparsity, double delta,
                                             double noise_scale = 1.0) {
  if (epoch < 1) throw std::domain_error("epoch index starts at 1");
  if (units < 1 || arms < 1 || sparsity < 1) throw std::domain_error("N, A and s must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
  if (!(noise_scale >= 0.0)) throw std::domain_error("noise scale must be >= 0");
  const double delta_l = delta / (static_cast<double>(epoch) * (epoch + 1));
  const double log_term =
      std::log(2.0 * units / delta_l) + sparsity * std::log(static_cast<double>(arms));
  const double e = 8.0 * noise_scale * noise_scale * std::ldexp(1.0, 2 * epoch) * log_term;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(e)));
}

class SequentialElimination : public Policy {
 public:
  SequentialElimination(const InterferenceGraph& graph, int arms, std::int64_t horizon, double delta,
                        double noise_scale, std::uint64_t seed)
      : Policy(graph.units, arms, horizon), graph_(graph), delta_(delta), noise_scale_(noise_scale), rng_(seed) {
    graph_.validate();
    elimination_epoch_length(1, graph_.units, arms, 1, delta, noise_scale);  // argument check
    sparsity_ = graph_.max_neighborhood();
    const std::uint64_t count = profile_count(units(), arms);
    active_.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) active_[i] = i;
    for (const auto& nb : graph_.neighborhoods) local_sizes_.push_back(checked_pow(static_cast<std::uint64_t>(arms), static_cast<int>(nb.size())));
    start_epoch();
  }

  std::string name() const override { return "seq-elim"; }

  PolicyDiagnostics diagnostics() const override {
    PolicyDiagnostics d;
    d.epochs_completed = epochs_completed_;
    return d;
  }

  int epochs_completed() const { return epochs_completed_; }
  /// Surviving set C_{l+1} after each completed epoch l (profile indices, ascending).
  const std::vector<std::vector<std::uint64_t>>& survivor_history() const { return history_; }
  const std::vector<std::uint64_t>& active_set() const { return active_; }
  /// True once the remaining horizon cannot fit another full epoch.
  bool exploiting() const { return exploiting_; }

  /// Index of unit n's local configuration inside profile `index`:
  /// lexicographic over the sorted neighborhood.
  std::uint64_t local_config(int unit, std::uint64_t index) const {
    const auto a = static_cast<std::uint64_t>(arms());
    std::uint64_t code = 0;
    for (int m : graph_.neighborhoods[static_cast<std::size_t>(unit)]) {
      const int shift_units = units() - 1 - m;
      std::uint64_t digit = index;
      for (int i = 0; i < shift_units; ++i) digit /= a;
      code = code * a + digit % a;
    }
    return code;
  }

 protected:
  std::uint64_t choose() override {
    if (exploiting_) {
      if (replay_) {
        phase_ = Phase::commit;
        return *replay_;
      }
      phase_ = Phase::explore;
      std::uniform_int_distribution<std::uint64_t> pick(0, profile_count(units(), arms()) - 1);
      return pick(rng_);
    }
    phase_ = Phase::epoch;
    return plan_[cursor_].profile;
  }

  void update(std::uint64_t, const RewardObservation& obs) override {
    if (exploiting_) return;
    Slot& slot = plan_[cursor_];
    slot.sum += obs.per_unit[static_cast<std::size_t>(slot.unit)];
    if (++slot.plays == epoch_length_) {
      ++cursor_;
      if (cursor_ == plan_.size()) finish_epoch();
    }
  }

 private:
  struct Slot {
    int unit = 0;
    std::uint64_t config = 0;
    std::uint64_t profile = 0;
    std::int64_t plays = 0;
    double sum = 0.0;
  };

  void start_epoch() {
    ++epoch_;
    epoch_length_ = elimination_epoch_length(epoch_, units(), arms(), sparsity_, delta_, noise_scale_);
    plan_.clear();
    cursor_ = 0;
    for (int n = 0; n < units(); ++n) {
      // first surviving profile (canonical order) for each local configuration
      std::vector<std::optional<std::uint64_t>> rep(static_cast<std::size_t>(local_sizes_[static_cast<std::size_t>(n)]));
      for (std::uint64_t a : active_) {
        auto& r = rep[static_cast<std::size_t>(local_config(n, a))];
        if (!r) r = a;
      }
      for (std::size_t c = 0; c < rep.size(); ++c) {
        if (rep[c]) plan_.push_back({n, c, *rep[c], 0, 0.0});
      }
    }
    const double needed = static_cast<double>(plan_.size()) * static_cast<double>(epoch_length_);
    if (static_cast<double>(rounds_played()) + needed > static_cast<double>(horizon())) exploiting_ = true;
  }

  void finish_epoch() {
    // mu_n(config), NaN where the configuration had no surviving representative
    std::vector<std::vector<double>> mu(static_cast<std::size_t>(units()));
    for (int n = 0; n < units(); ++n) {
      mu[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(local_sizes_[static_cast<std::size_t>(n)]),
                                             std::numeric_limits<double>::quiet_NaN());
    }
    for (const Slot& s : plan_) {
      mu[static_cast<std::size_t>(s.unit)][static_cast<std::size_t>(s.config)] = s.sum / static_cast<double>(s.plays);
    }
    std::vector<double> global(active_.size(), 0.0);
    double best = -std::numeric_limits<double>::infinity();
    std::uint64_t best_profile = active_.front();
    for (std::size_t i = 0; i < active_.size(); ++i) {
      double acc = 0.0;
      for (int n = 0; n < units(); ++n) acc += mu[static_cast<std::size_t>(n)][static_cast<std::size_t>(local_config(n, active_[i]))];
      global[i] = acc / static_cast<double>(units());
      if (global[i] > best) {
        best = global[i];
        best_profile = active_[i];
      }
    }
    const double cut = best - std::ldexp(1.0, -epoch_);
    std::vector<std::uint64_t> next;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      if (global[i] >= cut) next.push_back(active_[i]);
    }
    if (next.empty()) throw std::logic_error("elimination removed every profile");
    active_ = std::move(next);
    history_.push_back(active_);
    replay_ = best_profile;
    ++epochs_completed_;
    start_epoch();
  }

  InterferenceGraph graph_;
  double delta_;
  double noise_scale_;
  RandomEngine rng_;
  int sparsity_ = 1;
  std::vector<std::uint64_t> local_sizes_;

  std::vector<std::uint64_t> active_;
  std::vector<std::vector<std::uint64_t>> history_;
  int epoch_ = 0;
  int epochs_completed_ = 0;
  std::int64_t epoch_length_ = 0;
  std::vector<Slot> plan_;
  std::size_t cursor_ = 0;
  bool exploiting_ = false;
  std::optional<std::uint64_t> replay_;
};

inline std::unique_ptr<SequentialElimination> sequential_elimination(const InterferenceGraph& graph, int arms,
                                                                     std::int64_t horizon, double delta,
                                                                     double noise_scale, std::uint64_t seed) {
  return std::make_unique<SequentialElimination>(graph, arms, horizon, delta, noise_scale, seed);
}

}  // namespace netband
