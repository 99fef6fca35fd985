#pragma once

// Network explore-then-commit: uniform exploration, per-unit (or global)
// regression on Fourier characters, then commitment to the argmax of the
// averaged estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "environment.hpp"
#include "fourier.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "regression.hpp"

namespace netband {

// ---------------------------------------------------------------------------
// Exploration lengths

namespace detail {

inline void check_schedule_args(std::int64_t horizon, int arms, int sparsity, int units, double delta) {
  if (horizon < 1) throw std::domain_error("T must be >= 1");
  if (arms < 1 || sparsity < 1 || units < 1) throw std::domain_error("A, s and N must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
}

inline std::int64_t clamp_rounds(double e, std::int64_t horizon) {
  if (!(e < static_cast<double>(horizon))) return horizon;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(e)));
}

}  // namespace detail

/// ceil((T A^s)^{2/3} [log(N/delta) + s log A]^{1/3}), clamped to [1, T].
inline std::int64_t theoretical_E_known(std::int64_t horizon, int arms, int sparsity, int units, double delta) {
  detail::check_schedule_args(horizon, arms, sparsity, units, delta);
  const double t_as = static_cast<double>(horizon) * std::pow(static_cast<double>(arms), sparsity);
  const double logs = std::log(units / delta) + sparsity * std::log(static_cast<double>(arms));
  return detail::clamp_rounds(std::pow(t_as, 2.0 / 3.0) * std::cbrt(logs), horizon);
}

/// As theoretical_E_known with N log A in place of s log A.
inline std::int64_t theoretical_E_unknown(std::int64_t horizon, int arms, int sparsity, int units, double delta) {
  detail::check_schedule_args(horizon, arms, sparsity, units, delta);
  const double t_as = static_cast<double>(horizon) * std::pow(static_cast<double>(arms), sparsity);
  const double logs = std::log(units / delta) + units * std::log(static_cast<double>(arms));
  return detail::clamp_rounds(std::pow(t_as, 2.0 / 3.0) * std::cbrt(logs), horizon);
}

// ---------------------------------------------------------------------------
// Hyperparameter modes

struct TheoreticalMode {
  double delta = 0.1;
};

struct CrossValidatedMode {
  int folds = 3;
  /// Commit once every unit's CV error is at most `threshold`; when unset the
  /// threshold is (1 + margin) times the response noise variance.
  std::optional<double> threshold;
  double margin = 0.25;
  double noise_variance = 1.0;
  /// First CV checkpoint (0 = derived from the basis sizes) and the
  /// geometric growth between checkpoints.
  std::int64_t first_check = 0;
  double growth = 1.25;
  /// Exploration never exceeds this fraction of T; at the cap the policy
  /// commits with the best CV hyperparameters found.
  double max_explore_fraction = 0.5;
  /// Lasso grid: explicit values, or `lambda_points` geometric values from
  /// lambda_max down to lambda_min_ratio * lambda_max.
  std::vector<double> lambda_grid;
  int lambda_points = 10;
  double lambda_min_ratio = 0.05;
  /// The candidate commitment (argmax of the current estimate) must also be
  /// unchanged over this many consecutive checkpoints before committing.
  int stable_checkpoints = 3;
};

struct FixedMode {
  std::int64_t exploration = 1;
  double lambda = 0.0;
};

using HyperparameterMode = std::variant<TheoreticalMode, CrossValidatedMode, FixedMode>;

/// Upper bound on the regression basis size of a single Lasso fit.
inline constexpr std::size_t kMaxLassoBasis = 4096;

/// Basis for unit-agnostic regression: every subset of [p] (|S| <= degree).
inline std::vector<std::uint64_t> full_basis(int width, std::optional<int> max_degree) {
  const auto subsets = enumerate_subsets(SubsetMask::full(width), max_degree);
  if (subsets.size() > kMaxLassoBasis) {
    throw std::length_error("regression basis of " + std::to_string(subsets.size()) + " characters exceeds cap " +
                            std::to_string(kMaxLassoBasis));
  }
  std::vector<std::uint64_t> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(s.bits());
  return out;
}

/// Exhaustive argmax over [A]^N of sum_S coeff_S chi_S(a); ties go to the
/// smallest profile index.
inline std::uint64_t argmax_profile(const std::vector<Coefficient>& coeffs, int units, int arms) {
  const std::uint64_t count = profile_count(units, arms);
  const int width = units * bits_per_unit(arms);
  std::uint64_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t minus = minus_mask_of_index(i, width);
    double v = 0.0;
    for (const auto& c : coeffs) v += (std::popcount(c.mask & minus) & 1) ? -c.value : c.value;
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

inline DesignMatrix character_design(const std::vector<std::uint64_t>& minus_masks,
                                     const std::vector<std::uint64_t>& basis) {
  DesignMatrix x(static_cast<Eigen::Index>(minus_masks.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < minus_masks.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = character_sign(basis[j], minus_masks[i]);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// ExploreThenCommit

/// How the rewards are regressed at commit time.
struct EtcDesign {
  enum class Scheme { per_unit, global };
  Scheme scheme = Scheme::per_unit;
  /// Per unit: the neighborhood when known (OLS on subsets of B(n)), nullopt
  /// when unknown (Lasso on the full or degree-capped basis). For the global
  /// scheme every unit must be known.
  std::vector<std::optional<std::vector<int>>> neighborhoods;
  std::optional<int> max_degree;
  /// Sparsity bound used by the theoretical exploration length.
  int sparsity = 1;
};

class ExploreThenCommit : public Policy {
 public:
  ExploreThenCommit(std::string name, int arms, std::int64_t horizon, EtcDesign design, HyperparameterMode mode,
                    std::uint64_t seed)
      : Policy(static_cast<int>(design.neighborhoods.size()), arms, horizon),
        name_(std::move(name)),
        design_(std::move(design)),
        mode_(std::move(mode)),
        rng_(seed),
        cv_seed_(mix_seed(seed, 0xc5)) {
    width_ = units() * bits_per_unit(arms);
    profiles_ = profile_count(units(), arms);
    build_bases();
    plan_exploration();
  }

  std::string name() const override { return name_; }

  PolicyDiagnostics diagnostics() const override {
    PolicyDiagnostics d;
    d.exploration_rounds = committed_ ? commit_round_ : rounds_played();
    d.lambdas = lambdas_;
    d.converged = converged_;
    d.warnings = warnings_;
    return d;
  }

  bool committed() const { return committed_; }
  std::optional<ActionProfile> committed_action() const {
    if (!committed_) return std::nullopt;
    return ActionProfile::from_index(committed_index_, units(), arms());
  }
  /// Averaged coefficient estimate behind the committed action.
  const std::vector<Coefficient>& estimate() const { return estimate_; }
  /// Per-unit estimates, in each unit's own basis order.
  const std::vector<std::vector<Coefficient>>& unit_estimates() const { return unit_estimates_; }
  std::int64_t planned_exploration() const { return next_check_; }

 protected:
  std::uint64_t choose() override {
    if (committed_) {
      phase_ = Phase::commit;
      return committed_index_;
    }
    phase_ = Phase::explore;
    std::uniform_int_distribution<std::uint64_t> pick(0, profiles_ - 1);
    return pick(rng_);
  }

  void update(std::uint64_t played, const RewardObservation& obs) override {
    if (committed_) return;
    minus_.push_back(minus_mask_of_index(played, width_));
    if (design_.scheme == EtcDesign::Scheme::global) {
      responses_.push_back(obs.mean);
    } else {
      responses_.insert(responses_.end(), obs.per_unit.begin(), obs.per_unit.end());
    }
    const std::int64_t t = rounds_played();
    if (t < next_check_ || t >= horizon()) return;
    checkpoint(t);
  }

 private:
  bool cv_mode() const { return std::holds_alternative<CrossValidatedMode>(mode_); }

  int response_count() const { return design_.scheme == EtcDesign::Scheme::global ? 1 : units(); }

  void build_bases() {
    const int n_units = units();
    bool any_unknown = false;
    known_basis_.resize(static_cast<std::size_t>(n_units));
    if (design_.scheme == EtcDesign::Scheme::global) {
      std::vector<std::uint64_t> all;
      for (int n = 0; n < n_units; ++n) {
        const auto& nb = design_.neighborhoods[static_cast<std::size_t>(n)];
        if (!nb) throw std::invalid_argument("global ETC needs every neighborhood");
        for (const auto& s : enumerate_subsets(block_mask(*nb))) all.push_back(s.bits());
      }
      std::sort(all.begin(), all.end(), canonical_less);
      all.erase(std::unique(all.begin(), all.end()), all.end());
      global_basis_ = std::move(all);
      return;
    }
    for (int n = 0; n < n_units; ++n) {
      const auto& nb = design_.neighborhoods[static_cast<std::size_t>(n)];
      if (nb) {
        for (const auto& s : enumerate_subsets(block_mask(*nb))) known_basis_[static_cast<std::size_t>(n)].push_back(s.bits());
      } else {
        any_unknown = true;
      }
    }
    if (any_unknown) lasso_basis_ = full_basis(width_, design_.max_degree);
  }

  SubsetMask block_mask(const std::vector<int>& nb) const { return netband::block_mask(nb, units(), arms()); }

  bool all_known() const {
    return std::all_of(design_.neighborhoods.begin(), design_.neighborhoods.end(), [](const auto& nb) { return nb.has_value(); });
  }

  std::size_t max_ols_basis() const {
    std::size_t d = global_basis_.size();
    for (const auto& b : known_basis_) d = std::max(d, b.size());
    return d;
  }

  void plan_exploration() {
    if (const auto* th = std::get_if<TheoreticalMode>(&mode_)) {
      int s = design_.sparsity;
      if (all_known()) {
        s = 1;
        for (const auto& nb : design_.neighborhoods) s = std::max(s, static_cast<int>(nb->size()));
        next_check_ = theoretical_E_known(horizon(), arms(), s, units(), th->delta);
      } else {
        next_check_ = theoretical_E_unknown(horizon(), arms(), std::max(1, s), units(), th->delta);
      }
    } else if (const auto* fx = std::get_if<FixedMode>(&mode_)) {
      if (fx->exploration < 1) throw std::invalid_argument("fixed exploration length must be >= 1");
      if (!(fx->lambda >= 0.0)) throw std::invalid_argument("fixed lambda must be >= 0");
      next_check_ = std::min(fx->exploration, horizon());
    } else {
      const auto& cv = std::get<CrossValidatedMode>(mode_);
      if (cv.folds < 2) throw std::invalid_argument("CV needs at least 2 folds");
      if (!(cv.growth > 1.0)) throw std::invalid_argument("CV growth must exceed 1");
      if (!(cv.max_explore_fraction > 0.0 && cv.max_explore_fraction <= 1.0)) {
        throw std::invalid_argument("max_explore_fraction must lie in (0, 1]");
      }
      cv_cap_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(cv.max_explore_fraction * horizon())));
      std::int64_t first = cv.first_check;
      if (first <= 0) {
        // every training fold must hold at least twice the largest OLS basis
        const auto d = static_cast<std::int64_t>(max_ols_basis());
        first = std::max<std::int64_t>(8 * cv.folds, (2 * d * cv.folds + cv.folds - 2) / (cv.folds - 1));
      }
      next_check_ = std::min(first, cv_cap_);
    }
  }

  double cv_threshold(const CrossValidatedMode& cv) const {
    if (cv.threshold) return *cv.threshold;
    double var = cv.noise_variance;
    if (design_.scheme == EtcDesign::Scheme::global) var /= units();
    return (1.0 + cv.margin) * var + 1e-9;
  }

  Eigen::VectorXd response(int r) const {
    const int k = response_count();
    Eigen::VectorXd y(static_cast<Eigen::Index>(minus_.size()));
    for (std::size_t i = 0; i < minus_.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = responses_[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(r)];
    }
    return y;
  }

  struct UnitFit {
    std::vector<std::uint64_t> basis;
    Eigen::VectorXd theta;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
  };

  /// One exploration checkpoint: decide whether to commit now.
  void checkpoint(std::int64_t t) {
    if (const auto* cv = std::get_if<CrossValidatedMode>(&mode_)) {
      const bool at_cap = t >= cv_cap_;
      std::vector<UnitFit> fits;
      bool pass = fit_with_cv(*cv, fits);
      if (!fits.empty()) {
        const std::uint64_t candidate = argmax_profile(merge(fits), units(), arms());
        streak_ = (candidate_ && *candidate_ == candidate) ? streak_ + 1 : 1;
        candidate_ = candidate;
      } else {
        streak_ = 0;
        candidate_.reset();
      }
      pass = pass && streak_ >= cv->stable_checkpoints;
      if (pass || at_cap) {
        if (fits.empty()) {
          throw std::runtime_error(name_ + ": design still ill-conditioned after " + std::to_string(t) +
                                   " exploration rounds");
        }
        commit(t, fits);
        return;
      }
      const auto grown = static_cast<std::int64_t>(std::ceil(static_cast<double>(t) * cv->growth));
      next_check_ = std::min(std::max(grown, t + 1), cv_cap_);
      return;
    }

    std::vector<UnitFit> fits;
    try {
      fits = fit_all(nullptr);
    } catch (const IllConditionedDesign& e) {
      const std::int64_t limit = horizon() / 2;
      const std::int64_t doubled = std::min(2 * t, limit);
      if (doubled <= t) {
        throw std::runtime_error(name_ + ": exploration design ill-conditioned at E=" + std::to_string(t) +
                                 " and the T/2 extension budget is exhausted (" + e.what() + ")");
      }
      warnings_.push_back("ill-conditioned design at E=" + std::to_string(t) + ", extending to " +
                          std::to_string(doubled));
      next_check_ = doubled;
      return;
    }
    commit(t, fits);
  }

  /// Fits every response. `chosen_lambda` (per response, may be null) pins
  /// the Lasso regularization; otherwise the mode decides.
  std::vector<UnitFit> fit_all(const std::vector<double>* chosen_lambda) {
    const auto e = static_cast<std::int64_t>(minus_.size());
    std::vector<UnitFit> fits(static_cast<std::size_t>(response_count()));

    if (design_.scheme == EtcDesign::Scheme::global) {
      const DesignMatrix x = character_design(minus_, global_basis_);
      fits[0] = {global_basis_, ols_fit(x, response(0)).theta_hat};
      return fits;
    }

    std::optional<GramSystem> shared;
    DesignMatrix lasso_x;
    for (int n = 0; n < units(); ++n) {
      auto& fit = fits[static_cast<std::size_t>(n)];
      const Eigen::VectorXd y = response(n);
      if (!design_.neighborhoods[static_cast<std::size_t>(n)]) {
        if (!shared) {
          lasso_x = character_design(minus_, lasso_basis_);
          shared = GramSystem::from(lasso_x, Eigen::VectorXd::Zero(lasso_x.rows()));
        }
        GramSystem sys{shared->gram, lasso_x.transpose() * y / static_cast<double>(e),
                       y.squaredNorm() / (2.0 * static_cast<double>(e))};
        double lambda = 0.0;
        if (chosen_lambda) {
          lambda = (*chosen_lambda)[static_cast<std::size_t>(n)];
        } else if (const auto* th = std::get_if<TheoreticalMode>(&mode_)) {
          lambda = theoretical_lambda(e, arms(), units(), th->delta);
        } else {
          lambda = std::get<FixedMode>(mode_).lambda;
        }
        FitResult r = lasso_fit(sys, lambda);
        fit = {lasso_basis_, std::move(r.theta_hat), lambda, r.converged};
      } else {
        const auto& basis = known_basis_[static_cast<std::size_t>(n)];
        fit = {basis, ols_fit(character_design(minus_, basis), y).theta_hat};
      }
    }
    return fits;
  }

  /// Runs CV for every response; returns true when all CV errors clear the
  /// threshold. `fits` receives the full-data fits (empty if some OLS design
  /// is ill-conditioned).
  bool fit_with_cv(const CrossValidatedMode& cv, std::vector<UnitFit>& fits) {
    const double threshold = cv_threshold(cv);
    const int k = response_count();
    bool pass = true;
    std::vector<double> lambdas(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t seed = mix_seed(cv_seed_, minus_.size());

    std::optional<CrossValidator> lasso_cv;
    DesignMatrix lasso_x;
    std::optional<GramSystem> shared;
    for (int r = 0; r < k; ++r) {
      const Eigen::VectorXd y = response(r);
      const bool known = design_.scheme == EtcDesign::Scheme::global || design_.neighborhoods[static_cast<std::size_t>(r)];
      const double grid_ols[] = {0.0};
      double err = 0.0;
      if (known) {
        const auto& basis = design_.scheme == EtcDesign::Scheme::global ? global_basis_ : known_basis_[static_cast<std::size_t>(r)];
        err = cross_validate(Estimator::ols, grid_ols, character_design(minus_, basis), y, cv.folds, seed).cv_errors[0];
      } else {
        if (!lasso_cv) {
          lasso_x = character_design(minus_, lasso_basis_);
          Eigen::MatrixXd all_y(lasso_x.rows(), units());
          for (int n = 0; n < units(); ++n) all_y.col(n) = response(n);
          lasso_cv.emplace(lasso_x, all_y, cv.folds, seed);
          shared = GramSystem::from(lasso_x, Eigen::VectorXd::Zero(lasso_x.rows()));
        }
        std::vector<double> grid = cv.lambda_grid;
        if (grid.empty()) {
          GramSystem sys{shared->gram, lasso_x.transpose() * y / static_cast<double>(lasso_x.rows()), 0.0};
          grid = lambda_grid(sys, cv.lambda_points, cv.lambda_min_ratio);
        }
        const CvReport rep = lasso_cv->run(Estimator::lasso, grid, y);
        lambdas[static_cast<std::size_t>(r)] = rep.chosen;
        err = rep.cv_errors[rep.chosen_index];
      }
      if (!(err <= threshold)) pass = false;
    }
    try {
      fits = fit_all(&lambdas);
    } catch (const IllConditionedDesign&) {
      fits.clear();
      return false;
    }
    return pass;
  }

  /// Unit-averaged estimate, one coefficient per nonzero character.
  static std::vector<Coefficient> merge(const std::vector<UnitFit>& fits) {
    std::map<std::uint64_t, double> merged;
    const double scale = 1.0 / static_cast<double>(fits.size());
    for (const auto& f : fits) {
      for (std::size_t j = 0; j < f.basis.size(); ++j) {
        const double v = f.theta(static_cast<Eigen::Index>(j));
        if (v != 0.0) merged[f.basis[j]] += v * scale;
      }
    }
    std::vector<Coefficient> out;
    for (const auto& [mask, v] : merged) out.push_back({mask, v});
    return out;
  }

  void commit(std::int64_t t, const std::vector<UnitFit>& fits) {
    unit_estimates_.assign(fits.size(), {});
    lambdas_.clear();
    converged_.clear();
    for (std::size_t r = 0; r < fits.size(); ++r) {
      const auto& f = fits[r];
      for (std::size_t j = 0; j < f.basis.size(); ++j) unit_estimates_[r].push_back({f.basis[j], f.theta(static_cast<Eigen::Index>(j))});
      lambdas_.push_back(f.lambda);
      converged_.push_back(f.converged);
      if (!f.converged) warnings_.push_back("lasso did not converge for response " + std::to_string(r + 1));
    }
    estimate_ = merge(fits);
    committed_index_ = argmax_profile(estimate_, units(), arms());
    committed_ = true;
    commit_round_ = t;
    // release exploration data
    minus_ = {};
    responses_ = {};
  }

  std::string name_;
  EtcDesign design_;
  HyperparameterMode mode_;
  RandomEngine rng_;
  std::uint64_t cv_seed_;
  int width_ = 0;
  std::uint64_t profiles_ = 0;

  std::vector<std::vector<std::uint64_t>> known_basis_;
  std::vector<std::uint64_t> lasso_basis_;
  std::vector<std::uint64_t> global_basis_;

  std::int64_t next_check_ = 0;
  std::int64_t cv_cap_ = 0;
  std::optional<std::uint64_t> candidate_;
  int streak_ = 0;

  std::vector<std::uint64_t> minus_;
  std::vector<double> responses_;  // row-major, response_count() per round

  bool committed_ = false;
  std::uint64_t committed_index_ = 0;
  std::int64_t commit_round_ = 0;
  std::vector<Coefficient> estimate_;
  std::vector<std::vector<Coefficient>> unit_estimates_;
  std::vector<double> lambdas_;
  std::vector<bool> converged_;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Factories

inline std::unique_ptr<ExploreThenCommit> etc_known(const InterferenceGraph& graph, int arms, std::int64_t horizon,
                                                    HyperparameterMode mode, std::uint64_t seed) {
  graph.validate();
  EtcDesign d;
  for (const auto& nb : graph.neighborhoods) d.neighborhoods.emplace_back(nb);
  d.sparsity = graph.max_neighborhood();
  return std::make_unique<ExploreThenCommit>("etc-known", arms, horizon, std::move(d), std::move(mode), seed);
}

/// `sparsity` is the assumed bound s on |N(n)|, used only by the theoretical
/// exploration length.
inline std::unique_ptr<ExploreThenCommit> etc_unknown(int units, int arms, std::int64_t horizon, HyperparameterMode mode,
                                                      std::optional<int> max_degree, int sparsity, std::uint64_t seed) {
  EtcDesign d;
  d.neighborhoods.assign(static_cast<std::size_t>(units), std::nullopt);
  d.max_degree = max_degree;
  d.sparsity = sparsity;
  return std::make_unique<ExploreThenCommit>("etc-unknown", arms, horizon, std::move(d), std::move(mode), seed);
}

/// Units with a neighborhood use OLS on subsets of B(n); the rest use Lasso.
inline std::unique_ptr<ExploreThenCommit> etc_partial(std::vector<std::optional<std::vector<int>>> known, int arms,
                                                      std::int64_t horizon, HyperparameterMode mode,
                                                      std::optional<int> max_degree, int sparsity, std::uint64_t seed) {
  EtcDesign d;
  for (auto& nb : known) {
    if (nb) std::sort(nb->begin(), nb->end());
  }
  d.neighborhoods = std::move(known);
  d.max_degree = max_degree;
  d.sparsity = sparsity;
  return std::make_unique<ExploreThenCommit>("etc-partial", arms, horizon, std::move(d), std::move(mode), seed);
}

/// Single OLS of the unit-averaged reward on the union basis of all B(n).
inline std::unique_ptr<ExploreThenCommit> global_etc_known(const InterferenceGraph& graph, int arms,
                                                           std::int64_t horizon, HyperparameterMode mode,
                                                           std::uint64_t seed) {
  graph.validate();
  EtcDesign d;
  d.scheme = EtcDesign::Scheme::global;
  for (const auto& nb : graph.neighborhoods) d.neighborhoods.emplace_back(nb);
  d.sparsity = graph.max_neighborhood();
  return std::make_unique<ExploreThenCommit>("global-etc", arms, horizon, std::move(d), std::move(mode), seed);
}

}  // namespace netband
