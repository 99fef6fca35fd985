#pragma once

// Estimation back-ends: least squares, coordinate-descent Lasso, K-fold
// cross-validation and the design incoherence statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "random.hpp"

namespace netband {

/// Rows are exploration samples, columns Fourier characters (entries ±1).
using DesignMatrix = Eigen::MatrixXd;

struct FitResult {
  Eigen::VectorXd theta_hat;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  /// Objective after each coordinate-descent sweep (empty for OLS).
  std::vector<double> objective_trace;
};

/// Raised when X^T X / E is numerically singular; callers extend exploration.
class IllConditionedDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMinGramEigenvalue = 1e-8;

/// Least squares via column-pivoted QR, after checking that the smallest
/// eigenvalue of X^T X / E clears kMinGramEigenvalue.
inline FitResult ols_fit(const DesignMatrix& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("design/response row mismatch");
  if (x.rows() < x.cols()) {
    throw IllConditionedDesign("design has " + std::to_string(x.rows()) + " rows for " + std::to_string(x.cols()) +
                               " columns");
  }
  const Eigen::MatrixXd gram = (x.transpose() * x) / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double min_eig = x.cols() == 0 ? 1.0 : eig.eigenvalues().minCoeff();
  if (!(min_eig > kMinGramEigenvalue)) {
    throw IllConditionedDesign("min eigenvalue of X^T X / E is " + std::to_string(min_eig));
  }
  FitResult out;
  out.theta_hat = x.colPivHouseholderQr().solve(y);
  out.objective = (y - x * out.theta_hat).squaredNorm();
  out.iterations = 1;
  return out;
}

inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

struct LassoOptions {
  double tolerance = 1e-7;
  int max_sweeps = 10000;
};

/// Sufficient statistics of (1/2E)||X theta - y||^2: G = X^T X / E,
/// b = X^T y / E, c = y^T y / 2E.
struct GramSystem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd xty;
  double half_yty = 0.0;

  static GramSystem from(const DesignMatrix& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("design/response row mismatch");
    if (x.rows() == 0) throw std::invalid_argument("empty design");
    const double e = static_cast<double>(x.rows());
    GramSystem g;
    g.gram = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    g.gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / e);
    g.gram.triangularView<Eigen::StrictlyUpper>() = g.gram.transpose();
    g.xty = x.transpose() * y / e;
    g.half_yty = y.squaredNorm() / (2.0 * e);
    return g;
  }
};

/// Cyclic coordinate descent with covariance updates on
/// (1/2E)||X theta - y||^2 + lambda ||theta||_1.
///
/// Keeps grad = b - G theta current, so a coordinate visit costs O(1) when the
/// coordinate does not move and O(d) when it does. The objective is
/// -theta^T (b + grad)/2 + c + lambda ||theta||_1.

inline FitResult lasso_fit(const GramSystem& sys, double lambda, const LassoOptions& opts = {},
                           const Eigen::VectorXd* warm_start = nullptr) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const Eigen::Index d = sys.xty.size();
  FitResult out;
  out.theta_hat = warm_start ? *warm_start : Eigen::VectorXd::Zero(d);
  if (out.theta_hat.size() != d) throw std::invalid_argument("warm start has wrong length");
  Eigen::VectorXd grad = sys.xty - sys.gram * out.theta_hat;

  auto objective = [&] {
    return -0.5 * out.theta_hat.dot(sys.xty + grad) + sys.half_yty + lambda * out.theta_hat.lpNorm<1>();
  };
  auto visit = [&](Eigen::Index j) {
    const double gjj = sys.gram(j, j);
    const double old = out.theta_hat(j);
    double next = 0.0;
    if (gjj > 0.0) next = soft_threshold(grad(j) + gjj * old, lambda) / gjj;
    const double delta = next - old;
    if (delta != 0.0) {
      out.theta_hat(j) = next;
      grad.noalias() -= sys.gram.col(j) * delta;
    }
    return std::abs(delta);
  };

  out.converged = false;
  int sweeps = 0;
  while (sweeps < opts.max_sweeps) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) max_change = std::max(max_change, visit(j));
    out.objective_trace.push_back(objective());
    ++sweeps;
    if (max_change <= opts.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations = sweeps;
  out.objective = out.objective_trace.empty() ? objective() : out.objective_trace.back();
  return out;
}

inline FitResult lasso_fit(const DesignMatrix& x, const Eigen::VectorXd& y, double lambda,
                           const LassoOptions& opts = {}) {
  return lasso_fit(GramSystem::from(x, y), lambda, opts);
}

/// 4 sqrt(log(2 A^N) / E) + 4 sqrt(log(2N / delta) / E).
inline double theoretical_lambda(std::int64_t rounds, int arms, int units, double delta) {
  if (rounds < 1) throw std::domain_error("E must be >= 1");
  if (arms < 1 || units < 1) throw std::domain_error("A and N must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
  const double e = static_cast<double>(rounds);
  const double log_actions = std::log(2.0) + units * std::log(static_cast<double>(arms));
  return 4.0 * std::sqrt(log_actions / e) + 4.0 * std::sqrt(std::log(2.0 * units / delta) / e);
}

/// max_{i,j} |(X^T X / E - I)_{ij}|.
inline double incoherence_stat(const DesignMatrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("empty design");
  Eigen::MatrixXd g = (x.transpose() * x) / static_cast<double>(x.rows());
  g -= Eigen::MatrixXd::Identity(x.cols(), x.cols());
  return x.cols() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Cross-validation

enum class Estimator { ols, lasso };

struct CvReport {
  int folds = 0;
  std::vector<double> candidate_grid;
  std::vector<double> cv_errors;  // mean held-out squared error per candidate
  double chosen = 0.0;
  std::size_t chosen_index = 0;
};

/// Seeded K-fold split shared by every response column of one design.
///
/// Rows are first put in a canonical order (lexicographic on the design row,
/// then on the response row), then permuted with the seed, and row i of that
/// permutation lands in fold i mod K. The split therefore depends on the row
/// contents and the seed, not on the order rows were supplied in.
class FoldPlan {
 public:
  FoldPlan(const DesignMatrix& x, const Eigen::MatrixXd& responses, int folds, std::uint64_t seed) : folds_(folds) {
    if (folds < 2) throw std::invalid_argument("need at least 2 folds");
    if (x.rows() < folds) throw std::invalid_argument("fewer rows than folds");
    if (responses.rows() != x.rows()) throw std::invalid_argument("design/response row mismatch");
    order_.resize(static_cast<std::size_t>(x.rows()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    auto row_less = [&](Eigen::Index a, Eigen::Index b) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
      }
      for (Eigen::Index c = 0; c < responses.cols(); ++c) {
        if (responses(a, c) != responses(b, c)) return responses(a, c) < responses(b, c);
      }
      return false;
    };
    std::stable_sort(order_.begin(), order_.end(), row_less);
    RandomEngine rng(seed);
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order_[i - 1], order_[pick(rng)]);
    }
    members_.assign(static_cast<std::size_t>(folds), {});
    for (std::size_t i = 0; i < order_.size(); ++i) members_[i % static_cast<std::size_t>(folds)].push_back(order_[i]);
  }

  int folds() const { return folds_; }
  const std::vector<Eigen::Index>& held_out(int k) const { return members_[static_cast<std::size_t>(k)]; }
  std::vector<Eigen::Index> training(int k) const {
    std::vector<Eigen::Index> out;
    for (int f = 0; f < folds_; ++f) {
      if (f == k) continue;
      const auto& m = members_[static_cast<std::size_t>(f)];
      out.insert(out.end(), m.begin(), m.end());
    }
    return out;
  }

 private:
  int folds_;
  std::vector<Eigen::Index> order_;
  std::vector<std::vector<Eigen::Index>> members_;
};

namespace detail {

inline DesignMatrix take_rows(const DesignMatrix& x, const std::vector<Eigen::Index>& rows) {
  DesignMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

inline Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

inline double mse(const DesignMatrix& x, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
  return (y - x * theta).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace detail

/// Per-fold training systems for one design, reusable across response columns.
class CrossValidator {
 public:
  CrossValidator(const DesignMatrix& x, const Eigen::MatrixXd& responses, int folds, std::uint64_t seed,
                 LassoOptions opts = {})
      : plan_(x, responses, folds, seed), opts_(opts) {
    // training Gram = (full cross-product - held-out cross-product) / rows
    std::vector<Eigen::MatrixXd> held(static_cast<std::size_t>(folds));
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    for (int k = 0; k < folds; ++k) {
      train_x_.push_back(detail::take_rows(x, plan_.training(k)));
      test_x_.push_back(detail::take_rows(x, plan_.held_out(k)));
      auto& h = held[static_cast<std::size_t>(k)];
      h = Eigen::MatrixXd::Zero(x.cols(), x.cols());
      h.selfadjointView<Eigen::Lower>().rankUpdate(test_x_.back().transpose());
      total += h;
    }
    for (int k = 0; k < folds; ++k) {
      Eigen::MatrixXd g = total - held[static_cast<std::size_t>(k)];
      g /= static_cast<double>(train_x_[static_cast<std::size_t>(k)].rows());
      g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
      train_gram_.push_back(std::move(g));
    }
  }

  const FoldPlan& plan() const { return plan_; }

  /// Mean held-out MSE per grid value. For Lasso the grid is swept from the
  /// largest lambda down with warm starts; OLS ignores the grid value and an
  /// ill-conditioned training fold scores +inf.
  CvReport run(Estimator estimator, std::span<const double> grid, const Eigen::VectorXd& y) const {
    if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
    CvReport report;
    report.folds = plan_.folds();
    report.candidate_grid.assign(grid.begin(), grid.end());
    report.cv_errors.assign(grid.size(), 0.0);

    std::vector<std::size_t> by_lambda(grid.size());
    std::iota(by_lambda.begin(), by_lambda.end(), std::size_t{0});
    std::stable_sort(by_lambda.begin(), by_lambda.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

    for (int k = 0; k < plan_.folds(); ++k) {
      const auto ty = detail::take_rows(y, plan_.training(k));
      const auto hy = detail::take_rows(y, plan_.held_out(k));
      const auto& tx = train_x_[static_cast<std::size_t>(k)];
      const auto& hx = test_x_[static_cast<std::size_t>(k)];
      if (estimator == Estimator::ols) {
        double err = std::numeric_limits<double>::infinity();
        try {
          err = detail::mse(hx, hy, ols_fit(tx, ty).theta_hat);
        } catch (const IllConditionedDesign&) {
        }
        for (double& e : report.cv_errors) e += err;
        continue;
      }
      GramSystem sys{train_gram_[static_cast<std::size_t>(k)], tx.transpose() * ty / static_cast<double>(tx.rows()),
                     ty.squaredNorm() / (2.0 * static_cast<double>(tx.rows()))};
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(tx.cols());
      for (std::size_t idx : by_lambda) {
        FitResult fit = lasso_fit(sys, grid[idx], opts_, &warm);
        warm = fit.theta_hat;
        report.cv_errors[idx] += detail::mse(hx, hy, fit.theta_hat);
      }
    }
    for (double& e : report.cv_errors) e /= static_cast<double>(plan_.folds());

    // argmin; ties go to the stronger regularization (larger grid value)
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double a = report.cv_errors[i], b = report.cv_errors[best];
      if (a < b || (a == b && grid[i] > grid[best])) best = i;
    }
    report.chosen_index = best;
    report.chosen = grid[best];
    return report;
  }

 private:
  FoldPlan plan_;
  LassoOptions opts_;
  std::vector<DesignMatrix> train_x_;
  std::vector<DesignMatrix> test_x_;
  std::vector<Eigen::MatrixXd> train_gram_;
};

inline CvReport cross_validate(Estimator estimator, std::span<const double> grid, const DesignMatrix& x,
                               const Eigen::VectorXd& y, int folds, std::uint64_t seed, LassoOptions opts = {}) {
  if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
  return CrossValidator(x, y, folds, seed, opts).run(estimator, grid, y);
}

/// Geometric lambda grid from ||X^T y||_inf / E down to min_ratio times that.
inline std::vector<double> lambda_grid(const GramSystem& sys, int points, double min_ratio) {
  if (points < 1) throw std::invalid_argument("grid needs at least one point");
  const double top = sys.xty.size() == 0 ? 0.0 : sys.xty.cwiseAbs().maxCoeff();
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    grid.push_back(top * std::pow(min_ratio, frac));
  }
  return grid;
}

}  // namespace netband
