#pragma once

// L2-regularized TRF estimation: closed form, mini-batch gradient descent,
// and k-fold cross-validated selection of the penalty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "trf/stats.hpp"

namespace trf {

enum class Solver { closed_form, iterative };

inline std::string_view solver_name(Solver s) { return s == Solver::closed_form ? "closed_form" : "iterative"; }

inline std::vector<double> make_lambda_grid(double lo, double hi, int n) {
  require(lo > 0.0, "lambda grid lower bound must be positive, got " + format_number(lo));
  require(lo < hi, "lambda grid requires lo < hi");
  require(n >= 2, "lambda grid needs at least 2 values");
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) grid[k] = std::pow(10.0, a + (b - a) * k / (n - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

/// Solves (G + lambda I) W = B given the lower triangle of G = X^T X.
inline Matrix solve_normal_equations(const Matrix& gram, const Matrix& xty, double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative, got " + format_number(lambda));
  require(gram.rows() == gram.cols() && gram.rows() == xty.rows(), "normal equation shapes disagree");
  if (gram.rows() == 0) return Matrix::Zero(0, xty.cols());
  Matrix a = gram;
  a.diagonal().array() += lambda;
  Eigen::LLT<Matrix, Eigen::Lower> llt(a);
  const double eps = std::numeric_limits<double>::epsilon();
  if (llt.info() != Eigen::Success || llt.rcond() < eps * static_cast<double>(a.rows())) {
    if (lambda == 0.0)
      throw NumericalError("X^T X is singular at lambda = 0; use a positive regularization lambda");
    throw NumericalError("regularized normal equations are numerically singular at lambda = " +
                         format_number(lambda));
  }
  return llt.solve(xty);
}

inline Matrix gram_lower(const Matrix& x) {
  Matrix g = Matrix::Zero(x.cols(), x.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  return g;
}

/// argmin ||Y - XW||^2 + lambda ||W||^2 without an intercept.
inline Matrix ridge_closed_form(const Matrix& x, const Matrix& y, double lambda) {
  require(x.rows() == y.rows(), "X has " + std::to_string(x.rows()) + " rows but Y has " + std::to_string(y.rows()));
  return solve_normal_equations(gram_lower(x), x.transpose() * y, lambda);
}

// ---------------------------------------------------------------------------
// iterative solver

struct IterativeParams {
  double lr = 1e-4;
  int batch_size = 64;
  int max_epochs = 20000;
  double tol = 1e-12;
  std::uint64_t seed = 0;
};

enum class StopReason { converged, max_epochs };

struct IterativeFit {
  Matrix weights;
  int epochs = 0;
  StopReason reason = StopReason::max_epochs;
  double objective = 0.0;
};

/// (||Y - XW||^2 + lambda ||W||^2) / N
inline double ridge_objective(const Matrix& x, const Matrix& y, const Matrix& w, double lambda) {
  const double n = static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  return ((y - x * w).squaredNorm() + lambda * w.squaredNorm()) / n;
}

/// Mini-batch gradient descent on the mean-squared error plus lambda ||W||^2 / N,
/// starting from W = 0 and reshuffling rows every epoch.
inline IterativeFit fit_iterative(const Matrix& x, const Matrix& y, double lambda, const IterativeParams& params) {
  require(x.rows() == y.rows(), "X has " + std::to_string(x.rows()) + " rows but Y has " + std::to_string(y.rows()));
  require(x.rows() >= 1, "fit_iterative: no rows");
  require(params.lr > 0.0, "learning rate must be positive");
  require(params.batch_size >= 1, "batch size must be at least 1");
  require(params.max_epochs >= 1, "max_epochs must be at least 1");
  require(params.tol >= 0.0, "tol must be nonnegative");
  require(lambda >= 0.0, "lambda must be nonnegative");

  const Eigen::Index n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::mt19937_64 rng(params.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  IterativeFit fit;
  fit.weights = Matrix::Zero(x.cols(), y.cols());
  const double start = ridge_objective(x, y, fit.weights, lambda);
  double prev = start;
  int growing = 0;
  Matrix xb, yb, grad;
  for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += params.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(params.batch_size, n - start);
      xb.resize(len, x.cols());
      yb.resize(len, y.cols());
      for (Eigen::Index r = 0; r < len; ++r) {
        xb.row(r) = x.row(order[start + r]);
        yb.row(r) = y.row(order[start + r]);
      }
      grad.noalias() = xb.transpose() * (xb * fit.weights - yb);
      grad *= 2.0 / static_cast<double>(len);
      grad += (2.0 * lambda * inv_n) * fit.weights;
      fit.weights.noalias() -= params.lr * grad;
    }
    const double obj = ridge_objective(x, y, fit.weights, lambda);
    fit.epochs = epoch;
    fit.objective = obj;
    if (!std::isfinite(obj))
      throw NumericalError("iterative solver diverged at epoch " + std::to_string(epoch) +
                           " (non-finite objective); try a smaller learning rate");
    if (std::abs(prev - obj) < params.tol) {
      fit.reason = StopReason::converged;
      return fit;
    }
    // growth only counts once the objective is above its value at W = 0; below that,
    // epoch-to-epoch rises are mini-batch noise around the optimum
    growing = obj > prev && obj > start ? growing + 1 : 0;
    if (growing >= 5)
      throw NumericalError("iterative solver diverged: objective grew for 5 consecutive epochs; try a smaller "
                           "learning rate than " + format_number(params.lr));
    prev = obj;
  }
  fit.reason = StopReason::max_epochs;
  return fit;
}

// ---------------------------------------------------------------------------
// segment-level fitting and cross-validation

struct NormalEquations {
  Matrix gram;  // lower triangle of X^T X
  Matrix xty;
};

inline NormalEquations accumulate_normal_equations(const SegmentSet& set, const LagSpec& spec,
                                                   std::span<const std::size_t> which) {
  const Eigen::Index p = spec.size() * set.n_features();
  NormalEquations ne{Matrix::Zero(p, p), Matrix::Zero(p, set.n_channels())};
  for (auto k : which) {
    const auto& s = set.segments[k];
    const Matrix x = lagged_matrix(s.x, spec);
    ne.gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    ne.xty.noalias() += x.transpose() * s.y;
  }
  return ne;
}

inline Matrix stack_design(const SegmentSet& set, const LagSpec& spec, std::span<const std::size_t> which, Matrix* y) {
  const Eigen::Index w = set.window_samples;
  Matrix x(static_cast<Eigen::Index>(which.size()) * w, spec.size() * set.n_features());
  if (y) y->resize(x.rows(), set.n_channels());
  Eigen::Index row = 0;
  for (auto k : which) {
    const auto& s = set.segments[k];
    x.middleRows(row, w) = lagged_matrix(s.x, spec);
    if (y) y->middleRows(row, w) = s.y;
    row += w;
  }
  return x;
}

inline void check_segments(const SegmentSet& set, const LagSpec& spec) {
  require(!set.segments.empty(), "no segments to fit");
  require(set.fs_hz == spec.fs_hz, "segment sampling rate " + format_number(set.fs_hz) +
                                       " Hz does not match lag spec " + format_number(spec.fs_hz) + " Hz");
  for (const auto& s : set.segments)
    require(s.x.rows() == set.window_samples && s.y.rows() == set.window_samples &&
                s.x.cols() == set.n_features() && s.y.cols() == set.n_channels(),
            "segments do not share identical shapes");
}

/// Weights fitted on all segments at one lambda.
inline Matrix fit_segments(const SegmentSet& set, const LagSpec& spec, double lambda, Solver solver,
                           const IterativeParams& params = {}) {
  check_segments(set, spec);
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (solver == Solver::closed_form) {
    const auto ne = accumulate_normal_equations(set, spec, all);
    return solve_normal_equations(ne.gram, ne.xty, lambda);
  }
  Matrix y;
  const Matrix x = stack_design(set, spec, all, &y);
  return fit_iterative(x, y, lambda, params).weights;
}

struct CvReport {
  std::vector<double> grid;
  Matrix per_lambda_scores;  // |grid| x k
  double best_lambda = 0.0;
  std::vector<int> fold_assignment;
  Solver solver = Solver::closed_form;

  Vector mean_scores() const { return per_lambda_scores.rowwise().mean(); }
};

/// Mean across channels of the Pearson r; a constant channel scores 0.
inline double mean_channel_r(const Matrix& predicted, const Matrix& target) {
  double sum = 0.0;
  for (Eigen::Index e = 0; e < target.cols(); ++e) {
    try {
      sum += pearson_r(predicted.col(e), target.col(e));
    } catch (const DegenerateError&) {
    }
  }
  return target.cols() > 0 ? sum / static_cast<double>(target.cols()) : 0.0;
}

/// Index of the best mean score, ties resolved toward the larger lambda.
inline std::size_t select_lambda(const std::vector<double>& grid, const Vector& mean_scores) {
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double s = mean_scores[static_cast<Eigen::Index>(g)];
    const double b = mean_scores[static_cast<Eigen::Index>(best)];
    if (s > b || (s == b && grid[g] > grid[best])) best = g;
  }
  return best;
}

/// k-fold CV over contiguous blocks of segments in temporal order.
inline CvReport cross_validate(const SegmentSet& set, const LagSpec& spec, const std::vector<double>& grid, int k,
                               std::uint64_t seed, Solver solver, IterativeParams params = {}) {
  require(k >= 2, "cross-validation needs at least 2 folds, got " + std::to_string(k));
  require(!grid.empty(), "lambda grid is empty");
  for (double lam : grid) require(lam >= 0.0 && std::isfinite(lam), "lambda values must be nonnegative");
  require(set.size() >= static_cast<std::size_t>(k),
          "cross-validation with " + std::to_string(k) + " folds needs at least " + std::to_string(k) +
              " segments, got " + std::to_string(set.size()));
  check_segments(set, spec);

  const std::size_t n = set.size();
  CvReport rep;
  rep.grid = grid;
  rep.solver = solver;
  rep.per_lambda_scores = Matrix::Zero(static_cast<Eigen::Index>(grid.size()), k);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < n; ++s) {
    const auto f = static_cast<int>(s * static_cast<std::size_t>(k) / n);
    rep.fold_assignment.push_back(f);
    folds[f].push_back(s);
  }

  std::vector<NormalEquations> per_fold;
  if (solver == Solver::closed_form)
    for (const auto& f : folds) per_fold.push_back(accumulate_normal_equations(set, spec, f));

  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train;
    for (int g = 0; g < k; ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    Matrix y_val;
    const Matrix x_val = stack_design(set, spec, folds[f], &y_val);

    NormalEquations ne;
    Matrix x_train, y_train;
    if (solver == Solver::closed_form) {
      ne.gram = Matrix::Zero(x_val.cols(), x_val.cols());
      ne.xty = Matrix::Zero(x_val.cols(), y_val.cols());
      for (int g = 0; g < k; ++g) {
        if (g == f) continue;
        ne.gram.triangularView<Eigen::Lower>() += per_fold[g].gram;
        ne.xty += per_fold[g].xty;
      }
    } else {
      x_train = stack_design(set, spec, train, &y_train);
    }

    for (std::size_t g = 0; g < grid.size(); ++g) {
      Matrix w;
      if (solver == Solver::closed_form) {
        w = solve_normal_equations(ne.gram, ne.xty, grid[g]);
      } else {
        IterativeParams p = params;
        p.seed = seed + 7919u * static_cast<std::uint64_t>(f) + 104729u * static_cast<std::uint64_t>(g);
        w = fit_iterative(x_train, y_train, grid[g], p).weights;
      }
      rep.per_lambda_scores(static_cast<Eigen::Index>(g), f) = mean_channel_r(x_val * w, y_val);
    }
  }
  rep.best_lambda = grid[select_lambda(grid, rep.mean_scores())];
  return rep;
}

inline nlohmann::ordered_json to_json(const CvReport& rep) {
  nlohmann::ordered_json j;
  j["solver"] = std::string(solver_name(rep.solver));
  j["grid"] = rep.grid;
  j["per_lambda_scores"] = nlohmann::ordered_json::array();
  for (Eigen::Index g = 0; g < rep.per_lambda_scores.rows(); ++g) {
    std::vector<double> row;
    for (Eigen::Index f = 0; f < rep.per_lambda_scores.cols(); ++f) row.push_back(rep.per_lambda_scores(g, f));
    j["per_lambda_scores"].push_back(row);
  }
  const Vector mean = rep.mean_scores();
  j["mean_scores"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  j["best_lambda"] = rep.best_lambda;
  j["fold_assignment"] = rep.fold_assignment;
  return j;
}

}  // namespace trf
