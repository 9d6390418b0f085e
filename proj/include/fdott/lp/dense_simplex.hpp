#pragma once

// Dense-tableau two-phase simplex with Bland's rule. Slow and simple; used as
// the independent reference solver in tests and in `fdott oracle`.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"

namespace fdott::lp {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

struct DenseLp {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<RowSense> sense;  // defaults to equality when empty
  std::vector<bool> free_var;   // defaults to x >= 0 when empty
  bool maximize = false;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct DenseLpResult {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
};

inline DenseLpResult solve_dense_lp(const DenseLp& lp, double tol = 1e-11) {
  const Eigen::Index m = lp.a.rows(), n = lp.a.cols();
  auto is_free = [&](Eigen::Index j) { return !lp.free_var.empty() && lp.free_var[static_cast<std::size_t>(j)]; };
  auto sense = [&](Eigen::Index i) { return lp.sense.empty() ? RowSense::kEqual : lp.sense[static_cast<std::size_t>(i)]; };

  // Column layout: structural (+ negative parts of free vars), slacks, artificials.
  std::vector<Eigen::Index> neg_col(static_cast<std::size_t>(n), -1);
  Eigen::Index cols = n;
  for (Eigen::Index j = 0; j < n; ++j)
    if (is_free(j)) neg_col[static_cast<std::size_t>(j)] = cols++;
  std::vector<Eigen::Index> slack_col(static_cast<std::size_t>(m), -1);
  for (Eigen::Index i = 0; i < m; ++i)
    if (sense(i) != RowSense::kEqual) slack_col[static_cast<std::size_t>(i)] = cols++;
  const Eigen::Index first_art = cols;
  cols += m;

  // Tableau rows 0..m-1 are constraints, row m is the objective; last column is the rhs.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double cj = lp.maximize ? -lp.c[j] : lp.c[j];
    cost[j] = cj;
    if (neg_col[static_cast<std::size_t>(j)] >= 0) cost[neg_col[static_cast<std::size_t>(j)]] = -cj;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double flip = lp.b[i] < 0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      t(i, j) = flip * lp.a(i, j);
      if (neg_col[static_cast<std::size_t>(j)] >= 0) t(i, neg_col[static_cast<std::size_t>(j)]) = -flip * lp.a(i, j);
    }
    if (slack_col[static_cast<std::size_t>(i)] >= 0)
      t(i, slack_col[static_cast<std::size_t>(i)]) = flip * (sense(i) == RowSense::kLessEqual ? 1.0 : -1.0);
    t(i, first_art + i) = 1.0;
    t(i, cols) = flip * lp.b[i];
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = first_art + i;
  std::vector<bool> active_row(static_cast<std::size_t>(m), true);

  auto pivot = [&](Eigen::Index r, Eigen::Index q) {
    t.row(r) /= t(r, q);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != r && t(i, q) != 0.0) t.row(i) -= t(i, q) * t.row(r);
    basis[static_cast<std::size_t>(r)] = q;
  };

  auto set_objective = [&](const Eigen::VectorXd& obj) {
    t.row(m).setZero();
    t.row(m).head(cols) = obj.transpose();
    for (Eigen::Index i = 0; i < m; ++i)
      if (active_row[static_cast<std::size_t>(i)]) {
        const double cb = obj[basis[static_cast<std::size_t>(i)]];
        if (cb != 0.0) t.row(m) -= cb * t.row(i);
      }
  };

  // Returns false if unbounded.
  auto run = [&](Eigen::Index allowed_cols) {
    const long max_iter = 100000;
    for (long it = 0; it < max_iter; ++it) {
      Eigen::Index q = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j)
        if (t(m, j) < -tol) {
          q = j;
          break;
        }
      if (q < 0) return true;
      Eigen::Index r = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!active_row[static_cast<std::size_t>(i)] || t(i, q) <= tol) continue;
        const double ratio = t(i, cols) / t(i, q);
        if (r < 0 || ratio < best - tol ||
            (ratio <= best + tol && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(r)])) {
          best = std::min(best, ratio);
          r = i;
        }
      }
      if (r < 0) return false;
      pivot(r, q);
    }
    throw SolverError("dense simplex: iteration limit reached");
  };

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
  phase1.tail(m).setOnes();
  set_objective(phase1);
  run(cols);
  DenseLpResult res;
  const double scale = 1.0 + lp.b.cwiseAbs().sum();
  if (-t(m, cols) > 1e-9 * scale) {
    res.status = LpStatus::kInfeasible;
    return res;
  }
  // Drive artificials out of the basis or retire redundant rows.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < first_art) continue;
    Eigen::Index q = -1;
    for (Eigen::Index j = 0; j < first_art; ++j)
      if (std::abs(t(i, j)) > 1e-9) {
        q = j;
        break;
      }
    if (q >= 0) pivot(i, q);
    else active_row[static_cast<std::size_t>(i)] = false;
  }
  set_objective(cost);
  if (!run(first_art)) {
    res.status = LpStatus::kUnbounded;
    return res;
  }

  Eigen::VectorXd xs = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index i = 0; i < m; ++i)
    if (active_row[static_cast<std::size_t>(i)]) xs[basis[static_cast<std::size_t>(i)]] = t(i, cols);
  res.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    res.x[j] = xs[j];
    if (neg_col[static_cast<std::size_t>(j)] >= 0) res.x[j] -= xs[neg_col[static_cast<std::size_t>(j)]];
  }
  res.objective = lp.c.dot(res.x);
  res.status = LpStatus::kOptimal;
  return res;
}

}  // namespace fdott::lp
