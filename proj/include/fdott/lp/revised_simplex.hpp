#pragma once

// Revised simplex for min c^T x, A x = b, x >= 0 with sparse A.
//
// Keeps an explicit dense basis inverse (problems here have a few hundred rows)
// updated by elementary row operations and refactored periodically. solve()
// runs the two-phase primal method; resolve() re-optimizes for a new right-hand
// side with the dual simplex, starting from the current (dual feasible) basis.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"
#include "fdott/lp/dense_simplex.hpp"

namespace fdott::lp {

/// Column-compressed sparse matrix, built one column at a time.
class SparseColumns {
 public:
  explicit SparseColumns(int rows = 0) : rows_(rows) { start_.push_back(0); }

  int add_column(std::initializer_list<std::pair<int, double>> entries) {
    for (const auto& [r, v] : entries) push(r, v);
    return finish_column();
  }
  void push(int row, double value) {
    if (value == 0.0) return;
    row_.push_back(row);
    val_.push_back(value);
  }
  int finish_column() {
    start_.push_back(static_cast<int>(row_.size()));
    return cols() - 1;
  }

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return static_cast<int>(start_.size()) - 1; }
  [[nodiscard]] int begin(int j) const { return start_[static_cast<std::size_t>(j)]; }
  [[nodiscard]] int end(int j) const { return start_[static_cast<std::size_t>(j) + 1]; }
  [[nodiscard]] int row(int p) const { return row_[static_cast<std::size_t>(p)]; }
  [[nodiscard]] double value(int p) const { return val_[static_cast<std::size_t>(p)]; }

 private:
  int rows_;
  std::vector<int> start_, row_;
  std::vector<double> val_;
};

class RevisedSimplex {
 public:
  struct Basis {
    std::vector<int> head;
    Eigen::MatrixXd binv;
  };

  RevisedSimplex(SparseColumns a, Eigen::VectorXd c) : a_(std::move(a)), c_(std::move(c)) {
    m_ = a_.rows();
    n_ = a_.cols();
    if (c_.size() != n_) throw SolverError("revised simplex: cost length does not match columns");
    cscale_ = std::max(1.0, c_.cwiseAbs().maxCoeff());
    art_sign_.assign(static_cast<std::size_t>(m_), 1.0);
    cost_.setZero(n_ + m_);
  }

  LpStatus solve(const Eigen::VectorXd& b) {
    b_ = b;
    bscale_ = std::max(1.0, b_.cwiseAbs().maxCoeff());
    head_.resize(static_cast<std::size_t>(m_));
    pos_.assign(static_cast<std::size_t>(n_ + m_), -1);
    binv_.setZero(m_, m_);
    xb_.resize(m_);
    for (int r = 0; r < m_; ++r) {
      art_sign_[static_cast<std::size_t>(r)] = b_[r] < 0 ? -1.0 : 1.0;
      head_[static_cast<std::size_t>(r)] = n_ + r;
      pos_[static_cast<std::size_t>(n_ + r)] = r;
      binv_(r, r) = art_sign_[static_cast<std::size_t>(r)];
      xb_[r] = std::abs(b_[r]);
    }
    allow_artificial_ = true;
    cost_.setZero();
    cost_.tail(m_).setOnes();
    since_refactor_ = 0;
    compute_duals();
    if (!primal_loop()) throw SolverError("revised simplex: phase one unbounded");
    double infeas = 0.0;
    for (int r = 0; r < m_; ++r)
      if (head_[static_cast<std::size_t>(r)] >= n_) infeas += std::max(xb_[r], 0.0);
    if (infeas > 1e-8 * bscale_ * std::max(1, m_)) return status_ = LpStatus::kInfeasible;

    drive_out_artificials();
    allow_artificial_ = false;
    cost_.head(n_) = c_;
    cost_.tail(m_).setZero();
    compute_duals();
    status_ = primal_loop() ? LpStatus::kOptimal : LpStatus::kUnbounded;
    return status_;
  }

  /// Dual simplex from the current basis for a new right-hand side.
  LpStatus resolve(const Eigen::VectorXd& b) {
    if (head_.empty() && m_ > 0) return solve(b);
    b_ = b;
    bscale_ = std::max(1.0, b_.cwiseAbs().maxCoeff());
    xb_.noalias() = binv_ * b_;
    if (!dual_loop()) return status_ = LpStatus::kInfeasible;
    status_ = primal_loop() ? LpStatus::kOptimal : LpStatus::kUnbounded;
    return status_;
  }

  [[nodiscard]] Basis basis() const { return Basis{head_, binv_}; }

  void set_basis(const Basis& basis) {
    head_ = basis.head;
    binv_ = basis.binv;
    pos_.assign(static_cast<std::size_t>(n_ + m_), -1);
    for (int r = 0; r < m_; ++r) pos_[static_cast<std::size_t>(head_[static_cast<std::size_t>(r)])] = r;
    allow_artificial_ = false;
    cost_.head(n_) = c_;
    cost_.tail(m_).setZero();
    since_refactor_ = 0;
    compute_duals();
  }

  [[nodiscard]] LpStatus status() const { return status_; }
  [[nodiscard]] int rows() const { return m_; }
  [[nodiscard]] int cols() const { return n_; }
  [[nodiscard]] long iterations() const { return iterations_; }

  [[nodiscard]] double objective() const {
    double v = 0.0;
    for (int r = 0; r < m_; ++r) {
      const int j = head_[static_cast<std::size_t>(r)];
      if (j < n_) v += c_[j] * std::max(xb_[r], 0.0);
    }
    return v;
  }

  [[nodiscard]] Eigen::VectorXd primal() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (int r = 0; r < m_; ++r) {
      const int j = head_[static_cast<std::size_t>(r)];
      if (j < n_) x[j] = std::max(xb_[r], 0.0);
    }
    return x;
  }

  /// Row multipliers y with c - A^T y >= 0 at optimality.
  [[nodiscard]] const Eigen::VectorXd& duals() const { return y_; }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr int kDegenerateRun = 50;

  [[nodiscard]] double dot_col(const Eigen::VectorXd& v, int j) const {
    if (j >= n_) return art_sign_[static_cast<std::size_t>(j - n_)] * v[j - n_];
    double s = 0.0;
    for (int p = a_.begin(j); p < a_.end(j); ++p) s += v[a_.row(p)] * a_.value(p);
    return s;
  }

  void ftran(int j, Eigen::VectorXd& w) const {
    if (j >= n_) {
      w = art_sign_[static_cast<std::size_t>(j - n_)] * binv_.col(j - n_);
      return;
    }
    w.setZero(m_);
    for (int p = a_.begin(j); p < a_.end(j); ++p) w.noalias() += a_.value(p) * binv_.col(a_.row(p));
  }

  [[nodiscard]] bool enterable(int j) const {
    return pos_[static_cast<std::size_t>(j)] < 0 && (j < n_ || allow_artificial_);
  }

  void compute_duals() {
    Eigen::VectorXd cb(m_);
    for (int r = 0; r < m_; ++r) cb[r] = cost_[head_[static_cast<std::size_t>(r)]];
    y_.noalias() = binv_.transpose() * cb;
  }

  void refactor() {
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(m_, m_);
    for (int r = 0; r < m_; ++r) {
      const int j = head_[static_cast<std::size_t>(r)];
      if (j >= n_) {
        bmat(j - n_, r) = art_sign_[static_cast<std::size_t>(j - n_)];
      } else {
        for (int p = a_.begin(j); p < a_.end(j); ++p) bmat(a_.row(p), r) = a_.value(p);
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw SolverError("revised simplex: singular basis at refactorization");
    xb_.noalias() = binv_ * b_;
    compute_duals();
    since_refactor_ = 0;
  }

  // Basis change: column q enters at position r with w = B^{-1} a_q.
  // Returns true when the pivot triggered a refactorization.
  bool pivot(int r, int q, const Eigen::VectorXd& w) {
    const double wr = w[r];
    const double theta = xb_[r] / wr;
    xb_.noalias() -= theta * w;
    xb_[r] = theta;
    Eigen::RowVectorXd row_r = binv_.row(r) / wr;
    const double dq = cost_[q] - dot_col(y_, q);
    y_.noalias() += dq * row_r.transpose();
    Eigen::VectorXd wm = w;
    wm[r] -= 1.0;
    binv_.noalias() -= wm * row_r;
    const int leaving = head_[static_cast<std::size_t>(r)];
    pos_[static_cast<std::size_t>(leaving)] = -1;
    head_[static_cast<std::size_t>(r)] = q;
    pos_[static_cast<std::size_t>(q)] = r;
    ++iterations_;
    if (++since_refactor_ >= std::max(100, 2 * m_)) {
      refactor();
      return true;
    }
    return false;
  }

  [[nodiscard]] int iteration_cap() const { return 50 * (m_ + n_) + 1000; }

  // Primal simplex from a primal feasible basis. False if unbounded.
  bool primal_loop() {
    const double dtol = 1e-9 * cscale_;
    int degenerate = 0;
    Eigen::VectorXd w(m_);
    for (int it = 0;; ++it) {
      if (it > iteration_cap()) throw SolverError("revised simplex: primal iteration limit reached");
      const bool bland = degenerate > kDegenerateRun;
      int q = -1;
      double best = -dtol;
      for (int j = 0; j < n_ + m_; ++j) {
        if (!enterable(j)) continue;
        const double d = cost_[j] - dot_col(y_, j);
        if (d < best) {
          q = j;
          if (bland) break;
          best = d;
        }
      }
      if (q < 0) return true;
      ftran(q, w);
      int r = -1;
      double theta = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (w[i] <= kPivotTol) continue;
        const double ratio = std::max(xb_[i], 0.0) / w[i];
        if (r < 0 || ratio < theta - 1e-12 * std::max(1.0, theta)) {
          theta = ratio;
          r = i;
        } else if (ratio <= theta + 1e-12 * std::max(1.0, theta)) {
          const bool better = bland ? head_[static_cast<std::size_t>(i)] < head_[static_cast<std::size_t>(r)]
                                    : w[i] > w[r];
          if (better) {
            theta = std::min(theta, ratio);
            r = i;
          }
        }
      }
      if (r < 0) return false;
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
      xb_ = xb_.cwiseMax(0.0);
      pivot(r, q, w);
    }
  }

  // Dual simplex from a dual feasible basis, steepest-edge row choice with
  // exact row norms of B^{-1}. False if primal infeasible.
  bool dual_loop() {
    const double ptol = 1e-9 * bscale_;
    int degenerate = 0;
    Eigen::VectorXd w(m_);
    Eigen::VectorXd rho(m_);
    std::vector<double> d(static_cast<std::size_t>(n_ + m_));
    std::vector<double> alpha(static_cast<std::size_t>(n_ + m_));
    for (int j = 0; j < n_ + m_; ++j) d[static_cast<std::size_t>(j)] = cost_[j] - dot_col(y_, j);
    Eigen::VectorXd norms = binv_.rowwise().squaredNorm();
    for (int it = 0;; ++it) {
      if (it > iteration_cap()) throw SolverError("revised simplex: dual iteration limit reached");
      const bool bland = degenerate > kDegenerateRun;
      int r = -1;
      double worst = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (xb_[i] >= -ptol) continue;
        if (head_[static_cast<std::size_t>(i)] >= n_ && xb_[i] > -1e-7 * bscale_) continue;
        if (bland) {
          if (r < 0 || head_[static_cast<std::size_t>(i)] < head_[static_cast<std::size_t>(r)]) r = i;
        } else {
          const double score = xb_[i] * xb_[i] / std::max(norms[i], 1e-12);
          if (score > worst) {
            worst = score;
            r = i;
          }
        }
      }
      if (r < 0) return true;
      rho = binv_.row(r).transpose();
      int q = -1;
      double best = std::numeric_limits<double>::infinity();
      double best_alpha = 0.0;
      for (int j = 0; j < n_ + m_; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (!enterable(j)) {
          alpha[uj] = 0.0;
          continue;
        }
        const double a = dot_col(rho, j);
        alpha[uj] = a;
        if (a >= -kPivotTol) continue;
        const double ratio = std::max(d[uj], 0.0) / -a;
        const double slack = 1e-12 * std::max(1.0, best);
        if (q < 0 || ratio < best - slack) {
          best = ratio;
          q = j;
          best_alpha = a;
        } else if (!bland && ratio <= best + slack && -a > -best_alpha) {
          best = std::min(best, ratio);
          q = j;
          best_alpha = a;
        }
      }
      if (q < 0) return false;
      degenerate = best <= 1e-12 ? degenerate + 1 : 0;
      ftran(q, w);
      if (std::abs(w[r]) <= kPivotTol) {
        refactor();
        for (int j = 0; j < n_ + m_; ++j) d[static_cast<std::size_t>(j)] = cost_[j] - dot_col(y_, j);
        norms = binv_.rowwise().squaredNorm();
        continue;
      }
      const double step = d[static_cast<std::size_t>(q)] / alpha[static_cast<std::size_t>(q)];
      const bool refactored = pivot(r, q, w);
      if (refactored) {
        for (int j = 0; j < n_ + m_; ++j) d[static_cast<std::size_t>(j)] = cost_[j] - dot_col(y_, j);
      } else {
        for (int j = 0; j < n_ + m_; ++j) d[static_cast<std::size_t>(j)] -= step * alpha[static_cast<std::size_t>(j)];
      }
      d[static_cast<std::size_t>(q)] = 0.0;
      norms = binv_.rowwise().squaredNorm();
    }
  }

  void drive_out_artificials() {
    Eigen::VectorXd w(m_);
    for (int r = 0; r < m_; ++r) {
      if (head_[static_cast<std::size_t>(r)] < n_) continue;
      const Eigen::VectorXd rho = binv_.row(r).transpose();
      int q = -1;
      double best = 1e-7;
      for (int j = 0; j < n_; ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
        const double alpha = std::abs(dot_col(rho, j));
        if (alpha > best) {
          best = alpha;
          q = j;
        }
      }
      if (q < 0) continue;  // redundant row: the artificial stays basic at zero
      ftran(q, w);
      pivot(r, q, w);
    }
    refactor();
  }

  SparseColumns a_;
  Eigen::VectorXd c_, b_, cost_, xb_, y_;
  Eigen::MatrixXd binv_;
  std::vector<int> head_, pos_;
  std::vector<double> art_sign_;
  int m_ = 0, n_ = 0;
  double cscale_ = 1.0, bscale_ = 1.0;
  bool allow_artificial_ = true;
  int since_refactor_ = 0;
  long iterations_ = 0;
  LpStatus status_ = LpStatus::kInfeasible;
};

}  // namespace fdott::lp
