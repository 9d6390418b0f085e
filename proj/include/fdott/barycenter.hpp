#pragma once

// Fixed-support OT barycenter as a linear program over K chained plans, its
// dual solutions, and the limit functional max_{u in Psi*} sum_k <u^k, h^k>.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"
#include "fdott/lp/revised_simplex.hpp"
#include "fdott/measures.hpp"
#include "fdott/ot.hpp"

namespace fdott {

struct BarycenterSolution {
  double value = 0.0;
  ProbMeasure center;
  std::vector<Matrix> plans;    // K plans, N x N
  std::vector<Vector> duals_u;  // K vectors
  std::vector<Vector> duals_v;  // K-1 vectors; v^0 = v^K = 0 implied
};

namespace detail {

inline Vector checked_weights(const Vector& w, std::size_t k) {
  if (static_cast<std::size_t>(w.size()) != k)
    throw InputError("expected " + std::to_string(k) + " barycenter weights, got " + std::to_string(w.size()));
  if (!w.allFinite() || (w.array() <= 0.0).any()) throw InputError("barycenter weights must be positive");
  const double s = w.sum();
  if (std::abs(s - 1.0) > kRenormalizeTolerance)
    throw InputError("barycenter weights must sum to 1, got " + std::to_string(s));
  return w / s;
}

inline Vector uniform_weights(std::size_t k) {
  return Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
}

// Chained LP: block k holds the N x N plan of group k. Rows are the K*N row
// sums followed by, for each link (k-1, k), the N-1 equalities colsum(k-1) =
// colsum(k) (the last column is implied by equal masses). Cells listed in
// `free_cells[k]` get an extra negated column, making them sign-free.
inline lp::RevisedSimplex chained_lp(const Vector& w, const CostMatrix& c, int k_groups,
                                     const std::vector<Matrix>* free_cells = nullptr,
                                     double free_floor = 0.0) {
  const int n = static_cast<int>(c.size());
  const int link_rows = n - 1;
  const int rows = k_groups * n + (k_groups - 1) * link_rows;
  lp::SparseColumns a(rows);
  std::vector<double> cost;
  cost.reserve(static_cast<std::size_t>(k_groups) * n * n);
  for (int k = 0; k < k_groups; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const bool is_free = free_cells && (*free_cells)[static_cast<std::size_t>(k)](i, j) > free_floor;
        for (int sgn = 0; sgn < (is_free ? 2 : 1); ++sgn) {
          const double s = sgn == 0 ? 1.0 : -1.0;
          a.push(k * n + i, s);
          if (j < link_rows) {
            if (k + 1 < k_groups) a.push(k_groups * n + k * link_rows + j, s);
            if (k > 0) a.push(k_groups * n + (k - 1) * link_rows + j, -s);
          }
          a.finish_column();
          cost.push_back(s * w[k] * c(i, j));
        }
      }
  return lp::RevisedSimplex(std::move(a), Eigen::Map<Vector>(cost.data(), static_cast<Eigen::Index>(cost.size())));
}

}  // namespace detail

inline BarycenterSolution solve_barycenter(const std::vector<ProbMeasure>& mus, const Vector& weights,
                                           const CostMatrix& c) {
  const std::size_t kk = mus.size();
  if (kk < 2) throw InputError("barycenter needs at least two measures");
  detail::require_identifiable(c);
  const Vector w = detail::checked_weights(weights, kk);
  const int n = static_cast<int>(c.size());
  for (const auto& mu : mus)
    if (mu.size() != n) throw InputError("measure length does not match cost matrix size");
  const int k_groups = static_cast<int>(kk);

  lp::RevisedSimplex lp = detail::chained_lp(w, c, k_groups);
  Vector b = Vector::Zero(lp.rows());
  for (int k = 0; k < k_groups; ++k) b.segment(k * n, n) = mus[static_cast<std::size_t>(k)].weights();
  if (lp.solve(b) != lp::LpStatus::kOptimal) throw SolverError("barycenter LP not solved to optimality");

  BarycenterSolution sol;
  const Vector x = lp.primal();
  const Vector& y = lp.duals();
  sol.value = lp.objective();
  for (int k = 0; k < k_groups; ++k) {
    Matrix plan(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) plan(i, j) = x[(k * n + i) * n + j];
    sol.plans.push_back(std::move(plan));
    sol.duals_u.push_back(y.segment(k * n, n));
  }
  for (int l = 0; l + 1 < k_groups; ++l) {
    Vector v = Vector::Zero(n);
    v.head(n - 1) = y.segment(k_groups * n + l * (n - 1), n - 1);
    sol.duals_v.push_back(std::move(v));
  }
  Vector center = sol.plans.front().colwise().sum().transpose().cwiseMax(0.0);
  sol.center = ProbMeasure(center / center.sum());
  return sol;
}

inline BarycenterSolution solve_barycenter(const std::vector<ProbMeasure>& mus, const CostMatrix& c) {
  return solve_barycenter(mus, detail::uniform_weights(mus.size()), c);
}

/// max sum_k <u^k, h^k> over Psi* when all groups share one fully supported
/// measure. There Psi* reduces to {sum_k u^k = 0, u^k_i - u^k_j <= w_k c_ij}
/// (the chain potentials are forced to v^k - v^{k-1} = -u^k), whose LP dual is
///   min sum_k w_k <c, f^k>  s.t.  out(f^k) - in(f^k) + lambda = h^k,  f >= 0.
/// Built once per (w, c); value() may be called concurrently.
class NullPsiSolver {
 public:
  NullPsiSolver(const Vector& weights, const CostMatrix& c)
      : k_(static_cast<int>(weights.size())), n_(static_cast<int>(c.size())) {
    if (k_ < 2) throw InputError("barycenter functional needs at least two groups");
    detail::require_identifiable(c);
    const Vector w = detail::checked_weights(weights, static_cast<std::size_t>(k_));
    if (n_ == 1) return;
    // Row (k, l) sits at k*n + l - (k > 0 ? k : 0) after dropping (k, 0), k >= 1.
    auto row = [&](int k, int l) { return k == 0 ? l : k * n_ + l - k; };
    // Arc (i, j) is implied when some m has c_im + c_mj <= c_ij.
    std::vector<char> needed(static_cast<std::size_t>(n_) * n_, 0);
    const double tol = 1e-12 * std::max(1.0, c.max_cost());
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        if (i == j) continue;
        bool implied = false;
        for (int m = 0; m < n_ && !implied; ++m)
          implied = m != i && m != j && c(i, m) + c(m, j) <= c(i, j) + tol;
        needed[static_cast<std::size_t>(i) * n_ + j] = implied ? 0 : 1;
      }
    lp::SparseColumns a(k_ * n_ - (k_ - 1));
    std::vector<double> cost;
    for (int k = 0; k < k_; ++k)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          if (!needed[static_cast<std::size_t>(i) * n_ + j]) continue;
          if (k == 0 || i > 0) a.push(row(k, i), 1.0);
          if (k == 0 || j > 0) a.push(row(k, j), -1.0);
          a.finish_column();
          cost.push_back(w[k] * c(i, j));
        }
    for (int sgn = 0; sgn < 2; ++sgn)
      for (int l = 0; l < n_; ++l) {
        const double s = sgn == 0 ? 1.0 : -1.0;
        for (int k = 0; k < k_; ++k)
          if (k == 0 || l > 0) a.push(row(k, l), s);
        a.finish_column();
        cost.push_back(0.0);
      }
    lp_ = std::make_unique<lp::RevisedSimplex>(std::move(a),
                                               Eigen::Map<Vector>(cost.data(), static_cast<Eigen::Index>(cost.size())));
    Matrix href(k_, n_);
    for (int k = 0; k < k_; ++k)
      for (int l = 0; l < n_; ++l) href(k, l) = static_cast<double>((5 * l + 3 * k + 1) % 7);
    href.colwise() -= href.rowwise().mean();
    if (lp_->solve(rhs(href)) != lp::LpStatus::kOptimal)
      throw SolverError("barycenter functional: reference problem not solved to optimality");
    ref_ = lp_->basis();
  }

  [[nodiscard]] int groups() const { return k_; }
  [[nodiscard]] int points() const { return n_; }

  /// h is K x N with zero row sums.
  [[nodiscard]] double value(const Eigen::Ref<const Matrix>& h) const {
    if (h.rows() != k_ || h.cols() != n_) throw InputError("barycenter functional: direction has wrong shape");
    if (!lp_) return 0.0;
    lp::RevisedSimplex work = *lp_;
    work.set_basis(ref_);
    if (work.resolve(rhs(h)) != lp::LpStatus::kOptimal)
      throw SolverError("barycenter functional LP failed (rows of h must sum to zero)");
    return work.objective();
  }

 private:
  [[nodiscard]] Vector rhs(const Eigen::Ref<const Matrix>& h) const {
    Vector b(k_ * n_ - (k_ - 1));
    Eigen::Index p = 0;
    for (int k = 0; k < k_; ++k)
      for (int l = (k == 0 ? 0 : 1); l < n_; ++l) b[p++] = h(k, l);
    return b;
  }

  int k_, n_;
  std::unique_ptr<lp::RevisedSimplex> lp_;
  lp::RevisedSimplex::Basis ref_;
};

/// Same functional over the optimal face of Psi at arbitrary mus: the dual
/// bundle is pinned by complementary slackness against the solved plans.
class PsiFaceSolver {
 public:
  PsiFaceSolver(const std::vector<ProbMeasure>& mus, const Vector& weights, const CostMatrix& c)
      : k_(static_cast<int>(mus.size())), n_(static_cast<int>(c.size())) {
    const BarycenterSolution bary = solve_barycenter(mus, weights, c);
    const Vector w = detail::checked_weights(weights, mus.size());
    lp_ = std::make_unique<lp::RevisedSimplex>(detail::chained_lp(w, c, k_, &bary.plans, 1e-13));
    Matrix href = Matrix::Zero(k_, n_);
    if (lp_->solve(rhs(href)) != lp::LpStatus::kOptimal)
      throw SolverError("barycenter face: reference problem not solved to optimality");
    ref_ = lp_->basis();
  }

  [[nodiscard]] double value(const Eigen::Ref<const Matrix>& h) const {
    if (h.rows() != k_ || h.cols() != n_) throw InputError("barycenter functional: direction has wrong shape");
    lp::RevisedSimplex work = *lp_;
    work.set_basis(ref_);
    if (work.resolve(rhs(h)) != lp::LpStatus::kOptimal)
      throw SolverError("barycenter face LP failed (direction must vanish off the supports)");
    return work.objective();
  }

 private:
  [[nodiscard]] Vector rhs(const Eigen::Ref<const Matrix>& h) const {
    Vector b = Vector::Zero(lp_->rows());
    for (int k = 0; k < k_; ++k) b.segment(k * n_, n_) = h.row(k).transpose();
    return b;
  }

  int k_, n_;
  std::unique_ptr<lp::RevisedSimplex> lp_;
  lp::RevisedSimplex::Basis ref_;
};

inline double psi_limit_functional(const Matrix& h, const std::vector<ProbMeasure>& mus, const Vector& weights,
                                   const CostMatrix& c, bool assume_null) {
  const Eigen::Index k = static_cast<Eigen::Index>(mus.size());
  if (h.rows() != k || h.cols() != c.size()) throw InputError("barycenter functional: direction has wrong shape");
  for (Eigen::Index r = 0; r < k; ++r)
    if (std::abs(h.row(r).sum()) > kMassTolerance * std::max(1.0, h.row(r).cwiseAbs().sum()))
      throw InputError("barycenter functional: row " + std::to_string(r) + " of h does not sum to zero");
  if (!assume_null) return PsiFaceSolver(mus, weights, c).value(h);
  for (Eigen::Index r = 1; r < k; ++r)
    if ((mus[static_cast<std::size_t>(r)].weights() - mus[0].weights()).cwiseAbs().maxCoeff() > kMassTolerance)
      throw InputError("assume_null requires identical measures");
  if ((mus[0].weights().array() <= 0.0).any())
    throw InputError("support mismatch: the common measure must have full support; restrict the ground space "
                     "to the joint support first");
  return NullPsiSolver(weights, c).value(h);
}

}  // namespace fdott
