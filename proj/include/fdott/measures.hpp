#pragma once

// Ground spaces, finitely supported measures and the multinomial covariance.
//
// Points of the ground space are the indices 0..N-1; all geometry lives in
// CostMatrix. Measures are dense length-N vectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"

namespace fdott {

/// Absolute tolerance for mass-balance checks.
inline constexpr double kMassTolerance = 1e-9;
/// Inputs within this distance of the target mass are renormalized, beyond it rejected.
inline constexpr double kRenormalizeTolerance = 1e-6;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class CostMatrix {
 public:
  CostMatrix() = default;

  explicit CostMatrix(Matrix costs) : costs_(std::move(costs)) {
    if (costs_.rows() == 0 || costs_.rows() != costs_.cols()) {
      throw InputError("cost matrix must be square and non-empty, got " +
                       std::to_string(costs_.rows()) + "x" + std::to_string(costs_.cols()));
    }
    if (!costs_.allFinite()) throw InputError("cost matrix has non-finite entries");
    if ((costs_.array() < 0.0).any()) throw InputError("cost matrix has negative entries");
    classify();
  }

  [[nodiscard]] Eigen::Index size() const { return costs_.rows(); }
  [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return costs_(i, j); }
  [[nodiscard]] const Matrix& matrix() const { return costs_; }
  [[nodiscard]] double max_cost() const { return max_cost_; }
  [[nodiscard]] bool is_identifiable() const { return identifiable_; }
  [[nodiscard]] bool is_symmetric() const { return symmetric_; }
  [[nodiscard]] bool is_metric() const { return metric_; }

  /// Cost matrix restricted to the given points (in the given order).
  [[nodiscard]] CostMatrix restricted(const std::vector<Eigen::Index>& points) const {
    const auto m = static_cast<Eigen::Index>(points.size());
    Matrix sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = costs_(points[a], points[b]);
    return CostMatrix(std::move(sub));
  }

 private:
  void classify() {
    const Eigen::Index n = costs_.rows();
    max_cost_ = costs_.maxCoeff();
    const double slack = 1e-12 * std::max(1.0, max_cost_);

    identifiable_ = true;
    for (Eigen::Index i = 0; i < n && identifiable_; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if ((costs_(i, j) == 0.0) != (i == j)) {
          identifiable_ = false;
          break;
        }

    symmetric_ = true;
    for (Eigen::Index i = 0; i < n && symmetric_; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (std::abs(costs_(i, j) - costs_(j, i)) > slack) {
          symmetric_ = false;
          break;
        }

    metric_ = identifiable_ && symmetric_;
    for (Eigen::Index r = 0; r < n && metric_; ++r)
      for (Eigen::Index i = 0; i < n && metric_; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (costs_(i, j) > costs_(i, r) + costs_(r, j) + slack) {
            metric_ = false;
            break;
          }
  }

  Matrix costs_;
  double max_cost_ = 0.0;
  bool identifiable_ = false;
  bool symmetric_ = false;
  bool metric_ = false;
};

namespace detail {

inline Vector checked_nonnegative(Vector w, const char* what) {
  if (w.size() == 0) throw InputError(std::string(what) + ": empty weight vector");
  if (!w.allFinite()) throw InputError(std::string(what) + ": non-finite weights");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < -kMassTolerance)
      throw InputError(std::string(what) + ": negative weight " + std::to_string(w[i]) +
                       " at index " + std::to_string(i));
    if (w[i] < 0.0) w[i] = 0.0;
  }
  return w;
}

}  // namespace detail

/// Element of the probability simplex.
class ProbMeasure {
 public:
  ProbMeasure() = default;

  explicit ProbMeasure(Vector weights)
      : weights_(detail::checked_nonnegative(std::move(weights), "probability measure")) {
    const double mass = weights_.sum();
    if (std::abs(mass - 1.0) > kRenormalizeTolerance)
      throw InputError("probability measure has mass " + std::to_string(mass));
    weights_ /= mass;
  }

  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] Eigen::Index size() const { return weights_.size(); }
  [[nodiscard]] double operator[](Eigen::Index i) const { return weights_[i]; }

  [[nodiscard]] std::vector<Eigen::Index> support() const {
    std::vector<Eigen::Index> s;
    for (Eigen::Index i = 0; i < weights_.size(); ++i)
      if (weights_[i] > 0.0) s.push_back(i);
    return s;
  }

 private:
  Vector weights_;
};

/// Nonnegative measure of arbitrary total mass E.
class NonNegMeasure {
 public:
  NonNegMeasure() = default;

  explicit NonNegMeasure(Vector weights)
      : weights_(detail::checked_nonnegative(std::move(weights), "nonnegative measure")),
        total_mass_(weights_.sum()) {}

  NonNegMeasure(const ProbMeasure& p) : weights_(p.weights()), total_mass_(1.0) {}  // NOLINT

  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] double total_mass() const { return total_mass_; }
  [[nodiscard]] Eigen::Index size() const { return weights_.size(); }

 private:
  Vector weights_;
  double total_mass_ = 0.0;
};

/// Element of the zero-sum hyperplane, with its Jordan decomposition.
class SignedMeasure {
 public:
  SignedMeasure() = default;

  explicit SignedMeasure(Vector weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw InputError("signed measure: empty weight vector");
    if (!weights_.allFinite()) throw InputError("signed measure: non-finite weights");
    const double scale = std::max(1.0, weights_.lpNorm<1>());
    if (std::abs(weights_.sum()) > kMassTolerance * scale)
      throw InputError("signed measure does not sum to zero (sum " +
                       std::to_string(weights_.sum()) + ")");
  }

  static SignedMeasure zero(Eigen::Index n) { return SignedMeasure(Vector::Zero(n)); }

  static SignedMeasure difference(const ProbMeasure& p, const ProbMeasure& q) {
    return SignedMeasure(p.weights() - q.weights());
  }

  [[nodiscard]] const Vector& weights() const { return weights_; }
  [[nodiscard]] Eigen::Index size() const { return weights_.size(); }
  [[nodiscard]] Vector jordan_plus() const { return weights_.cwiseMax(0.0); }
  [[nodiscard]] Vector jordan_minus() const { return (-weights_).cwiseMax(0.0); }

 private:
  Vector weights_;
};

/// Category counts of K independent samples over a ground space of N points.
class GroupSamples {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  GroupSamples() = default;

  explicit GroupSamples(Counts counts) : counts_(std::move(counts)) {
    if (counts_.rows() == 0 || counts_.cols() == 0)
      throw InputError("group samples: need at least one group and one category");
    if ((counts_.array() < 0).any()) throw InputError("group samples: negative count");
    sizes_.resize(static_cast<std::size_t>(counts_.rows()));
    for (Eigen::Index k = 0; k < counts_.rows(); ++k)
      sizes_[static_cast<std::size_t>(k)] = counts_.row(k).sum();
  }

  [[nodiscard]] Eigen::Index n_groups() const { return counts_.rows(); }
  [[nodiscard]] Eigen::Index n_points() const { return counts_.cols(); }
  [[nodiscard]] const Counts& counts() const { return counts_; }
  [[nodiscard]] const std::vector<std::int64_t>& sizes() const { return sizes_; }

 private:
  Counts counts_;
  std::vector<std::int64_t> sizes_;
};

/// Empirical probability vector of one group.
inline ProbMeasure empirical_measure(const GroupSamples& samples, Eigen::Index group) {
  if (group < 0 || group >= samples.n_groups())
    throw InputError("group index " + std::to_string(group) + " out of range");
  const auto n = samples.sizes()[static_cast<std::size_t>(group)];
  if (n < 1) throw InputError("empty sample in group " + std::to_string(group));
  Vector w = samples.counts().row(group).transpose().cast<double>() / static_cast<double>(n);
  return ProbMeasure(std::move(w));
}

/// Stacks all empirical measures as the rows of a K x N matrix.
inline Matrix empirical_measures(const GroupSamples& samples) {
  Matrix m(samples.n_groups(), samples.n_points());
  for (Eigen::Index k = 0; k < samples.n_groups(); ++k)
    m.row(k) = empirical_measure(samples, k).weights().transpose();
  return m;
}

/// Covariance of one multinomial draw: diag(mu) - mu mu^T.
inline Matrix multinomial_sigma(const ProbMeasure& mu) {
  const Vector& w = mu.weights();
  Matrix sigma = -w * w.transpose();
  sigma.diagonal() += w;
  return sigma;
}

/// Square-root factor A = diag(sqrt mu) (I - sqrt mu sqrt mu^T), so that A A^T = Sigma(mu).
inline Matrix gaussian_factor(const ProbMeasure& mu) {
  const Vector s = mu.weights().cwiseSqrt();
  const Eigen::Index n = s.size();
  Matrix a = Matrix::Identity(n, n) - s * s.transpose();
  return s.asDiagonal() * a;
}

/// Computes gaussian_factor(mu) * z in O(N) given sqrt_mu = sqrt(mu).
inline void apply_gaussian_factor(const Eigen::Ref<const Vector>& sqrt_mu,
                                  const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) {
  const double proj = sqrt_mu.dot(z);
  out = sqrt_mu.cwiseProduct(z - proj * sqrt_mu);
}

/// Euclidean distances between the points of {1..side}^dims, enumerated row-major.
inline CostMatrix grid_euclidean_cost(int side, int dims) {
  if (side < 1 || dims < 1) throw InputError("grid needs side >= 1 and dims >= 1");
  Eigen::Index n = 1;
  for (int d = 0; d < dims; ++d) n *= side;
  Eigen::MatrixXi coords(n, dims);
  for (Eigen::Index p = 0; p < n; ++p) {
    Eigen::Index rest = p;
    for (int d = dims - 1; d >= 0; --d) {
      coords(p, d) = static_cast<int>(rest % side) + 1;
      rest /= side;
    }
  }
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      c(i, j) = (coords.row(i) - coords.row(j)).cast<double>().norm();
  return CostMatrix(std::move(c));
}

}  // namespace fdott
