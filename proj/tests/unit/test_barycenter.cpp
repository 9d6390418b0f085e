#include <gtest/gtest.h>

#include "fdott/barycenter.hpp"
#include "fdott/oracle.hpp"

using namespace fdott;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix zero_sum_rows(Eigen::Index k, Eigen::Index n, Rng& rng) {
  Matrix h(k, n);
  for (Eigen::Index g = 0; g < k; ++g) h.row(g) = oracle::random_signed(n, rng).transpose();
  return h;
}
}  // namespace

TEST(Barycenter, IdenticalMeasures) {
  const CostMatrix c = grid_euclidean_cost(2, 2);
  const ProbMeasure p(vec({0.1, 0.2, 0.3, 0.4}));
  const BarycenterSolution s = solve_barycenter({p, p, p}, c);
  EXPECT_NEAR(s.value, 0.0, 1e-14);
  EXPECT_LT((s.center.weights() - p.weights()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Barycenter, TwoGroupMidpoint) {
  Rng rng = derive_rng(2, {5});
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + t % 5;
    const CostMatrix c = oracle::random_metric(n, rng);
    const ProbMeasure a(oracle::random_weights(n, rng)), b(oracle::random_weights(n, rng));
    EXPECT_NEAR(solve_barycenter({a, b}, c).value, solve_ot(a, b, c).value / 2, 1e-12);
  }
}

TEST(Barycenter, MatchesDenseLp) {
  Rng rng = derive_rng(2, {6});
  for (int t = 0; t < 10; ++t) {
    const CostMatrix c = oracle::random_cost(4, rng);
    std::vector<ProbMeasure> mus;
    for (int g = 0; g < 3; ++g) mus.emplace_back(oracle::random_weights(4, rng));
    const Vector w = vec({0.2, 0.3, 0.5});
    const BarycenterSolution s = solve_barycenter(mus, w, c);
    const double ref = oracle::barycenter_value(mus, w, c);
    EXPECT_NEAR(s.value, ref, 1e-9 * std::max(1.0, ref));
    // Plans couple mu^k with the reported center.
    for (std::size_t g = 0; g < 3; ++g) {
      EXPECT_LT((s.plans[g].rowwise().sum() - mus[g].weights()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((s.plans[g].colwise().sum().transpose() - s.center.weights()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Barycenter, WeightValidation) {
  const CostMatrix c = grid_euclidean_cost(2, 1);
  const ProbMeasure p(vec({0.5, 0.5}));
  EXPECT_THROW(solve_barycenter({p, p}, vec({0.5, 0.6}), c), InputError);
  EXPECT_THROW(solve_barycenter({p, p}, vec({1.0, 0.0}), c), InputError);
  EXPECT_THROW(solve_barycenter({p, p}, vec({1.0}), c), InputError);
}

TEST(PsiFunctional, ZeroAndHomogeneity) {
  Rng rng = derive_rng(2, {7});
  const CostMatrix c = oracle::random_metric(4, rng);
  const ProbMeasure p(vec({0.1, 0.2, 0.3, 0.4}));
  const std::vector<ProbMeasure> mus{p, p, p};
  const Vector w = Vector::Constant(3, 1.0 / 3);
  EXPECT_NEAR(psi_limit_functional(Matrix::Zero(3, 4), mus, w, c, true), 0.0, 1e-14);
  const Matrix h = zero_sum_rows(3, 4, rng);
  const double v1 = psi_limit_functional(h, mus, w, c, true);
  EXPECT_NEAR(psi_limit_functional(2 * h, mus, w, c, true), 2 * v1, 1e-12);
  EXPECT_NEAR(psi_limit_functional(h, mus, w, c, false), v1, 1e-9);
}

TEST(PsiFunctional, TwoGroupNullIsHalfSignedOt) {
  // K=2, equal weights: the face is {u, -u : u_i - u_j <= c_ij / 2}.
  Rng rng = derive_rng(2, {8});
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + t % 3;
    const CostMatrix c = oracle::random_metric(n, rng);
    Vector w = oracle::random_weights(n, rng, 1.0, 0.0).array() + 0.1;
    const ProbMeasure p(w / w.sum());
    const Matrix h = zero_sum_rows(2, n, rng);
    const double got = psi_limit_functional(h, {p, p}, vec({0.5, 0.5}), c, true);
    const Vector diff = (h.row(0) - h.row(1)).transpose();
    EXPECT_NEAR(got, signed_ot_value(diff, c) / 2, 1e-12);
    EXPECT_NEAR(got, dual_face_maximize(SignedMeasure::zero(n), SignedMeasure(diff), c) / 2, 1e-12);
  }
}

TEST(PsiFunctional, NullMatchesOracle) {
  Rng rng = derive_rng(2, {9});
  for (int t = 0; t < 15; ++t) {
    const Eigen::Index n = 2 + t % 4;
    const Eigen::Index k = 2 + t % 3;
    const CostMatrix c = (t % 2 == 0) ? oracle::random_metric(n, rng) : oracle::random_cost(n, rng);
    Vector base = oracle::random_weights(n, rng, 1.0, 0.0).array() + 0.05;
    const ProbMeasure p(base / base.sum());
    const std::vector<ProbMeasure> mus(static_cast<std::size_t>(k), p);
    const Vector w = Vector::Constant(k, 1.0 / static_cast<double>(k));
    const Matrix h = zero_sum_rows(k, n, rng);
    EXPECT_NEAR(psi_limit_functional(h, mus, w, c, true), oracle::psi_null_value(h, w, c), 1e-10);
  }
}

TEST(PsiFunctional, FaceMatchesOracle) {
  Rng rng = derive_rng(2, {10});
  for (int t = 0; t < 15; ++t) {
    const Eigen::Index n = 2 + t % 3;
    const Eigen::Index k = 2 + t % 2;
    const CostMatrix c = oracle::random_metric(n, rng);
    std::vector<ProbMeasure> mus;
    for (Eigen::Index g = 0; g < k; ++g) {
      Vector x = oracle::random_weights(n, rng, 1.0, 0.0).array() + 0.05;
      mus.emplace_back(x / x.sum());
    }
    const Vector w = Vector::Constant(k, 1.0 / static_cast<double>(k));
    const Matrix h = zero_sum_rows(k, n, rng);
    EXPECT_NEAR(psi_limit_functional(h, mus, w, c, false), oracle::psi_face_value(h, mus, w, c), 1e-6);
  }
}

TEST(PsiFunctional, ShapeAndPreconditionErrors) {
  const CostMatrix c = grid_euclidean_cost(2, 1);
  const ProbMeasure p(vec({0.5, 0.5})), q(vec({0.2, 0.8}));
  const Vector w = vec({0.5, 0.5});
  EXPECT_THROW(psi_limit_functional(Matrix::Zero(3, 2), {p, p}, w, c, true), InputError);
  Matrix h(2, 2);
  h << 0.1, 0.1, 0, 0;
  EXPECT_THROW(psi_limit_functional(h, {p, p}, w, c, true), InputError);
  EXPECT_THROW(psi_limit_functional(Matrix::Zero(2, 2), {p, q}, w, c, true), InputError);
}
