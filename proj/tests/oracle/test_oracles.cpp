// Cross-checks of the production solvers against independent reference LPs
// and closed-form identities.

#include <gtest/gtest.h>

#include "fdott/inference.hpp"
#include "fdott/oracle.hpp"

using namespace fdott;

TEST(Oracle, OtAgainstDenseLp) {
  const auto r = oracle::check_ot(200, 101);
  EXPECT_TRUE(r.pass()) << r.max_error;
}

TEST(Oracle, BarycenterAgainstDenseLp) {
  const auto r = oracle::check_barycenter(100, 102);
  EXPECT_TRUE(r.pass()) << r.max_error;
}

TEST(Oracle, DualFaceAgainstFiniteDifferences) {
  const auto r = oracle::check_dual_face(100, 103);
  EXPECT_TRUE(r.pass()) << r.max_error;
}

TEST(Oracle, SignedOtMetricProperties) {
  for (const auto& r : oracle::check_signed_metric(200, 104)) EXPECT_TRUE(r.pass()) << r.name << " " << r.max_error;
}

TEST(Oracle, Sandwich) {
  const auto r = oracle::check_sandwich(200, 105);
  EXPECT_TRUE(r.pass()) << r.max_error;
}

TEST(Oracle, TwoGroupMidpoint) {
  const auto r = oracle::check_midpoint(100, 106);
  EXPECT_TRUE(r.pass()) << r.max_error;
}

TEST(Oracle, NullFunctionalAgainstPolytopeLp) {
  double worst = 0;
  for (std::uint64_t t = 0; t < 60; ++t) {
    Rng rng = derive_rng(107, {t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 4);
    const Eigen::Index k = 2 + static_cast<Eigen::Index>(t % 3);
    const CostMatrix c = (t % 2 == 0) ? oracle::random_metric(n, rng) : oracle::random_cost(n, rng);
    Vector base = oracle::random_weights(n, rng, 1.0, 0.0).array() + 0.02;
    const ProbMeasure p(base / base.sum());
    Vector w = oracle::random_weights(k, rng, 1.0, 0.0).array() + 0.1;
    w /= w.sum();
    Matrix h(k, n);
    for (Eigen::Index g = 0; g < k; ++g) h.row(g) = oracle::random_signed(n, rng).transpose();
    const double got = psi_limit_functional(h, std::vector<ProbMeasure>(static_cast<std::size_t>(k), p), w, c, true);
    worst = std::max(worst, std::abs(got - oracle::psi_null_value(h, w, c)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Oracle, FaceFunctionalAgainstPolytopeLp) {
  double worst = 0;
  for (std::uint64_t t = 0; t < 40; ++t) {
    Rng rng = derive_rng(108, {t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 3);
    const Eigen::Index k = 2 + static_cast<Eigen::Index>(t % 2);
    const CostMatrix c = oracle::random_metric(n, rng);
    std::vector<ProbMeasure> mus;
    for (Eigen::Index g = 0; g < k; ++g) {
      Vector x = oracle::random_weights(n, rng, 1.0, 0.0).array() + 0.02;
      mus.emplace_back(x / x.sum());
    }
    const Vector w = Vector::Constant(k, 1.0 / static_cast<double>(k));
    Matrix h(k, n);
    for (Eigen::Index g = 0; g < k; ++g) h.row(g) = oracle::random_signed(n, rng).transpose();
    worst = std::max(worst, std::abs(psi_limit_functional(h, mus, w, c, false) - oracle::psi_face_value(h, mus, w, c)));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Oracle, FdottStatisticPerRow) {
  double worst = 0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    Rng rng = derive_rng(109, {t});
    const int k = 2 + static_cast<int>(t % 3);
    const CostMatrix c = oracle::random_cost(4, rng);
    std::vector<ProbMeasure> mus;
    std::vector<std::int64_t> n;
    for (int g = 0; g < k; ++g) {
      mus.emplace_back(oracle::random_weights(4, rng));
      n.push_back(10 + 17 * g);
    }
    const ContrastMatrix l = one_way_contrasts(k);
    double sum = 0;
    for (Eigen::Index m = 0; m < l.rows(); ++m) {
      Vector row = Vector::Zero(4);
      for (int g = 0; g < k; ++g) row += l.entries(m, g) * mus[static_cast<std::size_t>(g)].weights();
      sum += oracle::ot_value(row.cwiseMax(0.0), (-row).cwiseMax(0.0), c);
    }
    double inv = 0;
    for (auto x : n) inv += 1.0 / static_cast<double>(x);
    const double expect = std::sqrt(1.0 / inv) / (k * k) * sum;
    worst = std::max(worst, std::abs(fdott_statistic(mus, l, c, n) - expect));
  }
  EXPECT_LE(worst, 1e-10);
}
