#include <gtest/gtest.h>

#include "fdott/inference.hpp"
#include "fdott/oracle.hpp"
#include "fdott/sim.hpp"

using namespace fdott;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

GroupSamples draw(const Matrix& mus, std::vector<std::int64_t> n, std::uint64_t seed) {
  Rng rng = derive_rng(seed, {77});
  return draw_samples(mus, n, rng);
}

Matrix stacked(std::initializer_list<Vector> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.begin()->size());
  Eigen::Index k = 0;
  for (const auto& r : rows) m.row(k++) = r.transpose();
  return m;
}

LimitSampleSet with_draws(std::vector<double> d, Method m) {
  LimitSampleSet s;
  s.draws = std::move(d);
  s.method = m;
  return s;
}
}  // namespace

TEST(Statistic, IdenticalGroupsGiveZero) {
  const CostMatrix c = grid_euclidean_cost(2, 2);
  const ProbMeasure p(vec({0.1, 0.2, 0.3, 0.4}));
  EXPECT_EQ(fdott_statistic(std::vector<ProbMeasure>{p, p, p}, one_way_contrasts(3), c, {10, 20, 30}), 0.0);
  EXPECT_NEAR(bary_statistic({p, p, p}, Vector::Constant(3, 1.0 / 3), c, {10, 20, 30}), 0.0, 1e-12);
}

TEST(Statistic, TwoGroupMetricClosedForm) {
  Rng rng = derive_rng(12, {1});
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + t % 5;
    const CostMatrix c = oracle::random_metric(n, rng);
    const ProbMeasure a(oracle::random_weights(n, rng)), b(oracle::random_weights(n, rng));
    const std::int64_t n1 = 30 + t, n2 = 70 - t;
    const double ot = solve_ot(a, b, c).value;
    const double r = static_cast<double>(n1 * n2) / static_cast<double>(n1 + n2);
    EXPECT_NEAR(fdott_statistic(std::vector<ProbMeasure>{a, b}, one_way_contrasts(2), c, {n1, n2}), std::sqrt(r) / 4 * ot, 1e-12);
    EXPECT_NEAR(bary_statistic({a, b}, vec({0.5, 0.5}), c, {n1, n2}), std::sqrt(r) * ot / 2, 1e-10);
  }
}

TEST(Statistic, PerRowOracle) {
  Rng rng = derive_rng(12, {2});
  for (int t = 0; t < 10; ++t) {
    const CostMatrix c = oracle::random_cost(4, rng);
    std::vector<ProbMeasure> mus;
    for (int g = 0; g < 3; ++g) mus.emplace_back(oracle::random_weights(4, rng));
    const ContrastMatrix l = one_way_contrasts(3);
    const std::vector<std::int64_t> n{20, 50, 70};
    double sum = 0;
    for (Eigen::Index m = 0; m < l.rows(); ++m) {
      Vector row = Vector::Zero(4);
      for (int g = 0; g < 3; ++g) row += l.entries(m, g) * mus[static_cast<std::size_t>(g)].weights();
      sum += oracle::ot_value(row.cwiseMax(0.0), (-row).cwiseMax(0.0), c);
    }
    const double expect = std::sqrt(1.0 / (1.0 / 20 + 1.0 / 50 + 1.0 / 70)) / 9 * sum;
    EXPECT_NEAR(fdott_statistic(mus, l, c, n), expect, 1e-10);
  }
}

TEST(Statistic, LayoutErrors) {
  const CostMatrix c = grid_euclidean_cost(2, 1);
  const ProbMeasure p(vec({0.5, 0.5}));
  EXPECT_THROW(fdott_statistic(std::vector<ProbMeasure>{p, p}, one_way_contrasts(3), c, {5, 5}), InputError);
  EXPECT_THROW(fdott_statistic(std::vector<ProbMeasure>{p, p}, one_way_contrasts(2), grid_euclidean_cost(3, 1), {5, 5}), InputError);
}

TEST(Gaussian, DegenerateCases) {
  Rng rng = derive_rng(1, {1});
  const Matrix mus = stacked({vec({0.2, 0.8}), vec({1, 0})});
  const Matrix g = sample_gaussian(mus, vec({0.0, 0.5}), rng);
  EXPECT_TRUE(g.isZero(0.0));
}

TEST(Gaussian, CovarianceMatchesSigma) {
  const Vector mu = vec({0.2, 0.3, 0.5});
  const double delta = 0.4;
  const Matrix mus = mu.transpose();
  const int j = 100000;
  Matrix x(j, 3);
  Rng rng = derive_rng(99, {1});
  for (int r = 0; r < j; ++r) x.row(r) = sample_gaussian(mus, vec({delta}), rng).row(0);
  const Matrix sigma = delta * multinomial_sigma(ProbMeasure(mu));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const Eigen::ArrayXd prod = x.col(a).array() * x.col(b).array();
      const double mean = prod.mean();
      const double se = std::sqrt((prod - mean).square().sum() / (j - 1) / j);
      EXPECT_LE(std::abs(mean - sigma(a, b)), 3 * se) << a << "," << b;
    }
  EXPECT_LT(x.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PValue, Formulas) {
  std::vector<double> d(100);
  for (int i = 0; i < 100; ++i) d[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(p_value(1000, with_draws(d, Method::kPlugin)), 0.0);
  EXPECT_EQ(p_value(1000, with_draws(std::vector<double>(19, 1.0), Method::kPermutation)), 0.05);
  std::vector<double> e(101);
  for (int i = 0; i < 101; ++i) e[static_cast<std::size_t>(i)] = i;
  EXPECT_NEAR(p_value(50, with_draws(e, Method::kPlugin)), 51.0 / 101, 1e-15);
  EXPECT_EQ(p_value(-1, with_draws(d, Method::kPlugin)), 1.0);
  EXPECT_THROW(p_value(0, with_draws({}, Method::kPlugin)), InputError);
}

TEST(PValue, MonotoneInStatistic) {
  Rng rng = derive_rng(4, {4});
  std::normal_distribution<double> z;
  std::vector<double> d(300);
  for (auto& x : d) x = std::abs(z(rng));
  const auto set = with_draws(d, Method::kPlugin);
  double prev = 1.0;
  for (double t = 0; t < 4; t += 0.05) {
    const double p = p_value(t, set);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(Quantile, HigherOrderStatistic) {
  std::vector<double> d(1000);
  for (int i = 0; i < 1000; ++i) d[static_cast<std::size_t>(i)] = 999 - i;
  EXPECT_EQ(upper_quantile(d, 0.05), 949.0);  // 950th smallest
  std::vector<double> e(19);
  for (int i = 0; i < 19; ++i) e[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(upper_quantile(e, 0.05), 18.0);  // ceil(18.05) = 19th
  EXPECT_THROW(upper_quantile(d, 0.0), InputError);
  EXPECT_FALSE(decide(0.0, 0.0));
  EXPECT_TRUE(decide(1.0, 1.0));
  EXPECT_FALSE(decide(0.9, 1.0));
}

TEST(NullSampler, DegenerateData) {
  const CostMatrix c = grid_euclidean_cost(2, 1);
  GroupSamples::Counts counts(3, 2);
  counts << 10, 0, 20, 0, 5, 0;
  const GroupSamples data(counts);
  const ContrastMatrix l = one_way_contrasts(3);
  for (Method m : {Method::kPlugin, Method::kPluginPooled, Method::kBootMOfN, Method::kBootDerivative,
                   Method::kPermutation}) {
    const auto set = sample_null_limit(data, l, c, m, 50, {}, 3);
    for (double z : set.draws) EXPECT_EQ(z, 0.0) << method_name(m);
    SamplerOptions bo;
    bo.statistic = StatisticKind::kBarycenter;
    if (m == Method::kPlugin || m == Method::kPluginPooled || m == Method::kBootDerivative) continue;
    const auto bset = sample_null_limit(data, l, c, m, 20, bo, 3);
    for (double z : bset.draws) EXPECT_NEAR(z, 0.0, 1e-12) << method_name(m);
  }
}

TEST(NullSampler, DrawsAreNonnegativeAndDeterministic) {
  const CostMatrix c = grid_euclidean_cost(3, 2);
  const Matrix mus = poisson_grid_measure(4.0, 3).weights().transpose().replicate(3, 1);
  const GroupSamples data = draw(mus, {40, 60, 50}, 5);
  const ContrastMatrix l = one_way_contrasts(3);
  for (Method m : {Method::kPlugin, Method::kPluginPooled, Method::kBootMOfN, Method::kBootDerivative,
                   Method::kPermutation}) {
    SamplerOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = sample_null_limit(data, l, c, m, 64, one, 11);
    const auto b = sample_null_limit(data, l, c, m, 64, many, 11);
    EXPECT_EQ(a.draws, b.draws) << method_name(m);
    for (double z : a.draws) EXPECT_GE(z, 0.0);
    if (m == Method::kBootMOfN) {
      EXPECT_EQ(a.resample_sizes, (std::vector<std::int64_t>{6, 8, 7}));
      EXPECT_EQ(a.gamma, 0.5);
    }
  }
}

TEST(NullSampler, PermutationNeedsExchangeableDesign) {
  const CostMatrix c = grid_euclidean_cost(2, 1);
  GroupSamples::Counts counts(4, 2);
  counts << 3, 2, 1, 4, 2, 2, 4, 1;
  const ContrastMatrix inter = factorial_contrasts(DesignSpec{{2, 2}, "interaction:A,B", 0.0});
  EXPECT_THROW(sample_null_limit(GroupSamples(counts), inter, c, Method::kPermutation, 10, {}, 1), InputError);
  EXPECT_NO_THROW(sample_null_limit(GroupSamples(counts), one_way_contrasts(4), c, Method::kPermutation, 10, {}, 1));
}

TEST(NullSampler, PooledAndUnpooledAgreeUnderEqualGroups) {
  const CostMatrix c = grid_euclidean_cost(3, 2);
  const Matrix mus = poisson_grid_measure(4.0, 3).weights().transpose().replicate(3, 1);
  const GroupSamples data = draw(mus, {2000, 2000, 2000}, 6);
  const ContrastMatrix l = one_way_contrasts(3);
  const auto a = sample_null_limit(data, l, c, Method::kPlugin, 2000, {}, 21);
  const auto b = sample_null_limit(data, l, c, Method::kPluginPooled, 2000, {}, 22);
  EXPECT_LT(ks_distance(a.draws, b.draws), 0.06);
}

TEST(RunTest, IdenticalGroupsNeverReject) {
  const CostMatrix c = grid_euclidean_cost(2, 2);
  GroupSamples::Counts counts(3, 4);
  counts << 1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4;
  for (Method m : {Method::kPlugin, Method::kPermutation, Method::kBootMOfN}) {
    const TestReport rep = run_test(GroupSamples(counts), one_way_contrasts(3), c, m, 0.05, 99, {}, 1);
    EXPECT_EQ(rep.statistic, 0.0);
    EXPECT_FALSE(rep.reject);
    EXPECT_GE(rep.p_value, 0.05);
  }
}

TEST(RunTest, ScalingInvariance) {
  const CostMatrix c = grid_euclidean_cost(3, 2);
  const Matrix mus = stacked({poisson_grid_measure(3.0, 3).weights(), poisson_grid_measure(4.0, 3).weights(),
                              poisson_grid_measure(3.5, 3).weights()});
  const GroupSamples data = draw(mus, {30, 40, 50}, 7);
  ContrastMatrix l = one_way_contrasts(3);
  const TestReport a = run_test(data, l, c, Method::kPlugin, 0.05, 300, {}, 5);
  for (double t : {0.1, 3.0, 1000.0}) {
    ContrastMatrix ls = l;
    ls.scaling_s *= t;
    const TestReport b = run_test(data, ls, c, Method::kPlugin, 0.05, 300, {}, 5);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.reject, b.reject);
    EXPECT_NEAR(a.statistic, t * b.statistic, 1e-12 * a.statistic);
  }
}

TEST(RunTest, ConsistentUnderFixedAlternative) {
  const CostMatrix c = grid_euclidean_cost(3, 2);
  const Matrix mus = stacked({poisson_grid_measure(3.0, 3).weights(), poisson_grid_measure(3.6, 3).weights()});
  double last = 0;
  std::vector<double> freq;
  for (std::int64_t n : {20, 80, 320, 1280}) {
    int hits = 0;
    for (int r = 0; r < 40; ++r) {
      const GroupSamples data = draw(mus, {n, n}, 1000 + static_cast<std::uint64_t>(r));
      hits += run_test(data, one_way_contrasts(2), c, Method::kPlugin, 0.05, 200, {}, static_cast<std::uint64_t>(r)).reject;
    }
    freq.push_back(hits / 40.0);
    last = hits / 40.0;
  }
  EXPECT_GE(last, 0.95);
  EXPECT_LT(freq.front(), last);
}

TEST(AlternativeLimit, NullRowsReduceToSignedOt) {
  const CostMatrix c = grid_euclidean_cost(2, 2);
  const Vector p = vec({0.1, 0.2, 0.3, 0.4});
  const Matrix mus = p.transpose().replicate(3, 1);
  const ContrastMatrix l = one_way_contrasts(3);
  const Vector deltas = delta_hat({10, 20, 30});
  const auto set = sample_alternative_limit(mus, l, c, deltas, 40, 8);
  for (std::size_t j = 0; j < 40; ++j) {
    Rng rng = derive_rng(8, Stream::kAltDraw, j);
    const Matrix g = sample_gaussian(mus, deltas, rng);
    EXPECT_NEAR(set.draws[j], contrast_ot_sum(l.entries, g, c) / l.scaling_s, 1e-12);
  }
}

TEST(AlternativeLimit, MatchesFiniteDifferencesDrawByDraw) {
  Rng rng = derive_rng(13, {1});
  const CostMatrix c = oracle::random_metric(4, rng);
  const Matrix mus = stacked({oracle::random_weights(4, rng, 1.0, 0.0), oracle::random_weights(4, rng, 1.0, 0.0)});
  const ContrastMatrix l = one_way_contrasts(2);
  const Vector deltas = delta_hat({40, 60});
  const auto set = sample_alternative_limit(mus, l, c, deltas, 30, 9);
  const Vector tau = (mus.row(0) - mus.row(1)).transpose();
  for (std::size_t j = 0; j < 30; ++j) {
    Rng r = derive_rng(9, Stream::kAltDraw, j);
    const Matrix g = sample_gaussian(mus, deltas, r);
    const Vector h = (g.row(0) - g.row(1)).transpose();
    EXPECT_NEAR(set.draws[j], oracle::finite_difference(tau, h, c, 1e-5) / l.scaling_s, 1e-3);
  }
}

TEST(AlternativeLimit, ZeroDeltasGiveZero) {
  const CostMatrix c = grid_euclidean_cost(2, 1);
  const Matrix mus = stacked({vec({0.3, 0.7}), vec({0.6, 0.4})});
  const auto set = sample_alternative_limit(mus, one_way_contrasts(2), c, Vector::Zero(2), 10, 1);
  for (double z : set.draws) EXPECT_EQ(z, 0.0);
}

TEST(LocalLimit, NoShiftGivesLevelPower) {
  LocalAlternative la = local_power_alternative(1, 3, 1000);
  la.nus = la.mus;
  const CostMatrix c = grid_euclidean_cost(3, 2);
  const auto f = sample_local_limit(la, one_way_contrasts(6), c, StatisticKind::kFdott, {}, 0.05, 4000, 3);
  EXPECT_GT(f.power, 0.035);
  EXPECT_LT(f.power, 0.065);
  const auto b = sample_local_limit(la, one_way_contrasts(6), c, StatisticKind::kBarycenter, {}, 0.05, 1000, 3);
  EXPECT_GT(b.power, 0.025);
  EXPECT_LT(b.power, 0.08);
}

TEST(LocalLimit, Preconditions) {
  LocalAlternative la = local_power_alternative(1, 3, 1000);
  const CostMatrix c = grid_euclidean_cost(3, 2);
  LocalAlternative bad = la;
  bad.mus.row(0) = la.nus.row(0);
  EXPECT_THROW(sample_local_limit(bad, one_way_contrasts(6), c, StatisticKind::kFdott, {}, 0.05, 10, 1), InputError);
  EXPECT_THROW(sample_local_limit(bad, one_way_contrasts(6), c, StatisticKind::kBarycenter, {}, 0.05, 10, 1), InputError);
  LocalAlternative sparse = la;
  Vector point = Vector::Zero(9);
  point[0] = 1;
  sparse.mus = point.transpose().replicate(6, 1);
  EXPECT_THROW(sample_local_limit(sparse, one_way_contrasts(6), c, StatisticKind::kBarycenter, {}, 0.05, 10, 1), InputError);
}

TEST(Names, RoundTrip) {
  for (Method m : {Method::kPlugin, Method::kPluginPooled, Method::kBootMOfN, Method::kBootDerivative,
                   Method::kPermutation})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("bootstrap"), InputError);
  EXPECT_EQ(parse_statistic("barycenter"), StatisticKind::kBarycenter);
  EXPECT_THROW(parse_statistic("x"), InputError);
}
