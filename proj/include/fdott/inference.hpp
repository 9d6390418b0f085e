#pragma once

// Test statistics, samplers for their limit laws, p-values and decisions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/barycenter.hpp"
#include "fdott/design.hpp"
#include "fdott/error.hpp"
#include "fdott/measures.hpp"
#include "fdott/ot.hpp"
#include "fdott/parallel.hpp"
#include "fdott/random.hpp"

namespace fdott {

enum class Method {
  kPlugin,
  kPluginPooled,
  kBootMOfN,
  kBootDerivative,
  kPermutation,
  kAlternativeFace,
  kLocalShift,
};

enum class StatisticKind { kFdott, kBarycenter };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kPlugin: return "plugin";
    case Method::kPluginPooled: return "plugin-pooled";
    case Method::kBootMOfN: return "boot-m";
    case Method::kBootDerivative: return "boot-deriv";
    case Method::kPermutation: return "perm";
    case Method::kAlternativeFace: return "alternative-face";
    case Method::kLocalShift: return "local-shift";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::kPlugin, Method::kPluginPooled, Method::kBootMOfN, Method::kBootDerivative,
                   Method::kPermutation})
    if (method_name(m) == s) return m;
  throw InputError("unknown method '" + s + "' (plugin, plugin-pooled, boot-m, boot-deriv, perm)");
}

inline std::string statistic_name(StatisticKind k) { return k == StatisticKind::kFdott ? "fdott" : "barycenter"; }

inline StatisticKind parse_statistic(const std::string& s) {
  if (s == "fdott") return StatisticKind::kFdott;
  if (s == "barycenter") return StatisticKind::kBarycenter;
  throw InputError("unknown statistic '" + s + "' (fdott, barycenter)");
}

struct LimitSampleSet {
  std::vector<double> draws;
  Method method = Method::kPlugin;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> resample_sizes;  // bootstrap / permutation group sizes
  double gamma = 0.0;                        // m-out-of-n exponent, when used

  [[nodiscard]] std::size_t size() const { return draws.size(); }
};

struct SamplerOptions {
  StatisticKind statistic = StatisticKind::kFdott;
  double gamma = 0.5;
  Vector bary_weights;  // empty selects uniform weights
  unsigned threads = 0;
};

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  double quantile = 0.0;
  double alpha = 0.05;
  bool reject = false;
  Method method = Method::kPlugin;
  StatisticKind statistic_kind = StatisticKind::kFdott;
  std::string design;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Statistics

/// sum_m OT([X]_m, 0) over the rows of L X, where X is K x N.
inline double contrast_ot_sum(const Matrix& l, const Matrix& x, const CostMatrix& c) {
  const Matrix rows = l * x;
  double total = 0.0;
  for (Eigen::Index m = 0; m < rows.rows(); ++m) total += signed_ot_value(rows.row(m).transpose(), c);
  return total;
}

inline Matrix stack_measures(const std::vector<ProbMeasure>& mus) {
  if (mus.empty()) throw InputError("no measures given");
  Matrix m(static_cast<Eigen::Index>(mus.size()), mus.front().size());
  for (std::size_t k = 0; k < mus.size(); ++k) {
    if (mus[k].size() != m.cols()) throw InputError("measures differ in length");
    m.row(static_cast<Eigen::Index>(k)) = mus[k].weights().transpose();
  }
  return m;
}

inline std::vector<ProbMeasure> unstack_measures(const Matrix& m) {
  std::vector<ProbMeasure> out;
  for (Eigen::Index k = 0; k < m.rows(); ++k) out.emplace_back(m.row(k).transpose());
  return out;
}

namespace detail {
inline void check_layout(const ContrastMatrix& l, Eigen::Index k, const CostMatrix& c, Eigen::Index n_points) {
  require_identifiable(c);
  if (l.groups() != k)
    throw InputError("contrast matrix has " + std::to_string(l.groups()) + " columns but there are " +
                     std::to_string(k) + " groups");
  if (n_points != c.size())
    throw InputError("data has " + std::to_string(n_points) + " categories but the cost matrix is " +
                     std::to_string(c.size()) + "x" + std::to_string(c.size()));
}
}  // namespace detail

inline double fdott_statistic(const Matrix& mu_hats, const ContrastMatrix& l, const CostMatrix& c,
                              const std::vector<std::int64_t>& n) {
  detail::check_layout(l, mu_hats.rows(), c, mu_hats.cols());
  return std::sqrt(rho(n)) / l.scaling_s * contrast_ot_sum(l.entries, mu_hats, c);
}

inline double fdott_statistic(const std::vector<ProbMeasure>& mu_hats, const ContrastMatrix& l, const CostMatrix& c,
                              const std::vector<std::int64_t>& n) {
  return fdott_statistic(stack_measures(mu_hats), l, c, n);
}

inline double bary_statistic(const std::vector<ProbMeasure>& mu_hats, const Vector& w, const CostMatrix& c,
                             const std::vector<std::int64_t>& n) {
  return std::sqrt(rho(n)) * solve_barycenter(mu_hats, w, c).value;
}

// ---------------------------------------------------------------------------
// Gaussian limits

/// Row k is sqrt(delta_k) A(mu^k) z_k with independent standard normal z_k.
inline Matrix sample_gaussian(const Matrix& mus, const Vector& deltas, Rng& rng) {
  if (deltas.size() != mus.rows()) throw InputError("need one delta per group");
  if ((deltas.array() < 0.0).any()) throw InputError("deltas must be nonnegative");
  const Eigen::Index n = mus.cols();
  Matrix g(mus.rows(), n);
  Vector z(n), s(n), out(n);
  for (Eigen::Index k = 0; k < mus.rows(); ++k) {
    s = mus.row(k).transpose().cwiseMax(0.0).cwiseSqrt();
    fill_standard_normal(rng, z);
    apply_gaussian_factor(s, z, out);
    g.row(k) = std::sqrt(deltas[k]) * out.transpose();
  }
  return g;
}

inline Matrix sample_gaussian(const std::vector<ProbMeasure>& mus, const Vector& deltas, Rng& rng) {
  return sample_gaussian(stack_measures(mus), deltas, rng);
}

// ---------------------------------------------------------------------------
// p-values and quantiles

inline double p_value(double statistic, const LimitSampleSet& set) {
  if (set.draws.empty()) throw InputError("p-value needs at least one draw");
  std::size_t ge = 0;
  for (double z : set.draws)
    if (z >= statistic) ++ge;
  const auto j = static_cast<double>(set.draws.size());
  if (set.method == Method::kPermutation) return (static_cast<double>(ge) + 1.0) / (j + 1.0);
  return static_cast<double>(ge) / j;
}

/// The ceil((1 - alpha) J)-th smallest draw.
inline double upper_quantile(std::vector<double> draws, double alpha) {
  if (draws.empty()) throw InputError("quantile needs at least one draw");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const auto j = static_cast<double>(draws.size());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * j - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, draws.size());
  std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(rank - 1), draws.end());
  return draws[rank - 1];
}

/// T >= q, except that a zero statistic never rejects (all-degenerate draws).
inline bool decide(double statistic, double quantile) { return statistic > 0.0 && statistic >= quantile; }

// ---------------------------------------------------------------------------
// Null samplers

namespace detail {

inline bool spans_all_differences(const ContrastMatrix& l) {
  Eigen::FullPivLU<Matrix> lu(l.entries);
  lu.setThreshold(1e-10);
  return lu.rank() == l.groups() - 1;
}

inline std::vector<Eigen::Index> joint_support(const Matrix& mus) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index i = 0; i < mus.cols(); ++i)
    if ((mus.col(i).array() > 0.0).any()) s.push_back(i);
  return s;
}

inline Matrix select_columns(const Matrix& m, const std::vector<Eigen::Index>& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t p = 0; p < cols.size(); ++p) out.col(static_cast<Eigen::Index>(p)) = m.col(cols[p]);
  return out;
}

inline Matrix counts_to_measures(const std::vector<std::vector<std::int64_t>>& counts) {
  Matrix m(static_cast<Eigen::Index>(counts.size()), static_cast<Eigen::Index>(counts.front().size()));
  for (std::size_t k = 0; k < counts.size(); ++k) {
    std::int64_t tot = 0;
    for (auto x : counts[k]) tot += x;
    for (std::size_t i = 0; i < counts[k].size(); ++i)
      m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = static_cast<double>(counts[k][i]) / static_cast<double>(tot);
  }
  return m;
}

inline Matrix resample(const Matrix& mus, const std::vector<std::int64_t>& sizes, Rng& rng) {
  std::vector<std::vector<std::int64_t>> counts;
  for (Eigen::Index k = 0; k < mus.rows(); ++k)
    counts.push_back(multinomial(rng, sizes[static_cast<std::size_t>(k)], mus.row(k).transpose()));
  return counts_to_measures(counts);
}

/// Null-limit functional of the barycenter statistic on the joint support of `mus`.
class BaryNullFunctional {
 public:
  BaryNullFunctional(const Matrix& mus, const Vector& w, const CostMatrix& c)
      : support_(joint_support(mus)), cost_(c.restricted(support_)), solver_(w, cost_) {}
  [[nodiscard]] double operator()(const Matrix& h) const { return solver_.value(select_columns(h, support_)); }

 private:
  std::vector<Eigen::Index> support_;
  CostMatrix cost_;
  NullPsiSolver solver_;
};

inline Vector bary_weights_or_uniform(const SamplerOptions& opt, Eigen::Index k) {
  if (opt.bary_weights.size() == 0) return uniform_weights(static_cast<std::size_t>(k));
  return opt.bary_weights;
}

}  // namespace detail

/// J draws from the null limit law of the chosen statistic.
inline LimitSampleSet sample_null_limit(const GroupSamples& data, const ContrastMatrix& l, const CostMatrix& c,
                                        Method method, std::size_t j_draws, const SamplerOptions& opt,
                                        std::uint64_t seed) {
  if (j_draws < 1) throw InputError("need at least one draw");
  const Eigen::Index k = data.n_groups();
  const bool bary = opt.statistic == StatisticKind::kBarycenter;
  if (!bary) detail::check_layout(l, k, c, data.n_points());
  else detail::require_identifiable(c);
  if (data.n_points() != c.size()) throw InputError("data and cost matrix sizes differ");
  if (k < 2) throw InputError("need at least two groups");
  if (method == Method::kPermutation && !bary && !detail::spans_all_differences(l))
    throw InputError("permutation requires exchangeability under the null (use a one-way contrast)");

  const std::vector<std::int64_t>& n = data.sizes();
  const Matrix mu_hat = empirical_measures(data);
  const Vector deltas = delta_hat(n);
  const double s = l.scaling_s;
  const double sqrt_rho = std::sqrt(rho(n));
  const Vector w = detail::bary_weights_or_uniform(opt, k);

  LimitSampleSet set;
  set.method = method;
  set.seed = seed;
  set.draws.assign(j_draws, 0.0);

  Matrix base = mu_hat;
  if (method == Method::kPluginPooled) {
    Vector pooled = Vector::Zero(data.n_points());
    std::int64_t total = 0;
    for (Eigen::Index g = 0; g < k; ++g) {
      pooled += data.counts().row(g).transpose().cast<double>();
      total += n[static_cast<std::size_t>(g)];
    }
    pooled /= static_cast<double>(total);
    base = pooled.transpose().replicate(k, 1);
  }

  std::vector<std::int64_t> sizes = n;
  if (method == Method::kBootMOfN) {
    if (!(opt.gamma > 0.0 && opt.gamma <= 1.0)) throw InputError("gamma must lie in (0, 1]");
    set.gamma = opt.gamma;
    for (auto& x : sizes) {
      x = std::max<std::int64_t>(1, std::llround(std::pow(static_cast<double>(x), opt.gamma)));
    }
  }
  if (method == Method::kBootMOfN || method == Method::kBootDerivative || method == Method::kPermutation)
    set.resample_sizes = sizes;
  const double sqrt_rho_l = std::sqrt(rho(sizes));

  std::vector<int> pool;
  if (method == Method::kPermutation) {
    for (Eigen::Index g = 0; g < k; ++g)
      for (Eigen::Index i = 0; i < data.n_points(); ++i)
        for (std::int64_t r = 0; r < data.counts()(g, i); ++r) pool.push_back(static_cast<int>(i));
  }

  std::optional<detail::BaryNullFunctional> psi;
  if (bary && (method == Method::kPlugin || method == Method::kPluginPooled || method == Method::kBootDerivative))
    psi.emplace(base, w, c);

  auto bary_value = [&](const Matrix& m) { return solve_barycenter(unstack_measures(m), w, c).value; };

  parallel_for(j_draws, opt.threads, [&](std::size_t j) {
    Rng rng = derive_rng(seed, Stream::kNullDraw, j);
    double z = 0.0;
    switch (method) {
      case Method::kPlugin:
      case Method::kPluginPooled: {
        const Matrix g = sample_gaussian(base, deltas, rng);
        z = bary ? (*psi)(g) : contrast_ot_sum(l.entries, g, c) / s;
        break;
      }
      case Method::kBootMOfN: {
        const Matrix star = detail::resample(mu_hat, sizes, rng);
        z = bary ? sqrt_rho_l * bary_value(star) : sqrt_rho_l / s * contrast_ot_sum(l.entries, star, c);
        break;
      }
      case Method::kBootDerivative: {
        const Matrix diff = sqrt_rho * (detail::resample(mu_hat, sizes, rng) - mu_hat);
        z = bary ? (*psi)(diff) : contrast_ot_sum(l.entries, diff, c) / s;
        break;
      }
      case Method::kPermutation: {
        std::vector<int> perm = pool;
        shuffle(rng, perm);
        std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(k),
                                                      std::vector<std::int64_t>(static_cast<std::size_t>(data.n_points()), 0));
        std::size_t p = 0;
        for (Eigen::Index g = 0; g < k; ++g)
          for (std::int64_t r = 0; r < n[static_cast<std::size_t>(g)]; ++r) ++counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(perm[p++])];
        const Matrix star = detail::counts_to_measures(counts);
        z = bary ? sqrt_rho * bary_value(star) : sqrt_rho / s * contrast_ot_sum(l.entries, star, c);
        break;
      }
      default:
        throw InputError("method " + method_name(method) + " is not a null-limit sampler");
    }
    set.draws[j] = z;
  });
  return set;
}

/// Statistic, draws, quantile, p-value and decision in one call.
inline TestReport run_test(const GroupSamples& data, const ContrastMatrix& l, const CostMatrix& c, Method method,
                           double alpha, std::size_t j_draws, const SamplerOptions& opt, std::uint64_t seed) {
  TestReport rep;
  rep.alpha = alpha;
  rep.method = method;
  rep.statistic_kind = opt.statistic;
  rep.design = opt.statistic == StatisticKind::kBarycenter ? "one-way barycenter" : l.label;
  rep.draws = j_draws;
  rep.seed = seed;
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const Matrix mu_hat = empirical_measures(data);
  if (opt.statistic == StatisticKind::kBarycenter) {
    detail::require_identifiable(c);
    if (data.n_points() != c.size()) throw InputError("data and cost matrix sizes differ");
    rep.statistic = bary_statistic(unstack_measures(mu_hat), detail::bary_weights_or_uniform(opt, data.n_groups()), c,
                                   data.sizes());
  } else {
    rep.statistic = fdott_statistic(mu_hat, l, c, data.sizes());
  }
  const LimitSampleSet set = sample_null_limit(data, l, c, method, j_draws, opt, seed);
  rep.quantile = upper_quantile(set.draws, alpha);
  rep.p_value = p_value(rep.statistic, set);
  rep.reject = decide(rep.statistic, rep.quantile);
  return rep;
}

// ---------------------------------------------------------------------------
// Alternative and local limits

/// Draws of (1/s) sum_m max over the dual face at [L mu]_m of the direction [L G]_m.
inline LimitSampleSet sample_alternative_limit(const Matrix& mus, const ContrastMatrix& l, const CostMatrix& c,
                                               const Vector& deltas, std::size_t j_draws, std::uint64_t seed,
                                               unsigned threads = 0) {
  detail::check_layout(l, mus.rows(), c, mus.cols());
  const Matrix tau = l.entries * mus;
  std::vector<DualFaceSolver> faces;
  faces.reserve(static_cast<std::size_t>(tau.rows()));
  for (Eigen::Index m = 0; m < tau.rows(); ++m) {
    Vector row = tau.row(m).transpose();
    row.array() -= row.mean();
    faces.emplace_back(SignedMeasure(row), c);
  }
  LimitSampleSet set;
  set.method = Method::kAlternativeFace;
  set.seed = seed;
  set.draws.assign(j_draws, 0.0);
  parallel_for(j_draws, threads, [&](std::size_t j) {
    Rng rng = derive_rng(seed, Stream::kAltDraw, j);
    const Matrix lg = l.entries * sample_gaussian(mus, deltas, rng);
    double z = 0.0;
    for (Eigen::Index m = 0; m < lg.rows(); ++m) {
      Vector h = lg.row(m).transpose();
      h.array() -= h.mean();
      z += faces[static_cast<std::size_t>(m)].value(h);
    }
    set.draws[j] = z / l.scaling_s;
  });
  return set;
}

struct LocalAlternative {
  Matrix mus;  // K x N, satisfying the null
  Matrix nus;  // K x N perturbation directions (probability vectors)
  std::vector<std::int64_t> n;

  /// mu^k_n = nu^k / sqrt(n_k) + (1 - 1/sqrt(n_k)) mu^k.
  [[nodiscard]] Matrix perturbed() const {
    Matrix out(mus.rows(), mus.cols());
    for (Eigen::Index k = 0; k < mus.rows(); ++k) {
      const double r = 1.0 / std::sqrt(static_cast<double>(n[static_cast<std::size_t>(k)]));
      out.row(k) = r * nus.row(k) + (1.0 - r) * mus.row(k);
    }
    return out;
  }
};

struct LocalPowerResult {
  LimitSampleSet null_draws;
  LimitSampleSet shifted_draws;
  double quantile = 0.0;
  double power = 0.0;
};

/// Null-law draws at eta = 0 and shifted draws at eta = sqrt(delta) (nu - mu),
/// from independent streams; power is the fraction of shifted draws >= q_{1-alpha}.
inline LocalPowerResult sample_local_limit(const LocalAlternative& la, const ContrastMatrix& l, const CostMatrix& c,
                                           StatisticKind flavor, const Vector& bary_w, double alpha,
                                           std::size_t j_draws, std::uint64_t seed, unsigned threads = 0) {
  const Eigen::Index k = la.mus.rows();
  if (la.nus.rows() != k || la.nus.cols() != la.mus.cols() || static_cast<Eigen::Index>(la.n.size()) != k)
    throw InputError("local alternative: shapes of mu, nu and n disagree");
  if (la.mus.cols() != c.size()) throw InputError("local alternative: cost matrix size differs");
  detail::require_identifiable(c);
  for (Eigen::Index g = 0; g < k; ++g) {
    ProbMeasure(la.mus.row(g).transpose());
    ProbMeasure(la.nus.row(g).transpose());
  }
  const Vector deltas = delta_hat(la.n);
  Matrix eta(k, la.mus.cols());
  for (Eigen::Index g = 0; g < k; ++g) eta.row(g) = std::sqrt(deltas[g]) * (la.nus.row(g) - la.mus.row(g));

  std::optional<NullPsiSolver> psi;
  if (flavor == StatisticKind::kFdott) {
    detail::check_layout(l, k, c, la.mus.cols());
    if ((l.entries * la.mus).cwiseAbs().maxCoeff() > 1e-10) throw InputError("local alternative: L mu must vanish");
  } else {
    for (Eigen::Index g = 1; g < k; ++g)
      if ((la.mus.row(g) - la.mus.row(0)).cwiseAbs().maxCoeff() > kMassTolerance)
        throw InputError("local alternative: barycenter flavor needs identical base measures");
    if ((la.mus.row(0).array() <= 0.0).any())
      throw InputError("support mismatch: barycenter flavor needs a fully supported base measure");
    psi.emplace(bary_w.size() == 0 ? detail::uniform_weights(static_cast<std::size_t>(k)) : bary_w, c);
  }

  auto functional = [&](const Matrix& h) {
    return flavor == StatisticKind::kFdott ? contrast_ot_sum(l.entries, h, c) / l.scaling_s : psi->value(h);
  };
  auto run = [&](Stream tag, bool shifted) {
    LimitSampleSet set;
    set.method = shifted ? Method::kLocalShift : Method::kPlugin;
    set.seed = seed;
    set.draws.assign(j_draws, 0.0);
    parallel_for(j_draws, threads, [&](std::size_t j) {
      Rng rng = derive_rng(seed, tag, j);
      Matrix g = sample_gaussian(la.mus, deltas, rng);
      if (shifted) g += eta;
      set.draws[j] = functional(g);
    });
    return set;
  };
  LocalPowerResult res;
  res.null_draws = run(Stream::kLocalNull, false);
  res.shifted_draws = run(Stream::kLocalShift, true);
  res.quantile = upper_quantile(res.null_draws.draws, alpha);
  std::size_t hits = 0;
  for (double z : res.shifted_draws.draws)
    if (z >= res.quantile) ++hits;
  res.power = static_cast<double>(hits) / static_cast<double>(j_draws);
  return res;
}

}  // namespace fdott
