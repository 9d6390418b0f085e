#pragma once

// Truth generators and Monte Carlo experiment runners for the simulation
// settings (Poisson measures on an L x L grid, uniform draws from the simplex,
// two-way null projections, HSD and local-power settings).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/design.hpp"
#include "fdott/error.hpp"
#include "fdott/inference.hpp"
#include "fdott/measures.hpp"
#include "fdott/parallel.hpp"
#include "fdott/posthoc.hpp"
#include "fdott/random.hpp"

namespace fdott {

/// Poisson(lambda) pmf on 0..side^2-1, normalized.
inline ProbMeasure poisson_grid_measure(double lambda, int side) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be a nonnegative number");
  if (side < 1) throw InputError("grid side must be positive");
  const int n = side * side;
  Vector w = Vector::Zero(n);
  if (lambda == 0.0) {
    w[0] = 1.0;
    return ProbMeasure(w);
  }
  for (int i = 0; i < n; ++i) w[i] = -lambda + i * std::log(lambda) - std::lgamma(i + 1.0);
  w.array() -= w.maxCoeff();
  w = w.array().exp();
  return ProbMeasure(w / w.sum());
}

enum class SimplexLaw { kDirichlet1, kNormalizedUniform };

inline SimplexLaw parse_simplex_law(const std::string& s) {
  if (s == "dirichlet1") return SimplexLaw::kDirichlet1;
  if (s == "normalized_uniform" || s == "normalized-uniform") return SimplexLaw::kNormalizedUniform;
  throw InputError("unknown simplex law '" + s + "' (dirichlet1, normalized_uniform)");
}

inline ProbMeasure uniform_simplex_measure(int n, Rng& rng, SimplexLaw law = SimplexLaw::kDirichlet1) {
  if (n < 1) throw InputError("simplex dimension must be positive");
  Vector w(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  for (;;) {
    for (int i = 0; i < n; ++i) w[i] = law == SimplexLaw::kDirichlet1 ? e(rng) : u(rng);
    const double s = w.sum();
    if (s > 0.0) return ProbMeasure(w / s);
  }
}

/// Cell means mu^{i.} + mu^{.j} - mu^{..} of a K1 x K2 grid stored row-major (K1*K2 x N).
inline Matrix two_way_additive_part(const Matrix& cells, int k1, int k2) {
  const Eigen::Index n = cells.cols();
  Matrix row_mean = Matrix::Zero(k1, n), col_mean = Matrix::Zero(k2, n);
  for (int i = 0; i < k1; ++i)
    for (int j = 0; j < k2; ++j) {
      row_mean.row(i) += cells.row(i * k2 + j) / k2;
      col_mean.row(j) += cells.row(i * k2 + j) / k1;
    }
  const Vector grand = cells.colwise().mean().transpose();
  Matrix out(cells.rows(), n);
  for (int i = 0; i < k1; ++i)
    for (int j = 0; j < k2; ++j) out.row(i * k2 + j) = row_mean.row(i) + col_mean.row(j) - grand.transpose();
  return out;
}

/// Projects onto the interaction null, redrawing cells whose projection goes negative.
inline Matrix two_way_null_project(Matrix cells, int k1, int k2, Rng& rng,
                                   SimplexLaw law = SimplexLaw::kNormalizedUniform, int max_rounds = 10000) {
  if (cells.rows() != static_cast<Eigen::Index>(k1) * k2) throw InputError("two-way grid has the wrong number of cells");
  for (Eigen::Index r = 0; r < cells.rows(); ++r) ProbMeasure(cells.row(r).transpose());
  for (int round = 0; round < max_rounds; ++round) {
    const Matrix proj = two_way_additive_part(cells, k1, k2);
    bool ok = true;
    for (Eigen::Index r = 0; r < proj.rows(); ++r) {
      if (proj.row(r).minCoeff() < 0.0) {
        ok = false;
        cells.row(r) = uniform_simplex_measure(static_cast<int>(cells.cols()), rng, law).weights().transpose();
      } else {
        cells.row(r) = proj.row(r);
      }
    }
    if (ok) return proj;
  }
  throw SolverError("null projection did not converge");
}

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("KS distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) x = a[i];
    else x = b[j];
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Experiments

enum class Truth {
  kPoisson,          // one lambda per group
  kUniformSimplex,   // independent uniform draws per group
  kCommonUniform,    // one uniform draw shared by all groups
  kTwoWayNull,       // additive two-way grid
  kTwoWayOneOff,     // additive grid with the first cell redrawn
  kExplicit,         // caller-supplied K x N matrix
};

struct MethodSpec {
  StatisticKind statistic = StatisticKind::kFdott;
  Method method = Method::kPlugin;
  double gamma = 0.5;

  [[nodiscard]] std::string label() const {
    std::string s = statistic_name(statistic) + "/" + method_name(method);
    if (method == Method::kBootMOfN) {
      std::ostringstream os;
      os << s << "(" << gamma << ")";
      return os.str();
    }
    return s;
  }
};

struct ExperimentConfig {
  std::vector<int> factor_sizes{6};
  std::string effect;  // empty for the one-way layout
  int grid_side = 5;
  int grid_dims = 2;
  std::vector<std::int64_t> n;  // per group
  Truth truth = Truth::kPoisson;
  std::vector<double> lambdas;
  SimplexLaw law = SimplexLaw::kDirichlet1;
  Matrix explicit_truth;
  std::vector<MethodSpec> methods{MethodSpec{}};
  double alpha = 0.05;
  std::size_t draws = 1000;
  std::size_t replications = 250;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  [[nodiscard]] int groups() const {
    int k = 1;
    for (int f : factor_sizes) k *= f;
    return k;
  }
  [[nodiscard]] int points() const {
    int p = 1;
    for (int d = 0; d < grid_dims; ++d) p *= grid_side;
    return p;
  }
};

struct ExperimentRow {
  std::string method;
  std::string n;
  double mean_p = 0.0;
  double reject_frac = 0.0;
  std::size_t replications = 0;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
};

inline ContrastMatrix experiment_contrasts(const ExperimentConfig& cfg) {
  if (cfg.effect.empty()) return one_way_contrasts(cfg.groups());
  return factorial_contrasts(DesignSpec{cfg.factor_sizes, cfg.effect, 0.0});
}

inline CostMatrix experiment_cost(const ExperimentConfig& cfg) { return grid_euclidean_cost(cfg.grid_side, cfg.grid_dims); }

/// The true measures, generated once per experiment from the seed.
inline Matrix truth_measures(const ExperimentConfig& cfg) {
  const int k = cfg.groups(), n = cfg.points();
  Rng rng = derive_rng(cfg.seed, Stream::kTruth, 0);
  Matrix mus(k, n);
  switch (cfg.truth) {
    case Truth::kPoisson:
      if (static_cast<int>(cfg.lambdas.size()) != k)
        throw InputError("need one lambda per group (" + std::to_string(k) + ")");
      if (cfg.grid_dims != 2) throw InputError("Poisson truth lives on an L x L grid");
      for (int g = 0; g < k; ++g)
        mus.row(g) = poisson_grid_measure(cfg.lambdas[static_cast<std::size_t>(g)], cfg.grid_side).weights().transpose();
      break;
    case Truth::kUniformSimplex:
      for (int g = 0; g < k; ++g) mus.row(g) = uniform_simplex_measure(n, rng, cfg.law).weights().transpose();
      break;
    case Truth::kCommonUniform: {
      const Vector w = uniform_simplex_measure(n, rng, cfg.law).weights();
      for (int g = 0; g < k; ++g) mus.row(g) = w.transpose();
      break;
    }
    case Truth::kTwoWayNull:
    case Truth::kTwoWayOneOff: {
      if (cfg.factor_sizes.size() != 2) throw InputError("two-way truth needs two factors");
      Matrix init(k, n);
      for (int g = 0; g < k; ++g)
        init.row(g) = uniform_simplex_measure(n, rng, SimplexLaw::kNormalizedUniform).weights().transpose();
      mus = two_way_null_project(init, cfg.factor_sizes[0], cfg.factor_sizes[1], rng);
      if (cfg.truth == Truth::kTwoWayOneOff) mus.row(0) = uniform_simplex_measure(n, rng, cfg.law).weights().transpose();
      break;
    }
    case Truth::kExplicit:
      if (cfg.explicit_truth.rows() != k || cfg.explicit_truth.cols() != n)
        throw InputError("explicit truth has the wrong shape");
      mus = cfg.explicit_truth;
      break;
  }
  return mus;
}

inline GroupSamples draw_samples(const Matrix& mus, const std::vector<std::int64_t>& n, Rng& rng) {
  GroupSamples::Counts counts(mus.rows(), mus.cols());
  for (Eigen::Index g = 0; g < mus.rows(); ++g) {
    const auto row = multinomial(rng, n[static_cast<std::size_t>(g)], mus.row(g).transpose());
    for (Eigen::Index i = 0; i < mus.cols(); ++i) counts(g, i) = row[static_cast<std::size_t>(i)];
  }
  return GroupSamples(std::move(counts));
}

inline std::string sizes_label(const std::vector<std::int64_t>& n) {
  std::string s;
  for (std::size_t k = 0; k < n.size(); ++k) s += (k ? ";" : "") + std::to_string(n[k]);
  return s;
}

inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t r) {
  return splitmix64(seed ^ splitmix64(0xA24BAED4963EE407ULL + r));
}

namespace detail {
inline void check_experiment(const ExperimentConfig& cfg) {
  if (cfg.replications < 1 || cfg.draws < 1) throw InputError("replications and draws must be at least 1");
  if (static_cast<int>(cfg.n.size()) != cfg.groups())
    throw InputError("need one sample size per group (" + std::to_string(cfg.groups()) + ")");
}
}  // namespace detail

/// Mean p-value and rejection fraction of every configured method over R replications.
inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  detail::check_experiment(cfg);
  const Matrix mus = truth_measures(cfg);
  const ContrastMatrix l = experiment_contrasts(cfg);
  const CostMatrix c = experiment_cost(cfg);
  const std::size_t nm = cfg.methods.size();
  std::vector<double> pvals(cfg.replications * nm), rejects(cfg.replications * nm);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    Rng rng = derive_rng(cfg.seed, Stream::kData, r);
    const GroupSamples data = draw_samples(mus, cfg.n, rng);
    for (std::size_t m = 0; m < nm; ++m) {
      const MethodSpec& spec = cfg.methods[m];
      SamplerOptions opt;
      opt.statistic = spec.statistic;
      opt.gamma = spec.gamma;
      opt.threads = 1;
      const TestReport rep = run_test(data, l, c, spec.method, cfg.alpha, cfg.draws, opt, replication_seed(cfg.seed, r));
      pvals[r * nm + m] = rep.p_value;
      rejects[r * nm + m] = rep.reject ? 1.0 : 0.0;
    }
  });
  std::vector<ExperimentRow> rows;
  for (std::size_t m = 0; m < nm; ++m) {
    ExperimentRow row;
    row.method = cfg.methods[m].label();
    row.n = sizes_label(cfg.n);
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      row.mean_p += pvals[r * nm + m];
      row.reject_frac += rejects[r * nm + m];
    }
    row.mean_p /= static_cast<double>(cfg.replications);
    row.reject_frac /= static_cast<double>(cfg.replications);
    row.replications = cfg.replications;
    row.draws = cfg.draws;
    row.seed = cfg.seed;
    rows.push_back(row);
  }
  return rows;
}

struct PosthocExperimentRow {
  bool weighted = false;
  int group_i = 0, group_j = 0;  // 0-based
  double reject_frac = 0.0;
  std::size_t replications = 0;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
};

/// Per-pair rejection frequencies of the plain and weighted HSD tests on shared data.
inline std::vector<PosthocExperimentRow> run_posthoc_experiment(const ExperimentConfig& cfg) {
  detail::check_experiment(cfg);
  const Matrix mus = truth_measures(cfg);
  const ContrastMatrix l = one_way_contrasts(cfg.groups());
  const CostMatrix c = experiment_cost(cfg);
  const auto m_rows = static_cast<std::size_t>(l.rows());
  std::vector<double> hits(cfg.replications * 2 * m_rows, 0.0);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    Rng rng = derive_rng(cfg.seed, Stream::kData, r);
    const GroupSamples data = draw_samples(mus, cfg.n, rng);
    for (int wtd = 0; wtd < 2; ++wtd) {
      const PosthocReport rep = tukey_hsd(data, l, c, cfg.alpha, cfg.draws, wtd == 1, replication_seed(cfg.seed, r), 1);
      for (std::size_t m = 0; m < m_rows; ++m) hits[(r * 2 + static_cast<std::size_t>(wtd)) * m_rows + m] = rep.reject[m] ? 1.0 : 0.0;
    }
  });
  std::vector<PosthocExperimentRow> rows;
  for (int wtd = 0; wtd < 2; ++wtd)
    for (std::size_t m = 0; m < m_rows; ++m) {
      PosthocExperimentRow row;
      row.weighted = wtd == 1;
      row.group_i = l.pairs[m].first;
      row.group_j = l.pairs[m].second;
      for (std::size_t r = 0; r < cfg.replications; ++r) row.reject_frac += hits[(r * 2 + static_cast<std::size_t>(wtd)) * m_rows + m];
      row.reject_frac /= static_cast<double>(cfg.replications);
      row.replications = cfg.replications;
      row.draws = cfg.draws;
      row.seed = cfg.seed;
      rows.push_back(row);
    }
  return rows;
}

struct ConvergenceSamples {
  std::vector<double> finite;  // sqrt(rho) (T(mu_hat) - T(mu)), scaled like the statistic
  std::vector<double> limit;
  double ks = 0.0;
};

/// Finite-sample draws of the centered statistic against draws of its limit law
/// (null plug-in at the truth when the null holds, the dual-face limit otherwise).
inline ConvergenceSamples convergence_samples(const ExperimentConfig& cfg, StatisticKind flavor, std::size_t count) {
  if (count < 1) throw InputError("need at least one sample");
  if (static_cast<int>(cfg.n.size()) != cfg.groups()) throw InputError("need one sample size per group");
  const Matrix mus = truth_measures(cfg);
  const ContrastMatrix l = experiment_contrasts(cfg);
  const CostMatrix c = experiment_cost(cfg);
  const Vector deltas = delta_hat(cfg.n);
  const double sqrt_rho = std::sqrt(rho(cfg.n));
  const auto k = static_cast<std::size_t>(mus.rows());
  const Vector w = detail::uniform_weights(k);
  const bool bary = flavor == StatisticKind::kBarycenter;
  if (bary && !cfg.effect.empty()) throw InputError("the barycenter statistic is one-way only");

  const double truth_value = bary ? solve_barycenter(unstack_measures(mus), w, c).value
                                  : contrast_ot_sum(l.entries, mus, c) / l.scaling_s;
  const bool null_holds = truth_value <= 1e-12;

  ConvergenceSamples out;
  out.finite.assign(count, 0.0);
  out.limit.assign(count, 0.0);
  parallel_for(count, cfg.threads, [&](std::size_t r) {
    Rng rng = derive_rng(cfg.seed, Stream::kConvergence, r);
    const Matrix hat = empirical_measures(draw_samples(mus, cfg.n, rng));
    const double t = bary ? solve_barycenter(unstack_measures(hat), w, c).value
                          : contrast_ot_sum(l.entries, hat, c) / l.scaling_s;
    out.finite[r] = sqrt_rho * (t - truth_value);
  });

  if (!bary) {
    if (null_holds) {
      parallel_for(count, cfg.threads, [&](std::size_t r) {
        Rng rng = derive_rng(cfg.seed, Stream::kNullDraw, r);
        out.limit[r] = contrast_ot_sum(l.entries, sample_gaussian(mus, deltas, rng), c) / l.scaling_s;
      });
    } else {
      out.limit = sample_alternative_limit(mus, l, c, deltas, count, cfg.seed, cfg.threads).draws;
    }
  } else {
    std::optional<NullPsiSolver> null_psi;
    std::optional<PsiFaceSolver> face_psi;
    std::vector<Eigen::Index> support = detail::joint_support(mus);
    const CostMatrix c_sub = c.restricted(support);
    if (null_holds) null_psi.emplace(w, c_sub);
    else face_psi.emplace(unstack_measures(mus), w, c);
    parallel_for(count, cfg.threads, [&](std::size_t r) {
      Rng rng = derive_rng(cfg.seed, Stream::kNullDraw, r);
      const Matrix g = sample_gaussian(mus, deltas, rng);
      out.limit[r] = null_holds ? null_psi->value(detail::select_columns(g, support)) : face_psi->value(g);
    });
  }
  out.ks = ks_distance(out.finite, out.limit);
  return out;
}

// ---------------------------------------------------------------------------
// Named settings

/// Poisson rates of the one-way settings (i) null, (ii) one differs, (iii) all differ.
inline std::vector<double> one_way_setting(int which) {
  switch (which) {
    case 1: return {13, 13, 13, 13, 13, 13};
    case 2: return {14.84, 13, 13, 13, 13, 13};
    case 3: return {12, 12.4, 12.8, 13.2, 13.6, 14};
    default: throw InputError("one-way settings are 1..3");
  }
}

/// Poisson rates of the HSD settings (i)-(iv), K = 4.
inline std::vector<double> hsd_setting(int which) {
  switch (which) {
    case 1: return {13, 13, 13, 13};
    case 2: return {16, 13, 13, 13};
    case 3: return {13, 13, 16, 13};
    case 4: return {11, 12 + 1.0 / 3.0, 13 + 2.0 / 3.0, 15};
    default: throw InputError("HSD settings are 1..4");
  }
}

/// Perturbation rates of the local-power settings (i)-(vi); the base is Poisson(13) in all groups.
inline std::vector<double> local_power_setting(int which) {
  switch (which) {
    case 1: return {15, 13, 13, 13, 13, 13};
    case 2: return {12.0, 12.4, 12.8, 13.2, 13.6, 14.0};
    case 3: return {1, 13, 13, 13, 13, 13};
    case 4: return {5, 9, 13, 17, 21, 25};
    case 5: return {0, 13, 13, 13, 13, 13};
    case 6: return {0, 6, 12, 18, 24, 30};
    default: throw InputError("local-power settings are 1..6");
  }
}

/// Two-way truth for settings (i) null, (ii) one cell redrawn, (iii) all independent.
inline Truth two_way_setting(int which) {
  switch (which) {
    case 1: return Truth::kTwoWayNull;
    case 2: return Truth::kTwoWayOneOff;
    case 3: return Truth::kUniformSimplex;
    default: throw InputError("two-way settings are 1..3");
  }
}

inline LocalAlternative local_power_alternative(int which, int side, std::int64_t n) {
  const auto tilde = local_power_setting(which);
  const int k = static_cast<int>(tilde.size());
  LocalAlternative la;
  la.mus.resize(k, side * side);
  la.nus.resize(k, side * side);
  for (int g = 0; g < k; ++g) {
    la.mus.row(g) = poisson_grid_measure(13.0, side).weights().transpose();
    la.nus.row(g) = poisson_grid_measure(tilde[static_cast<std::size_t>(g)], side).weights().transpose();
  }
  la.n.assign(static_cast<std::size_t>(k), n);
  return la;
}

}  // namespace fdott
