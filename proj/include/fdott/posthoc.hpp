#pragma once

// Single-step max-tests over the rows of L (Tukey-style HSD), with optional
// per-pair weights that equalize variance prefactors for unequal sample sizes.
// The weights are derived assuming all groups share one measure; under
// heterogeneous supports they are applied as defined, without adjustment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fdott/design.hpp"
#include "fdott/inference.hpp"

namespace fdott {

struct PosthocReport {
  Vector statistics;  // T_m = sqrt(rho) OT([L mu_hat]_m, 0)
  Vector weights;     // all ones for the plain test
  double critical_value = 0.0;
  std::vector<bool> reject;
  Vector adjusted_p;  // (1/J) #{max-draw >= w_m T_m}
  double alpha = 0.05;
  bool weighted = false;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> pairs;
};

/// w_ij = (1/sqrt(delta_i + delta_j)) / sum_{r<s} 1/sqrt(delta_r + delta_s).
inline Vector hsd_weights(const ContrastMatrix& l, const std::vector<std::int64_t>& n) {
  if (!l.is_pairwise()) throw InputError("weighted HSD needs pairwise contrast rows (e_i - e_j)");
  const Vector d = delta_hat(n);
  Vector w(l.rows());
  for (Eigen::Index m = 0; m < l.rows(); ++m) {
    const auto [i, j] = l.pairs[static_cast<std::size_t>(m)];
    w[m] = 1.0 / std::sqrt(d[i] + d[j]);
  }
  return w / w.sum();
}

inline PosthocReport tukey_hsd(const GroupSamples& data, const ContrastMatrix& l, const CostMatrix& c, double alpha,
                               std::size_t j_draws, bool weighted, std::uint64_t seed, unsigned threads = 0) {
  detail::check_layout(l, data.n_groups(), c, data.n_points());
  if (j_draws < 1) throw InputError("need at least one draw");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const std::vector<std::int64_t>& n = data.sizes();
  const Matrix mu_hat = empirical_measures(data);
  const Vector deltas = delta_hat(n);
  const Eigen::Index m_rows = l.rows();

  PosthocReport rep;
  rep.alpha = alpha;
  rep.weighted = weighted;
  rep.draws = j_draws;
  rep.seed = seed;
  rep.pairs = l.pairs;
  rep.weights = weighted ? hsd_weights(l, n) : Vector::Ones(m_rows);

  const Matrix rows = l.entries * mu_hat;
  const double sqrt_rho = std::sqrt(rho(n));
  rep.statistics.resize(m_rows);
  for (Eigen::Index m = 0; m < m_rows; ++m) rep.statistics[m] = sqrt_rho * signed_ot_value(rows.row(m).transpose(), c);

  std::vector<double> max_draws(j_draws, 0.0);
  parallel_for(j_draws, threads, [&](std::size_t j) {
    Rng rng = derive_rng(seed, Stream::kPosthoc, j);
    const Matrix lg = l.entries * sample_gaussian(mu_hat, deltas, rng);
    double best = 0.0;
    for (Eigen::Index m = 0; m < m_rows; ++m)
      best = std::max(best, rep.weights[m] * signed_ot_value(lg.row(m).transpose(), c));
    max_draws[j] = best;
  });
  rep.critical_value = upper_quantile(max_draws, alpha);
  rep.reject.resize(static_cast<std::size_t>(m_rows));
  rep.adjusted_p.resize(m_rows);
  for (Eigen::Index m = 0; m < m_rows; ++m) {
    const double t = rep.weights[m] * rep.statistics[m];
    rep.reject[static_cast<std::size_t>(m)] = decide(t, rep.critical_value);
    std::size_t ge = 0;
    for (double z : max_draws)
      if (z >= t) ++ge;
    rep.adjusted_p[m] = static_cast<double>(ge) / static_cast<double>(j_draws);
  }
  return rep;
}

}  // namespace fdott
