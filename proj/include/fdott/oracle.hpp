#pragma once

// Reference solutions through the dense tableau solver, independent of the
// production LP layouts, plus the randomized cross-check suite behind
// `fdott oracle`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/barycenter.hpp"
#include "fdott/lp/dense_simplex.hpp"
#include "fdott/measures.hpp"
#include "fdott/ot.hpp"
#include "fdott/random.hpp"

namespace fdott::oracle {

inline double checked(const lp::DenseLpResult& r, const char* what) {
  if (r.status != lp::LpStatus::kOptimal) throw SolverError(std::string("oracle LP not optimal: ") + what);
  return r.objective;
}

/// min <c, pi> over couplings of a and b (equal totals), all N^2 cells.
inline double ot_value(const Vector& a, const Vector& b, const CostMatrix& c) {
  const Eigen::Index n = c.size();
  lp::DenseLp lp;
  lp.a.setZero(2 * n, n * n);
  lp.b.resize(2 * n);
  lp.c.resize(n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      lp.a(i, i * n + j) = 1.0;
      lp.a(n + j, i * n + j) = 1.0;
      lp.c[i * n + j] = c(i, j);
    }
  lp.b << a, b;
  return checked(lp::solve_dense_lp(lp), "ot");
}

/// Barycenter with an explicit center variable m: rows of pi^k give mu^k,
/// columns give m.
inline double barycenter_value(const std::vector<ProbMeasure>& mus, const Vector& w, const CostMatrix& c) {
  const auto k = static_cast<Eigen::Index>(mus.size());
  const Eigen::Index n = c.size(), nn = n * n;
  lp::DenseLp lp;
  lp.a.setZero(2 * k * n, k * nn + n);
  lp.b.setZero(2 * k * n);
  lp.c.setZero(k * nn + n);
  for (Eigen::Index g = 0; g < k; ++g) {
    for (Eigen::Index i = 0; i < n; ++i) {
      lp.b[g * n + i] = mus[static_cast<std::size_t>(g)].weights()[i];
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index col = g * nn + i * n + j;
        lp.a(g * n + i, col) = 1.0;
        lp.a(k * n + g * n + j, col) = 1.0;
        lp.c[col] = w[g] * c(i, j);
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) lp.a(k * n + g * n + j, k * nn + j) = -1.0;
  }
  return checked(lp::solve_dense_lp(lp), "barycenter");
}

namespace detail {

// Variables (u^1..u^K, v^1..v^{K-1}), all free; v^0 = v^K = 0.
// Rows: u^k_i + v^k_j - v^{k-1}_j <= w_k c_ij.
inline lp::DenseLp psi_polytope(const Matrix& h, const Vector& w, const CostMatrix& c) {
  const Eigen::Index k = h.rows(), n = c.size();
  const Eigen::Index nu = k * n, nv = (k - 1) * n;
  lp::DenseLp lp;
  lp.a.setZero(k * n * n, nu + nv);
  lp.b.resize(k * n * n);
  lp.sense.assign(static_cast<std::size_t>(k * n * n), lp::RowSense::kLessEqual);
  for (Eigen::Index g = 0; g < k; ++g)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index r = (g * n + i) * n + j;
        lp.a(r, g * n + i) = 1.0;
        if (g < k - 1) lp.a(r, nu + g * n + j) += 1.0;
        if (g > 0) lp.a(r, nu + (g - 1) * n + j) -= 1.0;
        lp.b[r] = w[g] * c(i, j);
      }
  lp.c.setZero(nu + nv);
  for (Eigen::Index g = 0; g < k; ++g) lp.c.segment(g * n, n) = h.row(g).transpose();
  lp.free_var.assign(static_cast<std::size_t>(nu + nv), true);
  lp.maximize = true;
  return lp;
}

inline void append_row(lp::DenseLp& lp, const Vector& row, double rhs, lp::RowSense sense) {
  const Eigen::Index m = lp.a.rows();
  lp.a.conservativeResize(m + 1, Eigen::NoChange);
  lp.a.row(m) = row.transpose();
  lp.b.conservativeResize(m + 1);
  lp.b[m] = rhs;
  lp.sense.push_back(sense);
}

}  // namespace detail

/// max sum_k <u^k, h^k> with sum_k u^k = 0 added to the chained dual constraints.
inline double psi_null_value(const Matrix& h, const Vector& w, const CostMatrix& c) {
  const Eigen::Index k = h.rows(), n = c.size();
  lp::DenseLp lp = detail::psi_polytope(h, w, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector row = Vector::Zero(lp.a.cols());
    for (Eigen::Index g = 0; g < k; ++g) row[g * n + i] = 1.0;
    detail::append_row(lp, row, 0.0, lp::RowSense::kEqual);
  }
  return checked(lp::solve_dense_lp(lp), "psi null");
}

/// max sum_k <u^k, h^k> over the chained dual set with the objective pinned:
/// sum_k <mu^k, u^k> >= B - slack.
inline double psi_face_value(const Matrix& h, const std::vector<ProbMeasure>& mus, const Vector& w,
                             const CostMatrix& c, double slack = 1e-12) {
  const Eigen::Index k = h.rows(), n = c.size();
  const double b = barycenter_value(mus, w, c);
  lp::DenseLp lp = detail::psi_polytope(h, w, c);
  Vector row = Vector::Zero(lp.a.cols());
  for (Eigen::Index g = 0; g < k; ++g) row.segment(g * n, n) = mus[static_cast<std::size_t>(g)].weights();
  detail::append_row(lp, row, b - slack, lp::RowSense::kGreaterEqual);
  return checked(lp::solve_dense_lp(lp), "psi face");
}

/// One-sided difference quotient (OT(tau + t h, 0) - OT(tau, 0)) / t.
inline double finite_difference(const Vector& tau, const Vector& h, const CostMatrix& c, double t) {
  return (signed_ot_value(tau + t * h, c) - signed_ot_value(tau, c)) / t;
}

// ---------------------------------------------------------------------------
// Random instances

/// Identifiable, generally non-metric costs in [0.1, 1.1) off the diagonal.
inline CostMatrix random_cost(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = i == j ? 0.0 : 0.1 + u(rng);
  return CostMatrix(std::move(m));
}

/// Euclidean distances between random points of the unit square.
inline CostMatrix random_metric(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix p(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) << u(rng), u(rng);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = (p.row(i) - p.row(j)).norm();
  return CostMatrix(std::move(m));
}

/// Nonnegative weights with roughly `zero_share` exact zeros, scaled to `mass`.
inline Vector random_weights(Eigen::Index n, Rng& rng, double mass = 1.0, double zero_share = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = u(rng) < zero_share ? 0.0 : u(rng);
  if (w.sum() <= 0.0) w[static_cast<Eigen::Index>(u(rng) * static_cast<double>(n)) % n] = 1.0;
  return w * (mass / w.sum());
}

/// A signed vector summing to 0 with total variation about 2.
inline Vector random_signed(Eigen::Index n, Rng& rng) {
  return random_weights(n, rng, 1.0, 0.2) - random_weights(n, rng, 1.0, 0.2);
}

// ---------------------------------------------------------------------------
// Suite

struct CheckResult {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  [[nodiscard]] bool pass() const { return max_error <= tolerance; }
};

/// solve_ot against the dense LP: relative value error, duality gap and dual
/// feasibility, all measured against 1e-9.
inline CheckResult check_ot(std::size_t count, std::uint64_t seed) {
  CheckResult r{"ot-vs-dense-lp", count, 0.0, 1e-9};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng = derive_rng(seed, {0x07, t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 7);
    const CostMatrix c = random_cost(n, rng);
    const Vector a = random_weights(n, rng, 1.0);
    const Vector b = random_weights(n, rng, 1.0);
    const OTSolution s = solve_ot(NonNegMeasure(a), NonNegMeasure(b), c);
    const double ref = ot_value(a, b, c);
    const double scale = std::max(1.0, std::abs(ref));
    double feas = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) feas = std::max(feas, s.dual_u[i] + s.dual_v[j] - c(i, j));
    const double gap = std::abs(s.dual_u.dot(a) + s.dual_v.dot(b) - s.value);
    r.max_error = std::max({r.max_error, std::abs(s.value - ref) / scale, gap / scale, feas});
  }
  return r;
}

/// solve_barycenter against the center-variable LP, K <= 4, N <= 5.
inline CheckResult check_barycenter(std::size_t count, std::uint64_t seed) {
  CheckResult r{"barycenter-vs-dense-lp", count, 0.0, 1e-9};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng = derive_rng(seed, {0x0B, t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 4);
    const std::size_t k = 2 + t % 3;
    const CostMatrix c = (t % 2 == 0) ? random_metric(n, rng) : random_cost(n, rng);
    std::vector<ProbMeasure> mus;
    for (std::size_t g = 0; g < k; ++g) mus.emplace_back(random_weights(n, rng));
    Vector w = random_weights(static_cast<Eigen::Index>(k), rng, 1.0, 0.0).array() + 0.05;
    w /= w.sum();
    const double got = solve_barycenter(mus, w, c).value;
    const double ref = barycenter_value(mus, w, c);
    r.max_error = std::max(r.max_error, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
  }
  return r;
}

/// dual_face_maximize against one-sided difference quotients at t = 1e-4 and
/// 1e-5, N <= 5, metric costs.
inline CheckResult check_dual_face(std::size_t count, std::uint64_t seed) {
  CheckResult r{"dual-face-vs-finite-difference", count, 0.0, 1e-3};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng = derive_rng(seed, {0x0D, t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 4);
    const CostMatrix c = random_metric(n, rng);
    const Vector tau = (t % 5 == 0) ? Vector(Vector::Zero(n)) : random_signed(n, rng);
    const Vector h = random_signed(n, rng);
    const double got = dual_face_maximize(SignedMeasure(tau), SignedMeasure(h), c);
    for (double step : {1e-4, 1e-5})
      r.max_error = std::max(r.max_error, std::abs(got - finite_difference(tau, h, c, step)));
  }
  return r;
}

/// Signed OT on random triples with a metric cost: symmetry (1e-12), triangle
/// slack (1e-9) and the reduction to plain OT for probability pairs (1e-9).
inline std::vector<CheckResult> check_signed_metric(std::size_t count, std::uint64_t seed) {
  CheckResult sym{"signed-ot-symmetry", count, 0.0, 1e-12};
  CheckResult tri{"signed-ot-triangle", count, 0.0, 1e-9};
  CheckResult red{"signed-ot-probability-reduction", count, 0.0, 1e-9};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng = derive_rng(seed, {0x51, t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 5);
    const CostMatrix c = random_metric(n, rng);
    const SignedMeasure a(random_signed(n, rng)), b(random_signed(n, rng)), e(random_signed(n, rng));
    const double ab = signed_ot(a, b, c), ba = signed_ot(b, a, c);
    sym.max_error = std::max(sym.max_error, std::abs(ab - ba));
    tri.max_error = std::max(tri.max_error, signed_ot(a, e, c) - ab - signed_ot(b, e, c));
    const ProbMeasure p(random_weights(n, rng)), q(random_weights(n, rng));
    const double lhs = signed_ot(SignedMeasure::difference(p, q), SignedMeasure::zero(n), c);
    red.max_error = std::max(red.max_error, std::abs(lhs - solve_ot(p, q, c).value));
  }
  return {sym, tri, red};
}

/// Mean OT over ordered pairs, (1/K^2) sum_{i,j} OT(mu^i, mu^j).
inline double mean_pairwise_ot(const std::vector<ProbMeasure>& mus, const CostMatrix& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < mus.size(); ++i)
    for (std::size_t j = i + 1; j < mus.size(); ++j) s += 2.0 * solve_ot(mus[i], mus[j], c).value;
  const auto k = static_cast<double>(mus.size());
  return s / (k * k);
}

/// D/2 <= B <= D for uniform weights and a metric cost; error is the worst violation.
inline CheckResult check_sandwich(std::size_t count, std::uint64_t seed) {
  CheckResult r{"barycenter-sandwich", count, 0.0, 1e-9};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng = derive_rng(seed, {0x5A, t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 5);
    const std::size_t k = 2 + t % 4;
    const CostMatrix c = random_metric(n, rng);
    std::vector<ProbMeasure> mus;
    for (std::size_t g = 0; g < k; ++g) mus.emplace_back(random_weights(n, rng));
    const double b = solve_barycenter(mus, c).value;
    const double d = mean_pairwise_ot(mus, c);
    r.max_error = std::max({r.max_error, d / 2 - b, b - d});
  }
  return r;
}

/// K = 2, equal weights, metric cost: B = OT / 2.
inline CheckResult check_midpoint(std::size_t count, std::uint64_t seed) {
  CheckResult r{"barycenter-two-group-midpoint", count, 0.0, 1e-9};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng = derive_rng(seed, {0x3D, t});
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 4);
    const CostMatrix c = random_metric(n, rng);
    const ProbMeasure a(random_weights(n, rng)), b(random_weights(n, rng));
    r.max_error = std::max(r.max_error, std::abs(solve_barycenter({a, b}, c).value - solve_ot(a, b, c).value / 2));
  }
  return r;
}

}  // namespace fdott::oracle
