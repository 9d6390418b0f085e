#pragma once

// Exact optimal transport between finite measures, the signed-measure
// extension OT(mu+ + nu-, nu+ + mu-), and maximization of a linear functional
// over the set of optimal dual solutions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"
#include "fdott/lp/revised_simplex.hpp"
#include "fdott/lp/transport_simplex.hpp"
#include "fdott/measures.hpp"

namespace fdott {

/// Entries of a signed direction within this distance of 0 count as 0.
inline constexpr double kSignTolerance = 1e-10;

struct OTSolution {
  double value = 0.0;
  Matrix plan;   // N x N
  Vector dual_u;  // source potentials
  Vector dual_v;  // target potentials
};

/// The vectors U_tau(h), V_tau(h).
struct DualDirection {
  Vector u_part;
  Vector v_part;
};

namespace detail {

struct OtWorkspace {
  lp::TransportSimplex simplex;
  lp::TransportResult result;
  std::vector<int> rows, cols;
  std::vector<double> a, b;
};

inline OtWorkspace& ot_workspace() {
  thread_local OtWorkspace ws;
  return ws;
}

inline void require_identifiable(const CostMatrix& c) {
  if (!c.is_identifiable())
    throw InputError("cost matrix must be identifiable (c_ij = 0 exactly when i = j)");
}

// Solves OT(a, b) restricted to the supports. Fills `out` (plan and extended
// duals over all N points) when given, otherwise only returns the value.
inline double solve_ot_core(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                            const CostMatrix& c, OTSolution* out) {
  const Eigen::Index n = c.size();
  if (a.size() != n || b.size() != n)
    throw InputError("measure length " + std::to_string(a.size()) + "/" + std::to_string(b.size()) +
                     " does not match cost matrix size " + std::to_string(n));
  OtWorkspace& ws = ot_workspace();
  ws.rows.clear();
  ws.cols.clear();
  ws.a.clear();
  ws.b.clear();
  double ma = 0.0, mb = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] > 0.0) {
      ws.rows.push_back(static_cast<int>(i));
      ws.a.push_back(a[i]);
      ma += a[i];
    }
    if (b[i] > 0.0) {
      ws.cols.push_back(static_cast<int>(i));
      ws.b.push_back(b[i]);
      mb += b[i];
    }
  }
  if (std::abs(ma - mb) > kMassTolerance * std::max({1.0, ma, mb}))
    throw InputError("unbalanced transport problem: masses " + std::to_string(ma) + " and " +
                     std::to_string(mb));
  if (out) {
    out->plan.setZero(n, n);
    out->dual_u.setZero(n);
    out->dual_v.setZero(n);
    out->value = 0.0;
  }
  if (ws.rows.empty() || ws.cols.empty()) return 0.0;
  const double ratio = ma / mb;
  for (double& x : ws.b) x *= ratio;

  const Matrix& cm = c.matrix();
  const auto& rows = ws.rows;
  const auto& cols = ws.cols;
  ws.simplex.solve(ws.a.data(), static_cast<int>(ws.a.size()), ws.b.data(), static_cast<int>(ws.b.size()),
                   [&](int i, int j) { return cm(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]); },
                   ws.result);
  const lp::TransportResult& res = ws.result;
  if (!out) return res.value;

  out->value = res.value;
  for (std::size_t e = 0; e < res.cell_flow.size(); ++e)
    out->plan(rows[static_cast<std::size_t>(res.cell_row[e])], cols[static_cast<std::size_t>(res.cell_col[e])]) +=
        res.cell_flow[e];
  // Extend the potentials to all points by c-transforms, keeping u + v <= c.
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vector u = Vector::Constant(n, inf), v = Vector::Constant(n, inf);
  std::vector<char> has_u(static_cast<std::size_t>(n), 0), has_v(static_cast<std::size_t>(n), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    u[rows[r]] = res.u[static_cast<Eigen::Index>(r)];
    has_u[static_cast<std::size_t>(rows[r])] = 1;
  }
  for (std::size_t s = 0; s < cols.size(); ++s) {
    v[cols[s]] = res.v[static_cast<Eigen::Index>(s)];
    has_v[static_cast<std::size_t>(cols[s])] = 1;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (has_u[static_cast<std::size_t>(i)]) continue;
    for (int j : cols) u[i] = std::min(u[i], cm(i, j) - v[j]);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (has_v[static_cast<std::size_t>(j)]) continue;
    for (Eigen::Index i = 0; i < n; ++i) v[j] = std::min(v[j], cm(i, j) - u[i]);
  }
  out->dual_u = u;
  out->dual_v = v;
  return res.value;
}

}  // namespace detail

/// Optimal transport between two nonnegative measures of equal mass.
inline OTSolution solve_ot(const NonNegMeasure& source, const NonNegMeasure& target, const CostMatrix& c) {
  detail::require_identifiable(c);
  OTSolution sol;
  detail::solve_ot_core(source.weights(), target.weights(), c, &sol);
  return sol;
}

/// Value-only OT between raw weight vectors. Faster; no plan or potentials.
inline double ot_value(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, const CostMatrix& c) {
  return detail::solve_ot_core(a, b, c, nullptr);
}

/// OT between the Jordan parts of a zero-sum vector, i.e. OT(w, 0) in the signed sense.
inline double signed_ot_value(const Eigen::Ref<const Vector>& w, const CostMatrix& c) {
  thread_local Vector plus, minus;
  plus = w.cwiseMax(0.0);
  minus = (-w).cwiseMax(0.0);
  return detail::solve_ot_core(plus, minus, c, nullptr);
}

inline double signed_ot(const SignedMeasure& mu, const SignedMeasure& nu, const CostMatrix& c) {
  detail::require_identifiable(c);
  if (mu.size() != nu.size()) throw InputError("signed measures differ in length");
  const Vector src = mu.jordan_plus() + nu.jordan_minus();
  const Vector tgt = nu.jordan_plus() + mu.jordan_minus();
  return detail::solve_ot_core(src, tgt, c, nullptr);
}

inline DualDirection uv_maps(const SignedMeasure& tau, const SignedMeasure& h) {
  if (tau.size() != h.size()) throw InputError("uv_maps: tau and h differ in length");
  const Eigen::Index n = tau.size();
  DualDirection d{Vector::Zero(n), Vector::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = tau.weights()[i], x = h.weights()[i];
    const bool pos = t > kSignTolerance, neg = t < -kSignTolerance;
    if (pos || (!neg && x > 0.0)) d.u_part[i] = x;
    if (neg || (!pos && x < 0.0)) d.v_part[i] = -x;
  }
  return d;
}

/// Maximizes <u, U_tau(h)> + <v, V_tau(h)> over the optimal dual solutions of
/// OT(tau+, tau-). Built once per tau; value() may be called concurrently.
///
/// The face is described by u + v <= c with equality on the support of the
/// plan found for OT(tau+, tau-). Any optimal plan yields the same face when
/// the primal optimum is unique; otherwise the solver's plan is used.
class DualFaceSolver {
 public:
  DualFaceSolver(const SignedMeasure& tau, const CostMatrix& c) : c_(c) {
    detail::require_identifiable(c);
    if (tau.size() != c.size()) throw InputError("dual face: tau length does not match cost matrix");
    const Eigen::Index n = c.size();
    Vector t = tau.weights();
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(t[i]) <= kSignTolerance) t[i] = 0.0;
    tau_ = t;
    if ((t.array() == 0.0).all()) return;

    OTSolution sol;
    detail::solve_ot_core(t.cwiseMax(0.0), (-t).cwiseMax(0.0), c, &sol);
    const double flow_floor = 1e-13 * std::max(1.0, t.cwiseAbs().sum());
    const int nn = static_cast<int>(n);
    lp::SparseColumns a(2 * nn - 1);
    std::vector<double> cost;
    auto add = [&](int i, int j, double sign) {
      a.push(i, sign);
      if (j < nn - 1) a.push(nn + j, sign);
      a.finish_column();
      cost.push_back(sign * c(i, j));
    };
    for (int i = 0; i < nn; ++i)
      for (int j = 0; j < nn; ++j) {
        add(i, j, 1.0);
        if (sol.plan(i, j) > flow_floor) add(i, j, -1.0);
      }
    lp_ = std::make_unique<lp::RevisedSimplex>(std::move(a), Eigen::Map<Vector>(cost.data(), static_cast<Eigen::Index>(cost.size())));
    // Reference basis from a fixed direction so that every later solve starts
    // from the same place.
    Vector href(n);
    for (Eigen::Index i = 0; i < n; ++i) href[i] = static_cast<double>((7 * i + 3) % 11);
    href.array() -= href.mean();
    if (lp_->solve(rhs(href)) != lp::LpStatus::kOptimal)
      throw SolverError("dual face: reference problem not solved to optimality");
    ref_ = lp_->basis();
  }

  [[nodiscard]] double value(const Eigen::Ref<const Vector>& h) const {
    if (h.size() != tau_.size()) throw InputError("dual face: direction length does not match");
    if (!lp_) return signed_ot_value(h, c_);
    lp::RevisedSimplex work = *lp_;
    work.set_basis(ref_);
    const lp::LpStatus st = work.resolve(rhs(h));
    if (st != lp::LpStatus::kOptimal)
      throw SolverError("dual face maximization failed (direction may not sum to zero)");
    return work.objective();
  }

 private:
  [[nodiscard]] Vector rhs(const Eigen::Ref<const Vector>& h) const {
    const Eigen::Index n = tau_.size();
    const DualDirection d = uv_maps(SignedMeasure(tau_), SignedMeasure(h));
    Vector b(2 * n - 1);
    b.head(n) = d.u_part;
    b.tail(n - 1) = d.v_part.head(n - 1);
    return b;
  }

  CostMatrix c_;
  Vector tau_;
  std::unique_ptr<lp::RevisedSimplex> lp_;
  lp::RevisedSimplex::Basis ref_;
};

inline double dual_face_maximize(const SignedMeasure& tau, const SignedMeasure& h, const CostMatrix& c) {
  return DualFaceSolver(tau, c).value(h.weights());
}

}  // namespace fdott
