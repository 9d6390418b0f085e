#pragma once

// Primal transportation simplex on an m x n bipartite graph with a spanning
// tree basis. Starts from a greedy least-cost allocation, prices with Dantzig's
// rule and falls back to Bland's rule after a run of degenerate pivots. After
// each pivot only the subtree cut off by the leaving cell is re-rooted.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"

namespace fdott::lp {

struct TransportResult {
  double value = 0.0;
  /// Basic cells (row, col, flow); non-listed cells carry zero flow.
  std::vector<std::int32_t> cell_row, cell_col;
  std::vector<double> cell_flow;
  Eigen::VectorXd u, v;  // u_i + v_j <= c_ij, equality on basic cells
  int iterations = 0;
};

class TransportSimplex {
 public:
  /// Solves min <C, X> over X >= 0 with row sums a and column sums b.
  /// a and b must be strictly positive with equal totals.
  template <class CostFn>
  void solve(const double* a, int m, const double* b, int n, CostFn&& cost, TransportResult& out) {
    m_ = m;
    n_ = n;
    const int nodes = m + n;
    cost_.resize(static_cast<std::size_t>(m) * n);
    double max_c = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double cij = cost(i, j);
        cost_[idx(i, j)] = cij;
        max_c = std::max(max_c, std::abs(cij));
      }
    const double rc_tol = 1e-12 * std::max(1.0, max_c);

    initial_basis(a, b);

    u_.assign(static_cast<std::size_t>(m), 0.0);
    v_.assign(static_cast<std::size_t>(n), 0.0);
    parent_.resize(static_cast<std::size_t>(nodes));
    parent_cell_.resize(static_cast<std::size_t>(nodes));
    depth_.resize(static_cast<std::size_t>(nodes));
    mark_.assign(static_cast<std::size_t>(nodes), 0);
    stamp_ = 0;
    build_tree();

    const int max_iter = 200 * nodes + 1000;
    int degenerate_run = 0;
    int iter = 0;
    for (;; ++iter) {
      if (iter > max_iter)
        throw SolverError("transport simplex: iteration limit reached (" + std::to_string(m) + "x" +
                          std::to_string(n) + ")");

      const bool bland = degenerate_run > 50;
      int ei = -1, ej = -1;
      double best = -rc_tol;
      for (int i = 0; i < m && !(bland && ei >= 0); ++i) {
        const double ui = u_[static_cast<std::size_t>(i)];
        const double* crow = &cost_[idx(i, 0)];
        for (int j = 0; j < n; ++j) {
          const double rc = crow[j] - ui - v_[static_cast<std::size_t>(j)];
          if (rc < best) {
            if (basic_[idx(i, j)] >= 0) continue;
            ei = i;
            ej = j;
            if (bland) break;
            best = rc;
          }
        }
      }
      if (ei < 0) break;

      // Cycle through the tree from column node ej back to row node ei.
      collect_cycle(ei, m + ej);
      double theta = std::numeric_limits<double>::infinity();
      int leave = -1;
      for (std::size_t p = 0; p < cycle_.size(); p += 2) {
        const int cell = cycle_[p];
        const double f = flow_[static_cast<std::size_t>(cell)];
        if (f < theta || (f == theta && bland && cell_key(cell) < cell_key(leave))) {
          theta = f;
          leave = cell;
        }
      }
      theta = std::max(theta, 0.0);
      degenerate_run = theta <= 0.0 ? degenerate_run + 1 : 0;

      for (std::size_t p = 0; p < cycle_.size(); ++p) {
        const int cell = cycle_[p];
        flow_[static_cast<std::size_t>(cell)] += (p % 2 == 0) ? -theta : theta;
      }
      // Replace the leaving cell with the entering one.
      exchange(leave, ei, ej, theta);
    }

    out.iterations = iter;
    out.value = 0.0;
    out.cell_row.clear();
    out.cell_col.clear();
    out.cell_flow.clear();
    for (std::size_t e = 0; e < rows_.size(); ++e) {
      const double f = std::max(flow_[e], 0.0);
      out.cell_row.push_back(rows_[e]);
      out.cell_col.push_back(cols_[e]);
      out.cell_flow.push_back(f);
      out.value += f * cost_[idx(rows_[e], cols_[e])];
    }
    out.u = Eigen::Map<const Eigen::VectorXd>(u_.data(), m);
    out.v = Eigen::Map<const Eigen::VectorXd>(v_.data(), n);
  }

 private:
  [[nodiscard]] std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }
  [[nodiscard]] std::int64_t cell_key(int cell) const {
    if (cell < 0) return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(idx(rows_[static_cast<std::size_t>(cell)],
                                         cols_[static_cast<std::size_t>(cell)]));
  }

  // Greedy allocation in order of increasing cost. Each allocation retires
  // exactly one line except the last, which yields a spanning tree.
  void initial_basis(const double* a, const double* b) {
    const int m = m_, n = n_;
    order_.resize(static_cast<std::size_t>(m) * n);
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](int x, int y) {
      return cost_[static_cast<std::size_t>(x)] < cost_[static_cast<std::size_t>(y)] ||
             (cost_[static_cast<std::size_t>(x)] == cost_[static_cast<std::size_t>(y)] && x < y);
    });
    ra_.assign(a, a + m);
    rb_.assign(b, b + n);
    row_alive_.assign(static_cast<std::size_t>(m), 1);
    col_alive_.assign(static_cast<std::size_t>(n), 1);
    int rows_left = m, cols_left = n;
    basic_.assign(static_cast<std::size_t>(m) * n, -1);
    rows_.clear();
    cols_.clear();
    flow_.clear();
    for (int cell : order_) {
      if (rows_left == 0 || cols_left == 0) break;
      const int i = cell / n, j = cell % n;
      if (!row_alive_[static_cast<std::size_t>(i)] || !col_alive_[static_cast<std::size_t>(j)]) continue;
      double& ai = ra_[static_cast<std::size_t>(i)];
      double& bj = rb_[static_cast<std::size_t>(j)];
      const double x = std::min(ai, bj);
      basic_[static_cast<std::size_t>(cell)] = static_cast<int>(rows_.size());
      rows_.push_back(i);
      cols_.push_back(j);
      flow_.push_back(x);
      bool drop_row;
      if (rows_left == 1 && cols_left == 1) {
        rows_left = cols_left = 0;
        break;
      }
      if (rows_left == 1) drop_row = false;
      else if (cols_left == 1) drop_row = true;
      else drop_row = ai <= bj;
      if (drop_row) {
        bj = std::max(bj - ai, 0.0);
        ai = 0.0;
        row_alive_[static_cast<std::size_t>(i)] = 0;
        --rows_left;
      } else {
        ai = std::max(ai - bj, 0.0);
        bj = 0.0;
        col_alive_[static_cast<std::size_t>(j)] = 0;
        --cols_left;
      }
    }
    if (static_cast<int>(rows_.size()) != m + n - 1)
      throw SolverError("transport simplex: initial basis is not a spanning tree");
  }

  void unlink(int node, int e) {
    auto& list = adj_[static_cast<std::size_t>(node)];
    for (auto& x : list)
      if (x == e) {
        x = list.back();
        list.pop_back();
        return;
      }
  }

  // Potentials and parent pointers of the basis tree rooted at row node 0.
  void build_tree() {
    const int m = m_, nodes = m_ + n_;
    adj_.resize(static_cast<std::size_t>(nodes));
    for (auto& list : adj_) list.clear();
    for (std::size_t e = 0; e < rows_.size(); ++e) {
      adj_[static_cast<std::size_t>(rows_[e])].push_back(static_cast<int>(e));
      adj_[static_cast<std::size_t>(m + cols_[e])].push_back(static_cast<int>(e));
    }
    parent_[0] = -1;
    parent_cell_[0] = -1;
    depth_[0] = 0;
    u_[0] = 0.0;
    if (relabel(0, -1) != nodes) throw SolverError("transport simplex: basis lost connectivity");
  }

  // BFS from `start` over the tree, never stepping onto `avoid`. Sets parent,
  // depth and potentials from the start node's values. Returns nodes visited.
  int relabel(int start, int avoid) {
    const int m = m_;
    ++stamp_;
    queue_.assign(1, start);
    mark_[static_cast<std::size_t>(start)] = stamp_;
    if (avoid >= 0) mark_[static_cast<std::size_t>(avoid)] = stamp_;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const int x = queue_[head];
      for (int e : adj_[static_cast<std::size_t>(x)]) {
        const int r = rows_[static_cast<std::size_t>(e)], cnode = m + cols_[static_cast<std::size_t>(e)];
        const int y = (x == r) ? cnode : r;
        if (mark_[static_cast<std::size_t>(y)] == stamp_) continue;
        mark_[static_cast<std::size_t>(y)] = stamp_;
        depth_[static_cast<std::size_t>(y)] = depth_[static_cast<std::size_t>(x)] + 1;
        parent_[static_cast<std::size_t>(y)] = x;
        parent_cell_[static_cast<std::size_t>(y)] = e;
        const double ce = cost_[idx(r, cnode - m)];
        if (y >= m) v_[static_cast<std::size_t>(y - m)] = ce - u_[static_cast<std::size_t>(r)];
        else u_[static_cast<std::size_t>(y)] = ce - v_[static_cast<std::size_t>(cnode - m)];
        queue_.push_back(y);
      }
    }
    return static_cast<int>(queue_.size());
  }

  // Swaps basic cell `leave` for (ei, ej) carrying `theta`, then re-roots the
  // subtree that the leaving cell cut off at the entering endpoint inside it.
  void exchange(int leave, int ei, int ej, double theta) {
    const int m = m_;
    const auto ul = static_cast<std::size_t>(leave);
    const int lr = rows_[ul], lc = m + cols_[ul];
    const int child = parent_cell_[static_cast<std::size_t>(lr)] == leave ? lr : lc;
    unlink(lr, leave);
    unlink(lc, leave);
    basic_[idx(rows_[ul], cols_[ul])] = -1;
    rows_[ul] = ei;
    cols_[ul] = ej;
    flow_[ul] = theta;
    basic_[idx(ei, ej)] = leave;
    adj_[static_cast<std::size_t>(ei)].push_back(leave);
    adj_[static_cast<std::size_t>(m + ej)].push_back(leave);
    // The entering endpoint below `child` is the one whose root path hits it.
    int q = m + ej, p = ei;
    for (int x = ei; x >= 0; x = parent_[static_cast<std::size_t>(x)])
      if (x == child) {
        q = ei;
        p = m + ej;
        break;
      }
    depth_[static_cast<std::size_t>(q)] = depth_[static_cast<std::size_t>(p)] + 1;
    parent_[static_cast<std::size_t>(q)] = p;
    parent_cell_[static_cast<std::size_t>(q)] = leave;
    const double cq = cost_[idx(ei, ej)];
    if (q >= m) v_[static_cast<std::size_t>(q - m)] = cq - u_[static_cast<std::size_t>(ei)];
    else u_[static_cast<std::size_t>(q)] = cq - v_[static_cast<std::size_t>(ej)];
    relabel(q, p);
  }

  // Tree path from column node `from` to row node `to`, as basic cells in order.
  // Even positions lose flow, odd positions gain it.
  void collect_cycle(int to, int from) {
    cycle_.clear();
    tail_.clear();
    int a = from, b = to;
    while (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) {
      cycle_.push_back(parent_cell_[static_cast<std::size_t>(a)]);
      a = parent_[static_cast<std::size_t>(a)];
    }
    while (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) {
      tail_.push_back(parent_cell_[static_cast<std::size_t>(b)]);
      b = parent_[static_cast<std::size_t>(b)];
    }
    while (a != b) {
      cycle_.push_back(parent_cell_[static_cast<std::size_t>(a)]);
      a = parent_[static_cast<std::size_t>(a)];
      tail_.push_back(parent_cell_[static_cast<std::size_t>(b)]);
      b = parent_[static_cast<std::size_t>(b)];
    }
    cycle_.insert(cycle_.end(), tail_.rbegin(), tail_.rend());
  }

  int m_ = 0, n_ = 0;
  std::vector<double> cost_, flow_, ra_, rb_, u_, v_;
  std::vector<int> rows_, cols_, basic_, order_;
  std::vector<char> row_alive_, col_alive_;
  std::vector<int> queue_, parent_, parent_cell_, depth_, cycle_, tail_, mark_;
  std::vector<std::vector<int>> adj_;
  int stamp_ = 0;
};

}  // namespace fdott::lp
