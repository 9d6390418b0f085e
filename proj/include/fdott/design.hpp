#pragma once

// Contrast matrices for one-way and factorial layouts, and sample-size
// coefficients.
//
// Groups of a factorial design are cells enumerated lexicographically over the
// factor levels, first factor slowest: for sizes (2,3) the order is
// 11,12,13,21,22,23.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdott/error.hpp"
#include "fdott/measures.hpp"

namespace fdott {

struct ContrastMatrix {
  Matrix entries;  // M x K
  double scaling_s = 1.0;
  std::string label;
  /// Index pairs (i, j) when every row is e_i - e_j; empty otherwise.
  std::vector<std::pair<int, int>> pairs;

  [[nodiscard]] Eigen::Index rows() const { return entries.rows(); }
  [[nodiscard]] Eigen::Index groups() const { return entries.cols(); }
  [[nodiscard]] bool is_pairwise() const { return !pairs.empty(); }
};

namespace detail {

inline void validate_contrast(const ContrastMatrix& l) {
  if (l.entries.rows() == 0 || l.entries.cols() == 0) throw InputError("contrast matrix is empty");
  if (!l.entries.allFinite()) throw InputError("contrast matrix has non-finite entries");
  if (!(l.scaling_s > 0.0) || !std::isfinite(l.scaling_s)) throw InputError("scaling s must be positive");
  for (Eigen::Index m = 0; m < l.entries.rows(); ++m)
    if (std::abs(l.entries.row(m).sum()) > 1e-12 * std::max(1.0, l.entries.row(m).cwiseAbs().sum()))
      throw InputError("contrast row " + std::to_string(m) + " does not sum to zero");
}

inline std::vector<std::pair<int, int>> detect_pairs(const Matrix& e) {
  std::vector<std::pair<int, int>> pairs;
  for (Eigen::Index m = 0; m < e.rows(); ++m) {
    int plus = -1, minus = -1, other = 0;
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
      if (e(m, k) == 1.0 && plus < 0) plus = static_cast<int>(k);
      else if (e(m, k) == -1.0 && minus < 0) minus = static_cast<int>(k);
      else if (e(m, k) != 0.0) ++other;
    }
    if (plus < 0 || minus < 0 || other > 0) return {};
    pairs.emplace_back(plus, minus);
  }
  return pairs;
}

}  // namespace detail

/// All pairwise differences e_i - e_j, i < j, with s = K^2.
inline ContrastMatrix one_way_contrasts(int k) {
  if (k < 2) throw InputError("one-way layout needs K >= 2 groups, got " + std::to_string(k));
  ContrastMatrix l;
  l.entries.setZero(k * (k - 1) / 2, k);
  Eigen::Index m = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j, ++m) {
      l.entries(m, i) = 1.0;
      l.entries(m, j) = -1.0;
      l.pairs.emplace_back(i, j);
    }
  l.scaling_s = static_cast<double>(k) * k;
  l.label = "one-way";
  return l;
}

/// Wraps a user matrix; s defaults to the number of groups.
inline ContrastMatrix custom_contrasts(Matrix entries, double s = 0.0, std::string label = "custom") {
  ContrastMatrix l;
  l.scaling_s = s > 0.0 ? s : static_cast<double>(entries.cols());
  l.entries = std::move(entries);
  l.label = std::move(label);
  detail::validate_contrast(l);
  l.pairs = detail::detect_pairs(l.entries);
  return l;
}

struct DesignSpec {
  std::vector<int> factor_sizes;
  /// "interaction:A,B", "main:A", "simple:A|B"; factors are named A, B, C, ...
  /// or by 1-based index.
  std::string effect;
  double scaling_s = 0.0;  // 0 selects the default
};

namespace detail {

inline int parse_factor(const std::string& tok, std::size_t d) {
  std::string t;
  for (char ch : tok)
    if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
  int f = -1;
  if (t.size() == 1 && std::isalpha(static_cast<unsigned char>(t[0]))) {
    f = std::toupper(static_cast<unsigned char>(t[0])) - 'A';
  } else if (!t.empty() && std::all_of(t.begin(), t.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
    f = std::stoi(t) - 1;
  }
  if (f < 0 || static_cast<std::size_t>(f) >= d)
    throw InputError("unknown factor '" + tok + "' for a design with " + std::to_string(d) + " factors");
  return f;
}

inline std::vector<int> parse_factor_list(const std::string& s, std::size_t d) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_factor(tok, d));
  if (out.empty()) throw InputError("effect lists no factors");
  std::vector<int> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw InputError("factor listed twice in effect");
  return out;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

/// Kronecker construction: centering I - 11^T/K_f on effect factors, identity
/// on conditioning factors, averaging row 1^T/K_f on the rest.
inline ContrastMatrix factorial_contrasts(const DesignSpec& spec) {
  const std::size_t d = spec.factor_sizes.size();
  if (d == 0) throw InputError("design has no factors");
  for (int kf : spec.factor_sizes)
    if (kf < 2) throw InputError("every factor needs at least two levels");
  const auto colon = spec.effect.find(':');
  if (colon == std::string::npos) throw InputError("unknown effect '" + spec.effect + "'");
  const std::string kind = spec.effect.substr(0, colon);
  const std::string args = spec.effect.substr(colon + 1);

  enum class Role { kAverage, kCenter, kKeep };
  std::vector<Role> role(d, Role::kAverage);
  if (kind == "interaction" || kind == "main") {
    const auto fs = detail::parse_factor_list(args, d);
    if (kind == "main" && fs.size() != 1) throw InputError("main effect takes exactly one factor");
    if (kind == "interaction" && fs.size() < 2) throw InputError("interaction needs at least two factors");
    for (int f : fs) role[static_cast<std::size_t>(f)] = Role::kCenter;
  } else if (kind == "simple") {
    const auto bar = args.find('|');
    if (bar == std::string::npos) throw InputError("simple effect must look like simple:A|B");
    const auto eff = detail::parse_factor_list(args.substr(0, bar), d);
    const auto cond = detail::parse_factor_list(args.substr(bar + 1), d);
    for (int f : eff) role[static_cast<std::size_t>(f)] = Role::kCenter;
    for (int f : cond) {
      if (role[static_cast<std::size_t>(f)] == Role::kCenter) throw InputError("factor is both effect and condition");
      role[static_cast<std::size_t>(f)] = Role::kKeep;
    }
  } else {
    throw InputError("unknown effect '" + kind + "' (expected interaction, main or simple)");
  }

  Matrix l = Matrix::Ones(1, 1);
  double cells = 1.0;
  for (std::size_t f = 0; f < d; ++f) {
    const int kf = spec.factor_sizes[f];
    cells *= kf;
    Matrix block;
    switch (role[f]) {
      case Role::kCenter:
        block = Matrix::Identity(kf, kf) - Matrix::Constant(kf, kf, 1.0 / kf);
        break;
      case Role::kKeep:
        block = Matrix::Identity(kf, kf);
        break;
      case Role::kAverage:
        block = Matrix::Constant(1, kf, 1.0 / kf);
        break;
    }
    l = detail::kron(l, block);
  }
  ContrastMatrix out;
  out.entries = std::move(l);
  out.scaling_s = spec.scaling_s > 0.0 ? spec.scaling_s : cells;
  out.label = spec.effect;
  detail::validate_contrast(out);
  return out;
}

/// Parses a design descriptor: "one-way:K" or "<effect>" with factor sizes.
inline ContrastMatrix contrasts_for(const std::string& design, const std::vector<int>& factor_sizes, double s = 0.0) {
  if (design.rfind("one-way", 0) == 0) {
    int k = 0;
    if (design.size() > 8 && design[7] == ':') k = std::stoi(design.substr(8));
    else if (factor_sizes.size() == 1) k = factor_sizes[0];
    else throw InputError("one-way design needs the number of groups");
    ContrastMatrix l = one_way_contrasts(k);
    if (s > 0.0) l.scaling_s = s;
    return l;
  }
  return factorial_contrasts(DesignSpec{factor_sizes, design, s});
}

/// rho_n = 1 / sum_k (1 / n_k).
inline double rho(const std::vector<std::int64_t>& n) {
  if (n.empty()) throw InputError("rho needs at least one sample size");
  double inv = 0.0;
  for (auto nk : n) {
    if (nk < 1) throw InputError("sample sizes must be positive");
    inv += 1.0 / static_cast<double>(nk);
  }
  return 1.0 / inv;
}

/// delta_k = rho_n / n_k; sums to 1.
inline Vector delta_hat(const std::vector<std::int64_t>& n) {
  const double r = rho(n);
  Vector d(static_cast<Eigen::Index>(n.size()));
  for (std::size_t k = 0; k < n.size(); ++k) d[static_cast<Eigen::Index>(k)] = r / static_cast<double>(n[k]);
  return d;
}

}  // namespace fdott
