#pragma once

// Count tables and cost matrices from CSV, reports to JSON and CSV.
//
// Count input is either long form (header group,category,count) or raw
// observations (header group,category). Integer group labels are ordered
// numerically, anything else lexicographically; that order must match the
// design's cell order.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fdott/inference.hpp"
#include "fdott/measures.hpp"
#include "fdott/posthoc.hpp"
#include "fdott/sim.hpp"
#include "fdott/version.hpp"

namespace fdott::io {

using Json = nlohmann::json;

struct CountTable {
  GroupSamples samples;
  std::vector<std::string> group_labels;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string where(const std::string& source, std::size_t line, std::size_t col) {
  std::string s = source + ":" + std::to_string(line);
  if (col > 0) s += ", column " + std::to_string(col);
  return s + ": ";
}

inline bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

inline bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

inline bool is_blank_or_comment(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t[0] == '#';
}

}  // namespace detail

/// Reads a count table. n_points > 0 fixes N (categories must lie in 0..N-1);
/// 0 infers N from the largest category.
inline CountTable read_counts(std::istream& in, Eigen::Index n_points = 0, const std::string& source = "<input>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    header = detail::split_csv(line);
    break;
  }
  if (header.empty()) throw InputError(source + ": empty count file");
  for (auto& h : header) std::transform(h.begin(), h.end(), h.begin(), [](unsigned char ch) { return std::tolower(ch); });
  const bool long_form = header == std::vector<std::string>{"group", "category", "count"};
  const bool raw_form = header == std::vector<std::string>{"group", "category"};
  if (!long_form && !raw_form)
    throw InputError(detail::where(source, lineno, 0) + "header must be 'group,category,count' or 'group,category'");

  struct Entry {
    std::string group;
    std::int64_t category;
    std::int64_t count;
  };
  std::vector<Entry> entries;
  std::int64_t max_cat = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw InputError(detail::where(source, lineno, 0) + "expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    if (cells[0].empty()) throw InputError(detail::where(source, lineno, 1) + "empty group label");
    Entry e{cells[0], 0, 1};
    if (!detail::parse_int(cells[1], e.category) || e.category < 0)
      throw InputError(detail::where(source, lineno, 2) + "category must be a nonnegative integer, got '" + cells[1] + "'");
    if (n_points > 0 && e.category >= n_points)
      throw InputError(detail::where(source, lineno, 2) + "category " + cells[1] + " outside 0.." +
                       std::to_string(n_points - 1) + " (cost has " + std::to_string(n_points) + " points)");
    if (long_form && (!detail::parse_int(cells[2], e.count) || e.count < 0))
      throw InputError(detail::where(source, lineno, 3) + "count must be a nonnegative integer, got '" + cells[2] + "'");
    max_cat = std::max(max_cat, e.category);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw InputError(source + ": no data rows");

  std::vector<std::string> labels;
  for (const auto& e : entries) labels.push_back(e.group);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
    std::int64_t v = 0;
    return detail::parse_int(s, v);
  });
  if (numeric)
    std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
  std::map<std::string, Eigen::Index> index;
  for (std::size_t k = 0; k < labels.size(); ++k) index[labels[k]] = static_cast<Eigen::Index>(k);

  const Eigen::Index n = n_points > 0 ? n_points : max_cat + 1;
  GroupSamples::Counts counts = GroupSamples::Counts::Zero(static_cast<Eigen::Index>(labels.size()), n);
  for (const auto& e : entries) counts(index[e.group], e.category) += e.count;
  for (Eigen::Index k = 0; k < counts.rows(); ++k)
    if (counts.row(k).sum() == 0) throw InputError(source + ": group '" + labels[static_cast<std::size_t>(k)] + "' has no observations");
  return CountTable{GroupSamples(std::move(counts)), std::move(labels)};
}

inline CountTable read_counts_file(const std::string& path, Eigen::Index n_points = 0) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open count file '" + path + "'");
  return read_counts(in, n_points, path);
}

/// N x N matrix of reals, one row per line, no header.
inline CostMatrix read_cost(std::istream& in, const std::string& source = "<input>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto cells = detail::split_csv(line);
    std::vector<double> row;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = 0.0;
      if (!detail::parse_real(cells[j], v))
        throw InputError(detail::where(source, lineno, j + 1) + "not a number: '" + cells[j] + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(detail::where(source, lineno, 0) + "row has " + std::to_string(row.size()) + " entries, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(source + ": empty cost file");
  if (rows.size() != rows.front().size())
    throw InputError(source + ": cost matrix is " + std::to_string(rows.size()) + "x" + std::to_string(rows.front().size()) +
                     ", expected square");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  try {
    return CostMatrix(std::move(m));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

inline CostMatrix read_cost_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open cost file '" + path + "'");
  return read_cost(in, path);
}

/// "L" or "L,d"; d defaults to 2.
inline std::pair<int, int> parse_grid(const std::string& spec) {
  const auto cells = detail::split_csv(spec);
  std::int64_t side = 0, dims = 2;
  if (cells.empty() || cells.size() > 2 || !detail::parse_int(cells[0], side) ||
      (cells.size() == 2 && !detail::parse_int(cells[1], dims)))
    throw InputError("grid must look like L or L,d, got '" + spec + "'");
  if (side < 1 || dims < 1) throw InputError("grid side and dimension must be positive");
  return {static_cast<int>(side), static_cast<int>(dims)};
}

/// Shortest decimal text that reads back to the same double.
inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  const std::string long_form = os.str();
  for (int p = 6; p < 17; ++p) {
    std::ostringstream s;
    s << std::setprecision(p) << x;
    if (std::stod(s.str()) == x) return s.str();
  }
  return long_form;
}

// ---------------------------------------------------------------------------
// JSON

inline Json report_to_json(const TestReport& r) {
  return Json{{"statistic", r.statistic},
              {"p_value", r.p_value},
              {"quantile", r.quantile},
              {"alpha", r.alpha},
              {"reject", r.reject},
              {"method", method_name(r.method)},
              {"statistic_kind", statistic_name(r.statistic_kind)},
              {"design", r.design},
              {"draws", r.draws},
              {"seed", r.seed},
              {"version", kVersion}};
}

inline TestReport report_from_json(const Json& j) {
  try {
    TestReport r;
    r.statistic = j.at("statistic").get<double>();
    r.p_value = j.at("p_value").get<double>();
    r.quantile = j.at("quantile").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.reject = j.at("reject").get<bool>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.statistic_kind = parse_statistic(j.at("statistic_kind").get<std::string>());
    r.design = j.at("design").get<std::string>();
    r.draws = j.at("draws").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

inline Json posthoc_to_json(const PosthocReport& r, const std::vector<std::string>& labels = {}) {
  Json rows = Json::array();
  for (std::size_t m = 0; m < r.reject.size(); ++m) {
    Json row{{"statistic", r.statistics[static_cast<Eigen::Index>(m)]},
             {"weight", r.weights[static_cast<Eigen::Index>(m)]},
             {"adjusted_p", r.adjusted_p[static_cast<Eigen::Index>(m)]},
             {"reject", static_cast<bool>(r.reject[m])}};
    if (m < r.pairs.size()) {
      const auto [i, j] = r.pairs[m];
      const auto name = [&](int g) {
        return static_cast<std::size_t>(g) < labels.size() ? labels[static_cast<std::size_t>(g)] : std::to_string(g);
      };
      row["pair"] = {name(i), name(j)};
    }
    rows.push_back(std::move(row));
  }
  return Json{{"method", r.weighted ? "hsd-weighted" : "hsd"},
              {"alpha", r.alpha},
              {"critical_value", r.critical_value},
              {"draws", r.draws},
              {"seed", r.seed},
              {"version", kVersion},
              {"contrasts", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// CSV tables. Every row carries its provenance columns.

inline void write_test_csv(std::ostream& os, const TestReport& r) {
  os << "statistic,p_value,quantile,alpha,reject,method,statistic_kind,design,draws,seed,version\n";
  os << fmt(r.statistic) << ',' << fmt(r.p_value) << ',' << fmt(r.quantile) << ',' << fmt(r.alpha) << ','
     << (r.reject ? 1 : 0) << ',' << method_name(r.method) << ',' << statistic_name(r.statistic_kind) << ','
     << r.design << ',' << r.draws << ',' << r.seed << ',' << kVersion << '\n';
}

inline void write_posthoc_csv(std::ostream& os, const PosthocReport& r, const std::vector<std::string>& labels = {}) {
  os << "row,group_i,group_j,statistic,weight,adjusted_p,reject,critical_value,alpha,method,draws,seed,version\n";
  for (std::size_t m = 0; m < r.reject.size(); ++m) {
    std::string gi, gj;
    if (m < r.pairs.size()) {
      const auto name = [&](int g) {
        return static_cast<std::size_t>(g) < labels.size() ? labels[static_cast<std::size_t>(g)] : std::to_string(g);
      };
      gi = name(r.pairs[m].first);
      gj = name(r.pairs[m].second);
    }
    const auto e = static_cast<Eigen::Index>(m);
    os << m << ',' << gi << ',' << gj << ',' << fmt(r.statistics[e]) << ',' << fmt(r.weights[e]) << ','
       << fmt(r.adjusted_p[e]) << ',' << (r.reject[m] ? 1 : 0) << ',' << fmt(r.critical_value) << ',' << fmt(r.alpha)
       << ',' << (r.weighted ? "hsd-weighted" : "hsd") << ',' << r.draws << ',' << r.seed << ',' << kVersion << '\n';
  }
}

inline void write_experiment_csv(std::ostream& os, const std::vector<ExperimentRow>& rows, double alpha) {
  os << "method,n,mean_p,reject_frac,alpha,replications,draws,seed,version\n";
  for (const auto& r : rows)
    os << r.method << ',' << r.n << ',' << fmt(r.mean_p) << ',' << fmt(r.reject_frac) << ',' << fmt(alpha) << ','
       << r.replications << ',' << r.draws << ',' << r.seed << ',' << kVersion << '\n';
}

inline void write_posthoc_experiment_csv(std::ostream& os, const std::vector<PosthocExperimentRow>& rows, double alpha) {
  os << "method,group_i,group_j,reject_frac,alpha,replications,draws,seed,version\n";
  for (const auto& r : rows)
    os << (r.weighted ? "hsd-weighted" : "hsd") << ',' << r.group_i + 1 << ',' << r.group_j + 1 << ','
       << fmt(r.reject_frac) << ',' << fmt(alpha) << ',' << r.replications << ',' << r.draws << ',' << r.seed << ','
       << kVersion << '\n';
}

inline void write_local_power_csv(std::ostream& os, const std::string& setting, const std::string& flavor,
                                  const LocalPowerResult& r, double alpha) {
  os << setting << ',' << flavor << ',' << fmt(r.power) << ',' << fmt(r.quantile) << ',' << fmt(alpha) << ','
     << r.shifted_draws.size() << ',' << r.shifted_draws.seed << ',' << kVersion << '\n';
}

inline void write_local_power_header(std::ostream& os) {
  os << "setting,statistic,power,quantile,alpha,draws,seed,version\n";
}

/// Raw draws, one per line, tagged with the set they belong to.
inline void write_draws_csv(std::ostream& os, const std::vector<std::pair<std::string, const std::vector<double>*>>& sets,
                            std::uint64_t seed) {
  os << "set,index,value,seed,version\n";
  for (const auto& [name, draws] : sets)
    for (std::size_t j = 0; j < draws->size(); ++j)
      os << name << ',' << j << ',' << fmt((*draws)[j]) << ',' << seed << ',' << kVersion << '\n';
}

}  // namespace fdott::io
