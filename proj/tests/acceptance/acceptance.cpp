// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdott/fdott.hpp"

using namespace fdott;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

Outcome from_checks(const std::vector<oracle::CheckResult>& checks, double seconds, double limit) {
  Outcome o{seconds < limit, ""};
  for (const auto& c : checks) {
    o.pass = o.pass && c.pass();
    o.detail += c.name + " max err " + num(c.max_error) + " (tol " + num(c.tolerance) + "); ";
  }
  o.detail += "limit " + num(limit) + "s";
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig one_way(int setting, std::int64_t n, std::size_t reps) {
  ExperimentConfig cfg;
  cfg.factor_sizes = {6};
  cfg.grid_side = 5;
  cfg.truth = Truth::kPoisson;
  cfg.lambdas = one_way_setting(setting);
  cfg.n.assign(6, n);
  cfg.draws = 1000;
  cfg.replications = reps;
  cfg.alpha = 0.05;
  return cfg;
}

Outcome c1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = oracle::check_ot(200, 1);
  return from_checks({r}, seconds_since(t0), 60);
}

Outcome c2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = oracle::check_signed_metric(200, 2);
  return from_checks(r, seconds_since(t0), 60);
}

Outcome c3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = oracle::check_barycenter(100, 3);
  const auto b = oracle::check_midpoint(100, 3);
  return from_checks({a, b}, seconds_since(t0), 120);
}

Outcome c4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = oracle::check_sandwich(200, 4);
  return from_checks({r}, seconds_since(t0), 120);
}

Outcome c5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = oracle::check_dual_face(100, 5);
  return from_checks({r}, seconds_since(t0), 120);
}

Outcome c6() {
  ExperimentConfig cfg = one_way(1, 500, 250);
  cfg.seed = 6;
  const ExperimentRow row = run_experiment(cfg).at(0);
  const bool ok = row.reject_frac >= 0.02 && row.reject_frac <= 0.09 && row.mean_p >= 0.40 && row.mean_p <= 0.58;
  return {ok, "reject " + num(row.reject_frac) + " in [0.02, 0.09], mean p " + num(row.mean_p) +
                  " in [0.40, 0.58], R=250, J=1000"};
}

Outcome c7() {
  ExperimentConfig cfg = one_way(3, 500, 100);
  cfg.seed = 7;
  const ExperimentRow row = run_experiment(cfg).at(0);
  return {row.reject_frac >= 0.95, "reject " + num(row.reject_frac) + " >= 0.95, mean p " + num(row.mean_p) + ", R=100"};
}

Outcome c8() {
  ExperimentConfig cfg = one_way(1, 50, 100);
  cfg.seed = 8;
  cfg.methods = {MethodSpec{StatisticKind::kFdott, Method::kBootMOfN, 0.8}};
  const ExperimentRow row = run_experiment(cfg).at(0);
  return {row.reject_frac <= 0.02, "reject " + num(row.reject_frac) + " <= 0.02, mean p " + num(row.mean_p) + ", R=100"};
}

Outcome c9() {
  ExperimentConfig cfg;
  cfg.factor_sizes = {2, 3};
  cfg.effect = "interaction:A,B";
  cfg.grid_side = 5;
  cfg.truth = two_way_setting(3);
  cfg.n.assign(6, 100);
  cfg.draws = 1000;
  cfg.replications = 100;
  cfg.seed = 9;
  const ExperimentRow row = run_experiment(cfg).at(0);
  return {row.reject_frac >= 0.90, "reject " + num(row.reject_frac) + " >= 0.90, mean p " + num(row.mean_p) + ", R=100"};
}

Outcome c10() {
  const LocalAlternative la = local_power_alternative(5, 5, 1000);
  const CostMatrix c = grid_euclidean_cost(5, 2);
  const ContrastMatrix l = one_way_contrasts(6);
  const double f = sample_local_limit(la, l, c, StatisticKind::kFdott, {}, 0.05, 10000, 10).power;
  const double b = sample_local_limit(la, l, c, StatisticKind::kBarycenter, {}, 0.05, 10000, 10).power;
  const bool ok = std::abs(f - 0.447) <= 0.05 && std::abs(b - 0.348) <= 0.05 && f - b >= 0.05;
  return {ok, "fdott " + num(f) + " (0.447 +- 0.05), barycenter " + num(b) + " (0.348 +- 0.05), gap " + num(f - b) +
                  " >= 0.05, J=10000"};
}

Outcome c11() {
  ExperimentConfig cfg;
  cfg.factor_sizes = {4};
  cfg.grid_side = 5;
  cfg.truth = Truth::kPoisson;
  cfg.lambdas = hsd_setting(3);
  cfg.n = {60, 150, 210, 90};
  cfg.draws = 1000;
  cfg.replications = 100;
  cfg.seed = 11;
  double plain = -1, weighted = -1;
  for (const auto& row : run_posthoc_experiment(cfg))
    if (row.group_i == 1 && row.group_j == 2) (row.weighted ? weighted : plain) = row.reject_frac;
  return {weighted - plain >= 0.25, "pair (2,3): weighted " + num(weighted) + ", unweighted " + num(plain) +
                                        ", gain " + num(weighted - plain) + " >= 0.25, R=100"};
}

Outcome c12() {
  ExperimentConfig cfg = one_way(1, 50, 250);
  cfg.seed = 12;
  cfg.draws = 199;
  cfg.methods = {MethodSpec{StatisticKind::kFdott, Method::kPermutation, 0.5}};
  const ExperimentRow row = run_experiment(cfg).at(0);
  return {row.reject_frac <= 0.08, "reject " + num(row.reject_frac) + " <= 0.08, R=250, J=199"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome c13() {
  const fs::path dir = fs::temp_directory_path() / ("fdott_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    Rng rng = derive_rng(13, {1});
    Matrix mus(4, 25);
    for (int g = 0; g < 4; ++g) mus.row(g) = poisson_grid_measure(12.0 + g, 5).weights().transpose();
    const GroupSamples data = draw_samples(mus, {40, 60, 80, 100}, rng);
    std::ofstream os(dir / "counts.csv");
    os << "group,category,count\n";
    for (Eigen::Index g = 0; g < 4; ++g)
      for (Eigen::Index i = 0; i < 25; ++i)
        if (data.counts()(g, i) > 0) os << "g" << g + 1 << ',' << i << ',' << data.counts()(g, i) << '\n';
  }
  const std::string counts = (dir / "counts.csv").string();
  const std::vector<std::string> cmds = {
      "test --counts " + counts + " --grid 5 --draws 400 --seed 5",
      "test --counts " + counts + " --grid 5 --draws 200 --method perm --format csv --seed 6",
      "test --counts " + counts + " --grid 5 --draws 100 --statistic barycenter --method boot-deriv --seed 7",
      "posthoc --counts " + counts + " --grid 5 --draws 300 --weighted --seed 8",
      "simulate --setting one-way:2 --grid 3 --n 40 --reps 6 --draws 100 --method plugin,boot-m --seed 9",
      "simulate --setting two-way:1 --grid 3 --n 30 --convergence 50 --seed 10",
      "local-power --setting 1,5 --grid 3 --draws 300 --seed 11",
      "oracle --instances 30 --seed 12",
  };
  Outcome o{true, ""};
  int idx = 0;
  for (const auto& args : cmds) {
    std::string first;
    bool same = true;
    for (unsigned threads : {1U, 2U, 5U}) {
      const fs::path out = dir / ("out_" + std::to_string(idx) + "_" + std::to_string(threads));
      const std::string cmd = std::string(FDOTT_CLI) + " " + args + " --threads " + std::to_string(threads) +
                              " --out " + out.string() + " 2>/dev/null";
      const int status = std::system(cmd.c_str());
      const std::string text = slurp(out);
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0 || text.empty()) same = false;
      if (threads == 1U) first = text;
      else if (text != first) same = false;
    }
    if (!same) {
      o.pass = false;
      o.detail += "differs: " + args.substr(0, args.find(' ')) + "; ";
    }
    ++idx;
  }
  fs::remove_all(dir);
  o.detail += std::to_string(cmds.size()) + " invocations x threads {1,2,5} byte-identical=" + (o.pass ? "yes" : "no");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver oracle equivalence", c1},
      {"signed OT metric suite", c2},
      {"barycenter oracle", c3},
      {"sandwich property", c4},
      {"directional derivative", c5},
      {"null level, one-way plug-in", c6},
      {"power, one-way setting (iii)", c7},
      {"m-out-of-n conservativeness", c8},
      {"two-way interaction detection", c9},
      {"local power ordering", c10},
      {"weighted HSD gain", c11},
      {"permutation validity", c12},
      {"determinism across --threads", c13},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << ": " << criteria[i].first << " | " << o.detail << " ["
              << num(seconds_since(t0)) << "s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
