// fdott: batch front end for the test, post-hoc, simulation and oracle routines.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdott/fdott.hpp"

namespace {

using fdott::InputError;
using fdott::io::Json;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitOracle = 4;

struct Common {
  std::string grid;
  std::string cost_file;
  double alpha = 0.05;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
  std::string format;
};

void add_common(CLI::App* app, Common& c, bool with_cost) {
  if (with_cost) {
    app->add_option("--grid", c.grid, "Euclidean grid cost L or L,d");
    app->add_option("--cost", c.cost_file, "N x N cost matrix CSV");
  }
  app->add_option("--alpha", c.alpha, "test level")->capture_default_str();
  app->add_option("--draws", c.draws, "Monte Carlo draws J")->capture_default_str();
  app->add_option("--seed", c.seed, "run seed")->capture_default_str();
  app->add_option("--threads", c.threads, "worker cap (0: all cores); never changes results")->capture_default_str();
  app->add_option("--out", c.out, "output file (default stdout)");
  app->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

fdott::CostMatrix load_cost(const Common& c) {
  if (!c.grid.empty() && !c.cost_file.empty()) throw InputError("give either --grid or --cost, not both");
  if (!c.cost_file.empty()) return fdott::io::read_cost_file(c.cost_file);
  if (c.grid.empty()) throw InputError("a cost is required: --grid L[,d] or --cost FILE");
  const auto [side, dims] = fdott::io::parse_grid(c.grid);
  return fdott::grid_euclidean_cost(side, dims);
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::int64_t v = 0;
    if (!fdott::io::detail::parse_int(fdott::io::detail::trim(tok), v))
      throw InputError(std::string("bad ") + what + " list '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw InputError(std::string("empty ") + what + " list");
  return out;
}

std::vector<std::string> parse_word_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(fdott::io::detail::trim(tok));
  return out;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw InputError("cannot write '" + c.out + "'");
  f << text;
}

fdott::ContrastMatrix design_for(const std::string& design, const std::string& factors, Eigen::Index k, double s) {
  std::vector<int> sizes;
  if (!factors.empty()) sizes = parse_int_list(factors, "factor");
  if (design == "one-way") sizes = {static_cast<int>(k)};
  fdott::ContrastMatrix l = fdott::contrasts_for(design, sizes, s);
  if (l.groups() != k)
    throw InputError("design has " + std::to_string(l.groups()) + " cells but the data has " + std::to_string(k) +
                     " groups");
  return l;
}

// ---------------------------------------------------------------------------

struct TestArgs {
  Common common;
  std::string counts;
  std::string design = "one-way";
  std::string factors;
  std::string statistic = "fdott";
  std::string method = "plugin";
  double gamma = 0.5;
  double scaling = 0.0;
};

int cmd_test(const TestArgs& a) {
  const fdott::CostMatrix c = load_cost(a.common);
  const auto table = fdott::io::read_counts_file(a.counts, c.size());
  const Eigen::Index k = table.samples.n_groups();
  fdott::SamplerOptions opt;
  opt.statistic = fdott::parse_statistic(a.statistic);
  opt.gamma = a.gamma;
  opt.threads = a.common.threads;
  const fdott::ContrastMatrix l = opt.statistic == fdott::StatisticKind::kBarycenter
                                      ? fdott::one_way_contrasts(static_cast<int>(k))
                                      : design_for(a.design, a.factors, k, a.scaling);
  if (opt.statistic == fdott::StatisticKind::kBarycenter && a.design != "one-way")
    throw InputError("the barycenter statistic supports the one-way design only");
  const fdott::TestReport rep = fdott::run_test(table.samples, l, c, fdott::parse_method(a.method), a.common.alpha,
                                                a.common.draws, opt, a.common.seed);
  if (a.common.format == "csv") {
    std::ostringstream os;
    fdott::io::write_test_csv(os, rep);
    emit(a.common, os.str());
  } else {
    emit(a.common, fdott::io::report_to_json(rep).dump(2) + "\n");
  }
  return 0;
}

struct PosthocArgs {
  Common common;
  std::string counts;
  bool weighted = false;
};

int cmd_posthoc(const PosthocArgs& a) {
  const fdott::CostMatrix c = load_cost(a.common);
  const auto table = fdott::io::read_counts_file(a.counts, c.size());
  const fdott::ContrastMatrix l = fdott::one_way_contrasts(static_cast<int>(table.samples.n_groups()));
  const fdott::PosthocReport rep = fdott::tukey_hsd(table.samples, l, c, a.common.alpha, a.common.draws, a.weighted,
                                                    a.common.seed, a.common.threads);
  if (a.common.format == "csv") {
    std::ostringstream os;
    fdott::io::write_posthoc_csv(os, rep, table.group_labels);
    emit(a.common, os.str());
  } else {
    emit(a.common, fdott::io::posthoc_to_json(rep, table.group_labels).dump(2) + "\n");
  }
  return 0;
}

struct SimulateArgs {
  Common common;
  std::string setting = "one-way:1";
  std::string n = "500";
  int grid_side = 5;
  std::string methods = "plugin";
  std::string statistics = "fdott";
  double gamma = 0.5;
  std::size_t reps = 250;
  std::string law = "dirichlet1";
  std::size_t convergence = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto colon = a.setting.find(':');
  if (colon == std::string::npos) throw InputError("setting must look like one-way:1, two-way:3 or hsd:3");
  const std::string family = a.setting.substr(0, colon);
  const int which = parse_int_list(a.setting.substr(colon + 1), "setting").at(0);

  fdott::ExperimentConfig cfg;
  cfg.grid_side = a.grid_side;
  cfg.grid_dims = 2;
  cfg.alpha = a.common.alpha;
  cfg.draws = a.common.draws;
  cfg.replications = a.reps;
  cfg.seed = a.common.seed;
  cfg.threads = a.common.threads;
  cfg.law = fdott::parse_simplex_law(a.law);
  if (family == "one-way") {
    cfg.factor_sizes = {6};
    cfg.truth = fdott::Truth::kPoisson;
    cfg.lambdas = fdott::one_way_setting(which);
  } else if (family == "two-way") {
    cfg.factor_sizes = {2, 3};
    cfg.effect = "interaction:A,B";
    cfg.truth = fdott::two_way_setting(which);
  } else if (family == "hsd") {
    cfg.factor_sizes = {4};
    cfg.truth = fdott::Truth::kPoisson;
    cfg.lambdas = fdott::hsd_setting(which);
  } else {
    throw InputError("unknown setting family '" + family + "' (one-way, two-way, hsd)");
  }
  const auto sizes = parse_int_list(a.n, "sample size");
  if (sizes.size() == 1) cfg.n.assign(static_cast<std::size_t>(cfg.groups()), sizes[0]);
  else cfg.n.assign(sizes.begin(), sizes.end());

  std::ostringstream os;
  if (a.convergence > 0) {
    if (family == "hsd") throw InputError("convergence draws are available for one-way and two-way settings");
    const auto flavor = fdott::parse_statistic(a.statistics);
    const fdott::ConvergenceSamples cs = fdott::convergence_samples(cfg, flavor, a.convergence);
    os << "# ks," << fdott::io::fmt(cs.ks) << "\n";
    fdott::io::write_draws_csv(os, {{"finite", &cs.finite}, {"limit", &cs.limit}}, cfg.seed);
    emit(a.common, os.str());
    return 0;
  }
  if (family == "hsd") {
    fdott::io::write_posthoc_experiment_csv(os, fdott::run_posthoc_experiment(cfg), cfg.alpha);
    emit(a.common, os.str());
    return 0;
  }
  cfg.methods.clear();
  for (const auto& st : parse_word_list(a.statistics))
    for (const auto& m : parse_word_list(a.methods))
      cfg.methods.push_back(fdott::MethodSpec{fdott::parse_statistic(st), fdott::parse_method(m), a.gamma});
  fdott::io::write_experiment_csv(os, fdott::run_experiment(cfg), cfg.alpha);
  emit(a.common, os.str());
  return 0;
}

struct LocalPowerArgs {
  Common common;
  std::string settings = "1,2,3,4,5,6";
  std::string statistics = "fdott,barycenter";
  int grid_side = 5;
  std::int64_t n = 1000;
};

int cmd_local_power(const LocalPowerArgs& a) {
  std::ostringstream os;
  fdott::io::write_local_power_header(os);
  const fdott::CostMatrix c = fdott::grid_euclidean_cost(a.grid_side, 2);
  for (int which : parse_int_list(a.settings, "setting")) {
    const fdott::LocalAlternative la = fdott::local_power_alternative(which, a.grid_side, a.n);
    const fdott::ContrastMatrix l = fdott::one_way_contrasts(static_cast<int>(la.mus.rows()));
    for (const auto& st : parse_word_list(a.statistics)) {
      const auto flavor = fdott::parse_statistic(st);
      const fdott::LocalPowerResult r = fdott::sample_local_limit(la, l, c, flavor, fdott::Vector(), a.common.alpha,
                                                                  a.common.draws, a.common.seed, a.common.threads);
      fdott::io::write_local_power_csv(os, std::to_string(which), st, r, a.common.alpha);
    }
  }
  emit(a.common, os.str());
  return 0;
}

struct OracleArgs {
  Common common;
  std::size_t instances = 200;
};

int cmd_oracle(const OracleArgs& a) {
  const std::vector<fdott::oracle::CheckResult> checks = {
      fdott::oracle::check_ot(a.instances, a.common.seed),
      fdott::oracle::check_barycenter(a.instances, a.common.seed),
      fdott::oracle::check_dual_face(a.instances, a.common.seed),
  };
  bool ok = true;
  for (const auto& r : checks) ok = ok && r.pass();
  if (a.common.format == "csv") {
    std::ostringstream os;
    os << "check,instances,max_error,tolerance,pass,seed,version\n";
    for (const auto& r : checks)
      os << r.name << ',' << r.instances << ',' << fdott::io::fmt(r.max_error) << ',' << fdott::io::fmt(r.tolerance) << ','
         << (r.pass() ? 1 : 0) << ',' << a.common.seed << ',' << fdott::kVersion << '\n';
    emit(a.common, os.str());
  } else {
    Json arr = Json::array();
    for (const auto& r : checks)
      arr.push_back({{"check", r.name}, {"instances", r.instances}, {"max_error", r.max_error},
                     {"tolerance", r.tolerance}, {"pass", r.pass()}});
    emit(a.common, Json{{"checks", arr}, {"pass", ok}, {"seed", a.common.seed}, {"version", fdott::kVersion}}.dump(2) + "\n");
  }
  return ok ? 0 : kExitOracle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport tests for factorial designs"};
  app.set_version_flag("--version", std::string(fdott::kVersion));
  app.require_subcommand(1);

  TestArgs test;
  auto* t = app.add_subcommand("test", "test a linear effect on grouped count data");
  t->add_option("--counts", test.counts, "count CSV (group,category,count or group,category)")->required();
  t->add_option("--design", test.design, "one-way, interaction:A,B, main:A or simple:A|B")->capture_default_str();
  t->add_option("--factors", test.factors, "factor sizes for factorial designs, e.g. 2,3");
  t->add_option("--statistic", test.statistic, "fdott or barycenter")->capture_default_str();
  t->add_option("--method", test.method, "plugin, plugin-pooled, boot-m, boot-deriv or perm")->capture_default_str();
  t->add_option("--gamma", test.gamma, "m-out-of-n exponent for boot-m")->capture_default_str();
  t->add_option("--scaling", test.scaling, "contrast scaling s (default per design)");
  add_common(t, test.common, true);

  PosthocArgs post;
  auto* p = app.add_subcommand("posthoc", "pairwise max-test over all groups");
  p->add_option("--counts", post.counts, "count CSV")->required();
  p->add_flag("--weighted", post.weighted, "equalize variance prefactors for unequal sample sizes");
  add_common(p, post.common, true);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "rejection rates over replications of a named setting");
  s->add_option("--setting", sim.setting, "one-way:1..3, two-way:1..3 or hsd:1..4")->capture_default_str();
  s->add_option("--n", sim.n, "sample size, or one per group")->capture_default_str();
  s->add_option("--grid", sim.grid_side, "grid side L")->capture_default_str();
  s->add_option("--method", sim.methods, "comma-separated methods")->capture_default_str();
  s->add_option("--statistic", sim.statistics, "comma-separated statistics")->capture_default_str();
  s->add_option("--gamma", sim.gamma, "m-out-of-n exponent")->capture_default_str();
  s->add_option("--reps", sim.reps, "replications R")->capture_default_str();
  s->add_option("--law", sim.law, "simplex law: dirichlet1 or normalized-uniform")->capture_default_str();
  s->add_option("--convergence", sim.convergence, "emit this many finite-sample and limit draws instead");
  add_common(s, sim.common, false);

  LocalPowerArgs lp;
  auto* l = app.add_subcommand("local-power", "limit power under local alternatives");
  l->add_option("--setting", lp.settings, "comma-separated settings 1..6")->capture_default_str();
  l->add_option("--statistic", lp.statistics, "comma-separated statistics")->capture_default_str();
  l->add_option("--grid", lp.grid_side, "grid side L")->capture_default_str();
  l->add_option("--n", lp.n, "common group size")->capture_default_str();
  add_common(l, lp.common, false);

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "cross-check the solvers against reference LPs");
  o->add_option("--instances", orc.instances, "random instances per check")->capture_default_str();
  add_common(o, orc.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*t) return cmd_test(test);
    if (*p) return cmd_posthoc(post);
    if (*s) return cmd_simulate(sim);
    if (*l) return cmd_local_power(lp);
    if (*o) return cmd_oracle(orc);
  } catch (const fdott::InputError& e) {
    std::cerr << "fdott: input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fdott::SolverError& e) {
    std::cerr << "fdott: solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "fdott: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
