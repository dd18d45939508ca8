// Command-line front end: simulate / fit / benchmark / rates / check.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>

#include "cate/data.hpp"
#include "cate/dgp.hpp"
#include "cate/errors.hpp"
#include "cate/harness.hpp"
#include "cate/learners.hpp"

namespace {

using namespace cate;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct SimulateArgs {
  std::string dgp = "piecewise";
  std::uint64_t n = 2000;
  std::uint64_t seed = 1;
  int d = 100, alpha_sparsity = 10, beta_sparsity = 10;
  std::string out = "data.csv";
};

int run_simulate(const SimulateArgs& a) {
  dgp::DgpSample sample =
      a.dgp == "piecewise"
          ? dgp::sample_piecewise(a.n, a.seed)
          : dgp::sample_highdim(a.n, a.d, a.alpha_sparsity, a.beta_sparsity,
                                a.seed);
  write_observations_csv(sample.table, a.out);
  std::cout << "wrote " << sample.table.rows() << " rows ("
            << sample.table.dim() << " covariates) to " << a.out << "\n";
  return kExitOk;
}

struct FitArgs {
  std::string learner = "dr";
  std::string data_path;
  std::string grid;  // lo:hi:step, 1-d only
  std::string eval_csv;
  std::string out = "tau.csv";
  std::uint64_t seed = 1;
  std::string stage2 = "auto";
  std::string propensity = "auto";
  std::string outcome = "auto";
  double eps = 0.01;
  double gamma = 1.0;
  double h = 0.0;
  bool crossfit = false;
};

learners::NuisanceMethod method_from(const std::string& name, bool logistic_ok,
                                     int d) {
  if (name == "auto")
    return d == 1 ? learners::NuisanceMethod::Spline
                  : (logistic_ok ? learners::NuisanceMethod::LassoLogistic
                                 : learners::NuisanceMethod::LassoGaussian);
  if (name == "spline") return learners::NuisanceMethod::Spline;
  if (name == "local_poly") return learners::NuisanceMethod::LocalPoly;
  if (name == "lasso") return learners::NuisanceMethod::LassoGaussian;
  if (name == "lasso_logistic") return learners::NuisanceMethod::LassoLogistic;
  throw ValidationError("unknown method '" + name + "'");
}

Eigen::MatrixXd parse_grid(const std::string& grid) {
  double lo, hi, step;
  char c1, c2;
  std::istringstream is(grid);
  if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' ||
      step <= 0.0)
    throw ValidationError("grid must be lo:hi:step");
  std::vector<double> pts;
  for (double v = lo; v <= hi + step * 1e-9; v += step) pts.push_back(v);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pts.size()), 1);
  for (std::size_t i = 0; i < pts.size(); ++i)
    out(static_cast<Eigen::Index>(i), 0) = pts[i];
  return out;
}

int run_fit(const FitArgs& a) {
  const ObservationTable table = read_observations_csv(a.data_path);
  const int d = static_cast<int>(table.dim());
  const FoldAssignment folds =
      assign_quarter_folds(static_cast<std::size_t>(table.rows()), a.seed);

  harness::LearnerSpec spec;
  if (a.learner == "t") spec.kind = learners::LearnerKind::T;
  else if (a.learner == "x") spec.kind = learners::LearnerKind::X;
  else if (a.learner == "ipw") spec.kind = learners::LearnerKind::Ipw;
  else if (a.learner == "dr") spec.kind = learners::LearnerKind::Dr;
  else if (a.learner == "lpr") spec.kind = learners::LearnerKind::LpR;
  else
    throw ValidationError("unknown learner '" + a.learner +
                          "' (oracle variants need a known DGP)");
  spec.propensity.method = method_from(a.propensity, true, d);
  spec.outcome.method = method_from(a.outcome, false, d);
  spec.clip_eps = a.eps;
  spec.crossfit = a.crossfit;
  spec.lpr.gamma = a.gamma;
  spec.lpr.h = a.h;
  spec.lpr.nuisance.method = spec.propensity.method;
  if (a.stage2 == "auto") {
    spec.stage2.method =
        d == 1 ? smoothers::Stage2Method::Spline : smoothers::Stage2Method::Lasso;
  } else if (a.stage2 == "spline") {
    spec.stage2.method = smoothers::Stage2Method::Spline;
  } else if (a.stage2 == "local_poly") {
    spec.stage2.method = smoothers::Stage2Method::LocalPoly;
    spec.stage2.local_poly.bandwidth_rule =
        smoothers::BandwidthRule::CrossValidated;
  } else if (a.stage2 == "lasso") {
    spec.stage2.method = smoothers::Stage2Method::Lasso;
  } else {
    throw ValidationError("unknown stage2 '" + a.stage2 + "'");
  }

  Eigen::MatrixXd eval_points;
  if (!a.grid.empty()) {
    if (d != 1) throw ValidationError("--grid needs 1-d covariates");
    eval_points = parse_grid(a.grid);
  } else if (!a.eval_csv.empty()) {
    eval_points = read_observations_csv(a.eval_csv).x;
  } else {
    const auto rows = folds.indices(FoldRole::Eval);
    eval_points.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t k = 0; k < rows.size(); ++k)
      eval_points.row(static_cast<Eigen::Index>(k)) = table.x.row(rows[k]);
  }

  learners::CateFit fit;
  learners::FitContext ctx;
  switch (spec.kind) {
    case learners::LearnerKind::T:
      fit = learners::fit_t_learner(table, folds, spec.outcome, ctx);
      break;
    case learners::LearnerKind::X:
      fit = learners::fit_x_learner(table, folds, spec.outcome,
                                    spec.propensity, spec.stage2, spec.clip_eps,
                                    ctx);
      break;
    case learners::LearnerKind::Ipw:
      fit = learners::fit_ipw_learner(table, folds, spec.propensity,
                                      spec.stage2, spec.clip_eps, ctx);
      break;
    case learners::LearnerKind::Dr: {
      learners::DrLearnerConfig cfg;
      cfg.propensity = spec.propensity;
      cfg.outcome = spec.outcome;
      cfg.stage2 = spec.stage2;
      cfg.clip_eps = spec.clip_eps;
      cfg.crossfit = spec.crossfit;
      fit = learners::fit_dr_learner(table, folds, cfg, ctx);
      break;
    }
    default: {
      learners::LpRConfig cfg = spec.lpr;
      cfg.clip_eps = spec.clip_eps;
      cfg.crossfit = spec.crossfit;
      fit = learners::fit_lp_r_learner(table, folds, cfg, ctx);
      break;
    }
  }

  std::ofstream out(a.out);
  if (!out) throw Error("cannot write '" + a.out + "'");
  for (Eigen::Index j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "tau_hat,status\n";
  std::size_t failed = 0;
  char buf[40];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (Eigen::Index i = 0; i < eval_points.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << fmt(eval_points(i, j)) << ",";
    const auto v = fit.try_evaluate(eval_points.row(i).transpose());
    if (v) {
      out << fmt(*v) << ",ok\n";
    } else {
      out << "nan,failed\n";
      ++failed;
    }
  }
  std::cout << "wrote " << eval_points.rows() << " fitted values to " << a.out;
  if (failed) std::cout << " (" << failed << " failed queries)";
  std::cout << "\n";
  return kExitOk;
}

struct BenchmarkArgs {
  std::string config_path;
  std::string out;
  int threads = -1;
};

int run_benchmark(const BenchmarkArgs& a) {
  harness::ExperimentConfig cfg = harness::load_config(a.config_path);
  if (!a.out.empty()) cfg.out_path = a.out;
  if (a.threads >= 0) cfg.threads = a.threads;
  const auto records = harness::run_experiment(cfg);
  write_results_csv(records, cfg.out_path);
  const auto summary = harness::summarize(records, cfg.summary);
  const std::string spath = harness::summary_path_for(cfg.out_path);
  harness::write_summary_csv(summary, spath);
  std::cout << "wrote " << records.size() << " records to " << cfg.out_path
            << " and " << summary.size() << " summary rows to " << spath
            << "\n";
  return kExitOk;
}

struct RatesArgs {
  std::string in_path;
  std::string learner;  // empty: all
  std::string column = "raw";
  std::string out;
};

int run_rates(const RatesArgs& a) {
  const auto records = read_results_csv(a.in_path);
  if (a.column != "raw" && a.column != "scaled")
    throw ValidationError("--column must be raw or scaled");
  // group: learner -> n -> mean mse
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const auto& r : records) {
    if (!a.learner.empty() && r.learner != a.learner) continue;
    const double v = a.column == "raw" ? r.mse_raw : r.mse_scaled;
    if (std::isnan(v)) continue;
    auto& cell = acc[r.learner][static_cast<double>(r.n)];
    cell.first += v;
    cell.second += 1;
  }
  if (acc.empty()) throw ValidationError("no matching records");
  std::ofstream out;
  if (!a.out.empty()) {
    out.open(a.out);
    if (!out) throw Error("cannot write '" + a.out + "'");
    out << "learner,slope,points\n";
  }
  for (const auto& [learner, cells] : acc) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& [n, cell] : cells)
      pairs.emplace_back(n, cell.first / cell.second);
    const double slope = harness::rate_slope(pairs);
    std::cout << learner << ": slope " << slope << " over " << pairs.size()
              << " sample sizes\n";
    if (out.is_open())
      out << learner << "," << slope << "," << pairs.size() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Doubly robust and double-residual CATE estimation benchmarks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Sample a DGP to CSV");
  c_sim->add_option("--dgp", sim.dgp, "piecewise|highdim")
      ->check(CLI::IsMember({"piecewise", "highdim"}));
  c_sim->add_option("--n", sim.n, "rows to draw");
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--d", sim.d, "dimension (highdim)");
  c_sim->add_option("--alpha-sparsity", sim.alpha_sparsity);
  c_sim->add_option("--beta-sparsity", sim.beta_sparsity);
  c_sim->add_option("--out", sim.out, "output CSV");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit one learner on a CSV");
  c_fit->add_option("--learner", fit.learner, "t|x|ipw|dr|lpr");
  c_fit->add_option("--data", fit.data_path, "input CSV (x1..xd,a,y)")
      ->required();
  c_fit->add_option("--grid", fit.grid, "evaluation grid lo:hi:step (1-d)");
  c_fit->add_option("--eval-csv", fit.eval_csv,
                    "CSV whose covariates are the evaluation points");
  c_fit->add_option("--out", fit.out, "output CSV of fitted effects");
  c_fit->add_option("--seed", fit.seed, "fold assignment seed");
  c_fit->add_option("--stage2", fit.stage2, "auto|spline|local_poly|lasso");
  c_fit->add_option("--propensity", fit.propensity,
                    "auto|spline|local_poly|lasso_logistic");
  c_fit->add_option("--outcome", fit.outcome,
                    "auto|spline|local_poly|lasso|lasso_logistic");
  c_fit->add_option("--eps", fit.eps, "propensity clipping");
  c_fit->add_option("--gamma", fit.gamma, "effect smoothness (lpr)");
  c_fit->add_option("--bandwidth", fit.h, "bandwidth (lpr), 0 = preset");
  c_fit->add_flag("--crossfit", fit.crossfit, "average the three rotations");

  BenchmarkArgs bench;
  auto* c_bench =
      app.add_subcommand("benchmark", "Run a Monte-Carlo experiment");
  c_bench->add_option("--config", bench.config_path, "experiment config file")
      ->required();
  c_bench->add_option("--out", bench.out, "results CSV (overrides config)");
  c_bench->add_option("--threads", bench.threads, "worker threads");

  RatesArgs rates;
  auto* c_rates =
      app.add_subcommand("rates", "Log-log MSE slopes from a results CSV");
  c_rates->add_option("--in", rates.in_path, "results CSV")->required();
  c_rates->add_option("--learner", rates.learner, "restrict to one learner");
  c_rates->add_option("--column", rates.column, "raw|scaled");
  c_rates->add_option("--out", rates.out, "slopes CSV");

  auto* c_check =
      app.add_subcommand("check", "Run identity and property diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_fit->parsed()) return run_fit(fit);
    if (c_bench->parsed()) return run_benchmark(bench);
    if (c_rates->parsed()) return run_rates(rates);
    if (c_check->parsed())
      return cate::harness::run_checks(std::cout) ? kExitOk : kExitRuntime;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
