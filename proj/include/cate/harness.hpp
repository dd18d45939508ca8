#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cate/data.hpp"
#include "cate/dgp.hpp"
#include "cate/learners.hpp"

namespace cate::harness {

enum class MseScaling { Raw, NOver4 };
enum class SummaryMode { Mean, Median };
enum class SweepKind { None, AlphaRate, NGrid };

struct DgpSpec {
  enum class Kind { Piecewise, HighDim } kind = Kind::Piecewise;
  int d = 100;
  int alpha_sparsity = 10;
  int beta_sparsity = 10;
};

struct LearnerSpec {
  learners::LearnerKind kind = learners::LearnerKind::Dr;
  std::string label;
  learners::NuisanceSpec propensity;
  learners::NuisanceSpec outcome;
  smoothers::Stage2Config stage2;
  learners::LpRConfig lpr;
  double clip_eps = 0.01;
  bool crossfit = false;
};

struct ExperimentConfig {
  DgpSpec dgp;
  std::uint64_t n = 2000;  // total rows per replication (all four folds)
  int n_reps = 1;
  std::uint64_t master_seed = 1;
  std::vector<LearnerSpec> learners;
  SweepKind sweep = SweepKind::None;
  std::vector<double> sweep_values;  // alpha grid or n grid
  MseScaling scaling = MseScaling::NOver4;
  SummaryMode summary = SummaryMode::Mean;
  std::string out_path = "results.csv";
  int threads = 0;  // 0: hardware concurrency
};

struct MseResult {
  double scaled = 0.0;
  double raw = 0.0;
  std::size_t failed = 0;
  std::size_t total = 0;
};

//! Mean squared deviation from the truth over the evaluation points; failed
//! queries are excluded and counted. Throws EvaluationEmptyError if nothing
//! evaluates. Scaled value multiplies by n_total/4 under NOver4.
MseResult mse(const learners::CateFit& fit, const dgp::Truth::Fn& tau,
              const Eigen::MatrixXd& eval_points, MseScaling scaling,
              std::uint64_t n_total);

//! Full Monte-Carlo sweep. Deterministic for a fixed config and master seed,
//! independent of the worker count: every (sweep value, replication) owns a
//! derived RNG stream and records are sorted before being returned.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string learner;
  std::string param_name;
  double param_value = 0.0;
  std::uint64_t n = 0;
  int d = 1;
  int reps = 0;
  std::size_t failures = 0;  // replication-level failures (NaN mse)
  std::size_t failed_queries = 0;
  double value = 0.0;  // mean or median of mse_scaled
  double mc_se = 0.0;  // sd/sqrt(reps) for mean; bootstrap for median
};

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records,
                                  SummaryMode mode,
                                  std::uint64_t bootstrap_seed = 0x5EED);

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path);

//! Least-squares slope of log(mse) on log(n). Needs >= 3 distinct n and
//! positive mse values.
double rate_slope(const std::vector<std::pair<double, double>>& n_mse);

//! INI-style experiment configuration (key = value lines, [section]
//! headers, repeated [learner] sections).
ExperimentConfig load_config(const std::string& path);

//! Quick identity/property diagnostics on a known DGP; one line per check.
bool run_checks(std::ostream& os);

std::string summary_path_for(const std::string& results_path);

}  // namespace cate::harness
