#include "cate/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "cate/errors.hpp"
#include "cate/pseudo.hpp"
#include "cate/rng.hpp"
#include "cate/smoothers.hpp"

namespace cate::harness {

using learners::CateFit;
using learners::FitContext;
using learners::LearnerKind;

MseResult mse(const CateFit& fit, const dgp::Truth::Fn& tau,
              const Eigen::MatrixXd& eval_points, MseScaling scaling,
              std::uint64_t n_total) {
  MseResult out;
  out.total = static_cast<std::size_t>(eval_points.rows());
  if (out.total == 0) throw ValidationError("no evaluation points");
  double acc = 0.0;
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < eval_points.rows(); ++i) {
    const auto xi = eval_points.row(i).transpose();
    const auto v = fit.try_evaluate(xi);
    if (!v) {
      ++out.failed;
      continue;
    }
    const double e = *v - tau(xi);
    acc += e * e;
    ++ok;
  }
  if (ok == 0) throw EvaluationEmptyError("every evaluation point failed");
  out.raw = acc / static_cast<double>(ok);
  out.scaled = scaling == MseScaling::NOver4
                   ? out.raw * (static_cast<double>(n_total) / 4.0)
                   : out.raw;
  return out;
}

namespace {

const char* dgp_name(DgpSpec::Kind kind) {
  return kind == DgpSpec::Kind::Piecewise ? "piecewise" : "highdim";
}

struct Task {
  std::size_t sweep_idx;
  int rep;
};

CateFit fit_learner(const LearnerSpec& spec, const ObservationTable& data,
                    const FoldAssignment& folds, const FitContext& ctx) {
  switch (spec.kind) {
    case LearnerKind::T:
      return learners::fit_t_learner(data, folds, spec.outcome, ctx);
    case LearnerKind::X:
      return learners::fit_x_learner(data, folds, spec.outcome,
                                     spec.propensity, spec.stage2,
                                     spec.clip_eps, ctx);
    case LearnerKind::Ipw:
      return learners::fit_ipw_learner(data, folds, spec.propensity,
                                       spec.stage2, spec.clip_eps, ctx);
    case LearnerKind::Dr: {
      learners::DrLearnerConfig cfg;
      cfg.propensity = spec.propensity;
      cfg.outcome = spec.outcome;
      cfg.stage2 = spec.stage2;
      cfg.clip_eps = spec.clip_eps;
      cfg.crossfit = spec.crossfit;
      return learners::fit_dr_learner(data, folds, cfg, ctx);
    }
    case LearnerKind::OracleDr:
      return learners::fit_oracle_dr_learner(data, folds, spec.stage2, ctx,
                                             spec.crossfit);
    case LearnerKind::LpR: {
      learners::LpRConfig cfg = spec.lpr;
      cfg.clip_eps = spec.clip_eps;
      cfg.crossfit = spec.crossfit;
      return learners::fit_lp_r_learner(data, folds, cfg, ctx);
    }
  }
  throw ValidationError("unknown learner kind");
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_reps < 1) throw ValidationError("n_reps must be >= 1");
  if (cfg.learners.empty()) throw ValidationError("no learners configured");
  std::vector<double> sweep = cfg.sweep_values;
  if (cfg.sweep == SweepKind::None) {
    sweep = {0.0};
  } else if (sweep.empty()) {
    throw ValidationError("sweep grid is empty");
  }

  std::vector<Task> tasks;
  for (std::size_t s = 0; s < sweep.size(); ++s)
    for (int r = 0; r < cfg.n_reps; ++r) tasks.push_back({s, r});
  std::vector<std::vector<ResultRecord>> slots(tasks.size());

  auto run_task = [&](const Task& task, std::vector<ResultRecord>* out) {
    const double sweep_value = sweep[task.sweep_idx];
    std::uint64_t n_eff = cfg.n;
    if (cfg.sweep == SweepKind::NGrid)
      n_eff = static_cast<std::uint64_t>(sweep_value);
    const std::uint64_t rep_seed = derive_seed(
        cfg.master_seed, task.sweep_idx + 1,
        static_cast<std::uint64_t>(task.rep) + 1);

    dgp::DgpSample sample =
        cfg.dgp.kind == DgpSpec::Kind::Piecewise
            ? dgp::sample_piecewise(n_eff, derive_seed(rep_seed, 1))
            : dgp::sample_highdim(n_eff, cfg.dgp.d, cfg.dgp.alpha_sparsity,
                                  cfg.dgp.beta_sparsity,
                                  derive_seed(rep_seed, 1));
    const FoldAssignment folds =
        assign_quarter_folds(n_eff, derive_seed(rep_seed, 2));
    FitContext ctx;
    ctx.truth = &sample.truth;
    ctx.seed = derive_seed(rep_seed, 3);

    const auto eval_rows = folds.indices(FoldRole::Eval);
    Eigen::MatrixXd eval_points(static_cast<Eigen::Index>(eval_rows.size()),
                                sample.table.dim());
    for (std::size_t k = 0; k < eval_rows.size(); ++k)
      eval_points.row(static_cast<Eigen::Index>(k)) =
          sample.table.x.row(eval_rows[k]);

    for (const LearnerSpec& base : cfg.learners) {
      LearnerSpec spec = base;
      if (cfg.sweep == SweepKind::AlphaRate) {
        if (spec.propensity.method == learners::NuisanceMethod::RateControlled)
          spec.propensity.rate_alpha = sweep_value;
        if (spec.lpr.nuisance.method ==
            learners::NuisanceMethod::RateControlled)
          spec.lpr.nuisance.rate_alpha = sweep_value;
      }
      ResultRecord rec;
      rec.dgp = dgp_name(cfg.dgp.kind);
      rec.learner = spec.label.empty() ? learners::learner_name(spec.kind)
                                       : spec.label;
      rec.n = n_eff;
      rec.d = static_cast<int>(sample.table.dim());
      rec.rep = task.rep;
      rec.seed = rep_seed;
      switch (cfg.sweep) {
        case SweepKind::None: rec.param_name = "none"; break;
        case SweepKind::AlphaRate: rec.param_name = "alpha_rate"; break;
        case SweepKind::NGrid: rec.param_name = "n"; break;
      }
      rec.param_value = sweep_value;
      try {
        const CateFit fit = fit_learner(spec, sample.table, folds, ctx);
        const MseResult m =
            mse(fit, sample.truth.tau, eval_points, cfg.scaling, n_eff);
        rec.mse_scaled = m.scaled;
        rec.mse_raw = m.raw;
        rec.failed_query_count = m.failed;
      } catch (const Error&) {
        rec.mse_scaled = std::numeric_limits<double>::quiet_NaN();
        rec.mse_raw = std::numeric_limits<double>::quiet_NaN();
        rec.failed_query_count = eval_rows.size();
      }
      out->push_back(std::move(rec));
    }
  };

  int threads = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min<int>(threads, static_cast<int>(tasks.size()));
  if (threads <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t)
      run_task(tasks[t], &slots[t]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t t = next.fetch_add(1);
          if (t >= tasks.size()) return;
          run_task(tasks[t], &slots[t]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<ResultRecord> records;
  for (auto& slot : slots)
    for (auto& rec : slot) records.push_back(std::move(rec));
  return records;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records,
                                  SummaryMode mode,
                                  std::uint64_t bootstrap_seed) {
  if (records.empty()) throw ValidationError("no records to summarize");
  using Key = std::tuple<std::string, std::string, double, std::uint64_t, int>;
  std::map<Key, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records)
    groups[{r.learner, r.param_name, r.param_value, r.n, r.d}].push_back(&r);

  std::vector<SummaryRow> rows;
  std::uint64_t group_idx = 0;
  for (const auto& [key, recs] : groups) {
    SummaryRow row;
    row.learner = std::get<0>(key);
    row.param_name = std::get<1>(key);
    row.param_value = std::get<2>(key);
    row.n = std::get<3>(key);
    row.d = std::get<4>(key);
    std::vector<double> vals;
    for (const auto* r : recs) {
      row.failed_queries += r->failed_query_count;
      if (std::isnan(r->mse_scaled))
        ++row.failures;
      else
        vals.push_back(r->mse_scaled);
    }
    row.reps = static_cast<int>(vals.size());
    if (vals.empty()) {
      row.value = std::numeric_limits<double>::quiet_NaN();
      row.mc_se = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(std::move(row));
      ++group_idx;
      continue;
    }
    const double m = static_cast<double>(vals.size());
    if (mode == SummaryMode::Mean) {
      double mean = 0.0;
      for (const double v : vals) mean += v;
      mean /= m;
      double var = 0.0;
      for (const double v : vals) var += (v - mean) * (v - mean);
      var = vals.size() > 1 ? var / (m - 1.0) : 0.0;
      row.value = mean;
      row.mc_se = std::sqrt(var / m);
    } else {
      row.value = median_of(vals);
      RngStream rng(bootstrap_seed, group_idx);
      const int B = 200;
      std::vector<double> boots(B);
      std::vector<double> resample(vals.size());
      for (int b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < vals.size(); ++i)
          resample[i] = vals[rng.below(vals.size())];
        boots[static_cast<std::size_t>(b)] = median_of(resample);
      }
      double bm = 0.0;
      for (const double v : boots) bm += v;
      bm /= B;
      double bv = 0.0;
      for (const double v : boots) bv += (v - bm) * (v - bm);
      row.mc_se = std::sqrt(bv / (B - 1));
    }
    rows.push_back(std::move(row));
    ++group_idx;
  }
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "learner,param_name,param_value,n,d,reps,failures,failed_queries,"
         "mse_scaled_summary,mc_se\n";
  char buf[40];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << r.learner << "," << r.param_name << "," << fmt(r.param_value)
        << "," << r.n << "," << r.d << "," << r.reps << "," << r.failures
        << "," << r.failed_queries << "," << fmt(r.value) << ","
        << fmt(r.mc_se) << "\n";
  }
}

double rate_slope(const std::vector<std::pair<double, double>>& n_mse) {
  std::vector<double> ns;
  for (const auto& [n, m] : n_mse) {
    if (!(m > 0.0))
      throw ValidationError("rate_slope needs strictly positive mse values");
    if (std::find(ns.begin(), ns.end(), n) == ns.end()) ns.push_back(n);
  }
  if (ns.size() < 3)
    throw ValidationError("rate_slope needs at least 3 distinct n values");
  double sx = 0.0, sy = 0.0;
  const double m = static_cast<double>(n_mse.size());
  for (const auto& [n, v] : n_mse) {
    sx += std::log(n);
    sy += std::log(v);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : n_mse) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  return sxy / sxx;
}

std::string summary_path_for(const std::string& results_path) {
  const std::string suffix = ".csv";
  if (results_path.size() > suffix.size() &&
      results_path.compare(results_path.size() - suffix.size(), suffix.size(),
                           suffix) == 0)
    return results_path.substr(0, results_path.size() - suffix.size()) +
           ".summary.csv";
  return results_path + ".summary.csv";
}

bool run_checks(std::ostream& os) {
  bool all_ok = true;
  auto report = [&](const char* name, bool ok, double worst) {
    os << (ok ? "[ok]   " : "[FAIL] ") << name << " (worst " << worst
       << ")\n";
    all_ok = all_ok && ok;
  };

  RngStream rng(20240901);
  auto rand_cfg = [&](double* pi, double* pihat, double* mu0, double* mu0hat,
                      double* mu1, double* mu1hat) {
    *pi = rng.uniform(0.05, 0.95);
    *pihat = rng.uniform(0.05, 0.95);
    *mu0 = rng.uniform(-2.0, 2.0);
    *mu0hat = *mu0 + rng.uniform(-1.0, 1.0);
    *mu1 = rng.uniform(-2.0, 2.0);
    *mu1hat = *mu1 + rng.uniform(-1.0, 1.0);
  };

  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      double pi, ph, mu0, m0h, mu1, m1h;
      rand_cfg(&pi, &ph, &mu0, &m0h, &mu1, &m1h);
      const double mean =
          pi * pseudo::dr_pseudo(1, mu1, pi, mu0, mu1) +
          (1.0 - pi) * pseudo::dr_pseudo(0, mu0, pi, mu0, mu1);
      worst = std::max(worst, std::fabs(mean - (mu1 - mu0)));
    }
    report("dr pseudo-outcome unbiased at the truth", worst <= 1e-12, worst);
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      double pi, ph, mu0, m0h, mu1, m1h;
      rand_cfg(&pi, &ph, &mu0, &m0h, &mu1, &m1h);
      const double mean = pi * pseudo::ipw_pseudo(1, mu1, pi) +
                          (1.0 - pi) * pseudo::ipw_pseudo(0, mu0, pi);
      worst = std::max(worst, std::fabs(mean - (mu1 - mu0)));
    }
    report("ipw pseudo-outcome unbiased at the truth", worst <= 1e-12, worst);
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      double pi, ph, mu0, m0h, mu1, m1h;
      rand_cfg(&pi, &ph, &mu0, &m0h, &mu1, &m1h);
      worst = std::max(
          worst,
          std::fabs(pseudo::error_function_rhat(pi, pi, mu0, m0h, mu1, m1h)));
      worst = std::max(
          worst,
          std::fabs(pseudo::error_function_rhat(pi, ph, mu0, mu0, mu1, mu1)));
    }
    report("error function vanishes under either correct nuisance",
           worst <= 1e-12, worst);
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      double pi, ph, mu0, m0h, mu1, m1h;
      rand_cfg(&pi, &ph, &mu0, &m0h, &mu1, &m1h);
      const double a =
          pseudo::error_function_rhat(pi, ph, mu0, m0h, mu1, m1h);
      const double b =
          pseudo::conditional_bias_oracle(pi, ph, mu0, m0h, mu1, m1h);
      worst = std::max(worst, std::fabs(a - b));
    }
    report("conditional-bias enumeration matches the closed form",
           worst <= 1e-10, worst);
  }
  {
    const double eps = 0.05;
    double worst = -1.0;
    bool ok = true;
    for (int t = 0; t < 1000; ++t) {
      double pi, ph, mu0, m0h, mu1, m1h;
      rand_cfg(&pi, &ph, &mu0, &m0h, &mu1, &m1h);
      ph = pseudo::clip_propensity(ph, eps);
      pi = pseudo::clip_propensity(pi, eps);
      const double r =
          pseudo::error_function_rhat(pi, ph, mu0, m0h, mu1, m1h);
      const double bound = (2.0 / (eps * eps)) * (pi - ph) * (pi - ph) *
                           ((mu1 - m1h) * (mu1 - m1h) +
                            (mu0 - m0h) * (mu0 - m0h));
      ok = ok && r * r <= bound + 1e-12;
      worst = std::max(worst, r * r - bound);
    }
    report("product-form bound on the squared error function", ok, worst);
  }
  {
    // shift equivariance of the spline second stage
    const Eigen::Index n = 60;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform(-1.0, 1.0);
      y[i] = std::sin(3.0 * x(i, 0)) + rng.normal(0.0, 0.1);
    }
    smoothers::Stage2Config cfg;
    cfg.method = smoothers::Stage2Method::Spline;
    const auto f = smoothers::stage2_regress(y, x, cfg);
    const auto g =
        smoothers::stage2_regress(y.array() + 2.5, x, cfg);
    double worst = 0.0;
    for (double q = -0.9; q <= 0.9; q += 0.1)
      worst = std::max(worst,
                       std::fabs(g.evaluate1(q) - f.evaluate1(q) - 2.5));
    report("second-stage shift equivariance", worst <= 1e-8, worst);
  }
  {
    const Eigen::Index n = 80;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform(-1.0, 1.0);
      y[i] = 2.0 + 3.0 * x(i, 0);
    }
    smoothers::LocalPolyConfig cfg;
    cfg.degree = 1;
    cfg.bandwidth = 0.5;
    const auto f =
        smoothers::local_poly_fit(x, y, Eigen::VectorXd(), cfg);
    double worst = 0.0;
    for (double q = -0.8; q <= 0.8; q += 0.2)
      worst = std::max(worst, std::fabs(f.evaluate1(q) - (2.0 + 3.0 * q)));
    report("local polynomial reproduces its degree", worst <= 1e-8, worst);
  }
  {
    const Eigen::Index n = 50;
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = rng.uniform(0.0, 1.0);
      y[i] = std::cos(4.0 * x[i]) + rng.normal(0.0, 0.2);
    }
    const auto f = smoothers::smoothing_spline_fit(x, y);
    double worst = 0.0;
    for (double q = 0.1; q <= 0.9; q += 0.2) {
      Eigen::VectorXd qq(1);
      qq[0] = q;
      worst = std::max(worst, std::fabs(f.weights_at(qq).sum() - 1.0));
    }
    report("spline smoother weights sum to one", worst <= 1e-8, worst);
  }
  {
    const double v1 = dgp::gyorfi_mu(-1.0), v2 = dgp::gyorfi_mu(-0.25),
                 v3 = dgp::gyorfi_mu(0.2);
    const bool ok = std::fabs(v1 - 0.5) < 1e-15 &&
                    std::fabs(v2 - 0.75) < 1e-15 &&
                    std::fabs(v3 - 1.075) < 1e-15 && dgp::gyorfi_mu(0.0) == 0.0;
    report("piecewise regression curve reference values", ok, 0.0);
  }
  return all_ok;
}

}  // namespace cate::harness
