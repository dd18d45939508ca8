#include <cmath>
#include <fstream>
#include <sstream>

#include "cate/errors.hpp"
#include "cate/harness.hpp"

namespace cate::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct Line {
  int number;
  std::string section;
  std::string key, value;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ValidationError("config line " + std::to_string(line) + ": " + msg);
}

double to_real(const Line& l) {
  char* end = nullptr;
  const double v = std::strtod(l.value.c_str(), &end);
  if (end == l.value.c_str() || *end != '\0')
    fail(l.number, "expected a number, got '" + l.value + "'");
  return v;
}

long long to_int(const Line& l) {
  const double v = to_real(l);
  if (v != std::floor(v)) fail(l.number, "expected an integer");
  return static_cast<long long>(v);
}

bool to_bool(const Line& l) {
  if (l.value == "true" || l.value == "1" || l.value == "yes") return true;
  if (l.value == "false" || l.value == "0" || l.value == "no") return false;
  fail(l.number, "expected true/false");
}

// "a:b:step" ranges or comma lists
std::vector<double> to_grid(const Line& l) {
  std::vector<double> out;
  if (l.value.find(':') != std::string::npos) {
    double a, b, step;
    char c1, c2;
    std::istringstream is(l.value);
    if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' ||
        step <= 0.0)
      fail(l.number, "expected lo:hi:step");
    for (double v = a; v <= b + step * 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::istringstream is(l.value);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      fail(l.number, "bad grid entry '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(l.number, "empty grid");
  return out;
}

learners::NuisanceMethod to_method(const Line& l) {
  if (l.value == "spline") return learners::NuisanceMethod::Spline;
  if (l.value == "local_poly") return learners::NuisanceMethod::LocalPoly;
  if (l.value == "lasso") return learners::NuisanceMethod::LassoGaussian;
  if (l.value == "lasso_logistic")
    return learners::NuisanceMethod::LassoLogistic;
  if (l.value == "true") return learners::NuisanceMethod::TrueFunction;
  if (l.value == "rate_controlled")
    return learners::NuisanceMethod::RateControlled;
  fail(l.number, "unknown nuisance method '" + l.value + "'");
}

smoothers::Stage2Method to_stage2(const Line& l) {
  if (l.value == "spline") return smoothers::Stage2Method::Spline;
  if (l.value == "local_poly") return smoothers::Stage2Method::LocalPoly;
  if (l.value == "lasso") return smoothers::Stage2Method::Lasso;
  fail(l.number, "unknown stage2 method '" + l.value + "'");
}

learners::LearnerKind to_learner(const Line& l) {
  if (l.value == "t") return learners::LearnerKind::T;
  if (l.value == "x") return learners::LearnerKind::X;
  if (l.value == "ipw") return learners::LearnerKind::Ipw;
  if (l.value == "dr") return learners::LearnerKind::Dr;
  if (l.value == "oracle_dr") return learners::LearnerKind::OracleDr;
  if (l.value == "lpr") return learners::LearnerKind::LpR;
  fail(l.number, "unknown learner '" + l.value + "'");
}

void apply_learner_key(const Line& l, LearnerSpec* spec) {
  if (l.key == "name") {
    spec->kind = to_learner(l);
  } else if (l.key == "label") {
    spec->label = l.value;
  } else if (l.key == "propensity") {
    spec->propensity.method = to_method(l);
    spec->lpr.nuisance.method = spec->propensity.method;
  } else if (l.key == "outcome") {
    spec->outcome.method = to_method(l);
  } else if (l.key == "eps") {
    spec->clip_eps = to_real(l);
    spec->lpr.clip_eps = spec->clip_eps;
  } else if (l.key == "crossfit") {
    spec->crossfit = to_bool(l);
  } else if (l.key == "rate_alpha") {
    spec->propensity.rate_alpha = to_real(l);
    spec->lpr.nuisance.rate_alpha = spec->propensity.rate_alpha;
  } else if (l.key == "rate_n") {
    spec->propensity.rate_n = to_real(l);
    spec->lpr.nuisance.rate_n = spec->propensity.rate_n;
  } else if (l.key == "stage2") {
    spec->stage2.method = to_stage2(l);
  } else if (l.key == "degree") {
    spec->stage2.local_poly.degree = static_cast<int>(to_int(l));
  } else if (l.key == "bandwidth") {
    if (l.value == "cv") {
      spec->stage2.local_poly.bandwidth_rule =
          smoothers::BandwidthRule::CrossValidated;
    } else if (l.value == "preset") {
      spec->stage2.local_poly.bandwidth_rule =
          smoothers::BandwidthRule::RatePreset;
    } else {
      spec->stage2.local_poly.bandwidth_rule = smoothers::BandwidthRule::Fixed;
      spec->stage2.local_poly.bandwidth = to_real(l);
    }
  } else if (l.key == "bandwidth_scale") {
    spec->stage2.local_poly.bandwidth_scale = to_real(l);
  } else if (l.key == "kernel") {
    if (l.value == "epanechnikov")
      spec->stage2.local_poly.kernel =
          smoothers::KernelKind::EpanechnikovProduct;
    else if (l.value == "boxcar")
      spec->stage2.local_poly.kernel = smoothers::KernelKind::BoxcarProduct;
    else
      fail(l.number, "unknown kernel '" + l.value + "'");
    spec->lpr.kernel = spec->stage2.local_poly.kernel;
  } else if (l.key == "gamma") {
    spec->lpr.gamma = to_real(l);
  } else if (l.key == "h") {
    spec->lpr.h = to_real(l);
  } else if (l.key == "h_scale") {
    spec->lpr.h_scale = to_real(l);
  } else if (l.key == "k_equivalent") {
    spec->lpr.k_equivalent = to_real(l);
  } else if (l.key == "cv_folds") {
    spec->outcome.lasso.cv_folds = static_cast<int>(to_int(l));
    spec->propensity.lasso.cv_folds = spec->outcome.lasso.cv_folds;
    spec->stage2.lasso.cv_folds = spec->outcome.lasso.cv_folds;
  } else if (l.key == "lambda_points") {
    const int p = static_cast<int>(to_int(l));
    spec->outcome.lasso.path_points = p;
    spec->propensity.lasso.path_points = p;
    spec->stage2.lasso.path_points = p;
  } else {
    fail(l.number, "unknown learner key '" + l.key + "'");
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  ExperimentConfig cfg;
  cfg.learners.clear();

  std::string section;
  std::string raw;
  int lineno = 0;
  LearnerSpec* current_learner = nullptr;
  bool have_sweep_grid = false;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section == "learner") {
        cfg.learners.emplace_back();
        current_learner = &cfg.learners.back();
      } else if (section != "experiment" && section != "dgp") {
        fail(lineno, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    Line l{lineno, section, trim(line.substr(0, eq)),
           trim(line.substr(eq + 1))};
    if (l.key.empty() || l.value.empty()) fail(lineno, "empty key or value");

    if (section == "experiment") {
      if (l.key == "dgp") {
        if (l.value == "piecewise")
          cfg.dgp.kind = DgpSpec::Kind::Piecewise;
        else if (l.value == "highdim")
          cfg.dgp.kind = DgpSpec::Kind::HighDim;
        else
          fail(lineno, "unknown dgp '" + l.value + "'");
      } else if (l.key == "n") {
        cfg.n = static_cast<std::uint64_t>(to_int(l));
      } else if (l.key == "reps") {
        cfg.n_reps = static_cast<int>(to_int(l));
      } else if (l.key == "seed") {
        cfg.master_seed = static_cast<std::uint64_t>(to_int(l));
      } else if (l.key == "sweep") {
        if (l.value == "none")
          cfg.sweep = SweepKind::None;
        else if (l.value == "alpha_rate")
          cfg.sweep = SweepKind::AlphaRate;
        else if (l.value == "n")
          cfg.sweep = SweepKind::NGrid;
        else
          fail(lineno, "unknown sweep '" + l.value + "'");
      } else if (l.key == "sweep_grid") {
        cfg.sweep_values = to_grid(l);
        have_sweep_grid = true;
      } else if (l.key == "scaling") {
        if (l.value == "raw")
          cfg.scaling = MseScaling::Raw;
        else if (l.value == "n_over_4")
          cfg.scaling = MseScaling::NOver4;
        else
          fail(lineno, "unknown scaling '" + l.value + "'");
      } else if (l.key == "summary") {
        if (l.value == "mean")
          cfg.summary = SummaryMode::Mean;
        else if (l.value == "median")
          cfg.summary = SummaryMode::Median;
        else
          fail(lineno, "unknown summary '" + l.value + "'");
      } else if (l.key == "threads") {
        cfg.threads = static_cast<int>(to_int(l));
      } else if (l.key == "out") {
        cfg.out_path = l.value;
      } else {
        fail(lineno, "unknown experiment key '" + l.key + "'");
      }
    } else if (section == "dgp") {
      if (l.key == "d")
        cfg.dgp.d = static_cast<int>(to_int(l));
      else if (l.key == "alpha_sparsity")
        cfg.dgp.alpha_sparsity = static_cast<int>(to_int(l));
      else if (l.key == "beta_sparsity")
        cfg.dgp.beta_sparsity = static_cast<int>(to_int(l));
      else
        fail(lineno, "unknown dgp key '" + l.key + "'");
    } else if (section == "learner") {
      apply_learner_key(l, current_learner);
    } else {
      fail(lineno, "key outside any section");
    }
  }

  if (cfg.learners.empty())
    throw ValidationError("config has no [learner] sections");
  if (cfg.sweep != SweepKind::None && !have_sweep_grid)
    throw ValidationError("sweep requested but no sweep_grid given");
  if (cfg.n_reps < 1) throw ValidationError("reps must be >= 1");
  return cfg;
}

}  // namespace cate::harness
