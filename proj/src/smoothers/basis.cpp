#include <cmath>

#include "cate/errors.hpp"
#include "cate/smoothers.hpp"

namespace cate::smoothers {

Eigen::VectorXd NuisanceFit::Impl::weights_at(const XRef&) const {
  throw Error("this fit does not expose smoother weights");
}

double NuisanceFit::evaluate1(double x) const {
  Eigen::VectorXd v(1);
  v[0] = x;
  return evaluate(v);
}

void TuningRecord::set(const std::string& key, double v) {
  for (auto& kv : values)
    if (kv.first == key) {
      kv.second = v;
      return;
    }
  values.emplace_back(key, v);
}

double TuningRecord::get(const std::string& key, double fallback) const {
  for (const auto& kv : values)
    if (kv.first == key) return kv.second;
  return fallback;
}

namespace {

void enumerate_exponents(int dim, int degree, int pos, int remaining,
                         std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
  if (pos == dim) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    cur[pos] = e;
    enumerate_exponents(dim, degree, pos + 1, remaining - e, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace

PolyBasis PolyBasis::total_degree(int dim, int degree) {
  if (dim < 1 || degree < 0)
    throw ValidationError("basis needs dim >= 1, degree >= 0");
  PolyBasis b;
  b.dim = dim;
  b.degree = degree;
  // graded: all multi-indices of total degree g, for g = 0..degree
  for (int g = 0; g <= degree; ++g) {
    std::vector<std::vector<int>> level;
    std::vector<int> cur(dim, 0);
    enumerate_exponents(dim, g, 0, g, cur, level);
    for (auto& e : level) {
      int total = 0;
      for (int v : e) total += v;
      if (total == g) b.exponents.push_back(std::move(e));
    }
  }
  return b;
}

void PolyBasis::eval(const XRef& u, Eigen::Ref<Eigen::VectorXd> out) const {
  for (std::size_t t = 0; t < exponents.size(); ++t) {
    double v = 1.0;
    for (int j = 0; j < dim; ++j) {
      const int e = exponents[t][j];
      for (int k = 0; k < e; ++k) v *= u[j];
    }
    out[static_cast<Eigen::Index>(t)] = v;
  }
}

double preset_bandwidth(const Eigen::MatrixXd& x, int degree, double scale) {
  double range = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    range = std::max(range, x.col(j).maxCoeff() - x.col(j).minCoeff());
  if (range <= 0.0) range = 1.0;
  const double n = static_cast<double>(x.rows());
  const double expo =
      -1.0 / (2.0 * static_cast<double>(degree) + static_cast<double>(x.cols()));
  return scale * range * std::pow(n, expo);
}

}  // namespace cate::smoothers
