#include "cate/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cate/errors.hpp"
#include "cate/rng.hpp"

namespace cate {

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);  // lossless double round trip
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& tok, std::size_t row,
                  const std::string& col) {
  if (tok.empty())
    throw ValidationError("missing value at row " + std::to_string(row) +
                          ", column " + col);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
    throw ValidationError("non-finite or malformed value '" + tok +
                          "' at row " + std::to_string(row) + ", column " +
                          col);
  return v;
}

}  // namespace

ObservationTable ObservationTable::create(Eigen::MatrixXd x, Eigen::VectorXd a,
                                          Eigen::VectorXd y) {
  const Eigen::Index n = x.rows();
  if (n < 1 || x.cols() < 1)
    throw ValidationError("observation table needs n >= 1 and d >= 1");
  if (a.size() != n || y.size() != n)
    throw ValidationError("row count mismatch across x, a, y");
  if (!x.allFinite() || !y.allFinite())
    throw ValidationError("non-finite entries in covariates or outcome");
  for (Eigen::Index i = 0; i < n; ++i)
    if (a[i] != 0.0 && a[i] != 1.0)
      throw ValidationError("treatment must be exactly 0 or 1 at row " +
                            std::to_string(i + 1));
  return ObservationTable{std::move(x), std::move(a), std::move(y)};
}

ObservationTable ObservationTable::subset(
    const std::vector<Eigen::Index>& rows_idx) const {
  ObservationTable out;
  out.x.resize(static_cast<Eigen::Index>(rows_idx.size()), x.cols());
  out.a.resize(static_cast<Eigen::Index>(rows_idx.size()));
  out.y.resize(static_cast<Eigen::Index>(rows_idx.size()));
  for (std::size_t k = 0; k < rows_idx.size(); ++k) {
    out.x.row(static_cast<Eigen::Index>(k)) = x.row(rows_idx[k]);
    out.a[static_cast<Eigen::Index>(k)] = a[rows_idx[k]];
    out.y[static_cast<Eigen::Index>(k)] = y[rows_idx[k]];
  }
  return out;
}

const char* fold_role_name(FoldRole role) {
  switch (role) {
    case FoldRole::D1A: return "D1A";
    case FoldRole::D1B: return "D1B";
    case FoldRole::D2: return "D2";
    case FoldRole::Eval: return "EVAL";
  }
  return "?";
}

std::vector<Eigen::Index> FoldAssignment::indices(FoldRole role) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == role) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

std::size_t FoldAssignment::count(FoldRole role) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), role));
}

FoldAssignment assign_folds(
    std::size_t n, const std::vector<std::pair<FoldRole, double>>& roles,
    std::uint64_t seed) {
  if (roles.empty()) throw ValidationError("no roles given");
  if (n < roles.size())
    throw ValidationError("cannot assign " + std::to_string(roles.size()) +
                          " roles to only " + std::to_string(n) + " rows");
  double total = 0.0;
  for (const auto& [role, prop] : roles) {
    if (prop < 0.0) throw ValidationError("negative role proportion");
    total += prop;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw ValidationError("role proportions must sum to 1");

  // Largest-remainder apportionment, ties by declaration order.
  std::vector<std::size_t> counts(roles.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < roles.size(); ++k) {
    const double target = roles[k].second * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(target + 1e-12));
    assigned += counts[k];
    remainders.emplace_back(target - static_cast<double>(counts[k]), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < n; ++j, ++assigned)
    ++counts[remainders[j % remainders.size()].second];

  FoldAssignment fa;
  fa.seed = seed;
  fa.labels.reserve(n);
  for (std::size_t k = 0; k < roles.size(); ++k)
    fa.labels.insert(fa.labels.end(), counts[k], roles[k].first);

  RngStream rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(fa.labels[i], fa.labels[j]);
  }
  return fa;
}

FoldAssignment assign_quarter_folds(std::size_t n, std::uint64_t seed) {
  return assign_folds(n,
                      {{FoldRole::D1A, 0.25},
                       {FoldRole::D1B, 0.25},
                       {FoldRole::D2, 0.25},
                       {FoldRole::Eval, 0.25}},
                      seed);
}

ObservationTable read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("empty file '" + path + "'");
  const auto header = split_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "a" ||
      header.back() != "y")
    throw ValidationError("expected header x1,...,xd,a,y in '" + path + "'");
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "x" + std::to_string(j + 1))
      throw ValidationError("expected covariate column x" +
                            std::to_string(j + 1) + ", found '" + header[j] +
                            "'");

  std::vector<std::array<double, 2>> ay;
  std::vector<double> xs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto toks = split_line(line);
    if (toks.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + " has " +
                            std::to_string(toks.size()) + " fields, expected " +
                            std::to_string(header.size()));
    for (std::size_t j = 0; j < d; ++j)
      xs.push_back(parse_real(toks[j], row, header[j]));
    const double av = parse_real(toks[d], row, "a");
    if (av != 0.0 && av != 1.0)
      throw ValidationError("non-binary treatment at row " +
                            std::to_string(row) + ", column a");
    ay.push_back({av, parse_real(toks[d + 1], row, "y")});
  }
  if (row == 0) throw ValidationError("no observations in '" + path + "'");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(row),
                    static_cast<Eigen::Index>(d));
  Eigen::VectorXd a(static_cast<Eigen::Index>(row)),
      y(static_cast<Eigen::Index>(row));
  for (std::size_t i = 0; i < row; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          xs[i * d + j];
    a[static_cast<Eigen::Index>(i)] = ay[i][0];
    y[static_cast<Eigen::Index>(i)] = ay[i][1];
  }
  return ObservationTable::create(std::move(x), std::move(a), std::move(y));
}

void write_observations_csv(const ObservationTable& table,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  for (Eigen::Index j = 0; j < table.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "a,y\n";
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.dim(); ++j)
      out << format_real(table.x(i, j)) << ",";
    out << static_cast<int>(table.a[i]) << "," << format_real(table.y[i])
        << "\n";
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

void write_results_csv(const std::vector<ResultRecord>& records,
                       const std::string& path) {
  if (records.empty()) throw ValidationError("no records to write");
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "dgp,learner,n,d,rep,seed,param_name,param_value,mse_scaled,mse_raw\n";
  for (const auto& r : records) {
    out << r.dgp << "," << r.learner << "," << r.n << "," << r.d << ","
        << r.rep << "," << r.seed << "," << r.param_name << ","
        << format_real(r.param_value) << "," << format_real(r.mse_scaled)
        << "," << format_real(r.mse_raw) << "\n";
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<ResultRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) ||
      split_line(line) !=
          std::vector<std::string>{"dgp", "learner", "n", "d", "rep", "seed",
                                   "param_name", "param_value", "mse_scaled",
                                   "mse_raw"})
    throw ValidationError("unexpected results header in '" + path + "'");
  std::vector<ResultRecord> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto toks = split_line(line);
    if (toks.size() != 10)
      throw ValidationError("row " + std::to_string(row) +
                            " has wrong field count");
    ResultRecord r;
    r.dgp = toks[0];
    r.learner = toks[1];
    r.n = std::stoull(toks[2]);
    r.d = std::stoi(toks[3]);
    r.rep = std::stoi(toks[4]);
    r.seed = std::stoull(toks[5]);
    r.param_name = toks[6];
    r.param_value = std::strtod(toks[7].c_str(), nullptr);
    r.mse_scaled = std::strtod(toks[8].c_str(), nullptr);
    r.mse_raw = std::strtod(toks[9].c_str(), nullptr);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cate
