#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cate {

//! An observational sample: covariates, binary treatment, outcome.
//! Immutable after construction; all operations below are pure.
struct ObservationTable {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd a;  // entries exactly 0 or 1
  Eigen::VectorXd y;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }

  //! Validates invariants (finite entries, binary a, matching row counts,
  //! n >= 1, d >= 1); throws ValidationError.
  static ObservationTable create(Eigen::MatrixXd x, Eigen::VectorXd a,
                                 Eigen::VectorXd y);

  //! Table restricted to the given rows, order preserved.
  ObservationTable subset(const std::vector<Eigen::Index>& rows_idx) const;
};

enum class FoldRole : std::uint8_t { D1A = 0, D1B = 1, D2 = 2, Eval = 3 };

const char* fold_role_name(FoldRole role);

//! A partition of the rows into sample-splitting roles.
struct FoldAssignment {
  std::vector<FoldRole> labels;
  std::uint64_t seed = 0;

  std::vector<Eigen::Index> indices(FoldRole role) const;
  std::size_t count(FoldRole role) const;
};

//! Randomly partitions n rows into the given roles. Counts follow
//! largest-remainder apportionment of proportion*n (ties broken by
//! declaration order); the permutation is a seeded Fisher-Yates shuffle.
FoldAssignment assign_folds(
    std::size_t n, const std::vector<std::pair<FoldRole, double>>& roles,
    std::uint64_t seed);

//! Equal quarters over D1A, D1B, D2, EVAL.
FoldAssignment assign_quarter_folds(std::size_t n, std::uint64_t seed);

//! CSV with header x1,...,xd,a,y. Rejects non-binary a and missing or
//! non-finite cells, naming the offending row and column.
ObservationTable read_observations_csv(const std::string& path);
void write_observations_csv(const ObservationTable& table,
                            const std::string& path);

//! One Monte-Carlo measurement. failed_query_count is carried in memory and
//! surfaced by summaries; the results CSV holds the ten schema columns.
struct ResultRecord {
  std::string dgp;
  std::string learner;
  std::uint64_t n = 0;
  int d = 1;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string param_name;
  double param_value = 0.0;
  double mse_scaled = 0.0;
  double mse_raw = 0.0;
  std::size_t failed_query_count = 0;
};

//! Long-format results CSV, header
//! dgp,learner,n,d,rep,seed,param_name,param_value,mse_scaled,mse_raw.
void write_results_csv(const std::vector<ResultRecord>& records,
                       const std::string& path);
std::vector<ResultRecord> read_results_csv(const std::string& path);

}  // namespace cate
