#pragma once

#include <stdexcept>
#include <string>

namespace cate {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Malformed input: bad CSV, invalid configuration, violated preconditions.
struct ValidationError : Error {
  using Error::Error;
};

//! Local design matrix unusable at a query point, past ridge rescue.
struct SingularDesignError : Error {
  using Error::Error;
};

//! Per-query failure of the localized residual regression.
struct IllConditionedError : Error {
  using Error::Error;
};

//! A fold required to contain both treatment arms has only one.
struct EmptyArmError : Error {
  using Error::Error;
};

//! Every evaluation point failed; no MSE can be formed.
struct EvaluationEmptyError : Error {
  using Error::Error;
};

}  // namespace cate
