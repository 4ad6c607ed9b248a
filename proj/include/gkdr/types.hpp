#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace gkdr {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Task { Regression, Classification };

/// Factorization / conditioning failures. The CLI maps these to exit code 3;
/// std::invalid_argument (contract violations) maps to 2 and ParseError
/// (file / CSV problems) to 1.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace gkdr
