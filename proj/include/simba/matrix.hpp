#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace simba {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Observation mask: 1 where a sample is observed, 0 where it is missing or dropped.
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

bool all_finite(const Matrix& m);

/// Throws ContractError naming `what` if any entry is NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);

void require_shape(const Matrix& m, Index rows, Index cols, std::string_view what);

/// Number of set entries in a mask.
Index count_observed(const Mask& mask);

}  // namespace simba
