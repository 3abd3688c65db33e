#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ulhm {

// Everything numeric is float64; rank-based metrics are too tie-sensitive
// for mixed precision.
using Scalar = double;
using Index = Eigen::Index;

using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using IntMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

using Labels = std::vector<int>;

enum class DistanceKind { euclidean, cosine };

inline const char* to_string(DistanceKind m) {
  return m == DistanceKind::euclidean ? "euclidean" : "cosine";
}

}  // namespace ulhm
