#pragma once

#include "ulhm/types.hpp"

#include <vector>

namespace ulhm {

struct DistanceMatrix {
  Matrix values;  // symmetric, zero diagonal
  DistanceKind metric = DistanceKind::euclidean;

  Index size() const { return values.rows(); }
};

/// Ordered kappa nearest neighbors per point, self excluded, distance ties
/// broken toward the smaller index.
struct NeighborLists {
  IntMatrix indices;  // N x kappa, ascending by distance
  int kappa = 0;

  Index size() const { return indices.rows(); }
};

/// ranks(i, j) = position of j (starting at 1) when all points != i are
/// sorted by distance from i; diagonal is 0. Ties break toward the smaller
/// index, so each off-diagonal row is a permutation of 1..N-1.
struct RankMatrix {
  IntMatrix ranks;

  Index size() const { return ranks.rows(); }
};

/// Minimum spanning tree of the complete distance graph, edges ascending by
/// weight. Cutting the edges heavier than eps reproduces the connected
/// components of the eps-neighborhood graph, which is all the 0-dimensional
/// persistence information the metrics need.
struct MstEdges {
  struct Edge {
    Index i = 0;
    Index j = 0;
    Scalar weight = 0;
  };
  std::vector<Edge> edges;  // N-1 entries
  Index n_points = 0;
};

/// Cosine distance is 1 - cos(angle), clamped to [0, 2]; a zero-norm row is
/// rejected (DegenerateError) because the angle is undefined.
DistanceMatrix pairwise_distances(MatrixRef points, DistanceKind metric);

NeighborLists knn(const DistanceMatrix& dist, int kappa);

RankMatrix rank_matrix(const DistanceMatrix& dist);

MstEdges mst_edges(const DistanceMatrix& dist);

}  // namespace ulhm
