#include "ulhm/neighbors.hpp"

#include "ulhm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ulhm {

DistanceMatrix pairwise_distances(MatrixRef points, DistanceKind metric) {
  const Index n = points.rows();
  if (n < 2) throw DegenerateError("need at least 2 points for pairwise distances");

  DistanceMatrix dist;
  dist.metric = metric;
  dist.values = Matrix::Zero(n, n);

  if (metric == DistanceKind::euclidean) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const Scalar d = (points.row(i) - points.row(j)).norm();
        dist.values(i, j) = d;
        dist.values(j, i) = d;
      }
  } else {
    Vector norms(n);
    for (Index i = 0; i < n; ++i) {
      norms(i) = points.row(i).norm();
      if (norms(i) == 0.0)
        throw DegenerateError("zero-norm row " + std::to_string(i) + " under cosine metric");
    }
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const Scalar cosine = points.row(i).dot(points.row(j)) / (norms(i) * norms(j));
        const Scalar d = std::clamp(1.0 - cosine, 0.0, 2.0);
        dist.values(i, j) = d;
        dist.values(j, i) = d;
      }
  }
  return dist;
}

namespace {

// Indices 0..n-1 except self, sorted by (distance, index).
std::vector<Index> sorted_row(const Matrix& values, Index i) {
  const Index n = values.rows();
  std::vector<Index> order;
  order.reserve(n - 1);
  for (Index j = 0; j < n; ++j)
    if (j != i) order.push_back(j);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (values(i, a) != values(i, b)) return values(i, a) < values(i, b);
    return a < b;
  });
  return order;
}

}  // namespace

NeighborLists knn(const DistanceMatrix& dist, int kappa) {
  const Index n = dist.size();
  if (kappa < 1) throw ConfigError("kappa must be positive");
  if (kappa >= n) throw ConfigError("kappa must be smaller than the number of points");

  NeighborLists nbr;
  nbr.kappa = kappa;
  nbr.indices.resize(n, kappa);
  for (Index i = 0; i < n; ++i) {
    const auto order = sorted_row(dist.values, i);
    for (int k = 0; k < kappa; ++k) nbr.indices(i, k) = order[static_cast<std::size_t>(k)];
  }
  return nbr;
}

RankMatrix rank_matrix(const DistanceMatrix& dist) {
  const Index n = dist.size();
  RankMatrix rank;
  rank.ranks = IntMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto order = sorted_row(dist.values, i);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
      rank.ranks(i, order[pos]) = static_cast<Index>(pos) + 1;
  }
  return rank;
}

MstEdges mst_edges(const DistanceMatrix& dist) {
  const Index n = dist.size();
  MstEdges mst;
  mst.n_points = n;
  if (n <= 1) return mst;

  // Prim over the dense matrix; ties resolved toward the smaller vertex index
  // so the edge list is deterministic.
  std::vector<bool> in_tree(n, false);
  std::vector<Scalar> best(n, std::numeric_limits<Scalar>::infinity());
  std::vector<Index> parent(n, -1);
  best[0] = 0;
  for (Index step = 0; step < n; ++step) {
    Index u = -1;
    for (Index v = 0; v < n; ++v)
      if (!in_tree[v] && (u == -1 || best[v] < best[u])) u = v;
    in_tree[u] = true;
    if (parent[u] >= 0)
      mst.edges.push_back({std::min(parent[u], u), std::max(parent[u], u), best[u]});
    for (Index v = 0; v < n; ++v)
      if (!in_tree[v] && dist.values(u, v) < best[v]) {
        best[v] = dist.values(u, v);
        parent[v] = u;
      }
  }
  std::stable_sort(mst.edges.begin(), mst.edges.end(),
                   [](const MstEdges::Edge& a, const MstEdges::Edge& b) {
                     return a.weight < b.weight;
                   });
  return mst;
}

}  // namespace ulhm
