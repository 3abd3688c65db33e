// Independent reference implementations the test suites compare against.
// Everything here is deliberately written the slow, obvious way (double
// loops, full sorts, union-find over every edge) so a disagreement points at
// the library, not the test.
#pragma once

#include "ulhm/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

using ulhm::Index;
using ulhm::IntMatrix;
using ulhm::Labels;
using ulhm::Matrix;
using ulhm::Scalar;

inline Matrix euclidean_distances(const Matrix& pts) {
  const Index n = pts.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Scalar acc = 0;
      for (Index c = 0; c < pts.cols(); ++c) {
        const Scalar diff = pts(i, c) - pts(j, c);
        acc += diff * diff;
      }
      d(i, j) = std::sqrt(acc);
    }
  return d;
}

inline Matrix cosine_distances(const Matrix& pts) {
  const Index n = pts.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Scalar dot = 0, ni = 0, nj = 0;
      for (Index c = 0; c < pts.cols(); ++c) {
        dot += pts(i, c) * pts(j, c);
        ni += pts(i, c) * pts(i, c);
        nj += pts(j, c) * pts(j, c);
      }
      Scalar v = 1.0 - dot / (std::sqrt(ni) * std::sqrt(nj));
      d(i, j) = std::min(std::max(v, 0.0), 2.0);
    }
  for (Index i = 0; i < n; ++i) d(i, i) = 0;
  return d;
}

// All points != i ordered by (distance from i, index).
inline std::vector<Index> sorted_row(const Matrix& dist, Index i) {
  std::vector<Index> order;
  for (Index j = 0; j < dist.rows(); ++j)
    if (j != i) order.push_back(j);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
    return a < b;
  });
  return order;
}

inline IntMatrix knn(const Matrix& dist, int kappa) {
  const Index n = dist.rows();
  IntMatrix out(n, kappa);
  for (Index i = 0; i < n; ++i) {
    const auto order = sorted_row(dist, i);
    for (int k = 0; k < kappa; ++k) out(i, k) = order[static_cast<std::size_t>(k)];
  }
  return out;
}

inline IntMatrix rank_matrix(const Matrix& dist) {
  const Index n = dist.rows();
  IntMatrix ranks = IntMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto order = sorted_row(dist, i);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
      ranks(i, order[pos]) = static_cast<Index>(pos) + 1;
  }
  return ranks;
}

struct UnionFind {
  std::vector<Index> parent;

  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(b)] = a;
  }
};

// Connected components of the graph keeping every edge with weight <= eps.
inline Index components_at(const Matrix& dist, Scalar eps) {
  const Index n = dist.rows();
  UnionFind uf(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (dist(i, j) <= eps) uf.unite(i, j);
  Index count = 0;
  for (Index i = 0; i < n; ++i)
    if (uf.find(i) == i) ++count;
  return count;
}

inline Scalar rank_metric_normalizer(Index n, int kappa) {
  return 2.0 / (static_cast<Scalar>(n) * kappa * (2.0 * static_cast<Scalar>(n) - 3.0 * kappa - 1.0));
}

// Direct evaluation of the continuity formula: sum the excess input-space
// rank of every latent-space neighbor.
inline Scalar continuity(const Matrix& dist_input, const Matrix& dist_latent, int kappa) {
  const Index n = dist_input.rows();
  const IntMatrix r_in = rank_matrix(dist_input);
  const IntMatrix nbr_lat = knn(dist_latent, kappa);
  Scalar penalty = 0;
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < kappa; ++k) {
      const Index j = nbr_lat(i, k);
      penalty += std::max<Scalar>(0.0, static_cast<Scalar>(r_in(i, j)) - kappa);
    }
  return 1.0 - rank_metric_normalizer(n, kappa) * penalty;
}

// Rank-dual: sum the excess latent-space rank of every input-space neighbor.
inline Scalar trust(const Matrix& dist_input, const Matrix& dist_latent, int kappa) {
  return continuity(dist_latent, dist_input, kappa);
}

inline Scalar purity(const Matrix& dist_latent, int kappa, const Labels& labels) {
  const Index n = dist_latent.rows();
  const IntMatrix nbr = knn(dist_latent, kappa);
  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    Scalar same = 0;
    for (int k = 0; k < kappa; ++k)
      if (labels[static_cast<std::size_t>(nbr(i, k))] == labels[static_cast<std::size_t>(i)])
        same += 1;
    total += same / kappa;
  }
  return total / static_cast<Scalar>(n);
}

// Central finite differences over every entry of x. `loss` must read x by
// reference so the perturbations are visible. Relative error is damped by 1
// in the denominator so near-zero gradients compare absolutely.
inline Scalar fd_max_rel_err(Matrix& x, const Matrix& analytic,
                             const std::function<Scalar()>& loss, Scalar step = 1e-6) {
  Scalar worst = 0;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) {
      const Scalar saved = x(i, j);
      x(i, j) = saved + step;
      const Scalar up = loss();
      x(i, j) = saved - step;
      const Scalar down = loss();
      x(i, j) = saved;
      const Scalar fd = (up - down) / (2.0 * step);
      const Scalar g = analytic(i, j);
      const Scalar rel = std::abs(fd - g) / std::max({1.0, std::abs(fd), std::abs(g)});
      worst = std::max(worst, rel);
    }
  return worst;
}

}  // namespace oracle
