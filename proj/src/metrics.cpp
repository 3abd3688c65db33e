#include "ulhm/metrics.hpp"

#include "ulhm/errors.hpp"
#include "ulhm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ulhm {

Betti0Result betti0(const MstEdges& mst, const BettiConfig& cfg) {
  if (mst.n_points == 0) throw EmptyError("betti0 of an empty point set");

  Scalar eps = 0;
  if (cfg.epsilon) {
    if (*cfg.epsilon <= 0) throw ConfigError("epsilon must be positive");
    eps = *cfg.epsilon;
  } else if (cfg.auto_rule == BettiAutoRule::median_knn) {
    if (!cfg.median_knn)
      throw ConfigError("median-knn rule needs BettiConfig::median_knn (see median_knn_distance)");
    eps = 2.0 * *cfg.median_knn;
  } else if (!mst.edges.empty()) {
    // Widest gap between consecutive sorted weights separates intra-cluster
    // edges from inter-cluster ones; with all gaps zero there is nothing to
    // split and every edge is kept.
    std::size_t cut = 0;
    Scalar widest = 0;
    for (std::size_t k = 0; k + 1 < mst.edges.size(); ++k) {
      const Scalar gap = mst.edges[k + 1].weight - mst.edges[k].weight;
      if (gap > widest) {
        widest = gap;
        cut = k;
      }
    }
    eps = widest > 0 ? (mst.edges[cut].weight + mst.edges[cut + 1].weight) / 2
                     : mst.edges.back().weight;
  }

  Index components = 1;
  for (const auto& e : mst.edges)
    if (e.weight > eps) ++components;
  return {components, eps};
}

Scalar median_knn_distance(const DistanceMatrix& dist, int kappa) {
  const NeighborLists nbr = knn(dist, kappa);
  std::vector<Scalar> d;
  d.reserve(static_cast<std::size_t>(nbr.size()) * kappa);
  for (Index i = 0; i < nbr.size(); ++i)
    for (int k = 0; k < kappa; ++k) d.push_back(dist.values(i, nbr.indices(i, k)));
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 ? d[m / 2] : (d[m / 2 - 1] + d[m / 2]) / 2;
}

namespace {

Scalar one_dim_w2_squared(std::vector<Scalar>& a, std::vector<Scalar>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    Scalar sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Scalar diff = a[i] - b[i];
      sum += diff * diff;
    }
    return sum / static_cast<Scalar>(a.size());
  }
  // Quantile matching on a common grid, midpoint convention: the i-th of n
  // sorted values sits at level (i+0.5)/n.
  auto quantile = [](const std::vector<Scalar>& v, Scalar q) {
    const Scalar pos = q * static_cast<Scalar>(v.size()) - 0.5;
    if (pos <= 0) return v.front();
    if (pos >= static_cast<Scalar>(v.size() - 1)) return v.back();
    const auto lo = static_cast<std::size_t>(pos);
    const Scalar frac = pos - static_cast<Scalar>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
  };
  const std::size_t m = std::max(a.size(), b.size());
  Scalar sum = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const Scalar q = (static_cast<Scalar>(j) + 0.5) / static_cast<Scalar>(m);
    const Scalar diff = quantile(a, q) - quantile(b, q);
    sum += diff * diff;
  }
  return sum / static_cast<Scalar>(m);
}

}  // namespace

Scalar sliced_w2(MatrixRef a, MatrixRef b, const SlicedW2Config& cfg) {
  if (a.cols() != b.cols()) throw DimensionError("sliced_w2 inputs differ in dimension");
  if (a.rows() == 0 || b.rows() == 0) throw EmptyError("sliced_w2 input has no rows");
  if (cfg.n_projections < 1) throw ConfigError("n_projections must be positive");

  const Index d = a.cols();
  auto rng = make_rng(cfg.seed);
  std::normal_distribution<Scalar> gauss(0.0, 1.0);

  std::vector<Scalar> pa(a.rows()), pb(b.rows());
  Vector theta(d);
  Scalar total = 0;
  for (int l = 0; l < cfg.n_projections; ++l) {
    if (d == 1) {
      // A unit direction in 1-D is just a sign; avoids the rounding of
      // normalizing through sqrt so Dirac distances come out exact.
      theta(0) = gauss(rng) < 0 ? -1.0 : 1.0;
    } else {
      Scalar norm = 0;
      do {
        for (Index i = 0; i < d; ++i) theta(i) = gauss(rng);
        norm = theta.norm();
      } while (norm == 0);
      theta /= norm;
    }
    for (Index i = 0; i < a.rows(); ++i) pa[i] = a.row(i).dot(theta);
    for (Index i = 0; i < b.rows(); ++i) pb[i] = b.row(i).dot(theta);
    total += one_dim_w2_squared(pa, pb);
  }
  return std::sqrt(total / cfg.n_projections);
}

Scalar sliced_w2(const EmbeddingSet& a, const EmbeddingSet& b, const SlicedW2Config& cfg) {
  return sliced_w2(MatrixRef(a.points), MatrixRef(b.points), cfg);
}

namespace {

// Shared by continuity and trust_rank: 1 - normalized sum of rank excesses
// over the given neighbor lists. The two metrics differ only in which space
// provides the ranks and which the neighbors.
Scalar rank_preservation(const RankMatrix& ranks, const NeighborLists& nbr) {
  const Index n = ranks.size();
  if (nbr.size() != n) throw DimensionError("rank matrix and neighbor lists disagree on N");
  const Scalar kappa = nbr.kappa;
  const Scalar denom = static_cast<Scalar>(n) * kappa * (2.0 * n - 3.0 * kappa - 1.0);
  if (denom <= 0) throw ConfigError("normalizer requires kappa < (2N-1)/3");

  Scalar penalty = 0;
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < nbr.kappa; ++k) {
      const Index j = nbr.indices(i, k);
      const Scalar excess = static_cast<Scalar>(ranks.ranks(i, j)) - kappa;
      if (excess > 0) penalty += excess;
    }
  return 1.0 - 2.0 * penalty / denom;
}

}  // namespace

Scalar continuity(const RankMatrix& rank_input, const NeighborLists& nbr_latent) {
  return rank_preservation(rank_input, nbr_latent);
}

Scalar trust_rank(const RankMatrix& rank_latent, const NeighborLists& nbr_input) {
  return rank_preservation(rank_latent, nbr_input);
}

PurityResult purity(const NeighborLists& nbr_latent, const Labels& labels) {
  const Index n = nbr_latent.size();
  if (static_cast<Index>(labels.size()) != n)
    throw DataError("label count does not match neighbor lists");

  PurityResult result;
  result.per_point.resize(n);
  for (Index i = 0; i < n; ++i) {
    int same = 0;
    for (int k = 0; k < nbr_latent.kappa; ++k)
      if (labels[static_cast<std::size_t>(nbr_latent.indices(i, k))] ==
          labels[static_cast<std::size_t>(i)])
        ++same;
    result.per_point(i) = static_cast<Scalar>(same) / nbr_latent.kappa;
  }
  result.mean = result.per_point.mean();
  return result;
}

Scalar alignment_error(const PairedEmbeddings& paired) {
  if (paired.pairs.empty()) throw PairError("alignment over empty pair list");
  Scalar sum = 0;
  for (const auto& [ia, ib] : paired.pairs)
    sum += (paired.side_a.points.row(ia) - paired.side_b.points.row(ib)).norm();
  return sum / static_cast<Scalar>(paired.pairs.size());
}

BiLipschitzEstimate estimate_bilipschitz(const DistanceMatrix& x_dist,
                                         const DistanceMatrix& z_dist,
                                         long sample_pairs, std::uint64_t seed) {
  const Index n = x_dist.size();
  if (z_dist.size() != n) throw DimensionError("distance matrices disagree on N");
  if (n < 2) throw DegenerateError("need at least 2 points");
  if (sample_pairs < 0) throw ConfigError("sample_pairs must be nonnegative");

  BiLipschitzEstimate est;
  est.c1 = std::numeric_limits<Scalar>::infinity();
  est.c2 = -std::numeric_limits<Scalar>::infinity();
  bool any_ratio = false;

  auto consider = [&](Index i, Index j) {
    const Scalar dx = x_dist.values(i, j);
    const Scalar dz = z_dist.values(i, j);
    if (dx == 0) {
      if (dz > 0) est.unbounded = true;
      return;
    }
    const Scalar r = dz / dx;
    est.c1 = std::min(est.c1, r);
    est.c2 = std::max(est.c2, r);
    any_ratio = true;
  };

  if (sample_pairs == 0) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) consider(i, j);
  } else {
    auto rng = make_rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (long s = 0; s < sample_pairs; ++s) {
      Index i = pick(rng);
      Index j = pick(rng);
      while (j == i) j = pick(rng);
      consider(i, j);
    }
  }

  if (!any_ratio && !est.unbounded)
    throw DegenerateError("every sampled pair coincides in the input space");
  if (est.unbounded) est.c2 = std::numeric_limits<Scalar>::infinity();
  if (!any_ratio) est.c1 = std::numeric_limits<Scalar>::infinity();
  return est;
}

}  // namespace ulhm
