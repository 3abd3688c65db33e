#pragma once

#include "ulhm/embedding_set.hpp"
#include "ulhm/neighbors.hpp"
#include "ulhm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ulhm {

enum class BettiAutoRule { largest_gap, median_knn };

struct BettiConfig {
  std::optional<Scalar> epsilon;  // explicit connectivity scale, > 0
  BettiAutoRule auto_rule = BettiAutoRule::largest_gap;
  // Required when auto_rule is median_knn and epsilon is absent; see
  // median_knn_distance below.
  std::optional<Scalar> median_knn;
};

struct Betti0Result {
  Index count = 0;
  Scalar epsilon_used = 0;
};

/// Connected components of the eps-neighborhood graph: 1 + the number of MST
/// edges heavier than eps. Without an explicit eps, `largest_gap` places it
/// in the middle of the widest gap between consecutive sorted MST weights
/// (everything above the gap is treated as inter-cluster), and `median_knn`
/// uses 2x the supplied median kNN distance.
Betti0Result betti0(const MstEdges& mst, const BettiConfig& cfg);

/// Median of all per-point kNN distances; feed into BettiConfig::median_knn.
Scalar median_knn_distance(const DistanceMatrix& dist, int kappa);

struct SlicedW2Config {
  int n_projections = 128;
  std::uint64_t seed = 0;
};

/// Sliced 2-Wasserstein distance between two point clouds of equal
/// dimension: sqrt of the mean, over seeded random unit directions, of the
/// squared 1-D Wasserstein-2 distance between the projections. Equal-size
/// clouds compare sorted projections directly; unequal sizes interpolate
/// both quantile functions on a common max(Na, Nb)-point grid.
Scalar sliced_w2(const EmbeddingSet& a, const EmbeddingSet& b, const SlicedW2Config& cfg);
Scalar sliced_w2(MatrixRef a, MatrixRef b, const SlicedW2Config& cfg);

/// Continuity: penalizes latent neighbors that are far in the input ranking.
///   Cont = 1 - 2/(N*kappa*(2N-3*kappa-1)) * sum_i sum_{j in latent knn(i)}
///              max(0, rank_input(i,j) - kappa)
/// Requires kappa < (2N-1)/3 so the normalizer is positive.
Scalar continuity(const RankMatrix& rank_input, const NeighborLists& nbr_latent);

/// Trustworthiness: the rank-dual of continuity. Sums over input-space
/// neighbors with the penalty taken on latent ranks.
Scalar trust_rank(const RankMatrix& rank_latent, const NeighborLists& nbr_input);

struct PurityResult {
  Vector per_point;
  Scalar mean = 0;
};

/// Fraction of each point's latent neighbors sharing its label.
PurityResult purity(const NeighborLists& nbr_latent, const Labels& labels);

/// Mean Euclidean distance between paired rows.
Scalar alignment_error(const PairedEmbeddings& paired);

struct BiLipschitzEstimate {
  Scalar c1 = 0;
  Scalar c2 = 0;
  // Set when a sampled pair is coincident in the input space but separated
  // in the latent space; c2 is +inf in that case.
  bool unbounded = false;
};

/// Empirical distortion bounds: min and max of d_latent/d_input over sampled
/// index pairs. sample_pairs = 0 scans all pairs; otherwise pairs are drawn
/// uniformly with the given seed. Pairs coincident in both spaces are
/// skipped.
BiLipschitzEstimate estimate_bilipschitz(const DistanceMatrix& x_dist,
                                         const DistanceMatrix& z_dist,
                                         long sample_pairs, std::uint64_t seed);

/// Everything the verifier consumes, plus audit extras. Per-domain vectors
/// are aligned with domain_tags.
struct MetricBundle {
  std::optional<Index> betti0;
  std::optional<Scalar> epsilon_used;
  std::vector<Scalar> persistence_weights;  // sorted MST weights of the pool
  std::vector<std::string> domain_tags;
  std::optional<Matrix> w2_pairwise;  // K x K, zero diagonal
  std::vector<Scalar> trust_per_domain;
  std::vector<Scalar> continuity_per_domain;
  std::vector<Scalar> purity_per_domain;
  std::optional<Scalar> alignment;
  std::optional<std::pair<Scalar, Scalar>> bilipschitz;
  bool bilipschitz_unbounded = false;
};

}  // namespace ulhm
