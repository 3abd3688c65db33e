#pragma once

#include "ulhm/neighbors.hpp"
#include "ulhm/types.hpp"

#include <vector>

namespace ulhm {

enum class Likelihood { gaussian, bernoulli, categorical };

struct LossWeights {
  Scalar lambda_c = 1.0;     // consistency block weight in the composite
  Scalar lambda_l = 0.1;     // local neighborhood weight
  Scalar lambda_cos = 1.0;   // angular term inside consistency
  Scalar lambda_eucl = 0.0;  // magnitude term; 0 for heterogeneous modalities
  Scalar lambda_cont = 100.0;   // contrastive weight (alignment stage)
  Scalar lambda_cent = 10000.0;  // centroid weight (alignment stage)
  Scalar temperature = 0.1;
};

struct LossGrad {
  Scalar value = 0;
  Matrix grad;
};

/// Gaussian: mean squared error over all elements, grad 2(decoded-target)/n.
/// Bernoulli: decoded holds logits, targets in {0,1}; numerically stable
/// log-sigmoid form, mean over elements.
LossGrad loss_recon(MatrixRef decoded, MatrixRef target, Likelihood likelihood);

/// Categorical likelihood: decoded holds logits, one class index per row.
/// Mean cross-entropy; grad is (softmax - onehot)/N. loss_cross_entropy is
/// the same computation under its stage-3 name.
LossGrad loss_recon(MatrixRef logits, const Labels& target);
LossGrad loss_cross_entropy(MatrixRef logits, const Labels& labels);

struct GroupLossGrad {
  Scalar value = 0;
  std::vector<Matrix> grads;  // one per group, same shapes as inputs
};

/// Cross-modal consistency over co-indexed latent groups:
///   sum_i sum_{g<g'} [ lambda_cos (1 - cos(z_i^g, z_i^g'))
///                      + lambda_eucl ||z_i^g - z_i^g'||^2 ]
/// Only lambda_cos / lambda_eucl are read from w.
GroupLossGrad loss_consist(const std::vector<Matrix>& z_groups, const LossWeights& w);

/// sum_i sum_{j in nbrs(i)} ||z_i - z_j||^2 with neighbor lists computed in
/// the data space, gradients at both endpoints.
LossGrad loss_local(MatrixRef z, const NeighborLists& nbrs);

struct ContrastiveResult {
  Scalar value = 0;
  Matrix grad;
  long n_skipped = 0;  // anchors without any cross-domain positive
};

/// Supervised contrastive pull over cosine similarities: every ordered pair
/// (anchor i, positive j) with equal labels from different domains adds
///   -log( exp(sim_ij / t) / sum_{n != i} exp(sim_in / t) ).
/// Anchors without positives contribute nothing (still serve as negatives).
ContrastiveResult loss_contrastive(MatrixRef z, const Labels& labels,
                                   const std::vector<int>& domain_ids, Scalar temperature);

/// sum_c sum_{k<k'} ||mu_c^k - mu_c^k'||^2 over per-(class, domain) latent
/// centroids; cells with no samples are skipped.
LossGrad loss_centroid(MatrixRef z, const Labels& labels, const std::vector<int>& domain_ids);

}  // namespace ulhm
