#pragma once

#include "ulhm/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ulhm {

/// A finite point cloud in latent (or input) space. Rows are samples,
/// columns are coordinates. Labels, when present, are per-row nonnegative
/// class ids.
struct EmbeddingSet {
  Matrix points;                  // N x d
  std::optional<Labels> labels;   // size N when present
  std::string domain_tag;

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

/// Throws (EmptyError / DataError / DimensionError) if invariants are broken:
/// N >= 1, d >= 1, all coordinates finite, labels (if any) sized N and >= 0.
void validate(const EmbeddingSet& set);

/// Row-index pairing between two embedding sets of equal dimension.
struct PairedEmbeddings {
  EmbeddingSet side_a;
  EmbeddingSet side_b;
  std::vector<std::pair<Index, Index>> pairs;
};

/// Builds a validated pairing. Indices must be in range and a row may appear
/// at most once per side; an empty pair list is rejected (alignment would be
/// undefined).
PairedEmbeddings pair_samples(EmbeddingSet a, EmbeddingSet b,
                              std::vector<std::pair<Index, Index>> pair_index);

/// Paired multi-modal samples for one domain: full observations, labels or
/// attribute rows, optional masks, and the retained fraction rho.
struct DatasetBundle {
  Matrix observations;             // N x D
  Labels labels;                   // size N, values < n_classes
  std::optional<Matrix> semantics; // optional attribute rows, N x K
  std::optional<Matrix> mask;      // optional binary N x D
  double sparsity = 1.0;           // rho in (0, 1]
  int n_classes = 0;
  std::string domain_tag;

  Index size() const { return observations.rows(); }
  Index dim() const { return observations.cols(); }
};

void validate(const DatasetBundle& bundle);

}  // namespace ulhm
