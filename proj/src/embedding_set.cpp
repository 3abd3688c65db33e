#include "ulhm/embedding_set.hpp"

#include "ulhm/errors.hpp"

#include <cmath>
#include <unordered_set>

namespace ulhm {

void validate(const EmbeddingSet& set) {
  if (set.points.rows() == 0) throw EmptyError("embedding set '" + set.domain_tag + "' has no rows");
  if (set.points.cols() == 0) throw DimensionError("embedding set '" + set.domain_tag + "' has zero dimension");
  if (!set.points.allFinite())
    throw DataError("embedding set '" + set.domain_tag + "' contains a non-finite coordinate");
  if (set.labels) {
    if (static_cast<Index>(set.labels->size()) != set.points.rows())
      throw DataError("label count does not match row count in '" + set.domain_tag + "'");
    for (std::size_t i = 0; i < set.labels->size(); ++i)
      if ((*set.labels)[i] < 0)
        throw DataError("negative label in '" + set.domain_tag + "'", static_cast<long>(i));
  }
}

PairedEmbeddings pair_samples(EmbeddingSet a, EmbeddingSet b,
                              std::vector<std::pair<Index, Index>> pair_index) {
  validate(a);
  validate(b);
  if (a.dim() != b.dim()) throw DimensionError("paired sides differ in dimension");
  if (pair_index.empty()) throw PairError("empty pair list");
  std::unordered_set<Index> seen_a, seen_b;
  for (const auto& [ia, ib] : pair_index) {
    if (ia < 0 || ia >= a.size()) throw PairError("pair index out of range on first side");
    if (ib < 0 || ib >= b.size()) throw PairError("pair index out of range on second side");
    if (!seen_a.insert(ia).second) throw PairError("duplicate sample on first side of pairing");
    if (!seen_b.insert(ib).second) throw PairError("duplicate sample on second side of pairing");
  }
  return PairedEmbeddings{std::move(a), std::move(b), std::move(pair_index)};
}

void validate(const DatasetBundle& bundle) {
  if (bundle.observations.rows() == 0)
    throw EmptyError("dataset '" + bundle.domain_tag + "' has no rows");
  if (!bundle.observations.allFinite())
    throw DataError("dataset '" + bundle.domain_tag + "' contains a non-finite value");
  if (static_cast<Index>(bundle.labels.size()) != bundle.observations.rows())
    throw DataError("label count does not match row count in '" + bundle.domain_tag + "'");
  if (bundle.n_classes <= 0) throw DataError("dataset '" + bundle.domain_tag + "' has no classes");
  for (std::size_t i = 0; i < bundle.labels.size(); ++i)
    if (bundle.labels[i] < 0 || bundle.labels[i] >= bundle.n_classes)
      throw DataError("label out of range in '" + bundle.domain_tag + "'", static_cast<long>(i));
  if (bundle.semantics && bundle.semantics->rows() != bundle.observations.rows())
    throw DimensionError("semantic rows do not match observations in '" + bundle.domain_tag + "'");
  if (bundle.mask) {
    if (bundle.mask->rows() != bundle.observations.rows() ||
        bundle.mask->cols() != bundle.observations.cols())
      throw DimensionError("mask shape does not match observations in '" + bundle.domain_tag + "'");
    if ((bundle.mask->array() != 0.0 && bundle.mask->array() != 1.0).any())
      throw DataError("mask entries must be 0 or 1 in '" + bundle.domain_tag + "'");
  }
  if (!(bundle.sparsity > 0.0 && bundle.sparsity <= 1.0))
    throw DataError("sparsity must lie in (0, 1]");
}

}  // namespace ulhm
