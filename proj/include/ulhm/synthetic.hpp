#pragma once

#include "ulhm/embedding_set.hpp"
#include "ulhm/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ulhm {

enum class TransformKind { rotation, affine, monotone_radial };

const char* to_string(TransformKind t);
TransformKind transform_from_string(const std::string& name);

/// Ground-truth homeomorphic multi-domain data: domain 1 is a mixture of C
/// Gaussian blobs; every further domain applies one fixed smooth bijection
/// to the same samples, so rows are paired across domains and carry
/// identical labels. The first C-2 centers sit on mutually orthogonal
/// directions scaled by `separation`; the last two flank one further
/// orthogonal anchor at `sibling_dist` apart, giving the label set one
/// fine-grained pair among otherwise coarse categories.
struct SyntheticSpec {
  int n_classes = 6;
  int per_class = 50;
  Index obs_dim = 16;
  int domains = 2;
  TransformKind transform = TransformKind::monotone_radial;
  Scalar noise = 1.0;        // within-blob standard deviation
  Scalar separation = 10.0;  // anchor center distance from the origin
  Scalar sibling_dist = 8.0; // distance between the last two class centers
  std::uint64_t seed = 42;
};

/// The split tag seeds only the per-sample noise: "train" and "test" share
/// centers and domain transforms but draw disjoint samples.
std::vector<DatasetBundle> gen_synthetic(const SyntheticSpec& spec,
                                         const std::string& split = "train");

struct MaskSpec {
  Scalar rho = 1.0;  // retained fraction, (0, 1]
  std::uint64_t seed = 0;
};

/// Per-row binary mask with exactly round(rho * D) ones at uniformly random
/// positions. Returns (x .* mask, mask).
std::pair<Matrix, Matrix> apply_mask(MatrixRef x, const MaskSpec& spec);

}  // namespace ulhm
