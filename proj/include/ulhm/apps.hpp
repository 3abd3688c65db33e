#pragma once

#include "ulhm/train.hpp"
#include "ulhm/types.hpp"

#include <cstdint>
#include <vector>

namespace ulhm {

struct CentroidTable {
  Matrix centroids;            // row r is the mean latent of class_ids[r]
  std::vector<int> class_ids;  // ascending
};

/// Per-class latent means. With n_classes > 0 the table covers exactly
/// classes 0..n_classes-1 and an empty class is an error; with n_classes = 0
/// it covers the classes present in labels.
CentroidTable class_centroids(MatrixRef z, const Labels& labels, int n_classes = 0);

/// Nearest centroid by Euclidean distance, restricted to the candidate
/// classes (empty = all classes in the table). Ties go to the smaller id.
Labels nearest_centroid_classify(MatrixRef z, const CentroidTable& table,
                                 const std::vector<int>& candidates = {});

/// input_scale * dec(enc([x .* mask / input_scale, mask])): reconstruct
/// complete observations, in data units, from sparse ones.
Matrix sparse_recover(const UlhmModel& model, MatrixRef sparse_x, MatrixRef mask);

struct RecoveryCurve {
  std::vector<Scalar> rhos;
  std::vector<Scalar> mse;  // against the complete observations
};

/// Masks x_complete at each rho (deterministic per seed), recovers, and
/// reports the mean squared error. At rho = 1 this is exactly plain
/// autoencoding: the mask is all ones.
RecoveryCurve eval_recovery(const UlhmModel& model, MatrixRef x_complete,
                            const std::vector<Scalar>& rhos, std::uint64_t seed);

struct ClassificationReport {
  double accuracy = 0;
  std::vector<long> per_class_correct;  // indexed by class id
  std::vector<long> per_class_total;
  Labels predicted;
};

ClassificationReport score_classification(const Labels& predicted, const Labels& truth,
                                          int n_classes);

/// Encode with one domain's encoder + projection, classify with another
/// domain's classifier. Predictions are class ids (mapped back from the
/// classifier's seen-class outputs).
ClassificationReport eval_transfer(const TrainedModels& models, int encode_domain,
                                   int classifier_domain, MatrixRef x, const Labels& labels);

struct ZeroShotConfig {
  Scalar rho_centroid = 1.0;  // mask density when building class centroids
  Scalar rho_test = 1.0;      // mask density for the test encodings
  std::uint64_t seed = 0;
};

struct ZeroShotResult {
  ClassificationReport zsl;   // unseen test rows, candidates = unseen classes
  ClassificationReport gzsl;  // all test rows, candidates = all classes
  CentroidTable centroids;
};

/// Nearest-centroid zero-shot evaluation in the observation encoder's latent
/// space. Centroids are built from training samples of every class (the
/// encoder itself never saw unseen-class semantics, only their inputs).
ZeroShotResult eval_zeroshot(const UlhmModel& model, MatrixRef x_train, const Labels& y_train,
                             MatrixRef x_test, const Labels& y_test,
                             const std::vector<int>& unseen_classes, int n_classes,
                             const ZeroShotConfig& cfg);

}  // namespace ulhm
