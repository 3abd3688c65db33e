#include "ulhm/apps.hpp"

#include "ulhm/errors.hpp"
#include "ulhm/rng.hpp"
#include "ulhm/synthetic.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace ulhm {

CentroidTable class_centroids(MatrixRef z, const Labels& labels, int n_classes) {
  if (z.rows() != static_cast<Index>(labels.size()))
    throw DimensionError("labels do not match latent rows");
  if (z.rows() == 0) throw EmptyError("no samples for centroids");

  std::map<int, std::pair<RowVector, long>> cells;
  for (Index i = 0; i < z.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0) throw DataError("negative label", static_cast<long>(i));
    auto [it, fresh] = cells.try_emplace(c, RowVector::Zero(z.cols()), 0L);
    it->second.first += z.row(i);
    ++it->second.second;
  }

  CentroidTable table;
  if (n_classes > 0) {
    for (int c = 0; c < n_classes; ++c)
      if (!cells.count(c)) throw DataError("class " + std::to_string(c) + " has no samples");
    for (const auto& [c, cell] : cells)
      if (c >= n_classes) throw DataError("label " + std::to_string(c) + " out of range");
  }
  table.centroids.resize(static_cast<Index>(cells.size()), z.cols());
  Index r = 0;
  for (const auto& [c, cell] : cells) {
    table.class_ids.push_back(c);
    table.centroids.row(r++) = cell.first / static_cast<Scalar>(cell.second);
  }
  return table;
}

Labels nearest_centroid_classify(MatrixRef z, const CentroidTable& table,
                                 const std::vector<int>& candidates) {
  std::vector<Index> rows;  // table rows to consider, already ascending by id
  if (candidates.empty()) {
    rows.resize(table.class_ids.size());
    std::iota(rows.begin(), rows.end(), Index{0});
  } else {
    const std::set<int> wanted(candidates.begin(), candidates.end());
    for (std::size_t r = 0; r < table.class_ids.size(); ++r)
      if (wanted.count(table.class_ids[r])) rows.push_back(static_cast<Index>(r));
    if (rows.size() != wanted.size())
      throw ConfigError("candidate class missing from centroid table");
  }
  if (rows.empty()) throw ConfigError("no candidate classes");

  Labels out;
  out.reserve(static_cast<std::size_t>(z.rows()));
  for (Index i = 0; i < z.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    int best_class = -1;
    for (Index r : rows) {
      const Scalar d = (z.row(i) - table.centroids.row(r)).squaredNorm();
      if (d < best) {  // strict: ties keep the smaller class id
        best = d;
        best_class = table.class_ids[static_cast<std::size_t>(r)];
      }
    }
    out.push_back(best_class);
  }
  return out;
}

Matrix sparse_recover(const UlhmModel& model, MatrixRef sparse_x, MatrixRef mask) {
  return model.input_scale *
         forward(model.dec, encode_observations(model, sparse_x, mask)).output();
}

RecoveryCurve eval_recovery(const UlhmModel& model, MatrixRef x_complete,
                            const std::vector<Scalar>& rhos, std::uint64_t seed) {
  RecoveryCurve curve;
  for (std::size_t r = 0; r < rhos.size(); ++r) {
    auto [sparse_x, mask] =
        apply_mask(x_complete, {rhos[r], derive_seed(seed, "recover", r)});
    const Matrix recon = sparse_recover(model, sparse_x, mask);
    curve.rhos.push_back(rhos[r]);
    curve.mse.push_back((recon - x_complete).squaredNorm() /
                        static_cast<Scalar>(x_complete.size()));
  }
  return curve;
}

ClassificationReport score_classification(const Labels& predicted, const Labels& truth,
                                          int n_classes) {
  if (predicted.size() != truth.size()) throw DimensionError("prediction count mismatch");
  if (truth.empty()) throw EmptyError("nothing to score");
  ClassificationReport report;
  report.predicted = predicted;
  report.per_class_correct.assign(static_cast<std::size_t>(n_classes), 0);
  report.per_class_total.assign(static_cast<std::size_t>(n_classes), 0);
  long hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int c = truth[i];
    if (c < 0 || c >= n_classes) throw DataError("label out of range", static_cast<long>(i));
    ++report.per_class_total[static_cast<std::size_t>(c)];
    if (predicted[i] == c) {
      ++report.per_class_correct[static_cast<std::size_t>(c)];
      ++hits;
    }
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  return report;
}

ClassificationReport eval_transfer(const TrainedModels& models, int encode_domain,
                                   int classifier_domain, MatrixRef x, const Labels& labels) {
  const auto n_domains = static_cast<int>(models.domains.size());
  if (encode_domain < 0 || encode_domain >= n_domains || classifier_domain < 0 ||
      classifier_domain >= n_domains)
    throw ConfigError("domain index out of range");

  const Matrix ones = Matrix::Ones(x.rows(), x.cols());
  const Matrix u = universal_latents(models.domains[static_cast<std::size_t>(encode_domain)], x, ones);
  const Matrix logits =
      forward(models.classifiers[static_cast<std::size_t>(classifier_domain)], u).output();

  Labels predicted;
  predicted.reserve(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    predicted.push_back(models.seen_classes[static_cast<std::size_t>(best)]);
  }
  return score_classification(predicted, labels, models.n_classes);
}

ZeroShotResult eval_zeroshot(const UlhmModel& model, MatrixRef x_train, const Labels& y_train,
                             MatrixRef x_test, const Labels& y_test,
                             const std::vector<int>& unseen_classes, int n_classes,
                             const ZeroShotConfig& cfg) {
  if (unseen_classes.empty()) throw ConfigError("zero-shot needs held-out classes");

  auto [ctr_x, ctr_mask] =
      apply_mask(x_train, {cfg.rho_centroid, derive_seed(cfg.seed, "zs-centroid")});
  const Matrix z_train = encode_observations(model, ctr_x, ctr_mask);

  auto [test_x, test_mask] =
      apply_mask(x_test, {cfg.rho_test, derive_seed(cfg.seed, "zs-test")});
  const Matrix z_test = encode_observations(model, test_x, test_mask);

  ZeroShotResult result;
  result.centroids = class_centroids(z_train, y_train, n_classes);

  const std::set<int> unseen(unseen_classes.begin(), unseen_classes.end());
  std::vector<Index> unseen_rows;
  Labels unseen_truth;
  for (Index i = 0; i < z_test.rows(); ++i)
    if (unseen.count(y_test[static_cast<std::size_t>(i)])) {
      unseen_rows.push_back(i);
      unseen_truth.push_back(y_test[static_cast<std::size_t>(i)]);
    }
  if (unseen_rows.empty()) throw DataError("no test samples from held-out classes");

  Matrix z_unseen(static_cast<Index>(unseen_rows.size()), z_test.cols());
  for (std::size_t i = 0; i < unseen_rows.size(); ++i)
    z_unseen.row(static_cast<Index>(i)) = z_test.row(unseen_rows[i]);

  result.zsl = score_classification(
      nearest_centroid_classify(z_unseen, result.centroids, unseen_classes), unseen_truth,
      n_classes);
  result.gzsl = score_classification(nearest_centroid_classify(z_test, result.centroids),
                                     y_test, n_classes);
  return result;
}

}  // namespace ulhm
