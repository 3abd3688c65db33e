#pragma once

#include "ulhm/embedding_set.hpp"
#include "ulhm/losses.hpp"
#include "ulhm/network.hpp"
#include "ulhm/synthetic.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace ulhm {

enum class Optimizer { sgd, adam };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& name);

struct StageSchedule {
  int epochs = 0;
  Scalar lr = 1e-3;
};

struct TrainConfig {
  Index latent_dim = 4;
  std::vector<Index> enc_hidden = {64, 32};
  std::vector<Index> dec_hidden = {32, 64};
  std::vector<Index> sem_hidden = {16};
  std::vector<Index> proj_hidden = {16};
  std::vector<Index> cls_hidden = {};
  Activation activation = Activation::tanh;
  StageSchedule stage1{400, 2e-3};
  StageSchedule stage2{2000, 2e-3};
  StageSchedule stage3{2000, 1e-2};
  LossWeights weights;
  int kappa = 5;
  // Stage 1 cycles the mask density through these per epoch so the encoder
  // sees the whole sparsity range; stages 2-3 run at rho = 1.
  std::vector<Scalar> train_rhos = {0.25, 0.5, 0.75, 1.0};
  int batch_size = 0;  // stage-1 minibatch size; 0 = full batch
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 42;
  // Labels withheld end to end: no semantic reconstruction, consistency,
  // contrastive, centroid, or classifier signal for these classes.
  std::vector<int> unseen_classes;
};

/// The per-domain modality set of the pretraining objective: observation
/// encoder/decoder over [x .* M, M] and a semantic (label) encoder/decoder.
struct UlhmModel {
  Network enc;      // [2D, ..., d]
  Network dec;      // [d, ..., D]
  Network enc_sem;  // [C, ..., d]
  Network dec_sem;  // [d, ..., C]
  // RMS of the training observations; encoder inputs and decoder targets
  // are divided by it so the nets always operate near unit scale.
  Scalar input_scale = 1;

  void zero_grads();
};

struct DomainModel {
  UlhmModel ulhm;
  // Universal-frame map: u = t + proj(t) with t = z * align_w + align_b.
  // The affine part is solved in closed form at the start of stage 2: the
  // first domain keeps the identity and every other domain gets the
  // similarity (Procrustes over seen-class centroids) that carries its
  // latents into the first domain's frame. Gradient training then starts
  // from the right class correspondence and the residual head only has to
  // refine it.
  Matrix align_w;     // d x d, identity until stage 2
  RowVector align_b;  // 1 x d, zero until stage 2
  Network proj;       // [d, ..., d]
};

struct TrainedModels {
  std::vector<DomainModel> domains;
  std::vector<Network> classifiers;  // classifiers[k] trained on domain k only
  std::vector<int> seen_classes;     // ascending; classifier outputs map to these
  std::vector<int> unseen_classes;
  int n_classes = 0;
  Index obs_dim = 0;
  TrainConfig config;
};

struct UlhmBatch {
  Matrix sparse_x;    // x .* mask
  Matrix mask;
  Matrix x_complete;  // reconstruction target
  Labels labels;
  std::vector<char> has_semantic;  // 0 for rows whose label is withheld
  int n_classes = 0;
};

struct UlhmLossParts {
  Scalar recon_x = 0, recon_s = 0, consist = 0, local = 0;
  Scalar total = 0;
};

/// Composite pretraining objective
///   recon_x + recon_s + lambda_c * consist + lambda_l * local
/// with semantic terms restricted to rows flagged has_semantic. Gradients
/// are accumulated into the model networks (zero_grads first); nbrs must be
/// data-space neighbor lists for the batch rows.
UlhmLossParts total_ulhm_loss(UlhmModel& model, const UlhmBatch& batch, const LossWeights& w,
                              const NeighborLists& nbrs);

struct LossRecord {
  int stage = 0;
  int domain = -1;  // -1 for the joint stage-2 pass
  int epoch = 0;
  Scalar recon_x = 0, recon_s = 0, consist = 0, local = 0;
  Scalar contrastive = 0, centroid = 0, cross_entropy = 0;
  Scalar total = 0;
};

struct TrainResult {
  TrainedModels models;
  std::vector<LossRecord> history;
};

/// Three-stage schedule: per-domain pretraining, projection alignment with
/// frozen encoders, then one classifier per source domain with everything
/// else frozen. Deterministic per cfg.seed.
TrainResult train(const std::vector<DatasetBundle>& data, const TrainConfig& cfg);

/// Structural init (no training); train() starts from exactly this.
TrainedModels make_models(const TrainConfig& cfg, Index obs_dim, int n_classes, int n_domains);

Matrix one_hot(const Labels& labels, int n_classes);

/// enc([x .* mask / input_scale, mask])
Matrix encode_observations(const UlhmModel& model, MatrixRef x, MatrixRef mask);

/// t + proj(t) with t = z * align_w + align_b, z = enc([x .* mask, mask])
Matrix universal_latents(const DomainModel& model, MatrixRef x, MatrixRef mask);

void save_history_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

/// Round-tripping JSON forms used by the checkpoint sidecar and CLI reports.
nlohmann::ordered_json train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json synthetic_spec_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

struct Checkpoint {
  TrainedModels models;
  std::optional<SyntheticSpec> data_spec;  // lets eval regenerate the data
};

/// Parameter blob ("ULHC", u64 count, little-endian f64) plus a JSON sidecar
/// holding the config, class split, and optional synthetic data spec.
void save_checkpoint(const TrainedModels& models, const std::optional<SyntheticSpec>& data_spec,
                     const std::filesystem::path& blob_path,
                     const std::filesystem::path& sidecar_path);
Checkpoint load_checkpoint(const std::filesystem::path& blob_path,
                           const std::filesystem::path& sidecar_path);

}  // namespace ulhm
