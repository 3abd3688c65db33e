#include "ulhm/train.hpp"

#include "ulhm/errors.hpp"
#include "ulhm/neighbors.hpp"
#include "ulhm/rng.hpp"

#include "leio.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

namespace ulhm {

const char* to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void UlhmModel::zero_grads() {
  enc.zero_grads();
  dec.zero_grads();
  enc_sem.zero_grads();
  dec_sem.zero_grads();
}

namespace {

std::vector<Index> layer_list(Index front, const std::vector<Index>& hidden, Index back) {
  std::vector<Index> layers{front};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(back);
  return layers;
}

Network make_net(const std::vector<Index>& layers, Activation act, std::uint64_t seed) {
  return init_network(NetworkSpec{layers, act, seed});
}

Matrix gather_rows(MatrixRef m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

void scatter_add_rows(Matrix& target, const std::vector<Index>& rows, const Matrix& src) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    target.row(rows[i]) += src.row(static_cast<Index>(i));
}

}  // namespace

TrainedModels make_models(const TrainConfig& cfg, Index obs_dim, int n_classes, int n_domains) {
  if (cfg.latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (n_domains < 1) throw ConfigError("need at least one domain");
  std::set<int> unseen(cfg.unseen_classes.begin(), cfg.unseen_classes.end());
  for (int c : unseen)
    if (c < 0 || c >= n_classes) throw ConfigError("unseen class out of range");
  if (static_cast<int>(unseen.size()) >= n_classes)
    throw ConfigError("at least one class must stay seen");

  TrainedModels models;
  models.n_classes = n_classes;
  models.obs_dim = obs_dim;
  models.config = cfg;
  models.unseen_classes.assign(unseen.begin(), unseen.end());
  for (int c = 0; c < n_classes; ++c)
    if (!unseen.count(c)) models.seen_classes.push_back(c);

  const Index d = cfg.latent_dim;
  const auto n_seen = static_cast<Index>(models.seen_classes.size());
  for (int k = 0; k < n_domains; ++k) {
    const auto ku = static_cast<std::uint64_t>(k);
    DomainModel dom;
    dom.ulhm.enc = make_net(layer_list(2 * obs_dim, cfg.enc_hidden, d), cfg.activation,
                            derive_seed(cfg.seed, "enc", ku));
    dom.ulhm.dec = make_net(layer_list(d, cfg.dec_hidden, obs_dim), cfg.activation,
                            derive_seed(cfg.seed, "dec", ku));
    dom.ulhm.enc_sem = make_net(layer_list(n_classes, cfg.sem_hidden, d), cfg.activation,
                                derive_seed(cfg.seed, "enc_sem", ku));
    std::vector<Index> sem_rev(cfg.sem_hidden.rbegin(), cfg.sem_hidden.rend());
    dom.ulhm.dec_sem = make_net(layer_list(d, sem_rev, n_classes), cfg.activation,
                                derive_seed(cfg.seed, "dec_sem", ku));
    dom.align_w = Matrix::Identity(d, d);
    dom.align_b = RowVector::Zero(d);
    dom.proj =
        make_net(layer_list(d, cfg.proj_hidden, d), cfg.activation, derive_seed(cfg.seed, "proj", ku));
    models.domains.push_back(std::move(dom));
    models.classifiers.push_back(make_net(layer_list(d, cfg.cls_hidden, n_seen), cfg.activation,
                                          derive_seed(cfg.seed, "cls", ku)));
  }
  return models;
}

Matrix one_hot(const Labels& labels, int n_classes) {
  Matrix out = Matrix::Zero(static_cast<Index>(labels.size()), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw DataError("label out of range", static_cast<long>(i));
    out(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return out;
}

Matrix encode_observations(const UlhmModel& model, MatrixRef x, MatrixRef mask) {
  if (x.rows() != mask.rows() || x.cols() != mask.cols())
    throw DimensionError("mask shape does not match observations");
  Matrix in(x.rows(), 2 * x.cols());
  in << x.cwiseProduct(mask) / model.input_scale, mask;
  return forward(model.enc, in).output();
}

Matrix universal_latents(const DomainModel& model, MatrixRef x, MatrixRef mask) {
  const Matrix z = encode_observations(model.ulhm, x, mask);
  const Matrix t = (z * model.align_w).rowwise() + model.align_b;
  return t + forward(model.proj, t).output();
}

UlhmLossParts total_ulhm_loss(UlhmModel& model, const UlhmBatch& batch, const LossWeights& w,
                              const NeighborLists& nbrs) {
  const Index n = batch.sparse_x.rows();
  if (batch.mask.rows() != n || batch.x_complete.rows() != n ||
      static_cast<Index>(batch.labels.size()) != n ||
      static_cast<Index>(batch.has_semantic.size()) != n)
    throw DimensionError("inconsistent batch");

  Matrix enc_in(n, batch.sparse_x.cols() + batch.mask.cols());
  enc_in << batch.sparse_x, batch.mask;
  const ForwardCache enc_cache = forward(model.enc, enc_in);
  const Matrix& z_x = enc_cache.output();

  UlhmLossParts parts;

  const ForwardCache dec_cache = forward(model.dec, z_x);
  const LossGrad recon_x = loss_recon(dec_cache.output(), batch.x_complete, Likelihood::gaussian);
  parts.recon_x = recon_x.value;
  Matrix grad_zx = backward(model.dec, dec_cache, recon_x.grad);

  std::vector<Index> sem_rows;
  for (Index i = 0; i < n; ++i)
    if (batch.has_semantic[static_cast<std::size_t>(i)]) sem_rows.push_back(i);

  if (!sem_rows.empty()) {
    Labels sem_labels;
    for (Index i : sem_rows) sem_labels.push_back(batch.labels[static_cast<std::size_t>(i)]);
    const ForwardCache sem_cache = forward(model.enc_sem, one_hot(sem_labels, batch.n_classes));
    const Matrix& z_s = sem_cache.output();

    const ForwardCache dec_sem_cache = forward(model.dec_sem, z_s);
    const LossGrad recon_s = loss_recon(dec_sem_cache.output(), sem_labels);
    parts.recon_s = recon_s.value;
    Matrix grad_zs = backward(model.dec_sem, dec_sem_cache, recon_s.grad);

    const GroupLossGrad consist = loss_consist({gather_rows(z_x, sem_rows), z_s}, w);
    parts.consist = consist.value;
    scatter_add_rows(grad_zx, sem_rows, w.lambda_c * consist.grads[0]);
    grad_zs += w.lambda_c * consist.grads[1];
    backward(model.enc_sem, sem_cache, grad_zs);
  }

  const LossGrad local = loss_local(z_x, nbrs);
  parts.local = local.value;
  grad_zx += w.lambda_l * local.grad;
  backward(model.enc, enc_cache, grad_zx);

  parts.total = parts.recon_x + parts.recon_s + w.lambda_c * parts.consist +
                w.lambda_l * parts.local;
  return parts;
}

namespace {

struct Stepper {
  Optimizer kind;
  Scalar lr;
  std::vector<AdamState> states;
  std::vector<Network*> nets;

  Stepper(Optimizer kind_, Scalar lr_, std::vector<Network*> nets_)
      : kind(kind_), lr(lr_), nets(std::move(nets_)) {
    if (kind == Optimizer::adam)
      for (Network* n : nets) states.push_back(make_adam_state(*n));
  }

  void step() {
    for (std::size_t i = 0; i < nets.size(); ++i) {
      if (kind == Optimizer::adam)
        adam_step(*nets[i], states[i], lr);
      else
        sgd_step(*nets[i], lr);
    }
  }
};

void check_finite_loss(Scalar total, int stage) {
  if (!std::isfinite(total))
    throw TrainingDivergedError("non-finite loss in stage " + std::to_string(stage));
}

}  // namespace

TrainResult train(const std::vector<DatasetBundle>& data, const TrainConfig& cfg) {
  if (data.empty()) throw EmptyError("no training data");
  for (const auto& bundle : data) validate(bundle);
  const Index obs_dim = data.front().dim();
  const int n_classes = data.front().n_classes;
  for (const auto& bundle : data)
    if (bundle.dim() != obs_dim || bundle.n_classes != n_classes)
      throw DimensionError("training domains disagree on shape or class count");
  const std::vector<Scalar> rhos = cfg.train_rhos.empty() ? std::vector<Scalar>{1.0}
                                                          : cfg.train_rhos;

  TrainResult result;
  result.models = make_models(cfg, obs_dim, n_classes, static_cast<int>(data.size()));
  TrainedModels& models = result.models;
  const std::set<int> unseen(models.unseen_classes.begin(), models.unseen_classes.end());
  const auto n_domains = data.size();

  // Data-space neighborhoods are fixed before training.
  std::vector<DistanceMatrix> data_dist;
  std::vector<NeighborLists> data_nbrs;
  for (const auto& bundle : data) {
    data_dist.push_back(pairwise_distances(bundle.observations, DistanceKind::euclidean));
    data_nbrs.push_back(knn(data_dist.back(), cfg.kappa));
  }

  // ---- Stage 1: per-domain pretraining ----
  for (std::size_t k = 0; k < n_domains; ++k) {
    const DatasetBundle& bundle = data[k];
    const Index n = bundle.size();
    UlhmModel& model = models.domains[k].ulhm;
    const Scalar rms = std::sqrt(bundle.observations.squaredNorm() /
                                 static_cast<Scalar>(bundle.observations.size()));
    model.input_scale = rms > 0 ? rms : 1.0;
    Stepper opt(cfg.optimizer, cfg.stage1.lr,
                {&model.enc, &model.dec, &model.enc_sem, &model.dec_sem});

    std::vector<char> has_semantic(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      has_semantic[static_cast<std::size_t>(i)] =
          unseen.count(bundle.labels[static_cast<std::size_t>(i)]) ? 0 : 1;

    for (int epoch = 0; epoch < cfg.stage1.epochs; ++epoch) {
      const Scalar rho = rhos[static_cast<std::size_t>(epoch) % rhos.size()];
      const std::uint64_t tick = (static_cast<std::uint64_t>(k) << 32) |
                                 static_cast<std::uint64_t>(epoch);
      auto [sparse_x, mask] =
          apply_mask(bundle.observations, {rho, derive_seed(cfg.seed, "stage1-mask", tick)});

      LossRecord rec;
      rec.stage = 1;
      rec.domain = static_cast<int>(k);
      rec.epoch = epoch;

      auto run_batch = [&](const std::vector<Index>& rows, const NeighborLists& nbrs) {
        UlhmBatch batch;
        batch.sparse_x = gather_rows(sparse_x, rows) / model.input_scale;
        batch.mask = gather_rows(mask, rows);
        batch.x_complete = gather_rows(bundle.observations, rows) / model.input_scale;
        for (Index i : rows) {
          batch.labels.push_back(bundle.labels[static_cast<std::size_t>(i)]);
          batch.has_semantic.push_back(has_semantic[static_cast<std::size_t>(i)]);
        }
        batch.n_classes = n_classes;
        model.zero_grads();
        const UlhmLossParts parts = total_ulhm_loss(model, batch, cfg.weights, nbrs);
        check_finite_loss(parts.total, 1);
        opt.step();
        rec.recon_x += parts.recon_x;
        rec.recon_s += parts.recon_s;
        rec.consist += parts.consist;
        rec.local += parts.local;
        rec.total += parts.total;
      };

      if (cfg.batch_size <= 0 || cfg.batch_size >= n) {
        std::vector<Index> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Index{0});
        run_batch(all, data_nbrs[k]);
      } else {
        if (cfg.batch_size < 2) throw ConfigError("batch_size must be at least 2");
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        auto rng = make_rng(derive_seed(cfg.seed, "stage1-shuffle", tick));
        std::shuffle(order.begin(), order.end(), rng);
        for (Index start = 0; start < n; start += cfg.batch_size) {
          Index stop = std::min<Index>(start + cfg.batch_size, n);
          if (n - stop == 1) stop = n;  // avoid a singleton tail batch
          const std::vector<Index> rows(order.begin() + start, order.begin() + stop);
          // Neighborhoods restricted to the batch so the local term stays
          // within reach of the gradient step.
          Matrix sub(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
          for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = 0; b < rows.size(); ++b)
              sub(static_cast<Index>(a), static_cast<Index>(b)) =
                  data_dist[k].values(rows[a], rows[b]);
          DistanceMatrix sub_dist{sub, DistanceKind::euclidean};
          const int kap = std::min<int>(cfg.kappa, static_cast<int>(rows.size()) - 1);
          run_batch(rows, knn(sub_dist, kap));
          if (stop == n) break;
        }
      }
      result.history.push_back(rec);
    }
  }

  // ---- Stage 2: projections only, encoders frozen ----
  // Inputs are fixed (rho = 1) and the encoders no longer move, so the
  // domain latents can be computed once.
  std::vector<Matrix> z_frozen;
  std::vector<Matrix> x_scaled;
  for (std::size_t k = 0; k < n_domains; ++k) {
    const Matrix ones = Matrix::Ones(data[k].size(), obs_dim);
    z_frozen.push_back(
        encode_observations(models.domains[k].ulhm, data[k].observations, ones));
    x_scaled.push_back(data[k].observations / models.domains[k].ulhm.input_scale);
  }

  // Pooled rows whose labels participate in the alignment losses.
  std::vector<std::vector<Index>> align_rows(n_domains);
  Labels align_labels;
  std::vector<int> align_domains;
  for (std::size_t k = 0; k < n_domains; ++k)
    for (Index i = 0; i < data[k].size(); ++i)
      if (!unseen.count(data[k].labels[static_cast<std::size_t>(i)])) {
        align_rows[k].push_back(i);
        align_labels.push_back(data[k].labels[static_cast<std::size_t>(i)]);
        align_domains.push_back(static_cast<int>(k));
      }

  // Warm start for the universal frame: the first domain's latents define the
  // frame, and every other domain is mapped onto it by the similarity (scaled
  // rotation plus shift) that best matches seen-class centroids, the
  // orthogonal Procrustes solution. A similarity keeps each domain's cluster
  // shapes intact and equalizes global scale, so gradient training begins at
  // the right class correspondence; the residual head absorbs whatever a
  // rigid map cannot. Skipped for domains without enough labeled classes.
  if (cfg.stage2.epochs > 0 && n_domains > 1) {
    std::vector<std::map<int, RowVector>> centroids(n_domains);
    for (std::size_t k = 0; k < n_domains; ++k) {
      std::map<int, int> counts;
      for (Index i : align_rows[k]) {
        const int c = data[k].labels[static_cast<std::size_t>(i)];
        auto [it, fresh] = centroids[k].try_emplace(c, RowVector::Zero(cfg.latent_dim));
        it->second += z_frozen[k].row(i);
        counts[c] += 1;
      }
      for (auto& [c, s] : centroids[k]) s /= static_cast<Scalar>(counts[c]);
    }

    for (std::size_t k = 1; k < n_domains; ++k) {
      std::vector<int> common;
      for (const auto& [c, t] : centroids[0])
        if (centroids[k].count(c)) common.push_back(c);
      if (common.size() < 2) continue;

      const auto n_c = static_cast<Index>(common.size());
      Matrix src(n_c, cfg.latent_dim);
      Matrix dst(n_c, cfg.latent_dim);
      for (Index r = 0; r < n_c; ++r) {
        src.row(r) = centroids[k].at(common[static_cast<std::size_t>(r)]);
        dst.row(r) = centroids[0].at(common[static_cast<std::size_t>(r)]);
      }
      const RowVector src_mean = src.colwise().mean();
      const RowVector dst_mean = dst.colwise().mean();
      src.rowwise() -= src_mean;
      dst.rowwise() -= dst_mean;
      const Scalar src_sq = src.squaredNorm();
      if (src_sq <= 0) continue;

      Eigen::JacobiSVD<Matrix> svd(src.transpose() * dst,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Matrix rot = svd.matrixU() * svd.matrixV().transpose();
      const Scalar scale = svd.singularValues().sum() / src_sq;
      models.domains[k].align_w = scale * rot;
      models.domains[k].align_b = dst_mean - src_mean * models.domains[k].align_w;
    }
  }
  std::vector<Matrix> t_frozen;
  for (std::size_t k = 0; k < n_domains; ++k)
    t_frozen.push_back((z_frozen[k] * models.domains[k].align_w).rowwise() +
                       models.domains[k].align_b);

  {
    std::vector<Network*> projs;
    for (auto& dom : models.domains) projs.push_back(&dom.proj);
    Stepper opt(cfg.optimizer, cfg.stage2.lr, projs);

    for (int epoch = 0; epoch < cfg.stage2.epochs; ++epoch) {
      LossRecord rec;
      rec.stage = 2;
      rec.epoch = epoch;

      std::vector<ForwardCache> proj_caches;
      std::vector<Matrix> u_domains;  // residual head: u = t + proj(t)
      std::vector<Matrix> grad_u(n_domains);
      for (std::size_t k = 0; k < n_domains; ++k) {
        DomainModel& dom = models.domains[k];
        dom.proj.zero_grads();
        dom.ulhm.dec.zero_grads();  // receives unused gradients below
        proj_caches.push_back(forward(dom.proj, t_frozen[k]));
        u_domains.push_back(t_frozen[k] + proj_caches.back().output());
        const ForwardCache dec_cache = forward(dom.ulhm.dec, u_domains.back());
        // Sum-form reconstruction anchor; on the same footing as the
        // summed contrastive/centroid terms.
        const Matrix diff = dec_cache.output() - x_scaled[k];
        rec.recon_x += diff.squaredNorm();
        grad_u[k] = backward(dom.ulhm.dec, dec_cache, 2.0 * diff);
      }

      Matrix pooled(static_cast<Index>(align_labels.size()), cfg.latent_dim);
      Index at = 0;
      for (std::size_t k = 0; k < n_domains; ++k)
        for (Index i : align_rows[k]) pooled.row(at++) = u_domains[k].row(i);

      const ContrastiveResult contr =
          loss_contrastive(pooled, align_labels, align_domains, cfg.weights.temperature);
      const LossGrad cent = loss_centroid(pooled, align_labels, align_domains);
      rec.contrastive = contr.value;
      rec.centroid = cent.value;

      at = 0;
      for (std::size_t k = 0; k < n_domains; ++k)
        for (Index i : align_rows[k]) {
          grad_u[k].row(i) += cfg.weights.lambda_cont * contr.grad.row(at) +
                              cfg.weights.lambda_cent * cent.grad.row(at);
          ++at;
        }

      rec.total = rec.recon_x + cfg.weights.lambda_cont * rec.contrastive +
                  cfg.weights.lambda_cent * rec.centroid;
      check_finite_loss(rec.total, 2);
      for (std::size_t k = 0; k < n_domains; ++k)
        backward(models.domains[k].proj, proj_caches[k], grad_u[k]);
      opt.step();
      result.history.push_back(rec);
    }
  }

  // ---- Stage 3: one classifier per source domain, everything else frozen ----
  std::vector<int> seen_index(static_cast<std::size_t>(n_classes), -1);
  for (std::size_t s = 0; s < models.seen_classes.size(); ++s)
    seen_index[static_cast<std::size_t>(models.seen_classes[s])] = static_cast<int>(s);

  for (std::size_t k = 0; k < n_domains; ++k) {
    const Matrix u = t_frozen[k] + forward(models.domains[k].proj, t_frozen[k]).output();
    const Matrix u_rows = gather_rows(u, align_rows[k]);
    Labels targets;
    for (Index i : align_rows[k])
      targets.push_back(seen_index[static_cast<std::size_t>(
          data[k].labels[static_cast<std::size_t>(i)])]);

    Network& cls = models.classifiers[k];
    Stepper opt(cfg.optimizer, cfg.stage3.lr, {&cls});
    for (int epoch = 0; epoch < cfg.stage3.epochs; ++epoch) {
      cls.zero_grads();
      const ForwardCache cache = forward(cls, u_rows);
      const LossGrad ce = loss_cross_entropy(cache.output(), targets);
      backward(cls, cache, ce.grad);
      check_finite_loss(ce.value, 3);
      opt.step();

      LossRecord rec;
      rec.stage = 3;
      rec.domain = static_cast<int>(k);
      rec.epoch = epoch;
      rec.cross_entropy = ce.value;
      rec.total = ce.value;
      result.history.push_back(rec);
    }
  }

  return result;
}

void save_history_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "stage,domain,epoch,recon_x,recon_s,consist,local,contrastive,centroid,"
         "cross_entropy,total\n";
  char buf[40];
  auto put = [&](Scalar v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const auto& r : history) {
    out << r.stage << ',' << r.domain << ',' << r.epoch;
    put(r.recon_x);
    put(r.recon_s);
    put(r.consist);
    put(r.local);
    put(r.contrastive);
    put(r.centroid);
    put(r.cross_entropy);
    put(r.total);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

nlohmann::ordered_json index_array(const std::vector<Index>& v) {
  return nlohmann::ordered_json(v);
}

std::vector<Index> index_vector(const nlohmann::json& j) {
  return j.get<std::vector<Index>>();
}

}  // namespace

nlohmann::ordered_json train_config_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["latent_dim"] = cfg.latent_dim;
  j["enc_hidden"] = index_array(cfg.enc_hidden);
  j["dec_hidden"] = index_array(cfg.dec_hidden);
  j["sem_hidden"] = index_array(cfg.sem_hidden);
  j["proj_hidden"] = index_array(cfg.proj_hidden);
  j["cls_hidden"] = index_array(cfg.cls_hidden);
  j["activation"] = to_string(cfg.activation);
  j["stage1"] = {{"epochs", cfg.stage1.epochs}, {"lr", cfg.stage1.lr}};
  j["stage2"] = {{"epochs", cfg.stage2.epochs}, {"lr", cfg.stage2.lr}};
  j["stage3"] = {{"epochs", cfg.stage3.epochs}, {"lr", cfg.stage3.lr}};
  j["weights"] = {{"lambda_c", cfg.weights.lambda_c},       {"lambda_l", cfg.weights.lambda_l},
                  {"lambda_cos", cfg.weights.lambda_cos},   {"lambda_eucl", cfg.weights.lambda_eucl},
                  {"lambda_cont", cfg.weights.lambda_cont}, {"lambda_cent", cfg.weights.lambda_cent},
                  {"temperature", cfg.weights.temperature}};
  j["kappa"] = cfg.kappa;
  j["train_rhos"] = cfg.train_rhos;
  j["batch_size"] = cfg.batch_size;
  j["optimizer"] = to_string(cfg.optimizer);
  j["seed"] = cfg.seed;
  j["unseen_classes"] = cfg.unseen_classes;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.latent_dim = j.at("latent_dim").get<Index>();
  cfg.enc_hidden = index_vector(j.at("enc_hidden"));
  cfg.dec_hidden = index_vector(j.at("dec_hidden"));
  cfg.sem_hidden = index_vector(j.at("sem_hidden"));
  cfg.proj_hidden = index_vector(j.at("proj_hidden"));
  cfg.cls_hidden = index_vector(j.at("cls_hidden"));
  cfg.activation = activation_from_string(j.at("activation").get<std::string>());
  cfg.stage1 = {j.at("stage1").at("epochs").get<int>(), j.at("stage1").at("lr").get<Scalar>()};
  cfg.stage2 = {j.at("stage2").at("epochs").get<int>(), j.at("stage2").at("lr").get<Scalar>()};
  cfg.stage3 = {j.at("stage3").at("epochs").get<int>(), j.at("stage3").at("lr").get<Scalar>()};
  const auto& w = j.at("weights");
  cfg.weights.lambda_c = w.at("lambda_c").get<Scalar>();
  cfg.weights.lambda_l = w.at("lambda_l").get<Scalar>();
  cfg.weights.lambda_cos = w.at("lambda_cos").get<Scalar>();
  cfg.weights.lambda_eucl = w.at("lambda_eucl").get<Scalar>();
  cfg.weights.lambda_cont = w.at("lambda_cont").get<Scalar>();
  cfg.weights.lambda_cent = w.at("lambda_cent").get<Scalar>();
  cfg.weights.temperature = w.at("temperature").get<Scalar>();
  cfg.kappa = j.at("kappa").get<int>();
  cfg.train_rhos = j.at("train_rhos").get<std::vector<Scalar>>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.unseen_classes = j.at("unseen_classes").get<std::vector<int>>();
  return cfg;
}

nlohmann::ordered_json synthetic_spec_json(const SyntheticSpec& spec) {
  nlohmann::ordered_json j;
  j["n_classes"] = spec.n_classes;
  j["per_class"] = spec.per_class;
  j["obs_dim"] = spec.obs_dim;
  j["domains"] = spec.domains;
  j["transform"] = to_string(spec.transform);
  j["noise"] = spec.noise;
  j["separation"] = spec.separation;
  j["sibling_dist"] = spec.sibling_dist;
  j["seed"] = spec.seed;
  return j;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  spec.n_classes = j.at("n_classes").get<int>();
  spec.per_class = j.at("per_class").get<int>();
  spec.obs_dim = j.at("obs_dim").get<Index>();
  spec.domains = j.at("domains").get<int>();
  spec.transform = transform_from_string(j.at("transform").get<std::string>());
  spec.noise = j.at("noise").get<Scalar>();
  spec.separation = j.at("separation").get<Scalar>();
  spec.sibling_dist = j.at("sibling_dist").get<Scalar>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

namespace {

constexpr std::array<char, 4> kCheckpointMagic = {'U', 'L', 'H', 'C'};

template <class Models, class Fn>
void for_each_network(Models& models, Fn&& fn) {
  for (auto& dom : models.domains) {
    fn(dom.ulhm.enc);
    fn(dom.ulhm.dec);
    fn(dom.ulhm.enc_sem);
    fn(dom.ulhm.dec_sem);
    fn(dom.proj);
  }
  for (auto& cls : models.classifiers) fn(cls);
}

}  // namespace

void save_checkpoint(const TrainedModels& models, const std::optional<SyntheticSpec>& data_spec,
                     const std::filesystem::path& blob_path,
                     const std::filesystem::path& sidecar_path) {
  std::vector<Scalar> flat;
  for_each_network(models, [&](const Network& net) {
    const auto params = flatten_parameters(net);
    flat.insert(flat.end(), params.begin(), params.end());
  });

  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("cannot write " + blob_path.string());
  blob.write(kCheckpointMagic.data(), 4);
  detail::write_u64_le(blob, flat.size());
  for (Scalar v : flat) detail::write_f64_le(blob, v);
  if (!blob) throw IoError("write failed for " + blob_path.string());

  nlohmann::ordered_json side;
  side["schema_version"] = 1;
  side["obs_dim"] = models.obs_dim;
  side["n_classes"] = models.n_classes;
  side["n_domains"] = models.domains.size();
  side["seen_classes"] = models.seen_classes;
  side["unseen_classes"] = models.unseen_classes;
  std::vector<Scalar> scales;
  for (const auto& dom : models.domains) scales.push_back(dom.ulhm.input_scale);
  side["input_scales"] = scales;
  nlohmann::ordered_json aligns = nlohmann::ordered_json::array();
  for (const auto& dom : models.domains) {
    nlohmann::ordered_json a;
    std::vector<std::vector<Scalar>> w;
    for (Index r = 0; r < dom.align_w.rows(); ++r)
      w.emplace_back(dom.align_w.row(r).begin(), dom.align_w.row(r).end());
    a["w"] = w;
    a["b"] = std::vector<Scalar>(dom.align_b.begin(), dom.align_b.end());
    aligns.push_back(std::move(a));
  }
  side["align_maps"] = std::move(aligns);
  side["config"] = train_config_json(models.config);
  side["data_spec"] = data_spec ? synthetic_spec_json(*data_spec) : nlohmann::ordered_json(nullptr);
  std::ofstream sidecar(sidecar_path);
  if (!sidecar) throw IoError("cannot write " + sidecar_path.string());
  sidecar << side.dump(2) << "\n";
  if (!sidecar) throw IoError("write failed for " + sidecar_path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& blob_path,
                           const std::filesystem::path& sidecar_path) {
  std::ifstream side_in(sidecar_path);
  if (!side_in) throw IoError("cannot open " + sidecar_path.string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(side_in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("invalid checkpoint sidecar: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  const TrainConfig cfg = train_config_from_json(side.at("config"));
  ckpt.models = make_models(cfg, side.at("obs_dim").get<Index>(),
                            side.at("n_classes").get<int>(), side.at("n_domains").get<int>());
  const auto scales = side.at("input_scales").get<std::vector<Scalar>>();
  if (scales.size() != ckpt.models.domains.size())
    throw FormatError("input_scales does not match domain count");
  for (std::size_t k = 0; k < scales.size(); ++k)
    ckpt.models.domains[k].ulhm.input_scale = scales[k];
  const auto& aligns = side.at("align_maps");
  if (aligns.size() != ckpt.models.domains.size())
    throw FormatError("align_maps does not match domain count");
  for (std::size_t k = 0; k < aligns.size(); ++k) {
    DomainModel& dom = ckpt.models.domains[k];
    const auto w = aligns[k].at("w").get<std::vector<std::vector<Scalar>>>();
    const auto b = aligns[k].at("b").get<std::vector<Scalar>>();
    const Index d = dom.align_w.rows();
    if (static_cast<Index>(w.size()) != d || static_cast<Index>(b.size()) != d)
      throw FormatError("align map shape mismatch");
    for (Index r = 0; r < d; ++r) {
      if (static_cast<Index>(w[static_cast<std::size_t>(r)].size()) != d)
        throw FormatError("align map shape mismatch");
      for (Index c = 0; c < d; ++c)
        dom.align_w(r, c) = w[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      dom.align_b(r) = b[static_cast<std::size_t>(r)];
    }
  }
  if (!side.at("data_spec").is_null())
    ckpt.data_spec = synthetic_spec_from_json(side.at("data_spec"));

  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("cannot open " + blob_path.string());
  std::array<char, 4> magic{};
  blob.read(magic.data(), 4);
  if (!blob || magic != kCheckpointMagic)
    throw FormatError("bad magic in " + blob_path.string());
  const std::uint64_t count = detail::read_u64_le(blob);
  std::vector<Scalar> flat(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    flat[i] = detail::read_f64_le(blob);
    if (!blob) throw FormatError("truncated checkpoint blob");
  }

  std::size_t at = 0;
  for_each_network(ckpt.models, [&](Network& net) {
    std::size_t need = 0;
    for (std::size_t l = 0; l < net.n_layers(); ++l)
      need += static_cast<std::size_t>(net.weights[l].size() + net.biases[l].size());
    if (at + need > flat.size()) throw FormatError("checkpoint blob too short");
    load_parameters(net, std::vector<Scalar>(flat.begin() + static_cast<long>(at),
                                             flat.begin() + static_cast<long>(at + need)));
    at += need;
  });
  if (at != flat.size()) throw FormatError("checkpoint blob size mismatch");
  return ckpt;
}

}  // namespace ulhm
