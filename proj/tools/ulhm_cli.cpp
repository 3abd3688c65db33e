// Command-line surface: metric computation, manifold verification, toy
// training, and application evaluation, each emitting a JSON report.
//
// Exit codes: 0 success/PASS, 1 verification FAIL, 2 input error,
// 3 compute error, 4 training divergence.

#include "ulhm/apps.hpp"
#include "ulhm/errors.hpp"
#include "ulhm/io.hpp"
#include "ulhm/metrics.hpp"
#include "ulhm/rng.hpp"
#include "ulhm/synthetic.hpp"
#include "ulhm/train.hpp"
#include "ulhm/verifier.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_report(const ordered_json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ulhm::IoError("cannot write " + out_path);
  out << report.dump(2) << "\n";
  if (!out) throw ulhm::IoError("write failed for " + out_path);
}

struct MetricArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 42;
  int kappa = 5;
  std::string metric = "cosine";
  int projections = 128;
  double epsilon = 0;  // 0 = auto rule
  std::string betti_rule = "largest-gap";
  long bilipschitz_pairs = 0;
};

void add_metric_flags(CLI::App* cmd, MetricArgs& args, bool manifest_required) {
  auto* m = cmd->add_option("--manifest", args.manifest, "domain manifest JSON");
  if (manifest_required) m->required();
  cmd->add_option("--out", args.out, "report path (default: stdout)");
  cmd->add_option("--seed", args.seed, "master seed")->capture_default_str();
  cmd->add_option("--kappa", args.kappa, "neighborhood size")->capture_default_str();
  cmd->add_option("--metric", args.metric, "rank metric: cosine|euclidean")
      ->check(CLI::IsMember({"cosine", "euclidean"}))
      ->capture_default_str();
  cmd->add_option("--projections", args.projections, "sliced W2 directions")
      ->capture_default_str();
  cmd->add_option("--epsilon", args.epsilon, "fixed connectivity scale (0 = auto)");
  cmd->add_option("--betti-rule", args.betti_rule, "epsilon rule: largest-gap|median-knn")
      ->check(CLI::IsMember({"largest-gap", "median-knn"}))
      ->capture_default_str();
  cmd->add_option("--bilipschitz-pairs", args.bilipschitz_pairs,
                  "sampled pairs for distortion bounds (0 = all)");
}

ulhm::VerifierConfig verifier_config(const MetricArgs& args) {
  ulhm::VerifierConfig cfg;
  cfg.kappa = args.kappa;
  cfg.rank_metric = args.metric == "euclidean" ? ulhm::DistanceKind::euclidean
                                               : ulhm::DistanceKind::cosine;
  if (args.epsilon > 0) cfg.betti.epsilon = args.epsilon;
  cfg.betti.auto_rule = args.betti_rule == "median-knn" ? ulhm::BettiAutoRule::median_knn
                                                        : ulhm::BettiAutoRule::largest_gap;
  cfg.w2.n_projections = args.projections;
  cfg.w2.seed = args.seed;
  cfg.bilipschitz_pairs = args.bilipschitz_pairs;
  return cfg;
}

struct LoadedDomains {
  std::vector<ulhm::DomainData> domains;
  std::optional<ulhm::PairedEmbeddings> pairs;
  ulhm::VerifierFlags flags;
};

LoadedDomains domains_from_manifest(const std::string& path) {
  const ulhm::Manifest manifest = ulhm::load_manifest(path);
  LoadedDomains loaded;
  loaded.flags.has_paired_modalities = manifest.has_paired_modalities;
  loaded.flags.requires_clustering = manifest.requires_clustering;

  for (const auto& dom : manifest.domains)
    loaded.domains.push_back({dom.embeddings, dom.input});

  // First declared pairing wins; rows are identity-paired per the manifest
  // contract.
  for (const auto& dom : manifest.domains) {
    if (!dom.pairs_with) continue;
    const auto other =
        std::find_if(manifest.domains.begin(), manifest.domains.end(),
                     [&](const ulhm::ManifestDomain& m) { return m.tag == *dom.pairs_with; });
    std::vector<std::pair<ulhm::Index, ulhm::Index>> idx;
    for (ulhm::Index i = 0; i < dom.embeddings.size(); ++i) idx.emplace_back(i, i);
    loaded.pairs = ulhm::pair_samples(dom.embeddings, other->embeddings, std::move(idx));
    break;
  }
  return loaded;
}

int cmd_metrics(const MetricArgs& args) {
  const LoadedDomains loaded = domains_from_manifest(args.manifest);
  const ulhm::VerifierConfig cfg = verifier_config(args);
  const ulhm::MetricBundle bundle = ulhm::compute_bundle(loaded.domains, loaded.pairs, cfg);
  write_report(ulhm::make_metrics_report(bundle, cfg), args.out);
  return 0;
}

struct VerifyArgs {
  MetricArgs metric;
  std::string bundle_json;
  ulhm::Thresholds thresholds;
  bool paired = false;
  bool clustering = false;
};

int cmd_verify(const VerifyArgs& args) {
  ulhm::VerifierFlags flags;
  flags.has_paired_modalities = args.paired;
  flags.requires_clustering = args.clustering;
  const ulhm::VerifierConfig cfg = verifier_config(args.metric);

  ulhm::MetricBundle bundle;
  ulhm::Verdict verdict;
  if (!args.bundle_json.empty()) {
    std::ifstream in(args.bundle_json);
    if (!in) throw ulhm::IoError("cannot open " + args.bundle_json);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ulhm::FormatError("invalid bundle JSON: " + std::string(e.what()));
    }
    bundle = ulhm::bundle_from_json(doc.contains("metrics") ? doc.at("metrics") : doc);
    verdict = ulhm::verify(bundle, args.thresholds, flags);
  } else {
    if (args.metric.manifest.empty())
      throw ulhm::ManifestError("verify needs --manifest or --bundle-json");
    LoadedDomains loaded = domains_from_manifest(args.metric.manifest);
    flags.has_paired_modalities |= loaded.flags.has_paired_modalities;
    flags.requires_clustering |= loaded.flags.requires_clustering;
    std::tie(bundle, verdict) =
        ulhm::compute_and_verify(loaded.domains, loaded.pairs, cfg, args.thresholds, flags);
  }

  write_report(ulhm::make_report(bundle, verdict, args.thresholds, flags, cfg), args.metric.out);
  return verdict.pass ? 0 : 1;
}

struct TrainArgs {
  // Data: synthetic generator (the default) or a labeled manifest.
  std::string manifest;
  int classes = 6;
  int per_class = 50;
  long obs_dim = 16;
  int domains = 2;
  std::string transform = "monotone-radial";
  double noise = 1.0;
  double separation = 10.0;
  double sibling_dist = 8.0;

  std::uint64_t seed = 42;
  long latent_dim = 4;
  int epochs = -1;  // -1 = per-stage defaults
  int epochs1 = -1, epochs2 = -1, epochs3 = -1;
  double lr = 0;  // 0 = per-stage defaults
  int batch_size = 0;
  std::string optimizer = "adam";
  int kappa = 5;
  double lambda_c = 1.0, lambda_l = 0.1, lambda_cos = 1.0, lambda_eucl = 0.0;
  double lambda_cont = 100.0, lambda_cent = 10000.0, temperature = 0.1;
  std::vector<double> rhos;
  std::vector<int> unseen;

  std::string checkpoint = "checkpoint";
  std::string history;
  std::string out;
};

ulhm::TrainConfig train_config(const TrainArgs& args) {
  ulhm::TrainConfig cfg;
  cfg.latent_dim = args.latent_dim;
  cfg.seed = args.seed;
  cfg.kappa = args.kappa;
  cfg.batch_size = args.batch_size;
  cfg.optimizer = ulhm::optimizer_from_string(args.optimizer);
  cfg.weights.lambda_c = args.lambda_c;
  cfg.weights.lambda_l = args.lambda_l;
  cfg.weights.lambda_cos = args.lambda_cos;
  cfg.weights.lambda_eucl = args.lambda_eucl;
  cfg.weights.lambda_cont = args.lambda_cont;
  cfg.weights.lambda_cent = args.lambda_cent;
  cfg.weights.temperature = args.temperature;
  if (!args.rhos.empty()) cfg.train_rhos = args.rhos;
  cfg.unseen_classes = args.unseen;
  if (args.epochs >= 0)
    cfg.stage1.epochs = cfg.stage2.epochs = cfg.stage3.epochs = args.epochs;
  if (args.epochs1 >= 0) cfg.stage1.epochs = args.epochs1;
  if (args.epochs2 >= 0) cfg.stage2.epochs = args.epochs2;
  if (args.epochs3 >= 0) cfg.stage3.epochs = args.epochs3;
  if (args.lr > 0) cfg.stage1.lr = cfg.stage2.lr = cfg.stage3.lr = args.lr;
  return cfg;
}

std::vector<ulhm::DatasetBundle> bundles_from_manifest(const std::string& path) {
  const ulhm::Manifest manifest = ulhm::load_manifest(path);
  int n_classes = 0;
  for (const auto& dom : manifest.domains) {
    if (!dom.embeddings.labels)
      throw ulhm::ManifestError("training domain '" + dom.tag + "' has no labels");
    for (int label : *dom.embeddings.labels) n_classes = std::max(n_classes, label + 1);
  }
  std::vector<ulhm::DatasetBundle> bundles;
  for (const auto& dom : manifest.domains) {
    ulhm::DatasetBundle b;
    b.observations = dom.embeddings.points;
    b.labels = *dom.embeddings.labels;
    b.n_classes = n_classes;
    b.domain_tag = dom.tag;
    ulhm::validate(b);
    bundles.push_back(std::move(b));
  }
  return bundles;
}

int cmd_train(const TrainArgs& args) {
  const ulhm::TrainConfig cfg = train_config(args);

  std::vector<ulhm::DatasetBundle> data;
  std::optional<ulhm::SyntheticSpec> data_spec;
  if (!args.manifest.empty()) {
    data = bundles_from_manifest(args.manifest);
  } else {
    ulhm::SyntheticSpec spec;
    spec.n_classes = args.classes;
    spec.per_class = args.per_class;
    spec.obs_dim = args.obs_dim;
    spec.domains = args.domains;
    spec.transform = ulhm::transform_from_string(args.transform);
    spec.noise = args.noise;
    spec.separation = args.separation;
    spec.sibling_dist = args.sibling_dist;
    spec.seed = args.seed;
    data_spec = spec;
    data = ulhm::gen_synthetic(spec);
  }

  const ulhm::TrainResult result = ulhm::train(data, cfg);
  const fs::path blob = args.checkpoint + ".bin";
  const fs::path sidecar = args.checkpoint + ".json";
  ulhm::save_checkpoint(result.models, data_spec, blob, sidecar);
  if (!args.history.empty()) ulhm::save_history_csv(result.history, args.history);

  ordered_json summary;
  summary["schema_version"] = 1;
  summary["task"] = "train";
  summary["n_domains"] = data.size();
  {
    ordered_json sizes = ordered_json::array();
    for (const auto& b : data) sizes.push_back(b.size());
    summary["n_samples"] = sizes;
  }
  ordered_json stages = ordered_json::array();
  for (int stage = 1; stage <= 3; ++stage) {
    ordered_json s;
    s["stage"] = stage;
    int epochs = 0;
    const ulhm::LossRecord* last = nullptr;
    for (const auto& rec : result.history)
      if (rec.stage == stage) {
        epochs = std::max(epochs, rec.epoch + 1);
        last = &rec;
      }
    s["epochs"] = epochs;
    if (last) {
      ordered_json fin;
      fin["recon_x"] = last->recon_x;
      fin["recon_s"] = last->recon_s;
      fin["consist"] = last->consist;
      fin["local"] = last->local;
      fin["contrastive"] = last->contrastive;
      fin["centroid"] = last->centroid;
      fin["cross_entropy"] = last->cross_entropy;
      fin["total"] = last->total;
      s["final_losses"] = fin;
    }
    stages.push_back(s);
  }
  summary["stages"] = stages;
  summary["checkpoint"] = {{"blob", blob.string()}, {"sidecar", sidecar.string()}};
  summary["config"] = ulhm::train_config_json(cfg);
  if (data_spec) summary["data_spec"] = ulhm::synthetic_spec_json(*data_spec);
  write_report(summary, args.out);
  return 0;
}

struct EvalArgs {
  std::string task;
  std::string checkpoint = "checkpoint";
  std::string out;
  int domain = 0;
  int test_per_class = -1;  // -1 = same as training
  std::vector<double> rhos{0.25, 0.5, 0.75, 1.0};
  double rho_centroid = 1.0;
  double rho_test = 1.0;
  std::uint64_t seed = 42;
  std::string export_prefix = "export";
  std::string split = "train";
};

ordered_json per_class_json(const ulhm::ClassificationReport& report) {
  ordered_json obj = ordered_json::object();
  for (std::size_t c = 0; c < report.per_class_total.size(); ++c) {
    if (report.per_class_total[c] == 0) continue;
    obj[std::to_string(c)] = {
        {"correct", report.per_class_correct[c]},
        {"total", report.per_class_total[c]},
        {"accuracy", static_cast<double>(report.per_class_correct[c]) /
                         static_cast<double>(report.per_class_total[c])}};
  }
  return obj;
}

int cmd_eval(const EvalArgs& args) {
  const ulhm::Checkpoint ckpt =
      ulhm::load_checkpoint(args.checkpoint + ".bin", args.checkpoint + ".json");
  const ulhm::TrainedModels& models = ckpt.models;
  if (!ckpt.data_spec)
    throw ulhm::ConfigError("checkpoint has no data spec; eval needs regenerable data");
  if (args.domain < 0 || args.domain >= static_cast<int>(models.domains.size()))
    throw ulhm::ConfigError("domain index out of range");

  const std::vector<ulhm::DatasetBundle> train_data = ulhm::gen_synthetic(*ckpt.data_spec);
  ulhm::SyntheticSpec test_spec = *ckpt.data_spec;
  if (args.test_per_class > 0) test_spec.per_class = args.test_per_class;
  const std::vector<ulhm::DatasetBundle> test_data = ulhm::gen_synthetic(test_spec, "test");
  const auto dom = static_cast<std::size_t>(args.domain);

  ordered_json report;
  report["schema_version"] = 1;
  report["task"] = args.task;

  if (args.task == "recover") {
    const auto& x_test = test_data[dom].observations;
    const ulhm::RecoveryCurve curve = ulhm::eval_recovery(
        models.domains[dom].ulhm, x_test, args.rhos, ulhm::derive_seed(args.seed, "eval-mask"));
    report["domain"] = test_data[dom].domain_tag;
    ordered_json grid = ordered_json::array();
    for (std::size_t i = 0; i < curve.rhos.size(); ++i)
      grid.push_back({{"rho", curve.rhos[i]}, {"mse", curve.mse[i]}});
    report["mse_by_rho"] = grid;
  } else if (args.task == "transfer") {
    if (models.domains.size() < 2) throw ulhm::ConfigError("transfer needs two domains");
    const std::set<int> unseen(models.unseen_classes.begin(), models.unseen_classes.end());
    ordered_json directions = ordered_json::object();
    for (const auto [src, tgt] : {std::pair<int, int>{0, 1}, std::pair<int, int>{1, 0}}) {
      const auto& bundle = test_data[static_cast<std::size_t>(tgt)];
      // Classifiers only know seen classes; score on seen-label rows.
      std::vector<ulhm::Index> rows;
      for (ulhm::Index i = 0; i < bundle.size(); ++i)
        if (!unseen.count(bundle.labels[static_cast<std::size_t>(i)])) rows.push_back(i);
      ulhm::Matrix x(static_cast<ulhm::Index>(rows.size()), bundle.dim());
      ulhm::Labels y;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<ulhm::Index>(i)) = bundle.observations.row(rows[i]);
        y.push_back(bundle.labels[static_cast<std::size_t>(rows[i])]);
      }
      // src's classifier scored on tgt-domain encodings.
      const ulhm::ClassificationReport r = ulhm::eval_transfer(models, tgt, src, x, y);
      const std::string key = test_data[static_cast<std::size_t>(src)].domain_tag + "->" +
                              test_data[static_cast<std::size_t>(tgt)].domain_tag;
      directions[key] = {{"accuracy", r.accuracy}, {"per_class", per_class_json(r)}};
    }
    report["directions"] = directions;
  } else if (args.task == "zeroshot") {
    ulhm::ZeroShotConfig zs;
    zs.rho_centroid = args.rho_centroid;
    zs.rho_test = args.rho_test;
    zs.seed = ulhm::derive_seed(args.seed, "eval-mask");
    const ulhm::ZeroShotResult r = ulhm::eval_zeroshot(
        models.domains[dom].ulhm, train_data[dom].observations, train_data[dom].labels,
        test_data[dom].observations, test_data[dom].labels, models.unseen_classes,
        models.n_classes, zs);
    report["domain"] = test_data[dom].domain_tag;
    report["seen"] = models.seen_classes;
    report["unseen"] = models.unseen_classes;
    report["zsl"] = {{"accuracy", r.zsl.accuracy}, {"per_class", per_class_json(r.zsl)}};
    report["gzsl"] = {{"accuracy", r.gzsl.accuracy}, {"per_class", per_class_json(r.gzsl)}};
  } else if (args.task == "export") {
    // Universal latents + inputs per domain, plus a manifest, so `verify`
    // can run on the trained embedding.
    ordered_json manifest;
    ordered_json domains = ordered_json::array();
    const auto& export_data = args.split == "test" ? test_data : train_data;
    for (std::size_t k = 0; k < models.domains.size(); ++k) {
      const auto& bundle = export_data[k];
      const ulhm::Matrix ones = ulhm::Matrix::Ones(bundle.size(), bundle.dim());
      ulhm::EmbeddingSet latent;
      latent.points = ulhm::universal_latents(models.domains[k], bundle.observations, ones);
      latent.labels = bundle.labels;
      latent.domain_tag = bundle.domain_tag;
      ulhm::EmbeddingSet input;
      input.points = bundle.observations;
      input.domain_tag = bundle.domain_tag;

      const std::string base = args.export_prefix + "_" + bundle.domain_tag;
      ulhm::save_embeddings(latent, base + ".bin");
      ulhm::save_embeddings(input, base + "_input.bin");
      ordered_json entry;
      entry["tag"] = bundle.domain_tag;
      entry["embeddings_path"] = fs::path(base + ".bin").filename().string();
      entry["input_path"] = fs::path(base + "_input.bin").filename().string();
      if (k + 1 < models.domains.size())
        entry["pairs_with"] = export_data[k + 1].domain_tag;
      domains.push_back(entry);
    }
    manifest["domains"] = domains;
    manifest["flags"] = {{"has_paired_modalities", true}, {"requires_clustering", true}};
    const std::string manifest_path = args.export_prefix + "_manifest.json";
    {
      std::ofstream out(manifest_path, std::ios::binary);
      if (!out) throw ulhm::IoError("cannot write " + manifest_path);
      out << manifest.dump(2) << "\n";
    }
    report["manifest"] = manifest_path;
  } else {
    throw ulhm::ConfigError("unknown eval task '" + args.task + "'");
  }

  report["checkpoint"] = args.checkpoint;
  report["seed"] = args.seed;
  write_report(report, args.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal latent manifold toolkit: verification metrics and toy training"};
  app.require_subcommand(1);

  MetricArgs metric_args;
  auto* metrics_cmd = app.add_subcommand("metrics", "compute the metric bundle for a manifest");
  add_metric_flags(metrics_cmd, metric_args, true);

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "run the hierarchical manifold verifier");
  add_metric_flags(verify_cmd, verify_args.metric, false);
  verify_cmd->add_option("--bundle-json", verify_args.bundle_json,
                         "replay a precomputed metric bundle instead of a manifest");
  verify_cmd->add_option("--tau-w", verify_args.thresholds.tau_w, "W2 ceiling")
      ->capture_default_str();
  verify_cmd->add_option("--tau-t", verify_args.thresholds.tau_t, "trust floor")
      ->capture_default_str();
  verify_cmd->add_option("--tau-c", verify_args.thresholds.tau_c, "continuity floor")
      ->capture_default_str();
  verify_cmd->add_option("--tau-a", verify_args.thresholds.tau_a, "alignment ceiling")
      ->capture_default_str();
  verify_cmd->add_option("--beta0-max", verify_args.thresholds.beta0_max, "component budget")
      ->capture_default_str();
  verify_cmd->add_flag("--paired", verify_args.paired, "samples are paired across modalities");
  verify_cmd->add_flag("--clustering", verify_args.clustering,
                       "downstream task needs cluster structure");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "run the three-stage toy trainer");
  train_cmd->add_option("--manifest", train_args.manifest,
                        "labeled observation manifest (default: synthetic)");
  train_cmd->add_option("--classes", train_args.classes)->capture_default_str();
  train_cmd->add_option("--per-class", train_args.per_class)->capture_default_str();
  train_cmd->add_option("--obs-dim", train_args.obs_dim)->capture_default_str();
  train_cmd->add_option("--domains", train_args.domains)->capture_default_str();
  train_cmd->add_option("--transform", train_args.transform,
                        "rotation|affine|monotone-radial")
      ->capture_default_str();
  train_cmd->add_option("--noise", train_args.noise)->capture_default_str();
  train_cmd->add_option("--separation", train_args.separation)->capture_default_str();
  train_cmd->add_option("--sibling-dist", train_args.sibling_dist)->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed)->capture_default_str();
  train_cmd->add_option("--latent-dim", train_args.latent_dim)->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs, "epochs for every stage");
  train_cmd->add_option("--epochs1", train_args.epochs1, "stage 1 override");
  train_cmd->add_option("--epochs2", train_args.epochs2, "stage 2 override");
  train_cmd->add_option("--epochs3", train_args.epochs3, "stage 3 override");
  train_cmd->add_option("--lr", train_args.lr, "learning rate for every stage");
  train_cmd->add_option("--batch-size", train_args.batch_size, "stage-1 minibatch (0 = full)");
  train_cmd->add_option("--optimizer", train_args.optimizer, "adam|sgd")->capture_default_str();
  train_cmd->add_option("--kappa", train_args.kappa)->capture_default_str();
  train_cmd->add_option("--lambda-c", train_args.lambda_c)->capture_default_str();
  train_cmd->add_option("--lambda-l", train_args.lambda_l)->capture_default_str();
  train_cmd->add_option("--lambda-cos", train_args.lambda_cos)->capture_default_str();
  train_cmd->add_option("--lambda-eucl", train_args.lambda_eucl)->capture_default_str();
  train_cmd->add_option("--lambda-cont", train_args.lambda_cont)->capture_default_str();
  train_cmd->add_option("--lambda-cent", train_args.lambda_cent)->capture_default_str();
  train_cmd->add_option("--temperature", train_args.temperature)->capture_default_str();
  train_cmd->add_option("--rhos", train_args.rhos, "stage-1 mask density cycle");
  train_cmd->add_option("--unseen", train_args.unseen, "class ids withheld end to end");
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "checkpoint path prefix")
      ->capture_default_str();
  train_cmd->add_option("--history", train_args.history, "loss history CSV path");
  train_cmd->add_option("--out", train_args.out, "summary report path (default: stdout)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on an application");
  eval_cmd->add_option("--task", eval_args.task, "recover|transfer|zeroshot|export")
      ->required()
      ->check(CLI::IsMember({"recover", "transfer", "zeroshot", "export"}));
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path prefix")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "report path (default: stdout)");
  eval_cmd->add_option("--domain", eval_args.domain, "domain index for recover/zeroshot")
      ->capture_default_str();
  eval_cmd->add_option("--test-per-class", eval_args.test_per_class,
                       "test samples per class (-1 = training size)");
  eval_cmd->add_option("--rhos", eval_args.rhos, "recovery mask densities")
      ->capture_default_str();
  eval_cmd->add_option("--rho-centroid", eval_args.rho_centroid,
                       "zeroshot centroid mask density")
      ->capture_default_str();
  eval_cmd->add_option("--rho-test", eval_args.rho_test, "zeroshot test mask density")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed)->capture_default_str();
  eval_cmd->add_option("--split", eval_args.split, "export split: train|test")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--export-prefix", eval_args.export_prefix,
                       "path prefix for exported embeddings")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (metrics_cmd->parsed()) return cmd_metrics(metric_args);
    if (verify_cmd->parsed()) return cmd_verify(verify_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    return cmd_eval(eval_args);
  } catch (const ulhm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case ulhm::Error::Category::input: return 2;
      case ulhm::Error::Category::compute: return 3;
      case ulhm::Error::Category::divergence: return 4;
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
