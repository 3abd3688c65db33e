#include "ulhm/verifier.hpp"

#include "ulhm/errors.hpp"
#include "ulhm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ulhm {

const char* to_string(FailureMode mode) {
  switch (mode) {
    case FailureMode::StructuralFragmentation: return "StructuralFragmentation";
    case FailureMode::GeometricMisalignment: return "GeometricMisalignment";
    case FailureMode::LocalManifoldCollapse: return "LocalManifoldCollapse";
    case FailureMode::StructuralIncoherence: return "StructuralIncoherence";
    case FailureMode::InconsistentCrossModalMapping: return "InconsistentCrossModalMapping";
  }
  return "?";
}

namespace {

std::string domain_name(const MetricBundle& bundle, std::size_t k) {
  if (k < bundle.domain_tags.size()) return bundle.domain_tags[k];
  return std::to_string(k);
}

Verdict fail(FailureMode mode, std::string metric, Scalar value, Scalar threshold) {
  Verdict v;
  v.pass = false;
  v.failure_mode = mode;
  v.trigger = Trigger{std::move(metric), value, threshold};
  return v;
}

}  // namespace

Verdict verify(const MetricBundle& bundle, const Thresholds& th, const VerifierFlags& flags) {
  if (!bundle.betti0) throw IncompleteBundleError("bundle lacks betti0");
  if (!bundle.w2_pairwise) throw IncompleteBundleError("bundle lacks pairwise w2");
  if (bundle.trust_per_domain.empty()) throw IncompleteBundleError("bundle lacks trust");
  if (flags.requires_clustering && bundle.continuity_per_domain.empty())
    throw IncompleteBundleError("bundle lacks continuity");
  if (flags.has_paired_modalities && !bundle.alignment)
    throw IncompleteBundleError("bundle lacks alignment error");

  const Matrix& w2 = *bundle.w2_pairwise;
  Scalar w2_max = 0;
  std::string w2_pair = "w2";
  for (Index i = 0; i < w2.rows(); ++i)
    for (Index j = i + 1; j < w2.cols(); ++j)
      if (w2(i, j) > w2_max) {
        w2_max = w2(i, j);
        w2_pair = "w2[" + domain_name(bundle, static_cast<std::size_t>(i)) + ":" +
                  domain_name(bundle, static_cast<std::size_t>(j)) + "]";
      }

  if (*bundle.betti0 > th.beta0_max && w2_max > th.tau_w)
    return fail(FailureMode::StructuralFragmentation, "betti0",
                static_cast<Scalar>(*bundle.betti0), static_cast<Scalar>(th.beta0_max));
  if (w2_max > th.tau_w)
    return fail(FailureMode::GeometricMisalignment, w2_pair, w2_max, th.tau_w);

  for (std::size_t k = 0; k < bundle.trust_per_domain.size(); ++k)
    if (bundle.trust_per_domain[k] < th.tau_t)
      return fail(FailureMode::LocalManifoldCollapse, "trust[" + domain_name(bundle, k) + "]",
                  bundle.trust_per_domain[k], th.tau_t);

  if (flags.requires_clustering)
    for (std::size_t k = 0; k < bundle.continuity_per_domain.size(); ++k)
      if (bundle.continuity_per_domain[k] < th.tau_c)
        return fail(FailureMode::StructuralIncoherence,
                    "continuity[" + domain_name(bundle, k) + "]",
                    bundle.continuity_per_domain[k], th.tau_c);

  if (flags.has_paired_modalities && *bundle.alignment > th.tau_a)
    return fail(FailureMode::InconsistentCrossModalMapping, "alignment", *bundle.alignment,
                th.tau_a);

  return Verdict{};
}

MetricBundle compute_bundle(const std::vector<DomainData>& domains,
                            const std::optional<PairedEmbeddings>& pairs,
                            const VerifierConfig& cfg) {
  if (domains.empty()) throw EmptyError("no domains to verify");
  const Index d = domains.front().latent.dim();
  Index total = 0;
  for (const auto& dom : domains) {
    validate(dom.latent);
    if (dom.latent.dim() != d)
      throw DimensionError("domain '" + dom.latent.domain_tag + "' has mismatched dimension");
    if (dom.input) {
      validate(*dom.input);
      if (dom.input->size() != dom.latent.size())
        throw DimensionError("input and latent row counts differ in '" + dom.latent.domain_tag +
                             "'");
    }
    total += dom.latent.size();
  }

  MetricBundle bundle;
  for (const auto& dom : domains) bundle.domain_tags.push_back(dom.latent.domain_tag);

  // Step-1 statistics live on the pooled latents.
  Matrix pool(total, d);
  Index at = 0;
  for (const auto& dom : domains) {
    pool.middleRows(at, dom.latent.size()) = dom.latent.points;
    at += dom.latent.size();
  }
  const DistanceMatrix pool_dist =
      total >= 2 ? pairwise_distances(pool, DistanceKind::euclidean) : DistanceMatrix{};
  if (total >= 2) {
    BettiConfig betti_cfg = cfg.betti;
    if (!betti_cfg.epsilon && betti_cfg.auto_rule == BettiAutoRule::median_knn &&
        !betti_cfg.median_knn && cfg.kappa < total)
      betti_cfg.median_knn = median_knn_distance(pool_dist, cfg.kappa);
    const MstEdges mst = mst_edges(pool_dist);
    const Betti0Result b0 = betti0(mst, betti_cfg);
    bundle.betti0 = b0.count;
    bundle.epsilon_used = b0.epsilon_used;
    for (const auto& e : mst.edges) bundle.persistence_weights.push_back(e.weight);
  } else {
    bundle.betti0 = 1;
    bundle.epsilon_used = 0;
  }

  const auto k_domains = static_cast<Index>(domains.size());
  Matrix w2 = Matrix::Zero(k_domains, k_domains);
  for (Index i = 0; i < k_domains; ++i)
    for (Index j = i + 1; j < k_domains; ++j) {
      w2(i, j) = sliced_w2(domains[static_cast<std::size_t>(i)].latent,
                           domains[static_cast<std::size_t>(j)].latent, cfg.w2);
      w2(j, i) = w2(i, j);
    }
  bundle.w2_pairwise = w2;

  const bool all_inputs = std::all_of(domains.begin(), domains.end(),
                                      [](const DomainData& d_) { return d_.input.has_value(); });
  if (all_inputs) {
    for (const auto& dom : domains) {
      const DistanceMatrix in_dist = pairwise_distances(dom.input->points, cfg.rank_metric);
      const DistanceMatrix lat_dist = pairwise_distances(dom.latent.points, cfg.rank_metric);
      const RankMatrix in_rank = rank_matrix(in_dist);
      const RankMatrix lat_rank = rank_matrix(lat_dist);
      const NeighborLists in_nbr = knn(in_dist, cfg.kappa);
      const NeighborLists lat_nbr = knn(lat_dist, cfg.kappa);
      bundle.trust_per_domain.push_back(trust_rank(lat_rank, in_nbr));
      bundle.continuity_per_domain.push_back(continuity(in_rank, lat_nbr));
    }
    if (cfg.estimate_distortion) {
      Scalar c1 = std::numeric_limits<Scalar>::infinity();
      Scalar c2 = -std::numeric_limits<Scalar>::infinity();
      std::uint64_t counter = 0;
      for (const auto& dom : domains) {
        const auto est = estimate_bilipschitz(
            pairwise_distances(dom.input->points, DistanceKind::euclidean),
            pairwise_distances(dom.latent.points, DistanceKind::euclidean),
            cfg.bilipschitz_pairs, derive_seed(cfg.w2.seed, "bilipschitz", counter++));
        c1 = std::min(c1, est.c1);
        c2 = std::max(c2, est.c2);
        bundle.bilipschitz_unbounded |= est.unbounded;
      }
      bundle.bilipschitz = {c1, c2};
    }
  }

  const bool all_labels = std::all_of(domains.begin(), domains.end(), [](const DomainData& d_) {
    return d_.latent.labels.has_value();
  });
  if (all_labels) {
    for (const auto& dom : domains) {
      const DistanceMatrix lat_dist = pairwise_distances(dom.latent.points, cfg.rank_metric);
      bundle.purity_per_domain.push_back(purity(knn(lat_dist, cfg.kappa), *dom.latent.labels).mean);
    }
  }

  if (pairs) bundle.alignment = alignment_error(*pairs);

  return bundle;
}

std::pair<MetricBundle, Verdict> compute_and_verify(const std::vector<DomainData>& domains,
                                                    const std::optional<PairedEmbeddings>& pairs,
                                                    const VerifierConfig& cfg,
                                                    const Thresholds& th,
                                                    const VerifierFlags& flags) {
  MetricBundle bundle = compute_bundle(domains, pairs, cfg);
  Verdict verdict = verify(bundle, th, flags);
  return {std::move(bundle), std::move(verdict)};
}

namespace {

nlohmann::ordered_json tagged_values(const MetricBundle& bundle, const std::vector<Scalar>& v) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < v.size(); ++k) obj[domain_name(bundle, k)] = v[k];
  return obj;
}

nlohmann::ordered_json metrics_json(const MetricBundle& bundle) {
  nlohmann::ordered_json metrics;
  if (bundle.betti0) metrics["betti0"] = *bundle.betti0;
  if (bundle.epsilon_used) metrics["epsilon_used"] = *bundle.epsilon_used;
  if (bundle.w2_pairwise) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Index i = 0; i < bundle.w2_pairwise->rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Index j = 0; j < bundle.w2_pairwise->cols(); ++j)
        row.push_back((*bundle.w2_pairwise)(i, j));
      rows.push_back(row);
    }
    metrics["w2"] = rows;
  }
  if (!bundle.trust_per_domain.empty())
    metrics["trust"] = tagged_values(bundle, bundle.trust_per_domain);
  if (!bundle.continuity_per_domain.empty())
    metrics["continuity"] = tagged_values(bundle, bundle.continuity_per_domain);
  if (!bundle.purity_per_domain.empty())
    metrics["purity"] = tagged_values(bundle, bundle.purity_per_domain);
  if (bundle.alignment) metrics["alignment"] = *bundle.alignment;
  if (bundle.bilipschitz)
    metrics["bilipschitz"] = {bundle.bilipschitz->first, bundle.bilipschitz->second};
  return metrics;
}

nlohmann::ordered_json config_json(const VerifierConfig& cfg) {
  nlohmann::ordered_json config;
  config["kappa"] = cfg.kappa;
  config["rank_metric"] = to_string(cfg.rank_metric);
  config["betti_rule"] =
      cfg.betti.auto_rule == BettiAutoRule::largest_gap ? "largest-gap" : "median-knn";
  if (cfg.betti.epsilon) config["epsilon"] = *cfg.betti.epsilon;
  config["n_projections"] = cfg.w2.n_projections;
  config["seed"] = cfg.w2.seed;
  config["bilipschitz_pairs"] = cfg.bilipschitz_pairs;
  return config;
}

}  // namespace

nlohmann::ordered_json make_report(const MetricBundle& bundle, const Verdict& verdict,
                                   const Thresholds& th, const VerifierFlags& flags,
                                   const VerifierConfig& cfg) {
  nlohmann::ordered_json report;
  report["schema_version"] = 1;
  report["verdict"] = verdict.pass ? "PASS" : "FAIL";
  if (verdict.failure_mode) report["failure_mode"] = to_string(*verdict.failure_mode);
  if (verdict.trigger) {
    report["trigger"] = {{"metric", verdict.trigger->metric},
                         {"value", verdict.trigger->value},
                         {"threshold", verdict.trigger->threshold}};
  }

  report["metrics"] = metrics_json(bundle);
  report["thresholds"] = {{"tau_w", th.tau_w},
                          {"tau_t", th.tau_t},
                          {"tau_c", th.tau_c},
                          {"tau_a", th.tau_a},
                          {"beta0_max", th.beta0_max}};
  report["flags"] = {{"has_paired_modalities", flags.has_paired_modalities},
                     {"requires_clustering", flags.requires_clustering}};
  report["config"] = config_json(cfg);
  return report;
}

nlohmann::ordered_json make_metrics_report(const MetricBundle& bundle,
                                           const VerifierConfig& cfg) {
  nlohmann::ordered_json report;
  report["schema_version"] = 1;
  report["metrics"] = metrics_json(bundle);
  report["config"] = config_json(cfg);
  return report;
}

MetricBundle bundle_from_json(const nlohmann::json& metrics) {
  MetricBundle bundle;
  auto per_domain = [&](const char* key, std::vector<Scalar>& out, bool take_tags) {
    if (!metrics.contains(key)) return;
    const auto& v = metrics.at(key);
    if (v.is_number()) {
      if (take_tags && bundle.domain_tags.empty()) bundle.domain_tags.push_back("domain");
      out.push_back(v.get<Scalar>());
    } else if (v.is_object()) {
      for (const auto& [tag, value] : v.items()) {
        if (take_tags) bundle.domain_tags.push_back(tag);
        out.push_back(value.get<Scalar>());
      }
    } else {
      throw FormatError(std::string("metric '") + key + "' must be a number or a tag map");
    }
  };

  if (metrics.contains("betti0")) bundle.betti0 = metrics.at("betti0").get<Index>();
  if (metrics.contains("epsilon_used"))
    bundle.epsilon_used = metrics.at("epsilon_used").get<Scalar>();
  if (metrics.contains("w2")) {
    const auto& w = metrics.at("w2");
    if (w.is_number()) {
      // A single cross-domain value stands for a symmetric 2x2 matrix.
      Matrix m = Matrix::Zero(2, 2);
      m(0, 1) = m(1, 0) = w.get<Scalar>();
      bundle.w2_pairwise = m;
    } else if (w.is_array()) {
      const auto rows = w.size();
      Matrix m(static_cast<Index>(rows), static_cast<Index>(rows));
      for (std::size_t i = 0; i < rows; ++i) {
        if (!w[i].is_array() || w[i].size() != rows)
          throw FormatError("w2 matrix must be square");
        for (std::size_t j = 0; j < rows; ++j)
          m(static_cast<Index>(i), static_cast<Index>(j)) = w[i][j].get<Scalar>();
      }
      bundle.w2_pairwise = m;
    } else {
      throw FormatError("w2 must be a number or a square matrix");
    }
  }
  per_domain("trust", bundle.trust_per_domain, true);
  per_domain("continuity", bundle.continuity_per_domain, false);
  per_domain("purity", bundle.purity_per_domain, false);
  if (metrics.contains("alignment")) bundle.alignment = metrics.at("alignment").get<Scalar>();
  if (metrics.contains("bilipschitz")) {
    const auto& b = metrics.at("bilipschitz");
    if (!b.is_array() || b.size() != 2) throw FormatError("bilipschitz must be [c1, c2]");
    bundle.bilipschitz = {b[0].get<Scalar>(), b[1].get<Scalar>()};
  }
  return bundle;
}

}  // namespace ulhm
