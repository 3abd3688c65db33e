#pragma once

#include "ulhm/embedding_set.hpp"
#include "ulhm/metrics.hpp"
#include "ulhm/types.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ulhm {

struct Thresholds {
  Scalar tau_w = 0.30;   // pairwise sliced W2 ceiling
  Scalar tau_t = 0.80;   // trust floor
  Scalar tau_c = 0.70;   // continuity floor
  Scalar tau_a = 0.30;   // alignment error ceiling
  Index beta0_max = 1;   // how many components still count as "connected"
};

struct VerifierFlags {
  bool has_paired_modalities = false;
  bool requires_clustering = false;
};

enum class FailureMode {
  StructuralFragmentation,
  GeometricMisalignment,
  LocalManifoldCollapse,
  StructuralIncoherence,
  InconsistentCrossModalMapping,
};

const char* to_string(FailureMode mode);

struct Trigger {
  std::string metric;  // e.g. "trust[mnist]"
  Scalar value = 0;
  Scalar threshold = 0;
};

struct Verdict {
  bool pass = true;
  std::optional<FailureMode> failure_mode;
  std::optional<Trigger> trigger;
};

/// Hierarchical decision, first failing step wins:
///   1a  beta0 > beta0_max AND any W2 > tau_w   -> StructuralFragmentation
///   1b  any W2 > tau_w                         -> GeometricMisalignment
///   2a  any trust < tau_t                      -> LocalManifoldCollapse
///   2b  [requires_clustering] any cont < tau_c -> StructuralIncoherence
///   3   [has_paired_modalities] align > tau_a  -> InconsistentCrossModalMapping
/// A fragmented pool with well-matched marginals (large beta0, small W2)
/// still passes step 1; that conjunction is deliberate.
Verdict verify(const MetricBundle& bundle, const Thresholds& th, const VerifierFlags& flags);

/// One verification domain: latent points plus, optionally, the original
/// input-space points they were embedded from. Trust/continuity and the
/// bi-Lipschitz estimate compare the two spaces and are skipped without the
/// input side.
struct DomainData {
  EmbeddingSet latent;
  std::optional<EmbeddingSet> input;
};

struct VerifierConfig {
  int kappa = 5;
  DistanceKind rank_metric = DistanceKind::cosine;  // trust/continuity/purity
  BettiConfig betti;              // beta0 on the pooled latents, euclidean
  SlicedW2Config w2;              // pairwise across domains, euclidean
  long bilipschitz_pairs = 0;     // 0 = all pairs
  bool estimate_distortion = true;
};

/// Computes everything computable from the given domains (audit mode: no
/// early exit). Rank metrics need input sides on all domains, purity needs
/// labels on all domains, alignment needs pairs.
MetricBundle compute_bundle(const std::vector<DomainData>& domains,
                            const std::optional<PairedEmbeddings>& pairs,
                            const VerifierConfig& cfg);

/// compute_bundle followed by verify.
std::pair<MetricBundle, Verdict> compute_and_verify(const std::vector<DomainData>& domains,
                                                    const std::optional<PairedEmbeddings>& pairs,
                                                    const VerifierConfig& cfg,
                                                    const Thresholds& th,
                                                    const VerifierFlags& flags);

/// Report with stable key order, schema_version 1.
nlohmann::ordered_json make_report(const MetricBundle& bundle, const Verdict& verdict,
                                   const Thresholds& th, const VerifierFlags& flags,
                                   const VerifierConfig& cfg);

/// Bundle-only report (no verdict block), same "metrics" layout.
nlohmann::ordered_json make_metrics_report(const MetricBundle& bundle,
                                           const VerifierConfig& cfg);

/// Rebuilds a bundle from the "metrics" object of a report (or a hand-written
/// fragment with the same keys) so published table rows can be replayed
/// through verify without recomputation.
MetricBundle bundle_from_json(const nlohmann::json& metrics);

}  // namespace ulhm
