#pragma once

#include "ulhm/embedding_set.hpp"
#include "ulhm/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ulhm {

enum class FileFormat { csv, raw_f64 };

/// Picks csv for a ".csv" extension, raw_f64 otherwise.
FileFormat format_from_path(const std::filesystem::path& path);

/// CSV: header `dim_0,...,dim_{d-1}[,label]`, one row per sample.
/// Raw: 16-byte little-endian header (magic "ULHM", u32 N, u32 d, u32 flags
/// with bit 0 = labels present), then N*d float64 row-major, then N u32
/// labels when flagged. Raw round-trips are bitwise exact.
EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     FileFormat format);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

/// One integer label per line; an optional leading `label` header is skipped.
Labels load_labels(const std::filesystem::path& path);

/// One verification input domain: latent embeddings plus optional original
/// (pre-embedding) points for rank metrics and bi-Lipschitz estimation.
struct ManifestDomain {
  std::string tag;
  EmbeddingSet embeddings;
  std::optional<EmbeddingSet> input;
  std::optional<std::string> pairs_with;
};

struct Manifest {
  std::vector<ManifestDomain> domains;  // manifest order preserved
  bool has_paired_modalities = false;
  bool requires_clustering = false;
};

/// Loads a JSON manifest of shape
///   {"domains": [{"tag", "embeddings_path", "labels_path"?, "input_path"?,
///                 "pairs_with"?}, ...],
///    "flags": {"has_paired_modalities": bool, "requires_clustering": bool}}
/// and every file it references. Paths are resolved relative to the manifest.
/// All domains must share the latent dimension; `pairs_with` must name a
/// declared tag and implies row-identity pairing (equal N on both sides).
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace ulhm
