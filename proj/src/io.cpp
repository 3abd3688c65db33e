#include "ulhm/io.hpp"

#include "ulhm/errors.hpp"

#include "leio.hpp"

#include "json.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ulhm {
namespace {

using detail::read_f64_le;
using detail::read_u32_le;
using detail::write_f64_le;
using detail::write_u32_le;

constexpr std::array<char, 4> kMagic = {'U', 'L', 'H', 'M'};
constexpr std::uint32_t kFlagLabels = 1u;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

EmbeddingSet load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw EmptyError("empty file " + path.string());

  auto header = split_csv_line(strip(line));
  bool has_label = !header.empty() && strip(header.back()) == "label";
  const std::size_t d = header.size() - (has_label ? 1 : 0);
  if (d == 0) throw FormatError("no coordinate columns in " + path.string());
  for (std::size_t j = 0; j < d; ++j)
    if (strip(header[j]) != "dim_" + std::to_string(j))
      throw FormatError("bad header column '" + header[j] + "' in " + path.string() +
                        " (expected dim_" + std::to_string(j) + ")");

  std::vector<double> values;
  Labels labels;
  long row = 0;
  while (std::getline(in, line)) {
    const std::string trimmed = strip(line);
    if (trimmed.empty()) continue;
    auto fields = split_csv_line(trimmed);
    if (fields.size() != header.size())
      throw FormatError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    for (std::size_t j = 0; j < d; ++j) {
      char* end = nullptr;
      const std::string f = strip(fields[j]);
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0')
        throw FormatError("unparsable value '" + f + "' at row " + std::to_string(row));
      if (!std::isfinite(v)) throw DataError("non-finite value", row);
      values.push_back(v);
    }
    if (has_label) {
      const std::string f = strip(fields[d]);
      char* end = nullptr;
      const long lv = std::strtol(f.c_str(), &end, 10);
      if (end == f.c_str() || *end != '\0' || lv < 0)
        throw DataError("bad label '" + f + "'", row);
      labels.push_back(static_cast<int>(lv));
    }
    ++row;
  }
  if (row == 0) throw EmptyError("no data rows in " + path.string());

  EmbeddingSet set;
  set.points.resize(row, static_cast<Index>(d));
  for (long i = 0; i < row; ++i)
    for (std::size_t j = 0; j < d; ++j) set.points(i, static_cast<Index>(j)) = values[i * d + j];
  if (has_label) set.labels = std::move(labels);
  return set;
}

EmbeddingSet load_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic) throw FormatError("bad magic in " + path.string());
  const std::uint32_t n = read_u32_le(in);
  const std::uint32_t d = read_u32_le(in);
  const std::uint32_t flags = read_u32_le(in);
  if (!in) throw FormatError("truncated header in " + path.string());
  if (n == 0) throw EmptyError("zero rows in " + path.string());
  if (d == 0) throw FormatError("zero dimension in " + path.string());

  EmbeddingSet set;
  set.points.resize(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) {
      const double v = read_f64_le(in);
      if (!in) throw FormatError("truncated payload in " + path.string());
      if (!std::isfinite(v)) throw DataError("non-finite value", static_cast<long>(i));
      set.points(i, j) = v;
    }
  if (flags & kFlagLabels) {
    Labels labels(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(read_u32_le(in));
      if (!in) throw FormatError("truncated labels in " + path.string());
    }
    set.labels = std::move(labels);
  }
  return set;
}

void save_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Index j = 0; j < set.dim(); ++j) out << (j ? "," : "") << "dim_" << j;
  if (set.labels) out << ",label";
  out << "\n";
  char buf[40];
  for (Index i = 0; i < set.size(); ++i) {
    for (Index j = 0; j < set.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", set.points(i, j));
      out << (j ? "," : "") << buf;
    }
    if (set.labels) out << "," << (*set.labels)[i];
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void save_raw(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic.data(), 4);
  write_u32_le(out, static_cast<std::uint32_t>(set.size()));
  write_u32_le(out, static_cast<std::uint32_t>(set.dim()));
  write_u32_le(out, set.labels ? kFlagLabels : 0u);
  for (Index i = 0; i < set.size(); ++i)
    for (Index j = 0; j < set.dim(); ++j) write_f64_le(out, set.points(i, j));
  if (set.labels)
    for (int label : *set.labels) write_u32_le(out, static_cast<std::uint32_t>(label));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

FileFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::csv : FileFormat::raw_f64;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, FileFormat format) {
  EmbeddingSet set = format == FileFormat::csv ? load_csv(path) : load_raw(path);
  validate(set);
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  return load_embeddings(path, format_from_path(path));
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                     FileFormat format) {
  validate(set);
  if (format == FileFormat::csv)
    save_csv(set, path);
  else
    save_raw(set, path);
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  save_embeddings(set, path, format_from_path(path));
}

Labels load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Labels labels;
  std::string line;
  long row = 0;
  while (std::getline(in, line)) {
    const std::string f = strip(line);
    if (f.empty()) continue;
    if (row == 0 && f == "label") continue;
    char* end = nullptr;
    const long v = std::strtol(f.c_str(), &end, 10);
    if (end == f.c_str() || *end != '\0' || v < 0)
      throw DataError("bad label '" + f + "' in " + path.string(), row);
    labels.push_back(static_cast<int>(v));
    ++row;
  }
  if (labels.empty()) throw EmptyError("no labels in " + path.string());
  return labels;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError("invalid JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("domains") || !doc["domains"].is_array())
    throw ManifestError("manifest must contain a 'domains' array");

  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  Manifest manifest;
  if (doc.contains("flags")) {
    const auto& flags = doc["flags"];
    manifest.has_paired_modalities = flags.value("has_paired_modalities", false);
    manifest.requires_clustering = flags.value("requires_clustering", false);
  }

  for (const auto& dom : doc["domains"]) {
    if (!dom.contains("tag") || !dom.contains("embeddings_path"))
      throw ManifestError("each domain needs 'tag' and 'embeddings_path'");
    ManifestDomain md;
    md.tag = dom["tag"].get<std::string>();
    md.embeddings = load_embeddings(resolve(dom["embeddings_path"].get<std::string>()));
    md.embeddings.domain_tag = md.tag;
    if (dom.contains("labels_path"))
      md.embeddings.labels = load_labels(resolve(dom["labels_path"].get<std::string>()));
    if (dom.contains("input_path")) {
      md.input = load_embeddings(resolve(dom["input_path"].get<std::string>()));
      md.input->domain_tag = md.tag;
      if (md.input->size() != md.embeddings.size())
        throw ManifestError("input row count differs from embeddings for '" + md.tag + "'");
    }
    if (dom.contains("pairs_with")) md.pairs_with = dom["pairs_with"].get<std::string>();
    validate(md.embeddings);
    manifest.domains.push_back(std::move(md));
  }
  if (manifest.domains.empty()) throw ManifestError("manifest declares no domains");

  const Index d = manifest.domains.front().embeddings.dim();
  for (const auto& md : manifest.domains)
    if (md.embeddings.dim() != d)
      throw DimensionError("domain '" + md.tag + "' has dimension " +
                           std::to_string(md.embeddings.dim()) + ", expected " + std::to_string(d));

  for (const auto& md : manifest.domains) {
    if (!md.pairs_with) continue;
    auto it = std::find_if(manifest.domains.begin(), manifest.domains.end(),
                           [&](const ManifestDomain& o) { return o.tag == *md.pairs_with; });
    if (it == manifest.domains.end())
      throw ManifestError("pairs_with names unknown tag '" + *md.pairs_with + "'");
    if (it->embeddings.size() != md.embeddings.size())
      throw ManifestError("row-paired domains '" + md.tag + "' and '" + *md.pairs_with +
                          "' differ in sample count");
  }
  return manifest;
}

}  // namespace ulhm
