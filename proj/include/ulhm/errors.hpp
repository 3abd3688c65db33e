#pragma once

#include <stdexcept>
#include <string>

namespace ulhm {

/// Base for everything thrown by the library. The CLI maps the category to
/// its exit code; nothing else should catch by concrete type.
class Error : public std::runtime_error {
 public:
  enum class Category { input, compute, divergence };

  Error(Category c, const std::string& what) : std::runtime_error(what), category_(c) {}
  Category category() const { return category_; }

 private:
  Category category_;
};

// --- input-side failures (CLI exit 2) ---

struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(Category::input, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w, long row = -1) : Error(Category::input, w), row(row) {}
  long row;  // 0-based data row that triggered the failure; -1 if not row-local
};

struct EmptyError : Error {
  explicit EmptyError(const std::string& w) : Error(Category::input, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(Category::input, w) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(Category::input, w) {}
};

struct ManifestError : Error {
  explicit ManifestError(const std::string& w) : Error(Category::input, w) {}
};

struct PairError : Error {
  explicit PairError(const std::string& w) : Error(Category::input, w) {}
};

// --- compute-side failures (CLI exit 3) ---

struct DegenerateError : Error {
  explicit DegenerateError(const std::string& w) : Error(Category::compute, w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(Category::compute, w) {}
};

struct IncompleteBundleError : Error {
  explicit IncompleteBundleError(const std::string& w) : Error(Category::compute, w) {}
};

// --- training (CLI exit 4) ---

struct TrainingDivergedError : Error {
  explicit TrainingDivergedError(const std::string& w) : Error(Category::divergence, w) {}
};

}  // namespace ulhm
