#pragma once

#include <filesystem>

#include "apd/config.hpp"
#include "apd/pipeline.hpp"

namespace apd {

inline constexpr int kArchiveFormatVersion = 1;

/// A trained model on disk: manifest.json (format version, config snapshot,
/// tensor index) plus weights.bin (little-endian f32, row-major, tensors
/// concatenated in index order).
struct ModelArchive {
  AppConfig config;
  ModelBundle bundle;
};

class ArchiveError : public Error {
 public:
  using Error::Error;
};

/// Creates `dir` if needed and overwrites both files. Weights are narrowed
/// to f32.
void save_archive(const std::filesystem::path& dir, const AppConfig& config, const ModelBundle& bundle);

/// Validates the manifest against the config it carries, then reads weights.
ModelArchive load_archive(const std::filesystem::path& dir);

}  // namespace apd
