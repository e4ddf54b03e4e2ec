#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsgatr/signal.hpp"

namespace tsgatr {

enum class SignatureLabel { kGenuine, kSkilledForgery };
enum class Split { kTrain, kTest };

std::string to_string(SignatureLabel label);
std::string to_string(Split split);

/// One manifest row.
struct ManifestEntry {
  std::string sig_id;
  std::string user_id;
  int session = 1;
  /// Relative to the manifest's directory.
  std::string path;
  SignatureLabel label = SignatureLabel::kGenuine;
  std::optional<std::string> forger_id;
};

struct ManifestUser {
  std::string user_id;
  Split split = Split::kTrain;
  std::vector<ManifestEntry> signatures;
};

/// Corpus description: who signed what, where the CSV lives, and the
/// train/test split. External corpora plug in by emitting this layout.
struct DatasetManifest {
  int version = 1;
  std::uint64_t seed = 0;
  std::vector<ManifestUser> users;
};

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text, const std::string& source);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct SignatureRecord {
  std::string sig_id;
  std::string user_id;
  int session = 1;
  SignatureLabel label = SignatureLabel::kGenuine;
  std::optional<std::string> forger_id;
  RawSignature signature;
};

struct UserRecord {
  std::string user_id;
  Split split = Split::kTrain;
  /// Indices into Dataset::signatures, in manifest (capture) order.
  std::vector<std::size_t> genuine;
  std::vector<std::size_t> skilled;
};

/// In-memory corpus with every signature parsed and validated.
struct Dataset {
  std::vector<SignatureRecord> signatures;
  std::vector<UserRecord> users;
  /// FNV-1a of the manifest bytes.
  std::uint64_t manifest_hash = 0;

  std::vector<std::size_t> users_in(Split split) const;
};

/// `path` may be the manifest file or the directory holding manifest.json.
Dataset read_manifest(const std::filesystem::path& path);

std::filesystem::path resolve_manifest_path(const std::filesystem::path& path);

}  // namespace tsgatr
