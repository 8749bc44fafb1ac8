#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucnn/proxy.hpp"
#include "ucnn/sampling.hpp"
#include "ucnn/uc.hpp"

namespace ucnn::archive {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kArchiveFormatVersion = 1;

// Scenario archive: JSON lines. The first line is the header, every further
// line one scenario with its exact label (null when the solve failed).
// Records appear in id order; wall times live in a `.timings.jsonl` sidecar
// so that equal configurations give byte-identical archives.

/// Provenance embedded in every artifact.
struct Provenance {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string fingerprint;  // grid case fingerprint

  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& doc);
};

struct ArchiveHeader {
  Provenance provenance;
  std::uint64_t first_id = 0;
  nlohmann::json options;  // solver options used for the labels
};

struct Entry {
  sampling::UcInput input;
  uc::SolveStatus status = uc::SolveStatus::Failed;
  std::shared_ptr<const uc::UcSolution> solution;  // null unless feasible

  bool labeled() const { return solution != nullptr; }
};

struct Archive {
  ArchiveHeader header;
  std::vector<Entry> entries;
  bool truncated = false;  // a torn final line was ignored
  std::uintmax_t valid_bytes = 0;
};

nlohmann::json header_to_json(const ArchiveHeader& h);
nlohmann::json entry_to_json(const Entry& e);

/// Throws MissingArtifactError / SchemaError. A torn final line (no newline)
/// is dropped and reported through `truncated`.
Archive read_archive(const std::filesystem::path& path);

std::filesystem::path timings_path(const std::filesystem::path& archive);

/// Labeled entries as index records. Throws FingerprintError when the
/// archive was produced for a different case.
std::vector<proxy::Record> to_records(const grid::GridCase& grid, const Archive& a);

/// FNV-1a of the canonical dump.
std::string hash_json(const nlohmann::json& doc);

}  // namespace ucnn::archive
