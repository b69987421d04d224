#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdaug/augment.hpp"
#include "cdaug/core.hpp"
#include "cdaug/selection.hpp"

namespace cdaug {

enum class JobStatus { kQueued, kAugmenting, kFiltering, kDone, kFailed };

std::string_view to_string(JobStatus status);
JobStatus parse_job_status(std::string_view text);
bool is_terminal(JobStatus status);
/// queued -> augmenting -> filtering -> done|failed; any non-terminal state
/// may also fail.
bool can_transition(JobStatus from, JobStatus to);

struct JobCounters {
  std::size_t generated = 0;
  std::size_t failed_variants = 0;
  std::size_t kept = 0;
  std::size_t quarantined = 0;

  friend bool operator==(const JobCounters&, const JobCounters&) = default;
};

struct AugmentationJob {
  std::string job_id;
  std::string user_id;
  TaskId task = TaskId::kMovieTag;
  GenerationConfig config;
  FilterThresholds thresholds;
  JobStatus status = JobStatus::kQueued;
  JobCounters counters;
  std::optional<std::string> digest;  // set once done
  std::string cause;                  // set once failed
  std::optional<std::string> idempotency_key;
  std::uint64_t created = 0;
  std::uint64_t updated = 0;
};

void to_json(nlohmann::json& j, const JobCounters& counters);
void from_json(const nlohmann::json& j, JobCounters& counters);
void to_json(nlohmann::json& j, const AugmentationJob& job);
void from_json(const nlohmann::json& j, AugmentationJob& job);

/// On-disk persistence for the collaboration service.
///
///   <root>/jobs/<job_id>.json                 job records
///   <root>/users/<user key>/<job_id>/         uploaded profile, filter reports
///   <root>/blobs/<sha256>                     content-addressed datasets
///
/// Every file is written to a temporary name, flushed, then renamed into
/// place, so readers see either the old or the new content.
class JobStore {
 public:
  explicit JobStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::vector<AugmentationJob> load_jobs() const;
  void write_job(const AugmentationJob& job) const;

  void write_profile(const std::string& job_id, const UserProfile& profile) const;
  UserProfile read_profile(const std::string& job_id, const std::string& user_id) const;
  void write_reports(const std::string& job_id, const std::string& user_id, std::string_view bytes) const;
  std::string read_reports(const std::string& job_id, const std::string& user_id) const;

  /// Stores bytes under their digest and returns the digest. Idempotent.
  std::string put_blob(std::string_view bytes) const;
  /// Error(kNotFound) if absent, Error(kIntegrity) if the bytes no longer
  /// hash to `digest`.
  std::string get_blob(const std::string& digest) const;
  bool has_blob(const std::string& digest) const;

  /// Directory name for a user's data; a hash, since user ids are opaque.
  static std::string user_key(std::string_view user_id);

 private:
  std::filesystem::path user_dir(const std::string& user_id, const std::string& job_id) const;

  std::filesystem::path root_;
};

/// Writes via temp file + fsync + rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace cdaug
