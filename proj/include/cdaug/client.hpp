#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "cdaug/augment.hpp"
#include "cdaug/core.hpp"
#include "cdaug/job_store.hpp"
#include "cdaug/selection.hpp"

namespace cdaug {

struct ClientOptions {
  std::chrono::milliseconds request_timeout{10'000};
  std::chrono::milliseconds initial_poll{20};
  std::chrono::milliseconds max_poll{2'000};
  std::chrono::milliseconds poll_deadline{600'000};
};

struct JobView {
  std::string job_id;
  JobStatus status = JobStatus::kQueued;
  JobCounters counters;
  std::optional<std::string> digest;
  std::string cause;
};

/// Device-side client for the collaboration service.
class CollabClient {
 public:
  /// `server` is an origin such as http://127.0.0.1:8080.
  explicit CollabClient(std::string server, ClientOptions options = {});

  std::string submit(const UserProfile& profile, const GenerationConfig& config,
                     const FilterThresholds& thresholds,
                     const std::optional<std::string>& idempotency_key = std::nullopt) const;
  JobView status(const std::string& job_id) const;
  /// Polls with doubling backoff until the job is terminal. Error(kTimeout)
  /// past the poll deadline.
  JobView wait(const std::string& job_id) const;
  /// Raw dataset bytes after checking them against the digest header.
  /// Error(kIntegrity) on mismatch.
  std::string fetch_bytes(const std::string& job_id) const;
  /// wait + fetch + decode. Error(kJobFailed) carries the server's cause.
  FilteredDataset fetch(const std::string& job_id, const std::string& user_id, TaskId task) const;

 private:
  std::string server_;
  ClientOptions options_;
};

/// Upload, poll, download, verify, decode.
FilteredDataset client_roundtrip(const UserProfile& profile, const GenerationConfig& config,
                                 const FilterThresholds& thresholds, const std::string& server,
                                 const ClientOptions& options = {});

}  // namespace cdaug
