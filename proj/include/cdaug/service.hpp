#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cdaug/augment.hpp"
#include "cdaug/backend.hpp"
#include "cdaug/core.hpp"
#include "cdaug/entailment.hpp"
#include "cdaug/error.hpp"
#include "cdaug/job_store.hpp"
#include "cdaug/prompt.hpp"
#include "cdaug/selection.hpp"

namespace cdaug {

/// Submission refused because the profile broke an invariant.
class ProfileRejected : public Error {
 public:
  explicit ProfileRejected(ValidationResult result)
      : Error(ErrorKind::kValidation, "profile rejected: " + describe(result)), result_(std::move(result)) {}

  const ValidationResult& result() const { return result_; }

 private:
  ValidationResult result_;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  std::size_t workers = 2;
  std::size_t engine_parallelism = 1;
  // When false, submitted jobs wait for an explicit run_job call.
  bool auto_run = true;
};

struct DatasetDownload {
  std::string bytes;
  std::string digest;
};

/// Cloud side of the collaboration protocol: accepts uploads, runs
/// augmentation then selection as jobs, and serves the filtered datasets.
///
/// Jobs run on a bounded worker pool, FIFO per user; two jobs of the same
/// user never run at once. Dataset bytes are stored content-addressed and
/// written before the job record flips to done.
class CollabService {
 public:
  CollabService(ServiceOptions options, std::shared_ptr<ChatBackend> backend,
                std::shared_ptr<EntailmentScorer> scorer, PromptCatalog catalog, TaskManifest manifest);
  ~CollabService();

  CollabService(const CollabService&) = delete;
  CollabService& operator=(const CollabService&) = delete;

  /// Throws ProfileRejected for an invalid profile, Error(kValidation) for a
  /// bad config, Error(kIo) when the job cannot be persisted.
  std::string submit_job(const UserProfile& profile, const GenerationConfig& config,
                         const FilterThresholds& thresholds,
                         const std::optional<std::string>& idempotency_key = std::nullopt);

  /// Executes a queued job to a terminal status. A done job is a no-op;
  /// any other non-queued status raises Error(kConflict).
  JobStatus run_job(const std::string& job_id);

  /// Error(kNotFound) for unknown ids. Never waits for job execution.
  AugmentationJob get_status(const std::string& job_id) const;

  /// Error(kConflict) unless done.
  DatasetDownload download_filtered(const std::string& job_id) const;

  /// Filter reports as line-delimited records. Error(kConflict) unless done.
  std::string download_reports(const std::string& job_id) const;

  /// Stops accepting work and joins the workers; queued jobs stay queued.
  void shutdown();

 private:
  struct JobSlot {
    mutable std::mutex mutex;
    AugmentationJob job;
  };

  std::shared_ptr<JobSlot> slot(const std::string& job_id) const;
  void transition(JobSlot& slot, JobStatus to, const std::function<void(AugmentationJob&)>& update = {});
  void fail(JobSlot& slot, const std::string& cause);
  void enqueue(const std::string& job_id, const std::string& user_id);
  void worker_loop(std::stop_token stop);
  std::string new_job_id();

  ServiceOptions options_;
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<EntailmentScorer> scorer_;
  PromptCatalog catalog_;
  TaskManifest manifest_;
  JobStore store_;

  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<JobSlot>> jobs_;
  std::map<std::pair<std::string, std::string>, std::string> idempotency_;
  std::uint64_t clock_ = 0;

  std::mutex queue_mutex_;
  std::condition_variable_any queue_cv_;
  std::deque<std::pair<std::string, std::string>> pending_;  // (job_id, user_id)
  std::set<std::string> busy_users_;
  std::vector<std::jthread> workers_;
};

}  // namespace cdaug
