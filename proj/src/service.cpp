#include "cdaug/service.hpp"

#include <algorithm>
#include <random>

#include "cdaug/codec.hpp"
#include "cdaug/error.hpp"

namespace cdaug {

CollabService::CollabService(ServiceOptions options, std::shared_ptr<ChatBackend> backend,
                             std::shared_ptr<EntailmentScorer> scorer, PromptCatalog catalog,
                             TaskManifest manifest)
    : options_(std::move(options)),
      backend_(std::move(backend)),
      scorer_(std::move(scorer)),
      catalog_(std::move(catalog)),
      manifest_(std::move(manifest)),
      store_(options_.data_dir) {
  if (!backend_ || !scorer_) throw Error(ErrorKind::kValidation, "service needs a backend and a scorer");

  // Recovery: anything caught mid-flight is failed, and a done job whose
  // dataset is missing or damaged is failed rather than served.
  std::vector<AugmentationJob> requeue;
  for (auto& job : store_.load_jobs()) {
    bool rewrite = false;
    if (job.status == JobStatus::kAugmenting || job.status == JobStatus::kFiltering) {
      job.status = JobStatus::kFailed;
      job.cause = "interrupted";
      rewrite = true;
    } else if (job.status == JobStatus::kDone && (!job.digest || !store_.has_blob(*job.digest))) {
      job.status = JobStatus::kFailed;
      job.cause = "dataset-missing";
      job.digest.reset();
      rewrite = true;
    }
    clock_ = std::max({clock_, job.created, job.updated});
    if (rewrite) {
      job.updated = ++clock_;
      store_.write_job(job);
    }
    if (job.idempotency_key) idempotency_[{job.user_id, *job.idempotency_key}] = job.job_id;
    if (job.status == JobStatus::kQueued) requeue.push_back(job);
    auto slot = std::make_shared<JobSlot>();
    slot->job = std::move(job);
    jobs_.emplace(slot->job.job_id, std::move(slot));
  }

  std::sort(requeue.begin(), requeue.end(),
            [](const AugmentationJob& a, const AugmentationJob& b) { return a.created < b.created; });
  for (const auto& job : requeue) pending_.emplace_back(job.job_id, job.user_id);

  if (options_.auto_run) {
    const auto count = std::max<std::size_t>(options_.workers, 1);
    for (std::size_t i = 0; i < count; ++i) {
      workers_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
    }
  }
}

CollabService::~CollabService() { shutdown(); }

void CollabService::shutdown() {
  for (auto& worker : workers_) worker.request_stop();
  queue_cv_.notify_all();
  workers_.clear();  // joins
}

std::string CollabService::new_job_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id(32, '0');
  for (auto& c : id) c = kHex[rng() & 0xf];
  return id;
}

std::shared_ptr<CollabService::JobSlot> CollabService::slot(const std::string& job_id) const {
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorKind::kNotFound, "unknown job " + job_id);
  return it->second;
}

std::string CollabService::submit_job(const UserProfile& profile, const GenerationConfig& config,
                                      const FilterThresholds& thresholds,
                                      const std::optional<std::string>& idempotency_key) {
  auto validation = validate_profile(profile, manifest_);
  if (!validation.ok()) throw ProfileRejected(std::move(validation));
  config.validate();
  thresholds.validate();
  catalog_.at(profile.task);

  std::unique_lock lock(jobs_mutex_);
  if (idempotency_key) {
    auto it = idempotency_.find({profile.user_id, *idempotency_key});
    if (it != idempotency_.end()) return it->second;
  }

  auto slot = std::make_shared<JobSlot>();
  AugmentationJob& job = slot->job;
  do {
    job.job_id = new_job_id();
  } while (jobs_.contains(job.job_id));
  job.user_id = profile.user_id;
  job.task = profile.task;
  job.config = config;
  job.thresholds = thresholds;
  job.status = JobStatus::kQueued;
  job.idempotency_key = idempotency_key;
  job.created = job.updated = ++clock_;

  // Profile first: a persisted job record always has its upload on disk.
  store_.write_profile(job.job_id, profile);
  store_.write_job(job);

  const std::string job_id = job.job_id;
  jobs_.emplace(job_id, slot);
  if (idempotency_key) idempotency_[{profile.user_id, *idempotency_key}] = job_id;
  lock.unlock();

  if (options_.auto_run) enqueue(job_id, profile.user_id);
  return job_id;
}

void CollabService::transition(JobSlot& slot, JobStatus to, const std::function<void(AugmentationJob&)>& update) {
  std::lock_guard lock(slot.mutex);
  if (!can_transition(slot.job.status, to)) {
    throw Error(ErrorKind::kConflict, "job " + slot.job.job_id + " cannot move from " +
                                          std::string(to_string(slot.job.status)) + " to " +
                                          std::string(to_string(to)));
  }
  AugmentationJob next = slot.job;
  next.status = to;
  if (update) update(next);
  {
    std::lock_guard clock_lock(jobs_mutex_);
    next.updated = ++clock_;
  }
  store_.write_job(next);
  slot.job = std::move(next);
}

void CollabService::fail(JobSlot& slot, const std::string& cause) {
  try {
    transition(slot, JobStatus::kFailed, [&](AugmentationJob& job) { job.cause = cause; });
  } catch (const Error&) {
    // Already terminal; keep the first outcome.
  }
}

JobStatus CollabService::run_job(const std::string& job_id) {
  auto job_slot = slot(job_id);
  AugmentationJob job;
  {
    std::lock_guard lock(job_slot->mutex);
    if (job_slot->job.status == JobStatus::kDone) return JobStatus::kDone;
    if (job_slot->job.status != JobStatus::kQueued) {
      throw Error(ErrorKind::kConflict,
                  "job " + job_id + " is " + std::string(to_string(job_slot->job.status)) + ", not queued");
    }
    job = job_slot->job;
  }
  // Re-checked under the slot lock; a concurrent runner loses with kConflict.
  transition(*job_slot, JobStatus::kAugmenting);

  try {
    const auto profile = store_.read_profile(job.job_id, job.user_id);

    AugmentationEngine engine(*backend_, catalog_, manifest_, options_.engine_parallelism);
    AugmentationResult augmented;
    try {
      augmented = engine.augment_user(profile, job.config);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kAugmentationFailed) {
        fail(*job_slot, e.what());
        return JobStatus::kFailed;
      }
      throw;
    }

    transition(*job_slot, JobStatus::kFiltering, [&](AugmentationJob& j) {
      j.counters.generated = augmented.report.generated;
      j.counters.failed_variants = augmented.report.failed_variants;
    });

    const auto selection = select(profile, augmented.samples, job.thresholds, *scorer_, options_.engine_parallelism);
    if (selection.quarantined > 0 && selection.quarantined == selection.reports.size()) {
      const auto& first = *selection.reports.front().error;
      fail(*job_slot, "scorer-unavailable: " + first);
      return JobStatus::kFailed;
    }

    store_.write_reports(job.job_id, job.user_id, encode_reports(selection.reports));
    const auto digest = store_.put_blob(encode_filtered(selection.filtered));
    transition(*job_slot, JobStatus::kDone, [&](AugmentationJob& j) {
      j.counters.kept = selection.filtered.samples.size();
      j.counters.quarantined = selection.quarantined;
      j.digest = digest;
    });
    return JobStatus::kDone;
  } catch (const std::exception& e) {
    fail(*job_slot, e.what());
    return JobStatus::kFailed;
  }
}

AugmentationJob CollabService::get_status(const std::string& job_id) const {
  auto job_slot = slot(job_id);
  std::lock_guard lock(job_slot->mutex);
  return job_slot->job;
}

DatasetDownload CollabService::download_filtered(const std::string& job_id) const {
  const auto job = get_status(job_id);
  if (job.status != JobStatus::kDone || !job.digest) {
    throw Error(ErrorKind::kConflict, "job " + job_id + " is " + std::string(to_string(job.status)));
  }
  return {store_.get_blob(*job.digest), *job.digest};
}

std::string CollabService::download_reports(const std::string& job_id) const {
  const auto job = get_status(job_id);
  if (job.status != JobStatus::kDone) {
    throw Error(ErrorKind::kConflict, "job " + job_id + " is " + std::string(to_string(job.status)));
  }
  return store_.read_reports(job.job_id, job.user_id);
}

void CollabService::enqueue(const std::string& job_id, const std::string& user_id) {
  {
    std::lock_guard lock(queue_mutex_);
    pending_.emplace_back(job_id, user_id);
  }
  queue_cv_.notify_one();
}

void CollabService::worker_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    std::pair<std::string, std::string> next;
    {
      std::unique_lock lock(queue_mutex_);
      auto runnable = [&] {
        return std::find_if(pending_.begin(), pending_.end(),
                            [&](const auto& entry) { return !busy_users_.contains(entry.second); });
      };
      if (!queue_cv_.wait(lock, stop, [&] { return runnable() != pending_.end(); })) return;
      auto it = runnable();
      next = *it;
      pending_.erase(it);
      busy_users_.insert(next.second);
    }
    try {
      run_job(next.first);
    } catch (const std::exception&) {
      // Conflicts mean another caller already ran it.
    }
    {
      std::lock_guard lock(queue_mutex_);
      busy_users_.erase(next.second);
    }
    queue_cv_.notify_all();
  }
}

}  // namespace cdaug
