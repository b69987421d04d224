#include "cdaug/job_store.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "cdaug/codec.hpp"
#include "cdaug/digest.hpp"
#include "cdaug/error.hpp"

namespace cdaug {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kAugmenting: return "augmenting";
    case JobStatus::kFiltering: return "filtering";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

JobStatus parse_job_status(std::string_view text) {
  for (auto status : {JobStatus::kQueued, JobStatus::kAugmenting, JobStatus::kFiltering, JobStatus::kDone,
                      JobStatus::kFailed}) {
    if (to_string(status) == text) return status;
  }
  throw Error(ErrorKind::kValidation, "unknown job status '" + std::string(text) + "'");
}

bool is_terminal(JobStatus status) { return status == JobStatus::kDone || status == JobStatus::kFailed; }

bool can_transition(JobStatus from, JobStatus to) {
  if (to == JobStatus::kFailed) return !is_terminal(from);
  switch (from) {
    case JobStatus::kQueued: return to == JobStatus::kAugmenting;
    case JobStatus::kAugmenting: return to == JobStatus::kFiltering;
    case JobStatus::kFiltering: return to == JobStatus::kDone;
    default: return false;
  }
}

void to_json(json& j, const JobCounters& counters) {
  j = json{{"generated", counters.generated},
           {"failed_variants", counters.failed_variants},
           {"kept", counters.kept},
           {"quarantined", counters.quarantined}};
}

void from_json(const json& j, JobCounters& counters) {
  j.at("generated").get_to(counters.generated);
  j.at("failed_variants").get_to(counters.failed_variants);
  j.at("kept").get_to(counters.kept);
  counters.quarantined = j.value("quarantined", std::size_t{0});
}

void to_json(json& j, const AugmentationJob& job) {
  j = json{{"job_id", job.job_id},         {"user_id", job.user_id},   {"task", to_string(job.task)},
           {"config", job.config},         {"thresholds", job.thresholds}, {"status", to_string(job.status)},
           {"counters", job.counters},     {"created", job.created},   {"updated", job.updated}};
  if (job.digest) j["digest"] = *job.digest;
  if (!job.cause.empty()) j["cause"] = job.cause;
  if (job.idempotency_key) j["idempotency_key"] = *job.idempotency_key;
}

void from_json(const json& j, AugmentationJob& job) {
  j.at("job_id").get_to(job.job_id);
  j.at("user_id").get_to(job.user_id);
  job.task = parse_task_id(j.at("task").get<std::string>());
  j.at("config").get_to(job.config);
  j.at("thresholds").get_to(job.thresholds);
  job.status = parse_job_status(j.at("status").get<std::string>());
  j.at("counters").get_to(job.counters);
  j.at("created").get_to(job.created);
  j.at("updated").get_to(job.updated);
  job.digest.reset();
  if (j.contains("digest")) job.digest = j.at("digest").get<std::string>();
  job.cause = j.value("cause", std::string{});
  job.idempotency_key.reset();
  if (j.contains("idempotency_key")) job.idempotency_key = j.at("idempotency_key").get<std::string>();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  static std::atomic<std::uint64_t> sequence{0};
  const fs::path tmp =
      path.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(sequence.fetch_add(1));
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorKind::kIo, "cannot create " + tmp.string());
  std::size_t written = 0;
  while (written < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      ::close(fd);
      fs::remove(tmp);
      throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) {
    fs::remove(tmp);
    throw Error(ErrorKind::kIo, "fsync failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::kIo, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

JobStore::JobStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (const char* sub : {"jobs", "users", "blobs"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create data directory " + (root_ / sub).string());
  }
}

std::string JobStore::user_key(std::string_view user_id) { return sha256_hex(user_id).substr(0, 32); }

fs::path JobStore::user_dir(const std::string& user_id, const std::string& job_id) const {
  return root_ / "users" / user_key(user_id) / job_id;
}

std::vector<AugmentationJob> JobStore::load_jobs() const {
  std::vector<AugmentationJob> jobs;
  for (const auto& entry : fs::directory_iterator(root_ / "jobs")) {
    if (entry.path().extension() != ".json") continue;
    const auto text = read_file(entry.path());
    try {
      jobs.push_back(parse_json(text).get<AugmentationJob>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kIo, "corrupt job record " + entry.path().string() + ": " + e.what());
    }
  }
  return jobs;
}

void JobStore::write_job(const AugmentationJob& job) const {
  write_file_atomic(root_ / "jobs" / (job.job_id + ".json"), canonical_dump(json(job)) + "\n");
}

void JobStore::write_profile(const std::string& job_id, const UserProfile& profile) const {
  write_file_atomic(user_dir(profile.user_id, job_id) / "profile.json", encode_profile(profile));
}

UserProfile JobStore::read_profile(const std::string& job_id, const std::string& user_id) const {
  return decode_profile(read_file(user_dir(user_id, job_id) / "profile.json"));
}

void JobStore::write_reports(const std::string& job_id, const std::string& user_id, std::string_view bytes) const {
  write_file_atomic(user_dir(user_id, job_id) / "reports.jsonl", bytes);
}

std::string JobStore::read_reports(const std::string& job_id, const std::string& user_id) const {
  return read_file(user_dir(user_id, job_id) / "reports.jsonl");
}

std::string JobStore::put_blob(std::string_view bytes) const {
  auto digest = sha256_hex(bytes);
  const auto path = root_ / "blobs" / digest;
  if (!fs::exists(path)) write_file_atomic(path, bytes);
  return digest;
}

std::string JobStore::get_blob(const std::string& digest) const {
  const auto path = root_ / "blobs" / digest;
  if (!fs::exists(path)) throw Error(ErrorKind::kNotFound, "no stored dataset with digest " + digest);
  auto bytes = read_file(path);
  if (sha256_hex(bytes) != digest) throw Error(ErrorKind::kIntegrity, "stored dataset " + digest + " is corrupted");
  return bytes;
}

bool JobStore::has_blob(const std::string& digest) const {
  try {
    get_blob(digest);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace cdaug
