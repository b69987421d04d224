#include "cdaug/client.hpp"

#include <thread>

#include <httplib.h>

#include "cdaug/codec.hpp"
#include "cdaug/digest.hpp"
#include "cdaug/error.hpp"
#include "cdaug/http_api.hpp"
#include "cdaug/http_util.hpp"

namespace cdaug {

using nlohmann::json;

namespace {

[[noreturn]] void throw_for_status(const std::string& what, const httplib::Response& res) {
  std::string message = what + " returned HTTP " + std::to_string(res.status);
  try {
    const auto body = json::parse(res.body);
    if (body.contains("message")) message += ": " + body.at("message").get<std::string>();
  } catch (const json::exception&) {
  }
  switch (res.status) {
    case 404: throw Error(ErrorKind::kNotFound, message);
    case 409: throw Error(ErrorKind::kConflict, message);
    case 400:
    case 422: throw Error(ErrorKind::kValidation, message);
    default: throw Error(ErrorKind::kTransport, message);
  }
}

}  // namespace

CollabClient::CollabClient(std::string server, ClientOptions options)
    : server_(std::move(server)), options_(options) {
  while (!server_.empty() && server_.back() == '/') server_.pop_back();
  parse_endpoint(server_);
}

std::string CollabClient::submit(const UserProfile& profile, const GenerationConfig& config,
                                 const FilterThresholds& thresholds,
                                 const std::optional<std::string>& idempotency_key) const {
  json body{{"profile", profile}, {"config", config}, {"thresholds", thresholds}};
  if (idempotency_key) body["idempotency_key"] = *idempotency_key;
  auto client = make_client(server_, options_.request_timeout);
  auto res = client->Post("/v1/jobs", canonical_dump(body), "application/json");
  if (!res) throw Error(ErrorKind::kTransport, "submit to " + server_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 201) throw_for_status("submit", *res);
  try {
    return json::parse(res->body).at("job_id").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kTransport, std::string("malformed submit response: ") + e.what());
  }
}

JobView CollabClient::status(const std::string& job_id) const {
  auto client = make_client(server_, options_.request_timeout);
  auto res = client->Get("/v1/jobs/" + job_id);
  if (!res) throw Error(ErrorKind::kTransport, "status poll failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw_for_status("status", *res);
  try {
    const auto body = json::parse(res->body);
    JobView view;
    view.job_id = body.at("job_id").get<std::string>();
    view.status = parse_job_status(body.at("status").get<std::string>());
    view.counters = body.at("counters").get<JobCounters>();
    if (body.contains("digest")) view.digest = body.at("digest").get<std::string>();
    view.cause = body.value("cause", std::string{});
    return view;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kTransport, std::string("malformed status response: ") + e.what());
  }
}

JobView CollabClient::wait(const std::string& job_id) const {
  const auto deadline = std::chrono::steady_clock::now() + options_.poll_deadline;
  auto delay = options_.initial_poll;
  while (true) {
    auto view = status(job_id);
    if (is_terminal(view.status)) return view;
    if (std::chrono::steady_clock::now() + delay > deadline) {
      throw Error(ErrorKind::kTimeout, "job " + job_id + " still " + std::string(to_string(view.status)) +
                                           " at the poll deadline");
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, options_.max_poll);
  }
}

std::string CollabClient::fetch_bytes(const std::string& job_id) const {
  auto client = make_client(server_, options_.request_timeout);
  auto res = client->Get("/v1/jobs/" + job_id + "/dataset");
  if (!res) throw Error(ErrorKind::kTransport, "download failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw_for_status("download", *res);
  const auto expected = res->get_header_value(kDigestHeader);
  if (expected.empty()) throw Error(ErrorKind::kIntegrity, "download carries no digest header");
  if (sha256_hex(res->body) != expected) {
    throw Error(ErrorKind::kIntegrity, "dataset for job " + job_id + " does not match its digest");
  }
  return std::move(res->body);
}

FilteredDataset CollabClient::fetch(const std::string& job_id, const std::string& user_id, TaskId task) const {
  const auto view = wait(job_id);
  if (view.status == JobStatus::kFailed) {
    throw Error(ErrorKind::kJobFailed, "job " + job_id + " failed: " + view.cause);
  }
  const auto bytes = fetch_bytes(job_id);
  if (view.digest && sha256_hex(bytes) != *view.digest) {
    throw Error(ErrorKind::kIntegrity, "dataset digest differs from the job's recorded digest");
  }
  return FilteredDataset::from_labeled(decode_dataset(bytes, user_id, task));
}

FilteredDataset client_roundtrip(const UserProfile& profile, const GenerationConfig& config,
                                 const FilterThresholds& thresholds, const std::string& server,
                                 const ClientOptions& options) {
  CollabClient client(server, options);
  const auto job_id = client.submit(profile, config, thresholds);
  return client.fetch(job_id, profile.user_id, profile.task);
}

}  // namespace cdaug
