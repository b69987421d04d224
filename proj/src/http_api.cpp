#include "cdaug/http_api.hpp"

#include <httplib.h>

#include "cdaug/codec.hpp"
#include "cdaug/error.hpp"

namespace cdaug {

using nlohmann::json;

namespace {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return 422;
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kIo: return 503;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, status_for(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}});
}

json job_view(const AugmentationJob& job) {
  json view{{"job_id", job.job_id},
            {"user_id", job.user_id},
            {"task", to_string(job.task)},
            {"status", to_string(job.status)},
            {"counters", job.counters},
            {"created", job.created},
            {"updated", job.updated}};
  if (job.digest) view["digest"] = *job.digest;
  if (!job.cause.empty()) view["cause"] = job.cause;
  return view;
}

}  // namespace

HttpFrontend::HttpFrontend(CollabService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpFrontend::~HttpFrontend() { stop(); }

void HttpFrontend::install_routes() {
  server_->Post("/v1/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    UserProfile profile;
    GenerationConfig config;
    FilterThresholds thresholds;
    std::optional<std::string> key;
    try {
      const auto body = parse_json(req.body);
      profile = body.at("profile").get<UserProfile>();
      if (body.contains("config")) config = body.at("config").get<GenerationConfig>();
      if (body.contains("thresholds")) thresholds = body.at("thresholds").get<FilterThresholds>();
      if (body.contains("idempotency_key") && !body.at("idempotency_key").is_null()) {
        key = body.at("idempotency_key").get<std::string>();
      }
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", "bad-request"}, {"message", e.what()}});
      return;
    } catch (const Error& e) {
      send_json(res, 400, {{"error", "bad-request"}, {"message", e.what()}});
      return;
    }

    try {
      const auto job_id = service_.submit_job(profile, config, thresholds, key);
      send_json(res, 201, {{"job_id", job_id}});
    } catch (const ProfileRejected& e) {
      json violations = json::array();
      for (const auto& v : e.result().violations) {
        json item{{"rule", v.rule}};
        item["index"] = v.index ? json(*v.index) : json(nullptr);
        violations.push_back(std::move(item));
      }
      send_json(res, 422, {{"error", "validation"}, {"message", e.what()}, {"violations", violations}});
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  server_->Get(R"(/v1/jobs/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, job_view(service_.get_status(req.matches[1])));
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  server_->Get(R"(/v1/jobs/([0-9a-f]+)/dataset)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto download = service_.download_filtered(req.matches[1]);
      res.status = 200;
      res.set_header(kDigestHeader, download.digest);
      res.set_content(std::move(download.bytes), "application/x-ndjson");
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  server_->Get(R"(/v1/jobs/([0-9a-f]+)/reports)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      res.status = 200;
      res.set_content(service_.download_reports(req.matches[1]), "application/x-ndjson");
    } catch (const Error& e) {
      send_error(res, e);
    }
  });
}

int HttpFrontend::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpFrontend::serve_forever(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error(ErrorKind::kIo, "cannot listen on " + host + ":" + std::to_string(port));
}

void HttpFrontend::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cdaug
