#pragma once

#include <memory>
#include <string>
#include <thread>

#include "cdaug/service.hpp"

namespace httplib {
class Server;
}

namespace cdaug {

inline constexpr const char* kDigestHeader = "X-Dataset-Digest";

/// JSON-over-HTTP frontend for CollabService.
///
///   POST /v1/jobs                   {profile, config?, thresholds?, idempotency_key?} -> 201 {job_id}
///   GET  /v1/jobs/{id}              -> 200 {job_id, status, counters, digest?, cause?} | 404
///   GET  /v1/jobs/{id}/dataset      -> 200 dataset lines + X-Dataset-Digest | 409 | 404
///   GET  /v1/jobs/{id}/reports      -> 200 filter reports | 409 | 404
class HttpFrontend {
 public:
  explicit HttpFrontend(CollabService& service);
  ~HttpFrontend();

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port. Returns the bound port.
  int start(const std::string& host, int port);
  /// Blocks serving on the calling thread until stop() is called.
  void serve_forever(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  CollabService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace cdaug
