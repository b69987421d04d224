#include "cdaug/http_util.hpp"

#include <httplib.h>

#include "cdaug/error.hpp"

namespace cdaug {

Endpoint parse_endpoint(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::kValidation, "endpoint URL needs a scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorKind::kValidation, "unsupported URL scheme: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

std::unique_ptr<httplib::Client> make_client(const std::string& origin, std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(origin);
  if (!client->is_valid()) throw Error(ErrorKind::kValidation, "invalid server address: " + origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());
  return client;
}

std::string post_json(std::string_view url, const std::string& body, std::chrono::milliseconds timeout,
                      const std::string& bearer_token) {
  const auto endpoint = parse_endpoint(url);
  auto client = make_client(endpoint.origin, timeout);
  if (!bearer_token.empty()) client->set_bearer_token_auth(bearer_token);
  auto result = client->Post(endpoint.path, body, "application/json");
  if (!result) {
    throw Error(ErrorKind::kTransport,
                "POST " + std::string(url) + " failed: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorKind::kTransport,
                "POST " + std::string(url) + " returned HTTP " + std::to_string(result->status));
  }
  return result->body;
}

}  // namespace cdaug
