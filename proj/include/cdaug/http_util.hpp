#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

namespace httplib {
class Client;
}

namespace cdaug {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

/// Splits an http(s) URL into origin and path. Throws Error(kValidation).
Endpoint parse_endpoint(std::string_view url);

std::unique_ptr<httplib::Client> make_client(const std::string& origin, std::chrono::milliseconds timeout);

/// POSTs a JSON body and returns the 2xx response body. Non-2xx responses and
/// connection failures raise Error(kTransport).
std::string post_json(std::string_view url, const std::string& body, std::chrono::milliseconds timeout,
                      const std::string& bearer_token = {});

}  // namespace cdaug
