#pragma once
// JsonTransport over HTTP(S) using cpp-httplib. HTTPS needs the including
// translation unit to define CPPHTTPLIB_OPENSSL_SUPPORT and link OpenSSL.

#include <cstdlib>
#include <optional>
#include <string>

#include "httplib.h"

#include "drawmap/transport.hpp"

namespace drawmap {

/// Value of the named environment variable, if set and non-empty.
inline std::optional<std::string> credential_from_env(const std::string& name) {
  if (name.empty()) return std::nullopt;
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

class HttpTransport final : public JsonTransport {
 public:
  /// `url` is scheme://host[:port]/path.
  HttpTransport(const std::string& url, std::optional<std::string> bearer, int timeout_ms)
      : bearer_(std::move(bearer)), timeout_ms_(timeout_ms) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  // A fresh client per call keeps concurrent posts independent.
  TransportReply post(const std::string& body) override {
    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(timeout_ms_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (bearer_) headers.emplace("Authorization", "Bearer " + *bearer_);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      return {false, "", httplib::to_string(err),
              err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read};
    }
    if (res->status < 200 || res->status >= 300) return {false, "", "HTTP " + std::to_string(res->status), false};
    return {true, res->body, "", false};
  }

 private:
  std::string origin_;
  std::string path_;
  std::optional<std::string> bearer_;
  int timeout_ms_;
};

}  // namespace drawmap
