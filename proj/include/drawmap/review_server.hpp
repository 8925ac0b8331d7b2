#pragma once
// httplib routes for ReviewService, plus the static mount for the review UI.

#include <string>

#include "httplib.h"

#include "drawmap/review_service.hpp"

namespace drawmap {

inline void send(httplib::Response& res, const HttpResult& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

/// Registers the API on `server`. `static_dir` (if non-empty) is served at "/".
inline void bind_review_routes(httplib::Server& server, ReviewService& service, const std::string& static_dir = "") {
  server.Get("/api/specs", [&service](const httplib::Request&, httplib::Response& res) { send(res, service.list()); });
  server.Get(R"(/api/specs/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get(req.matches[1]));
  });
  server.Post(R"(/api/specs/([^/]+)/decisions)", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.decide(req.matches[1], req.body, req.get_header_value("X-Reviewer")));
  });
  server.Post(R"(/api/specs/([^/]+)/approve)", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.approve(req.matches[1], req.body, req.get_header_value("X-Reviewer")));
  });
  if (!static_dir.empty()) server.set_mount_point("/", static_dir);
}

}  // namespace drawmap
