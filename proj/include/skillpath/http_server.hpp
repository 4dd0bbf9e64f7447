/*
 * Copyright 2026 The Skillpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP/1.1 front end for SessionService, on cpp-httplib.
//
//   GET   /api/path
//   PATCH /api/waypoints/{index}
//   POST  /api/approve
//   POST  /api/revert/{index}
//   GET   /api/program?backend=portable|inform

#ifndef SKILLPATH_HTTP_SERVER_HPP_
#define SKILLPATH_HTTP_SERVER_HPP_

#include <string>
#include <utility>

#include "skillpath/error.hpp"
#include "skillpath/service.hpp"
// Last: httplib brings in <resolv.h>, whose _res macro collides with Eigen
// internals if Eigen is parsed afterwards.
#include "httplib.h"

namespace skillpath {

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// "host:port", ":port" or "port".
inline BindAddress parse_bind(std::string_view text) {
  BindAddress b;
  const auto colon = text.rfind(':');
  std::string_view port = text;
  if (colon != std::string_view::npos) {
    if (colon > 0) b.host = std::string(text.substr(0, colon));
    port = text.substr(colon + 1);
  }
  int p = -1;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
  if (ec != std::errc() || ptr != port.data() + port.size() || p < 0 || p > 65535) {
    throw Error(ErrorKind::kConfiguration, "bad bind address '" + std::string(text) +
                                               "' (expected host:port)");
  }
  b.port = p;
  return b;
}

class ReviewServer {
 public:
  explicit ReviewServer(SessionService& service) : service_(service) {
    auto send = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server_.Get("/api/path", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, service_.get_path());
    });
    server_.Patch(R"(/api/waypoints/([^/]+))",
                  [this, send](const httplib::Request& req, httplib::Response& res) {
                    send(res, service_.patch_waypoint(req.matches[1].str(), req.body));
                  });
    server_.Post("/api/approve", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.approve(req.body));
    });
    server_.Post(R"(/api/revert/([^/]+))",
                 [this, send](const httplib::Request& req, httplib::Response& res) {
                   send(res, service_.revert(req.matches[1].str(), req.body));
                 });
    server_.Get("/api/program", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service_.program(req.get_param_value("backend")));
    });
    server_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const Response r = error_response(res.status, res.status == 404 ? "no-such-route" : "http-error",
                                        req.method + " " + req.path);
      res.set_content(r.body, r.content_type);
    });
  }

  /// Binds without serving; returns the bound port (useful with port 0).
  int bind(const BindAddress& addr) {
    if (addr.port == 0) return server_.bind_to_any_port(addr.host);
    if (!server_.bind_to_port(addr.host, addr.port)) {
      throw Error(ErrorKind::kIo, "cannot bind " + addr.host + ":" + std::to_string(addr.port));
    }
    return addr.port;
  }

  /// Blocks until stop().
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  SessionService& service_;
  httplib::Server server_;
};

}  // namespace skillpath

#endif  // SKILLPATH_HTTP_SERVER_HPP_
