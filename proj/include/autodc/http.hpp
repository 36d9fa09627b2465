/*
 * Copyright 2026 The AutoDC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <string>

#include "autodc/error.hpp"
#include "autodc/io.hpp"
#include "autodc/workbench.hpp"
#include "httplib.h"

namespace autodc {

/// JSON-over-HTTP front end for a Workbench. Errors are returned as
/// {"code": ..., "message": ...} with the status mapped from the ErrorCode.
class HttpService {
 public:
  explicit HttpService(Workbench& bench, std::string static_dir = {}) : bench_(bench) {
    // The library default sets SO_REUSEPORT, which lets a second server share
    // the port silently.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
    if (!static_dir.empty()) server_.set_mount_point("/", static_dir);
  }

  /// Binds to host:port, or to any free port when `port` is 0. Returns the
  /// bound port.
  int bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
      if (bound < 0) fail(ErrorCode::PortInUse, host);
    } else if (!server_.bind_to_port(host, port)) {
      fail(ErrorCode::PortInUse, host + ":" + std::to_string(port));
    }
    return bound;
  }

  /// Serves until stop() is called.
  void run() { server_.listen_after_bind(); }
  /// Blocks until run() has started accepting connections.
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }
  bool running() const { return server_.is_running(); }

 private:
  using Handler = std::function<json(const httplib::Request&)>;

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::BadRequest, std::string("request body is not JSON: ") + e.what());
    }
  }

  static void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    res.status = http_status(code);
    res.set_content(json{{"code", code_name(code)}, {"message", message}}.dump(), "application/json");
  }

  static httplib::Server::Handler wrap(Handler fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(fn(req).dump(), "application/json");
      } catch (const Error& e) {
        send_error(res, e.code(), e.detail());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::IoFailure, e.what());
      }
    };
  }

  void routes() {
    auto& b = bench_;
    server_.Get("/api/project", wrap([&b](const auto&) { return b.project(); }));
    server_.Post("/api/project/advance", wrap([&b](const auto& req) { return b.advance(body_of(req)); }));
    server_.Post("/api/analyze", wrap([&b](const auto&) { return b.reanalyze_classes(); }));
    server_.Get("/api/classes", wrap([&b](const auto&) { return b.classes(); }));
    server_.Get(R"(/api/classes/([^/]+)/scatter)",
                wrap([&b](const auto& req) { return b.scatter(req.matches[1]); }));
    server_.Get(R"(/api/classes/([^/]+)/candidates)",
                wrap([&b](const auto& req) { return b.candidates(req.matches[1]); }));
    server_.Get(R"(/api/records/([^/]+)/image)", [&b](const httplib::Request& req, httplib::Response& res) {
      try {
        auto [bytes, type] = b.record_image(req.matches[1]);
        res.set_content(std::move(bytes), type);
      } catch (const Error& e) {
        send_error(res, e.code(), e.detail());
      }
    });
    server_.Post("/api/corrections", wrap([&b](const auto& req) { return b.post_correction(body_of(req)); }));
    server_.Delete(R"(/api/corrections/([^/]+))",
                   wrap([&b](const auto& req) { return b.delete_correction(req.matches[1]); }));
    server_.Post("/api/edge-cases", wrap([&b](const auto& req) { return b.post_edge_cases(body_of(req)); }));
    server_.Put("/api/augmentation/config",
                wrap([&b](const auto& req) { return b.put_aug_config(body_of(req)); }));
    server_.Post("/api/export", wrap([&b](const auto& req) { return b.start_export(body_of(req)); }));
    server_.Get("/api/export/status", wrap([&b](const auto&) { return b.export_status(); }));
  }

  Workbench& bench_;
  httplib::Server server_;
};

}  // namespace autodc
