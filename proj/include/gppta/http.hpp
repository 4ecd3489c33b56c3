/*
 * Copyright 2026 The gppta Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <string>

// Eigen must precede httplib.h: <resolv.h> defines a `_res` macro that collides
// with Eigen parameter names.
#include "gppta/service.hpp"

#include <httplib.h>
#include <json.hpp>

namespace gppta {

/// Routes the session endpoints of `service` on `server`.
inline void mount_routes(httplib::Server& server, SessionService& service) {
    auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse = [](const httplib::Request& req) -> std::optional<Json> {
        try {
            return req.body.empty() ? Json::object() : Json::parse(req.body);
        } catch (const Json::exception&) {
            return std::nullopt;
        }
    };
    auto invalid_json = Reply{400, {{"error", "malformed JSON body"}, {"fields", Json::array({"body"})}}};

    server.Post("/sessions", [=, &service](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse(req);
        send(res, body ? service.create(*body) : invalid_json);
    });
    server.Get(R"(/sessions/([^/]+)/next-trial)", [=, &service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.next_trial(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/responses)", [=, &service](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse(req);
        send(res, body ? service.respond(req.matches[1], *body) : invalid_json);
    });
    server.Get(R"(/sessions/([^/]+)/estimate)", [=, &service](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> points;
        if (req.has_param("points")) points = req.get_param_value("points");
        send(res, service.estimate(req.matches[1], points));
    });
    server.set_exception_handler([=](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, Reply{500, {{"error", what}}});
    });
}

}  // namespace gppta
