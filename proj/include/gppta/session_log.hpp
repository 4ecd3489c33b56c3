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

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <ctime>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gppta/errors.hpp"
#include "gppta/session.hpp"

// Session event log: one JSON object per line.
//
//   {"event":"created",  "ts":..., "max_std":..., "id":..., "config":{...}}
//   {"event":"proposed", "ts":..., "max_std":..., "frequency_hz":..., "level_dbhl":...}
//   {"event":"recorded", "ts":..., "max_std":..., "frequency_hz":..., "level_dbhl":..., "label":+-1,
//    "n_trials":..., "signal_std":..., "length_scale":...}
//   {"event":"stopped",  "ts":..., "max_std":..., "status":"stopped_converged"|"stopped_max_trials"}
//
// "ts" is an ISO-8601 UTC timestamp and is ignored on replay. Doubles are written
// with round-trip precision, so replay reproduces every estimate bit for bit.

namespace gppta {

using Json = nlohmann::json;

/// Clock used for event timestamps; swappable in tests.
using TimestampFn = std::function<std::string()>;

inline std::string utc_timestamp() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

inline Json config_to_json(const SessionConfig& c) {
    Json j{{"freq_min_hz", c.freq_min_hz},
           {"freq_max_hz", c.freq_max_hz},
           {"level_min_dbhl", c.level_min_dbhl},
           {"level_max_dbhl", c.level_max_dbhl},
           {"sigma_p", c.sigma_p},
           {"grid_size", c.grid_size},
           {"stop_std", c.stop_std},
           {"max_trials", c.max_trials},
           {"signal_std", c.signal_std},
           {"length_scale", c.length_scale},
           {"prior_slope", c.prior_mean.slope},
           {"prior_intercept", c.prior_mean.intercept},
           {"signal_std_bounds", {c.hyper_bounds.signal_std_lo, c.hyper_bounds.signal_std_hi}},
           {"length_scale_bounds", {c.hyper_bounds.length_scale_lo, c.hyper_bounds.length_scale_hi}},
           {"optimize_hypers", c.optimize_hypers},
           {"hyperopt_min_trials", c.hyperopt_min_trials}};
    if (c.weights) {
        Json w = Json::array();
        for (const auto& p : c.weights->points()) w.push_back({{"frequency_hz", p.frequency_hz}, {"weight", p.weight}});
        j["weights"] = std::move(w);
    }
    return j;
}

/// Reads a config from a JSON object. Missing keys keep their defaults. Throws
/// ValidationError naming every malformed or invalid field.
inline SessionConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError({"body"}, "expected a JSON object");
    SessionConfig c;
    std::vector<std::string> bad;
    auto number = [&](const char* key, double& dst) {
        if (!j.contains(key)) return;
        if (j[key].is_number()) dst = j[key].get<double>();
        else bad.emplace_back(key);
    };
    auto count = [&](const char* key, std::size_t& dst) {
        if (!j.contains(key)) return;
        if (j[key].is_number_integer() && j[key].get<std::int64_t>() >= 0) dst = j[key].get<std::size_t>();
        else if (j[key].is_number_integer()) dst = 0;  // flagged by validation below
        else bad.emplace_back(key);
    };
    auto range = [&](const char* key, double& lo, double& hi) {
        if (!j.contains(key)) return;
        const auto& v = j[key];
        if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
            lo = v[0].get<double>();
            hi = v[1].get<double>();
        } else {
            bad.emplace_back(key);
        }
    };
    number("freq_min_hz", c.freq_min_hz);
    number("freq_max_hz", c.freq_max_hz);
    number("level_min_dbhl", c.level_min_dbhl);
    number("level_max_dbhl", c.level_max_dbhl);
    number("sigma_p", c.sigma_p);
    count("grid_size", c.grid_size);
    number("stop_std", c.stop_std);
    count("max_trials", c.max_trials);
    number("signal_std", c.signal_std);
    number("length_scale", c.length_scale);
    number("prior_slope", c.prior_mean.slope);
    number("prior_intercept", c.prior_mean.intercept);
    range("signal_std_bounds", c.hyper_bounds.signal_std_lo, c.hyper_bounds.signal_std_hi);
    range("length_scale_bounds", c.hyper_bounds.length_scale_lo, c.hyper_bounds.length_scale_hi);
    count("hyperopt_min_trials", c.hyperopt_min_trials);
    if (j.contains("optimize_hypers")) {
        if (j["optimize_hypers"].is_boolean()) c.optimize_hypers = j["optimize_hypers"].get<bool>();
        else bad.emplace_back("optimize_hypers");
    }
    if (j.contains("weights") && !j["weights"].is_null()) {
        try {
            std::vector<WeightTable::Point> pts;
            for (const auto& p : j.at("weights"))
                pts.push_back({p.at("frequency_hz").get<double>(), p.at("weight").get<double>()});
            c.weights.emplace(std::move(pts));
        } catch (const std::exception&) {
            bad.emplace_back("weights");
        }
    }
    for (auto& f : c.invalid_fields())
        if (std::find(bad.begin(), bad.end(), f) == bad.end()) bad.push_back(std::move(f));
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return c;
}

inline Json event_created(const Session& s, const std::string& ts) {
    return {{"event", "created"}, {"ts", ts}, {"max_std", s.max_std()}, {"id", s.id()},
            {"config", config_to_json(s.config())}};
}

inline Json event_proposed(const Session& s, const Stimulus& stim, const std::string& ts) {
    return {{"event", "proposed"}, {"ts", ts}, {"max_std", s.max_std()},
            {"frequency_hz", stim.frequency_hz}, {"level_dbhl", stim.level_dbhl}};
}

inline Json event_recorded(const Session& s, const Stimulus& stim, ResponseLabel label, const std::string& ts) {
    return {{"event", "recorded"},
            {"ts", ts},
            {"max_std", s.max_std()},
            {"frequency_hz", stim.frequency_hz},
            {"level_dbhl", stim.level_dbhl},
            {"label", label.value()},
            {"n_trials", s.history().size()},
            {"signal_std", s.hyperparams().signal_std()},
            {"length_scale", s.hyperparams().length_scale()}};
}

inline Json event_stopped(const Session& s, const std::string& ts) {
    return {{"event", "stopped"}, {"ts", ts}, {"max_std", s.max_std()}, {"status", to_string(s.status())}};
}

/// Events for one record() call: "recorded", plus "stopped" if the call ended the session.
inline std::vector<Json> record_events(const Session& s, const Stimulus& stim, ResponseLabel label,
                                       const std::string& ts) {
    std::vector<Json> out{event_recorded(s, stim, label, ts)};
    if (!s.active()) out.push_back(event_stopped(s, ts));
    return out;
}

/// Rebuilds a session from its event log. Throws ContractError on a malformed or
/// inconsistent log (the line number is included in the message).
inline Session replay_session(const std::vector<Json>& events) {
    if (events.empty() || events.front().value("event", "") != "created")
        throw ContractError("session log must start with a created event");
    Session s = Session::create(config_from_json(events.front().at("config")),
                                events.front().value("id", std::string{}));
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& e = events[i];
        const std::string kind = e.value("event", "");
        try {
            if (kind == "proposed") {
                const Stimulus got = s.propose();
                const Stimulus logged{e.at("frequency_hz").get<double>(), e.at("level_dbhl").get<double>()};
                if (!(got == logged)) throw ContractError("proposal differs from log");
            } else if (kind == "recorded") {
                s.record({e.at("frequency_hz").get<double>(), e.at("level_dbhl").get<double>()},
                         ResponseLabel(e.at("label").get<int>()));
            } else if (kind == "stopped") {
                if (to_string(s.status()) != e.at("status").get<std::string>())
                    throw ContractError("status differs from log");
            } else {
                throw ContractError("unknown event '" + kind + "'");
            }
        } catch (const ContractError& err) {
            throw ContractError("session log line " + std::to_string(i + 1) + ": " + err.what());
        } catch (const Json::exception& err) {
            throw ContractError("session log line " + std::to_string(i + 1) + ": " + err.what());
        }
    }
    return s;
}

inline std::vector<Json> read_event_log(std::istream& in) {
    std::vector<Json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception& err) {
            throw ContractError("session log line " + std::to_string(lineno) + ": " + err.what());
        }
    }
    return out;
}

}  // namespace gppta
