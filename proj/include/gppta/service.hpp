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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gppta/errors.hpp"
#include "gppta/session.hpp"
#include "gppta/session_log.hpp"

// Durable session store behind the HTTP endpoints. Transport agnostic: every
// handler returns an HTTP status code and a JSON body.
//
// On disk, under the data directory:
//   index.jsonl            {"id":..., "ts":..., "log":"sessions/<id>.jsonl"} per created session
//   sessions/<id>.jsonl    the session's event log (see session_log.hpp)

namespace gppta {

struct Reply {
    int status;
    Json body;
};

class SessionService {
public:
    explicit SessionService(std::filesystem::path data_dir, TimestampFn clock = utc_timestamp)
        : dir_(std::move(data_dir)), clock_(std::move(clock)) {
        std::filesystem::create_directories(dir_ / "sessions");
        load();
    }

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    static constexpr std::size_t kDefaultEstimatePoints = 64;

    /// POST /sessions
    Reply create(const Json& body) {
        SessionConfig cfg;
        try {
            cfg = config_from_json(body);
        } catch (const ValidationError& e) {
            return bad_request(e);
        }
        auto entry = std::make_shared<Entry>(Session::create(std::move(cfg), new_id()));
        const std::string ts = clock_();
        {
            std::lock_guard lock(entry->mu);
            entry->log = dir_ / "sessions" / (entry->session.id() + ".jsonl");
            append(entry->log, event_created(entry->session, ts));
            append(dir_ / "index.jsonl",
                   Json{{"id", entry->session.id()}, {"ts", ts}, {"log", "sessions/" + entry->session.id() + ".jsonl"}});
        }
        Json out{{"id", entry->session.id()},
                 {"status", to_string(entry->session.status())},
                 {"estimate", estimate_json(entry->session, kDefaultEstimatePoints)}};
        {
            std::unique_lock lock(map_mu_);
            sessions_.emplace(entry->session.id(), entry);
        }
        return {201, std::move(out)};
    }

    /// GET /sessions/{id}/next-trial
    Reply next_trial(const std::string& id) {
        auto entry = find(id);
        if (!entry) return not_found(id);
        std::lock_guard lock(entry->mu);
        auto& s = entry->session;
        if (!s.active()) return conflict(s);
        const bool fresh = !s.pending().has_value();
        const Stimulus stim = s.propose();
        if (fresh) append(entry->log, event_proposed(s, stim, clock_()));
        return {200, {{"frequency_hz", stim.frequency_hz}, {"level_dbhl", stim.level_dbhl}}};
    }

    /// POST /sessions/{id}/responses
    Reply respond(const std::string& id, const Json& body) {
        std::vector<std::string> bad;
        if (!body.is_object()) return {400, {{"error", "expected a JSON object"}, {"fields", Json::array({"body"})}}};
        auto num = [&](const char* key) -> double {
            if (body.contains(key) && body[key].is_number()) return body[key].get<double>();
            bad.emplace_back(key);
            return 0.0;
        };
        const double freq = num("frequency_hz");
        const double level = num("level_dbhl");
        int label = 0;
        if (body.contains("label") && body["label"].is_number_integer()) label = body["label"].get<int>();
        if (label != 1 && label != -1) bad.emplace_back("label");
        if (!bad.empty()) return bad_request(ValidationError(std::move(bad)));

        auto entry = find(id);
        if (!entry) return not_found(id);
        std::lock_guard lock(entry->mu);
        auto& s = entry->session;
        if (!s.active()) return conflict(s);
        const Stimulus stim{freq, level};
        try {
            s.record(stim, ResponseLabel(label));
        } catch (const ValidationError& e) {
            return bad_request(e);
        }
        const std::string ts = clock_();
        for (const auto& ev : record_events(s, stim, ResponseLabel(label), ts)) append(entry->log, ev);
        return {200, {{"status", to_string(s.status())}, {"max_std", s.max_std()}, {"n_trials", s.history().size()}}};
    }

    /// GET /sessions/{id}/estimate?points=N
    Reply estimate(const std::string& id, std::optional<std::string> points) {
        std::size_t n = kDefaultEstimatePoints;
        if (points) {
            try {
                std::size_t used = 0;
                const long long v = std::stoll(*points, &used);
                if (used != points->size() || v < 2) throw std::invalid_argument("points");
                n = static_cast<std::size_t>(v);
            } catch (const std::exception&) {
                return bad_request(ValidationError({"points"}, "points must be an integer >= 2"));
            }
        }
        auto entry = find(id);
        if (!entry) return not_found(id);
        std::lock_guard lock(entry->mu);
        return {200, estimate_json(entry->session, n)};
    }

    /// Copy of a session's current state, for inspection.
    std::optional<Session> snapshot(const std::string& id) {
        auto entry = find(id);
        if (!entry) return std::nullopt;
        std::lock_guard lock(entry->mu);
        return entry->session;
    }

    std::vector<std::string> session_ids() const {
        std::shared_lock lock(map_mu_);
        std::vector<std::string> ids;
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        return ids;
    }

    std::filesystem::path log_path(const std::string& id) const { return dir_ / "sessions" / (id + ".jsonl"); }

    static Json estimate_json(const Session& s, std::size_t n) {
        const auto est = s.estimate(n);
        Json f = Json::array(), m = Json::array(), sd = Json::array();
        for (const auto& p : est.points) {
            f.push_back(p.frequency_hz);
            m.push_back(p.mean_dbhl);
            sd.push_back(p.std_dbhl);
        }
        Json trials = Json::array();
        for (const auto& t : s.history())
            trials.push_back({{"frequency_hz", t.frequency.value()}, {"level_dbhl", t.level_dbhl}, {"label", t.label.value()}});
        Json out{{"frequencies_hz", std::move(f)},
                 {"mean_dbhl", std::move(m)},
                 {"std_dbhl", std::move(sd)},
                 {"status", to_string(s.status())},
                 {"n_trials", s.history().size()},
                 {"max_std", s.max_std()},
                 {"mean_bald_history", s.mean_bald_history()},
                 {"trials", std::move(trials)}};
        if (s.pending()) out["pending"] = {{"frequency_hz", s.pending()->frequency_hz}, {"level_dbhl", s.pending()->level_dbhl}};
        return out;
    }

private:
    struct Entry {
        explicit Entry(Session s) : session(std::move(s)) {}
        std::mutex mu;
        Session session;
        std::filesystem::path log;
    };

    std::shared_ptr<Entry> find(const std::string& id) const {
        std::shared_lock lock(map_mu_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    void load() {
        std::ifstream index(dir_ / "index.jsonl");
        if (!index) return;
        for (const auto& rec : read_event_log(index)) {
            const auto id = rec.at("id").get<std::string>();
            const auto path = dir_ / rec.at("log").get<std::string>();
            std::ifstream log(path);
            if (!log) throw ContractError("missing session log " + path.string());
            auto entry = std::make_shared<Entry>(replay_session(read_event_log(log)));
            entry->log = path;
            sessions_.emplace(id, std::move(entry));
        }
    }

    std::string new_id() {
        static constexpr char hex[] = "0123456789abcdef";
        std::lock_guard lock(id_mu_);
        while (true) {
            std::string id;
            for (int i = 0; i < 16; ++i) id.push_back(hex[id_rng_() & 0xF]);
            std::shared_lock map_lock(map_mu_);
            if (!sessions_.contains(id) && !std::filesystem::exists(log_path(id))) return id;
        }
    }

    static void append(const std::filesystem::path& path, const Json& record) {
        std::ofstream out(path, std::ios::app);
        out << record.dump() << '\n';
        out.flush();
        if (!out) throw std::runtime_error("failed to append to " + path.string());
    }

    static Reply bad_request(const ValidationError& e) {
        return {400, {{"error", e.what()}, {"fields", e.fields()}}};
    }
    static Reply not_found(const std::string& id) { return {404, {{"error", "unknown session '" + id + "'"}}}; }
    static Reply conflict(const Session& s) {
        return {409, {{"error", "session is not active"}, {"status", to_string(s.status())}}};
    }

    std::filesystem::path dir_;
    TimestampFn clock_;
    mutable std::shared_mutex map_mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mutex id_mu_;
    std::mt19937_64 id_rng_{std::random_device{}()};
};

}  // namespace gppta
