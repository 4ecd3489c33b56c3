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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "gppta/http.hpp"
#include "gppta/service.hpp"

using namespace gppta;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::path(GPPTA_TEST_TMP) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string fixed_clock() { return "2026-01-01T00:00:00.000Z"; }

}  // namespace

TEST(Service, CreateValidates) {
    SessionService svc(fresh_dir("create"), fixed_clock);
    const auto ok = svc.create(Json::object());
    EXPECT_EQ(ok.status, 201);
    EXPECT_EQ(ok.body["status"], "active");
    EXPECT_EQ(ok.body["estimate"]["mean_dbhl"].size(), 64u);
    const auto other = svc.create(Json{{"sigma_p", 3.0}});
    EXPECT_NE(ok.body["id"], other.body["id"]);

    const auto bad = svc.create(Json{{"sigma_p", -1.0}});
    EXPECT_EQ(bad.status, 400);
    EXPECT_EQ(bad.body["fields"], Json::array({"sigma_p"}));
    EXPECT_EQ(svc.create(Json::array()).status, 400);
    EXPECT_EQ(svc.session_ids().size(), 2u);
}

TEST(Service, TrialFlow) {
    SessionService svc(fresh_dir("flow"), fixed_clock);
    const std::string id = svc.create(Json{{"max_trials", 2}}).body["id"];
    const fs::path log = svc.log_path(id);

    const auto a = svc.next_trial(id);
    const std::string after_first = slurp(log);
    const auto b = svc.next_trial(id);
    EXPECT_EQ(a.status, 200);
    EXPECT_EQ(a.body, b.body);
    EXPECT_EQ(slurp(log), after_first);  // repeated GET logs nothing new
    EXPECT_NEAR(a.body["frequency_hz"].get<double>(), 250.0, 1e-9);

    EXPECT_EQ(svc.respond(id, Json{{"frequency_hz", 1000.0}, {"level_dbhl", 20.0}, {"label", 0}}).status, 400);
    EXPECT_EQ(svc.respond(id, Json{{"frequency_hz", 1000.0}, {"level_dbhl", 20.0}, {"label", 1.5}}).status, 400);
    const auto missing = svc.respond(id, Json{{"label", 1}});
    EXPECT_EQ(missing.status, 400);
    EXPECT_EQ(missing.body["fields"], Json::array({"frequency_hz", "level_dbhl"}));
    EXPECT_EQ(svc.respond(id, Json{{"frequency_hz", 50.0}, {"level_dbhl", 20.0}, {"label", 1}}).status, 400);

    const auto r1 = svc.respond(id, Json{{"frequency_hz", a.body["frequency_hz"]}, {"level_dbhl", a.body["level_dbhl"]}, {"label", 1}});
    EXPECT_EQ(r1.status, 200);
    EXPECT_EQ(r1.body["n_trials"], 1);
    EXPECT_EQ(r1.body["status"], "active");
    const auto r2 = svc.respond(id, Json{{"frequency_hz", 3000.0}, {"level_dbhl", 40.0}, {"label", -1}});
    EXPECT_EQ(r2.body["status"], "stopped_max_trials");

    const std::string stopped = slurp(log);
    const auto c = svc.next_trial(id);
    EXPECT_EQ(c.status, 409);
    EXPECT_EQ(c.body["status"], "stopped_max_trials");
    EXPECT_EQ(svc.respond(id, Json{{"frequency_hz", 3000.0}, {"level_dbhl", 40.0}, {"label", -1}}).status, 409);
    EXPECT_EQ(slurp(log), stopped);

    EXPECT_EQ(svc.next_trial("nope").status, 404);
    EXPECT_EQ(svc.estimate("nope", std::nullopt).status, 404);
}

TEST(Service, EstimatePoints) {
    SessionService svc(fresh_dir("estimate"), fixed_clock);
    const std::string id = svc.create(Json::object()).body["id"];
    EXPECT_EQ(svc.estimate(id, "1").status, 400);
    EXPECT_EQ(svc.estimate(id, "abc").status, 400);
    const auto two = svc.estimate(id, "2");
    ASSERT_EQ(two.status, 200);
    EXPECT_EQ(two.body["frequencies_hz"], Json::array({250.0, 8000.0}));
    EXPECT_EQ(svc.estimate(id, std::nullopt).body["std_dbhl"].size(), 64u);
}

TEST(Service, RestartReplaysLogsBitForBit) {
    const fs::path dir = fresh_dir("restart");
    std::string id;
    Json before;
    {
        SessionService svc(dir, fixed_clock);
        id = svc.create(Json{{"max_trials", 12}}).body["id"];
        for (int i = 0; i < 7; ++i) {
            const auto p = svc.next_trial(id).body;
            svc.respond(id, Json{{"frequency_hz", p["frequency_hz"]}, {"level_dbhl", p["level_dbhl"]}, {"label", i % 3 ? 1 : -1}});
        }
        svc.next_trial(id);  // leave a pending proposal
        before = svc.estimate(id, "97").body;
    }
    SessionService again(dir, fixed_clock);
    const auto after = again.estimate(id, "97").body;
    EXPECT_EQ(after.dump(), before.dump());
    const auto s = again.snapshot(id);
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(s->history().size(), 7u);
    EXPECT_TRUE(s->pending().has_value());
}

TEST(Service, ConcurrentResponsesAreSerialized) {
    SessionService svc(fresh_dir("concurrent"), fixed_clock);
    const std::string id = svc.create(Json::object()).body["id"];
    std::thread t1([&] { svc.respond(id, Json{{"frequency_hz", 1000.0}, {"level_dbhl", 20.0}, {"label", 1}}); });
    std::thread t2([&] { svc.respond(id, Json{{"frequency_hz", 4000.0}, {"level_dbhl", 40.0}, {"label", -1}}); });
    t1.join();
    t2.join();
    EXPECT_EQ(svc.snapshot(id)->history().size(), 2u);
    std::ifstream log(svc.log_path(id));
    const auto events = read_event_log(log);
    EXPECT_EQ(std::count_if(events.begin(), events.end(), [](const Json& e) { return e["event"] == "recorded"; }), 2);
}

TEST(Service, HttpEndpoints) {
    SessionService svc(fresh_dir("http"), fixed_clock);
    httplib::Server server;
    mount_routes(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto created = cli.Post("/sessions", R"({"max_trials": 3})", "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    const std::string id = Json::parse(created->body)["id"];

    auto next = cli.Get("/sessions/" + id + "/next-trial");
    ASSERT_TRUE(next);
    EXPECT_EQ(next->status, 200);
    const auto stim = Json::parse(next->body);
    auto resp = cli.Post("/sessions/" + id + "/responses",
                         Json{{"frequency_hz", stim["frequency_hz"]}, {"level_dbhl", stim["level_dbhl"]}, {"label", 1}}.dump(),
                         "application/json");
    ASSERT_TRUE(resp);
    EXPECT_EQ(resp->status, 200);
    EXPECT_EQ(Json::parse(resp->body)["n_trials"], 1);

    auto est = cli.Get("/sessions/" + id + "/estimate?points=5");
    ASSERT_TRUE(est);
    EXPECT_EQ(Json::parse(est->body)["mean_dbhl"].size(), 5u);
    EXPECT_EQ(cli.Get("/sessions/" + id + "/estimate?points=1")->status, 400);
    EXPECT_EQ(cli.Post("/sessions", "{not json", "application/json")->status, 400);
    EXPECT_EQ(cli.Get("/sessions/zzz/next-trial")->status, 404);

    server.stop();
    th.join();
}
