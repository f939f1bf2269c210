#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nafreach/checkpoint.hpp"
#include "nafreach/config.hpp"
#include "nafreach/env.hpp"
#include "nafreach/errors.hpp"
#include "nafreach/server.hpp"
#include "nafreach/train.hpp"

using namespace nafreach;
using nlohmann::json;

namespace {

// serve() in a background thread on an ephemeral port; joins once the single
// session ends
struct TestServer {
    std::thread thread;
    int port = 0;

    explicit TestServer(const EnvGeometry& geom, const EpisodeConfig& ep) {
        std::promise<int> port_promise;
        auto port_future = port_promise.get_future();
        ServeOptions opts;
        opts.port = 0;
        opts.once = true;
        opts.on_listening = [&](int p) { port_promise.set_value(p); };
        thread = std::thread([geom, ep, opts] { serve(geom, ep, opts); });
        port = port_future.get();
    }
    ~TestServer() {
        if (thread.joinable()) thread.join();
    }
};

EpisodeConfig default_episode(const EnvGeometry& geom) {
    RunConfig rc;
    return episode_config_for(rc, geom);
}

std::string repo_path(const std::string& rel) { return std::string(SOURCE_DIR) + "/" + rel; }

} // namespace

TEST_CASE("spec request reports the environment contract") {
    const EnvGeometry geom = make_circle_geometry(6);
    TestServer server(geom, default_episode(geom));
    RemoteEnv env("127.0.0.1", server.port);

    const EnvSpecInfo s = env.spec();
    CHECK(s.action_dim == 6);
    CHECK(s.state_dim == 3);
    CHECK(s.max_steps == 200);
    CHECK(s.d_thres == doctest::Approx(0.01 * s.domain_length).epsilon(1e-12));
    CHECK(s.env_kind == "circle2d-6");
    CHECK(s.geometry_hash == geometry_hash(geom));

    const json raw = json::parse(env.roundtrip(R"({"cmd":"spec"})"));
    CHECK(raw.at("ok") == true);
    CHECK(raw.at("proto") == 1);
    env.close();
}

TEST_CASE("scripted zero-action session runs to the step cap") {
    const EnvGeometry geom = make_circle_geometry(6);
    TestServer server(geom, default_episode(geom));
    RemoteEnv env("127.0.0.1", server.port);

    EnvObservation obs = env.reset(11);
    CHECK_FALSE(obs.done);
    const std::vector<double> zeros(6, 0.0);
    for (int t = 1; t <= 200; ++t) {
        obs = env.step(zeros);
        CHECK(obs.t == t);
        CHECK(obs.done == (t == 200));
    }
    env.close();
}

TEST_CASE("malformed traffic is answered without killing the session") {
    const EnvGeometry geom = make_circle_geometry(6);
    TestServer server(geom, default_episode(geom));
    RemoteEnv env("127.0.0.1", server.port);

    SUBCASE("garbage line then a valid reset") {
        const json bad = json::parse(env.roundtrip("this is not json"));
        CHECK(bad.at("ok") == false);
        CHECK(bad.at("error") == "parse");
        const json good = json::parse(env.roundtrip(R"({"cmd":"reset","seed":5})"));
        CHECK(good.at("ok") == true);
        CHECK(good.at("t") == 0);
    }
    SUBCASE("unknown command") {
        const json r = json::parse(env.roundtrip(R"({"cmd":"warp"})"));
        CHECK(r.at("ok") == false);
        CHECK(r.at("error") == "parse");
    }
    SUBCASE("non-numeric action entry") {
        env.reset(5);
        const json r =
            json::parse(env.roundtrip(R"({"cmd":"step","action":[0,0,0,null,0,0]})"));
        CHECK(r.at("ok") == false);
        CHECK(r.at("error") == "parse");
    }
    SUBCASE("wrong action length") {
        env.reset(5);
        const json r = json::parse(env.roundtrip(R"({"cmd":"step","action":[0.5,0.5]})"));
        CHECK(r.at("ok") == false);
        CHECK(r.at("error") == "dim");
    }
    SUBCASE("step before any reset") {
        const json r =
            json::parse(env.roundtrip(R"({"cmd":"step","action":[0,0,0,0,0,0]})"));
        CHECK(r.at("ok") == false);
        CHECK(r.at("error") == "episode-done");
    }
    SUBCASE("step after the episode finished") {
        env.reset(5);
        const std::vector<double> zeros(6, 0.0);
        EnvObservation obs;
        do {
            obs = env.step(zeros);
        } while (!obs.done);
        const json r =
            json::parse(env.roundtrip(R"({"cmd":"step","action":[0,0,0,0,0,0]})"));
        CHECK(r.at("ok") == false);
        CHECK(r.at("error") == "episode-done");
        const json again = json::parse(env.roundtrip(R"({"cmd":"reset"})"));
        CHECK(again.at("ok") == true);
    }
    env.close();
}

TEST_CASE("ten thousand tagged messages come back in order") {
    const EnvGeometry geom = make_circle_geometry(6);
    TestServer server(geom, default_episode(geom));
    RemoteEnv env("127.0.0.1", server.port);

    bool need_reset = true;
    for (int i = 0; i < 10000; ++i) {
        json req;
        if (need_reset) {
            req = {{"cmd", "reset"}, {"seed", 1000 + i}, {"tag", i}};
        } else {
            req = {{"cmd", "step"}, {"action", {0.9, 0.0, 0.0, 0.0, 0.0, 0.0}}, {"tag", i}};
        }
        const json r = json::parse(env.roundtrip(req.dump()));
        REQUIRE(r.at("ok") == true);
        REQUIRE(r.at("tag") == i);
        need_reset = r.at("done").get<bool>();
    }
    env.close();
}

TEST_CASE("loopback rollout equals the in-process rollout bit for bit") {
    const EnvGeometry geom = make_circle_geometry(6);
    const EpisodeConfig ep = default_episode(geom);
    TestServer server(geom, ep);
    RemoteEnv remote("127.0.0.1", server.port);
    LocalEnv local(geom, ep, 0);

    // deterministic scripted policy: excitation pattern cycles with t
    const auto action_at = [](int t) {
        std::vector<double> a(6, 0.0);
        a[static_cast<std::size_t>(t) % 6] = 0.75;
        a[static_cast<std::size_t>(t + 3) % 6] = 0.25;
        return a;
    };

    for (std::uint64_t seed : {42ull, 43ull}) {
        EnvObservation lo = local.reset(seed);
        EnvObservation ro = remote.reset(seed);
        REQUIRE(lo.state == ro.state);
        for (int t = 0; !lo.done; ++t) {
            lo = local.step(action_at(t));
            ro = remote.step(action_at(t));
            REQUIRE(lo.reward == ro.reward);
            REQUIRE(lo.distance == ro.distance);
            REQUIRE(lo.done == ro.done);
            REQUIRE(lo.t == ro.t);
            REQUIRE(lo.state == ro.state);
        }
    }
    remote.close();
}

TEST_CASE("training through the loopback transport reproduces in-process metrics") {
    const EnvGeometry geom = make_circle_geometry(6);

    RunConfig cfg;
    cfg.env = "circle2d-6";
    cfg.total_steps = 600;
    cfg.warmup_steps = 100;
    cfg.batch_size = 16;
    cfg.hidden = {16, 16};
    cfg.seed = 9;

    RunConfig local_cfg = cfg;
    local_cfg.checkpoint_path = "proto_local.ckpt";
    local_cfg.metrics_path = "proto_local.csv";
    LocalEnv local(geom, episode_config_for(cfg, geom), 0);
    train(local, local_cfg);

    RunConfig remote_cfg = cfg;
    remote_cfg.checkpoint_path = "proto_remote.ckpt";
    remote_cfg.metrics_path = "proto_remote.csv";
    {
        TestServer server(geom, episode_config_for(cfg, geom));
        RemoteEnv remote("127.0.0.1", server.port);
        train(remote, remote_cfg);
        remote.close();
    }

    const auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        REQUIRE(f.good());
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    const std::string a = slurp("proto_local.csv");
    const std::string b = slurp("proto_remote.csv");
    CHECK(a == b);
    CHECK(a.find("episode,") == 0);
}

TEST_CASE("client surfaces a lost connection instead of hanging") {
    // hand-rolled listener that accepts, reads a little, then slams the door
    const int listener = socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(listener >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    REQUIRE(listen(listener, 1) == 0);
    socklen_t len = sizeof(addr);
    getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
    const int port = ntohs(addr.sin_port);

    std::thread rude([&] {
        const int fd = accept(listener, nullptr, nullptr);
        char buf[256];
        recv(fd, buf, sizeof(buf), 0);  // swallow the spec request
        // valid spec response so the client constructor succeeds
        const std::string spec =
            R"({"ok":true,"proto":1,"action_dim":6,"state_dim":3,"d_thres":0.001,)"
            R"("max_steps":200,"domain_length":0.17,"env_kind":"circle2d-6","geometry_hash":1})"
            "\n";
        send(fd, spec.data(), spec.size(), MSG_NOSIGNAL);
        recv(fd, buf, sizeof(buf), 0);  // swallow the next request...
        close(fd);                      // ...and vanish without answering
    });

    RemoteEnv env("127.0.0.1", port);
    CHECK(env.spec().action_dim == 6);
    CHECK_THROWS_AS(env.reset(1), ProtocolError);
    rude.join();
    close(listener);
}

TEST_CASE("golden transcript replays byte for byte") {
    const EnvGeometry geom = make_circle_geometry(6);
    TestServer server(geom, default_episode(geom));
    RemoteEnv env("127.0.0.1", server.port);

    // a fixed seeded session touching every command and error kind
    const std::vector<std::string> script = {
        R"({"cmd":"spec"})",
        R"({"cmd":"reset","seed":2024})",
        R"({"cmd":"step","action":[1.0,0.0,0.0,0.0,0.0,0.0],"tag":1})",
        R"({"cmd":"step","action":[0.0,0.5,0.0,0.0,0.5,0.0],"tag":2})",
        R"({"cmd":"step","action":[0.25,0.25,0.25,0.25,0.25,0.25]})",
        R"(not even json)",
        R"({"cmd":"step","action":[0.1,0.2]})",
        R"({"cmd":"reset","seed":77})",
        R"({"cmd":"step","action":[0.0,0.0,1.0,0.0,0.0,0.0]})",
        R"({"cmd":"close"})",
    };

    const std::string path = repo_path("tests/data/golden_transcript.jsonl");
    if (std::getenv("GOLDEN_REGEN") != nullptr) {
        std::ofstream out(path, std::ios::binary);
        REQUIRE(out.good());
        for (const auto& req : script) out << req << "\n" << env.roundtrip(req) << "\n";
        MESSAGE("regenerated ", path);
        return;
    }

    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing ", path, " (run with GOLDEN_REGEN=1 to create)");
    std::string expected_req, expected_resp;
    for (const auto& req : script) {
        REQUIRE(std::getline(in, expected_req));
        REQUIRE(std::getline(in, expected_resp));
        REQUIRE(expected_req == req);
        CHECK(env.roundtrip(req) == expected_resp);
    }
}
