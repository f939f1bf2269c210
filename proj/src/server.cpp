#include "nafreach/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <string>

#include <json.hpp>

#include "nafreach/errors.hpp"

namespace nafreach {

namespace {

using nlohmann::json;

void set_io_timeouts(int fd) {
    timeval tv{};
    tv.tv_sec = kIoTimeoutSeconds;
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    const int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

// pulls one '\n'-terminated line out of the buffer, reading more as needed;
// empty optional on orderly shutdown, timeout, or error
std::optional<std::string> recv_line(int fd, std::string& inbox) {
    for (;;) {
        const std::size_t nl = inbox.find('\n');
        if (nl != std::string::npos) {
            std::string line = inbox.substr(0, nl);
            inbox.erase(0, nl + 1);
            return line;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) return std::nullopt;
        inbox.append(chunk, static_cast<std::size_t>(n));
    }
}

json observation_payload(const EnvObservation& obs) {
    json r;
    r["ok"] = true;
    r["state"] = obs.state;
    r["reward"] = obs.reward;
    r["done"] = obs.done;
    r["distance"] = obs.distance;
    r["t"] = obs.t;
    return r;
}

// one request -> exactly one response line; returns false when the session
// should end (close command)
bool handle_request(LocalEnv& env, bool& episode_active, const std::string& line,
                    std::string& response) {
    json reply;
    bool keep_going = true;

    json req;
    bool parsed = false;
    try {
        req = json::parse(line);
        parsed = req.is_object() && req.contains("cmd") && req["cmd"].is_string();
    } catch (const json::exception&) {
        parsed = false;
    }

    if (!parsed) {
        reply = {{"ok", false}, {"error", "parse"}};
        response = reply.dump() + "\n";
        return true;
    }

    const std::string cmd = req["cmd"].get<std::string>();
    if (cmd == "spec") {
        const EnvSpecInfo s = env.spec();
        reply["ok"] = true;
        reply["proto"] = kProtocolVersion;
        reply["action_dim"] = s.action_dim;
        reply["state_dim"] = s.state_dim;
        reply["d_thres"] = s.d_thres;
        reply["max_steps"] = s.max_steps;
        reply["domain_length"] = s.domain_length;
        reply["env_kind"] = s.env_kind;
        reply["geometry_hash"] = s.geometry_hash;
    } else if (cmd == "reset") {
        std::optional<std::uint64_t> seed;
        if (req.contains("seed")) {
            if (!req["seed"].is_number_unsigned()) {
                reply = {{"ok", false}, {"error", "parse"}};
                response = reply.dump() + "\n";
                return true;
            }
            seed = req["seed"].get<std::uint64_t>();
        }
        reply = observation_payload(env.reset(seed));
        episode_active = true;
    } else if (cmd == "step") {
        if (!episode_active) {
            reply = {{"ok", false}, {"error", "episode-done"}};
        } else if (!req.contains("action") || !req["action"].is_array() ||
                   static_cast<int>(req["action"].size()) != env.spec().action_dim) {
            reply = {{"ok", false}, {"error", "dim"}};
        } else {
            std::vector<double> action;
            action.reserve(req["action"].size());
            bool numeric = true;
            for (const auto& v : req["action"]) {
                if (!v.is_number() || !std::isfinite(v.get<double>())) {
                    numeric = false;
                    break;
                }
                action.push_back(v.get<double>());
            }
            if (!numeric) {
                reply = {{"ok", false}, {"error", "parse"}};
            } else {
                const EnvObservation obs = env.step(action);
                reply = observation_payload(obs);
                if (obs.done) episode_active = false;
            }
        }
    } else if (cmd == "close") {
        reply["ok"] = true;
        keep_going = false;
    } else {
        reply = {{"ok", false}, {"error", "parse"}};
    }

    if (req.contains("tag") && req["tag"].is_number()) reply["tag"] = req["tag"];
    response = reply.dump() + "\n";
    return keep_going;
}

void run_session(int fd, const EnvGeometry& geom, const EpisodeConfig& ep) {
    LocalEnv env(geom, ep, 0);  // a reset carrying a seed makes runs reproducible
    bool episode_active = false;
    std::string inbox;
    for (;;) {
        const auto line = recv_line(fd, inbox);
        if (!line) break;  // disconnect or timeout
        if (line->empty()) continue;
        std::string response;
        const bool keep_going = handle_request(env, episode_active, *line, response);
        if (!send_all(fd, response)) break;
        if (!keep_going) break;
    }
}

} // namespace

void serve(const EnvGeometry& geom, const EpisodeConfig& ep, const ServeOptions& opts) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw ProtocolError("serve: cannot create socket");
    const int one = 1;
    setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(opts.port));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(listener);
        throw ProtocolError("serve: cannot bind port " + std::to_string(opts.port));
    }
    if (::listen(listener, 1) < 0) {
        ::close(listener);
        throw ProtocolError("serve: cannot listen");
    }

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    getsockname(listener, reinterpret_cast<sockaddr*>(&bound), &len);
    if (opts.on_listening) opts.on_listening(ntohs(bound.sin_port));

    for (;;) {
        const int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            ::close(listener);
            throw ProtocolError("serve: accept failed");
        }
        set_io_timeouts(fd);
        run_session(fd, geom, ep);
        ::close(fd);
        if (opts.once) break;
    }
    ::close(listener);
}

RemoteEnv::RemoteEnv(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw ProtocolError("client: cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError("client: bad address " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError("client: cannot connect to " + host + ":" + std::to_string(port));
    }
    set_io_timeouts(fd_);

    const std::string line = roundtrip(R"({"cmd":"spec"})");
    json r;
    try {
        r = json::parse(line);
    } catch (const json::exception&) {
        throw ProtocolError("client: malformed spec response");
    }
    if (!r.value("ok", false)) throw ProtocolError("client: server refused spec request");
    spec_.action_dim = r.at("action_dim").get<int>();
    spec_.state_dim = r.at("state_dim").get<int>();
    spec_.d_thres = r.at("d_thres").get<double>();
    spec_.max_steps = r.at("max_steps").get<int>();
    spec_.domain_length = r.at("domain_length").get<double>();
    spec_.env_kind = r.value("env_kind", std::string{});
    spec_.geometry_hash = r.value("geometry_hash", std::uint64_t{0});
}

RemoteEnv::~RemoteEnv() {
    try {
        close();
    } catch (...) {
        // destructor stays silent on a dead connection
    }
}

void RemoteEnv::close() {
    if (fd_ < 0) return;
    send_all(fd_, std::string(R"({"cmd":"close"})") + "\n");
    ::close(fd_);
    fd_ = -1;
}

std::string RemoteEnv::roundtrip(const std::string& request_line) {
    if (fd_ < 0) throw ProtocolError("client: connection is closed");
    if (!send_all(fd_, request_line + "\n")) throw ProtocolError("client: send failed");
    const auto line = recv_line(fd_, inbox_);
    if (!line) throw ProtocolError("client: connection lost or timed out");
    return *line;
}

EnvSpecInfo RemoteEnv::spec() const { return spec_; }

EnvObservation RemoteEnv::parse_observation(const std::string& line) {
    json r;
    try {
        r = json::parse(line);
    } catch (const json::exception&) {
        throw ProtocolError("client: malformed response");
    }
    if (!r.value("ok", false))
        throw ProtocolError("client: server error: " + r.value("error", std::string("unknown")));
    EnvObservation obs;
    const auto& st = r.at("state");
    if (!st.is_array() || st.size() != 3) throw ProtocolError("client: bad state in response");
    for (int i = 0; i < 3; ++i) obs.state[static_cast<std::size_t>(i)] = st[i].get<double>();
    obs.reward = r.at("reward").get<double>();
    obs.done = r.at("done").get<bool>();
    obs.distance = r.at("distance").get<double>();
    obs.t = r.at("t").get<int>();
    return obs;
}

EnvObservation RemoteEnv::reset(std::optional<std::uint64_t> seed) {
    json req;
    req["cmd"] = "reset";
    if (seed) req["seed"] = *seed;
    return parse_observation(roundtrip(req.dump()));
}

EnvObservation RemoteEnv::step(const std::vector<double>& action) {
    json req;
    req["cmd"] = "step";
    req["action"] = action;
    return parse_observation(roundtrip(req.dump()));
}

} // namespace nafreach
