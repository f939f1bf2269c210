#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "nafreach/env.hpp"

namespace nafreach {

// Newline-delimited JSON over TCP. Requests: {"cmd":"spec"},
// {"cmd":"reset","seed":u64?}, {"cmd":"step","action":[...]},
// {"cmd":"close"}. Responses: {"ok":true,...} or {"ok":false,"error":kind}
// with kind in {"parse","dim","episode-done"}. An optional numeric "tag" in a
// request is echoed back in its response so clients can detect reordering.
inline constexpr int kDefaultPort = 7788;
inline constexpr int kProtocolVersion = 1;
inline constexpr int kIoTimeoutSeconds = 30;

struct ServeOptions {
    int port = kDefaultPort;  // 0 = ephemeral, reported via on_listening
    bool once = false;        // exit after the first session closes
    std::function<void(int)> on_listening;  // called with the bound port
};

// Serves sessions sequentially, each owning a fresh environment built from
// the given geometry and episode parameters; blocks until stopped (or after
// one session with once=true).
void serve(const EnvGeometry& geom, const EpisodeConfig& ep, const ServeOptions& opts);

// Client-side proxy: the same episodic contract as LocalEnv, over a socket.
// Connection loss or timeout surfaces as ProtocolError.
class RemoteEnv : public EnvInterface {
  public:
    RemoteEnv(const std::string& host, int port);
    ~RemoteEnv() override;
    RemoteEnv(const RemoteEnv&) = delete;
    RemoteEnv& operator=(const RemoteEnv&) = delete;

    EnvSpecInfo spec() const override;
    EnvObservation reset(std::optional<std::uint64_t> seed = std::nullopt) override;
    EnvObservation step(const std::vector<double>& action) override;

    // polite shutdown; also called by the destructor
    void close();

    // raw request/response round trip (newline appended); exposed for
    // protocol conformance tests
    std::string roundtrip(const std::string& request_line);

  private:
    EnvObservation parse_observation(const std::string& line);

    int fd_ = -1;
    EnvSpecInfo spec_;
    std::string inbox_;
};

} // namespace nafreach
