#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nafreach/rng.hpp"
#include "nafreach/sim.hpp"

namespace nafreach {

// Episode-level task parameters around the simulator.
struct EpisodeConfig {
    double d_thres = 0.0;    // success radius, metres; must be > 0
    double omega = 10.0;     // success reward, dominates sum of step rewards
    int max_steps = 200;     // hard episode cap
    bool persist_point = false;  // keep the point where it stopped across resets
};

// Piecewise step reward: success dominates, then worse-or-equal, then 1/t.
// t is the within-episode step index starting at 1.
double reward_fn(double d_prev, double d_next, int t, const EpisodeConfig& cfg);

struct EnvObservation {
    std::array<double, 3> state{};  // normalized target; slot 1 is zero in 2D
    double reward = 0.0;
    bool done = false;
    double distance = 0.0;  // |P - T| in metres after the step
    int t = 0;              // step index within the episode
};

struct EnvSpecInfo {
    int action_dim = 0;
    int state_dim = 3;
    double d_thres = 0.0;
    int max_steps = 0;
    double domain_length = 0.0;  // characteristic length of the motion domain
    std::string env_kind;        // geometry name, e.g. "circle2d-6"
    std::uint64_t geometry_hash = 0;
};

// Transport-agnostic episodic environment. The training loop only sees this,
// so a remote proxy can stand in for the in-process simulator.
class EnvInterface {
public:
    virtual ~EnvInterface() = default;
    virtual EnvSpecInfo spec() const = 0;
    // reseeds the target sampler when a seed is given, then starts an episode
    virtual EnvObservation reset(std::optional<std::uint64_t> seed = std::nullopt) = 0;
    virtual EnvObservation step(const std::vector<double>& action) = 0;
};

// In-process environment around the muscle simulator. The observation is the
// target position only (the point-mass position is deliberately excluded),
// scaled by half the domain length so coordinates land roughly in [-1, 1].
class LocalEnv : public EnvInterface {
public:
    LocalEnv(const EnvGeometry& geom, const EpisodeConfig& cfg, std::uint64_t seed);

    EnvSpecInfo spec() const override;
    EnvObservation reset(std::optional<std::uint64_t> seed = std::nullopt) override;
    EnvObservation step(const std::vector<double>& action) override;

    // start an episode on an explicit target (demos, out-of-domain probes);
    // unlike reset, the target may sit outside the domain or inside the
    // success ball, and it is not resampled
    EnvObservation reset_to(const Vec3& target);

    const Vec3& target() const { return target_; }
    const SimState& point_state() const { return point_; }
    const EnvGeometry& geometry() const { return geom_; }
    const MotionDomain& domain() const { return domain_; }

private:
    EnvObservation begin_episode(const Vec3& target);
    std::array<double, 3> normalized_target() const;

    EnvGeometry geom_;
    EpisodeConfig cfg_;
    MotionDomain domain_;
    Rng rng_;
    SimState point_;
    Vec3 target_;
    int t_ = 0;
    bool done_ = true;
    bool started_ = false;
};

// inverse of geometry_name: "circle2d-6" etc -> geometry
EnvGeometry geometry_by_name(const std::string& name);

} // namespace nafreach
