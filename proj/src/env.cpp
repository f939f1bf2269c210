#include "nafreach/env.hpp"

#include <cmath>
#include <numbers>

#include "nafreach/checkpoint.hpp"
#include "nafreach/errors.hpp"

namespace nafreach {

double reward_fn(double d_prev, double d_next, int t, const EpisodeConfig& cfg) {
    if (t < 1) throw ContractViolation("reward: step index must be >= 1");
    if (!(d_prev >= 0.0) || !(d_next >= 0.0))
        throw ContractViolation("reward: distances must be non-negative");
    if (d_next <= cfg.d_thres) return cfg.omega;  // success clause dominates
    if (d_next >= d_prev) return -1.0;
    return 1.0 / t;
}

namespace {

void validate_episode_config(const EpisodeConfig& cfg, const MotionDomain& dom) {
    if (cfg.d_thres <= 0.0) throw ConfigError("episode: d_thres must be positive");
    if (cfg.omega <= 0.0) throw ConfigError("episode: omega must be positive");
    if (cfg.max_steps <= 0) throw ConfigError("episode: max_steps must be positive");
    if (cfg.d_thres >= dom.characteristic_length)
        throw ConfigError("episode: d_thres exceeds the motion domain");
    // success region must stay a small fraction of the motion domain
    double region, total;
    if (dom.dim == 2) {
        region = std::numbers::pi * cfg.d_thres * cfg.d_thres;
        total = 0.0;
        for (std::size_t i = 0; i < dom.hull.size(); ++i) {
            const Vec3& a = dom.hull[i];
            const Vec3& b = dom.hull[(i + 1) % dom.hull.size()];
            total += 0.5 * ((a.x - dom.centroid.x) * (b.y - dom.centroid.y) -
                            (a.y - dom.centroid.y) * (b.x - dom.centroid.x));
        }
        total = std::abs(total) * dom.shrink * dom.shrink;
    } else {
        region = 4.0 / 3.0 * std::numbers::pi * cfg.d_thres * cfg.d_thres * cfg.d_thres;
        const Vec3 ext = dom.aabb_hi - dom.aabb_lo;
        total = std::abs(ext.x * ext.y * ext.z) * dom.shrink * dom.shrink * dom.shrink;
    }
    if (region > 0.01 * total)
        throw ConfigError("episode: success region exceeds 1% of the motion domain");
}

} // namespace

LocalEnv::LocalEnv(const EnvGeometry& geom, const EpisodeConfig& cfg, std::uint64_t seed)
    : geom_(geom), cfg_(cfg), domain_(estimate_motion_domain(geom)), rng_(seed) {
    geom_.validate();
    validate_episode_config(cfg_, domain_);
    point_.excitations.assign(geom_.muscles.size(), 0.0);
}

EnvSpecInfo LocalEnv::spec() const {
    EnvSpecInfo s;
    s.action_dim = geom_.n_muscles();
    s.state_dim = 3;
    s.d_thres = cfg_.d_thres;
    s.max_steps = cfg_.max_steps;
    s.domain_length = domain_.characteristic_length;
    s.env_kind = geometry_name(geom_);
    s.geometry_hash = geometry_hash(geom_);
    return s;
}

std::array<double, 3> LocalEnv::normalized_target() const {
    const double inv = 2.0 / domain_.characteristic_length;
    if (geom_.dim == 2) return {target_.x * inv, 0.0, target_.y * inv};
    return {target_.x * inv, target_.y * inv, target_.z * inv};
}

EnvObservation LocalEnv::begin_episode(const Vec3& target) {
    if (!(cfg_.persist_point && started_)) {
        point_.position = Vec3{0, 0, 0};
        point_.velocity = Vec3{0, 0, 0};
        point_.excitations.assign(geom_.muscles.size(), 0.0);
        point_.sim_time = 0.0;
    }
    started_ = true;
    target_ = target;
    t_ = 0;
    done_ = false;
    EnvObservation obs;
    obs.state = normalized_target();
    obs.reward = 0.0;
    obs.done = false;
    obs.distance = distance(point_.position, target_);
    obs.t = 0;
    return obs;
}

EnvObservation LocalEnv::reset(std::optional<std::uint64_t> seed) {
    if (seed) rng_ = Rng(*seed);
    // resample until the target starts outside the success ball
    Vec3 target = domain_.sample_target(rng_);
    const Vec3 start = (cfg_.persist_point && started_) ? point_.position : Vec3{0, 0, 0};
    for (int tries = 0; tries < 10000 && distance(start, target) <= cfg_.d_thres; ++tries)
        target = domain_.sample_target(rng_);
    if (distance(start, target) <= cfg_.d_thres)
        throw ConfigError("episode: cannot place a target outside the success ball");
    return begin_episode(target);
}

EnvObservation LocalEnv::reset_to(const Vec3& target) {
    if (!target.finite()) throw ContractViolation("episode: non-finite target");
    return begin_episode(target);
}

EnvObservation LocalEnv::step(const std::vector<double>& action) {
    if (done_) throw ContractViolation("episode: step after done (reset first)");
    const double d_prev = distance(point_.position, target_);
    point_ = step_physics(point_, action, kControlDt, kSubstepsPerControl, geom_);
    const double d_next = distance(point_.position, target_);
    ++t_;
    EnvObservation obs;
    obs.state = normalized_target();
    obs.reward = reward_fn(d_prev, d_next, t_, cfg_);
    obs.done = (d_next <= cfg_.d_thres) || (t_ >= cfg_.max_steps);
    obs.distance = d_next;
    obs.t = t_;
    done_ = obs.done;
    return obs;
}

EnvGeometry geometry_by_name(const std::string& name) {
    if (name == "circle2d-6") return make_circle_geometry(6);
    if (name == "circle2d-14") return make_circle_geometry(14);
    if (name == "circle2d-24") return make_circle_geometry(24);
    if (name == "cuboid3d-8") return make_cuboid_geometry();
    throw ConfigError("unknown environment kind: " + name);
}

} // namespace nafreach
