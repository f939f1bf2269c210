#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nafreach/agent.hpp"
#include "nafreach/config.hpp"
#include "nafreach/env.hpp"

namespace nafreach {

// Deterministic sub-stream seeds: one master seed fans out to independent
// generators (net init, exploration, replay sampling, target placement).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Episode-level task parameters resolved against a concrete geometry
// (d_thres = 0 in the run config means 1% of the measured domain length).
EpisodeConfig episode_config_for(const RunConfig& cfg, const EnvGeometry& geom);

// Convenience: build the in-process environment a run config describes.
std::unique_ptr<LocalEnv> make_local_env(const RunConfig& cfg);

struct EpisodeRow {
    std::uint64_t episode = 0;     // 1-based
    std::uint64_t total_steps = 0; // global env steps at episode end
    double reward_sum = 0.0;
    double final_distance = 0.0;   // metres
    std::uint64_t length = 0;      // steps in this episode
    double loss_mean = 0.0;        // mean Bellman loss over updates (0 if none)
    double sigma = 0.0;            // exploration sigma in effect at episode end
};

struct TrainResult {
    AgentParams params;
    AgentOpt opt;
    std::vector<EpisodeRow> metrics;
    std::uint64_t steps_run = 0;
    std::string env_kind;
    std::uint64_t geometry_hash = 0;
};

// Runs the full learning loop against any environment (local or remote):
// per step select + explore -> env.step -> record -> sampled update; per
// episode end -> buffer flip + hard target update. Writes one metrics CSV row
// per finished episode (flushed immediately) and a checkpoint every 10k steps
// plus a final one.
TrainResult train(EnvInterface& env, const RunConfig& cfg);

struct EvalResult {
    double rmse = 0.0;             // sqrt(mean(final_distance^2)), metres
    std::vector<double> final_distances;
};

// Greedy policy (no exploration noise) over n episodes.
EvalResult evaluate(EnvInterface& env, const AgentParams& params, int n_episodes,
                    std::optional<std::uint64_t> env_seed = std::nullopt);

struct OodTrial {
    Vec3 target;
    double initial_distance = 0.0;
    double final_distance = 0.0;
    double mean_exc_nearest = 0.0;   // muscle whose anchor is closest to the target
    double mean_exc_farthest = 0.0;  // muscle whose anchor is farthest from it
};

struct OodReport {
    std::vector<OodTrial> trials;
    int improved = 0;  // trials with final < initial distance
};

// Places targets at scale x (domain length / 2) from the domain centroid and
// rolls out the greedy policy; the point should chase the target to the edge
// of what the muscles allow.
OodReport out_of_domain_test(LocalEnv& env, const AgentParams& params, double scale,
                             int n_trials, std::uint64_t seed);

// First-order exponential smoothing: s0 = v0, si = w*s(i-1) + (1-w)*vi.
std::vector<double> smooth_series(const std::vector<double>& values, double weight);

} // namespace nafreach
