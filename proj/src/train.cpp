#include "nafreach/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "nafreach/checkpoint.hpp"
#include "nafreach/errors.hpp"
#include "nafreach/exploration.hpp"
#include "nafreach/replay.hpp"

namespace nafreach {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 over master + stream increment
    std::uint64_t z = master + (stream + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t kStreamInit = 0;
constexpr std::uint64_t kStreamNoise = 1;
constexpr std::uint64_t kStreamSample = 2;
constexpr std::uint64_t kStreamEnv = 3;
constexpr std::uint64_t kCheckpointEvery = 10000;

void write_metrics_header(std::ofstream& out) {
    out << "episode,total_steps,reward_sum,final_distance,length,loss_mean,sigma\n";
    out.flush();
}

void write_metrics_row(std::ofstream& out, const EpisodeRow& row) {
    out.precision(17);
    out << row.episode << ',' << row.total_steps << ',' << row.reward_sum << ','
        << row.final_distance << ',' << row.length << ',' << row.loss_mean << ',' << row.sigma
        << "\n";
    out.flush();  // one complete row per episode survives a crash
}

} // namespace

EpisodeConfig episode_config_for(const RunConfig& cfg, const EnvGeometry& geom) {
    EpisodeConfig ep;
    ep.d_thres = cfg.d_thres > 0.0
                     ? cfg.d_thres
                     : 0.01 * estimate_motion_domain(geom).characteristic_length;
    ep.omega = cfg.omega;
    ep.max_steps = cfg.max_steps;
    return ep;
}

std::unique_ptr<LocalEnv> make_local_env(const RunConfig& cfg) {
    const EnvGeometry geom = geometry_by_name(cfg.env);
    return std::make_unique<LocalEnv>(geom, episode_config_for(cfg, geom),
                                      derive_seed(cfg.seed, kStreamEnv));
}

TrainResult train(EnvInterface& env, const RunConfig& cfg) {
    cfg.validate();
    const EnvSpecInfo spec = env.spec();
    if (spec.action_dim <= 0) throw ConfigError("environment reports no actuators");

    Rng rng_init(derive_seed(cfg.seed, kStreamInit));
    Rng rng_noise(derive_seed(cfg.seed, kStreamNoise));
    Rng rng_sample(derive_seed(cfg.seed, kStreamSample));

    AgentConfig agent_cfg;
    agent_cfg.action_dim = spec.action_dim;
    agent_cfg.gamma = cfg.gamma;
    agent_cfg.logistic_slope = cfg.logistic_slope;
    agent_cfg.hidden = cfg.hidden;
    AgentParams agent = make_agent(agent_cfg, rng_init);
    AgentOpt opt = make_agent_opt(agent, OptimizerKind::adam, cfg.alpha);

    DualReplayBuffer buffer(cfg.replay_capacity);
    OuProcess ou(spec.action_dim, cfg.ou_theta, cfg.ou_sigma_start, cfg.ou_sigma_end,
                 static_cast<long long>(cfg.ou_anneal_steps), 1.0);

    std::ofstream metrics(cfg.metrics_path, std::ios::trunc);
    if (!metrics) throw ConfigError("cannot write metrics: " + cfg.metrics_path);
    write_metrics_header(metrics);

    TrainResult result;
    result.env_kind = spec.env_kind;
    result.geometry_hash = spec.geometry_hash;

    const auto save = [&](const std::string& path, std::uint64_t steps) {
        CheckpointData data;
        data.env_kind = spec.env_kind;
        data.geometry_hash = spec.geometry_hash;
        data.params = agent;
        data.opt = opt;
        data.train_steps = steps;
        save_checkpoint(path, data);
    };

    EnvObservation obs = env.reset(derive_seed(cfg.seed, kStreamEnv));
    std::uint64_t episode = 1;
    double reward_sum = 0.0;
    double loss_sum = 0.0;
    std::uint64_t loss_n = 0;

    for (std::uint64_t step = 1; step <= cfg.total_steps; ++step) {
        const std::vector<double> mu =
            select_action(std::span<const double>(obs.state.data(), 3), agent);
        const std::vector<double>& noise =
            ou.step(static_cast<long long>(step - 1), rng_noise);
        const std::vector<double> action = apply_noise(mu, noise);

        EnvObservation next = env.step(action);

        Transition tr;
        tr.state = obs.state;
        tr.action = action;
        tr.reward = next.reward;
        tr.next_state = next.state;
        tr.terminal = next.done;
        buffer.record(tr);
        reward_sum += next.reward;

        if (step > static_cast<std::uint64_t>(cfg.warmup_steps)) {
            if (auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng_sample)) {
                double loss;
                try {
                    loss = train_step(*batch, agent, opt);
                } catch (const TrainingError& e) {
                    throw TrainingError("update diverged at env step " + std::to_string(step) +
                                        ", episode " + std::to_string(episode) + ": " + e.what());
                }
                loss_sum += loss;
                ++loss_n;
            }
        }

        if (step % kCheckpointEvery == 0)
            save(cfg.checkpoint_path + "." + std::to_string(step), step);

        if (next.done) {
            EpisodeRow row;
            row.episode = episode;
            row.total_steps = step;
            row.reward_sum = reward_sum;
            row.final_distance = next.distance;
            row.length = static_cast<std::uint64_t>(next.t);
            row.loss_mean = loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0;
            row.sigma = ou.sigma_at(static_cast<long long>(step - 1));
            if (!std::isfinite(row.reward_sum) || !std::isfinite(row.final_distance) ||
                !std::isfinite(row.loss_mean))
                throw TrainingError("non-finite metrics at episode " + std::to_string(episode));
            write_metrics_row(metrics, row);
            result.metrics.push_back(row);

            buffer.end_episode();
            hard_update_target(agent);
            ou.reset();
            reward_sum = 0.0;
            loss_sum = 0.0;
            loss_n = 0;
            ++episode;
            if (step < cfg.total_steps) obs = env.reset();
        } else {
            obs = next;
        }
    }

    save(cfg.checkpoint_path, cfg.total_steps);
    result.params = std::move(agent);
    result.opt = std::move(opt);
    result.steps_run = cfg.total_steps;
    return result;
}

EvalResult evaluate(EnvInterface& env, const AgentParams& params, int n_episodes,
                    std::optional<std::uint64_t> env_seed) {
    if (n_episodes <= 0) throw ContractViolation("evaluate: n_episodes must be positive");
    EvalResult res;
    res.final_distances.reserve(static_cast<std::size_t>(n_episodes));
    double sq_sum = 0.0;
    for (int ep = 0; ep < n_episodes; ++ep) {
        EnvObservation obs =
            ep == 0 ? env.reset(env_seed) : env.reset();
        while (!obs.done) {
            const std::vector<double> a =
                select_action(std::span<const double>(obs.state.data(), 3), params);
            obs = env.step(a);
        }
        res.final_distances.push_back(obs.distance);
        sq_sum += obs.distance * obs.distance;
    }
    res.rmse = std::sqrt(sq_sum / static_cast<double>(n_episodes));
    return res;
}

OodReport out_of_domain_test(LocalEnv& env, const AgentParams& params, double scale,
                             int n_trials, std::uint64_t seed) {
    if (n_trials <= 0) throw ContractViolation("out-of-domain: n_trials must be positive");
    if (!(scale > 0.0)) throw ContractViolation("out-of-domain: scale must be positive");
    const MotionDomain& dom = env.domain();
    const double radius = scale * dom.characteristic_length / 2.0;
    Rng rng(seed);

    OodReport report;
    for (int trial = 0; trial < n_trials; ++trial) {
        Vec3 dir;
        if (dom.dim == 2) {
            const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
            dir = Vec3{std::cos(ang), std::sin(ang), 0.0};
        } else {
            do {
                dir = Vec3{rng.normal(), rng.normal(), rng.normal()};
            } while (dir.norm() < 1e-6);
            dir = dir * (1.0 / dir.norm());
        }
        const Vec3 target = dom.centroid + dir * radius;

        EnvObservation obs = env.reset_to(target);
        OodTrial t;
        t.target = target;
        t.initial_distance = obs.distance;

        // muscle indices by anchor proximity to the target
        const auto& muscles = env.geometry().muscles;
        std::size_t nearest = 0, farthest = 0;
        for (std::size_t i = 1; i < muscles.size(); ++i) {
            if (distance(muscles[i].anchor, target) < distance(muscles[nearest].anchor, target))
                nearest = i;
            if (distance(muscles[i].anchor, target) > distance(muscles[farthest].anchor, target))
                farthest = i;
        }

        double exc_near = 0.0, exc_far = 0.0;
        std::uint64_t steps = 0;
        while (!obs.done) {
            const std::vector<double> a =
                select_action(std::span<const double>(obs.state.data(), 3), params);
            obs = env.step(a);
            exc_near += a[nearest];
            exc_far += a[farthest];
            ++steps;
        }
        t.final_distance = obs.distance;
        t.mean_exc_nearest = steps ? exc_near / static_cast<double>(steps) : 0.0;
        t.mean_exc_farthest = steps ? exc_far / static_cast<double>(steps) : 0.0;
        if (t.final_distance < t.initial_distance) ++report.improved;
        report.trials.push_back(t);
    }
    return report;
}

std::vector<double> smooth_series(const std::vector<double>& values, double weight) {
    if (values.empty()) throw ContractViolation("smooth_series: empty input");
    if (!(weight >= 0.0 && weight < 1.0))
        throw ContractViolation("smooth_series: weight must be in [0, 1)");
    std::vector<double> out(values.size());
    out[0] = values[0];
    for (std::size_t i = 1; i < values.size(); ++i)
        out[i] = weight * out[i - 1] + (1.0 - weight) * values[i];
    return out;
}

} // namespace nafreach
