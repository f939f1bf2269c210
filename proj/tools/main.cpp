#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nafreach/checkpoint.hpp"
#include "nafreach/config.hpp"
#include "nafreach/env.hpp"
#include "nafreach/errors.hpp"
#include "nafreach/server.hpp"
#include "nafreach/sim.hpp"
#include "nafreach/train.hpp"

namespace {

using namespace nafreach;

struct TrainArgs {
    std::string config;
    std::string env;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> total_steps;
    std::optional<double> gamma;
    std::string checkpoint;
    std::string out;
};

struct EvalArgs {
    std::string checkpoint;
    int episodes = 500;
    std::uint64_t seed = 1;
    std::string out = "eval_distances.csv";
};

struct DemoArgs {
    std::string checkpoint;
    std::string target = "random";
    std::uint64_t seed = 1;
    std::string out = "trajectory.csv";
};

struct ServeArgs {
    std::string env = "circle2d-6";
    int port = kDefaultPort;
    bool once = false;
};

// loads a checkpoint and rebuilds the geometry it was trained on, refusing a
// stale hash (renamed kind, changed constants)
std::pair<CheckpointData, EnvGeometry> load_agent(const std::string& path) {
    CheckpointData ckpt = load_checkpoint(path);
    EnvGeometry geom = geometry_by_name(ckpt.env_kind);
    if (geometry_hash(geom) != ckpt.geometry_hash)
        throw CheckpointError("checkpoint geometry does not match the environment");
    return {std::move(ckpt), std::move(geom)};
}

int cmd_train(const TrainArgs& a) {
    RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    if (!a.env.empty()) cfg.env = a.env;
    if (a.seed) cfg.seed = *a.seed;
    if (a.total_steps) cfg.total_steps = *a.total_steps;
    if (a.gamma) cfg.gamma = *a.gamma;
    if (!a.checkpoint.empty()) cfg.checkpoint_path = a.checkpoint;
    if (!a.out.empty()) cfg.metrics_path = a.out;
    cfg.validate();

    auto env = make_local_env(cfg);
    const TrainResult res = train(*env, cfg);

    std::cout << "env " << res.env_kind << "\n"
              << "steps " << res.steps_run << "\n"
              << "episodes " << res.metrics.size() << "\n"
              << "checkpoint " << cfg.checkpoint_path << "\n"
              << "metrics " << cfg.metrics_path << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    auto [ckpt, geom] = load_agent(a.checkpoint);

    RunConfig rc;
    rc.env = ckpt.env_kind;
    LocalEnv env(geom, episode_config_for(rc, geom), 0);
    const EvalResult res = evaluate(env, ckpt.params, a.episodes, a.seed);

    if (!a.out.empty()) {
        std::ofstream f(a.out);
        f.precision(17);
        f << "episode,final_distance\n";
        for (std::size_t i = 0; i < res.final_distances.size(); ++i)
            f << (i + 1) << "," << res.final_distances[i] << "\n";
    }
    std::cout << "episodes " << a.episodes << "\n";
    std::printf("rmse_mm %.6f\n", res.rmse * 1000.0);
    return 0;
}

std::vector<double> parse_coords(const std::string& text) {
    std::vector<double> coords;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            coords.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("bad target coordinate: " + tok);
        }
    }
    return coords;
}

int cmd_demo(const DemoArgs& a) {
    auto [ckpt, geom] = load_agent(a.checkpoint);

    RunConfig rc;
    rc.env = ckpt.env_kind;
    LocalEnv env(geom, episode_config_for(rc, geom), a.seed);

    if (a.target == "out-of-domain") {
        const OodReport rep = out_of_domain_test(env, ckpt.params, 1.5, 1, a.seed);
        const OodTrial& t = rep.trials.at(0);
        std::printf("initial_distance_mm %.6f\n", t.initial_distance * 1000.0);
        std::printf("final_distance_mm %.6f\n", t.final_distance * 1000.0);
        std::printf("mean_excitation_nearest %.6f\n", t.mean_exc_nearest);
        std::printf("mean_excitation_farthest %.6f\n", t.mean_exc_farthest);
        std::cout << "improved " << (t.final_distance < t.initial_distance ? "yes" : "no")
                  << "\n";
        return 0;
    }

    EnvObservation obs;
    if (a.target == "random") {
        obs = env.reset(a.seed);
    } else {
        const std::vector<double> c = parse_coords(a.target);
        if (c.size() != 2 && c.size() != 3)
            throw ConfigError("target must be x,y or x,y,z or random or out-of-domain");
        if (static_cast<int>(c.size()) != geom.dim)
            throw DimensionError("target has " + std::to_string(c.size()) +
                                 " coordinates but the environment is " +
                                 std::to_string(geom.dim) + "D");
        obs = env.reset_to(c.size() == 2 ? Vec3{c[0], c[1], 0.0} : Vec3{c[0], c[1], c[2]});
    }

    std::vector<SimState> track;
    track.push_back(env.point_state());
    double reward_sum = 0.0;
    bool success = false;
    while (!obs.done) {
        const std::vector<double> action = select_action(obs.state, ckpt.params);
        obs = env.step(action);
        reward_sum += obs.reward;
        track.push_back(env.point_state());
        success = obs.done && obs.distance <= env.spec().d_thres;
    }
    if (!a.out.empty()) write_trajectory_csv(a.out, track);

    std::cout << "steps " << obs.t << "\n";
    std::printf("final_distance_mm %.6f\n", obs.distance * 1000.0);
    std::printf("reward_sum %.6f\n", reward_sum);
    std::cout << "success " << (success ? "yes" : "no") << "\n"
              << "trajectory " << a.out << "\n";
    return 0;
}

int cmd_serve(const ServeArgs& a) {
    RunConfig rc;
    rc.env = a.env;
    rc.validate();
    const EnvGeometry geom = geometry_by_name(a.env);

    ServeOptions opts;
    opts.port = a.port;
    opts.once = a.once;
    opts.on_listening = [&](int port) {
        std::cout << "listening " << port << "\n" << std::flush;
    };
    serve(geom, episode_config_for(rc, geom), opts);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous-action reaching: train, evaluate, replay, serve"};
    app.require_subcommand(1);

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "run the learning loop");
    train->add_option("--config", ta.config, "JSON run config (flags override file values)");
    train->add_option("--env", ta.env, "environment kind");
    train->add_option("--seed", ta.seed, "master seed");
    train->add_option("--total-steps", ta.total_steps, "environment steps to run");
    train->add_option("--gamma", ta.gamma, "discount factor");
    train->add_option("--checkpoint", ta.checkpoint, "checkpoint output path");
    train->add_option("--out", ta.out, "metrics CSV output path");

    EvalArgs ea;
    CLI::App* eval = app.add_subcommand("eval", "greedy-policy evaluation");
    eval->add_option("--checkpoint", ea.checkpoint, "trained checkpoint")->required();
    eval->add_option("--episodes", ea.episodes, "number of evaluation episodes");
    eval->add_option("--seed", ea.seed, "evaluation seed");
    eval->add_option("--out", ea.out, "per-episode distance CSV path");

    DemoArgs da;
    CLI::App* demo = app.add_subcommand("demo", "single greedy rollout with a trajectory dump");
    demo->add_option("--checkpoint", da.checkpoint, "trained checkpoint")->required();
    demo->add_option("--target", da.target, "x,y | x,y,z | random | out-of-domain");
    demo->add_option("--seed", da.seed, "rollout seed");
    demo->add_option("--out", da.out, "trajectory CSV path");

    ServeArgs sa;
    CLI::App* serve_cmd = app.add_subcommand("serve", "expose an environment over TCP");
    serve_cmd->add_option("--env", sa.env, "environment kind");
    serve_cmd->add_option("--port", sa.port, "TCP port (0 = ephemeral)");
    serve_cmd->add_flag("--once", sa.once, "exit after the first session");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) return cmd_train(ta);
        if (eval->parsed()) return cmd_eval(ea);
        if (demo->parsed()) return cmd_demo(da);
        if (serve_cmd->parsed()) return cmd_serve(sa);
        return 2;
    } catch (const nafreach::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nafreach::CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nafreach::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
}
