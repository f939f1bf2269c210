#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nafreach/checkpoint.hpp"
#include "nafreach/config.hpp"
#include "nafreach/env.hpp"
#include "nafreach/errors.hpp"
#include "nafreach/sim.hpp"
#include "nafreach/train.hpp"

namespace py = pybind11;
using namespace nafreach;

PYBIND11_MODULE(nafreach, m) {
    m.doc() = "muscle-driven reaching: simulator, environment, and learning loop";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<CheckpointError>(m, "CheckpointError");
    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<SimulationFault>(m, "SimulationFault");
    py::register_exception<TrainingError>(m, "TrainingError");

    py::class_<Vec3>(m, "Vec3")
        .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"),
             py::arg("z") = 0.0)
        .def_readonly("x", &Vec3::x)
        .def_readonly("y", &Vec3::y)
        .def_readonly("z", &Vec3::z)
        .def("__repr__", [](const Vec3& v) {
            return "Vec3(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " +
                   std::to_string(v.z) + ")";
        });

    py::class_<EnvGeometry>(m, "EnvGeometry")
        .def_readonly("dim", &EnvGeometry::dim)
        .def_readonly("mass", &EnvGeometry::mass)
        .def_property_readonly("n_muscles", &EnvGeometry::n_muscles)
        .def_property_readonly("name", &geometry_name)
        .def_property_readonly("hash", &geometry_hash);
    m.def("geometry_by_name", &geometry_by_name, py::arg("name"),
          "circle2d-6 | circle2d-14 | circle2d-24 | cuboid3d-8");

    py::class_<EpisodeConfig>(m, "EpisodeConfig")
        .def(py::init<>())
        .def_readwrite("d_thres", &EpisodeConfig::d_thres)
        .def_readwrite("omega", &EpisodeConfig::omega)
        .def_readwrite("max_steps", &EpisodeConfig::max_steps)
        .def_readwrite("persist_point", &EpisodeConfig::persist_point);

    py::class_<EnvObservation>(m, "EnvObservation")
        .def_readonly("state", &EnvObservation::state)
        .def_readonly("reward", &EnvObservation::reward)
        .def_readonly("done", &EnvObservation::done)
        .def_readonly("distance", &EnvObservation::distance)
        .def_readonly("t", &EnvObservation::t);

    py::class_<EnvSpecInfo>(m, "EnvSpecInfo")
        .def_readonly("action_dim", &EnvSpecInfo::action_dim)
        .def_readonly("state_dim", &EnvSpecInfo::state_dim)
        .def_readonly("d_thres", &EnvSpecInfo::d_thres)
        .def_readonly("max_steps", &EnvSpecInfo::max_steps)
        .def_readonly("domain_length", &EnvSpecInfo::domain_length)
        .def_readonly("env_kind", &EnvSpecInfo::env_kind)
        .def_readonly("geometry_hash", &EnvSpecInfo::geometry_hash);

    py::class_<LocalEnv>(m, "LocalEnv")
        .def(py::init([](const std::string& kind, std::uint64_t seed, double d_thres) {
                 RunConfig rc;
                 rc.env = kind;
                 rc.d_thres = d_thres;
                 rc.seed = seed;
                 const EnvGeometry geom = geometry_by_name(kind);
                 return std::make_unique<LocalEnv>(geom, episode_config_for(rc, geom), seed);
             }),
             py::arg("kind") = "circle2d-6", py::arg("seed") = 1,
             py::arg("d_thres") = 0.0, "d_thres = 0 means 1% of the domain length")
        .def("spec", &LocalEnv::spec)
        .def("reset", &LocalEnv::reset, py::arg("seed") = std::nullopt)
        .def("reset_to",
             [](LocalEnv& env, double x, double y, double z) {
                 return env.reset_to(Vec3{x, y, z});
             },
             py::arg("x"), py::arg("y"), py::arg("z") = 0.0)
        .def("step", &LocalEnv::step, py::arg("action"))
        .def_property_readonly("target", &LocalEnv::target)
        .def_property_readonly("position",
                               [](const LocalEnv& env) { return env.point_state().position; });

    m.def(
        "equilibrium",
        [](const std::vector<double>& exc, const std::string& kind) {
            return equilibrium(exc, geometry_by_name(kind));
        },
        py::arg("excitations"), py::arg("kind") = "circle2d-6",
        "settle a constant excitation pattern and return the rest position");

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("env", &RunConfig::env)
        .def_readwrite("total_steps", &RunConfig::total_steps)
        .def_readwrite("gamma", &RunConfig::gamma)
        .def_readwrite("alpha", &RunConfig::alpha)
        .def_readwrite("batch_size", &RunConfig::batch_size)
        .def_readwrite("warmup_steps", &RunConfig::warmup_steps)
        .def_readwrite("d_thres", &RunConfig::d_thres)
        .def_readwrite("omega", &RunConfig::omega)
        .def_readwrite("max_steps", &RunConfig::max_steps)
        .def_readwrite("logistic_slope", &RunConfig::logistic_slope)
        .def_readwrite("hidden", &RunConfig::hidden)
        .def_readwrite("replay_capacity", &RunConfig::replay_capacity)
        .def_readwrite("ou_theta", &RunConfig::ou_theta)
        .def_readwrite("ou_sigma_start", &RunConfig::ou_sigma_start)
        .def_readwrite("ou_sigma_end", &RunConfig::ou_sigma_end)
        .def_readwrite("ou_anneal_steps", &RunConfig::ou_anneal_steps)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("checkpoint_path", &RunConfig::checkpoint_path)
        .def_readwrite("metrics_path", &RunConfig::metrics_path)
        .def("validate", &RunConfig::validate);
    m.def("load_run_config", &load_run_config, py::arg("path"));

    py::class_<AgentParams>(m, "AgentParams");

    py::class_<EpisodeRow>(m, "EpisodeRow")
        .def_readonly("episode", &EpisodeRow::episode)
        .def_readonly("total_steps", &EpisodeRow::total_steps)
        .def_readonly("reward_sum", &EpisodeRow::reward_sum)
        .def_readonly("final_distance", &EpisodeRow::final_distance)
        .def_readonly("length", &EpisodeRow::length)
        .def_readonly("loss_mean", &EpisodeRow::loss_mean)
        .def_readonly("sigma", &EpisodeRow::sigma);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("params", &TrainResult::params)
        .def_readonly("metrics", &TrainResult::metrics)
        .def_readonly("steps_run", &TrainResult::steps_run)
        .def_readonly("env_kind", &TrainResult::env_kind)
        .def_readonly("geometry_hash", &TrainResult::geometry_hash);
    m.def("train", [](LocalEnv& env, const RunConfig& cfg) { return train(env, cfg); },
          py::arg("env"), py::arg("config"));

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("rmse", &EvalResult::rmse)
        .def_readonly("final_distances", &EvalResult::final_distances);
    m.def("evaluate",
          [](LocalEnv& env, const AgentParams& params, int n,
             std::optional<std::uint64_t> seed) { return evaluate(env, params, n, seed); },
          py::arg("env"), py::arg("params"), py::arg("n_episodes") = 500,
          py::arg("seed") = std::nullopt);

    py::class_<OodTrial>(m, "OodTrial")
        .def_readonly("target", &OodTrial::target)
        .def_readonly("initial_distance", &OodTrial::initial_distance)
        .def_readonly("final_distance", &OodTrial::final_distance)
        .def_readonly("mean_exc_nearest", &OodTrial::mean_exc_nearest)
        .def_readonly("mean_exc_farthest", &OodTrial::mean_exc_farthest);
    py::class_<OodReport>(m, "OodReport")
        .def_readonly("trials", &OodReport::trials)
        .def_readonly("improved", &OodReport::improved);
    m.def("out_of_domain_test", &out_of_domain_test, py::arg("env"), py::arg("params"),
          py::arg("scale") = 1.5, py::arg("n_trials") = 50, py::arg("seed") = 1);

    m.def("select_action",
          [](const std::vector<double>& state, const AgentParams& params) {
              return select_action(state, params);
          },
          py::arg("state"), py::arg("params"), "greedy action = network mean");
    m.def("state_value",
          [](const std::vector<double>& state, const AgentParams& params) {
              return state_value(state, params);
          },
          py::arg("state"), py::arg("params"));

    py::class_<CheckpointData>(m, "CheckpointData")
        .def_readonly("env_kind", &CheckpointData::env_kind)
        .def_readonly("geometry_hash", &CheckpointData::geometry_hash)
        .def_readonly("params", &CheckpointData::params)
        .def_readonly("train_steps", &CheckpointData::train_steps);
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"),
          py::arg("expect_geometry") = std::nullopt);

    m.def("smooth_series", &smooth_series, py::arg("values"), py::arg("weight"));
}
