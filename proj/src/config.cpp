#include "nafreach/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "nafreach/errors.hpp"

namespace nafreach {

void RunConfig::validate() const {
    if (env.empty()) throw ConfigError("env must not be empty");
    if (total_steps == 0) throw ConfigError("total_steps must be positive");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw ConfigError("gamma must be < 1 and positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (warmup_steps < 0) throw ConfigError("warmup_steps must be non-negative");
    if (d_thres < 0.0) throw ConfigError("d_thres must be non-negative");
    if (!(omega > 0.0)) throw ConfigError("omega must be positive");
    if (max_steps <= 0) throw ConfigError("max_steps must be positive");
    if (!(logistic_slope > 0.0 && logistic_slope < 1.0))
        throw ConfigError("logistic_slope must be in (0, 1)");
    if (hidden.empty()) throw ConfigError("hidden must list at least one layer width");
    for (int h : hidden)
        if (h <= 0) throw ConfigError("hidden widths must be positive");
    if (replay_capacity == 0) throw ConfigError("replay_capacity must be positive");
    if (!(ou_theta > 0.0)) throw ConfigError("ou_theta must be positive");
    if (!(ou_sigma_start >= ou_sigma_end) || !(ou_sigma_end >= 0.0))
        throw ConfigError("ou sigma schedule must be non-increasing and non-negative");
    if (ou_anneal_steps == 0) throw ConfigError("ou_anneal_steps must be positive");
    if (checkpoint_path.empty()) throw ConfigError("checkpoint_path must not be empty");
    if (metrics_path.empty()) throw ConfigError("metrics_path must not be empty");
}

RunConfig parse_run_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    static const std::set<std::string> known = {
        "env",          "total_steps",    "gamma",          "alpha",
        "batch_size",   "warmup_steps",   "d_thres",        "omega",
        "max_steps",    "logistic_slope", "hidden",         "replay_capacity",
        "ou_theta",     "ou_sigma_start", "ou_sigma_end",   "ou_anneal_steps",
        "seed",         "checkpoint_path", "metrics_path",
    };
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key: " + key);

    RunConfig cfg;
    try {
        if (j.contains("env")) cfg.env = j["env"].get<std::string>();
        if (j.contains("total_steps")) cfg.total_steps = j["total_steps"].get<std::uint64_t>();
        if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
        if (j.contains("warmup_steps")) cfg.warmup_steps = j["warmup_steps"].get<int>();
        if (j.contains("d_thres")) cfg.d_thres = j["d_thres"].get<double>();
        if (j.contains("omega")) cfg.omega = j["omega"].get<double>();
        if (j.contains("max_steps")) cfg.max_steps = j["max_steps"].get<int>();
        if (j.contains("logistic_slope")) cfg.logistic_slope = j["logistic_slope"].get<double>();
        if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::vector<int>>();
        if (j.contains("replay_capacity"))
            cfg.replay_capacity = j["replay_capacity"].get<std::uint64_t>();
        if (j.contains("ou_theta")) cfg.ou_theta = j["ou_theta"].get<double>();
        if (j.contains("ou_sigma_start")) cfg.ou_sigma_start = j["ou_sigma_start"].get<double>();
        if (j.contains("ou_sigma_end")) cfg.ou_sigma_end = j["ou_sigma_end"].get<double>();
        if (j.contains("ou_anneal_steps"))
            cfg.ou_anneal_steps = j["ou_anneal_steps"].get<std::uint64_t>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("checkpoint_path"))
            cfg.checkpoint_path = j["checkpoint_path"].get<std::string>();
        if (j.contains("metrics_path")) cfg.metrics_path = j["metrics_path"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config not found: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

} // namespace nafreach
