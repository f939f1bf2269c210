#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nafreach {

// Full description of a training run. Field defaults are the reference
// constants; anything here can be overridden by config file or CLI flag.
struct RunConfig {
    std::string env = "circle2d-6";
    std::uint64_t total_steps = 150000;
    double gamma = 0.99;
    double alpha = 0.01;          // optimizer learning rate
    int batch_size = 32;
    int warmup_steps = 1000;      // environment steps before updates start
    double d_thres = 0.0;         // metres; 0 = auto (1% of domain length)
    double omega = 10.0;
    int max_steps = 200;
    double logistic_slope = 0.2;
    std::vector<int> hidden = {64, 64};
    std::uint64_t replay_capacity = 100000;
    double ou_theta = 0.15;
    double ou_sigma_start = 0.35;
    double ou_sigma_end = 0.05;
    std::uint64_t ou_anneal_steps = 50000;
    std::uint64_t seed = 1;
    std::string checkpoint_path = "agent.ckpt";
    std::string metrics_path = "metrics.csv";

    void validate() const;  // throws ConfigError naming the offending key
};

// Parses a JSON document; unknown keys are rejected by name. Missing keys
// keep their defaults.
RunConfig parse_run_config(const std::string& json_text);

// Reads the file; missing file -> ConfigError("config not found: ...").
RunConfig load_run_config(const std::string& path);

} // namespace nafreach
