#pragma once

#include <vector>

#include "nafreach/rng.hpp"

namespace nafreach {

// Mean-reverting exploration noise with linearly annealed scale.
struct OuProcess {
    int dim = 0;
    double theta = 0.15;
    double mu0 = 0.0;
    double sigma_start = 0.35;
    double sigma_end = 0.05;
    long long anneal_steps = 50000;
    double dt = 1.0;
    std::vector<double> x;

    explicit OuProcess(int dim_);
    OuProcess(int dim_, double theta_, double sigma_start_, double sigma_end_,
              long long anneal_steps_, double dt_);

    void reset();
    double sigma_at(long long t) const;
    // x <- x + theta (mu0 - x) dt + sigma(t) sqrt(dt) N(0, I); returns x
    const std::vector<double>& step(long long t, Rng& rng);
};

// componentwise clamp(action + noise, 0, 1)
std::vector<double> apply_noise(const std::vector<double>& action,
                                const std::vector<double>& noise);

} // namespace nafreach
