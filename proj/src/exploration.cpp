#include "nafreach/exploration.hpp"

#include <algorithm>
#include <cmath>

#include "nafreach/errors.hpp"

namespace nafreach {

OuProcess::OuProcess(int dim_) : dim(dim_), x(static_cast<std::size_t>(dim_), 0.0) {
    if (dim_ <= 0) throw ConfigError("ou: dim must be positive");
}

OuProcess::OuProcess(int dim_, double theta_, double sigma_start_, double sigma_end_,
                     long long anneal_steps_, double dt_)
    : dim(dim_), theta(theta_), sigma_start(sigma_start_), sigma_end(sigma_end_),
      anneal_steps(anneal_steps_), dt(dt_), x(static_cast<std::size_t>(dim_), 0.0) {
    if (dim_ <= 0) throw ConfigError("ou: dim must be positive");
    if (anneal_steps_ <= 0) throw ConfigError("ou: anneal_steps must be positive");
    if (sigma_end_ > sigma_start_) throw ConfigError("ou: sigma schedule must not increase");
}

void OuProcess::reset() {
    std::fill(x.begin(), x.end(), 0.0);
}

double OuProcess::sigma_at(long long t) const {
    if (t <= 0) return sigma_start;
    if (t >= anneal_steps) return sigma_end;
    const double f = static_cast<double>(t) / static_cast<double>(anneal_steps);
    return sigma_start + (sigma_end - sigma_start) * f;
}

const std::vector<double>& OuProcess::step(long long t, Rng& rng) {
    const double s = sigma_at(t);
    const double sq = std::sqrt(dt);
    for (double& v : x) v += theta * (mu0 - v) * dt + s * sq * rng.normal();
    return x;
}

std::vector<double> apply_noise(const std::vector<double>& action,
                                const std::vector<double>& noise) {
    if (action.size() != noise.size())
        throw ContractViolation("apply_noise: action/noise length mismatch");
    std::vector<double> out(action.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::clamp(action[i] + noise[i], 0.0, 1.0);
    return out;
}

} // namespace nafreach
