#pragma once

#include <array>
#include <span>
#include <vector>

#include "nafreach/nn.hpp"
#include "nafreach/rng.hpp"

namespace nafreach {

// One environment interaction as stored for replay.
struct Transition {
    std::array<double, 3> state{};
    std::vector<double> action;
    double reward = 0.0;
    std::array<double, 3> next_state{};
    bool terminal = false;
};

struct AgentConfig {
    int action_dim = 0;
    double gamma = 0.99;
    double logistic_slope = 0.2;
    std::vector<int> hidden = {64, 64};
};

// Three networks: policy (mu), state value (V) with a frozen bootstrap copy,
// and the lower-triangular factor net (L) defining the advantage curvature.
struct AgentParams {
    MlpParams theta_mu;
    MlpParams theta_V;
    MlpParams theta_V_target;
    MlpParams theta_L;
    int action_dim = 0;
    double gamma = 0.99;

    void validate() const;
};

struct AgentOpt {
    OptimizerState mu;
    OptimizerState V;
    OptimizerState L;
};

inline constexpr double kLDiagEpsilon = 1e-6;

AgentParams make_agent(const AgentConfig& cfg, Rng& rng);
AgentOpt make_agent_opt(const AgentParams& params, OptimizerKind kind, double alpha);

// Row-major fill of the lower triangle; diagonal entries squared (plus a
// small epsilon so the curvature matrix is strictly positive definite).
std::vector<double> build_L(std::span<const double> entries, int dim);

std::vector<double> select_action(std::span<const double> state, const AgentParams& params);
double state_value(std::span<const double> state, const AgentParams& params);
double advantage(std::span<const double> state, std::span<const double> action,
                 const AgentParams& params);
double q_value(std::span<const double> state, std::span<const double> action,
               const AgentParams& params);

// y = r for terminal transitions, else r + gamma * V_target(next_state).
double compute_target(double reward, std::span<const double> next_state, bool terminal,
                      const AgentParams& params);

struct AgentGrads {
    MlpGrads mu;
    MlpGrads V;
    MlpGrads L;
};

// Mean squared Bellman error over the batch and its exact gradients for the
// three online networks; the bootstrap target y is a constant of the
// optimization (it reads only theta_V_target).
double bellman_loss_and_grads(std::span<const Transition> batch, const AgentParams& params,
                              AgentGrads& grads);

// One gradient step on the mean squared Bellman error over the batch;
// updates theta_mu, theta_V, theta_L and never theta_V_target.
double train_step(std::span<const Transition> batch, AgentParams& params, AgentOpt& opt);

void hard_update_target(AgentParams& params);

} // namespace nafreach
