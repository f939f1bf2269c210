#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nafreach/rng.hpp"

namespace nafreach {

enum class Activation { relu, tanh };
enum class OutputHead { linear, reduced_logistic };

struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w; // row-major [out x in]
    std::vector<double> b; // [out]
};

// A dense multilayer perceptron: weights, hidden activation, output head.
struct MlpParams {
    std::vector<Layer> layers;
    Activation hidden_activation = Activation::relu;
    OutputHead head = OutputHead::linear;
    double logistic_slope = 0.2; // only used by the reduced_logistic head

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }

    // Checks shape chaining, slope range, and finiteness. Throws ConfigError.
    void validate() const;
};

// Logistic squashing with slope m in (0,1): f(x) = 1 / (1 + e^(-m x)).
double reduced_logistic(double x, double m);

// Pre/post activations of one forward pass; consumed by mlp_backward.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

// Forward pass. Cache is optional; fill it when a backward pass will follow.
std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input,
                                ForwardCache* cache = nullptr);

// Gradient storage shaped exactly like the parameters it mirrors.
struct MlpGrads {
    std::vector<Layer> layers;
    void zero();
};

MlpGrads make_grads(const MlpParams& params);

// Exact reverse-mode pass. Accumulates parameter gradients into `accum`
// (scaled by output_grad) and returns the gradient w.r.t. the input.
std::vector<double> mlp_backward(const MlpParams& params, const ForwardCache& cache,
                                 std::span<const double> output_grad, MlpGrads& accum);

// Fresh network with W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and zero biases.
MlpParams make_mlp(const std::vector<int>& sizes, Activation act, OutputHead head,
                   double logistic_slope, Rng& rng);

enum class OptimizerKind { adam, sgd };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<double> m1; // first-moment accumulator, canonical flat order
    std::vector<double> m2; // second-moment accumulator
};

OptimizerState make_optimizer(const MlpParams& params, OptimizerKind kind, double learning_rate);

// One update. Throws TrainingError on non-finite gradients without touching
// the parameters.
void optimizer_step(OptimizerState& state, MlpParams& params, const MlpGrads& grads);

std::size_t param_count(const MlpParams& params);

// Canonical flat order: per layer, weights row-major then biases.
void flatten_params(const MlpParams& params, std::span<double> out);
void unflatten_params(MlpParams& params, std::span<const double> in);

} // namespace nafreach
