#include "nafreach/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nafreach/errors.hpp"

namespace nafreach {

void MlpParams::validate() const {
    if (layers.empty()) throw ConfigError("mlp: no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const Layer& l = layers[k];
        if (l.in <= 0 || l.out <= 0) throw ConfigError("mlp: non-positive layer size");
        if (l.w.size() != static_cast<std::size_t>(l.in) * l.out || l.b.size() != static_cast<std::size_t>(l.out))
            throw ConfigError("mlp: weight/bias storage does not match layer shape");
        if (k > 0 && layers[k - 1].out != l.in)
            throw ConfigError("mlp: layer shapes do not chain at layer " + std::to_string(k));
        for (double v : l.w)
            if (!std::isfinite(v)) throw ConfigError("mlp: non-finite weight");
        for (double v : l.b)
            if (!std::isfinite(v)) throw ConfigError("mlp: non-finite bias");
    }
    if (head == OutputHead::reduced_logistic && !(logistic_slope > 0.0 && logistic_slope < 1.0))
        throw ConfigError("mlp: logistic slope must be in (0,1)");
}

double reduced_logistic(double x, double m) {
    if (!(m > 0.0 && m < 1.0)) throw ConfigError("reduced_logistic: slope must be in (0,1)");
    const double t = m * x;
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

namespace {

inline double apply_hidden(double z, Activation a) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double hidden_grad(double z, double post, Activation a) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - post * post;
}

} // namespace

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input,
                                ForwardCache* cache) {
    if (params.layers.empty()) throw ConfigError("mlp_forward: empty network");
    if (static_cast<int>(input.size()) != params.input_dim())
        throw ConfigError("mlp_forward: input length " + std::to_string(input.size()) +
                          " does not match first layer input " + std::to_string(params.input_dim()));
    for (double v : input)
        if (!std::isfinite(v)) throw ConfigError("mlp_forward: non-finite input");

    if (cache) {
        cache->input.assign(input.begin(), input.end());
        cache->pre.assign(params.layers.size(), {});
        cache->post.assign(params.layers.size(), {});
    }

    std::vector<double> x(input.begin(), input.end());
    const std::size_t n_layers = params.layers.size();
    for (std::size_t k = 0; k < n_layers; ++k) {
        const Layer& l = params.layers[k];
        std::vector<double> z(l.out);
        for (int i = 0; i < l.out; ++i) {
            const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
            double acc = l.b[i];
            for (int j = 0; j < l.in; ++j) acc += row[j] * x[j];
            z[i] = acc;
        }
        std::vector<double> y(l.out);
        const bool last = (k + 1 == n_layers);
        if (!last) {
            for (int i = 0; i < l.out; ++i) y[i] = apply_hidden(z[i], params.hidden_activation);
        } else if (params.head == OutputHead::linear) {
            y = z;
        } else {
            for (int i = 0; i < l.out; ++i) y[i] = reduced_logistic(z[i], params.logistic_slope);
        }
        if (cache) {
            cache->pre[k] = z;
            cache->post[k] = y;
        }
        x = std::move(y);
    }
    return x;
}

void MlpGrads::zero() {
    for (Layer& l : layers) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

MlpGrads make_grads(const MlpParams& params) {
    MlpGrads g;
    g.layers.reserve(params.layers.size());
    for (const Layer& l : params.layers) {
        Layer gl;
        gl.in = l.in;
        gl.out = l.out;
        gl.w.assign(l.w.size(), 0.0);
        gl.b.assign(l.b.size(), 0.0);
        g.layers.push_back(std::move(gl));
    }
    return g;
}

std::vector<double> mlp_backward(const MlpParams& params, const ForwardCache& cache,
                                 std::span<const double> output_grad, MlpGrads& accum) {
    const std::size_t n_layers = params.layers.size();
    if (cache.pre.size() != n_layers || cache.post.size() != n_layers ||
        static_cast<int>(cache.input.size()) != params.input_dim())
        throw ContractViolation("mlp_backward: cache does not match network");
    for (std::size_t k = 0; k < n_layers; ++k)
        if (cache.pre[k].size() != static_cast<std::size_t>(params.layers[k].out))
            throw ContractViolation("mlp_backward: cache layer width mismatch");
    if (static_cast<int>(output_grad.size()) != params.output_dim())
        throw ContractViolation("mlp_backward: output gradient length mismatch");
    if (accum.layers.size() != n_layers)
        throw ContractViolation("mlp_backward: gradient accumulator shape mismatch");

    // Gradient w.r.t. the pre-activation of the last layer.
    std::vector<double> gz(output_grad.begin(), output_grad.end());
    if (params.head == OutputHead::reduced_logistic) {
        const double m = params.logistic_slope;
        const std::vector<double>& y = cache.post[n_layers - 1];
        for (std::size_t i = 0; i < gz.size(); ++i) gz[i] *= m * y[i] * (1.0 - y[i]);
    }

    for (std::size_t k = n_layers; k-- > 0;) {
        const Layer& l = params.layers[k];
        Layer& gl = accum.layers[k];
        const std::vector<double>& x = (k == 0) ? cache.input : cache.post[k - 1];
        for (int i = 0; i < l.out; ++i) {
            const double g = gz[i];
            double* grow = gl.w.data() + static_cast<std::size_t>(i) * l.in;
            for (int j = 0; j < l.in; ++j) grow[j] += g * x[j];
            gl.b[i] += g;
        }
        std::vector<double> gx(l.in, 0.0);
        for (int i = 0; i < l.out; ++i) {
            const double g = gz[i];
            const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
            for (int j = 0; j < l.in; ++j) gx[j] += g * row[j];
        }
        if (k > 0) {
            const Layer& prev = params.layers[k - 1];
            const std::vector<double>& zprev = cache.pre[k - 1];
            const std::vector<double>& yprev = cache.post[k - 1];
            gz.assign(prev.out, 0.0);
            for (int i = 0; i < prev.out; ++i)
                gz[i] = gx[i] * hidden_grad(zprev[i], yprev[i], params.hidden_activation);
        } else {
            return gx;
        }
    }
    return {};
}

MlpParams make_mlp(const std::vector<int>& sizes, Activation act, OutputHead head,
                   double logistic_slope, Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("make_mlp: need at least input and output sizes");
    MlpParams p;
    p.hidden_activation = act;
    p.head = head;
    p.logistic_slope = logistic_slope;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        Layer l;
        l.in = sizes[k];
        l.out = sizes[k + 1];
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        l.b.assign(l.out, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        for (double& v : l.w) v = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(l));
    }
    p.validate();
    return p;
}

std::size_t param_count(const MlpParams& params) {
    std::size_t n = 0;
    for (const Layer& l : params.layers) n += l.w.size() + l.b.size();
    return n;
}

void flatten_params(const MlpParams& params, std::span<double> out) {
    if (out.size() != param_count(params)) throw ContractViolation("flatten_params: size mismatch");
    std::size_t i = 0;
    for (const Layer& l : params.layers) {
        std::copy(l.w.begin(), l.w.end(), out.begin() + i);
        i += l.w.size();
        std::copy(l.b.begin(), l.b.end(), out.begin() + i);
        i += l.b.size();
    }
}

void unflatten_params(MlpParams& params, std::span<const double> in) {
    if (in.size() != param_count(params)) throw ContractViolation("unflatten_params: size mismatch");
    std::size_t i = 0;
    for (Layer& l : params.layers) {
        std::copy(in.begin() + i, in.begin() + i + l.w.size(), l.w.begin());
        i += l.w.size();
        std::copy(in.begin() + i, in.begin() + i + l.b.size(), l.b.begin());
        i += l.b.size();
    }
}

OptimizerState make_optimizer(const MlpParams& params, OptimizerKind kind, double learning_rate) {
    OptimizerState s;
    s.kind = kind;
    s.learning_rate = learning_rate;
    s.m1.assign(param_count(params), 0.0);
    s.m2.assign(param_count(params), 0.0);
    return s;
}

void optimizer_step(OptimizerState& state, MlpParams& params, const MlpGrads& grads) {
    if (grads.layers.size() != params.layers.size())
        throw ContractViolation("optimizer_step: gradient shape mismatch");
    const std::size_t n = param_count(params);
    if (state.m1.size() != n || state.m2.size() != n)
        throw ContractViolation("optimizer_step: accumulator shape mismatch");

    for (std::size_t k = 0; k < grads.layers.size(); ++k) {
        const Layer& gl = grads.layers[k];
        if (gl.w.size() != params.layers[k].w.size() || gl.b.size() != params.layers[k].b.size())
            throw ContractViolation("optimizer_step: gradient layer shape mismatch");
        for (double g : gl.w)
            if (!std::isfinite(g)) throw TrainingError("optimizer_step: non-finite weight gradient");
        for (double g : gl.b)
            if (!std::isfinite(g)) throw TrainingError("optimizer_step: non-finite bias gradient");
    }

    state.step += 1;
    std::size_t i = 0;
    auto update = [&](double& p, double g) {
        if (state.kind == OptimizerKind::sgd) {
            p -= state.learning_rate * g;
        } else {
            double& m1 = state.m1[i];
            double& m2 = state.m2[i];
            m1 = state.beta1 * m1 + (1.0 - state.beta1) * g;
            m2 = state.beta2 * m2 + (1.0 - state.beta2) * g * g;
            const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
            const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
            p -= state.learning_rate * (m1 / bc1) / (std::sqrt(m2 / bc2) + state.eps);
        }
        ++i;
    };
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        Layer& l = params.layers[k];
        const Layer& gl = grads.layers[k];
        for (std::size_t j = 0; j < l.w.size(); ++j) update(l.w[j], gl.w[j]);
        for (std::size_t j = 0; j < l.b.size(); ++j) update(l.b[j], gl.b[j]);
    }
}

} // namespace nafreach
