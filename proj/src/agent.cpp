#include "nafreach/agent.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "nafreach/errors.hpp"

namespace nafreach {

void AgentParams::validate() const {
    theta_mu.validate();
    theta_V.validate();
    theta_V_target.validate();
    theta_L.validate();
    if (action_dim <= 0) throw ConfigError("agent: action_dim must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent: gamma must be in [0,1)");
    if (theta_mu.output_dim() != action_dim)
        throw ConfigError("agent: policy output width must equal action_dim");
    if (theta_V.output_dim() != 1) throw ConfigError("agent: value net must output a scalar");
    if (theta_L.output_dim() != action_dim * (action_dim + 1) / 2)
        throw ConfigError("agent: triangular net output width must be dim(dim+1)/2");
    if (param_count(theta_V_target) != param_count(theta_V))
        throw ConfigError("agent: target net shape must match value net");
}

AgentParams make_agent(const AgentConfig& cfg, Rng& rng) {
    if (cfg.action_dim <= 0) throw ConfigError("agent: action_dim must be positive");
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw ConfigError("agent: gamma must be in [0,1)");
    std::vector<int> mu_sizes{3};
    mu_sizes.insert(mu_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    auto v_sizes = mu_sizes, l_sizes = mu_sizes;
    mu_sizes.push_back(cfg.action_dim);
    v_sizes.push_back(1);
    l_sizes.push_back(cfg.action_dim * (cfg.action_dim + 1) / 2);

    AgentParams p;
    p.theta_mu = make_mlp(mu_sizes, Activation::relu, OutputHead::reduced_logistic,
                          cfg.logistic_slope, rng);
    p.theta_V = make_mlp(v_sizes, Activation::relu, OutputHead::linear, cfg.logistic_slope, rng);
    p.theta_V_target = p.theta_V;
    p.theta_L = make_mlp(l_sizes, Activation::relu, OutputHead::linear, cfg.logistic_slope, rng);
    p.action_dim = cfg.action_dim;
    p.gamma = cfg.gamma;
    p.validate();
    return p;
}

AgentOpt make_agent_opt(const AgentParams& params, OptimizerKind kind, double alpha) {
    return AgentOpt{make_optimizer(params.theta_mu, kind, alpha),
                    make_optimizer(params.theta_V, kind, alpha),
                    make_optimizer(params.theta_L, kind, alpha)};
}

std::vector<double> build_L(std::span<const double> entries, int dim) {
    if (dim <= 0) throw ContractViolation("build_L: dim must be positive");
    if (static_cast<int>(entries.size()) != dim * (dim + 1) / 2)
        throw ContractViolation("build_L: expected " + std::to_string(dim * (dim + 1) / 2) +
                                " entries, got " + std::to_string(entries.size()));
    std::vector<double> L(static_cast<std::size_t>(dim) * dim, 0.0);
    std::size_t k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) {
            const double raw = entries[k++];
            L[static_cast<std::size_t>(i) * dim + j] =
                (i == j) ? raw * raw + kLDiagEpsilon : raw;
        }
    return L;
}

std::vector<double> select_action(std::span<const double> state, const AgentParams& params) {
    return mlp_forward(params.theta_mu, state);
}

double state_value(std::span<const double> state, const AgentParams& params) {
    return mlp_forward(params.theta_V, state)[0];
}

namespace {

// u = L^T (a - mu); A = -0.5 |u|^2
double advantage_from(const std::vector<double>& L, std::span<const double> action,
                      const std::vector<double>& mu, int dim, std::vector<double>* u_out) {
    std::vector<double> u(dim, 0.0);
    for (int j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (int i = j; i < dim; ++i)
            acc += L[static_cast<std::size_t>(i) * dim + j] * (action[i] - mu[i]);
        u[j] = acc;
    }
    double a = 0.0;
    for (double v : u) a += v * v;
    if (u_out) *u_out = std::move(u);
    return -0.5 * a;
}

} // namespace

double advantage(std::span<const double> state, std::span<const double> action,
                 const AgentParams& params) {
    if (static_cast<int>(action.size()) != params.action_dim)
        throw ContractViolation("advantage: action length must equal action_dim");
    const auto mu = mlp_forward(params.theta_mu, state);
    const auto l_entries = mlp_forward(params.theta_L, state);
    const auto L = build_L(l_entries, params.action_dim);
    return advantage_from(L, action, mu, params.action_dim, nullptr);
}

double q_value(std::span<const double> state, std::span<const double> action,
               const AgentParams& params) {
    return state_value(state, params) + advantage(state, action, params);
}

double compute_target(double reward, std::span<const double> next_state, bool terminal,
                      const AgentParams& params) {
    if (terminal) return reward;
    return reward + params.gamma * mlp_forward(params.theta_V_target, next_state)[0];
}

double bellman_loss_and_grads(std::span<const Transition> batch, const AgentParams& params,
                              AgentGrads& grads) {
    if (batch.empty()) throw ContractViolation("train_step: empty batch");
    const int dim = params.action_dim;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    grads.mu = make_grads(params.theta_mu);
    grads.V = make_grads(params.theta_V);
    grads.L = make_grads(params.theta_L);
    auto& g_mu = grads.mu;
    auto& g_v = grads.V;
    auto& g_l = grads.L;

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& tr = batch[b];
        if (static_cast<int>(tr.action.size()) != dim)
            throw ContractViolation("train_step: transition action length mismatch");
        const double y = compute_target(tr.reward, tr.next_state, tr.terminal, params);

        ForwardCache c_mu, c_v, c_l;
        const auto mu = mlp_forward(params.theta_mu, tr.state, &c_mu);
        const double v = mlp_forward(params.theta_V, tr.state, &c_v)[0];
        const auto l_entries = mlp_forward(params.theta_L, tr.state, &c_l);
        const auto L = build_L(l_entries, dim);

        std::vector<double> u;
        const double a_val = advantage_from(L, tr.action, mu, dim, &u);
        const double q = v + a_val;
        const double resid = q - y;

        if (!std::isfinite(resid)) {
            std::ostringstream os;
            os << "train_step: non-finite Bellman residual at batch index " << b
               << " (reward=" << tr.reward << ", terminal=" << tr.terminal << ", q=" << q
               << ", y=" << y << ")";
            throw TrainingError(os.str());
        }
        loss += resid * resid * inv_n;

        const double g0 = 2.0 * resid * inv_n;  // dLoss/dQ for this sample

        // dQ/dV = 1
        mlp_backward(params.theta_V, c_v, std::vector<double>{g0}, g_v);

        // dA/dmu_i = (L u)_i, i.e. P (a - mu)
        std::vector<double> g_mu_out(dim, 0.0);
        for (int i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (int j = 0; j <= i; ++j) acc += L[static_cast<std::size_t>(i) * dim + j] * u[j];
            g_mu_out[i] = g0 * acc;
        }
        mlp_backward(params.theta_mu, c_mu, g_mu_out, g_mu);

        // dA/dL_ij = -(a - mu)_i u_j; diagonal entries chain through raw^2
        std::vector<double> g_l_out(l_entries.size(), 0.0);
        std::size_t k = 0;
        for (int i = 0; i < dim; ++i) {
            const double d_i = tr.action[i] - mu[i];
            for (int j = 0; j <= i; ++j) {
                double g_entry = -d_i * u[j];
                if (i == j) g_entry *= 2.0 * l_entries[k];
                g_l_out[k] = g0 * g_entry;
                ++k;
            }
        }
        mlp_backward(params.theta_L, c_l, g_l_out, g_l);
    }
    return loss;
}

double train_step(std::span<const Transition> batch, AgentParams& params, AgentOpt& opt) {
    AgentGrads grads;
    const double loss = bellman_loss_and_grads(batch, params, grads);
    optimizer_step(opt.mu, params.theta_mu, grads.mu);
    optimizer_step(opt.V, params.theta_V, grads.V);
    optimizer_step(opt.L, params.theta_L, grads.L);
    return loss;
}

void hard_update_target(AgentParams& params) {
    params.theta_V_target = params.theta_V;
}

} // namespace nafreach
