#include "taso/optim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "taso/error.hpp"

namespace taso::optim {
namespace {

void require_same_shape(const Tensor& param, const Tensor& other, const char* what) {
    if (param.shape() != other.shape()) {
        throw ContractError(std::string(what) + " shape " + to_string(other.shape()) + " differs from parameter " +
                            to_string(param.shape()));
    }
}

void require_open_unit(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1), got " + std::to_string(v));
}

bool uses_momentum(Rule r) { return r == Rule::momentum || r == Rule::nesterov; }
bool is_adam(Rule r) { return r == Rule::adam || r == Rule::amsgrad; }
bool is_rmsprop(Rule r) { return r == Rule::rmsprop || r == Rule::rmsprop_centered; }

}  // namespace

std::string_view to_string(Rule rule) {
    switch (rule) {
        case Rule::sgd: return "sgd";
        case Rule::momentum: return "momentum";
        case Rule::nesterov: return "nesterov";
        case Rule::adagrad: return "adagrad";
        case Rule::rmsprop: return "rmsprop";
        case Rule::rmsprop_centered: return "rmsprop-centered";
        case Rule::adam: return "adam";
        case Rule::amsgrad: return "amsgrad";
    }
    return "unknown";
}

Rule parse_rule(std::string_view name) {
    for (Rule r : kAllRules) {
        if (to_string(r) == name) return r;
    }
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

Hyperparameters resolve(Rule rule, const Overrides& o) {
    Hyperparameters hp;
    hp.delta = is_adam(rule) ? 1e-8 : 1e-6;
    if (o.rho) hp.rho = *o.rho;
    if (o.rho1) hp.rho1 = *o.rho1;
    if (o.rho2) hp.rho2 = *o.rho2;
    if (o.mu) hp.mu = *o.mu;
    if (o.delta) hp.delta = *o.delta;

    if (rule == Rule::momentum && !(hp.mu >= 0.0 && hp.mu < 1.0)) {
        throw ConfigError("momentum mu must lie in [0, 1), got " + std::to_string(hp.mu));
    }
    if (rule == Rule::nesterov) require_open_unit(hp.mu, "nesterov mu");
    if (is_rmsprop(rule)) require_open_unit(hp.rho, "rho");
    if (is_adam(rule)) {
        require_open_unit(hp.rho1, "rho1");
        require_open_unit(hp.rho2, "rho2");
    }
    if (!(hp.delta > 0.0)) throw ConfigError("delta must be positive");
    return hp;
}

void sgd_step(Tensor& param, const Tensor& grad, double lr) {
    require_same_shape(param, grad, "gradient");
    double* p = param.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) p[i] -= lr * g[i];
}

void momentum_step(Tensor& param, const Tensor& grad, double lr, double mu, Tensor& velocity) {
    require_same_shape(param, grad, "gradient");
    require_same_shape(param, velocity, "velocity");
    double* p = param.data();
    double* v = velocity.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        v[i] = mu * v[i] - lr * g[i];
        p[i] += v[i];
    }
}

void nesterov_step(Tensor& param, const Tensor& grad, double lr, double mu, Tensor& velocity) {
    require_same_shape(param, grad, "gradient");
    require_same_shape(param, velocity, "velocity");
    double* p = param.data();
    double* v = velocity.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        v[i] = mu * v[i] + g[i];
        p[i] -= lr * (g[i] + mu * v[i]);
    }
}

void adagrad_step(Tensor& param, const Tensor& grad, double lr, double delta, Tensor& accum) {
    require_same_shape(param, grad, "gradient");
    require_same_shape(param, accum, "accumulator");
    double* p = param.data();
    double* r = accum.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        r[i] += g[i] * g[i];
        p[i] -= lr / (delta + std::sqrt(r[i])) * g[i];
    }
}

void rmsprop_step(Tensor& param, const Tensor& grad, double lr, double rho, double delta, Tensor& accum,
                  Tensor* grad_mean) {
    require_same_shape(param, grad, "gradient");
    require_same_shape(param, accum, "accumulator");
    if (grad_mean) require_same_shape(param, *grad_mean, "gradient mean");
    double* p = param.data();
    double* r = accum.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        r[i] = rho * r[i] + (1.0 - rho) * g[i] * g[i];
        double second = r[i];
        if (grad_mean) {
            double& s = (*grad_mean)[i];
            s = rho * s + (1.0 - rho) * g[i];
            second = std::max(r[i] - s * s, 0.0);
        }
        p[i] -= lr / (delta + std::sqrt(second)) * g[i];
    }
}

void adam_step(Tensor& param, const Tensor& grad, double lr, double rho1, double rho2, double delta,
               std::uint64_t step, Tensor& moment1, Tensor& moment2, Tensor* max_moment2) {
    require_same_shape(param, grad, "gradient");
    require_same_shape(param, moment1, "first moment");
    require_same_shape(param, moment2, "second moment");
    if (max_moment2) require_same_shape(param, *max_moment2, "max second moment");
    if (step == 0) throw ContractError("adam step counter must start at 1");

    const double t = static_cast<double>(step);
    const double correction1 = 1.0 - std::pow(rho1, t);
    const double correction2 = 1.0 - std::pow(rho2, t);
    double* p = param.data();
    double* m = moment1.data();
    double* v = moment2.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = rho1 * m[i] + (1.0 - rho1) * g[i];
        v[i] = rho2 * v[i] + (1.0 - rho2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        double v_hat = v[i] / correction2;
        if (max_moment2) {
            double& vmax = (*max_moment2)[i];
            vmax = std::max(vmax, v_hat);
            v_hat = vmax;
        }
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + delta);
    }
}

Optimizer::Optimizer(const OptimizerSpec& spec) : rule_(spec.rule), hp_(resolve(spec.rule, spec.overrides)) {}

void Optimizer::allocate(std::span<Tensor* const> params) {
    state_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Shape& s = params[i]->shape();
        ParamState& st = state_[i];
        if (uses_momentum(rule_)) st.velocity = Tensor(s);
        if (rule_ == Rule::adagrad || is_rmsprop(rule_)) st.accum = Tensor(s);
        if (rule_ == Rule::rmsprop_centered) st.grad_mean = Tensor(s);
        if (is_adam(rule_)) {
            st.moment1 = Tensor(s);
            st.moment2 = Tensor(s);
        }
        if (rule_ == Rule::amsgrad) st.max_moment2 = Tensor(s);
    }
}

void Optimizer::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, double lr) {
    if (params.size() != grads.size()) throw ContractError("parameter and gradient counts differ");
    if (!(lr > 0.0)) throw ContractError("learning rate must be positive, got " + std::to_string(lr));
    if (state_.empty() && (steps_ == 0 || rule_ == Rule::sgd)) allocate(params);
    if (state_.size() != params.size()) throw ContractError("optimizer bound to a different parameter list");

    ++steps_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        ParamState& st = state_[i];
        switch (rule_) {
            case Rule::sgd: sgd_step(p, g, lr); break;
            case Rule::momentum: momentum_step(p, g, lr, hp_.mu, st.velocity); break;
            case Rule::nesterov: nesterov_step(p, g, lr, hp_.mu, st.velocity); break;
            case Rule::adagrad: adagrad_step(p, g, lr, hp_.delta, st.accum); break;
            case Rule::rmsprop: rmsprop_step(p, g, lr, hp_.rho, hp_.delta, st.accum, nullptr); break;
            case Rule::rmsprop_centered:
                rmsprop_step(p, g, lr, hp_.rho, hp_.delta, st.accum, &st.grad_mean);
                break;
            case Rule::adam:
                adam_step(p, g, lr, hp_.rho1, hp_.rho2, hp_.delta, steps_, st.moment1, st.moment2, nullptr);
                break;
            case Rule::amsgrad:
                adam_step(p, g, lr, hp_.rho1, hp_.rho2, hp_.delta, steps_, st.moment1, st.moment2, &st.max_moment2);
                break;
        }
    }
}

namespace {

constexpr const char* kSlotNames[] = {"velocity", "accum", "grad_mean", "moment1", "moment2", "max_moment2"};

template <typename State>
auto slots_of(State& s) {
    return std::array{&s.velocity, &s.accum, &s.grad_mean, &s.moment1, &s.moment2, &s.max_moment2};
}

bool slot_used(Rule rule, std::size_t slot) {
    switch (slot) {
        case 0: return uses_momentum(rule);
        case 1: return rule == Rule::adagrad || is_rmsprop(rule);
        case 2: return rule == Rule::rmsprop_centered;
        case 3:
        case 4: return is_adam(rule);
        default: return rule == Rule::amsgrad;
    }
}

}  // namespace

std::vector<NamedTensor> Optimizer::export_state() const {
    std::vector<NamedTensor> out;
    out.push_back({"step", Tensor({1}, {static_cast<double>(steps_)})});
    for (std::size_t i = 0; i < state_.size(); ++i) {
        const auto slots = slots_of(state_[i]);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            if (slot_used(rule_, k)) out.push_back({"param" + std::to_string(i) + "." + kSlotNames[k], *slots[k]});
        }
    }
    return out;
}

void Optimizer::import_state(const std::vector<NamedTensor>& tensors) {
    if (tensors.empty() || tensors.front().name != "step") throw InputError("optimizer state lacks a step counter");
    std::vector<ParamState> restored;
    for (std::size_t t = 1; t < tensors.size(); ++t) {
        const std::string& name = tensors[t].name;
        const auto dot = name.find('.');
        if (name.rfind("param", 0) != 0 || dot == std::string::npos) throw InputError("bad slot name " + name);
        const std::size_t index = std::stoul(name.substr(5, dot - 5));
        if (index >= restored.size()) restored.resize(index + 1);
        const std::string slot = name.substr(dot + 1);
        auto it = std::find(std::begin(kSlotNames), std::end(kSlotNames), slot);
        if (it == std::end(kSlotNames)) throw InputError("unknown slot " + slot);
        const auto k = static_cast<std::size_t>(it - std::begin(kSlotNames));
        if (!slot_used(rule_, k)) throw InputError("slot " + slot + " does not belong to " + std::string(to_string(rule_)));
        *slots_of(restored[index])[k] = tensors[t].value;
    }
    steps_ = static_cast<std::uint64_t>(tensors.front().value[0]);
    state_ = std::move(restored);
}

Optimizer make_optimizer(std::string_view name, const Overrides& overrides) {
    return Optimizer(OptimizerSpec{parse_rule(name), overrides});
}

}  // namespace taso::optim
