#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taso/checkpoint.hpp"
#include "taso/tensor.hpp"

namespace taso::optim {

enum class Rule { sgd, momentum, nesterov, adagrad, rmsprop, rmsprop_centered, adam, amsgrad };

inline constexpr Rule kAllRules[] = {Rule::sgd,     Rule::momentum,         Rule::nesterov, Rule::adagrad,
                                     Rule::rmsprop, Rule::rmsprop_centered, Rule::adam,     Rule::amsgrad};

std::string_view to_string(Rule rule);
using taso::to_string;
/// Accepts the names produced by to_string(); throws ConfigError otherwise.
Rule parse_rule(std::string_view name);

/// Optional overrides; unset fields take the rule's defaults.
struct Overrides {
    std::optional<double> rho;    // RMSProp decay
    std::optional<double> rho1;   // Adam first-moment decay
    std::optional<double> rho2;   // Adam second-moment decay
    std::optional<double> mu;     // momentum / Nesterov coefficient
    std::optional<double> delta;  // stability constant

    friend bool operator==(const Overrides&, const Overrides&) = default;
};

/// Fully resolved hyperparameters of one rule.
struct Hyperparameters {
    double rho = 0.99;
    double rho1 = 0.9;
    double rho2 = 0.99;
    double mu = 0.9;
    double delta = 1e-6;

    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct OptimizerSpec {
    Rule rule = Rule::sgd;
    Overrides overrides;

    friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;
};

/// Defaults: rho = 0.99, rho1 = 0.9, rho2 = 0.99, mu = 0.9,
/// delta = 1e-6 (Adagrad, RMSProp) or 1e-8 (Adam, AmsGrad).
Hyperparameters resolve(Rule rule, const Overrides& overrides);

// Single-tensor update kernels. Each throws ContractError when a tensor shape
// differs from `param`. Slots must be pre-sized to the parameter shape.

void sgd_step(Tensor& param, const Tensor& grad, double lr);

/// velocity <- mu*velocity - lr*g;  param <- param + velocity
void momentum_step(Tensor& param, const Tensor& grad, double lr, double mu, Tensor& velocity);

/// velocity <- mu*velocity + g;  param <- param - lr*(g + mu*velocity)
void nesterov_step(Tensor& param, const Tensor& grad, double lr, double mu, Tensor& velocity);

/// accum <- accum + g*g;  param <- param - lr*g/(delta + sqrt(accum))
void adagrad_step(Tensor& param, const Tensor& grad, double lr, double delta, Tensor& accum);

/// accum <- rho*accum + (1-rho)*g*g. With `grad_mean` the centered variant is
/// used: grad_mean <- rho*grad_mean + (1-rho)*g and the denominator becomes
/// delta + sqrt(max(accum - grad_mean^2, 0)).
void rmsprop_step(Tensor& param, const Tensor& grad, double lr, double rho, double delta, Tensor& accum,
                  Tensor* grad_mean);

/// `step` is the already-incremented step count t >= 1. With `max_moment2`
/// (AmsGrad) the running elementwise max of the bias-corrected second
/// moment replaces it in the denominator.
void adam_step(Tensor& param, const Tensor& grad, double lr, double rho1, double rho2, double delta,
               std::uint64_t step, Tensor& moment1, Tensor& moment2, Tensor* max_moment2);

/// Per-parameter slots; only the ones a rule uses are non-empty.
struct ParamState {
    Tensor velocity;
    Tensor accum;
    Tensor grad_mean;
    Tensor moment1;
    Tensor moment2;
    Tensor max_moment2;
};

/// One update rule applied across a list of parameter tensors.
class Optimizer {
public:
    explicit Optimizer(const OptimizerSpec& spec);

    Rule rule() const noexcept { return rule_; }
    const Hyperparameters& hyperparameters() const noexcept { return hp_; }

    /// Applies one update with learning rate `lr` (> 0). The first call fixes
    /// the number and shapes of the parameters.
    void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, double lr);

    std::uint64_t step_count() const noexcept { return steps_; }
    const std::vector<ParamState>& state() const noexcept { return state_; }

    /// Slots as named tensors (plus the step counter) for checkpointing.
    std::vector<NamedTensor> export_state() const;
    void import_state(const std::vector<NamedTensor>& tensors);

private:
    void allocate(std::span<Tensor* const> params);

    Rule rule_;
    Hyperparameters hp_;
    std::vector<ParamState> state_;
    std::uint64_t steps_ = 0;
};

Optimizer make_optimizer(std::string_view name, const Overrides& overrides = {});

}  // namespace taso::optim
