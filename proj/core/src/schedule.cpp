#include "taso/schedule.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "taso/error.hpp"
#include "taso/numfmt.hpp"

namespace taso::schedule {
namespace {

constexpr double kMinimumMargin = 6.0;

}  // namespace

TasoConfig make_taso(double initial_lr, double final_lr, double alpha, double beta, std::size_t total_epochs) {
    if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
    if (!(final_lr >= 0.0 && final_lr < initial_lr)) {
        throw ConfigError("final learning rate must lie in [0, initial learning rate)");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
    if (total_epochs < 1) throw ConfigError("total epochs must be at least 1");
    return {initial_lr, final_lr, alpha, beta, total_epochs};
}

TasoConfig default_config(double initial_lr, std::size_t total_epochs) {
    return make_taso(initial_lr, initial_lr / 20.0, 25.0, 0.7, total_epochs);
}

double taso_lr(const TasoConfig& cfg, std::size_t epoch) {
    if (epoch < 1 || epoch > cfg.total_epochs) {
        throw ContractError("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(cfg.total_epochs) +
                            "]");
    }
    const double progress = static_cast<double>(epoch) / static_cast<double>(cfg.total_epochs);
    return cfg.initial_lr / (1.0 + std::exp(cfg.alpha * (progress - cfg.beta))) + cfg.final_lr;
}

Validation validate(const TasoConfig& cfg) {
    Validation v;
    v.start_ok = cfg.alpha * cfg.beta >= kMinimumMargin;
    v.end_ok = cfg.alpha * (1.0 - cfg.beta) >= kMinimumMargin;
    v.start_deviation = std::abs(taso_lr(cfg, 1) - (cfg.initial_lr + cfg.final_lr)) / cfg.initial_lr;
    v.end_deviation = std::abs(taso_lr(cfg, cfg.total_epochs) - cfg.final_lr) / cfg.initial_lr;
    return v;
}

Constant make_constant(double lr) {
    if (!(lr > 0.0)) throw ConfigError("constant learning rate must be positive");
    return {lr};
}

double lr_for_epoch(const Schedule& schedule, std::size_t epoch) {
    if (const auto* c = std::get_if<Constant>(&schedule)) return c->lr;
    return taso_lr(std::get<TasoConfig>(schedule), epoch);
}

std::vector<CurvePoint> export_curve(const Schedule& schedule, std::size_t total_epochs) {
    if (total_epochs < 1) throw ContractError("curve needs at least one epoch");
    std::vector<CurvePoint> curve;
    curve.reserve(total_epochs);
    for (std::size_t k = 1; k <= total_epochs; ++k) curve.push_back({k, lr_for_epoch(schedule, k)});
    return curve;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "epoch,lr\n";
    for (const auto& p : curve) out << p.epoch << ',' << format_double(p.lr) << '\n';
}

}  // namespace taso::schedule
