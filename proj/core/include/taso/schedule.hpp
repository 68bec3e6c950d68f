#pragma once

#include <cstddef>
#include <iosfwd>
#include <variant>
#include <vector>

namespace taso::schedule {

/// Parameters of the sigmoidal learning-rate curve
///   lr(k) = initial_lr / (1 + exp(alpha * (k / total_epochs - beta))) + final_lr
/// for 1-based epochs k in [1, total_epochs].
struct TasoConfig {
    double initial_lr = 0.0;
    double final_lr = 0.0;
    double alpha = 25.0;
    double beta = 0.7;
    std::size_t total_epochs = 1;

    friend bool operator==(const TasoConfig&, const TasoConfig&) = default;
};

/// Throws ConfigError unless initial_lr > 0, 0 <= final_lr < initial_lr,
/// alpha > 0, beta in (0, 1) and total_epochs >= 1.
TasoConfig make_taso(double initial_lr, double final_lr, double alpha, double beta, std::size_t total_epochs);

/// alpha = 25, beta = 0.7, final_lr = initial_lr / 20.
TasoConfig default_config(double initial_lr, std::size_t total_epochs);

/// Throws ContractError when epoch is outside [1, total_epochs].
double taso_lr(const TasoConfig& cfg, std::size_t epoch);

/// Outcome of the "alpha*beta >= 6 and alpha*(1-beta) >= 6" rule. The relative
/// endpoint deviations are always filled in:
///   start = |lr(1) - (initial_lr + final_lr)| / initial_lr
///   end   = |lr(total_epochs) - final_lr| / initial_lr
struct Validation {
    bool start_ok = true;
    bool end_ok = true;
    double start_deviation = 0.0;
    double end_deviation = 0.0;

    bool ok() const noexcept { return start_ok && end_ok; }
};

Validation validate(const TasoConfig& cfg);

struct Constant {
    double lr = 0.0;

    friend bool operator==(const Constant&, const Constant&) = default;
};

Constant make_constant(double lr);

using Schedule = std::variant<TasoConfig, Constant>;

/// Constant schedules ignore the epoch; TASO schedules require 1 <= epoch <= total_epochs.
double lr_for_epoch(const Schedule& schedule, std::size_t epoch);

struct CurvePoint {
    std::size_t epoch;
    double lr;
};

std::vector<CurvePoint> export_curve(const Schedule& schedule, std::size_t total_epochs);

/// Header `epoch,lr`, shortest round-trip decimals.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace taso::schedule
