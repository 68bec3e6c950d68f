#include "taso/benchfn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "taso/error.hpp"
#include "taso/numfmt.hpp"

namespace taso::benchfn {
namespace {

void require_dim(std::span<const double> x, std::size_t dim) {
    if (x.size() != dim) throw ContractError("expected a point of dimension " + std::to_string(dim));
}

// exp(-1/t) for t > 0, else 0; and its derivative.
double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bump_slope(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

struct Blend {
    double weight;
    double slope;
};

Blend smooth_step(double x, double begin, double end) {
    const double span = end - begin;
    const double t = (x - begin) / span;
    if (t <= 0.0) return {0.0, 0.0};
    if (t >= 1.0) return {1.0, 0.0};
    const double a = bump(t), b = bump(1.0 - t);
    const double da = bump_slope(t), db = -bump_slope(1.0 - t);
    const double sum = a + b;
    return {a / sum, (da * sum - a * (da + db)) / (sum * sum) / span};
}

}  // namespace

Point LandscapeFn::grad_at(std::span<const double> x) const {
    Point g(dimension);
    gradient(x, g);
    return g;
}

LandscapeFn quadratic(double cond) {
    if (!(cond >= 1.0)) throw ConfigError("condition number must be >= 1");
    LandscapeFn fn;
    fn.name = "quadratic";
    fn.dimension = 2;
    fn.value = [cond](std::span<const double> x) {
        require_dim(x, 2);
        return 0.5 * (x[0] * x[0] + cond * x[1] * x[1]);
    };
    fn.gradient = [cond](std::span<const double> x, std::span<double> g) {
        require_dim(x, 2);
        g[0] = x[0];
        g[1] = cond * x[1];
    };
    fn.minimizer = Point{0.0, 0.0};
    return fn;
}

LandscapeFn rosenbrock(std::size_t dimension) {
    if (dimension < 2) throw ConfigError("rosenbrock needs dimension >= 2");
    LandscapeFn fn;
    fn.name = dimension == 2 ? "rosenbrock" : "rosenbrock" + std::to_string(dimension);
    fn.dimension = dimension;
    fn.value = [dimension](std::span<const double> x) {
        require_dim(x, dimension);
        double f = 0.0;
        for (std::size_t i = 0; i + 1 < dimension; ++i) {
            const double a = 1.0 - x[i], b = x[i + 1] - x[i] * x[i];
            f += a * a + 100.0 * b * b;
        }
        return f;
    };
    fn.gradient = [dimension](std::span<const double> x, std::span<double> g) {
        require_dim(x, dimension);
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i + 1 < dimension; ++i) {
            const double b = x[i + 1] - x[i] * x[i];
            g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * b;
            g[i + 1] += 200.0 * b;
        }
    };
    fn.minimizer = Point(dimension, 1.0);
    return fn;
}

LandscapeFn monkey_saddle() {
    LandscapeFn fn;
    fn.name = "monkey_saddle";
    fn.dimension = 2;
    fn.value = [](std::span<const double> p) {
        require_dim(p, 2);
        return p[0] * p[0] * p[0] - 3.0 * p[0] * p[1] * p[1];
    };
    fn.gradient = [](std::span<const double> p, std::span<double> g) {
        require_dim(p, 2);
        g[0] = 3.0 * p[0] * p[0] - 3.0 * p[1] * p[1];
        g[1] = -6.0 * p[0] * p[1];
    };
    fn.saddles = {Point{0.0, 0.0}};
    return fn;
}

LandscapeFn plateau_saddle() {
    using P = PlateauSaddle;
    LandscapeFn fn;
    fn.name = "plateau_saddle";
    fn.dimension = 2;
    fn.value = [](std::span<const double> p) {
        require_dim(p, 2);
        const double x = p[0], y = p[1];
        const double sech = 1.0 / std::cosh(x / P::ridge_width);
        const double ridge = P::ridge_height * sech * sech + 0.5 * P::plateau_curvature * y * y;
        const double dx = x - P::basin_center;
        const double basin = 0.5 * P::basin_curvature * (dx * dx + y * y) + P::basin_floor;
        const double w = smooth_step(x, P::blend_begin, P::blend_end).weight;
        return (1.0 - w) * ridge + w * basin;
    };
    fn.gradient = [](std::span<const double> p, std::span<double> g) {
        require_dim(p, 2);
        const double x = p[0], y = p[1];
        const double u = x / P::ridge_width;
        const double sech = 1.0 / std::cosh(u);
        const double ridge = P::ridge_height * sech * sech + 0.5 * P::plateau_curvature * y * y;
        const double ridge_x = -2.0 * P::ridge_height / P::ridge_width * sech * sech * std::tanh(u);
        const double ridge_y = P::plateau_curvature * y;
        const double dx = x - P::basin_center;
        const double basin = 0.5 * P::basin_curvature * (dx * dx + y * y) + P::basin_floor;
        const auto [w, dw] = smooth_step(x, P::blend_begin, P::blend_end);
        g[0] = (1.0 - w) * ridge_x + w * P::basin_curvature * dx + dw * (basin - ridge);
        g[1] = (1.0 - w) * ridge_y + w * P::basin_curvature * y;
    };
    fn.minimizer = Point{P::basin_center, 0.0};
    fn.saddles = {Point{0.0, 0.0}};
    return fn;
}

std::vector<LandscapeFn> registry() {
    return {quadratic(1.0), quadratic(10.0), quadratic(100.0), rosenbrock(2), rosenbrock(10), monkey_saddle(),
            plateau_saddle()};
}

double Trajectory::tail_mean(double fraction) const {
    const std::size_t steps = values.size() - 1;
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * double(steps))));
    const std::size_t n = std::min(count, values.size());
    double sum = 0.0;
    for (std::size_t i = values.size() - n; i < values.size(); ++i) sum += values[i];
    return sum / double(n);
}

Trajectory run_trajectory(const LandscapeFn& fn, const optim::OptimizerSpec& optimizer,
                          const schedule::Schedule& schedule, std::span<const double> start,
                          const TrajectoryOptions& options) {
    if (options.steps < 1) throw ContractError("trajectory needs at least one step");
    if (start.size() != fn.dimension) throw ContractError("start point dimension mismatch for " + fn.name);

    optim::Optimizer opt(optimizer);
    Tensor x({fn.dimension}, Point(start.begin(), start.end()));
    Tensor g({fn.dimension});
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> noise(0.0, options.gradient_noise > 0.0 ? options.gradient_noise : 1.0);

    Trajectory tr;
    auto record = [&](double lr) {
        const double f = fn.value(x.values());
        tr.points.emplace_back(x.values().begin(), x.values().end());
        tr.values.push_back(f);
        tr.lrs.push_back(lr);
        const std::size_t t = tr.values.size() - 1;
        if (!tr.first_passage && f <= options.threshold) tr.first_passage = t;
        const bool escaped = std::any_of(x.values().begin(), x.values().end(),
                                         [&](double v) { return !(std::abs(v) <= options.divergence_bound); });
        if (!std::isfinite(f) || escaped) tr.diverged_at = t;
    };

    record(0.0);
    Tensor* params[] = {&x};
    const Tensor* grads[] = {&g};
    for (std::size_t t = 1; t <= options.steps && !tr.diverged_at; ++t) {
        fn.gradient(x.values(), g.values());
        if (options.gradient_noise > 0.0) {
            for (double& v : g.values()) v += noise(rng);
        }
        const double lr = schedule::lr_for_epoch(schedule, t);
        opt.step(params, grads, lr);
        record(lr);
    }
    return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    const std::size_t dim = trajectory.points.empty() ? 0 : trajectory.points.front().size();
    out << "step";
    for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
    out << ",f,lr\n";
    for (std::size_t t = 0; t < trajectory.points.size(); ++t) {
        out << t;
        for (double v : trajectory.points[t]) out << ',' << format_double(v);
        out << ',' << format_double(trajectory.values[t]) << ',' << format_double(trajectory.lrs[t]) << '\n';
    }
}

}  // namespace taso::benchfn
