#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taso/optim.hpp"
#include "taso/schedule.hpp"

namespace taso::benchfn {

using Point = std::vector<double>;

/// A differentiable function with its exact gradient.
struct LandscapeFn {
    std::string name;
    std::size_t dimension = 2;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::optional<Point> minimizer;
    std::vector<Point> saddles;

    Point grad_at(std::span<const double> x) const;
};

/// f(x, y) = (x^2 + cond * y^2) / 2.
LandscapeFn quadratic(double cond);

/// Chained Rosenbrock sum_i (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)^2; minimizer (1, ..., 1).
LandscapeFn rosenbrock(std::size_t dimension = 2);

/// f(x, y) = x^3 - 3 x y^2.
LandscapeFn monkey_saddle();

/// Constants of plateau_saddle(). With w(x) the C-infinity step that is 0 for
/// x <= blend_begin and 1 for x >= blend_end:
///
///   ridge(x, y)  = ridge_height * sech^2(x / ridge_width) + plateau_curvature * y^2 / 2
///   basin(x, y)  = basin_curvature * ((x - basin_center)^2 + y^2) / 2 + basin_floor
///   f            = (1 - w(x)) * ridge + w(x) * basin
///
/// The origin is a saddle (curvature -2*h/width^2 along x, +plateau_curvature
/// along y) sitting on a wide, slowly sloping plateau; descending along +x
/// leads through the blend into the basin whose minimum is
/// (basin_center, 0) with value basin_floor. f is strictly
/// decreasing along the positive x axis up to the basin center.
struct PlateauSaddle {
    static constexpr double ridge_height = 1.0;
    static constexpr double ridge_width = 2.0;
    static constexpr double plateau_curvature = 1.0;
    static constexpr double blend_begin = 3.0;
    static constexpr double blend_end = 5.0;
    static constexpr double basin_center = 7.0;
    static constexpr double basin_curvature = 1.0;
    static constexpr double basin_floor = -9.0;
    /// First-passage threshold: inside the basin, f <= basin_floor + 1.
    static constexpr double basin_threshold = basin_floor + 1.0;
};

LandscapeFn plateau_saddle();

/// Every registered landscape (2-D and 10-D variants).
std::vector<LandscapeFn> registry();

struct TrajectoryOptions {
    std::size_t steps = 1000;
    /// First passage is the earliest step with f <= threshold.
    double threshold = -INFINITY;
    /// Standard deviation of zero-mean Gaussian noise added to every gradient component.
    double gradient_noise = 0.0;
    std::uint64_t seed = 0;
    double divergence_bound = 1e6;
};

/// points[t] / values[t] are the iterate after t updates (t = 0 is the start);
/// lrs[t] is the learning rate that produced points[t] (0 for the start).
struct Trajectory {
    std::vector<Point> points;
    std::vector<double> values;
    std::vector<double> lrs;
    std::optional<std::size_t> first_passage;
    std::optional<std::size_t> diverged_at;

    double final_value() const { return values.back(); }
    /// Mean of f over the last ceil(fraction * steps) iterates.
    double tail_mean(double fraction) const;
};

/// Runs `steps` optimizer updates on `fn` from `start`; update t uses
/// lr_for_epoch(schedule, t). A TASO schedule must therefore span `steps`.
/// Divergence (|x_i| > bound or non-finite f) ends the run and is reported,
/// not thrown.
Trajectory run_trajectory(const LandscapeFn& fn, const optim::OptimizerSpec& optimizer,
                          const schedule::Schedule& schedule, std::span<const double> start,
                          const TrajectoryOptions& options);

/// Header `step,x0,...,x{d-1},f,lr`.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace taso::benchfn
