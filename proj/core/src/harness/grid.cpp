#include <algorithm>
#include <cmath>
#include <numeric>

#include "taso/error.hpp"
#include "taso/harness.hpp"

namespace taso::harness {

std::vector<std::vector<double>> GridSpec::cells() const {
    if (axes.empty()) throw ConfigError("grid has no axes");
    for (const GridAxis& a : axes) {
        if (a.values.empty()) throw ConfigError("grid axis '" + a.name + "' is empty");
    }
    std::vector<std::vector<double>> out{{}};
    for (const GridAxis& a : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out) {
            for (double v : a.values) {
                next.push_back(prefix);
                next.back().push_back(v);
            }
        }
        out = std::move(next);
    }
    return out;
}

GridSpec default_grid(std::string_view optimizer) {
    if (optimizer == "taso") return {{{"alpha", {10, 25, 50}}, {"beta", {0.3, 0.5, 0.7}}}};
    using optim::Rule;
    switch (optim::parse_rule(optimizer)) {
        case Rule::adagrad: return {{{"lr", {0.1, 0.05, 0.01, 0.0075, 0.005}}}};
        case Rule::rmsprop:
        case Rule::rmsprop_centered: return {{{"lr", {0.01, 0.005, 0.001, 0.0005, 0.0003, 0.0001}}}};
        case Rule::adam:
        case Rule::amsgrad: return {{{"lr", {0.005, 0.001, 0.0005, 0.0003, 0.0001, 0.00005}}}};
        case Rule::sgd:
        case Rule::momentum:
        case Rule::nesterov: return {{{"lr", {2, 1, 0.5, 0.25, 0.05, 0.01, 0.001}}}};
    }
    throw ConfigError("no default grid for '" + std::string(optimizer) + "'");
}

ExperimentConfig apply_cell(const ExperimentConfig& base, const GridSpec& grid, const std::vector<double>& cell) {
    if (cell.size() != grid.axes.size()) throw ContractError("grid cell does not match the axis count");
    ExperimentConfig cfg = base;
    for (std::size_t i = 0; i < cell.size(); ++i) {
        const std::string& name = grid.axes[i].name;
        if (name == "lr") {
            cfg.schedule.lr = cell[i];
        } else if (name == "mu") {
            cfg.optimizer.overrides.mu = cell[i];
        } else if (name == "alpha" || name == "beta") {
            if (cfg.schedule.kind != ScheduleSpec::Kind::taso) {
                throw ConfigError("grid axis '" + name + "' needs the taso schedule");
            }
            (name == "alpha" ? cfg.schedule.alpha : cfg.schedule.beta) = cell[i];
        } else {
            throw ConfigError("unknown grid axis '" + name + "'");
        }
    }
    validate(cfg);
    return cfg;
}

std::vector<std::size_t> rank_cells(const std::vector<AggregateRecord>& cells, SelectionMetric metric) {
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);
    auto dead = [&](std::size_t i) { return cells[i].diverged_count >= cells[i].runs.size(); };
    auto better = [&](std::size_t a, std::size_t b) {
        if (dead(a) || dead(b)) return !dead(a) && dead(b);
        const double acc_a = cells[a].final_test_acc.mean, acc_b = cells[b].final_test_acc.mean;
        const double loss_a = cells[a].final_test_loss.mean, loss_b = cells[b].final_test_loss.mean;
        if (metric == SelectionMetric::test_accuracy) {
            if (acc_a != acc_b) return acc_a > acc_b;
            return loss_a < loss_b;
        }
        if (loss_a != loss_b) return loss_a < loss_b;
        return acc_a > acc_b;
    };
    std::stable_sort(order.begin(), order.end(), better);
    return order;
}

GridResult grid_search(const ExperimentConfig& base, const GridSpec& grid, const Datasets& datasets,
                       SelectionMetric metric, const RunOptions& options) {
    GridResult out;
    out.grid = grid;
    for (const auto& values : grid.cells()) {
        GridCell cell;
        cell.values = values;
        cell.config = apply_cell(base, grid, values);
        cell.result = repeat(cell.config, datasets, cell.config.seeds, options);
        out.cells.push_back(std::move(cell));
    }
    std::vector<AggregateRecord> records;
    for (const GridCell& c : out.cells) records.push_back(c.result.aggregate);
    const auto order = rank_cells(records, metric);
    for (std::size_t r = 0; r < order.size(); ++r) out.cells[order[r]].rank = r + 1;
    out.best = order.front();
    return out;
}

}  // namespace taso::harness
