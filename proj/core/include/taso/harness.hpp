#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taso/data.hpp"
#include "taso/nn.hpp"
#include "taso/optim.hpp"
#include "taso/schedule.hpp"

namespace taso::harness {

// ---------------------------------------------------------------------------
// Experiment description
// ---------------------------------------------------------------------------

struct ModelSpec {
    enum class Kind { lenet5, mlp };
    Kind kind = Kind::mlp;
    std::vector<std::size_t> widths;  // mlp only

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct DatasetSpec {
    enum class Kind { mnist, blobs, xor_ };
    Kind kind = Kind::blobs;

    // mnist
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::size_t train_limit = 0;  // 0 keeps every sample
    std::size_t test_limit = 0;

    // synthetic; the test split is drawn with seed + 1
    std::size_t train_size = 1000;
    std::size_t test_size = 1000;
    std::uint64_t seed = 0;

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

/// Learning-rate schedule before the epoch budget is known. For TASO an unset
/// final_lr means lr / 20.
struct ScheduleSpec {
    enum class Kind { taso, constant };
    Kind kind = Kind::constant;
    double lr = 0.1;  // constant rate, or the TASO initial rate
    std::optional<double> final_lr;
    double alpha = 25.0;
    double beta = 0.7;

    schedule::Schedule resolve(std::size_t epochs) const;

    friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct ExperimentConfig {
    ModelSpec model;
    DatasetSpec dataset;
    optim::OptimizerSpec optimizer;
    ScheduleSpec schedule;
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    std::vector<std::uint64_t> seeds;
    std::string out = "runs";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws ConfigError on any violated domain constraint.
void validate(const ExperimentConfig& cfg);

/// JSON with top-level keys model, dataset, optimizer, schedule, epochs,
/// batch_size, seeds, out. Unknown keys anywhere are rejected.
std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig parse_config(std::string_view json);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Names accepted by default_mode(): the optimizer rules plus "taso".
std::vector<std::string> known_optimizers();

/// Default (non-validated) hyperparameters per optimizer: adagrad 0.05,
/// rmsprop 0.0005 non-centered, adam -> AmsGrad 0.0005, taso -> momentum 0.9
/// with the sigmoid schedule (0.05, alpha 25, beta 0.7, final 0.05/20).
ExperimentConfig default_mode(std::string_view model, std::string_view dataset, std::string_view optimizer);

/// Seeds base, base + 1, ..., base + count - 1.
std::vector<std::uint64_t> derive_seeds(std::uint64_t base, std::size_t count);

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct Datasets {
    data::Dataset train;
    data::Dataset test;
};

/// Loads (or generates) both splits; MNIST inputs are flattened for MLPs.
Datasets load_datasets(const ExperimentConfig& cfg);

nn::Network build_model(const ModelSpec& model, const data::Dataset& train, std::uint64_t seed);

struct EpochRow {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;  // percent
    double test_loss = 0.0;
    double test_acc = 0.0;  // percent

    friend bool operator==(const EpochRow&, const EpochRow&) = default;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<EpochRow> rows;
    bool diverged = false;
    std::optional<std::size_t> divergence_epoch;
    double wall_seconds = 0.0;

    const EpochRow& final_row() const { return rows.back(); }
};

struct RunOptions {
    std::size_t jobs = 1;
    std::size_t eval_batch = 500;
    /// Called after every epoch (from worker threads when jobs > 1).
    std::function<void(std::uint64_t seed, const EpochRow&)> on_epoch;
};

/// Mean metrics of `net` over a dataset, evaluated in chunks of `eval_batch`.
nn::Evaluation evaluate(const nn::Network& net, const data::Dataset& ds, std::size_t eval_batch = 500);

/// One complete training run. A non-finite loss marks the run diverged and
/// keeps the rows of the finished epochs.
RunRecord train(const ExperimentConfig& cfg, const Datasets& datasets, std::uint64_t seed,
                const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // sample (n - 1); 0 for a single value

    friend bool operator==(const Stat&, const Stat&) = default;
};

/// Two-pass mean and sample standard deviation, computed on values shifted by
/// the first one; NaN for an empty input.
Stat mean_std(const std::vector<double>& values);

struct RunSummary {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::optional<std::size_t> divergence_epoch;
    EpochRow final_row;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct EpochAggregate {
    std::size_t epoch = 0;
    double lr = 0.0;
    Stat train_loss, train_acc, test_loss, test_acc;

    friend bool operator==(const EpochAggregate&, const EpochAggregate&) = default;
};

/// Statistics over the runs that did not diverge.
struct AggregateRecord {
    std::vector<RunSummary> runs;
    std::size_t diverged_count = 0;
    Stat final_train_loss, final_train_acc, final_test_loss, final_test_acc;
    std::vector<EpochAggregate> curves;

    friend bool operator==(const AggregateRecord&, const AggregateRecord&);
};

AggregateRecord aggregate(const std::vector<RunRecord>& runs);

std::string to_json(const AggregateRecord& record);
AggregateRecord parse_aggregate(std::string_view json);

struct RepeatResult {
    std::vector<RunRecord> runs;
    AggregateRecord aggregate;
};

/// Trains every seed (in parallel when options.jobs > 1) and aggregates.
RepeatResult repeat(const ExperimentConfig& cfg, const Datasets& datasets, const std::vector<std::uint64_t>& seeds,
                    const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

/// Axis names: "lr" (constant rate or TASO initial rate), "alpha", "beta", "mu".
struct GridAxis {
    std::string name;
    std::vector<double> values;
};

struct GridSpec {
    std::vector<GridAxis> axes;

    /// Cartesian product, first axis outermost.
    std::vector<std::vector<double>> cells() const;
};

/// Built-in search lists per optimizer name (see known_optimizers()).
GridSpec default_grid(std::string_view optimizer);

ExperimentConfig apply_cell(const ExperimentConfig& base, const GridSpec& grid, const std::vector<double>& cell);

enum class SelectionMetric { test_accuracy, test_loss };

struct GridCell {
    std::vector<double> values;
    ExperimentConfig config;
    RepeatResult result;
    std::size_t rank = 0;  // 1 = best
};

struct GridResult {
    GridSpec grid;
    std::vector<GridCell> cells;  // declaration order
    std::size_t best = 0;         // index into cells
};

/// Indices of `cells` from best to worst: accuracy descending, then loss
/// ascending, then declaration order (or loss first for SelectionMetric::test_loss).
/// Cells whose runs all diverged come last.
std::vector<std::size_t> rank_cells(const std::vector<AggregateRecord>& cells, SelectionMetric metric);

GridResult grid_search(const ExperimentConfig& base, const GridSpec& grid, const Datasets& datasets,
                       SelectionMetric metric = SelectionMetric::test_accuracy, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline constexpr std::string_view kRunCsvHeader = "epoch,lr,train_loss,train_acc,test_loss,test_acc";

std::string run_csv(const RunRecord& record);
std::vector<EpochRow> parse_run_csv(std::string_view csv);

/// <dir>/config.json, <dir>/aggregate.json, <dir>/runs/seed_<s>.csv and .json.
void emit(const ExperimentConfig& cfg, const RepeatResult& result, const std::filesystem::path& dir);

/// <dir>/grid.csv, <dir>/grid.json and one emit() directory per cell under <dir>/cells/.
void emit(const GridResult& result, const std::filesystem::path& dir);

std::string grid_csv(const GridResult& result);

}  // namespace taso::harness
