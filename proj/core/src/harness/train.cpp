#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "taso/error.hpp"
#include "taso/harness.hpp"

namespace taso::harness {

Datasets load_datasets(const ExperimentConfig& cfg) {
    validate(cfg);
    const DatasetSpec& d = cfg.dataset;
    Datasets out;
    if (d.kind == DatasetSpec::Kind::mnist) {
        out.train = data::load_mnist(d.train_images, d.train_labels, data::Split::train);
        out.test = data::load_mnist(d.test_images, d.test_labels, data::Split::test);
        if (d.train_limit > 0) out.train = data::head(out.train, d.train_limit);
        if (d.test_limit > 0) out.test = data::head(out.test, d.test_limit);
        if (cfg.model.kind == ModelSpec::Kind::mlp) {
            for (data::Dataset* ds : {&out.train, &out.test}) {
                const std::size_t n = ds->size();
                ds->inputs = ds->inputs.reshaped({n, ds->inputs.size() / n});
            }
        }
    } else {
        const auto kind = d.kind == DatasetSpec::Kind::blobs ? data::SyntheticKind::blobs : data::SyntheticKind::xor_;
        out.train = data::make_synthetic(kind, d.train_size, d.seed, data::Split::train);
        out.test = data::make_synthetic(kind, d.test_size, d.seed + 1, data::Split::test);
    }
    return out;
}

nn::Network build_model(const ModelSpec& model, const data::Dataset& train, std::uint64_t seed) {
    if (model.kind == ModelSpec::Kind::lenet5) {
        if (train.sample_shape() != Shape{1, 28, 28}) throw ConfigError("lenet5 expects [1, 28, 28] samples");
        return nn::build_lenet5(train.num_classes, seed);
    }
    if (model.widths.empty() || train.sample_shape() != Shape{model.widths.front()}) {
        throw ConfigError("mlp input width does not match sample shape " + to_string(train.sample_shape()));
    }
    return nn::build_mlp(model.widths, seed);
}

nn::Evaluation evaluate(const nn::Network& net, const data::Dataset& ds, std::size_t eval_batch) {
    if (eval_batch == 0) throw ContractError("eval_batch must be positive");
    nn::Evaluation total;
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < ds.size(); begin += eval_batch) {
        const std::size_t count = std::min(eval_batch, ds.size() - begin);
        const data::Batch b = data::slice(ds, begin, count);
        const nn::Evaluation e = nn::score(nn::predict(net, b.inputs), b.labels);
        loss_sum += e.loss * double(e.count);
        total.correct += e.correct;
        total.count += e.count;
    }
    total.loss = loss_sum / double(total.count);
    total.accuracy = 100.0 * double(total.correct) / double(total.count);
    return total;
}

RunRecord train(const ExperimentConfig& cfg, const Datasets& datasets, std::uint64_t seed, const RunOptions& options) {
    validate(cfg);
    const auto started = std::chrono::steady_clock::now();
    const schedule::Schedule sched = cfg.schedule.resolve(cfg.epochs);

    nn::Network net = build_model(cfg.model, datasets.train, seed);
    optim::Optimizer opt(cfg.optimizer);
    const data::BatchPlan plan{cfg.batch_size, seed, false};

    RunRecord rec;
    rec.seed = seed;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = schedule::lr_for_epoch(sched, epoch);
        try {
            for (const auto& idx : data::batches(datasets.train.size(), plan, epoch)) {
                const data::Batch b = data::gather(datasets.train, idx);
                nn::ForwardPass pass = nn::forward(net, b.inputs);
                nn::loss_and_backward(net, pass, b.labels);
                auto params = net.parameters();
                auto grads = net.gradients();
                opt.step(params, grads, lr);
            }
        } catch (const NumericFault&) {
            rec.diverged = true;
        }

        EpochRow row{epoch, lr, 0.0, 0.0, 0.0, 0.0};
        if (!rec.diverged) {
            const nn::Evaluation tr = evaluate(net, datasets.train, options.eval_batch);
            const nn::Evaluation te = evaluate(net, datasets.test, options.eval_batch);
            row = {epoch, lr, tr.loss, tr.accuracy, te.loss, te.accuracy};
            rec.diverged = !std::isfinite(tr.loss) || !std::isfinite(te.loss);
        }
        if (rec.diverged) {
            rec.divergence_epoch = epoch;
            break;
        }
        rec.rows.push_back(row);
        if (options.on_epoch) options.on_epoch(seed, row);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

RepeatResult repeat(const ExperimentConfig& cfg, const Datasets& datasets, const std::vector<std::uint64_t>& seeds,
                    const RunOptions& options) {
    if (seeds.empty()) throw ConfigError("repeat needs at least one seed");
    validate(cfg);

    RepeatResult result;
    result.runs.resize(seeds.size());
    const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, seeds.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) result.runs[i] = train(cfg, datasets, seeds[i], options);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
                        try {
                            result.runs[i] = train(cfg, datasets, seeds[i], options);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                        }
                    }
                });
            }
        }
        if (failure) std::rethrow_exception(failure);
    }
    result.aggregate = aggregate(result.runs);
    return result;
}

}  // namespace taso::harness
