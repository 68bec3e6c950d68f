#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "taso/error.hpp"
#include "taso/harness.hpp"

namespace taso::harness {
namespace {

using nlohmann::json;

void allow_only(const json& obj, std::initializer_list<std::string_view> keys, std::string_view where) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
T required(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + std::string(where));
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad '" + std::string(key) + "' in " + std::string(where) + ": " + e.what());
    }
}

template <typename T>
T optional_or(const json& obj, const char* key, T fallback, std::string_view where) {
    return obj.contains(key) ? required<T>(obj, key, where) : fallback;
}

std::string_view dataset_name(DatasetSpec::Kind k) {
    switch (k) {
        case DatasetSpec::Kind::mnist: return "mnist";
        case DatasetSpec::Kind::blobs: return "blobs";
        case DatasetSpec::Kind::xor_: return "xor";
    }
    return "";
}

DatasetSpec::Kind parse_dataset_kind(std::string_view name) {
    if (name == "mnist") return DatasetSpec::Kind::mnist;
    if (name == "blobs") return DatasetSpec::Kind::blobs;
    if (name == "xor") return DatasetSpec::Kind::xor_;
    throw ConfigError("unknown dataset '" + std::string(name) + "'");
}

ModelSpec parse_model_kind(std::string_view name, std::vector<std::size_t> widths) {
    if (name == "lenet5") return {ModelSpec::Kind::lenet5, {}};
    if (name == "mlp") return {ModelSpec::Kind::mlp, std::move(widths)};
    throw ConfigError("unknown model '" + std::string(name) + "'");
}

json model_json(const ModelSpec& m) {
    if (m.kind == ModelSpec::Kind::lenet5) return {{"type", "lenet5"}};
    return {{"type", "mlp"}, {"widths", m.widths}};
}

json dataset_json(const DatasetSpec& d) {
    json j = {{"type", dataset_name(d.kind)}};
    if (d.kind == DatasetSpec::Kind::mnist) {
        j["train_images"] = d.train_images;
        j["train_labels"] = d.train_labels;
        j["test_images"] = d.test_images;
        j["test_labels"] = d.test_labels;
        j["train_limit"] = d.train_limit;
        j["test_limit"] = d.test_limit;
    } else {
        j["train_size"] = d.train_size;
        j["test_size"] = d.test_size;
        j["seed"] = d.seed;
    }
    return j;
}

json optimizer_json(const optim::OptimizerSpec& o) {
    json j = {{"name", optim::to_string(o.rule)}};
    if (o.overrides.rho) j["rho"] = *o.overrides.rho;
    if (o.overrides.rho1) j["rho1"] = *o.overrides.rho1;
    if (o.overrides.rho2) j["rho2"] = *o.overrides.rho2;
    if (o.overrides.mu) j["mu"] = *o.overrides.mu;
    if (o.overrides.delta) j["delta"] = *o.overrides.delta;
    return j;
}

json schedule_json(const ScheduleSpec& s) {
    if (s.kind == ScheduleSpec::Kind::constant) return {{"type", "constant"}, {"lr", s.lr}};
    json j = {{"type", "taso"}, {"initial_lr", s.lr}, {"alpha", s.alpha}, {"beta", s.beta}};
    if (s.final_lr) j["final_lr"] = *s.final_lr;
    return j;
}

ModelSpec parse_model(const json& j) {
    const std::string type = required<std::string>(j, "type", "model");
    if (type == "mlp") {
        allow_only(j, {"type", "widths"}, "model");
        return parse_model_kind(type, required<std::vector<std::size_t>>(j, "widths", "model"));
    }
    allow_only(j, {"type"}, "model");
    return parse_model_kind(type, {});
}

DatasetSpec parse_dataset(const json& j) {
    DatasetSpec d;
    d.kind = parse_dataset_kind(required<std::string>(j, "type", "dataset"));
    if (d.kind == DatasetSpec::Kind::mnist) {
        allow_only(j, {"type", "train_images", "train_labels", "test_images", "test_labels", "train_limit", "test_limit"},
                   "dataset");
        d.train_images = required<std::string>(j, "train_images", "dataset");
        d.train_labels = required<std::string>(j, "train_labels", "dataset");
        d.test_images = required<std::string>(j, "test_images", "dataset");
        d.test_labels = required<std::string>(j, "test_labels", "dataset");
        d.train_limit = optional_or<std::size_t>(j, "train_limit", 0, "dataset");
        d.test_limit = optional_or<std::size_t>(j, "test_limit", 0, "dataset");
    } else {
        allow_only(j, {"type", "train_size", "test_size", "seed"}, "dataset");
        d.train_size = optional_or<std::size_t>(j, "train_size", d.train_size, "dataset");
        d.test_size = optional_or<std::size_t>(j, "test_size", d.test_size, "dataset");
        d.seed = optional_or<std::uint64_t>(j, "seed", d.seed, "dataset");
    }
    return d;
}

optim::OptimizerSpec parse_optimizer(const json& j) {
    allow_only(j, {"name", "rho", "rho1", "rho2", "mu", "delta"}, "optimizer");
    optim::OptimizerSpec o;
    o.rule = optim::parse_rule(required<std::string>(j, "name", "optimizer"));
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key)) return std::nullopt;
        return required<double>(j, key, "optimizer");
    };
    o.overrides = {opt("rho"), opt("rho1"), opt("rho2"), opt("mu"), opt("delta")};
    optim::resolve(o.rule, o.overrides);
    return o;
}

ScheduleSpec parse_schedule(const json& j) {
    ScheduleSpec s;
    const std::string type = required<std::string>(j, "type", "schedule");
    if (type == "constant") {
        allow_only(j, {"type", "lr"}, "schedule");
        s.kind = ScheduleSpec::Kind::constant;
        s.lr = required<double>(j, "lr", "schedule");
    } else if (type == "taso") {
        allow_only(j, {"type", "initial_lr", "final_lr", "alpha", "beta"}, "schedule");
        s.kind = ScheduleSpec::Kind::taso;
        s.lr = required<double>(j, "initial_lr", "schedule");
        if (j.contains("final_lr")) s.final_lr = required<double>(j, "final_lr", "schedule");
        s.alpha = optional_or<double>(j, "alpha", s.alpha, "schedule");
        s.beta = optional_or<double>(j, "beta", s.beta, "schedule");
    } else {
        throw ConfigError("unknown schedule type '" + type + "'");
    }
    return s;
}

optim::Overrides with_mu(double mu) {
    optim::Overrides o;
    o.mu = mu;
    return o;
}

}  // namespace

schedule::Schedule ScheduleSpec::resolve(std::size_t epochs) const {
    if (kind == Kind::constant) return schedule::make_constant(lr);
    return schedule::make_taso(lr, final_lr.value_or(lr / 20.0), alpha, beta, epochs);
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (cfg.seeds.empty()) throw ConfigError("seed list is empty");
    if (cfg.model.kind == ModelSpec::Kind::lenet5 && cfg.dataset.kind != DatasetSpec::Kind::mnist) {
        throw ConfigError("lenet5 needs 28x28 images (dataset mnist)");
    }
    if (cfg.model.kind == ModelSpec::Kind::mlp) {
        const auto& w = cfg.model.widths;
        if (w.size() < 2) throw ConfigError("mlp needs at least two widths");
        if (std::find(w.begin(), w.end(), std::size_t{0}) != w.end()) throw ConfigError("mlp width 0");
        const bool mnist = cfg.dataset.kind == DatasetSpec::Kind::mnist;
        const std::size_t features = mnist ? 784 : 2, classes = mnist ? 10 : 2;
        if (w.front() != features || w.back() != classes) {
            throw ConfigError("mlp widths must start at " + std::to_string(features) + " and end at " +
                              std::to_string(classes) + " for this dataset");
        }
    }
    if (cfg.dataset.kind != DatasetSpec::Kind::mnist && (cfg.dataset.train_size < 4 || cfg.dataset.test_size < 4)) {
        throw ConfigError("synthetic datasets need at least 4 samples per split");
    }
    optim::resolve(cfg.optimizer.rule, cfg.optimizer.overrides);
    cfg.schedule.resolve(cfg.epochs);
}

std::string to_json(const ExperimentConfig& cfg) {
    json j = {{"model", model_json(cfg.model)},
              {"dataset", dataset_json(cfg.dataset)},
              {"optimizer", optimizer_json(cfg.optimizer)},
              {"schedule", schedule_json(cfg.schedule)},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"seeds", cfg.seeds},
              {"out", cfg.out}};
    return j.dump(2) + "\n";
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    allow_only(j, {"model", "dataset", "optimizer", "schedule", "epochs", "batch_size", "seeds", "out"}, "config");
    ExperimentConfig cfg;
    cfg.model = parse_model(required<json>(j, "model", "config"));
    cfg.dataset = parse_dataset(required<json>(j, "dataset", "config"));
    cfg.optimizer = parse_optimizer(required<json>(j, "optimizer", "config"));
    cfg.schedule = parse_schedule(required<json>(j, "schedule", "config"));
    cfg.epochs = required<std::size_t>(j, "epochs", "config");
    cfg.batch_size = optional_or<std::size_t>(j, "batch_size", cfg.batch_size, "config");
    cfg.seeds = required<std::vector<std::uint64_t>>(j, "seeds", "config");
    cfg.out = optional_or<std::string>(j, "out", cfg.out, "config");
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<std::string> known_optimizers() {
    std::vector<std::string> names{"taso"};
    for (optim::Rule r : optim::kAllRules) names.emplace_back(optim::to_string(r));
    return names;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = base + i;
    return seeds;
}

ExperimentConfig default_mode(std::string_view model, std::string_view dataset, std::string_view optimizer) {
    ExperimentConfig cfg;
    cfg.dataset.kind = parse_dataset_kind(dataset);
    const bool mnist = cfg.dataset.kind == DatasetSpec::Kind::mnist;
    if (mnist) {
        cfg.dataset.train_images = "data/mnist/train-images-idx3-ubyte";
        cfg.dataset.train_labels = "data/mnist/train-labels-idx1-ubyte";
        cfg.dataset.test_images = "data/mnist/t10k-images-idx3-ubyte";
        cfg.dataset.test_labels = "data/mnist/t10k-labels-idx1-ubyte";
    }
    cfg.model = parse_model_kind(model, mnist ? std::vector<std::size_t>{784, 128, 10}
                                              : std::vector<std::size_t>{2, 8, 2});

    using optim::Rule;
    auto constant = [](double lr) { return ScheduleSpec{ScheduleSpec::Kind::constant, lr, std::nullopt, 25.0, 0.7}; };
    if (optimizer == "taso") {
        cfg.optimizer = {Rule::momentum, with_mu(0.9)};
        cfg.schedule = {ScheduleSpec::Kind::taso, 0.05, std::nullopt, 25.0, 0.7};
    } else {
        const Rule rule = optim::parse_rule(optimizer);
        switch (rule) {
            case Rule::adagrad: cfg.optimizer = {rule, {}}; cfg.schedule = constant(0.05); break;
            case Rule::rmsprop:
            case Rule::rmsprop_centered: cfg.optimizer = {rule, {}}; cfg.schedule = constant(0.0005); break;
            // "adam" resolves to its AmsGrad variant, the best-performing Adam flavour.
            case Rule::adam:
            case Rule::amsgrad: cfg.optimizer = {Rule::amsgrad, {}}; cfg.schedule = constant(0.0005); break;
            case Rule::sgd: cfg.optimizer = {rule, {}}; cfg.schedule = constant(0.25); break;
            case Rule::momentum: cfg.optimizer = {rule, with_mu(0.9)}; cfg.schedule = constant(0.05); break;
            case Rule::nesterov: cfg.optimizer = {rule, with_mu(0.9)}; cfg.schedule = constant(0.01); break;
        }
    }
    cfg.epochs = 100;
    cfg.batch_size = 128;
    cfg.seeds = derive_seeds(0, 5);
    cfg.out = "runs/" + std::string(optimizer);
    return cfg;
}

}  // namespace taso::harness
