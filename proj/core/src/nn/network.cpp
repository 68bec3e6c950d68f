#include <algorithm>
#include <cmath>
#include <string>

#include "taso/checkpoint.hpp"
#include "taso/error.hpp"
#include "taso/nn.hpp"

namespace taso::nn {

Network::Network(Shape input_shape, std::size_t num_classes)
    : input_shape_(std::move(input_shape)), output_shape_(input_shape_), num_classes_(num_classes) {
    if (num_classes_ < 2) throw ConfigError("a classifier needs at least 2 classes");
    if (element_count(input_shape_) == 0) throw ConfigError("input shape has a zero extent");
}

Network Network::clone() const {
    Network copy(input_shape_, num_classes_);
    for (const auto& layer : layers_) copy.add(layer->clone());
    return copy;
}

Network& Network::add(std::unique_ptr<Layer> layer) {
    try {
        output_shape_ = layer->output_shape(output_shape_);
    } catch (const ConfigError& e) {
        throw ConfigError("layer " + std::to_string(layers_.size()) + " (" + std::string(to_string(layer->kind())) +
                          "): " + e.what());
    }
    layers_.push_back(std::move(layer));
    return *this;
}

void Network::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto activation_near = [&](std::size_t i) -> Init {
        auto pick = [](LayerKind k) -> int {
            if (k == LayerKind::relu) return 1;
            if (k == LayerKind::tanh) return 2;
            return 0;
        };
        for (std::size_t j = i + 1; j < layers_.size(); ++j) {
            const LayerKind k = layers_[j]->kind();
            if (int p = pick(k)) return p == 1 ? Init::he_uniform : Init::glorot_uniform;
            if (k == LayerKind::dense || k == LayerKind::conv2d) break;
        }
        for (std::size_t j = i; j-- > 0;) {
            const LayerKind k = layers_[j]->kind();
            if (int p = pick(k)) return p == 1 ? Init::he_uniform : Init::glorot_uniform;
            if (k == LayerKind::dense || k == LayerKind::conv2d) break;
        }
        return Init::glorot_uniform;
    };
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->initialize(activation_near(i), rng);
}

std::vector<Tensor*> Network::parameters() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_)
        for (auto& p : layer->parameters()) out.push_back(&p);
    return out;
}

std::vector<const Tensor*> Network::parameters() const {
    std::vector<const Tensor*> out;
    for (const auto& layer : layers_)
        for (const auto& p : layer->parameters()) out.push_back(&p);
    return out;
}

std::vector<const Tensor*> Network::gradients() const {
    std::vector<const Tensor*> out;
    for (const auto& layer : layers_)
        for (const auto& g : layer->gradients()) out.push_back(&g);
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor* p : parameters()) total += p->size();
    return total;
}

namespace {

void check_batch(const Network& net, const Tensor& batch) {
    const Shape& s = batch.shape();
    const bool ok = s.size() == net.input_shape().size() + 1 && s[0] >= 1 &&
                    std::equal(s.begin() + 1, s.end(), net.input_shape().begin());
    if (!ok) {
        throw ConfigError("layer 0: batch shape " + to_string(s) + " does not match input [n," +
                          to_string(net.input_shape()).substr(1));
    }
}

}  // namespace

ForwardPass forward(const Network& net, const Tensor& batch) {
    check_batch(net, batch);
    ForwardPass pass;
    pass.activations.reserve(net.layer_count() + 1);
    pass.caches.resize(net.layer_count());
    pass.activations.push_back(batch);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        pass.activations.push_back(net.layer(i).forward(pass.activations.back(), &pass.caches[i]));
    }
    return pass;
}

Tensor predict(const Network& net, const Tensor& batch) {
    check_batch(net, batch);
    Tensor x = batch;
    for (std::size_t i = 0; i < net.layer_count(); ++i) x = net.layer(i).forward(x, nullptr);
    return x;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad) {
    if (logits.rank() != 2) throw ContractError("logits must be [n, classes], got " + to_string(logits.shape()));
    const std::size_t n = logits.extent(0), classes = logits.extent(1);
    if (labels.size() != n) throw ContractError("label count does not match batch size");
    if (grad) *grad = Tensor(logits.shape());

    double total = 0.0;
    const double inv_n = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
        }
        const double* row = logits.data() + i * classes;
        const double top = *std::max_element(row, row + classes);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - top);
        const double log_norm = top + std::log(sum);
        total += log_norm - row[label];
        if (grad) {
            double* g = grad->data() + i * classes;
            for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(row[c] - log_norm) * inv_n;
            g[label] -= inv_n;
        }
    }
    return total * inv_n;
}

double loss_and_backward(Network& net, ForwardPass& pass, std::span<const int> labels) {
    if (pass.consumed) throw ContractError("forward pass already consumed by a backward call");
    if (pass.activations.size() != net.layer_count() + 1) throw ContractError("forward pass belongs to another network");
    pass.consumed = true;

    Tensor grad;
    const double loss = softmax_cross_entropy(pass.logits(), labels, &grad);
    if (!std::isfinite(loss)) {
        std::ptrdiff_t culprit = -1;
        for (std::size_t i = 1; i < pass.activations.size(); ++i) {
            if (!pass.activations[i].all_finite()) {
                culprit = static_cast<std::ptrdiff_t>(i) - 1;
                break;
            }
        }
        throw NumericFault(culprit >= 0 ? "non-finite output at layer " + std::to_string(culprit)
                                        : std::string("non-finite loss"),
                           culprit);
    }
    for (std::size_t i = net.layer_count(); i-- > 0;) {
        grad = net.layer(i).backward(pass.activations[i], pass.activations[i + 1], grad, pass.caches[i], i > 0);
    }
    return loss;
}

Evaluation score(const Tensor& logits, std::span<const int> labels) {
    Evaluation e;
    e.count = labels.size();
    e.loss = softmax_cross_entropy(logits, labels);
    const std::size_t classes = logits.extent(1);
    for (std::size_t i = 0; i < e.count; ++i) {
        const double* row = logits.data() + i * classes;
        const auto arg = static_cast<int>(std::max_element(row, row + classes) - row);
        if (arg == labels[i]) ++e.correct;
    }
    e.accuracy = e.count ? 100.0 * double(e.correct) / double(e.count) : 0.0;
    return e;
}

void save_parameters(const Network& net, const std::filesystem::path& path) {
    std::vector<NamedTensor> bundle;
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const auto& params = net.layer(i).parameters();
        for (std::size_t j = 0; j < params.size(); ++j) {
            bundle.push_back({"layer" + std::to_string(i) + "." + (j == 0 ? "weight" : "bias"), params[j]});
        }
    }
    write_tensor_bundle(path, bundle);
}

void load_parameters(Network& net, const std::filesystem::path& path) {
    auto bundle = read_tensor_bundle(path);
    auto params = net.parameters();
    if (bundle.size() != params.size()) throw InputError(path.string() + ": parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (bundle[i].value.shape() != params[i]->shape()) {
            throw InputError(path.string() + ": shape mismatch for " + bundle[i].name);
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = std::move(bundle[i].value);
}

}  // namespace taso::nn
