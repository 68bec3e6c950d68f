#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "taso/tensor.hpp"

namespace taso::nn {

enum class LayerKind { dense, conv2d, maxpool2d, relu, tanh, flatten };

std::string_view to_string(LayerKind kind);
using taso::to_string;

enum class Init { he_uniform, glorot_uniform };

/// Layer-private data a forward pass leaves behind for backward
/// (im2col columns for conv, argmax positions for max pooling).
struct LayerCache {
    Tensor aux;
    std::vector<std::size_t> indices;
};

/// One stage of a feed-forward network. Tensors passed to forward/backward
/// carry a leading batch axis; shapes handled by output_shape() exclude it.
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const noexcept = 0;

    /// Per-sample output shape; throws ConfigError when `input` is not accepted.
    virtual Shape output_shape(const Shape& input) const = 0;

    /// `cache` may be null for inference-only passes.
    virtual Tensor forward(const Tensor& input, LayerCache* cache) const = 0;

    /// Overwrites the gradient slots and returns dL/d(input). When
    /// `need_input_grad` is false the returned tensor is empty.
    virtual Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                            const LayerCache& cache, bool need_input_grad) = 0;

    virtual void initialize(Init, std::mt19937_64&) {}

    virtual std::unique_ptr<Layer> clone() const = 0;

    std::vector<Tensor>& parameters() noexcept { return params_; }
    const std::vector<Tensor>& parameters() const noexcept { return params_; }
    std::vector<Tensor>& gradients() noexcept { return grads_; }
    const std::vector<Tensor>& gradients() const noexcept { return grads_; }

protected:
    std::vector<Tensor> params_;
    std::vector<Tensor> grads_;
};

/// Fully connected: y = x W^T + b with W of shape [out, in].
class Dense final : public Layer {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    LayerKind kind() const noexcept override { return LayerKind::dense; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                    const LayerCache& cache, bool need_input_grad) override;
    void initialize(Init init, std::mt19937_64& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    std::size_t in_features() const noexcept { return in_; }
    std::size_t out_features() const noexcept { return out_; }

private:
    std::size_t in_;
    std::size_t out_;
};

struct Conv2dOptions {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// 2-D cross-correlation over [C, H, W] samples, weight [OC, C, K, K], bias [OC].
class Conv2d final : public Layer {
public:
    explicit Conv2d(Conv2dOptions options);

    LayerKind kind() const noexcept override { return LayerKind::conv2d; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                    const LayerCache& cache, bool need_input_grad) override;
    void initialize(Init init, std::mt19937_64& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

    const Conv2dOptions& options() const noexcept { return opt_; }

private:
    Conv2dOptions opt_;
};

class MaxPool2d final : public Layer {
public:
    /// stride 0 means stride = kernel
    explicit MaxPool2d(std::size_t kernel, std::size_t stride = 0);

    LayerKind kind() const noexcept override { return LayerKind::maxpool2d; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                    const LayerCache& cache, bool need_input_grad) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }

private:
    std::size_t kernel_;
    std::size_t stride_;
};

class Relu final : public Layer {
public:
    LayerKind kind() const noexcept override { return LayerKind::relu; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                    const LayerCache& cache, bool need_input_grad) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
};

class Tanh final : public Layer {
public:
    LayerKind kind() const noexcept override { return LayerKind::tanh; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                    const LayerCache& cache, bool need_input_grad) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Tanh>(*this); }
};

class Flatten final : public Layer {
public:
    LayerKind kind() const noexcept override { return LayerKind::flatten; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                    const LayerCache& cache, bool need_input_grad) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
};

/// Ordered layer stack ending in logits, trained with softmax cross-entropy.
class Network {
public:
    Network(Shape input_shape, std::size_t num_classes);

    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    Network clone() const;

    /// Appends a layer after checking it accepts the current output shape.
    Network& add(std::unique_ptr<Layer> layer);

    template <typename L, typename... Args>
    Network& emplace(Args&&... args) {
        return add(std::make_unique<L>(std::forward<Args>(args)...));
    }

    /// Draws every parameter from a fresh PRNG seeded with `seed`: He-uniform
    /// next to relu, Glorot-uniform next to tanh, zero biases.
    void initialize(std::uint64_t seed);

    const Shape& input_shape() const noexcept { return input_shape_; }
    /// Per-sample shape produced by the last layer.
    const Shape& output_shape() const noexcept { return output_shape_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    std::size_t layer_count() const noexcept { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<const Tensor*> gradients() const;
    std::size_t parameter_count() const;

private:
    Shape input_shape_;
    Shape output_shape_;
    std::size_t num_classes_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Everything backward needs from one forward pass. activations[0] is the
/// batch, activations[i + 1] the output of layer i.
struct ForwardPass {
    std::vector<Tensor> activations;
    std::vector<LayerCache> caches;
    bool consumed = false;

    const Tensor& logits() const { return activations.back(); }
};

ForwardPass forward(const Network& net, const Tensor& batch);

/// Logits only; keeps no intermediate state.
Tensor predict(const Network& net, const Tensor& batch);

/// Mean softmax cross-entropy over the batch. Fills `grad` with dL/dlogits when non-null.
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad = nullptr);

/// Loss of the pass and every gradient slot of `net`. A pass can be consumed once.
double loss_and_backward(Network& net, ForwardPass& pass, std::span<const int> labels);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;  // percent
    std::size_t correct = 0;
    std::size_t count = 0;
};

/// Accuracy and mean loss of already computed logits.
Evaluation score(const Tensor& logits, std::span<const int> labels);

Network build_lenet5(std::size_t num_classes, std::uint64_t seed = 0);
Network build_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed = 0);

void save_parameters(const Network& net, const std::filesystem::path& path);
/// Loads into a network of identical architecture; throws InputError on any mismatch.
void load_parameters(Network& net, const std::filesystem::path& path);

}  // namespace taso::nn
