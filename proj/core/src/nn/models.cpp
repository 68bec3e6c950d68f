#include "taso/error.hpp"
#include "taso/nn.hpp"

namespace taso::nn {

Network build_lenet5(std::size_t num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("lenet5 needs at least 2 classes");
    Network net({1, 28, 28}, num_classes);
    net.emplace<Conv2d>(Conv2dOptions{.in_channels = 1, .out_channels = 6, .kernel = 5})
        .emplace<Tanh>()
        .emplace<MaxPool2d>(2)
        .emplace<Conv2d>(Conv2dOptions{.in_channels = 6, .out_channels = 16, .kernel = 5})
        .emplace<Tanh>()
        .emplace<MaxPool2d>(2)
        .emplace<Flatten>()
        .emplace<Dense>(16 * 4 * 4, 120)
        .emplace<Tanh>()
        .emplace<Dense>(120, 84)
        .emplace<Tanh>()
        .emplace<Dense>(84, num_classes);
    net.initialize(seed);
    return net;
}

Network build_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw ConfigError("mlp needs at least an input and an output width");
    for (std::size_t w : widths) {
        if (w == 0) throw ConfigError("mlp width 0");
    }
    Network net({widths.front()}, widths.back());
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        net.emplace<Dense>(widths[i], widths[i + 1]);
        if (i + 2 < widths.size()) net.emplace<Relu>();
    }
    net.initialize(seed);
    return net;
}

}  // namespace taso::nn
