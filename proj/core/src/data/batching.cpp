#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "taso/data.hpp"

namespace taso::data {

void check(const Dataset& ds) {
    if (ds.size() < 1) throw InputError("dataset is empty");
    if (ds.inputs.rank() < 2 || ds.inputs.extent(0) != ds.size()) {
        throw InputError("dataset inputs " + to_string(ds.inputs.shape()) + " do not match " +
                         std::to_string(ds.size()) + " labels");
    }
    for (int label : ds.labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= ds.num_classes) {
            throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(ds.num_classes) + ")");
        }
    }
    if (!ds.inputs.all_finite()) throw InputError("dataset contains non-finite inputs");
}

Dataset head(const Dataset& ds, std::size_t n) {
    n = std::min(n, ds.size());
    Batch b = slice(ds, 0, n);
    return {std::move(b.inputs), std::move(b.labels), ds.num_classes, ds.split};
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq sequence{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(sequence);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, const BatchPlan& plan, std::size_t epoch) {
    if (plan.batch_size == 0) throw ConfigError("batch size must be positive");
    if (plan.batch_size > n) {
        throw ConfigError("batch size " + std::to_string(plan.batch_size) + " exceeds dataset size " +
                          std::to_string(n));
    }
    const auto order = epoch_permutation(n, plan.seed, epoch);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t begin = 0; begin < n; begin += plan.batch_size) {
        const std::size_t end = std::min(n, begin + plan.batch_size);
        if (plan.drop_last && end - begin < plan.batch_size) break;
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

Batch gather(const Dataset& ds, std::span<const std::size_t> indices) {
    const Shape sample = ds.sample_shape();
    const std::size_t stride = element_count(sample);
    Shape shape{indices.size()};
    shape.insert(shape.end(), sample.begin(), sample.end());
    Batch b{Tensor(shape), std::vector<int>(indices.size())};
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= ds.size()) throw ContractError("sample index " + std::to_string(src) + " out of range");
        std::copy_n(ds.inputs.data() + src * stride, stride, b.inputs.data() + i * stride);
        b.labels[i] = ds.labels[src];
    }
    return b;
}

Batch slice(const Dataset& ds, std::size_t begin, std::size_t count) {
    if (begin + count > ds.size()) throw ContractError("slice past end of dataset");
    const Shape sample = ds.sample_shape();
    const std::size_t stride = element_count(sample);
    Shape shape{count};
    shape.insert(shape.end(), sample.begin(), sample.end());
    Batch b{Tensor(shape), std::vector<int>(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                            ds.labels.begin() + static_cast<std::ptrdiff_t>(begin + count))};
    std::copy_n(ds.inputs.data() + begin * stride, count * stride, b.inputs.data());
    return b;
}

}  // namespace taso::data
