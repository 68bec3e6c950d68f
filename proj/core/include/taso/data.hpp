#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "taso/error.hpp"
#include "taso/tensor.hpp"

namespace taso::data {

enum class Split { train, test };

std::string_view to_string(Split split);
using taso::to_string;

/// Inputs are [n, feature...]; labels[i] is the class of sample i.
struct Dataset {
    Tensor inputs;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    Split split = Split::train;

    std::size_t size() const noexcept { return labels.size(); }
    Shape sample_shape() const { return Shape(inputs.shape().begin() + 1, inputs.shape().end()); }
};

/// Throws InputError if the invariants (n >= 1, finite inputs, labels in range) do not hold.
void check(const Dataset& ds);

/// First `n` samples (all of them when n >= size()).
Dataset head(const Dataset& ds, std::size_t n);

// ---- IDX / MNIST ----

class ParseError : public InputError {
public:
    enum class Kind { bad_magic, truncated, count_mismatch, dimension_mismatch, io };

    ParseError(Kind kind, const std::string& what) : InputError(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Conventional MNIST pixel statistics after scaling bytes to [0, 1].
struct Standardization {
    double mean = 0.1307;
    double stddev = 0.3081;
};

/// x <- (x - mean) / stddev for values already scaled to [0, 1].
void standardize(std::span<double> values, const Standardization& s);

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

/// Raw IDX readers. Paths ending in ".gz" are decompressed transparently.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

/// Images become [n, 1, rows, cols], bytes scaled to [0, 1] then standardized.
Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels, Split split,
                   const Standardization& norm = {});

// ---- synthetic ----

enum class SyntheticKind { blobs, xor_ };

std::string_view to_string(SyntheticKind kind);
SyntheticKind parse_synthetic(std::string_view name);

/// Geometry of the generated clusters (all 2-D, isotropic Gaussian noise).
struct SyntheticGeometry {
    // blobs: class 0 around (-blob_offset, 0), class 1 around (+blob_offset, 0)
    static constexpr double blob_offset = 2.0;
    static constexpr double blob_sigma = 0.4;
    // xor: clusters at (+-1, +-1); label = (x > 0) != (y > 0)
    static constexpr double xor_sigma = 0.2;
};

/// Balanced two-class 2-D data, deterministic in (kind, n, seed). n >= 4.
Dataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, Split split = Split::train);

// ---- batching ----

struct BatchPlan {
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    bool drop_last = false;
};

/// The shuffled sample order of one epoch, a function of (seed, epoch) only.
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Index lists of the minibatches of one epoch.
std::vector<std::vector<std::size_t>> batches(std::size_t n, const BatchPlan& plan, std::size_t epoch);

struct Batch {
    Tensor inputs;
    std::vector<int> labels;
};

Batch gather(const Dataset& ds, std::span<const std::size_t> indices);
/// Contiguous slice [begin, begin + count).
Batch slice(const Dataset& ds, std::size_t begin, std::size_t count);

}  // namespace taso::data
