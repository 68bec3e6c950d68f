#include <cmath>
#include <random>
#include <string>

#include "taso/data.hpp"

namespace taso::data {

std::string_view to_string(SyntheticKind kind) { return kind == SyntheticKind::blobs ? "blobs" : "xor"; }

SyntheticKind parse_synthetic(std::string_view name) {
    if (name == "blobs") return SyntheticKind::blobs;
    if (name == "xor") return SyntheticKind::xor_;
    throw ConfigError("unknown synthetic dataset '" + std::string(name) + "'");
}

Dataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, Split split) {
    if (n < 4) throw ConfigError("synthetic datasets need n >= 4");
    using G = SyntheticGeometry;
    std::mt19937_64 rng(seed);
    const double sigma = kind == SyntheticKind::blobs ? G::blob_sigma : G::xor_sigma;
    std::normal_distribution<double> noise(0.0, sigma);

    Dataset ds;
    ds.split = split;
    ds.num_classes = 2;
    ds.inputs = Tensor({n, 2});
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double cx = 0.0, cy = 0.0;
        int label = 0;
        if (kind == SyntheticKind::blobs) {
            label = static_cast<int>(i % 2);
            cx = label == 0 ? -G::blob_offset : G::blob_offset;
        } else {
            const std::size_t quadrant = i % 4;
            cx = (quadrant & 1) ? 1.0 : -1.0;
            cy = (quadrant & 2) ? 1.0 : -1.0;
            label = (cx > 0) != (cy > 0) ? 1 : 0;
        }
        ds.inputs[2 * i] = cx + noise(rng);
        ds.inputs[2 * i + 1] = cy + noise(rng);
        ds.labels[i] = label;
    }
    return ds;
}

}  // namespace taso::data
