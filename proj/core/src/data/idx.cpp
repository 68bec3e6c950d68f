// IDX layout (all integers big-endian):
//   images: magic 0x00000803, count, rows, cols, then count*rows*cols unsigned bytes
//   labels: magic 0x00000801, count, then count unsigned bytes

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <zlib.h>

#include "taso/data.hpp"

namespace taso::data {
namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    if (path.extension() == ".gz") {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw ParseError(ParseError::Kind::io, "cannot open " + path.string());
        std::vector<std::uint8_t> out;
        std::uint8_t buf[1 << 16];
        int got = 0;
        while ((got = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
        const bool failed = got < 0;
        gzclose(f);
        if (failed) throw ParseError(ParseError::Kind::io, "corrupt gzip stream in " + path.string());
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Kind::io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void check_header(const std::vector<std::uint8_t>& bytes, std::size_t header_size, std::uint32_t magic,
                  const std::filesystem::path& path) {
    if (bytes.size() < 4) throw ParseError(ParseError::Kind::truncated, path.string() + ": truncated header");
    if (be32(bytes, 0) != magic) {
        char got[16];
        std::snprintf(got, sizeof got, "0x%08X", be32(bytes, 0));
        throw ParseError(ParseError::Kind::bad_magic, path.string() + ": bad magic " + got);
    }
    if (bytes.size() < header_size) throw ParseError(ParseError::Kind::truncated, path.string() + ": truncated header");
}

void check_payload(std::size_t actual, std::size_t declared, const std::filesystem::path& path) {
    if (actual < declared) {
        throw ParseError(ParseError::Kind::truncated, path.string() + ": payload has " + std::to_string(actual) +
                                                          " bytes, header declares " + std::to_string(declared));
    }
    if (actual > declared) {
        throw ParseError(ParseError::Kind::dimension_mismatch,
                         path.string() + ": " + std::to_string(actual - declared) + " bytes beyond declared dimensions");
    }
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

IdxImages read_idx_images(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    check_header(bytes, 16, kIdxImagesMagic, path);
    IdxImages img{be32(bytes, 4), be32(bytes, 8), be32(bytes, 12), {}};
    check_payload(bytes.size() - 16, img.count * img.rows * img.cols, path);
    img.pixels.assign(bytes.begin() + 16, bytes.end());
    return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    check_header(bytes, 8, kIdxLabelsMagic, path);
    check_payload(bytes.size() - 8, be32(bytes, 4), path);
    return {bytes.begin() + 8, bytes.end()};
}

void standardize(std::span<double> values, const Standardization& s) {
    for (double& v : values) v = (v - s.mean) / s.stddev;
}

Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels, Split split,
                   const Standardization& norm) {
    const IdxImages img = read_idx_images(images);
    const auto lab = read_idx_labels(labels);
    if (img.count != lab.size()) {
        throw ParseError(ParseError::Kind::count_mismatch, images.string() + " has " + std::to_string(img.count) +
                                                               " images but " + labels.string() + " has " +
                                                               std::to_string(lab.size()) + " labels");
    }
    Dataset ds;
    ds.split = split;
    ds.num_classes = 10;
    ds.inputs = Tensor({img.count, 1, img.rows, img.cols});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) ds.inputs[i] = img.pixels[i] / 255.0;
    standardize(ds.inputs.values(), norm);
    ds.labels.assign(lab.begin(), lab.end());
    check(ds);
    return ds;
}

}  // namespace taso::data
