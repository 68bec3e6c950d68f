#include "taso/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "taso/error.hpp"

namespace taso {
namespace {

constexpr const char* kFormat = "taso-tensors";

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t out = 0;
        for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
        return out;
    }
}

}  // namespace

void write_tensor_bundle(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    nlohmann::json manifest = {{"format", kFormat}, {"version", 1}, {"dtype", "float64-le"}};
    auto& list = manifest["tensors"] = nlohmann::json::array();
    for (const auto& t : tensors) list.push_back({{"name", t.name}, {"shape", t.value.shape()}});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << manifest.dump() << '\n';
    for (const auto& t : tensors) {
        for (double v : t.value.values()) {
            std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<NamedTensor> read_tensor_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": bad manifest: " + e.what());
    }
    if (manifest.value("format", "") != kFormat || manifest.value("dtype", "") != "float64-le") {
        throw InputError(path.string() + ": not a taso tensor bundle");
    }

    std::vector<NamedTensor> result;
    for (const auto& entry : manifest.at("tensors")) {
        Tensor t(entry.at("shape").get<Shape>());
        for (double& v : t.values()) {
            std::uint64_t bits = 0;
            if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
                throw InputError(path.string() + ": truncated payload");
            }
            v = std::bit_cast<double>(to_little_endian(bits));
        }
        result.push_back({entry.at("name").get<std::string>(), std::move(t)});
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw InputError(path.string() + ": trailing bytes after payload");
    }
    return result;
}

}  // namespace taso
