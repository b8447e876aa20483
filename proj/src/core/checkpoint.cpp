#include "chatmine/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chatmine/error.hpp"

namespace chatmine::nn {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'H', 'M', 'C', 'K', 'P', 'T', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void put_f32_le(std::string& out, double value) {
    const auto f = static_cast<float>(value);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32_le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const json& meta) {
    json manifest;
    manifest["version"] = kCheckpointVersion;
    manifest["dtype"] = "float32";
    manifest["meta"] = meta;
    json plist = json::array();
    std::string blob;
    for (const auto& p : params) {
        if (!p->value.all_finite()) throw InternalError("refusing to save non-finite parameter " + p->name);
        const std::size_t offset = blob.size();
        for (double v : p->value.data) put_f32_le(blob, v);
        plist.push_back({{"name", p->name}, {"shape", p->value.shape}, {"offset", offset}, {"nbytes", blob.size() - offset}});
    }
    manifest["params"] = plist;
    const std::string text = manifest.dump();

    std::string out(kMagic.begin(), kMagic.end());
    put_u64_le(out, text.size());
    out += text;
    out += blob;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string bytes = ss.str();
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
        throw ConfigError("not a checkpoint file: " + path.string());
    const std::uint64_t mlen = get_u64_le(raw + 8);
    if (mlen > bytes.size() - 16) throw ConfigError("truncated checkpoint manifest: " + path.string());
    json manifest = json::parse(bytes.substr(16, mlen), nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) throw ConfigError("corrupt checkpoint manifest: " + path.string());
    if (manifest.value("version", 0) != kCheckpointVersion)
        throw ConfigError("unsupported checkpoint version in " + path.string());
    if (manifest.value("dtype", std::string()) != "float32")
        throw ConfigError("unsupported checkpoint dtype in " + path.string());

    const std::size_t blob_start = 16 + mlen;
    const std::size_t blob_size = bytes.size() - blob_start;
    Checkpoint ckpt;
    ckpt.meta = manifest.value("meta", json::object());
    for (const auto& entry : manifest.at("params")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<Shape>();
        const auto offset = entry.at("offset").get<std::size_t>();
        const auto nbytes = entry.at("nbytes").get<std::size_t>();
        if (nbytes != shape_size(shape) * 4 || offset + nbytes > blob_size)
            throw ConfigError("checkpoint entry out of bounds: " + name);
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = get_f32_le(raw + blob_start + offset + 4 * i);
        if (!ckpt.tensors.emplace(name, std::move(t)).second) throw ConfigError("duplicate checkpoint entry: " + name);
        ckpt.order.push_back(name);
    }
    return ckpt;
}

void restore_parameters(const Checkpoint& ckpt, ParameterSet& params) {
    std::vector<std::string> missing;
    for (auto& p : params) {
        auto it = ckpt.tensors.find(p->name);
        if (it == ckpt.tensors.end()) {
            missing.push_back(p->name);
            continue;
        }
        if (it->second.shape != p->value.shape)
            throw ConfigError("checkpoint shape mismatch for " + p->name + ": " + shape_string(it->second.shape) +
                              " vs expected " + shape_string(p->value.shape));
        p->value = it->second;
        p->grad = Tensor(p->value.shape);
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& n : missing) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("checkpoint is missing parameters: " + names);
    }
}

}  // namespace chatmine::nn
