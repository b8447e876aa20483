#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "chatmine/tensor.hpp"

namespace chatmine::nn {

/// Checkpoint container:
///
///   bytes 0..7   magic "CHMCKPT1"
///   bytes 8..15  manifest length, uint64 little-endian
///   manifest     UTF-8 JSON {version, dtype, params: [{name, shape, offset, nbytes}], meta}
///   blob         little-endian float32 values; offsets are relative to the blob start
///
/// `meta` carries model-specific configuration and statistics.
struct Checkpoint {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, Tensor> tensors;
    std::vector<std::string> order;  // manifest order
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every named tensor into `params`; fails listing missing names or shape mismatches.
void restore_parameters(const Checkpoint& ckpt, ParameterSet& params);

}  // namespace chatmine::nn
