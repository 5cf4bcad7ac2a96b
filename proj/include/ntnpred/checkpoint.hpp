#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "ntnpred/layers.hpp"
#include "ntnpred/optim.hpp"

namespace ntnpred {

/// A checkpoint is a pair of files: `<path>` holds every tensor as
/// little-endian doubles after an 8-byte magic and a 16-byte header, and
/// `<path>.json` is the manifest naming each tensor, its shape and offset,
/// plus the architecture fingerprint and training counters.
struct Checkpoint {
    std::vector<LayerSpec> architecture;
    ParamStore params;
    Adam optimizer;
    std::uint64_t epoch = 0;
    nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json layer_spec_to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);
nlohmann::json architecture_fingerprint(const std::vector<LayerSpec>& arch);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ntnpred
