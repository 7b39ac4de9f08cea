#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>

#include "nsn/autodiff/tensor.hpp"

namespace nsn::ad {

// A checkpoint is `<stem>.bin` (all parameter values back to back) plus a
// JSON manifest `<stem>.json`:
//
//   {
//     "format": "nsn-checkpoint", "version": 1,
//     "precision": "f32" | "f64",
//     "architecture": { ... caller supplied ... },
//     "blob": "<stem>.bin", "sha256": "<hex of blob>",
//     "parameters": [ {"name", "shape": [n, c, h, w], "offset": bytes, "count"} ... ]
//   }
template <typename T>
void save_checkpoint(const std::filesystem::path& stem, std::span<const Parameter<T>* const> params,
                     const nlohmann::json& architecture);

// Reads a checkpoint into `params` (matched by name, converting precision
// when needed). Returns the architecture object. Throws CorruptionError on a
// blob hash mismatch and ValidationError on missing names or shapes.
template <typename T>
nlohmann::json load_checkpoint(const std::filesystem::path& stem, std::span<Parameter<T>* const> params);

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem);

}  // namespace nsn::ad
