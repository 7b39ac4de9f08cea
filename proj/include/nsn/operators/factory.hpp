#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>

#include "nsn/operators/linear_map.hpp"

namespace nsn::ops {

// Rebuilds a MaskedFourier or LimitedAngleRadon operator from its JSON
// descriptor. Radon operators are factorized when the descriptor carries
// "tau".
std::shared_ptr<LinearMap> make_operator(const nlohmann::json& descriptor,
                                         std::optional<std::filesystem::path> cache_dir = {});

}  // namespace nsn::ops
