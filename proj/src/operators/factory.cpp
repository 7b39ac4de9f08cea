#include "nsn/operators/factory.hpp"

#include "nsn/operators/masked_fourier.hpp"
#include "nsn/operators/radon.hpp"

namespace nsn::ops {

std::shared_ptr<LinearMap> make_operator(const nlohmann::json& descriptor,
                                         std::optional<std::filesystem::path> cache_dir) {
  const auto kind = descriptor.at("kind").get<std::string>();
  if (kind == "MaskedFourier") {
    return std::make_shared<MaskedFourierOp>(descriptor.at("grid").get<int>(),
                                             descriptor.at("lines").get<std::vector<int>>());
  }
  if (kind == "LimitedAngleRadon") {
    auto op = std::make_shared<LimitedAngleRadonOp>(RadonGeometry::from_json(descriptor), std::move(cache_dir));
    if (descriptor.contains("tau")) op->factorize(descriptor.at("tau").get<double>());
    return op;
  }
  throw std::invalid_argument("make_operator: unsupported operator kind '" + kind + "'");
}

}  // namespace nsn::ops
