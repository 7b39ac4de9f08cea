#include "nsn/autodiff/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <type_traits>

#include "nsn/util/binary_io.hpp"
#include "nsn/util/errors.hpp"
#include "nsn/util/hash.hpp"

namespace nsn::ad {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  auto p = stem;
  p += suffix;
  return p;
}

template <typename T>
constexpr const char* precision_name() {
  return std::is_same_v<T, float> ? "f32" : "f64";
}

template <typename Src, typename Dst>
void convert(const std::byte* src, std::size_t count, Dst* dst) {
  for (std::size_t i = 0; i < count; ++i) {
    Src value;
    std::memcpy(&value, src + i * sizeof(Src), sizeof(Src));
    dst[i] = static_cast<Dst>(value);
  }
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& stem, std::span<const Parameter<T>* const> params,
                     const nlohmann::json& architecture) {
  std::vector<std::byte> blob;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto* p : params) {
    const auto bytes = std::as_bytes(p->value.values());
    const Shape s = p->value.shape();
    entries.push_back({{"name", p->name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", blob.size()},
                       {"count", p->value.size()}});
    blob.insert(blob.end(), bytes.begin(), bytes.end());
  }
  const auto blob_path = with_suffix(stem, ".bin");
  util::write_bytes(blob_path, blob);

  nlohmann::json manifest = {{"format", "nsn-checkpoint"},
                             {"version", 1},
                             {"precision", precision_name<T>()},
                             {"architecture", architecture},
                             {"blob", blob_path.filename().string()},
                             {"sha256", util::sha256_hex(std::span<const std::byte>(blob))},
                             {"parameters", entries}};
  const std::string text = manifest.dump(2);
  util::write_bytes(with_suffix(stem, ".json"), std::as_bytes(std::span(text.data(), text.size())));
}

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem) {
  const auto path = with_suffix(stem, ".json");
  std::ifstream in(path);
  if (!in) throw Error("checkpoint manifest not found: " + path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("unreadable checkpoint manifest " + path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "nsn-checkpoint") throw ValidationError("not a checkpoint: " + path.string());
  return manifest;
}

template <typename T>
nlohmann::json load_checkpoint(const std::filesystem::path& stem, std::span<Parameter<T>* const> params) {
  const nlohmann::json manifest = read_checkpoint_manifest(stem);
  const auto blob = util::read_bytes(stem.parent_path() / manifest.at("blob").get<std::string>());
  if (util::sha256_hex(std::span<const std::byte>(blob)) != manifest.at("sha256").get<std::string>()) {
    throw CorruptionError("checkpoint blob hash mismatch: " + stem.string());
  }
  const std::string precision = manifest.at("precision").get<std::string>();
  const std::size_t width = precision == "f32" ? sizeof(float) : sizeof(double);
  if (precision != "f32" && precision != "f64") throw ValidationError("unknown checkpoint precision " + precision);

  std::map<std::string, nlohmann::json> by_name;
  for (const auto& entry : manifest.at("parameters")) by_name[entry.at("name").get<std::string>()] = entry;
  if (by_name.size() != params.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(by_name.size()) + " parameters, model expects " +
                          std::to_string(params.size()));
  }
  for (auto* p : params) {
    const std::string& name = p->name;
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint lacks parameter " + name);
    const nlohmann::json& entry = it->second;
    const auto shape = entry.at("shape").get<std::vector<int>>();
    const Shape s = p->value.shape();
    if (shape != std::vector<int>{s.n, s.c, s.h, s.w}) throw ValidationError("shape mismatch for " + p->name);
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto count = entry.at("count").get<std::size_t>();
    if (count != p->value.size() || offset + count * width > blob.size()) {
      throw CorruptionError("checkpoint entry out of range: " + p->name);
    }
    if (width == sizeof(float)) {
      convert<float>(blob.data() + offset, count, p->value.data());
    } else {
      convert<double>(blob.data() + offset, count, p->value.data());
    }
    p->zero_grad();
  }
  return manifest.at("architecture");
}

template void save_checkpoint<float>(const std::filesystem::path&, std::span<const Parameter<float>* const>,
                                     const nlohmann::json&);
template void save_checkpoint<double>(const std::filesystem::path&, std::span<const Parameter<double>* const>,
                                      const nlohmann::json&);
template nlohmann::json load_checkpoint<float>(const std::filesystem::path&, std::span<Parameter<float>* const>);
template nlohmann::json load_checkpoint<double>(const std::filesystem::path&, std::span<Parameter<double>* const>);

}  // namespace nsn::ad
