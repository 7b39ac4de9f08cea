#include "nsn/data/dataset.hpp"

#include <fstream>

#include "nsn/util/binary_io.hpp"
#include "nsn/util/errors.hpp"
#include "nsn/util/hash.hpp"

namespace nsn::data {

namespace {

std::vector<float> to_f32(const ops::Vector& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return out;
}

ops::Vector from_f32(std::span<const float> v) {
  ops::Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::string hash_of(const ops::Vector& v) {
  const auto values = to_f32(v);
  return util::sha256_hex_of(std::span<const float>(values));
}

nlohmann::json split_to_json(const SplitInfo& split) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : split.records) {
    records.push_back({{"index", r.index}, {"image_sha256", r.image_sha256}, {"measurement_sha256", r.measurement_sha256}});
  }
  return {{"count", split.count},
          {"images_file", split.images_file},
          {"measurements_file", split.measurements_file},
          {"samples", records}};
}

SplitInfo split_from_json(const nlohmann::json& j) {
  SplitInfo split;
  split.count = j.at("count").get<std::size_t>();
  split.images_file = j.at("images_file").get<std::string>();
  split.measurements_file = j.at("measurements_file").get<std::string>();
  for (const auto& r : j.at("samples")) {
    split.records.push_back({r.at("index").get<std::uint64_t>(), r.at("image_sha256").get<std::string>(),
                             r.at("measurement_sha256").get<std::string>()});
  }
  return split;
}

void fill_split(const ops::LinearMap& op, const PhantomSpec& spec, std::size_t count, std::uint64_t offset,
                const std::string& name, SplitInfo& info, SplitData& data) {
  info.count = count;
  info.images_file = name + "_images.f32";
  info.measurements_file = name + "_measurements.f32";
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t index = offset + k;
    const ops::Vector image = from_f32(to_f32(to_domain(generate_phantom(spec, index), op.domain_shape())));
    const ops::Vector measurement = from_f32(to_f32(op.apply(image)));
    info.records.push_back({index, hash_of(image), hash_of(measurement)});
    data.images.push_back(image);
    data.measurements.push_back(measurement);
  }
}

void write_split(const std::filesystem::path& dir, const SplitInfo& info, const SplitData& data) {
  std::vector<float> images, measurements;
  for (const auto& v : data.images) {
    const auto f = to_f32(v);
    images.insert(images.end(), f.begin(), f.end());
  }
  for (const auto& v : data.measurements) {
    const auto f = to_f32(v);
    measurements.insert(measurements.end(), f.begin(), f.end());
  }
  util::write_f32(dir / info.images_file, images);
  util::write_f32(dir / info.measurements_file, measurements);
}

std::vector<ops::Vector> read_samples(const std::filesystem::path& file, std::size_t count, std::size_t size) {
  const std::vector<float> raw = util::read_f32(file);
  if (raw.size() != count * size) {
    throw ValidationError(file.filename().string() + " holds " + std::to_string(raw.size()) + " values, manifest implies " +
                          std::to_string(count * size));
  }
  std::vector<ops::Vector> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(from_f32(std::span<const float>(raw).subspan(k * size, size)));
  }
  return out;
}

SplitData read_split(const std::filesystem::path& dir, const SplitInfo& info, const DatasetManifest& m) {
  if (info.records.size() != info.count) {
    throw ValidationError("manifest lists " + std::to_string(info.records.size()) + " samples but count is " +
                          std::to_string(info.count));
  }
  SplitData data;
  data.images = read_samples(dir / info.images_file, info.count, m.image_size);
  data.measurements = read_samples(dir / info.measurements_file, info.count, m.measurement_size);
  for (std::size_t k = 0; k < info.count; ++k) {
    if (hash_of(data.images[k]) != info.records[k].image_sha256) {
      throw CorruptionError("image " + std::to_string(info.records[k].index) + " does not match its hash");
    }
    if (hash_of(data.measurements[k]) != info.records[k].measurement_sha256) {
      throw CorruptionError("measurement " + std::to_string(info.records[k].index) + " does not match its hash");
    }
  }
  return data;
}

}  // namespace

nlohmann::json DatasetManifest::to_json() const {
  return {{"format", "nsn-dataset"},
          {"version", version},
          {"phantom", phantom.to_json()},
          {"operator", operator_descriptor},
          {"operator_hash", operator_hash},
          {"image_size", image_size},
          {"measurement_size", measurement_size},
          {"test_index_offset", test_index_offset},
          {"layout", "float32 little-endian, samples back to back, channel-major then row-major"},
          {"train", split_to_json(train)},
          {"test", split_to_json(test)}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "nsn-dataset") throw ValidationError("not a dataset manifest");
  DatasetManifest m;
  m.version = j.at("version").get<int>();
  if (m.version != 1) throw ValidationError("unsupported dataset manifest version " + std::to_string(m.version));
  m.phantom = PhantomSpec::from_json(j.at("phantom"));
  m.operator_descriptor = j.at("operator");
  m.operator_hash = j.at("operator_hash").get<std::string>();
  m.image_size = j.at("image_size").get<std::size_t>();
  m.measurement_size = j.at("measurement_size").get<std::size_t>();
  m.test_index_offset = j.at("test_index_offset").get<std::uint64_t>();
  m.train = split_from_json(j.at("train"));
  m.test = split_from_json(j.at("test"));
  return m;
}

Dataset generate_dataset(const ops::LinearMap& op, const PhantomSpec& spec, std::size_t train, std::size_t test) {
  if (spec.grid != op.domain_shape().height || spec.grid != op.domain_shape().width) {
    throw DimensionError("generate_dataset: phantom grid does not match the operator");
  }
  Dataset d;
  d.manifest.phantom = spec;
  d.manifest.operator_descriptor = op.descriptor();
  d.manifest.operator_hash = op.content_hash();
  d.manifest.image_size = op.domain_size();
  d.manifest.measurement_size = op.range_size();
  fill_split(op, spec, train, 0, "train", d.manifest.train, d.train);
  fill_split(op, spec, test, d.manifest.test_index_offset, "test", d.manifest.test, d.test);
  return d;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_split(dir, dataset.manifest.train, dataset.train);
  write_split(dir, dataset.manifest.test, dataset.test);
  const std::string text = dataset.manifest.to_json().dump(2) + "\n";
  util::write_bytes(dir / "manifest.json", std::as_bytes(std::span<const char>(text.data(), text.size())));
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ValidationError("no dataset manifest in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset manifest is not valid JSON: ") + e.what());
  }
  Dataset d;
  d.manifest = DatasetManifest::from_json(j);
  d.train = read_split(dir, d.manifest.train, d.manifest);
  d.test = read_split(dir, d.manifest.test, d.manifest);
  return d;
}

}  // namespace nsn::data
