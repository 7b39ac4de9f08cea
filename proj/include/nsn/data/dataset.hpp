#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "nsn/data/phantom.hpp"
#include "nsn/operators/linear_map.hpp"

namespace nsn::data {

struct SampleRecord {
  std::uint64_t index = 0;
  std::string image_sha256;
  std::string measurement_sha256;
};

struct SplitInfo {
  std::size_t count = 0;
  std::string images_file;
  std::string measurements_file;
  std::vector<SampleRecord> records;
};

// On disk a dataset is `manifest.json` plus, per split, two raw float32
// little-endian files holding the samples back to back (images in the
// operator's channel-major, row-major layout; measurements in operator
// order). Test phantoms use indices offset by test_index_offset.
struct DatasetManifest {
  int version = 1;
  PhantomSpec phantom;
  nlohmann::json operator_descriptor;
  std::string operator_hash;
  std::size_t image_size = 0;
  std::size_t measurement_size = 0;
  std::uint64_t test_index_offset = 1000000;
  SplitInfo train;
  SplitInfo test;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

struct SplitData {
  std::vector<ops::Vector> images;
  std::vector<ops::Vector> measurements;
};

struct Dataset {
  DatasetManifest manifest;
  SplitData train;
  SplitData test;
};

// Phantoms (rounded to float32) and their clean measurements y = A x.
Dataset generate_dataset(const ops::LinearMap& op, const PhantomSpec& spec, std::size_t train, std::size_t test);

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

// Throws CorruptionError on any hash mismatch and ValidationError when the
// manifest disagrees with itself or with the stored files.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace nsn::data
