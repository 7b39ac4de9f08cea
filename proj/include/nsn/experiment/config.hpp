#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nsn/data/phantom.hpp"
#include "nsn/recon/method.hpp"

namespace nsn::exp {

enum class Study { LimitedAngleCT, MaskedFourier };

std::string to_string(Study study);
Study parse_study(const std::string& name);

// What the noise-sweep levels are relative to. Measurement: delta = level *
// mean |A x|. Pseudoinverse: delta is chosen so that the expected noise in
// A‡ y equals level * mean |A‡ A x|. Auto selects measurement for the
// Fourier study and pseudoinverse for tomography.
enum class NoiseReference { Auto, Measurement, Pseudoinverse };

std::string to_string(NoiseReference reference);
NoiseReference parse_noise_reference(const std::string& name);

// Everything that determines an experiment's outputs. Stored as a
// `key = value` text file; `#` starts a comment. Every key has a default,
// see dump().
struct ExperimentConfig {
  Study study = Study::LimitedAngleCT;

  // Operator geometry.
  int grid = 64;
  int angles = 30;
  double angle_range_deg = 120.0;
  double tau = 1e-3;
  double kept_fraction = 0.25;
  double center_fraction = 0.08;
  std::uint64_t mask_seed = 0;

  data::PhantomSpec phantom;
  std::size_t train_count = 2000;
  std::size_t test_count = 200;

  std::vector<recon::MethodTag> methods = {recon::MethodTag::NullSpace1, recon::MethodTag::NullSpace2,
                                           recon::MethodTag::NullSpace1Unc};
  recon::NetworkConfig network;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Test samples used for the per-epoch validation PSNR.
  std::size_t validation_count = 50;
  int landweber_steps = 15;
  // 0 selects the operator default.
  double landweber_stepsize = 0.0;

  // Evaluation.
  std::size_t panel_count = 4;
  // Noise levels relative to the reference below, averaged over the test split.
  std::vector<double> noise_levels = {0.0, 0.02, 0.04};
  NoiseReference noise_reference = NoiseReference::Auto;
  int ood_square_size = 8;
  double ood_square_intensity = 1.0;
  int ood_salt_size = 10;
  double ood_salt_probability = 0.3;
  std::size_t ood_count = 4;

  std::filesystem::path out = "runs/default";

  // Switches to the full-scale geometry (192 x 192 grid, 60 angles).
  void apply_full_scale();

  // Sets one key; throws std::invalid_argument for unknown keys or values
  // that do not parse.
  void set(const std::string& key, const std::string& value);

  void dump(std::ostream& out) const;

  // Auto resolved against the study.
  NoiseReference resolved_noise_reference() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");

}  // namespace nsn::exp
