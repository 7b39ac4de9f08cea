#include "nsn/experiment/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nsn::exp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("bad value '" + value + "' for " + key);
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

}  // namespace

std::string to_string(Study study) {
  return study == Study::LimitedAngleCT ? "limited_angle_ct" : "masked_fourier";
}

Study parse_study(const std::string& name) {
  if (name == "limited_angle_ct") return Study::LimitedAngleCT;
  if (name == "masked_fourier") return Study::MaskedFourier;
  throw std::invalid_argument("unknown study '" + name + "'");
}

std::string to_string(NoiseReference reference) {
  switch (reference) {
    case NoiseReference::Auto:
      return "auto";
    case NoiseReference::Measurement:
      return "measurement";
    case NoiseReference::Pseudoinverse:
      return "pseudoinverse";
  }
  return "auto";
}

NoiseReference parse_noise_reference(const std::string& name) {
  if (name == "auto") return NoiseReference::Auto;
  if (name == "measurement") return NoiseReference::Measurement;
  if (name == "pseudoinverse") return NoiseReference::Pseudoinverse;
  throw std::invalid_argument("unknown noise reference '" + name + "'");
}

NoiseReference ExperimentConfig::resolved_noise_reference() const {
  if (noise_reference != NoiseReference::Auto) return noise_reference;
  return study == Study::MaskedFourier ? NoiseReference::Measurement : NoiseReference::Pseudoinverse;
}

void ExperimentConfig::apply_full_scale() {
  grid = 192;
  angles = 60;
  phantom.grid = 192;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "study") {
    study = parse_study(value);
  } else if (key == "grid") {
    grid = number<int>(key, value);
    phantom.grid = grid;
  } else if (key == "angles") {
    angles = number<int>(key, value);
  } else if (key == "angle_range_deg") {
    angle_range_deg = number<double>(key, value);
  } else if (key == "tau") {
    tau = number<double>(key, value);
  } else if (key == "kept_fraction") {
    kept_fraction = number<double>(key, value);
  } else if (key == "center_fraction") {
    center_fraction = number<double>(key, value);
  } else if (key == "mask_seed") {
    mask_seed = number<std::uint64_t>(key, value);
  } else if (key == "phantom.disc_radius") {
    phantom.disc_radius = number<double>(key, value);
  } else if (key == "phantom.base_min") {
    phantom.base_min = number<double>(key, value);
  } else if (key == "phantom.base_max") {
    phantom.base_max = number<double>(key, value);
  } else if (key == "phantom.ellipses_min") {
    phantom.ellipses_min = number<int>(key, value);
  } else if (key == "phantom.ellipses_max") {
    phantom.ellipses_max = number<int>(key, value);
  } else if (key == "phantom.rectangles_min") {
    phantom.rectangles_min = number<int>(key, value);
  } else if (key == "phantom.rectangles_max") {
    phantom.rectangles_max = number<int>(key, value);
  } else if (key == "phantom.intensity_min") {
    phantom.intensity_min = number<double>(key, value);
  } else if (key == "phantom.intensity_max") {
    phantom.intensity_max = number<double>(key, value);
  } else if (key == "phantom.high_frequency_probability") {
    phantom.high_frequency_probability = number<double>(key, value);
  } else if (key == "phantom.seed") {
    phantom.seed = number<std::uint64_t>(key, value);
  } else if (key == "train_count") {
    train_count = number<std::size_t>(key, value);
  } else if (key == "test_count") {
    test_count = number<std::size_t>(key, value);
  } else if (key == "methods") {
    methods.clear();
    for (const auto& name : split_list(value)) methods.push_back(recon::parse_method(name));
  } else if (key == "depth") {
    network.depth = number<int>(key, value);
  } else if (key == "base_channels") {
    network.base_channels = number<int>(key, value);
  } else if (key == "leaky_slope") {
    network.slope = number<double>(key, value);
  } else if (key == "epochs") {
    epochs = number<int>(key, value);
  } else if (key == "batch_size") {
    batch_size = number<int>(key, value);
  } else if (key == "learning_rate") {
    learning_rate = number<double>(key, value);
  } else if (key == "seed") {
    seed = number<std::uint64_t>(key, value);
  } else if (key == "validation_count") {
    validation_count = number<std::size_t>(key, value);
  } else if (key == "landweber_steps") {
    landweber_steps = number<int>(key, value);
  } else if (key == "landweber_stepsize") {
    landweber_stepsize = number<double>(key, value);
  } else if (key == "panel_count") {
    panel_count = number<std::size_t>(key, value);
  } else if (key == "noise_levels") {
    noise_levels.clear();
    for (const auto& item : split_list(value)) noise_levels.push_back(number<double>(key, item));
  } else if (key == "noise_reference") {
    noise_reference = parse_noise_reference(value);
  } else if (key == "ood_square_size") {
    ood_square_size = number<int>(key, value);
  } else if (key == "ood_square_intensity") {
    ood_square_intensity = number<double>(key, value);
  } else if (key == "ood_salt_size") {
    ood_salt_size = number<int>(key, value);
  } else if (key == "ood_salt_probability") {
    ood_salt_probability = number<double>(key, value);
  } else if (key == "ood_count") {
    ood_count = number<std::size_t>(key, value);
  } else if (key == "out") {
    out = value;
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::dump(std::ostream& os) const {
  const auto precision = os.precision(12);
  std::vector<std::string> method_names;
  for (auto tag : methods) method_names.push_back(recon::to_string(tag));
  os << "# study: limited_angle_ct | masked_fourier\n"
     << "study = " << to_string(study) << "\n"
     << "\n# operator\n"
     << "grid = " << grid << "\n"
     << "angles = " << angles << "\n"
     << "angle_range_deg = " << angle_range_deg << "\n"
     << "tau = " << tau << "\n"
     << "kept_fraction = " << kept_fraction << "\n"
     << "center_fraction = " << center_fraction << "\n"
     << "mask_seed = " << mask_seed << "\n"
     << "\n# phantoms\n"
     << "phantom.disc_radius = " << phantom.disc_radius << "\n"
     << "phantom.base_min = " << phantom.base_min << "\n"
     << "phantom.base_max = " << phantom.base_max << "\n"
     << "phantom.ellipses_min = " << phantom.ellipses_min << "\n"
     << "phantom.ellipses_max = " << phantom.ellipses_max << "\n"
     << "phantom.rectangles_min = " << phantom.rectangles_min << "\n"
     << "phantom.rectangles_max = " << phantom.rectangles_max << "\n"
     << "phantom.intensity_min = " << phantom.intensity_min << "\n"
     << "phantom.intensity_max = " << phantom.intensity_max << "\n"
     << "phantom.high_frequency_probability = " << phantom.high_frequency_probability << "\n"
     << "phantom.seed = " << phantom.seed << "\n"
     << "train_count = " << train_count << "\n"
     << "test_count = " << test_count << "\n"
     << "\n# training\n"
     << "methods = " << join(method_names) << "\n"
     << "depth = " << network.depth << "\n"
     << "base_channels = " << network.base_channels << "\n"
     << "leaky_slope = " << network.slope << "\n"
     << "epochs = " << epochs << "\n"
     << "batch_size = " << batch_size << "\n"
     << "learning_rate = " << learning_rate << "\n"
     << "seed = " << seed << "\n"
     << "validation_count = " << validation_count << "\n"
     << "# landweber_stepsize = 0 selects 0.003 (tomography) or 1 (Fourier)\n"
     << "landweber_steps = " << landweber_steps << "\n"
     << "landweber_stepsize = " << landweber_stepsize << "\n"
     << "\n# evaluation\n"
     << "panel_count = " << panel_count << "\n"
     << "# noise_reference: auto | measurement | pseudoinverse\n"
     << "noise_levels = " << join(noise_levels) << "\n"
     << "noise_reference = " << to_string(noise_reference) << "\n"
     << "ood_square_size = " << ood_square_size << "\n"
     << "ood_square_intensity = " << ood_square_intensity << "\n"
     << "ood_salt_size = " << ood_salt_size << "\n"
     << "ood_salt_probability = " << ood_salt_probability << "\n"
     << "ood_count = " << ood_count << "\n"
     << "\nout = " << out.string() << "\n";
  os.precision(precision);
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig config;
  std::string line;
  int number_of_line = 0;
  while (std::getline(in, line)) {
    ++number_of_line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(number_of_line) + ": expected key = value");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(number_of_line) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  return parse_config(in, path.string());
}

}  // namespace nsn::exp
