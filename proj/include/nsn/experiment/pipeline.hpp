#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsn/data/dataset.hpp"
#include "nsn/experiment/config.hpp"
#include "nsn/experiment/study.hpp"
#include "nsn/objectives/statistics.hpp"

namespace nsn::exp {

// Raised when a command refuses to run (e.g. non-empty output without
// --force, or a non-uncertainty method for the uncertainty report).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GenDataSummary {
  std::size_t train = 0;
  std::size_t test = 0;
  std::string operator_hash;
  std::filesystem::path directory;
};

// Writes the dataset and the resolved config below config.out. Refuses a
// non-empty data directory unless `force`.
GenDataSummary run_gen_data(const ExperimentConfig& config, bool force, std::ostream& log);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_psnr = 0.0;
  double seconds = 0.0;
};

struct TrainSummary {
  recon::MethodTag trained;
  double pseudoinverse_psnr = 0.0;
  double best_psnr = 0.0;
  int best_epoch = 0;
  std::vector<EpochRecord> epochs;
};

// Trains the weights source of `tag` (projected residual methods train the
// plain residual networks). Writes <Tag>.final and <Tag>.best checkpoints
// and logs/<Tag>.csv. A non-finite loss or gradient raises FaultError naming
// the epoch, batch and batch seed.
TrainSummary run_train(const ExperimentConfig& config, recon::MethodTag tag, std::ostream& log);

struct MethodSummary {
  recon::MethodTag tag;
  bool present = false;
  std::string note;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double mae_mean = 0.0;
  double gap_max = 0.0;
  double retained_gap_max = 0.0;
  std::optional<double> sigma_mean;
};

struct EvalSummary {
  std::vector<MethodSummary> methods;  // presentation order
  const MethodSummary* find(recon::MethodTag tag) const;
};

// Evaluates the pseudoinverse and every configured method on the test
// split, using the final checkpoints. Missing checkpoints are reported as
// absent.
EvalSummary run_eval(const ExperimentConfig& config, std::ostream& log);

// Noise norm delta that corresponds to level 1 for the given reference.
double noise_unit(const ops::LinearMap& op, std::span<const ops::Vector> measurements, NoiseReference reference,
                  std::uint64_t seed);

struct NoiseLevelSummary {
  double level = 0.0;
  double delta = 0.0;
  double mean_sigma = 0.0;
  double mean_abs_residual = 0.0;
  obj::Correlation correlation;
};

struct OodSummary {
  std::string kind;
  // Mean over images of (mean sigma inside the region) / (mean sigma on the
  // phantom support outside the region).
  double ratio_mean = 0.0;
  std::vector<double> ratios;
};

struct UqSummary {
  recon::MethodTag tag;
  std::vector<NoiseLevelSummary> levels;
  std::vector<OodSummary> ood;
};

// Noise sweep and OOD study for an uncertainty method. With `oracle_sigma`
// the predicted scale map is replaced by |residual| (diagnostic mode).
UqSummary run_uq_report(const ExperimentConfig& config, recon::MethodTag tag, bool oracle_sigma, std::ostream& log);

}  // namespace nsn::exp
