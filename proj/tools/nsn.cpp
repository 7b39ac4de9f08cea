#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nsn/experiment/config.hpp"
#include "nsn/experiment/oracle.hpp"
#include "nsn/experiment/pipeline.hpp"
#include "nsn/operators/radon.hpp"
#include "nsn/util/errors.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> train;
  std::optional<std::size_t> test;
  std::optional<int> epochs;
  std::vector<std::string> assignments;
  bool full = false;
};

nsn::exp::ExperimentConfig resolve(const Overrides& o) {
  nsn::exp::ExperimentConfig config = o.config_path.empty() ? nsn::exp::ExperimentConfig{}
                                                            : nsn::exp::load_config(o.config_path);
  if (o.full) config.apply_full_scale();
  for (const auto& a : o.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw nsn::exp::UsageError("--set expects key=value, got '" + a + "'");
    config.set(a.substr(0, eq), a.substr(eq + 1));
  }
  if (o.seed) {
    config.seed = *o.seed;
    config.phantom.seed = *o.seed;
  }
  if (o.out) config.out = *o.out;
  if (o.train) config.train_count = *o.train;
  if (o.test) config.test_count = *o.test;
  if (o.epochs) config.epochs = *o.epochs;
  return config;
}

std::vector<nsn::recon::MethodTag> training_targets(const nsn::exp::ExperimentConfig& config,
                                                    const std::string& method) {
  if (!method.empty()) return {nsn::recon::parse_method(method)};
  std::vector<nsn::recon::MethodTag> out;
  for (auto tag : config.methods) {
    const auto source = nsn::recon::weights_source(tag);
    if (nsn::recon::traits(source).cascade == 0) continue;
    if (std::find(out.begin(), out.end(), source) == out.end()) out.push_back(source);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Null-space networks with uncertainty for limited-angle CT and masked-Fourier reconstruction"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "Experiment config file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for phantoms, initialization and shuffling");
  app.add_option("--out", o.out, "Output directory");
  app.add_flag("--full", o.full, "Full-scale geometry: 192x192 grid, 60 angles");
  app.add_option("--set", o.assignments, "Override a config key (key=value), repeatable");

  auto* gen = app.add_subcommand("gen-data", "Generate phantoms and measurements");
  bool force = false;
  gen->add_flag("--force", force, "Overwrite an existing dataset");
  gen->add_option("--train", o.train, "Training samples");
  gen->add_option("--test", o.test, "Test samples");

  auto* train = app.add_subcommand("train", "Train one method (default: every configured method)");
  std::string train_method;
  train->add_option("--method", train_method, "Method tag, e.g. NullSpace1");
  train->add_option("--epochs", o.epochs, "Number of epochs");

  auto* eval = app.add_subcommand("eval", "Evaluate the pseudoinverse and every configured method");

  auto* uq = app.add_subcommand("uq-report", "Noise sweep and out-of-distribution uncertainty report");
  std::string uq_method = "NullSpace1Unc";
  bool oracle_sigma = false;
  uq->add_option("--method", uq_method, "Uncertainty-aware method tag")->capture_default_str();
  uq->add_flag("--oracle-sigma", oracle_sigma, "Replace sigma by the true absolute residual");

  auto* oracle = app.add_subcommand("oracle-check", "Run the operator, projector, gradient and metric invariants");
  bool inject_fault = false;
  oracle->add_flag("--inject-fault", inject_fault, "Corrupt the Radon adjoint so the dot-test fails");

  auto* config_cmd = app.add_subcommand("config", "Config utilities");
  config_cmd->require_subcommand(1);
  auto* dump = config_cmd->add_subcommand("dump", "Print the fully resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const nsn::exp::ExperimentConfig config = resolve(o);
    if (*gen) {
      nsn::exp::run_gen_data(config, force, std::cout);
    } else if (*train) {
      for (auto tag : training_targets(config, train_method)) nsn::exp::run_train(config, tag, std::cout);
    } else if (*eval) {
      nsn::exp::run_eval(config, std::cout);
    } else if (*uq) {
      nsn::exp::run_uq_report(config, nsn::recon::parse_method(uq_method), oracle_sigma, std::cout);
    } else if (*oracle) {
      nsn::exp::OracleOptions options;
      options.seed = config.seed;
      options.cache_dir = nsn::ops::cache_dir_from_env();
      options.inject_adjoint_fault = inject_fault;
      const auto results = nsn::exp::run_oracle_checks(options, std::cout);
      std::size_t failed = 0;
      for (const auto& r : results) failed += !r.pass;
      std::cout << "oracle-check: " << results.size() - failed << "/" << results.size() << " checks passed\n";
      if (failed) {
        for (const auto& r : results)
          if (!r.pass) std::cerr << "failed: " << r.name << "\n";
        return kExitFailure;
      }
    } else if (*dump) {
      config.dump(std::cout);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
