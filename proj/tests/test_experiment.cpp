#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nsn/data/dataset.hpp"
#include "nsn/experiment/config.hpp"
#include "nsn/experiment/oracle.hpp"
#include "nsn/experiment/pipeline.hpp"
#include "nsn/experiment/study.hpp"
#include "nsn/util/errors.hpp"

using namespace nsn;
using namespace nsn::exp;
using recon::MethodTag;

namespace {

ExperimentConfig tiny(Study study, const std::string& name) {
  ExperimentConfig c;
  c.study = study;
  c.set("grid", "16");
  c.angles = 12;
  c.train_count = 16;
  c.test_count = 6;
  c.network = {2, 4};
  c.epochs = 1;
  c.batch_size = 4;
  c.validation_count = 6;
  c.panel_count = 2;
  c.ood_square_size = 4;
  c.ood_salt_size = 4;
  c.ood_count = 2;
  c.out = std::filesystem::temp_directory_path() / ("nsn_test_experiment_" + name);
  std::filesystem::remove_all(c.out);
  return c;
}

std::vector<std::vector<float>> snapshot(recon::ReconMethod<float>& method) {
  std::vector<std::vector<float>> out;
  for (auto* p : method.parameters()) out.emplace_back(p->value.values().begin(), p->value.values().end());
  return out;
}

}  // namespace

TEST_CASE("config text round trip") {
  ExperimentConfig c;
  c.study = Study::MaskedFourier;
  c.set("grid", "32");
  c.set("methods", "NullSpace2,NullSpace2Unc");
  c.set("noise_levels", "0,0.01,0.05");
  c.set("learning_rate", "0.0005");
  c.set("phantom.ellipses_max", "3");
  std::ostringstream dumped;
  c.dump(dumped);
  std::istringstream in(dumped.str());
  const ExperimentConfig back = parse_config(in);
  std::ostringstream again;
  back.dump(again);
  CHECK(again.str() == dumped.str());
  CHECK(back.phantom.grid == 32);
  CHECK(back.methods == std::vector<MethodTag>{MethodTag::NullSpace2, MethodTag::NullSpace2Unc});
}

TEST_CASE("config errors name the line") {
  std::istringstream bad("grid = 16\n# comment\nepochs = many\n");
  try {
    parse_config(bad, "cfg");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("cfg:3") != std::string::npos);
  }
  ExperimentConfig c;
  CHECK_THROWS_AS(c.set("no_such_key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("methods", "NullSpace3"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("study", "ultrasound"), std::invalid_argument);
  c.apply_full_scale();
  CHECK(c.grid == 192);
  CHECK(c.angles == 60);
}

TEST_CASE("gen-data is reproducible and refuses to overwrite") {
  ExperimentConfig c = tiny(Study::LimitedAngleCT, "gen");
  std::ostringstream log;
  const auto first = run_gen_data(c, false, log);
  const auto manifest = data::read_dataset(first.directory).manifest;
  CHECK_THROWS_AS(run_gen_data(c, false, log), UsageError);
  const auto second = run_gen_data(c, true, log);
  const auto again = data::read_dataset(second.directory).manifest;
  CHECK(first.operator_hash == second.operator_hash);
  REQUIRE(manifest.train.records.size() == again.train.records.size());
  for (std::size_t i = 0; i < manifest.train.records.size(); ++i) {
    CHECK(manifest.train.records[i].image_sha256 == again.train.records[i].image_sha256);
    CHECK(manifest.train.records[i].measurement_sha256 == again.train.records[i].measurement_sha256);
  }

  c.angles = 10;
  CHECK_THROWS_AS(run_train(c, MethodTag::NullSpace1, log), ValidationError);
}

TEST_CASE("training with zero learning rate keeps the pseudoinverse") {
  ExperimentConfig c = tiny(Study::LimitedAngleCT, "lr0");
  c.learning_rate = 0.0;
  std::ostringstream log;
  run_gen_data(c, false, log);
  const auto op = build_operator(c);
  auto fresh = make_method<float>(c, MethodTag::NullSpace1, op);
  const auto before = snapshot(fresh);

  const TrainSummary summary = run_train(c, MethodTag::NullSpace1, log);
  REQUIRE(summary.epochs.size() == 1);
  CHECK(summary.epochs[0].validation_psnr == summary.pseudoinverse_psnr);

  auto trained = make_method<float>(c, MethodTag::NullSpace1, op);
  trained.load(Layout{c.out}.checkpoint(MethodTag::NullSpace1, "final"));
  CHECK(snapshot(trained) == before);
  CHECK(std::filesystem::exists(Layout{c.out}.logs() / "NullSpace1.csv"));
  CHECK_THROWS_AS(run_train(c, MethodTag::Pseudoinverse, log), UsageError);
}

TEST_CASE("training is deterministic and eval reports every configured method") {
  ExperimentConfig c = tiny(Study::MaskedFourier, "fourier");
  c.epochs = 2;
  c.methods = {MethodTag::ProjResidual1, MethodTag::NullSpace1, MethodTag::NullSpace1Unc};
  std::ostringstream log;
  run_gen_data(c, false, log);
  const auto a = run_train(c, MethodTag::NullSpace1, log);
  const auto b = run_train(c, MethodTag::NullSpace1, log);
  REQUIRE(a.epochs.size() == 2);
  CHECK(a.epochs[1].train_loss == b.epochs[1].train_loss);
  CHECK(a.epochs[1].validation_psnr == b.epochs[1].validation_psnr);
  run_train(c, MethodTag::NullSpace1Unc, log);

  const EvalSummary eval = run_eval(c, log);
  REQUIRE(eval.methods.size() == 4);
  CHECK(eval.methods[0].tag == MethodTag::Pseudoinverse);
  const auto* missing = eval.find(MethodTag::ProjResidual1);
  REQUIRE(missing != nullptr);
  CHECK_FALSE(missing->present);
  for (MethodTag tag : {MethodTag::Pseudoinverse, MethodTag::NullSpace1, MethodTag::NullSpace1Unc}) {
    const auto* m = eval.find(tag);
    REQUIRE(m != nullptr);
    CHECK(m->present);
    CHECK(m->gap_max <= 1e-6);
  }
  CHECK(eval.find(MethodTag::NullSpace1Unc)->sigma_mean.has_value());
  const Layout layout{c.out};
  CHECK(std::filesystem::exists(layout.eval() / "summary.json"));
  CHECK(std::filesystem::exists(layout.eval() / "panels" / "panel_1.png"));

  CHECK_THROWS_AS(run_uq_report(c, MethodTag::NullSpace1, false, log), UsageError);
  const UqSummary uq = run_uq_report(c, MethodTag::NullSpace1Unc, true, log);
  REQUIRE(uq.levels.size() == 3);
  // With sigma replaced by the true residual the correlation is perfect.
  CHECK(uq.levels[0].correlation.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(uq.levels[2].mean_sigma > uq.levels[0].mean_sigma);
  REQUIRE(uq.ood.size() == 2);
  CHECK(uq.ood[0].ratios.size() == 2);
  CHECK(std::filesystem::exists(layout.uq() / "ood" / "square_0.png"));
}

TEST_CASE("oracle checks pass and a corrupted adjoint is named") {
  std::ostringstream log;
  OracleOptions options;
  const auto results = run_oracle_checks(options, log);
  CHECK(results.size() >= 20);
  CHECK(all_passed(results));
  options.inject_adjoint_fault = true;
  const auto faulty = run_oracle_checks(options, log);
  CHECK_FALSE(all_passed(faulty));
  for (const auto& r : faulty) {
    if (!r.pass) CHECK(r.name.find("dot-test") != std::string::npos);
  }
}

TEST_CASE("noise references agree where the pseudoinverse is an isometry") {
  ExperimentConfig c = tiny(Study::MaskedFourier, "noise");
  const auto op = build_operator(c);
  std::vector<ops::Vector> ys;
  for (int i = 0; i < 4; ++i) ys.push_back(op->apply(ops::Vector::Random(static_cast<Eigen::Index>(op->domain_size()))));
  const double measurement = noise_unit(*op, ys, NoiseReference::Measurement, 0);
  const double input = noise_unit(*op, ys, NoiseReference::Pseudoinverse, 0);
  CHECK(input == doctest::Approx(measurement).epsilon(1e-12));
  CHECK(c.resolved_noise_reference() == NoiseReference::Measurement);
  c.study = Study::LimitedAngleCT;
  CHECK(c.resolved_noise_reference() == NoiseReference::Pseudoinverse);
  c.set("noise_reference", "measurement");
  CHECK(c.resolved_noise_reference() == NoiseReference::Measurement);
  CHECK_THROWS_AS(c.set("noise_reference", "image"), std::invalid_argument);
}
