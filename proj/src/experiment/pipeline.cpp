#include "nsn/experiment/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nsn/autodiff/adam.hpp"
#include "nsn/data/perturbation.hpp"
#include "nsn/data/random.hpp"
#include "nsn/objectives/losses.hpp"
#include "nsn/objectives/metrics.hpp"
#include "nsn/util/binary_io.hpp"
#include "nsn/util/errors.hpp"
#include "nsn/util/png.hpp"

namespace nsn::exp {

using ad::Tensor;
using recon::MethodTag;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

data::Dataset load_dataset(const ExperimentConfig& config, const ops::LinearMap& op) {
  const Layout layout{config.out};
  data::Dataset d = data::read_dataset(layout.data());
  if (d.manifest.operator_hash != op.content_hash()) {
    throw ValidationError("dataset in " + layout.data().string() +
                          " was generated for a different operator; rerun gen-data with --force");
  }
  return d;
}

template <typename T>
Tensor<T> gather(const Tensor<T>& all, std::span<const std::size_t> rows) {
  ad::Shape s = all.shape();
  s.n = static_cast<int>(rows.size());
  Tensor<T> out(s);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    auto src = all.sample(static_cast<int>(rows[b]));
    std::copy(src.begin(), src.end(), out.sample(static_cast<int>(b)).begin());
  }
  return out;
}

template <typename T>
double mean_psnr(const Tensor<T>& rec, const Tensor<T>& truth) {
  double total = 0.0;
  for (int b = 0; b < rec.shape().n; ++b) {
    const obj::Image t = obj::to_image(truth, b);
    total += obj::psnr(obj::to_image(rec, b), t, obj::peak_of(t));
  }
  return total / rec.shape().n;
}

// Channel mean of sigma = exp(rho) for sample b.
template <typename T>
obj::Image sigma_plane(const Tensor<T>& rho, int b) {
  const ad::Shape& s = rho.shape();
  obj::Image out = obj::Image::Zero(s.h, s.w);
  for (int c = 0; c < s.c; ++c)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) out(y, x) += std::exp(static_cast<double>(rho.at(b, c, y, x))) / s.c;
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_f32_vector(const std::filesystem::path& path, const ops::Vector& v) {
  std::vector<float> values(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) values[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  std::filesystem::create_directories(path.parent_path());
  util::write_f32(path, values);
}

util::Plane side_by_side(const std::vector<obj::Image>& tiles, int gap = 2) {
  Eigen::Index width = 0;
  Eigen::Index height = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    width += tiles[i].cols() + (i ? gap : 0);
    height = std::max(height, tiles[i].rows());
  }
  util::Plane out = util::Plane::Zero(height, width);
  Eigen::Index x0 = 0;
  for (const auto& t : tiles) {
    out.block(0, x0, t.rows(), t.cols()) = t;
    x0 += t.cols() + gap;
  }
  return out;
}

}  // namespace

double noise_unit(const ops::LinearMap& op, std::span<const ops::Vector> measurements, NoiseReference reference,
                  std::uint64_t seed) {
  if (measurements.empty()) throw std::invalid_argument("noise_unit: no measurements");
  const double count = static_cast<double>(measurements.size());
  if (reference == NoiseReference::Measurement || reference == NoiseReference::Auto) {
    double mean = 0.0;
    for (const auto& y : measurements) mean += y.norm() / count;
    return mean;
  }
  double mean = 0.0;
  for (const auto& y : measurements) mean += op.pseudoinverse(y).norm() / count;
  // Root-mean-square gain of A‡ on unit-norm Gaussian directions.
  constexpr int kDraws = 64;
  double gain = 0.0;
  for (int k = 0; k < kDraws; ++k) {
    data::Stream stream(seed ^ 0x6e6f697365ULL, static_cast<std::uint64_t>(k));
    ops::Vector e(static_cast<Eigen::Index>(op.range_size()));
    for (auto& v : e) v = stream.normal();
    gain += op.pseudoinverse(e / e.norm()).squaredNorm() / kDraws;
  }
  return mean / std::sqrt(gain);
}

const MethodSummary* EvalSummary::find(MethodTag tag) const {
  for (const auto& m : methods) {
    if (m.tag == tag) return &m;
  }
  return nullptr;
}

GenDataSummary run_gen_data(const ExperimentConfig& config, bool force, std::ostream& log) {
  const Layout layout{config.out};
  if (std::filesystem::exists(layout.data()) && !std::filesystem::is_empty(layout.data())) {
    if (!force) throw UsageError(layout.data().string() + " is not empty; pass --force to overwrite");
    std::filesystem::remove_all(layout.data());
  }
  if (config.phantom.grid != config.grid) throw std::invalid_argument("phantom grid differs from the operator grid");
  const auto op = build_operator(config);
  const auto start = Clock::now();
  const data::Dataset dataset = data::generate_dataset(*op, config.phantom, config.train_count, config.test_count);
  data::write_dataset(layout.data(), dataset);
  std::ostringstream resolved;
  config.dump(resolved);
  write_text(layout.root / "config.txt", resolved.str());
  log << "gen-data: " << dataset.manifest.train.count << " train + " << dataset.manifest.test.count
      << " test samples, operator " << ops::to_string(op->kind()) << " " << dataset.manifest.operator_hash << " ("
      << std::fixed << std::setprecision(1) << seconds_since(start) << " s)\n"
      << std::defaultfloat;
  return {dataset.manifest.train.count, dataset.manifest.test.count, dataset.manifest.operator_hash, layout.data()};
}

TrainSummary run_train(const ExperimentConfig& config, MethodTag tag, std::ostream& log) {
  const MethodTag source = recon::weights_source(tag);
  if (recon::traits(source).cascade == 0) throw UsageError("the pseudoinverse has no parameters to train");
  if (config.epochs < 1 || config.batch_size < 1) throw std::invalid_argument("epochs and batch_size must be positive");
  if (config.learning_rate < 0.0) throw std::invalid_argument("learning_rate must be non-negative");
  const Layout layout{config.out};
  const auto op = build_operator(config);
  const data::Dataset dataset = load_dataset(config, *op);
  if (dataset.train.images.empty()) throw ValidationError("training split is empty");

  auto method = make_method<float>(config, source, op);
  const bool uncertainty = recon::traits(source).uncertainty;
  auto params = method.parameters();
  ad::AdamState<float> adam;
  adam.learning_rate = static_cast<float>(config.learning_rate);

  const Tensor<float> xdag = method.pseudoinverse(dataset.train.measurements);
  const Tensor<float> truth = method.to_batch(dataset.train.images);
  const std::size_t val_count = std::min(config.validation_count, dataset.test.images.size());
  if (val_count == 0) throw ValidationError("no test samples for validation");
  const std::span<const ops::Vector> val_y(dataset.test.measurements.data(), val_count);
  const std::span<const ops::Vector> val_x(dataset.test.images.data(), val_count);
  const Tensor<float> val_xdag = method.pseudoinverse(val_y);
  const Tensor<float> val_truth = method.to_batch(val_x);

  TrainSummary summary{source, mean_psnr(val_xdag, val_truth), -std::numeric_limits<double>::infinity(), 0, {}};
  if (source != tag) log << "train: " << recon::to_string(tag) << " uses the " << recon::to_string(source) << " networks\n";
  log << "train: " << recon::to_string(source) << ", " << params.size() << " parameter tensors, "
      << dataset.train.images.size() << " samples, pseudoinverse validation PSNR "
      << format_double(summary.pseudoinverse_psnr) << " dB\n";

  std::filesystem::create_directories(layout.logs());
  std::ofstream csv(layout.logs() / (recon::to_string(source) + ".csv"));
  csv << "epoch,train_loss,validation_psnr,pseudoinverse_psnr,seconds\n";

  const std::size_t n = dataset.train.images.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    data::Stream shuffle(config.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.integer(0, static_cast<int>(i - 1)))]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(config.batch_size), ++batches) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, n - first);
      const std::span<const std::size_t> rows(order.data() + first, count);
      const std::uint64_t batch_seed = (config.seed << 32) ^ (static_cast<std::uint64_t>(epoch) << 16) ^ batches;
      try {
        ad::Tape<float> tape;
        const auto out = method.forward(tape, tape.input(gather(xdag, rows)));
        const ad::Var target = tape.input(gather(truth, rows));
        const ad::Var loss = uncertainty ? obj::uncertainty_loss(tape, out.recon, *out.log_scale, target)
                                         : obj::mae_risk(tape, out.recon, target);
        const double value = tape.value(loss)[0];
        if (!std::isfinite(value)) throw FaultError("loss is " + format_double(value));
        tape.backward(loss);
        ad::adam_step(std::span<ad::Parameter<float>* const>(params), adam);
        loss_sum += value;
      } catch (const FaultError& e) {
        throw FaultError("training fault at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches) +
                         " (batch seed " + std::to_string(batch_seed) + "): " + e.what());
      }
    }

    const auto val = method.reconstruct_from(val_xdag);
    EpochRecord record{epoch, loss_sum / static_cast<double>(batches), mean_psnr(val.recon, val_truth),
                       seconds_since(start)};
    summary.epochs.push_back(record);
    csv << record.epoch << "," << format_double(record.train_loss) << "," << format_double(record.validation_psnr)
        << "," << format_double(summary.pseudoinverse_psnr) << "," << format_double(record.seconds) << "\n";
    csv.flush();
    log << "  epoch " << epoch << "/" << config.epochs << "  loss " << format_double(record.train_loss)
        << "  val PSNR " << format_double(record.validation_psnr) << " dB  (" << std::fixed << std::setprecision(1)
        << record.seconds << " s)\n"
        << std::defaultfloat;
    if (record.validation_psnr > summary.best_psnr) {
      summary.best_psnr = record.validation_psnr;
      summary.best_epoch = epoch;
      method.save(layout.checkpoint(source, "best"));
    }
  }
  method.save(layout.checkpoint(source, "final"));
  log << "train: best validation PSNR " << format_double(summary.best_psnr) << " dB at epoch " << summary.best_epoch
      << "; checkpoints in " << layout.checkpoints().string() << "\n";
  return summary;
}

EvalSummary run_eval(const ExperimentConfig& config, std::ostream& log) {
  const Layout layout{config.out};
  const auto op = build_operator(config);
  const data::Dataset dataset = load_dataset(config, *op);
  const auto& test = dataset.test;
  if (test.images.empty()) throw ValidationError("test split is empty");

  std::vector<MethodTag> tags;
  for (MethodTag tag : recon::all_methods()) {
    const bool requested = std::find(config.methods.begin(), config.methods.end(), tag) != config.methods.end();
    if (tag == MethodTag::Pseudoinverse || requested) tags.push_back(tag);
  }

  std::filesystem::create_directories(layout.eval() / "panels");
  std::ofstream rows(layout.eval() / "metrics.csv");
  rows << "method,index,psnr,ssim,mae,peak,gap,retained_gap,mean_sigma\n";

  const std::size_t panels = std::min(config.panel_count, test.images.size());
  std::vector<std::vector<obj::Image>> panel_tiles(panels);
  EvalSummary summary;
  for (MethodTag tag : tags) {
    MethodSummary ms;
    ms.tag = tag;
    auto method = make_method<double>(config, tag, op);
    if (recon::traits(tag).cascade > 0) {
      const auto stem = layout.checkpoint(tag, "final");
      if (!std::filesystem::exists(stem.string() + ".json")) {
        ms.note = "absent: no checkpoint " + stem.string();
        log << "eval: " << recon::to_string(tag) << " " << ms.note << "\n";
        summary.methods.push_back(ms);
        continue;
      }
      method.load(stem);
    }
    ms.present = true;
    std::vector<double> psnrs, ssims, maes, sigmas;
    const std::size_t batch = 8;
    for (std::size_t first = 0; first < test.images.size(); first += batch) {
      const std::size_t count = std::min(batch, test.images.size() - first);
      const std::span<const ops::Vector> ys(test.measurements.data() + first, count);
      const auto out = method.reconstruct(ys);
      const auto recs = method.to_vectors(out.recon);
      const Tensor<double> truth = method.to_batch(std::span<const ops::Vector>(test.images.data() + first, count));
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t index = first + b;
        const obj::Image t = obj::to_image(truth, static_cast<int>(b));
        const obj::Image r = obj::to_image(out.recon, static_cast<int>(b));
        std::optional<obj::Image> sigma;
        if (out.log_scale) sigma = sigma_plane(*out.log_scale, static_cast<int>(b));
        const obj::MetricReport m = obj::evaluate_image(r, t, sigma);
        const double gap = recon::data_consistency_gap(*op, recs[b], test.measurements[index]);
        const double retained = recon::retained_consistency_gap(*op, recs[b], test.measurements[index]);
        psnrs.push_back(m.psnr);
        ssims.push_back(m.ssim);
        maes.push_back(m.mae);
        ms.gap_max = std::max(ms.gap_max, gap);
        ms.retained_gap_max = std::max(ms.retained_gap_max, retained);
        if (m.mean_uncertainty) sigmas.push_back(*m.mean_uncertainty);
        rows << recon::to_string(tag) << "," << index << "," << format_double(m.psnr) << "," << format_double(m.ssim)
             << "," << format_double(m.mae) << "," << format_double(m.peak) << "," << format_double(gap) << ","
             << format_double(retained) << "," << (m.mean_uncertainty ? format_double(*m.mean_uncertainty) : "") << "\n";
        if (index < panels) {
          if (tag == MethodTag::Pseudoinverse) {
            panel_tiles[index].push_back(t);
          }
          panel_tiles[index].push_back(r);
          write_f32_vector(layout.eval() / "panels" / (std::to_string(index) + "_" + recon::to_string(tag) + ".f32"),
                           recs[b]);
        }
      }
    }
    const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    ms.psnr_mean = mean(psnrs);
    double var = 0.0;
    for (double p : psnrs) var += (p - ms.psnr_mean) * (p - ms.psnr_mean);
    ms.psnr_std = std::sqrt(var / psnrs.size());
    ms.ssim_mean = mean(ssims);
    ms.mae_mean = mean(maes);
    if (!sigmas.empty()) ms.sigma_mean = mean(sigmas);
    log << "eval: " << std::left << std::setw(14) << recon::to_string(tag) << " PSNR " << format_double(ms.psnr_mean)
        << " dB  SSIM " << format_double(ms.ssim_mean) << "  MAE " << format_double(ms.mae_mean) << "  gap "
        << format_double(ms.gap_max) << "  retained gap " << format_double(ms.retained_gap_max) << "\n"
        << std::right;
    summary.methods.push_back(ms);
  }

  std::ofstream table(layout.eval() / "summary.csv");
  table << "method,present,psnr_mean,psnr_std,ssim_mean,mae_mean,gap_max,retained_gap_max,sigma_mean\n";
  nlohmann::json json;
  json["peak_convention"] = "per-image maximum of the ground truth";
  json["ssim"] = {{"window", 11}, {"sigma", 1.5}, {"k1", 0.01}, {"k2", 0.03}};
  json["complex_images"] = "metrics on magnitude images";
  json["test_count"] = test.images.size();
  json["methods"] = nlohmann::json::array();
  for (const auto& m : summary.methods) {
    table << recon::to_string(m.tag) << "," << (m.present ? 1 : 0);
    nlohmann::json entry{{"method", recon::to_string(m.tag)}, {"present", m.present}};
    if (m.present) {
      table << "," << format_double(m.psnr_mean) << "," << format_double(m.psnr_std) << ","
            << format_double(m.ssim_mean) << "," << format_double(m.mae_mean) << "," << format_double(m.gap_max) << ","
            << format_double(m.retained_gap_max) << "," << (m.sigma_mean ? format_double(*m.sigma_mean) : "");
      entry["psnr_mean"] = json_number(m.psnr_mean);
      entry["psnr_std"] = json_number(m.psnr_std);
      entry["ssim_mean"] = m.ssim_mean;
      entry["mae_mean"] = m.mae_mean;
      entry["gap_max"] = m.gap_max;
      entry["retained_gap_max"] = m.retained_gap_max;
      if (m.sigma_mean) entry["sigma_mean"] = *m.sigma_mean;
    } else {
      table << ",,,,,,,";
      entry["note"] = m.note;
    }
    table << "\n";
    json["methods"].push_back(entry);
  }
  write_text(layout.eval() / "summary.json", json.dump(2) + "\n");

  for (std::size_t k = 0; k < panels; ++k) {
    const double peak = obj::peak_of(panel_tiles[k].front());
    util::write_png_gray16(layout.eval() / "panels" / ("panel_" + std::to_string(k) + ".png"),
                           side_by_side(panel_tiles[k]), 0.0, peak);
  }
  log << "eval: tables and " << panels << " panels in " << layout.eval().string() << "\n";
  return summary;
}

UqSummary run_uq_report(const ExperimentConfig& config, MethodTag tag, bool oracle_sigma, std::ostream& log) {
  if (!recon::traits(tag).uncertainty) {
    throw UsageError(recon::to_string(tag) + " does not predict uncertainty; use NullSpace1Unc or NullSpace2Unc");
  }
  const Layout layout{config.out};
  const auto op = build_operator(config);
  const data::Dataset dataset = load_dataset(config, *op);
  const auto& test = dataset.test;
  auto method = make_method<double>(config, tag, op);
  const auto stem = layout.checkpoint(tag, "final");
  if (!std::filesystem::exists(stem.string() + ".json")) throw UsageError("no checkpoint " + stem.string());
  method.load(stem);

  const int grid = op->domain_shape().height;
  UqSummary summary{tag, {}, {}};
  const NoiseReference reference = config.resolved_noise_reference();
  const double unit = noise_unit(*op, test.measurements, reference, config.seed);

  std::filesystem::create_directories(layout.uq() / "ood");
  std::ofstream sweep(layout.uq() / "sweep.csv");
  sweep << "level,delta,index,mean_abs_residual,mean_sigma\n";
  nlohmann::json json;
  json["method"] = recon::to_string(tag);
  json["oracle_sigma"] = oracle_sigma;
  json["noise_reference"] = to_string(reference);
  json["delta_per_unit_level"] = unit;
  json["levels"] = nlohmann::json::array();

  for (std::size_t l = 0; l < config.noise_levels.size(); ++l) {
    NoiseLevelSummary level;
    level.level = config.noise_levels[l];
    level.delta = level.level * unit;
    std::vector<obj::UncertaintyErrorRow> rows;
    const std::size_t batch = 8;
    for (std::size_t first = 0; first < test.images.size(); first += batch) {
      const std::size_t count = std::min(batch, test.images.size() - first);
      std::vector<ops::Vector> ys;
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t index = first + b;
        const auto noise = data::PerturbationSpec::noise(level.delta, config.seed * 1000003 + l * 100003 + index);
        ys.push_back(data::simulate_measurement(*op, test.images[index], noise));
      }
      const auto out = method.reconstruct(ys);
      const Tensor<double> truth = method.to_batch(std::span<const ops::Vector>(test.images.data() + first, count));
      for (std::size_t b = 0; b < count; ++b) {
        const obj::Image residual =
            (obj::to_image(out.recon, static_cast<int>(b)) - obj::to_image(truth, static_cast<int>(b))).abs();
        const obj::Image sigma = oracle_sigma ? residual : sigma_plane(*out.log_scale, static_cast<int>(b));
        rows.push_back({residual.mean(), sigma.mean()});
        sweep << format_double(level.level) << "," << format_double(level.delta) << "," << first + b << ","
              << format_double(rows.back().mean_abs_residual) << "," << format_double(rows.back().mean_sigma) << "\n";
      }
    }
    const auto report = obj::uncertainty_error_report(rows);
    level.correlation = report.correlation;
    for (const auto& r : rows) {
      level.mean_sigma += r.mean_sigma / static_cast<double>(rows.size());
      level.mean_abs_residual += r.mean_abs_residual / static_cast<double>(rows.size());
    }
    json["levels"].push_back({{"level", level.level},
                              {"delta", level.delta},
                              {"mean_sigma", level.mean_sigma},
                              {"mean_abs_residual", level.mean_abs_residual},
                              {"pearson_r", level.correlation.r},
                              {"degenerate", level.correlation.degenerate}});
    log << "uq-report: noise level " << format_double(level.level) << " (delta " << format_double(level.delta)
        << "): mean sigma " << format_double(level.mean_sigma) << ", mean |residual| "
        << format_double(level.mean_abs_residual) << ", Pearson r " << format_double(level.correlation.r)
        << (level.correlation.degenerate ? " (degenerate)" : "") << "\n";
    summary.levels.push_back(level);
  }

  const int square = config.ood_square_size;
  const int salt = config.ood_salt_size;
  const std::vector<std::pair<std::string, data::PerturbationSpec>> perturbations = {
      {"square", data::PerturbationSpec::square({(grid - square) / 2, (grid - square) / 2, square},
                                                config.ood_square_intensity)},
      {"salt_pepper", data::PerturbationSpec::salt_pepper({grid / 2 + grid / 8 - salt / 2, grid / 2 - grid / 8 - salt / 2, salt},
                                                          config.ood_salt_probability, config.seed)},
  };
  json["ood"] = nlohmann::json::array();
  const std::size_t ood_count = std::min(config.ood_count, test.images.size());
  for (const auto& [name, perturbation] : perturbations) {
    OodSummary ood{name, 0.0, {}};
    for (std::size_t k = 0; k < ood_count; ++k) {
      const ops::Vector plane = test.images[k].head(static_cast<Eigen::Index>(grid) * grid);
      const ops::Vector perturbed = data::inject_ood(plane, grid, grid, perturbation);
      const ops::Vector x = data::to_domain(perturbed, op->domain_shape());
      const std::vector<ops::Vector> ys = {op->apply(x)};
      const auto out = method.reconstruct(ys);
      const obj::Image truth = obj::to_image(method.to_batch(std::span<const ops::Vector>(&x, 1)), 0);
      const obj::Image rec = obj::to_image(out.recon, 0);
      const obj::Image sigma = oracle_sigma ? obj::Image((rec - truth).abs()) : sigma_plane(*out.log_scale, 0);
      const data::Region& r = perturbation.region;
      double in_sum = 0.0, out_sum = 0.0;
      int in_count = 0, out_count = 0;
      for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
          const bool inside = i >= r.row && i < r.row + r.size && j >= r.col && j < r.col + r.size;
          if (inside) {
            in_sum += sigma(i, j);
            ++in_count;
          } else if (plane[static_cast<Eigen::Index>(i) * grid + j] > 0.0) {
            out_sum += sigma(i, j);
            ++out_count;
          }
        }
      }
      const double ratio = (in_sum / in_count) / std::max(out_sum / std::max(out_count, 1), 1e-300);
      ood.ratios.push_back(ratio);
      const double peak = std::max(obj::peak_of(truth), 1e-12);
      const util::RgbImage triptych = util::hconcat({util::gray_tile(obj::to_image(out.pseudoinverse, 0), 0.0, peak),
                                                     util::gray_tile(rec, 0.0, peak),
                                                     util::heat_tile(sigma, 0.0, sigma.maxCoeff())});
      util::write_png_rgb8(layout.uq() / "ood" / (name + "_" + std::to_string(k) + ".png"), triptych);
    }
    ood.ratio_mean = ood.ratios.empty() ? 0.0 : std::accumulate(ood.ratios.begin(), ood.ratios.end(), 0.0) / ood.ratios.size();
    json["ood"].push_back({{"kind", name}, {"region", perturbation.to_json()["region"]}, {"ratio_mean", ood.ratio_mean},
                           {"ratios", ood.ratios}});
    log << "uq-report: " << name << " in/out mean sigma ratio " << format_double(ood.ratio_mean) << " over "
        << ood.ratios.size() << " phantoms\n";
    summary.ood.push_back(ood);
  }
  write_text(layout.uq() / "summary.json", json.dump(2) + "\n");
  log << "uq-report: outputs in " << layout.uq().string() << "\n";
  return summary;
}

}  // namespace nsn::exp
