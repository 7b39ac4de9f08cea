#include "nsn/operators/radon.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "nsn/util/errors.hpp"
#include "nsn/util/hash.hpp"

namespace nsn::ops {

namespace {

constexpr std::array<char, 8> kMatrixMagic = {'N', 'S', 'N', 'R', 'D', 'N', '0', '1'};
constexpr double kParallelEps = 1e-12;

// Appends (pixel, length) pairs for one ray.
void trace_ray(int n, double phi, double s, std::vector<std::pair<int, double>>& hits) {
  const double h = 2.0 / n;
  const double cs = std::cos(phi);
  const double sn = std::sin(phi);
  // x(t) = s cs - t sn, y(t) = s sn + t cs
  const double x0 = s * cs;
  const double y0 = s * sn;

  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  if (std::abs(sn) > kParallelEps) {
    const double ta = (x0 + 1.0) / sn;
    const double tb = (x0 - 1.0) / sn;
    tmin = std::max(tmin, std::min(ta, tb));
    tmax = std::min(tmax, std::max(ta, tb));
  } else if (std::abs(x0) >= 1.0) {
    return;
  }
  if (std::abs(cs) > kParallelEps) {
    const double ta = (-1.0 - y0) / cs;
    const double tb = (1.0 - y0) / cs;
    tmin = std::max(tmin, std::min(ta, tb));
    tmax = std::min(tmax, std::max(ta, tb));
  } else if (std::abs(y0) >= 1.0) {
    return;
  }
  if (!(tmax > tmin)) return;

  std::vector<double> ts;
  ts.reserve(2 * static_cast<std::size_t>(n) + 4);
  ts.push_back(tmin);
  ts.push_back(tmax);
  for (int k = 0; k <= n; ++k) {
    const double grid_line = -1.0 + k * h;
    if (std::abs(sn) > kParallelEps) {
      const double t = (x0 - grid_line) / sn;
      if (t > tmin && t < tmax) ts.push_back(t);
    }
    if (std::abs(cs) > kParallelEps) {
      const double t = (grid_line - y0) / cs;
      if (t > tmin && t < tmax) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double length = ts[i + 1] - ts[i];
    if (length <= 1e-14) continue;
    const double mid = 0.5 * (ts[i] + ts[i + 1]);
    const double x = x0 - mid * sn;
    const double y = y0 + mid * cs;
    const int col = std::clamp(static_cast<int>(std::floor((x + 1.0) / h)), 0, n - 1);
    const int row = std::clamp(static_cast<int>(std::floor((1.0 - y) / h)), 0, n - 1);
    hits.emplace_back(row * n + col, length);
  }
}

std::filesystem::path matrix_cache_path(const std::filesystem::path& dir, const RadonGeometry& geometry) {
  return dir / ("radon-" + util::sha256_hex(geometry.to_json().dump()) + ".bin");
}

std::filesystem::path svd_cache_path(const std::filesystem::path& dir, const RadonGeometry& geometry, double tau) {
  nlohmann::json key = geometry.to_json();
  key["tau"] = tau;
  return dir / ("svd-" + util::sha256_hex(key.dump()) + ".bin");
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

void save_matrix(const std::filesystem::path& path, const SparseRowMatrix& matrix) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write Radon cache: " + tmp.string());
    out.write(kMatrixMagic.data(), kMatrixMagic.size());
    write_pod<std::int64_t>(out, matrix.rows());
    write_pod<std::int64_t>(out, matrix.cols());
    write_pod<std::int64_t>(out, matrix.nonZeros());
    for (Eigen::Index r = 0; r <= matrix.rows(); ++r) write_pod<std::int64_t>(out, matrix.outerIndexPtr()[r]);
    out.write(reinterpret_cast<const char*>(matrix.innerIndexPtr()), matrix.nonZeros() * sizeof(int));
    out.write(reinterpret_cast<const char*>(matrix.valuePtr()), matrix.nonZeros() * sizeof(double));
    if (!out) throw Error("failed writing Radon cache: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<SparseRowMatrix> load_matrix(const std::filesystem::path& path, std::int64_t rows, std::int64_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (magic != kMatrixMagic) throw CorruptionError("not a Radon cache file: " + path.string());
  const auto r = read_pod<std::int64_t>(in);
  const auto c = read_pod<std::int64_t>(in);
  const auto nnz = read_pod<std::int64_t>(in);
  if (!in || r != rows || c != cols || nnz < 0) throw CorruptionError("Radon cache shape mismatch: " + path.string());
  std::vector<std::int64_t> outer(static_cast<std::size_t>(rows) + 1);
  for (auto& o : outer) o = read_pod<std::int64_t>(in);
  std::vector<int> inner(static_cast<std::size_t>(nnz));
  std::vector<double> values(static_cast<std::size_t>(nnz));
  in.read(reinterpret_cast<char*>(inner.data()), nnz * sizeof(int));
  in.read(reinterpret_cast<char*>(values.data()), nnz * sizeof(double));
  if (!in || outer.front() != 0 || outer.back() != nnz) throw CorruptionError("truncated Radon cache: " + path.string());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (std::int64_t row = 0; row < rows; ++row) {
    for (auto k = outer[row]; k < outer[row + 1]; ++k) {
      if (inner[k] < 0 || inner[k] >= cols) throw CorruptionError("Radon cache column out of range");
      triplets.emplace_back(static_cast<int>(row), inner[k], values[k]);
    }
  }
  SparseRowMatrix matrix(rows, cols);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return matrix;
}

}  // namespace

RadonGeometry RadonGeometry::limited_angle(int grid, int count, double range_deg) {
  if (grid < 1 || count < 1) throw std::invalid_argument("RadonGeometry: grid and angle count must be positive");
  if (!(range_deg > 0.0 && range_deg <= 180.0)) throw std::invalid_argument("RadonGeometry: range must lie in (0, 180]");
  RadonGeometry g;
  g.grid = grid;
  g.detector_bins = default_bins(grid);
  g.angles_deg.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) g.angles_deg.push_back(k * range_deg / count);
  return g;
}

int RadonGeometry::default_bins(int grid) {
  return static_cast<int>(std::ceil(std::numbers::sqrt2 * grid - 1e-9));
}

double RadonGeometry::bin_center(int bin) const {
  const double span = 2.0 * std::numbers::sqrt2;
  return -std::numbers::sqrt2 + (bin + 0.5) * span / detector_bins;
}

nlohmann::json RadonGeometry::to_json() const {
  return {{"grid", grid}, {"angles", angles_deg}, {"detector_bins", detector_bins}};
}

RadonGeometry RadonGeometry::from_json(const nlohmann::json& j) {
  RadonGeometry g;
  g.grid = j.at("grid").get<int>();
  g.angles_deg = j.at("angles").get<std::vector<double>>();
  g.detector_bins = j.at("detector_bins").get<int>();
  return g;
}

SparseRowMatrix build_radon_matrix(const RadonGeometry& geometry) {
  const int n = geometry.grid;
  if (n < 1 || geometry.detector_bins < 1 || geometry.angles_deg.empty()) {
    throw std::invalid_argument("build_radon_matrix: empty geometry");
  }
  for (double a : geometry.angles_deg) {
    if (!(a >= 0.0 && a < 180.0)) throw std::invalid_argument("build_radon_matrix: angles must lie in [0, 180)");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<std::pair<int, double>> hits;
  int row = 0;
  for (double angle : geometry.angles_deg) {
    const double phi = angle * std::numbers::pi / 180.0;
    for (int b = 0; b < geometry.detector_bins; ++b, ++row) {
      hits.clear();
      trace_ray(n, phi, geometry.bin_center(b), hits);
      for (const auto& [pixel, length] : hits) triplets.emplace_back(row, pixel, length);
    }
  }
  SparseRowMatrix matrix(static_cast<Eigen::Index>(geometry.rays()), static_cast<Eigen::Index>(n) * n);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return matrix;
}

std::optional<std::filesystem::path> cache_dir_from_env() {
  const char* dir = std::getenv("NSN_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return std::filesystem::path(dir);
}

LimitedAngleRadonOp::LimitedAngleRadonOp(RadonGeometry geometry, std::optional<std::filesystem::path> cache_dir)
    : LinearMap(ImageShape{geometry.grid, geometry.grid, 1}, geometry.rays()),
      geometry_(std::move(geometry)),
      cache_dir_(std::move(cache_dir)) {
  const auto rows = static_cast<std::int64_t>(geometry_.rays());
  const auto cols = static_cast<std::int64_t>(geometry_.grid) * geometry_.grid;
  if (cache_dir_) {
    const auto path = matrix_cache_path(*cache_dir_, geometry_);
    if (auto cached = load_matrix(path, rows, cols)) {
      matrix_ = std::move(*cached);
      return;
    }
    matrix_ = build_radon_matrix(geometry_);
    save_matrix(path, matrix_);
    return;
  }
  matrix_ = build_radon_matrix(geometry_);
}

LimitedAngleRadonOp::LimitedAngleRadonOp(RadonGeometry geometry, SparseRowMatrix matrix)
    : LinearMap(ImageShape{geometry.grid, geometry.grid, 1}, geometry.rays()),
      geometry_(std::move(geometry)),
      matrix_(std::move(matrix)) {
  if (matrix_.rows() != static_cast<Eigen::Index>(geometry_.rays()) ||
      matrix_.cols() != static_cast<Eigen::Index>(geometry_.grid) * geometry_.grid) {
    throw DimensionError("LimitedAngleRadonOp: matrix shape does not match geometry");
  }
}

void LimitedAngleRadonOp::factorize(double tau) {
  if (cache_dir_) {
    const auto path = svd_cache_path(*cache_dir_, geometry_, tau);
    if (std::filesystem::exists(path)) {
      auto svd = TruncatedSVDInverse::load(path);
      if (svd.left().rows() != matrix_.rows() || svd.right().rows() != matrix_.cols()) {
        throw CorruptionError("SVD cache does not match operator: " + path.string());
      }
      svd_ = std::make_shared<const TruncatedSVDInverse>(std::move(svd));
      return;
    }
    auto svd = TruncatedSVDInverse::compute(Eigen::MatrixXd(matrix_), tau);
    svd.save(path);
    svd_ = std::make_shared<const TruncatedSVDInverse>(std::move(svd));
    return;
  }
  svd_ = std::make_shared<const TruncatedSVDInverse>(TruncatedSVDInverse::compute(Eigen::MatrixXd(matrix_), tau));
}

const TruncatedSVDInverse& LimitedAngleRadonOp::svd() const {
  if (!svd_) throw StateError("LimitedAngleRadonOp: SVD not computed");
  return *svd_;
}

nlohmann::json LimitedAngleRadonOp::descriptor() const {
  nlohmann::json j = geometry_.to_json();
  j["kind"] = to_string(kind());
  if (svd_) j["tau"] = svd_->tau();
  return j;
}

void LimitedAngleRadonOp::apply_impl(const Vector& x, Vector& y) const { y.noalias() = matrix_ * x; }

void LimitedAngleRadonOp::adjoint_impl(const Vector& y, Vector& x) const { x.noalias() = matrix_.transpose() * y; }

void LimitedAngleRadonOp::pseudoinverse_impl(const Vector& y, Vector& x) const { x = svd_->pseudoinverse(y); }

void LimitedAngleRadonOp::null_space_impl(const Vector& x, Vector& out) const {
  out = x - svd_->project_row_space(x);
}

void LimitedAngleRadonOp::null_space_columns_impl(const Eigen::MatrixXd& x, Eigen::MatrixXd& out) const {
  const Eigen::MatrixXd coeffs = svd_->right().transpose() * x;
  out = x;
  out.noalias() -= svd_->right() * coeffs;
}

void LimitedAngleRadonOp::retained_range_impl(const Vector& y, Vector& out) const {
  out = svd_ ? svd_->project_column_space(y) : y;
}

}  // namespace nsn::ops
