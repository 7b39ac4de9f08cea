#include "nsn/operators/truncated_svd.hpp"

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "nsn/util/errors.hpp"

namespace nsn::ops {

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'S', 'N', 'S', 'V', 'D', '0', '1'};

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

}  // namespace

TruncatedSVDInverse::TruncatedSVDInverse(Eigen::MatrixXd left, Eigen::VectorXd singular_values,
                                         Eigen::MatrixXd right, double tau, double largest)
    : left_(std::move(left)),
      singular_values_(std::move(singular_values)),
      right_(std::move(right)),
      tau_(tau),
      largest_(largest) {
  if (left_.cols() != singular_values_.size() || right_.cols() != singular_values_.size()) {
    throw DimensionError("TruncatedSVDInverse: factor column counts disagree with the number of singular values");
  }
}

TruncatedSVDInverse TruncatedSVDInverse::compute(const Eigen::MatrixXd& matrix, double tau) {
  if (tau < 0.0 || tau >= 1.0) throw std::invalid_argument("TruncatedSVDInverse: tau must lie in [0, 1)");
  const auto m = static_cast<lapack_int>(matrix.rows());
  const auto n = static_cast<lapack_int>(matrix.cols());
  const lapack_int k = std::min(m, n);
  if (k == 0) throw DimensionError("TruncatedSVDInverse: empty matrix");

  Eigen::MatrixXd work = matrix;
  Eigen::MatrixXd u(m, k);
  Eigen::MatrixXd vt(k, n);
  Eigen::VectorXd s(k);
  const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m, s.data(), u.data(), m,
                                         vt.data(), k);
  if (info != 0) throw Error("TruncatedSVDInverse: dgesdd failed with info " + std::to_string(info));

  const double largest = s(0);
  Eigen::Index rank = 0;
  while (rank < k && s(rank) > 0.0 && s(rank) >= tau * largest) ++rank;

  return TruncatedSVDInverse(u.leftCols(rank), s.head(rank), vt.topRows(rank).transpose(), tau, largest);
}

Eigen::VectorXd TruncatedSVDInverse::pseudoinverse(const Eigen::VectorXd& y) const {
  Eigen::VectorXd coeffs = left_.transpose() * y;
  coeffs.array() /= singular_values_.array();
  return right_ * coeffs;
}

Eigen::VectorXd TruncatedSVDInverse::project_row_space(const Eigen::VectorXd& x) const {
  Eigen::VectorXd coeffs = right_.transpose() * x;
  return right_ * coeffs;
}

Eigen::VectorXd TruncatedSVDInverse::project_column_space(const Eigen::VectorXd& y) const {
  Eigen::VectorXd coeffs = left_.transpose() * y;
  return left_ * coeffs;
}

void TruncatedSVDInverse::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write SVD cache: " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    write_pod<std::int64_t>(out, left_.rows());
    write_pod<std::int64_t>(out, right_.rows());
    write_pod<std::int64_t>(out, rank());
    write_pod(out, tau_);
    write_pod(out, largest_);
    out.write(reinterpret_cast<const char*>(singular_values_.data()), singular_values_.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(left_.data()), left_.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(right_.data()), right_.size() * sizeof(double));
    if (!out) throw Error("failed writing SVD cache: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TruncatedSVDInverse TruncatedSVDInverse::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open SVD cache: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (magic != kMagic) throw CorruptionError("not an SVD cache file: " + path.string());
  const auto rows = read_pod<std::int64_t>(in);
  const auto cols = read_pod<std::int64_t>(in);
  const auto rank = read_pod<std::int64_t>(in);
  const auto tau = read_pod<double>(in);
  const auto largest = read_pod<double>(in);
  if (!in || rows <= 0 || cols <= 0 || rank < 0 || rank > std::min(rows, cols)) {
    throw CorruptionError("bad SVD cache header: " + path.string());
  }
  Eigen::VectorXd s(rank);
  Eigen::MatrixXd u(rows, rank);
  Eigen::MatrixXd v(cols, rank);
  in.read(reinterpret_cast<char*>(s.data()), s.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(u.data()), u.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(v.data()), v.size() * sizeof(double));
  if (!in) throw CorruptionError("truncated SVD cache: " + path.string());
  return TruncatedSVDInverse(std::move(u), std::move(s), std::move(v), tau, largest);
}

}  // namespace nsn::ops
