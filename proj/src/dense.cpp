#include "kgd/dense.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace kgd {

namespace {

constexpr double kSymTol = 1e-10;  // absolute asymmetry tolerance on checked inputs

void require_finite(const std::vector<double>& data, const char* what) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw std::invalid_argument(std::string(what) + ": non-finite entry at index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::size_t pivot_index, double pivot_value)
    : std::runtime_error("not positive definite: pivot " + std::to_string(pivot_index) +
                         " = " + std::to_string(pivot_value)),
      pivot(pivot_index),
      value(pivot_value) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows_ * cols_ != data_.size()) {
    throw std::invalid_argument("Mat: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                " needs " + std::to_string(rows_ * cols_) + " entries, got " +
                                std::to_string(data_.size()));
  }
  require_finite(data_, "Mat");
}

Mat Mat::identity(std::size_t n) { return scaled_identity(n, 1.0); }

Mat Mat::scaled_identity(std::size_t n, double s) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = s;
  return m;
}

Mat Mat::diag(const std::vector<double>& d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

std::string Mat::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Vec::Vec(std::vector<double> data) : data_(std::move(data)) {
  require_finite(data_, "Vec");
}

Vec::Vec(std::initializer_list<double> init) : data_(init) {
  require_finite(data_, "Vec");
}

// --- Rng ---------------------------------------------------------------

std::uint64_t Rng::next_bits() {
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * ++counter_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
  auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// --- kernels -------------------------------------------------------------

Mat mat_mul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("mat_mul: dimension mismatch (" + a.shape_str() + ")*(" +
                                b.shape_str() + ")");
  }
  Mat out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;  // selector/triangular blocks are mostly zero
      const double* b_row = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Mat mat_mul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("mat_mul_nt: dimension mismatch (" + a.shape_str() + ")*(" +
                                b.shape_str() + ")^T");
  }
  Mat out(a.rows(), b.rows());
  const std::size_t k_dim = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* a_row = a.data() + i * k_dim;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* b_row = b.data() + j * k_dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < k_dim; ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Vec mat_vec(const Mat& a, const Vec& v) {
  if (a.cols() != v.dim()) {
    throw std::invalid_argument("mat_vec: dimension mismatch (" + a.shape_str() + ")*(" +
                                std::to_string(v.dim()) + ")");
  }
  Vec out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.data() + i * a.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

namespace {
void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                                ") vs (" + b.shape_str() + ")");
  }
}
}  // namespace

Mat add(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "add");
  Mat out = a;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Mat sub(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "sub");
  Mat out = a;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Mat scale(const Mat& a, double s) {
  Mat out = a;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) out.data()[i] *= s;
  return out;
}

Mat add_scaled_identity(const Mat& a, double s) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("add_scaled_identity: matrix not square (" + a.shape_str() + ")");
  }
  Mat out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) out(i, i) += s;
  return out;
}

Mat symmetrize(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("symmetrize: matrix not square (" + a.shape_str() + ")");
  }
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = 0.5 * (a(i, j) + a(j, i));
  return out;
}

double frobenius_norm(const Mat& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) acc += a.data()[i] * a.data()[i];
  return std::sqrt(acc);
}

double max_abs_asymmetry(const Mat& a) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  return worst;
}

namespace {
void require_same_dim(const Vec& a, const Vec& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch " +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
}
}  // namespace

Vec add(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "add");
  Vec out = a;
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] += b[i];
  return out;
}

Vec sub(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "sub");
  Vec out = a;
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] -= b[i];
  return out;
}

Vec scale(const Vec& a, double s) {
  Vec out = a;
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] *= s;
  return out;
}

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vec& v) {
  for (std::size_t i = 0; i < v.dim(); ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

// --- Cholesky solve --------------------------------------------------------

namespace {
void require_symmetric(const Mat& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(op) + ": matrix not square (" + m.shape_str() + ")");
  }
  const double asym = max_abs_asymmetry(m);
  if (asym > kSymTol) {
    throw std::invalid_argument(std::string(op) + ": matrix not symmetric, max asymmetry " +
                                std::to_string(asym));
  }
}
}  // namespace

Mat chol_solve(const Mat& spd, const Mat& rhs) {
  require_symmetric(spd, "chol_solve");
  if (spd.rows() != rhs.rows()) {
    throw std::invalid_argument("chol_solve: rhs rows " + std::to_string(rhs.rows()) +
                                " != system dimension " + std::to_string(spd.rows()));
  }
  const std::size_t n = spd.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0) throw NotPositiveDefinite(j, d);
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Mat x = rhs;
  for (std::size_t c = 0; c < rhs.cols(); ++c) {
    // forward: L y = b
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    // backward: L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return x;
}

Vec chol_solve(const Mat& spd, const Vec& rhs) {
  Mat col(rhs.dim(), 1);
  for (std::size_t i = 0; i < rhs.dim(); ++i) col(i, 0) = rhs[i];
  const Mat x = chol_solve(spd, col);
  Vec out(rhs.dim());
  for (std::size_t i = 0; i < rhs.dim(); ++i) out[i] = x(i, 0);
  return out;
}

// --- Jacobi eigenvalue bounds ----------------------------------------------

std::pair<double, double> sym_eig_bounds(const Mat& s) {
  require_symmetric(s, "sym_eig_bounds");
  const std::size_t n = s.rows();
  if (n > 512) {
    throw std::invalid_argument("sym_eig_bounds: dimension " + std::to_string(n) +
                                " exceeds diagnostic cap 512");
  }
  if (n == 0) throw std::invalid_argument("sym_eig_bounds: empty matrix");
  Mat a = symmetrize(s);
  if (n == 1) return {a(0, 0), a(0, 0)};

  const double scale = std::max(frobenius_norm(a), 1e-300);
  const double stop = 1e-14 * scale;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= stop) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - sn * akq;
          a(k, q) = a(q, k) = sn * akp + c * akq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  double lo = a(0, 0);
  double hi = a(0, 0);
  for (std::size_t i = 1; i < n; ++i) {
    lo = std::min(lo, a(i, i));
    hi = std::max(hi, a(i, i));
  }
  return {lo, hi};
}

Vec normal_vec(Rng& rng, std::size_t dim, double std_dev) {
  if (std_dev < 0.0) {
    throw std::invalid_argument("normal_vec: std must be nonnegative, got " +
                                std::to_string(std_dev));
  }
  Vec out(dim);
  if (std_dev == 0.0) return out;
  for (std::size_t i = 0; i < dim; ++i) out[i] = std_dev * rng.normal();
  return out;
}

}  // namespace kgd
