#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kgd {

/// Thrown by chol_solve when a pivot is not strictly positive.
struct NotPositiveDefinite : std::runtime_error {
  std::size_t pivot;
  double value;
  NotPositiveDefinite(std::size_t pivot_index, double pivot_value);
};

/// Dense real matrix, row-major storage.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat diag(const std::vector<double>& d);
  static Mat scaled_identity(std::size_t n, double s);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::string shape_str() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense real vector.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim) : data_(dim, 0.0) {}
  explicit Vec(std::vector<double> data);
  Vec(std::initializer_list<double> init);

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

 private:
  std::vector<double> data_;
};

/// Deterministic counter-based random stream (splitmix64 finalizer over a
/// seeded counter). Identical seeds give identical streams; distinct
/// instances are independent and may be used concurrently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal via Box-Muller (second value of each pair is cached).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t next_bits();

  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// --- matrix/vector kernels -------------------------------------------------

Mat mat_mul(const Mat& a, const Mat& b);
/// a * b^T without forming the transpose.
Mat mat_mul_nt(const Mat& a, const Mat& b);
Vec mat_vec(const Mat& a, const Vec& v);
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);
/// a + s*I in place of a fresh matrix.
Mat add_scaled_identity(const Mat& a, double s);
/// 0.5 * (a + a^T).
Mat symmetrize(const Mat& a);
double frobenius_norm(const Mat& a);
double max_abs_asymmetry(const Mat& a);

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(const Vec& a, double s);
double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
bool all_finite(const Vec& v);

inline Mat operator*(const Mat& a, const Mat& b) { return mat_mul(a, b); }
inline Vec operator*(const Mat& a, const Vec& v) { return mat_vec(a, v); }
inline Mat operator+(const Mat& a, const Mat& b) { return add(a, b); }
inline Mat operator-(const Mat& a, const Mat& b) { return sub(a, b); }
inline Vec operator+(const Vec& a, const Vec& b) { return add(a, b); }
inline Vec operator-(const Vec& a, const Vec& b) { return sub(a, b); }

/// Solve spd * X = rhs via Cholesky. spd must be symmetric (checked to
/// 1e-10 absolute) and positive definite (positive pivots).
Mat chol_solve(const Mat& spd, const Mat& rhs);
Vec chol_solve(const Mat& spd, const Vec& rhs);

/// Extreme eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
/// Diagnostic use: dimension capped at 512.
std::pair<double, double> sym_eig_bounds(const Mat& s);

/// dim i.i.d. samples from N(0, std^2); std == 0 yields zeros without
/// consuming draws.
Vec normal_vec(Rng& rng, std::size_t dim, double std_dev);

}  // namespace kgd
