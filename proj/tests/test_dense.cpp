#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kgd/dense.hpp"

using namespace kgd;

namespace {

// Independent brute-force product used as the oracle for mat_mul.
Mat naive_mul(const Mat& a, const Mat& b) {
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

Mat random_mat(Rng& rng, std::size_t rows, std::size_t cols) {
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = rng.normal();
  return m;
}

Mat random_spd(Rng& rng, std::size_t n) {
  const Mat m = random_mat(rng, n, n);
  return add_scaled_identity(symmetrize(mat_mul_nt(m, m)), 0.1);
}

double max_abs_diff(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

// Product of random Givens rotations: orthogonal by construction.
Mat random_orthogonal(Rng& rng, std::size_t n) {
  Mat q = Mat::identity(n);
  for (std::size_t rot = 0; rot < 4 * n; ++rot) {
    const std::size_t p = rng.index(n);
    std::size_t r = rng.index(n);
    if (p == r) r = (r + 1) % n;
    const double theta = 2.0 * 3.14159265358979 * rng.uniform();
    Mat g = Mat::identity(n);
    g(p, p) = std::cos(theta);
    g(r, r) = std::cos(theta);
    g(p, r) = -std::sin(theta);
    g(r, p) = std::sin(theta);
    q = mat_mul(q, g);
  }
  return q;
}

}  // namespace

TEST_CASE("mat_mul identity and small cases") {
  Rng rng(1);
  const Mat m = random_mat(rng, 2, 2);
  CHECK(max_abs_diff(mat_mul(Mat::identity(2), m), m) == 0.0);

  const Mat a(2, 2, {1.0, -0.1, 0.0, 1.0});
  const Vec v = mat_vec(a, Vec{1.0, 2.0});
  CHECK(v[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(2.0).epsilon(1e-15));

  const Mat aat = mat_mul(a, transpose(a));
  CHECK(aat(0, 0) == doctest::Approx(1.01).epsilon(1e-15));
  CHECK(aat(0, 1) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(aat(1, 0) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(aat(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(max_abs_diff(aat, naive_mul(a, transpose(a))) == 0.0);
}

TEST_CASE("mat_mul matches brute force on random shapes") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.index(6);
    const std::size_t k = 1 + rng.index(6);
    const std::size_t n = 1 + rng.index(6);
    const Mat a = random_mat(rng, m, k);
    const Mat b = random_mat(rng, k, n);
    CHECK(max_abs_diff(mat_mul(a, b), naive_mul(a, b)) < 1e-14);
    CHECK(max_abs_diff(mat_mul_nt(a, transpose(b)), naive_mul(a, b)) < 1e-14);
  }
}

TEST_CASE("mat_mul dimension mismatch names both shapes") {
  const Mat a(3, 2);
  const Mat b(3, 4);
  CHECK_THROWS_WITH_AS(mat_mul(a, b), doctest::Contains("3x2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(mat_mul(a, b), doctest::Contains("3x4"), std::invalid_argument);
}

TEST_CASE("mat_mul associativity on random 3-chains") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_mat(rng, 5, 4);
    const Mat b = random_mat(rng, 4, 6);
    const Mat c = random_mat(rng, 6, 3);
    const Mat left = mat_mul(mat_mul(a, b), c);
    const Mat right = mat_mul(a, mat_mul(b, c));
    CHECK(max_abs_diff(left, right) <= 1e-9 * std::max(1.0, frobenius_norm(left)));
  }
}

TEST_CASE("non-finite construction rejected") {
  CHECK_THROWS_AS(Mat(1, 1, {std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS((Vec{1.0, std::numeric_limits<double>::infinity()}), std::invalid_argument);
}

TEST_CASE("chol_solve scalar and diagonal cases") {
  const Vec x = chol_solve(Mat(1, 1, {2.02}), Vec{1.0});
  CHECK(x[0] == doctest::Approx(0.4950495049504951).epsilon(1e-14));

  Rng rng(4);
  const Mat m = random_mat(rng, 3, 3);
  CHECK(max_abs_diff(chol_solve(Mat::identity(3), m), m) < 1e-14);

  const Mat rhs(2, 1, {2.0, 4.0});
  const Mat sol = chol_solve(Mat::diag({2.0, 4.0}), rhs);
  CHECK(sol(0, 0) == doctest::Approx(1.0));
  CHECK(sol(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("chol_solve recovers X from S*X for random SPD S") {
  Rng rng(5);
  for (std::size_t n : {2, 8, 31, 64}) {
    const Mat s = random_spd(rng, n);
    const Mat x = random_mat(rng, n, 3);
    const Mat recovered = chol_solve(s, mat_mul(s, x));
    CHECK(max_abs_diff(recovered, x) <= 1e-8 * std::max(1.0, frobenius_norm(x)));
  }
}

TEST_CASE("chol_solve residual is small") {
  Rng rng(6);
  const Mat s = random_spd(rng, 12);
  const Mat rhs = random_mat(rng, 12, 2);
  const Mat x = chol_solve(s, rhs);
  const Mat residual = sub(mat_mul(s, x), rhs);
  CHECK(frobenius_norm(residual) <= 1e-10 * std::max(1.0, frobenius_norm(rhs)));
}

TEST_CASE("chol_solve rejects non-PD and asymmetric input") {
  const Mat not_pd(2, 2, {1.0, 2.0, 2.0, 1.0});  // eigenvalues 3, -1
  try {
    chol_solve(not_pd, Vec{1.0, 1.0});
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot == 1);
  }
  const Mat asym(2, 2, {1.0, 0.5, 0.0, 1.0});
  CHECK_THROWS_WITH_AS(chol_solve(asym, Vec{1.0, 1.0}), doctest::Contains("not symmetric"),
                       std::invalid_argument);
}

TEST_CASE("sym_eig_bounds diagonal and hand-computed cases") {
  CHECK(sym_eig_bounds(Mat::diag({0.5, 3.0})) ==
        std::pair<double, double>{0.5, 3.0});
  const auto [lo, hi] = sym_eig_bounds(Mat::scaled_identity(4, 0.01));
  CHECK(lo == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(hi == doctest::Approx(0.01).epsilon(1e-12));
  // [[2,1],[1,2]] has eigenvalues 1 and 3 (characteristic polynomial by hand)
  const auto [a, b] = sym_eig_bounds(Mat(2, 2, {2.0, 1.0, 1.0, 2.0}));
  CHECK(a == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(b == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("sym_eig_bounds invariant under orthogonal conjugation") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + rng.index(6);
    const Mat s = random_spd(rng, n);
    const Mat q = random_orthogonal(rng, n);
    const Mat conj = symmetrize(mat_mul(mat_mul(transpose(q), s), q));
    const auto [lo1, hi1] = sym_eig_bounds(s);
    const auto [lo2, hi2] = sym_eig_bounds(conj);
    CHECK(lo1 == doctest::Approx(lo2).epsilon(1e-6));
    CHECK(hi1 == doctest::Approx(hi2).epsilon(1e-6));
  }
}

TEST_CASE("sym_eig_bounds rejects asymmetry and oversize input") {
  Mat m = Mat::identity(3);
  m(0, 1) = 1e-6;
  CHECK_THROWS_WITH_AS(sym_eig_bounds(m), doctest::Contains("asymmetry"), std::invalid_argument);
  CHECK_THROWS_AS(sym_eig_bounds(Mat::identity(513)), std::invalid_argument);
}

TEST_CASE("normal_vec determinism and degenerate noise") {
  Rng a(42);
  Rng b(42);
  const Vec va = normal_vec(a, 16, 1.0);
  const Vec vb = normal_vec(b, 16, 1.0);
  for (std::size_t i = 0; i < va.dim(); ++i) CHECK(va[i] == vb[i]);

  Rng c(42);
  const Vec zero = normal_vec(c, 5, 0.0);
  for (std::size_t i = 0; i < zero.dim(); ++i) CHECK(zero[i] == 0.0);

  CHECK_THROWS_AS(normal_vec(a, 2, -1.0), std::invalid_argument);
}

TEST_CASE("normal samples: empirical mean and variance") {
  Rng rng(99);
  const std::size_t n = 10000;
  const Vec v = normal_vec(rng, n, 1.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += v[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  var /= static_cast<double>(n - 1);
  CHECK(std::abs(mean) < 0.05);
  CHECK(var > 0.9);
  CHECK(var < 1.1);
}
