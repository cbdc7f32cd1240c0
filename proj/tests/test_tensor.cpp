#include <doctest.h>

#include <cmath>

#include "rso/mat.hpp"
#include "rso/rng.hpp"

using namespace rso;

namespace {

// independent oracle: plain ijk triple loop
Mat matmul_naive(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul identity and hand arithmetic") {
  RngStream rng(7);
  Mat a = gauss(rng, 3, 3, 1.0);
  CHECK(matmul(Mat::identity(3), a) == a);

  Mat x(2, 2, {1, 2, 3, 4});
  Mat y(2, 1, {0, 1});
  Mat p = matmul(x, y);
  CHECK(p(0, 0) == 2.0);
  CHECK(p(1, 0) == 4.0);
}

TEST_CASE("matmul matches the triple-loop oracle exactly") {
  RngStream rng(11);
  Mat a = gauss(rng, 7, 5, 1.0);
  Mat b = gauss(rng, 5, 3, 1.0);
  CHECK(matmul(a, b) == matmul_naive(a, b));
}

TEST_CASE("matmul shape mismatch raises") {
  Mat a(2, 3), b(2, 3);
  CHECK_THROWS_AS(matmul(a, b), Error);
}

TEST_CASE("matmul associativity on random triples") {
  RngStream rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Mat a = gauss(rng, 6, 4, 1.0);
    Mat b = gauss(rng, 4, 5, 1.0);
    Mat c = gauss(rng, 5, 3, 1.0);
    Mat lhs = matmul(matmul(a, b), c);
    Mat rhs = matmul(a, matmul(b, c));
    CHECK((lhs - rhs).frob_norm() <= 1e-10 * rhs.frob_norm());
  }
}

TEST_CASE("matmul_tn and matmul_nt agree with explicit transposes") {
  RngStream rng(5);
  Mat a = gauss(rng, 6, 4, 1.0);
  Mat b = gauss(rng, 6, 3, 1.0);
  CHECK((matmul_tn(a, b) - matmul(a.transposed(), b)).max_abs() < 1e-14);
  Mat c = gauss(rng, 5, 4, 1.0);
  CHECK((matmul_nt(a, c) - matmul(a, c.transposed())).max_abs() < 1e-14);
}

TEST_CASE("qr_thin on an orthonormal input is the identity factorization") {
  RngStream rng(13);
  QrResult base = qr_thin(gauss(rng, 10, 4, 1.0));
  QrResult again = qr_thin(base.q);
  CHECK((again.q - base.q).max_abs() < 1e-13);
  CHECK((again.r - Mat::identity(4)).max_abs() < 1e-13);
}

TEST_CASE("qr_thin hand example [[3],[4]]") {
  QrResult qr = qr_thin(Mat(2, 1, {3, 4}));
  CHECK(qr.q(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(qr.q(1, 0) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(qr.r(0, 0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("qr_thin reconstruction and orthonormality at 64x16") {
  RngStream rng(17);
  Mat a = gauss(rng, 64, 16, 1.0);
  QrResult qr = qr_thin(a);
  CHECK((matmul_tn(qr.q, qr.q) - Mat::identity(16)).frob_norm() < 1e-12);
  CHECK((matmul(qr.q, qr.r) - a).frob_norm() < 1e-12 * a.frob_norm());
  for (std::size_t i = 0; i < 16; ++i) CHECK(qr.r(i, i) > 0.0);
}

TEST_CASE("qr_thin rejects rank-deficient input") {
  Mat a(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    a(i, 0) = static_cast<double>(i + 1);
    a(i, 1) = 2.0 * static_cast<double>(i + 1);  // duplicate direction
  }
  CHECK_THROWS_AS(qr_thin(a), Error);
}

TEST_CASE("gauss moments and determinism") {
  RngStream rng(42);
  const std::size_t n = 1000000;
  Mat draws = gauss(rng, n, 1, 1.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += draws(i, 0);
  mean /= static_cast<double>(n);
  CHECK(std::fabs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));

  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (draws(i, 0) - mean) * (draws(i, 0) - mean);
  var /= static_cast<double>(n - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));

  RngStream r1(99, 5), r2(99, 5);
  CHECK(gauss(r1, 8, 8, 2.5) == gauss(r2, 8, 8, 2.5));

  RngStream r3(1);
  CHECK_THROWS_AS(gauss(r3, 2, 2, 0.0), Error);
}

TEST_CASE("rng streams are reproducible and derivation is order-independent") {
  RngStream a(123, 7), b(123, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream base(5);
  RngStream d1 = base.derive(3, 4);
  RngStream d2 = base.derive(3, 4);
  CHECK(d1.next_u64() == d2.next_u64());
  RngStream d3 = base.derive(4, 3);
  CHECK(d1.next_u64() != d3.next_u64());
}

TEST_CASE("uniform_index stays in range") {
  RngStream rng(2024);
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_index(7) < 7);
}

TEST_CASE("Mat::checked rejects non-finite input") {
  CHECK_THROWS_AS(Mat::checked(1, 2, {1.0, std::nan("")}), Error);
  CHECK_THROWS_AS(Mat::checked(2, 2, {1.0, 2.0, 3.0}), Error);  // wrong length
}

TEST_CASE("cholesky_solve solves SPD systems") {
  RngStream rng(31);
  Mat g = gauss(rng, 6, 6, 1.0);
  Mat a = matmul_tn(g, g);
  for (std::size_t i = 0; i < 6; ++i) a(i, i) += 1.0;
  Mat x_true = gauss(rng, 6, 2, 1.0);
  Mat b = matmul(a, x_true);
  Mat x = cholesky_solve(a, b);
  CHECK((x - x_true).frob_norm() < 1e-10 * x_true.frob_norm());
}

TEST_CASE("sym_eig_jacobi recovers a known spectrum") {
  RngStream rng(37);
  QrResult qr = qr_thin(gauss(rng, 5, 5, 1.0));
  std::vector<double> lam = {9.0, 4.0, 2.5, 1.0, 0.5};
  Mat s(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 5; ++k) s(i, j) += qr.q(i, k) * lam[k] * qr.q(j, k);
  std::vector<double> ev;
  Mat vecs;
  CHECK(sym_eig_jacobi(s, ev, vecs));
  for (std::size_t k = 0; k < 5; ++k) CHECK(ev[k] == doctest::Approx(lam[k]).epsilon(1e-10));
  // eigenvector columns reproduce S V = V diag(lambda)
  Mat sv = matmul(s, vecs);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(sv(i, j) == doctest::Approx(vecs(i, j) * ev[j]).epsilon(1e-8));
}
