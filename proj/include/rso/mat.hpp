#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rso/error.hpp"

namespace rso {

/// Dense row-major matrix of 64-bit floats. All heavy arithmetic in the
/// library goes through the free functions below.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Construction from untrusted input: rejects NaN/Inf entries.
  static Mat checked(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool is_finite() const;

  double frob_norm() const;
  double frob_norm_sq() const;
  double max_abs() const;

  Mat transposed() const;

  // in-place elementwise updates
  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);
  /// this += s * o
  Mat& add_scaled(const Mat& o, double s);

  bool operator==(const Mat& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);

/// a * b
Mat matmul(const Mat& a, const Mat& b);
/// a^T * b without forming the transpose
Mat matmul_tn(const Mat& a, const Mat& b);
/// a * b^T without forming the transpose
Mat matmul_nt(const Mat& a, const Mat& b);

double dot(const Mat& a, const Mat& b);
Mat hadamard(const Mat& a, const Mat& b);

struct QrResult {
  Mat q;  // rows x cols, orthonormal columns
  Mat r;  // cols x cols, upper triangular, positive diagonal
};

/// Thin Householder QR with the R diagonal sign-corrected to be strictly
/// positive, which makes the factorization unique. Throws on rank
/// deficiency (|r_jj| < 1e-12 * ||a||_F).
QrResult qr_thin(const Mat& a);

/// Solve a * x = b for symmetric positive definite a (in-place Cholesky).
Mat cholesky_solve(Mat a, const Mat& b);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
/// returned in descending order with matching eigenvector columns.
/// Returns false if the off-diagonal mass did not vanish within the sweep cap.
bool sym_eig_jacobi(const Mat& s, std::vector<double>& eigenvalues, Mat& eigenvectors,
                    int max_sweeps = 50);

}  // namespace rso
