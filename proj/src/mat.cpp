#include "rso/mat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rso {

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw_shape("Mat: data length " + std::to_string(data_.size()) + " != " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
}

Mat Mat::checked(std::size_t rows, std::size_t cols, std::vector<double> data) {
  Mat m(rows, cols, std::move(data));
  if (!m.is_finite()) throw_numeric("Mat: non-finite entry in input");
  return m;
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Mat::is_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Mat::frob_norm_sq() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Mat::frob_norm() const { return std::sqrt(frob_norm_sq()); }

double Mat::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat& Mat::operator+=(const Mat& o) {
  if (!same_shape(o)) throw_shape("Mat +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  if (!same_shape(o)) throw_shape("Mat -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat& Mat::add_scaled(const Mat& o, double s) {
  if (!same_shape(o)) throw_shape("Mat add_scaled: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows())
    throw_shape("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Mat c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* bk = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw_shape("matmul_tn: inner dimension mismatch");
  Mat c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.data() + k * a.cols();
    const double* bk = b.data() + k * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double* ci = c.data() + i * n;
      const double aki = ak[i];
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw_shape("matmul_nt: inner dimension mismatch");
  Mat c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * a.cols();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.data() + j * b.cols();
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

double dot(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw_shape("dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

Mat hadamard(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw_shape("hadamard: shape mismatch");
  Mat c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

QrResult qr_thin(const Mat& a) {
  const std::size_t m = a.rows(), k = a.cols();
  if (m < k) throw_shape("qr_thin: more columns than rows");
  const double rank_tol = 1e-12 * a.frob_norm();

  Mat w = a;  // working copy; reflector j lives in w(j.., j) after step j
  std::vector<double> beta(k, 0.0);
  std::vector<double> diag(k, 0.0);

  for (std::size_t j = 0; j < k; ++j) {
    double sigma = 0.0;
    for (std::size_t i = j; i < m; ++i) sigma += w(i, j) * w(i, j);
    const double norm_x = std::sqrt(sigma);
    if (norm_x <= rank_tol)
      throw_degenerate("qr_thin: rank-deficient input at column " + std::to_string(j));

    const double alpha = (w(j, j) >= 0.0) ? -norm_x : norm_x;
    const double v0 = w(j, j) - alpha;
    const double vnorm_sq = sigma - w(j, j) * w(j, j) + v0 * v0;
    w(j, j) = v0;
    beta[j] = (vnorm_sq > 0.0) ? 2.0 / vnorm_sq : 0.0;
    diag[j] = alpha;

    for (std::size_t c = j + 1; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += w(i, j) * w(i, c);
      s *= beta[j];
      for (std::size_t i = j; i < m; ++i) w(i, c) -= s * w(i, j);
    }
  }

  // Apply reflectors in reverse to the first k columns of the identity.
  Mat q(m, k);
  for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
  for (std::size_t j = k; j-- > 0;) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += w(i, j) * q(i, c);
      s *= beta[j];
      for (std::size_t i = j; i < m; ++i) q(i, c) -= s * w(i, j);
    }
  }

  Mat r(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    r(i, i) = diag[i];
    for (std::size_t j = i + 1; j < k; ++j) r(i, j) = w(i, j);
  }

  // Sign correction: force a strictly positive R diagonal.
  for (std::size_t i = 0; i < k; ++i) {
    if (r(i, i) < 0.0) {
      for (std::size_t j = i; j < k; ++j) r(i, j) = -r(i, j);
      for (std::size_t row = 0; row < m; ++row) q(row, i) = -q(row, i);
    }
  }
  return {std::move(q), std::move(r)};
}

Mat cholesky_solve(Mat a, const Mat& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw_shape("cholesky_solve: shape mismatch");
  // lower Cholesky in place
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (d <= 0.0) throw_degenerate("cholesky_solve: matrix not positive definite");
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  Mat x = b;
  // forward substitution L y = b
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * x(k, c);
      x(i, c) = s / a(i, i);
    }
    // back substitution L^T x = y
    for (std::size_t i_ = n; i_-- > 0;) {
      double s = x(i_, c);
      for (std::size_t k = i_ + 1; k < n; ++k) s -= a(k, i_) * x(k, c);
      x(i_, c) = s / a(i_, i_);
    }
  }
  return x;
}

bool sym_eig_jacobi(const Mat& s, std::vector<double>& eigenvalues, Mat& eigenvectors,
                    int max_sweeps) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw_shape("sym_eig_jacobi: matrix not square");
  Mat a = s;
  Mat v = Mat::identity(n);
  const double scale = std::max(a.max_abs(), 1e-300);
  const double tol = 1e-14 * scale;

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= tol) continue;
        converged = false;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - sn * aiq;
          a(i, q) = sn * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - sn * aqi;
          a(q, i) = sn * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - sn * viq;
          v(i, q) = sn * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  eigenvalues.resize(n);
  eigenvectors = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) eigenvectors(i, j) = v(i, order[j]);
  }
  return converged;
}

}  // namespace rso
