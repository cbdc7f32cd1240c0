#include "rso/projection.hpp"

#include <cmath>

#include "rso/error.hpp"

namespace rso {

ProjectionKind projection_kind_from_string(const std::string& s) {
  if (s == "haar") return ProjectionKind::haar;
  if (s == "coordinate") return ProjectionKind::coordinate;
  if (s == "gaussian_approx" || s == "gaussian") return ProjectionKind::gaussian_approx;
  throw_config("unknown projection kind '" + s + "'");
}

std::string to_string(ProjectionKind k) {
  switch (k) {
    case ProjectionKind::haar: return "haar";
    case ProjectionKind::coordinate: return "coordinate";
    case ProjectionKind::gaussian_approx: return "gaussian_approx";
  }
  return "?";
}

Mat sample_projection(RngStream& rng, std::size_t m, std::size_t r, ProjectionKind kind) {
  if (r == 0 || r > m) throw_shape("sample_projection: need 1 <= r <= m");
  const double scale = std::sqrt(static_cast<double>(m) / static_cast<double>(r));
  switch (kind) {
    case ProjectionKind::haar: {
      Mat g = gauss(rng, m, r, 1.0);
      QrResult qr = qr_thin(g);
      qr.q *= scale;
      return std::move(qr.q);
    }
    case ProjectionKind::coordinate: {
      // partial Fisher-Yates: r distinct row indices, uniform without replacement
      std::vector<std::size_t> idx(m);
      for (std::size_t i = 0; i < m; ++i) idx[i] = i;
      Mat p(m, r);
      for (std::size_t j = 0; j < r; ++j) {
        const std::size_t pick = j + rng.uniform_index(m - j);
        std::swap(idx[j], idx[pick]);
        p(idx[j], j) = scale;
      }
      return p;
    }
    case ProjectionKind::gaussian_approx:
      return gauss(rng, m, r, 1.0 / std::sqrt(static_cast<double>(r)));
  }
  throw_config("sample_projection: bad kind");
}

double verify_isometry(const Mat& p) {
  const double target = static_cast<double>(p.rows()) / static_cast<double>(p.cols());
  Mat gram = matmul_tn(p, p);
  double dev = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = 0; j < gram.cols(); ++j) {
      const double want = (i == j) ? target : 0.0;
      dev = std::max(dev, std::fabs(gram(i, j) - want));
    }
  return dev;
}

double verify_expectation_identity(RngStream& rng, std::size_t m, std::size_t r,
                                   ProjectionKind kind, std::size_t trials) {
  if (trials == 0) throw_config("verify_expectation_identity: trials must be >= 1");
  Mat acc(m, m);
  for (std::size_t t = 0; t < trials; ++t) {
    Mat p = sample_projection(rng, m, r, kind);
    // acc += P P^T
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < r; ++k) {
        const double pik = p(i, k);
        if (pik == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) acc(i, j) += pik * p(j, k);
      }
  }
  const double inv = 1.0 / static_cast<double>(trials);
  double dev_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      const double d = acc(i, j) * inv - want;
      dev_sq += d * d;
    }
  return std::sqrt(dev_sq) / std::sqrt(static_cast<double>(m));
}

double ProjectionSet::scale(std::size_t l) const {
  const Mat& p = layers.at(l);
  if (p.empty()) throw_config("ProjectionSet::scale: layer is not subspace-managed");
  return std::sqrt(static_cast<double>(p.rows()) / static_cast<double>(p.cols()));
}

}  // namespace rso
