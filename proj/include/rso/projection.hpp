#pragma once

#include <string>
#include <vector>

#include "rso/mat.hpp"
#include "rso/rng.hpp"

namespace rso {

/// Distribution family for the subspace projection matrices.
/// haar and coordinate satisfy P^T P = (m/r) I exactly; gaussian_approx
/// only approximately, but is cheaper to sample.
enum class ProjectionKind { haar, coordinate, gaussian_approx };

ProjectionKind projection_kind_from_string(const std::string& s);
std::string to_string(ProjectionKind k);

/// Sample an m x r projection matrix P:
///   haar:           sqrt(m/r) * Q with Q a Haar-distributed orthonormal frame
///   coordinate:     sqrt(m/r) * (r distinct standard basis columns, uniform
///                   without replacement)
///   gaussian_approx: i.i.d. N(0, 1/r) entries
Mat sample_projection(RngStream& rng, std::size_t m, std::size_t r, ProjectionKind kind);

/// max |(P^T P - (m/r) I)_{ij}|
double verify_isometry(const Mat& p);

/// || mean_t P_t P_t^T - I ||_F / sqrt(m) over `trials` fresh samples.
double verify_expectation_identity(RngStream& rng, std::size_t m, std::size_t r,
                                   ProjectionKind kind, std::size_t trials);

/// One projection matrix per layer; layers that are not subspace-managed
/// hold an empty Mat. Tied layers (shared projection) hold equal copies.
struct ProjectionSet {
  std::vector<Mat> layers;
  ProjectionKind kind = ProjectionKind::haar;

  double scale(std::size_t l) const;  // sqrt(m_l / r_l)
};

}  // namespace rso
