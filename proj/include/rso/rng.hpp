#pragma once

#include <cstdint>
#include <random>

#include "rso/mat.hpp"

namespace rso {

/// Deterministic random stream keyed by (seed, stream_id). Identical keys
/// yield identical draw sequences; derived streams are independent of the
/// order in which they are created. Gaussians come from Box-Muller on the
/// raw 64-bit stream rather than std::normal_distribution, whose output is
/// implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Fresh stream keyed by this stream's identity mixed with (a, b).
  RngStream derive(std::uint64_t a, std::uint64_t b = 0) const;

  std::uint64_t next_u64();
  /// uniform in [0, 1)
  double uniform();
  /// uniform integer in [0, n), rejection-sampled
  std::uint64_t uniform_index(std::uint64_t n);
  /// standard normal
  double gaussian();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// rows x cols matrix of i.i.d. N(0, std^2) entries. std must be positive.
Mat gauss(RngStream& rng, std::size_t rows, std::size_t cols, double std_dev);

}  // namespace rso
