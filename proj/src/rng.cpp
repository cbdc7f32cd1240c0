#include "rso/rng.hpp"

#include <cmath>

#include "rso/error.hpp"

namespace rso {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s ^= stream_id * 0xda942042e4dd58b5ULL;
  const std::uint64_t b = splitmix64(s);
  const std::uint64_t c = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  gen_.seed(seq);
}

RngStream RngStream::derive(std::uint64_t a, std::uint64_t b) const {
  std::uint64_t s = stream_id_ ^ 0x6a09e667f3bcc908ULL;
  s ^= a * 0x9e3779b97f4a7c15ULL;
  const std::uint64_t m1 = splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  const std::uint64_t m2 = splitmix64(s);
  return RngStream(seed_, m1 ^ (m2 << 1));
}

std::uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw_config("uniform_index: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 is shifted away from zero so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Mat gauss(RngStream& rng, std::size_t rows, std::size_t cols, double std_dev) {
  if (!(std_dev > 0.0)) throw_config("gauss: std must be positive");
  Mat m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = std_dev * rng.gaussian();
  return m;
}

}  // namespace rso
