#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace mnlb {

std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b);

/// FNV-1a over raw bytes; used for content-addressed caches and manifests.
std::uint64_t hash_bytes(const void* data, std::size_t len,
                         std::uint64_t seed = 14695981039346656037ull);

/// Deterministic splitmix64 generator. All randomness in the library flows
/// through this type so identical seeds reproduce runs bit-for-bit across
/// platforms (no dependence on std <random> distribution internals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // standard Gaussian (Box-Muller)
  int uniform_int(int n);  // {0, ..., n-1}

  /// Draw an index with probability proportional to weights (>= 0, sum > 0).
  int categorical(std::span<const double> weights);

  Eigen::VectorXd gaussian_vector(int dim);
  Eigen::VectorXd uniform_in_ball(int dim, double radius);
  Eigen::VectorXd uniform_in_cube(int dim, double lo, double hi);

  /// Substream derived from the construction seed and a tag; independent of
  /// how many values have been drawn, so adding draws never perturbs forks.
  Rng fork(std::uint64_t stream) const { return Rng(hash_mix(seed_, stream)); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace mnlb
