#include "mnlb/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mnlb {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = a ^ (0x632BE59BD9B4E019ull * (b + 1));
  std::uint64_t h = splitmix64(state);
  return splitmix64(state) ^ (h * 0x9E3779B97F4A7C15ull);
}

std::uint64_t hash_bytes(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  // Rejection-free modulo is fine here: n is tiny relative to 2^64.
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

int Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
  double total = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double w = weights[i];
    if (!(w >= 0.0)) throw std::invalid_argument("categorical: negative weight");
    total += w;
    if (w > 0.0) last_positive = static_cast<int>(i);
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
  double u = uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_positive;  // guards rounding at the top end
}

Eigen::VectorXd Rng::gaussian_vector(int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd Rng::uniform_in_ball(int dim, double radius) {
  if (dim <= 0 || !(radius >= 0.0)) {
    throw std::invalid_argument("uniform_in_ball: bad dim or radius");
  }
  Eigen::VectorXd v = gaussian_vector(dim);
  double n = v.norm();
  while (n == 0.0) {
    v = gaussian_vector(dim);
    n = v.norm();
  }
  double r = radius * std::pow(uniform(), 1.0 / dim);
  return v * (r / n);
}

Eigen::VectorXd Rng::uniform_in_cube(int dim, double lo, double hi) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = lo + (hi - lo) * uniform();
  return v;
}

}  // namespace mnlb
