#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace stdistill {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// FNV-1a; used to derive per-parameter seeds from (seed, name) so that
// initialization does not depend on registration order.
inline std::uint64_t hash_name(const std::string& name) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline Rng make_param_rng(std::uint64_t seed, const std::string& name) {
  return Rng(seed ^ hash_name(name));
}

inline void fill_normal(Rng& rng, std::vector<double>& out, double mean = 0.0,
                        double stddev = 1.0) {
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : out) v = dist(rng);
}

inline void fill_uniform(Rng& rng, std::vector<double>& out, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : out) v = dist(rng);
}

}  // namespace stdistill
