#pragma once

#include <cstdint>
#include <random>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace rlt {

/// splitmix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent random streams owned by one path.
enum class Substream : std::uint64_t {
  Increments = 0,  // Gaussian increments and bridge-extremum uniforms
  Horizon = 1,     // exponential horizon tau
  Resampling = 2,  // population resampling in the cloning estimator
};

/// Seed for (seed, path_index, substream):
///   splitmix64(splitmix64(splitmix64(seed) ^ path_index) ^ substream).
/// Any path can be regenerated in isolation from these three values.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t path_index,
                                    Substream sub) {
  return splitmix64(splitmix64(splitmix64(seed) ^ path_index) ^
                    static_cast<std::uint64_t>(sub));
}

/// Engine plus the two variates the simulator consumes.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path_index, Substream sub)
      : engine_(stream_seed(seed, path_index, sub)) {}

  double normal() { return normal_(engine_); }

  /// Uniform on (0, 1].
  double uniform_open0() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double exponential(double rate) {
    return boost::random::exponential_distribution<double>(rate)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  // Ziggurat sampler; libstdc++ uses the slower polar method.
  boost::random::normal_distribution<double> normal_;
};

}  // namespace rlt
