#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segfusion/ensemble.hpp"
#include "segfusion/raster.hpp"

namespace segfusion {

/// SplitMix64 (Steele, Lea and Flood). Fully specified here so fixtures are
/// identical on every platform and in every language binding.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  /// Uniform in [lo, hi].
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent stream keyed by (seed, a, b).
  static SplitMix64 substream(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) noexcept;

 private:
  std::uint64_t state_;
};

/// Axis-aligned filled ellipse, pixel units.
struct Ellipse {
  double center_row = 0.0;
  double center_col = 0.0;
  double radius_row = 1.0;
  double radius_col = 1.0;

  bool contains(int row, int col) const noexcept;
};

struct ErrorProfile {
  double miss_rate = 0.0;     ///< probability each true blob is dropped
  double clutter_rate = 0.0;  ///< probability of a spurious blob per true blob
  double blur_sigma = 0.0;    ///< Gaussian softening of the boundary, pixels
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  int n_slices = 4;
  int blob_count_min = 1;
  int blob_count_max = 3;
  double blob_radius_min = 2.0;
  double blob_radius_max = 8.0;
  /// One entry per model; its size is the model count.
  std::vector<ErrorProfile> profiles = std::vector<ErrorProfile>(4);

  /// Throws DomainError on an invalid configuration.
  void validate() const;
  int n_models() const noexcept { return static_cast<int>(profiles.size()); }
};

Mask rasterize(Extent extent, std::span<const Ellipse> blobs);

/// Rasterized blobs as a 0/1 map, optionally blurred by a normalised
/// Gaussian truncated at radius ceil(3 sigma) (clamp-to-edge borders), then
/// clamped to [0, 1].
ProbMap render_probability(Extent extent, std::span<const Ellipse> blobs,
                           double blur_sigma);

/// One slice; slice `index` depends only on (seed, index).
Slice generate_slice(const SynthConfig& config, int index);

std::vector<Slice> generate(const SynthConfig& config);

}  // namespace segfusion
