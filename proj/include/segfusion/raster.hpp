#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace segfusion {

/// Pixel coordinate. Row 0 is the top of the image.
struct Point {
  int row = 0;
  int col = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Width and height of a raster in pixels.
struct Extent {
  int width = 0;
  int height = 0;

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  /// Euclidean distance between opposite corner pixel centres.
  double diagonal() const noexcept;

  friend bool operator==(const Extent&, const Extent&) = default;
};

/// One model's per-pixel lesion probability, dense and row-major.
///
/// Samples are single precision, which is what the on-disk PFM format holds,
/// so a map survives a write/read cycle bit for bit.
class ProbMap {
 public:
  /// Throws ShapeError on a non-positive extent or a size mismatch and
  /// DomainError on a non-finite or out-of-[0,1] sample.
  ProbMap(Extent extent, std::vector<float> values);

  static ProbMap filled(Extent extent, float value);

  const Extent& extent() const noexcept { return extent_; }
  int width() const noexcept { return extent_.width; }
  int height() const noexcept { return extent_.height; }
  std::span<const float> values() const noexcept { return values_; }
  float at(int row, int col) const {
    return values_[static_cast<std::size_t>(row) * extent_.width + col];
  }

  friend bool operator==(const ProbMap&, const ProbMap&) = default;

 private:
  Extent extent_;
  std::vector<float> values_;
};

/// Binary lesion mask, dense and row-major.
class Mask {
 public:
  Mask(Extent extent, std::vector<std::uint8_t> bits);

  static Mask empty(Extent extent);
  static Mask from_points(Extent extent, std::span<const Point> points);

  const Extent& extent() const noexcept { return extent_; }
  int width() const noexcept { return extent_.width; }
  int height() const noexcept { return extent_.height; }
  /// One byte per pixel, 0 or 1.
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  bool at(int row, int col) const {
    return bits_[static_cast<std::size_t>(row) * extent_.width + col] != 0;
  }
  std::size_t foreground_count() const noexcept;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Extent extent_;
  std::vector<std::uint8_t> bits_;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

inline constexpr double kDefaultThreshold = 0.5;

/// Foreground iff value >= threshold. Throws DomainError unless threshold is
/// in [0, 1].
Mask binarize(const ProbMap& map, double threshold = kDefaultThreshold);

/// Throws ShapeError when the extents differ.
ConfusionCounts confusion(const Mask& prediction, const Mask& truth);

/// Foreground coordinates in row-major order.
std::vector<Point> foreground_points(const Mask& mask);

void require_same_extent(const Extent& a, const Extent& b, const char* what);

}  // namespace segfusion
