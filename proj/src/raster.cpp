#include "segfusion/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segfusion/error.hpp"

namespace segfusion {

namespace {

void check_extent(const Extent& e) {
  if (e.width <= 0 || e.height <= 0) {
    throw ShapeError("raster extent must be positive, got " +
                     std::to_string(e.width) + "x" + std::to_string(e.height));
  }
}

}  // namespace

double Extent::diagonal() const noexcept {
  return std::hypot(static_cast<double>(height - 1),
                    static_cast<double>(width - 1));
}

void require_same_extent(const Extent& a, const Extent& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": extent mismatch " +
                     std::to_string(a.width) + "x" + std::to_string(a.height) +
                     " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height));
  }
}

ProbMap::ProbMap(Extent extent, std::vector<float> values)
    : extent_(extent), values_(std::move(values)) {
  check_extent(extent_);
  if (values_.size() != extent_.pixel_count()) {
    throw ShapeError("probability map has " + std::to_string(values_.size()) +
                     " samples, expected " +
                     std::to_string(extent_.pixel_count()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const float v = values_[i];
    if (!(v >= 0.0F && v <= 1.0F)) {
      throw DomainError("probability sample " + std::to_string(i) +
                        " outside [0,1]: " + std::to_string(v));
    }
  }
}

ProbMap ProbMap::filled(Extent extent, float value) {
  check_extent(extent);
  return ProbMap(extent, std::vector<float>(extent.pixel_count(), value));
}

Mask::Mask(Extent extent, std::vector<std::uint8_t> bits)
    : extent_(extent), bits_(std::move(bits)) {
  check_extent(extent_);
  if (bits_.size() != extent_.pixel_count()) {
    throw ShapeError("mask has " + std::to_string(bits_.size()) +
                     " pixels, expected " +
                     std::to_string(extent_.pixel_count()));
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

Mask Mask::empty(Extent extent) {
  check_extent(extent);
  return Mask(extent, std::vector<std::uint8_t>(extent.pixel_count(), 0));
}

Mask Mask::from_points(Extent extent, std::span<const Point> points) {
  check_extent(extent);
  std::vector<std::uint8_t> bits(extent.pixel_count(), 0);
  for (const auto& p : points) {
    if (p.row < 0 || p.row >= extent.height || p.col < 0 ||
        p.col >= extent.width) {
      throw ShapeError("point (" + std::to_string(p.row) + "," +
                       std::to_string(p.col) + ") outside raster");
    }
    bits[static_cast<std::size_t>(p.row) * extent.width + p.col] = 1;
  }
  return Mask(extent, std::move(bits));
}

std::size_t Mask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Mask binarize(const ProbMap& map, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw DomainError("threshold must be in [0,1], got " +
                      std::to_string(threshold));
  }
  std::vector<std::uint8_t> bits(map.values().size());
  std::transform(map.values().begin(), map.values().end(), bits.begin(),
                 [threshold](float v) -> std::uint8_t {
                   return static_cast<double>(v) >= threshold ? 1 : 0;
                 });
  return Mask(map.extent(), std::move(bits));
}

ConfusionCounts confusion(const Mask& prediction, const Mask& truth) {
  require_same_extent(prediction.extent(), truth.extent(), "confusion");
  // Index by (prediction << 1 | truth): 0 tn, 1 fn, 2 fp, 3 tp.
  std::uint64_t tally[4] = {0, 0, 0, 0};
  const auto p = prediction.bits();
  const auto t = truth.bits();
  for (std::size_t i = 0; i < p.size(); ++i) ++tally[(p[i] << 1) | t[i]];
  return ConfusionCounts{tally[3], tally[2], tally[1], tally[0]};
}

std::vector<Point> foreground_points(const Mask& mask) {
  std::vector<Point> out;
  out.reserve(mask.foreground_count());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask.at(r, c)) out.push_back({r, c});
    }
  }
  return out;
}

}  // namespace segfusion
