#pragma once

#include <cstddef>
#include <limits>
#include <span>

#include "segfusion/raster.hpp"

namespace segfusion {

struct MetricsRecord {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double hd95 = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline constexpr double kDefaultPercentile = 0.95;
inline constexpr double kNoEmptyPenalty =
    std::numeric_limits<double>::infinity();

// Overlap scores. Degenerate denominators follow fixed conventions so that
// empty/empty comparisons score perfectly and a missed lesion scores zero.

/// tp / (tp + fp + fn); 1 when both masks are empty.
double iou(const ConfusionCounts& c) noexcept;
/// tp / (tp + fp); with no predicted pixels, 1 if fn == 0 else 0.
double precision(const ConfusionCounts& c) noexcept;
/// tp / (tp + fn); with no true pixels, 1 if fp == 0 else 0.
double recall(const ConfusionCounts& c) noexcept;
/// Harmonic mean; 0 when p + r == 0.
double f1(double p, double r) noexcept;

// Hausdorff family over pixel-centre point sets, brute force O(|A||B|).
//
// Empty sets: both empty gives 0, exactly one empty gives `empty_distance`
// (callers working on a raster pass Extent::diagonal()).

double directed_hausdorff(std::span<const Point> a, std::span<const Point> b,
                          double empty_distance = kNoEmptyPenalty);
double hausdorff(std::span<const Point> a, std::span<const Point> b,
                 double empty_distance = kNoEmptyPenalty);
/// Nearest-rank percentile of each directed nearest-neighbour distance list,
/// symmetrised by max.
double hd95(std::span<const Point> a, std::span<const Point> b,
            double empty_distance = kNoEmptyPenalty,
            double percentile = kDefaultPercentile);

/// 1-based nearest rank ceil(p * m), clamped to [1, m]. Products within 1e-9
/// of an integer are treated as that integer so 0.95 * 20 selects rank 19.
std::size_t nearest_rank(std::size_t m, double percentile);

struct BoundaryDistances {
  double hausdorff = 0.0;
  double hd95 = 0.0;
};

/// Same values as hausdorff()/hd95() on the foreground point sets with the
/// raster diagonal as the empty penalty, computed through an exact integer
/// Euclidean distance transform (linear in pixel count).
BoundaryDistances boundary_distances(const Mask& prediction, const Mask& truth,
                                     double percentile = kDefaultPercentile);

/// Sum of log10(hd95_i + 1). Throws DomainError on negative or non-finite
/// input.
double aggregate_h(std::span<const double> hd95_values);

/// log base 0.9 of |iou - max_iou - 1e-4|. Throws DomainError when
/// iou_value > max_iou.
double z_transform(double iou_value, double max_iou);

/// Overlap scores plus hd95 for one slice.
MetricsRecord slice_metrics(const Mask& prediction, const Mask& truth,
                            double percentile = kDefaultPercentile);

/// Overlap scores from pooled counts; hd95 left at 0.
MetricsRecord overlap_metrics(const ConfusionCounts& c) noexcept;

}  // namespace segfusion
