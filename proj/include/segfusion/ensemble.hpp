#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segfusion/raster.hpp"

namespace segfusion {

inline constexpr std::uint32_t kDefaultDenominator = 10;

/// Convex weights on the grid {0, 1/d, ..., 1}: weight k is
/// numerators[k] / denominator and the numerators sum to the denominator.
class WeightVector {
 public:
  /// Throws DomainError if the numerators do not sum to the denominator or
  /// the denominator is zero.
  WeightVector(std::vector<std::uint32_t> numerators, std::uint32_t denominator);

  /// Weight `index` set to 1, others 0.
  static WeightVector one_hot(std::size_t size, std::size_t index,
                              std::uint32_t denominator = kDefaultDenominator);

  /// Parses "0.2,0.1,0.6,0.1" (or fractions such as "1/3"). Every entry must
  /// land exactly on the grid, otherwise DomainError.
  static WeightVector parse(std::string_view text,
                            std::uint32_t denominator = kDefaultDenominator);

  std::size_t size() const noexcept { return numerators_.size(); }
  std::span<const std::uint32_t> numerators() const noexcept {
    return numerators_;
  }
  std::uint32_t denominator() const noexcept { return denominator_; }
  double weight(std::size_t k) const noexcept {
    return static_cast<double>(numerators_[k]) / denominator_;
  }

  /// Exact decimal for each weight ("0.1", "1.0"); "n/d" when the grid step
  /// has no terminating decimal expansion.
  std::string format_weight(std::size_t k) const;
  std::string to_string() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
  /// Lexicographic on the numerators.
  friend auto operator<=>(const WeightVector& a, const WeightVector& b) {
    return a.numerators_ <=> b.numerators_;
  }

 private:
  std::vector<std::uint32_t> numerators_;
  std::uint32_t denominator_;
};

/// Parses one exact decimal or fraction onto the grid; DomainError otherwise.
std::uint32_t parse_grid_weight(std::string_view text,
                                std::uint32_t denominator);

/// The weights chosen for the reference four-model setup (model order PAN,
/// FPN, Unet, DeepLabv3+).
WeightVector reference_weights();

/// Per-pixel convex combination of the maps. Throws ShapeError when there
/// are fewer than two maps, extents differ or the weight length is wrong.
ProbMap fuse(std::span<const ProbMap> maps, const WeightVector& w);

/// Every composition of `denominator` into `n_models` non-negative parts, in
/// lexicographic order.
std::vector<WeightVector> enumerate_simplex(std::size_t n_models,
                                            std::uint32_t denominator);

/// C(denominator + n - 1, n - 1).
std::uint64_t simplex_size(std::size_t n_models, std::uint32_t denominator);

enum class Objective {
  kMicro,  ///< IoU of pooled TP/FP/FN over all slices.
  kMacro,  ///< Mean of per-slice IoU.
};

std::string_view to_string(Objective o) noexcept;
Objective parse_objective(std::string_view text);

struct Slice {
  Mask truth;
  std::vector<ProbMap> maps;
};

struct GridEntry {
  WeightVector weights;
  double objective = 0.0;
};

struct GridSearchResult {
  std::size_t n_models = 0;
  std::uint32_t denominator = 0;
  /// Every enumerated vector, lexicographic order.
  std::vector<GridEntry> table;
  std::size_t best_index = 0;

  const WeightVector& best() const { return table.at(best_index).weights; }
  double best_objective() const { return table.at(best_index).objective; }
};

struct GridSearchOptions {
  std::uint32_t denominator = kDefaultDenominator;
  double threshold = kDefaultThreshold;
  Objective objective = Objective::kMicro;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Fuses, binarizes and scores every slice for every weight vector on the
/// grid. The argmax is the lexicographically smallest vector among ties.
GridSearchResult grid_search(std::span<const Slice> slices,
                             const GridSearchOptions& options = {});

/// Index of the highest objective, earliest entry on ties. Table must be
/// non-empty.
std::size_t argmax_index(std::span<const GridEntry> table);

/// Pooled confusion counts of fuse -> binarize against truth over all slices.
ConfusionCounts fused_counts(std::span<const Slice> slices,
                             const WeightVector& w, double threshold);

/// Z values for one panel: weight `fixed_index` held at
/// fixed_numerator / denominator, the first two remaining weights on the
/// axes and the last one implied. Four models only.
struct HeatmapMatrix {
  std::size_t fixed_index = 0;
  std::uint32_t fixed_numerator = 0;
  std::uint32_t denominator = 0;
  /// Model indices on the horizontal and vertical axes and the implied one.
  std::size_t x_index = 1;
  std::size_t y_index = 2;
  std::size_t implied_index = 3;
  /// cells[y][x], (denominator + 1) squared; present iff
  /// fixed + x + y <= denominator.
  std::vector<std::vector<std::optional<double>>> cells;
  std::uint32_t argmax_x = 0;
  std::uint32_t argmax_y = 0;
  double argmax_z = 0.0;

  /// Full weight vector of a cell.
  WeightVector weights_at(std::uint32_t x, std::uint32_t y) const;
};

/// Throws DomainError unless the result holds the complete four-model
/// enumeration and fixed_numerator <= denominator.
HeatmapMatrix heatmap(const GridSearchResult& result, std::size_t fixed_index,
                      std::uint32_t fixed_numerator);

}  // namespace segfusion
