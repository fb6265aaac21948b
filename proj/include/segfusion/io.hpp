#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segfusion/ensemble.hpp"
#include "segfusion/metrics.hpp"
#include "segfusion/raster.hpp"

namespace segfusion::io {

namespace fs = std::filesystem;

// Rasters.
//
// Masks are binary PGM ("P5", maxval 255, 0 = background, 255 = foreground),
// rows top to bottom. Probability maps are grayscale PFM ("Pf", scale -1.0,
// little-endian float32). PFM stores rows bottom to top; the codec flips them
// so row 0 in memory is always the top of the image.

std::string encode_mask(const Mask& mask);
/// `origin` names the source in error messages.
Mask decode_mask(std::string_view bytes, std::string_view origin = "<pgm>");
Mask read_mask(const fs::path& path);
void write_mask(const Mask& mask, const fs::path& path);

std::string encode_probmap(const ProbMap& map);
ProbMap decode_probmap(std::string_view bytes, std::string_view origin = "<pfm>");
ProbMap read_probmap(const fs::path& path);
void write_probmap(const ProbMap& map, const fs::path& path);

// Manifest: CSV with header `slice_id,truth,<model_1>,...,<model_N>`.
// Fields are unquoted; paths are relative to the manifest's directory.

struct ManifestEntry {
  std::string slice_id;
  fs::path truth;
  std::vector<fs::path> models;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<std::string> model_names;
  std::vector<ManifestEntry> entries;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Paths are kept exactly as written.
Manifest parse_manifest(std::string_view text, std::string_view origin = "<manifest>");
std::string format_manifest(const Manifest& manifest);
/// Parses, resolves relative paths against the manifest directory and
/// checks every referenced file exists.
Manifest read_manifest(const fs::path& path);
void write_manifest(const Manifest& manifest, const fs::path& path);

/// Loads every slice of a resolved manifest.
std::vector<Slice> load_slices(const Manifest& manifest);

// Reports.

/// Fixed four decimals; exact binary ties round half to even.
std::string format_fixed4(double value);

struct ReportRow {
  std::string id;
  MetricsRecord metrics;
};

struct Report {
  std::vector<ReportRow> slices;
  /// Pooled IoU/P/R/F1 and, in the hd95 field, aggregate_h of the slice
  /// hd95 column.
  MetricsRecord aggregate;
};

inline constexpr std::string_view kAggregateId = "AGGREGATE";

/// Aggregate row from the pooled counts and per-slice hd95 values.
Report make_report(std::vector<ReportRow> slices, const ConfusionCounts& pooled);

std::string format_report_row(std::string_view id, const MetricsRecord& m);
std::string format_report(const Report& report);
Report parse_report(std::string_view text, std::string_view origin = "<report>");
void write_report(const Report& report, const fs::path& path);

// Grid-search table: `w_1,...,w_N,objective,best`, weights as exact
// decimals, objectives in shortest round-trip form.

std::string format_grid_table(const GridSearchResult& result);
/// `denominator` is the grid every weight must lie on.
GridSearchResult parse_grid_table(std::string_view text, std::uint32_t denominator,
                                  std::string_view origin = "<grid table>");
void write_grid_table(const GridSearchResult& result, const fs::path& path);
GridSearchResult read_grid_table(const fs::path& path, std::uint32_t denominator);

/// key=value summary of the argmax.
std::string format_best_weights(const GridSearchResult& result,
                                std::span<const std::string> model_names,
                                Objective objective);
void write_best_weights(const GridSearchResult& result,
                        std::span<const std::string> model_names,
                        Objective objective, const fs::path& path);
/// The `weights=` entry of a best-weights file.
WeightVector read_best_weights(const fs::path& path, std::uint32_t denominator);

// Heatmaps.

/// Comment line with the fixed weight and argmax cell, a header row of
/// horizontal-axis weights, then one row per vertical-axis weight; absent
/// cells are empty fields.
std::string format_heatmap(const HeatmapMatrix& matrix);
void write_heatmap(const HeatmapMatrix& matrix, const fs::path& path);

/// One row per panel: full argmax weight vector and its Z.
std::string format_heatmap_summary(std::span<const HeatmapMatrix> panels);
void write_heatmap_summary(std::span<const HeatmapMatrix> panels,
                           const fs::path& path);

// Plain file helpers; failures raise IoError.
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

}  // namespace segfusion::io
