#include "segfusion/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "segfusion/ensemble.hpp"
#include "segfusion/error.hpp"
#include "segfusion/io.hpp"
#include "segfusion/metrics.hpp"
#include "segfusion/synth.hpp"

namespace segfusion::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string manifest;
  std::string out_dir;
  std::string weights;
  std::string weights_file;
  std::string table;
  std::string objective = "micro";
  std::uint32_t denominator = kDefaultDenominator;
  double threshold = kDefaultThreshold;
  double percentile = kDefaultPercentile;
  unsigned threads = 0;
  int fixed_index = 1;
  std::optional<std::uint32_t> fixed;

  // synth
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  int slices = 4;
  int models = 4;
  int blobs_min = 1;
  int blobs_max = 3;
  double radius_min = 2.0;
  double radius_max = 8.0;
  std::string miss = "0";
  std::string clutter = "0";
  std::string sigma = "0";
  std::string names;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    out.push_back(s.substr(start, at - start));
    if (at == std::string::npos) break;
    start = at + 1;
  }
  return out;
}

fs::path output_dir(const Options& o) {
  fs::path dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  return dir;
}

// Weight flags are validated against the grid before anything is read.
std::optional<WeightVector> explicit_weights(const Options& o) {
  if (!o.weights.empty() && !o.weights_file.empty()) {
    throw DomainError("give either --weights or --weights-file, not both");
  }
  if (!o.weights.empty()) return WeightVector::parse(o.weights, o.denominator);
  return std::nullopt;
}

WeightVector resolve_weights(const Options& o, std::optional<WeightVector> given,
                             std::size_t n_models) {
  WeightVector w = given ? *given
                   : !o.weights_file.empty()
                       ? io::read_best_weights(o.weights_file, o.denominator)
                       : n_models == 4
                           ? WeightVector::parse(reference_weights().to_string(),
                                                 o.denominator)
                           : throw DomainError("--weights is required unless "
                                               "the manifest has four models");
  if (w.size() != n_models) {
    throw ShapeError("got " + std::to_string(w.size()) + " weights for " +
                     std::to_string(n_models) + " models");
  }
  return w;
}

std::vector<double> per_model(const std::string& text, int n, const char* what) {
  auto parts = split(text, ',');
  if (parts.size() == 1) parts.assign(static_cast<std::size_t>(n), parts.front());
  if (parts.size() != static_cast<std::size_t>(n)) {
    throw DomainError(std::string("--") + what + " needs 1 or " +
                      std::to_string(n) + " values");
  }
  std::vector<double> out;
  for (const auto& p : parts) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(p, &used));
      if (used != p.size()) throw std::invalid_argument(p);
    } catch (const std::logic_error&) {
      throw DomainError(std::string("--") + what + ": not a number '" + p + "'");
    }
  }
  return out;
}

std::string slice_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%03d", i);
  return buf;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig c;
  c.seed = o.seed;
  c.width = o.width;
  c.height = o.height;
  c.n_slices = o.slices;
  c.blob_count_min = o.blobs_min;
  c.blob_count_max = o.blobs_max;
  c.blob_radius_min = o.radius_min;
  c.blob_radius_max = o.radius_max;
  if (o.models < 2) throw DomainError("--models must be at least 2");
  const auto miss = per_model(o.miss, o.models, "miss");
  const auto clutter = per_model(o.clutter, o.models, "clutter");
  const auto sigma = per_model(o.sigma, o.models, "sigma");
  c.profiles.clear();
  for (int k = 0; k < o.models; ++k) {
    const auto i = static_cast<std::size_t>(k);
    c.profiles.push_back({miss[i], clutter[i], sigma[i]});
  }
  c.validate();

  io::Manifest manifest;
  if (!o.names.empty()) {
    manifest.model_names = split(o.names, ',');
  } else if (o.models == 4) {
    manifest.model_names = {"PAN", "FPN", "Unet", "DeepLabv3+"};
  } else {
    for (int k = 0; k < o.models; ++k) {
      manifest.model_names.push_back("model_" + std::to_string(k + 1));
    }
  }
  if (manifest.model_names.size() != c.profiles.size()) {
    throw DomainError("--names must list one name per model");
  }

  const fs::path dir = output_dir(o);
  fs::create_directories(dir / "truth");
  for (const auto& n : manifest.model_names) fs::create_directories(dir / n);
  for (int i = 0; i < c.n_slices; ++i) {
    const Slice s = generate_slice(c, i);
    const std::string id = slice_name(i);
    io::ManifestEntry e{id, fs::path("truth") / (id + ".pgm"), {}};
    io::write_mask(s.truth, dir / e.truth);
    for (std::size_t k = 0; k < s.maps.size(); ++k) {
      e.models.push_back(fs::path(manifest.model_names[k]) / (id + ".pfm"));
      io::write_probmap(s.maps[k], dir / e.models.back());
    }
    manifest.entries.push_back(std::move(e));
  }
  io::write_manifest(manifest, dir / "manifest.csv");
  out << "wrote " << c.n_slices << " slices to " << (dir / "manifest.csv").string()
      << "\n";
  return kOk;
}

int cmd_fuse(const Options& o, std::ostream& out) {
  const auto given = explicit_weights(o);
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) {
    throw DomainError("--threshold must be in [0,1]");
  }
  const auto manifest = io::read_manifest(o.manifest);
  const auto w = resolve_weights(o, given, manifest.model_names.size());
  const fs::path dir = output_dir(o);
  for (const auto& e : manifest.entries) {
    std::vector<ProbMap> maps;
    for (const auto& p : e.models) maps.push_back(io::read_probmap(p));
    const ProbMap fused = fuse(maps, w);
    io::write_probmap(fused, dir / (e.slice_id + "_fused.pfm"));
    io::write_mask(binarize(fused, o.threshold), dir / (e.slice_id + "_mask.pgm"));
  }
  out << "fused " << manifest.entries.size() << " slices with weights "
      << w.to_string() << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto given = explicit_weights(o);
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) {
    throw DomainError("--threshold must be in [0,1]");
  }
  const auto manifest = io::read_manifest(o.manifest);
  const auto w = resolve_weights(o, given, manifest.model_names.size());
  const auto slices = io::load_slices(manifest);

  std::vector<io::ReportRow> rows;
  ConfusionCounts pooled;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const Mask pred = binarize(fuse(slices[i].maps, w), o.threshold);
    pooled += confusion(pred, slices[i].truth);
    rows.push_back({manifest.entries[i].slice_id,
                    slice_metrics(pred, slices[i].truth, o.percentile)});
  }
  const auto report = io::make_report(std::move(rows), pooled);
  const fs::path path = output_dir(o) / "report.csv";
  io::write_report(report, path);
  out << "weights " << w.to_string() << ": iou "
      << io::format_fixed4(report.aggregate.iou) << ", f1 "
      << io::format_fixed4(report.aggregate.f1) << ", H "
      << io::format_fixed4(report.aggregate.hd95) << " -> " << path.string()
      << "\n";
  return kOk;
}

int cmd_optimize(const Options& o, std::ostream& out) {
  GridSearchOptions g;
  g.denominator = o.denominator;
  g.threshold = o.threshold;
  g.objective = parse_objective(o.objective);
  g.threads = o.threads;
  if (g.denominator == 0) throw DomainError("--denominator must be positive");
  const auto manifest = io::read_manifest(o.manifest);
  const auto slices = io::load_slices(manifest);
  const auto result = grid_search(slices, g);
  const fs::path dir = output_dir(o);
  io::write_grid_table(result, dir / "grid_table.csv");
  io::write_best_weights(result, manifest.model_names, g.objective,
                         dir / "best_weights.txt");
  out << "best weights " << result.best().to_string() << " "
      << to_string(g.objective) << " iou "
      << io::format_fixed4(result.best_objective()) << " over "
      << result.table.size() << " vectors\n";
  return kOk;
}

int cmd_heatmap(const Options& o, std::ostream& out) {
  if (o.fixed_index < 1 || o.fixed_index > 4) {
    throw DomainError("--fixed-index must be in 1..4");
  }
  if (o.fixed && *o.fixed > o.denominator) {
    throw DomainError("--fixed numerator " + std::to_string(*o.fixed) +
                      " exceeds denominator " + std::to_string(o.denominator));
  }
  const auto result = io::read_grid_table(o.table, o.denominator);
  const auto index = static_cast<std::size_t>(o.fixed_index - 1);
  std::vector<HeatmapMatrix> panels;
  if (o.fixed) {
    panels.push_back(heatmap(result, index, *o.fixed));
  } else {
    for (std::uint32_t n = 0; n <= o.denominator; ++n) {
      panels.push_back(heatmap(result, index, n));
    }
  }
  const fs::path dir = output_dir(o);
  for (const auto& p : panels) {
    char name[64];
    std::snprintf(name, sizeof name, "heatmap_w%d_%02u.csv", o.fixed_index,
                  p.fixed_numerator);
    io::write_heatmap(p, dir / name);
  }
  io::write_heatmap_summary(panels, dir / "heatmap_summary.csv");
  const auto top = std::max_element(
      panels.begin(), panels.end(),
      [](const auto& a, const auto& b) { return a.argmax_z < b.argmax_z; });
  out << "wrote " << panels.size() << " panels; max Z "
      << io::format_fixed4(top->argmax_z) << " at "
      << top->weights_at(top->argmax_x, top->argmax_y).to_string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"Ensemble fusion, weight search and evaluation for lesion masks",
               "segfusion"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--out", o.out_dir,
                    std::string("Output directory (default $") + kOutputDirEnv +
                        " or .)");
    sub->add_option("--denominator", o.denominator,
                    "Weight grid denominator (step = 1/denominator)")
        ->capture_default_str();
  };
  auto add_manifest = [&](CLI::App* sub) {
    sub->add_option("-m,--manifest", o.manifest, "Manifest CSV")->required();
    sub->add_option("--threshold", o.threshold, "Binarization threshold")
        ->capture_default_str();
  };
  auto add_weights = [&](CLI::App* sub) {
    sub->add_option("-w,--weights", o.weights,
                    "Comma-separated exact decimals, e.g. 0.2,0.1,0.6,0.1");
    sub->add_option("--weights-file", o.weights_file,
                    "best_weights.txt written by optimize");
  };

  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic fixture");
  add_common(synth);
  synth->add_option("--seed", o.seed)->capture_default_str();
  synth->add_option("--width", o.width)->capture_default_str();
  synth->add_option("--height", o.height)->capture_default_str();
  synth->add_option("--slices", o.slices)->capture_default_str();
  synth->add_option("--models", o.models)->capture_default_str();
  synth->add_option("--blobs-min", o.blobs_min)->capture_default_str();
  synth->add_option("--blobs-max", o.blobs_max)->capture_default_str();
  synth->add_option("--radius-min", o.radius_min)->capture_default_str();
  synth->add_option("--radius-max", o.radius_max)->capture_default_str();
  synth->add_option("--miss", o.miss, "Miss rate, one value or one per model")
      ->capture_default_str();
  synth->add_option("--clutter", o.clutter, "Clutter rate, one or per model")
      ->capture_default_str();
  synth->add_option("--sigma", o.sigma, "Blur sigma, one or per model")
      ->capture_default_str();
  synth->add_option("--names", o.names, "Comma-separated model names");

  auto* fuse_cmd = app.add_subcommand("fuse", "Write fused PFM and PGM per slice");
  add_common(fuse_cmd);
  add_manifest(fuse_cmd);
  add_weights(fuse_cmd);

  auto* evaluate = app.add_subcommand("evaluate", "Write the per-slice report");
  add_common(evaluate);
  add_manifest(evaluate);
  add_weights(evaluate);
  evaluate->add_option("--percentile", o.percentile, "HD percentile")
      ->capture_default_str();

  auto* optimize = app.add_subcommand("optimize", "Grid-search the weight simplex");
  add_common(optimize);
  add_manifest(optimize);
  optimize->add_option("--objective", o.objective, "micro or macro IoU")
      ->capture_default_str();
  optimize->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* heat = app.add_subcommand("heatmap", "Z panels from a grid table");
  add_common(heat);
  heat->add_option("-t,--table", o.table, "grid_table.csv")->required();
  heat->add_option("--fixed-index", o.fixed_index, "Held weight, 1-based")
      ->capture_default_str();
  heat->add_option("--fixed", o.fixed,
                   "Held numerator; omit to sweep 0..denominator");

  std::vector<std::string> rest(args.rbegin(), args.rend());
  if (!rest.empty()) rest.pop_back();
  try {
    app.parse(std::move(rest));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kIoError;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*fuse_cmd) return cmd_fuse(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*optimize) return cmd_optimize(o, out);
    if (*heat) return cmd_heatmap(o, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kComputeError;
  }
  return kComputeError;
}

}  // namespace segfusion::cli
