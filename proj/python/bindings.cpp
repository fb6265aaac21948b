#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "segfusion/cli.hpp"
#include "segfusion/ensemble.hpp"
#include "segfusion/error.hpp"
#include "segfusion/io.hpp"
#include "segfusion/metrics.hpp"
#include "segfusion/raster.hpp"
#include "segfusion/synth.hpp"

namespace py = pybind11;
namespace sf = segfusion;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray =
    py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

sf::Extent extent_of(const py::array& a) {
  if (a.ndim() != 2) throw sf::ShapeError("expected a 2-D array");
  return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
}

sf::ProbMap to_probmap(const FloatArray& a) {
  auto e = extent_of(a);
  return sf::ProbMap(e, std::vector<float>(a.data(), a.data() + a.size()));
}

sf::Mask to_mask(const py::array& any) {
  ByteArray a = ByteArray::ensure(any);
  if (!a) throw sf::ShapeError("mask is not convertible to uint8");
  auto e = extent_of(a);
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  for (auto& b : bits) b = b != 0;
  return sf::Mask(e, std::move(bits));
}

FloatArray from_probmap(const sf::ProbMap& m) {
  FloatArray out({m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

py::array_t<bool> from_mask(const sf::Mask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  auto* dst = out.mutable_data();
  for (auto b : m.bits()) *dst++ = b != 0;
  return out;
}

std::vector<sf::Point> to_points(const IntArray& a) {
  if (a.size() == 0) return {};
  if (a.ndim() != 2 || a.shape(1) != 2)
    throw sf::ShapeError("points must have shape (n, 2)");
  std::vector<sf::Point> pts(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    pts[i] = {a.at(i, 0), a.at(i, 1)};
  return pts;
}

std::vector<sf::ProbMap> to_probmaps(const std::vector<FloatArray>& maps) {
  std::vector<sf::ProbMap> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.push_back(to_probmap(m));
  return out;
}

sf::WeightVector to_weights(const py::object& w, std::uint32_t denominator) {
  if (py::isinstance<sf::WeightVector>(w)) return w.cast<sf::WeightVector>();
  if (py::isinstance<py::str>(w))
    return sf::WeightVector::parse(w.cast<std::string>(), denominator);
  return sf::WeightVector(w.cast<std::vector<std::uint32_t>>(), denominator);
}

std::vector<sf::Slice> to_slices(const py::list& slices) {
  std::vector<sf::Slice> out;
  for (auto item : slices) {
    if (py::isinstance<sf::Slice>(item)) {
      out.push_back(item.cast<sf::Slice>());
      continue;
    }
    auto pair = item.cast<py::tuple>();
    if (pair.size() != 2)
      throw sf::ShapeError("slice must be a (truth, maps) pair");
    out.push_back({to_mask(pair[0]),
                   to_probmaps(pair[1].cast<std::vector<FloatArray>>())});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_segfusion, m) {
  m.doc() = "Segmentation ensemble fusion and evaluation";

  auto error = py::register_exception<sf::Error>(m, "Error");
  py::register_exception<sf::ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<sf::DomainError>(m, "DomainError", error.ptr());
  py::register_exception<sf::IoError>(m, "IoError", error.ptr());
  py::register_exception<sf::ParseError>(m, "ParseError", error.ptr());

  py::class_<sf::ConfusionCounts>(m, "ConfusionCounts")
      .def(py::init<>())
      .def_readwrite("tp", &sf::ConfusionCounts::tp)
      .def_readwrite("fp", &sf::ConfusionCounts::fp)
      .def_readwrite("fn", &sf::ConfusionCounts::fn)
      .def_readwrite("tn", &sf::ConfusionCounts::tn)
      .def("total", &sf::ConfusionCounts::total)
      .def("__repr__", [](const sf::ConfusionCounts& c) {
        std::ostringstream s;
        s << "ConfusionCounts(tp=" << c.tp << ", fp=" << c.fp
          << ", fn=" << c.fn << ", tn=" << c.tn << ")";
        return s.str();
      });

  py::class_<sf::MetricsRecord>(m, "MetricsRecord")
      .def_readonly("iou", &sf::MetricsRecord::iou)
      .def_readonly("precision", &sf::MetricsRecord::precision)
      .def_readonly("recall", &sf::MetricsRecord::recall)
      .def_readonly("f1", &sf::MetricsRecord::f1)
      .def_readonly("hd95", &sf::MetricsRecord::hd95)
      .def("__repr__", [](const sf::MetricsRecord& r) {
        return "MetricsRecord(iou=" + sf::io::format_fixed4(r.iou) +
               ", precision=" + sf::io::format_fixed4(r.precision) +
               ", recall=" + sf::io::format_fixed4(r.recall) +
               ", f1=" + sf::io::format_fixed4(r.f1) +
               ", hd95=" + sf::io::format_fixed4(r.hd95) + ")";
      });

  m.def("binarize",
        [](const FloatArray& map, double threshold) {
          return from_mask(sf::binarize(to_probmap(map), threshold));
        },
        py::arg("map"), py::arg("threshold") = sf::kDefaultThreshold);
  m.def("confusion",
        [](const py::array& pred, const py::array& truth) {
          return sf::confusion(to_mask(pred), to_mask(truth));
        },
        py::arg("prediction"), py::arg("truth"));

  m.def("iou", &sf::iou);
  m.def("precision", &sf::precision);
  m.def("recall", &sf::recall);
  m.def("f1", &sf::f1, py::arg("p"), py::arg("r"));

  constexpr double kInf = std::numeric_limits<double>::infinity();
  m.def("directed_hausdorff",
        [](const IntArray& a, const IntArray& b, double empty) {
          return sf::directed_hausdorff(to_points(a), to_points(b), empty);
        },
        py::arg("a"), py::arg("b"), py::arg("empty_distance") = kInf);
  m.def("hausdorff",
        [](const IntArray& a, const IntArray& b, double empty) {
          return sf::hausdorff(to_points(a), to_points(b), empty);
        },
        py::arg("a"), py::arg("b"), py::arg("empty_distance") = kInf);
  m.def("hd95",
        [](const IntArray& a, const IntArray& b, double empty, double p) {
          return sf::hd95(to_points(a), to_points(b), empty, p);
        },
        py::arg("a"), py::arg("b"), py::arg("empty_distance") = kInf,
        py::arg("percentile") = sf::kDefaultPercentile);
  m.def("boundary_distances",
        [](const py::array& pred, const py::array& truth, double p) {
          auto d = sf::boundary_distances(to_mask(pred), to_mask(truth), p);
          return py::make_tuple(d.hausdorff, d.hd95);
        },
        py::arg("prediction"), py::arg("truth"),
        py::arg("percentile") = sf::kDefaultPercentile,
        "(hausdorff, hd95) between two masks");
  m.def("slice_metrics",
        [](const py::array& pred, const py::array& truth, double p) {
          return sf::slice_metrics(to_mask(pred), to_mask(truth), p);
        },
        py::arg("prediction"), py::arg("truth"),
        py::arg("percentile") = sf::kDefaultPercentile);
  m.def("aggregate_h",
        [](const std::vector<double>& v) { return sf::aggregate_h(v); },
        py::arg("hd95_values"));
  m.def("z_transform", &sf::z_transform, py::arg("iou"), py::arg("max_iou"));

  py::class_<sf::WeightVector>(m, "WeightVector")
      .def(py::init<std::vector<std::uint32_t>, std::uint32_t>(),
           py::arg("numerators"),
           py::arg("denominator") = sf::kDefaultDenominator)
      .def_static("parse", &sf::WeightVector::parse, py::arg("text"),
                  py::arg("denominator") = sf::kDefaultDenominator)
      .def_static("one_hot", &sf::WeightVector::one_hot, py::arg("size"),
                  py::arg("index"),
                  py::arg("denominator") = sf::kDefaultDenominator)
      .def_property_readonly("numerators",
                             [](const sf::WeightVector& w) {
                               return std::vector<std::uint32_t>(
                                   w.numerators().begin(),
                                   w.numerators().end());
                             })
      .def_property_readonly("denominator", &sf::WeightVector::denominator)
      .def("weights",
           [](const sf::WeightVector& w) {
             std::vector<double> out(w.size());
             for (std::size_t k = 0; k < w.size(); ++k) out[k] = w.weight(k);
             return out;
           })
      .def("__len__", &sf::WeightVector::size)
      .def("__str__", &sf::WeightVector::to_string)
      .def("__repr__",
           [](const sf::WeightVector& w) {
             return "WeightVector('" + w.to_string() + "')";
           })
      .def("__eq__", [](const sf::WeightVector& a,
                        const sf::WeightVector& b) { return a == b; })
      .def("__lt__", [](const sf::WeightVector& a,
                        const sf::WeightVector& b) { return a < b; })
      .def("__hash__", [](const sf::WeightVector& w) {
        return py::hash(py::cast(std::vector<std::uint32_t>(
            w.numerators().begin(), w.numerators().end())));
      });

  m.def("reference_weights", &sf::reference_weights);
  m.def("fuse",
        [](const std::vector<FloatArray>& maps, const py::object& w,
           std::uint32_t denominator) {
          auto pm = to_probmaps(maps);
          return from_probmap(sf::fuse(pm, to_weights(w, denominator)));
        },
        py::arg("maps"), py::arg("weights"),
        py::arg("denominator") = sf::kDefaultDenominator,
        "weights: WeightVector, \"0.2,0.1,...\" or a list of numerators");
  m.def("enumerate_simplex", &sf::enumerate_simplex, py::arg("n_models"),
        py::arg("denominator") = sf::kDefaultDenominator);
  m.def("simplex_size", &sf::simplex_size, py::arg("n_models"),
        py::arg("denominator") = sf::kDefaultDenominator);

  py::class_<sf::Slice>(m, "Slice")
      .def_property_readonly(
          "truth", [](const sf::Slice& s) { return from_mask(s.truth); })
      .def_property_readonly("maps", [](const sf::Slice& s) {
        py::list out;
        for (const auto& pm : s.maps) out.append(from_probmap(pm));
        return out;
      });

  py::class_<sf::GridSearchResult>(m, "GridSearchResult")
      .def_readonly("n_models", &sf::GridSearchResult::n_models)
      .def_readonly("denominator", &sf::GridSearchResult::denominator)
      .def_readonly("best_index", &sf::GridSearchResult::best_index)
      .def_property_readonly("best", &sf::GridSearchResult::best)
      .def_property_readonly("best_objective",
                             &sf::GridSearchResult::best_objective)
      .def_property_readonly("table",
                             [](const sf::GridSearchResult& r) {
                               py::list out;
                               for (const auto& e : r.table)
                                 out.append(py::make_tuple(e.weights,
                                                           e.objective));
                               return out;
                             })
      .def("to_csv", &sf::io::format_grid_table);

  m.def("grid_search",
        [](const py::list& slices, std::uint32_t denominator, double threshold,
           const std::string& objective, unsigned threads) {
          auto s = to_slices(slices);
          sf::GridSearchOptions opt{denominator, threshold,
                                    sf::parse_objective(objective), threads};
          py::gil_scoped_release release;
          return sf::grid_search(s, opt);
        },
        py::arg("slices"), py::arg("denominator") = sf::kDefaultDenominator,
        py::arg("threshold") = sf::kDefaultThreshold,
        py::arg("objective") = "micro", py::arg("threads") = 0u,
        "slices: list of Slice or (truth, [maps]) pairs");

  m.def("heatmap",
        [](const sf::GridSearchResult& r, std::size_t fixed_index,
           std::uint32_t fixed_numerator) {
          auto hm = sf::heatmap(r, fixed_index, fixed_numerator);
          const auto n = static_cast<py::ssize_t>(hm.cells.size());
          py::array_t<double> z({n, n});
          auto v = z.mutable_unchecked<2>();
          for (py::ssize_t y = 0; y < n; ++y)
            for (py::ssize_t x = 0; x < n; ++x)
              v(y, x) = hm.cells[y][x].value_or(std::nan(""));
          py::dict out;
          out["z"] = z;
          out["axes"] = py::make_tuple(hm.x_index, hm.y_index);
          out["implied"] = hm.implied_index;
          out["argmax"] = hm.weights_at(hm.argmax_x, hm.argmax_y);
          out["argmax_z"] = hm.argmax_z;
          out["csv"] = sf::io::format_heatmap(hm);
          return out;
        },
        py::arg("result"), py::arg("fixed_index"), py::arg("fixed_numerator"),
        "Z panel with weight fixed_index held at fixed_numerator/denominator; "
        "z[y, x] is NaN outside the simplex");

  py::class_<sf::ErrorProfile>(m, "ErrorProfile")
      .def(py::init([](double miss, double clutter, double sigma) {
             return sf::ErrorProfile{miss, clutter, sigma};
           }),
           py::arg("miss_rate") = 0.0, py::arg("clutter_rate") = 0.0,
           py::arg("blur_sigma") = 0.0)
      .def_readwrite("miss_rate", &sf::ErrorProfile::miss_rate)
      .def_readwrite("clutter_rate", &sf::ErrorProfile::clutter_rate)
      .def_readwrite("blur_sigma", &sf::ErrorProfile::blur_sigma);

  py::class_<sf::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seed", &sf::SynthConfig::seed)
      .def_readwrite("width", &sf::SynthConfig::width)
      .def_readwrite("height", &sf::SynthConfig::height)
      .def_readwrite("n_slices", &sf::SynthConfig::n_slices)
      .def_readwrite("blob_count_min", &sf::SynthConfig::blob_count_min)
      .def_readwrite("blob_count_max", &sf::SynthConfig::blob_count_max)
      .def_readwrite("blob_radius_min", &sf::SynthConfig::blob_radius_min)
      .def_readwrite("blob_radius_max", &sf::SynthConfig::blob_radius_max)
      .def_readwrite("profiles", &sf::SynthConfig::profiles)
      .def("validate", &sf::SynthConfig::validate);

  m.def("generate", &sf::generate, py::arg("config"),
        "Synthetic slices, deterministic in config.seed");

  m.def("read_mask",
        [](const std::filesystem::path& p) {
          return from_mask(sf::io::read_mask(p));
        },
        py::arg("path"));
  m.def("write_mask",
        [](const py::array& a, const std::filesystem::path& p) {
          sf::io::write_mask(to_mask(a), p);
        },
        py::arg("mask"), py::arg("path"));
  m.def("read_probmap",
        [](const std::filesystem::path& p) {
          return from_probmap(sf::io::read_probmap(p));
        },
        py::arg("path"));
  m.def("write_probmap",
        [](const FloatArray& a, const std::filesystem::path& p) {
          sf::io::write_probmap(to_probmap(a), p);
        },
        py::arg("map"), py::arg("path"));
  m.def("load_manifest",
        [](const std::filesystem::path& p) {
          auto manifest = sf::io::read_manifest(p);
          return py::make_tuple(manifest.model_names,
                                sf::io::load_slices(manifest));
        },
        py::arg("path"), "(model_names, [Slice]) from a manifest CSV");

  m.def("run_cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "segfusion");
          std::ostringstream out, err;
          int code = sf::cli::run(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a CLI subcommand; returns (exit, stdout, stderr)");
}
