#include "segfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "segfusion/error.hpp"

namespace segfusion {

namespace {

constexpr double kZBase = 0.9;
constexpr double kZOffset = 1e-4;

double distance(const Point& a, const Point& b) noexcept {
  const auto dr = static_cast<std::int64_t>(a.row) - b.row;
  const auto dc = static_cast<std::int64_t>(a.col) - b.col;
  return std::sqrt(static_cast<double>(dr * dr + dc * dc));
}

void check_percentile(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw DomainError("percentile must be in (0,1], got " + std::to_string(p));
  }
}

// Squared distance from every source point to its nearest target point.
std::vector<std::int64_t> nearest_sq(std::span<const Point> from,
                                     std::span<const Point> to) {
  std::vector<std::int64_t> out;
  out.reserve(from.size());
  for (const auto& a : from) {
    std::int64_t best = INT64_MAX;
    for (const auto& b : to) {
      const std::int64_t dr = static_cast<std::int64_t>(a.row) - b.row;
      const std::int64_t dc = static_cast<std::int64_t>(a.col) - b.col;
      best = std::min(best, dr * dr + dc * dc);
    }
    out.push_back(best);
  }
  return out;
}

double ranked(std::vector<std::int64_t> sq, double percentile) {
  const std::size_t k = nearest_rank(sq.size(), percentile) - 1;
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(k),
                   sq.end());
  return std::sqrt(static_cast<double>(sq[k]));
}

double largest(const std::vector<std::int64_t>& sq) {
  return std::sqrt(
      static_cast<double>(*std::max_element(sq.begin(), sq.end())));
}

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

// Exact squared Euclidean distance transform to the foreground of `target`
// (Meijster, Roerdink and Hesselink), all in integer arithmetic.
std::vector<std::int64_t> squared_edt(const Mask& target) {
  const int w = target.width();
  const int h = target.height();
  const std::int64_t inf = static_cast<std::int64_t>(w) + h;

  // Vertical distance to the nearest target pixel in the same column.
  std::vector<std::int64_t> g(target.extent().pixel_count());
  for (int c = 0; c < w; ++c) {
    g[c] = target.at(0, c) ? 0 : inf;
    for (int r = 1; r < h; ++r) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      g[i] = target.at(r, c) ? 0 : g[i - w] + 1;
    }
    for (int r = h - 2; r >= 0; --r) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (g[i + w] < g[i]) g[i] = g[i + w] + 1;
    }
  }

  std::vector<std::int64_t> dt(g.size());
  std::vector<std::int64_t> s(w);
  std::vector<std::int64_t> t(w);
  for (int r = 0; r < h; ++r) {
    const std::int64_t* gr = g.data() + static_cast<std::size_t>(r) * w;
    auto f = [gr](std::int64_t x, std::int64_t i) {
      return (x - i) * (x - i) + gr[i] * gr[i];
    };
    auto sep = [gr](std::int64_t i, std::int64_t u) {
      return floor_div(u * u - i * i + gr[u] * gr[u] - gr[i] * gr[i],
                       2 * (u - i));
    };
    std::int64_t q = 0;
    s[0] = 0;
    t[0] = 0;
    for (std::int64_t u = 1; u < w; ++u) {
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const std::int64_t wsep = 1 + sep(s[q], u);
        if (wsep < w) {
          ++q;
          s[q] = u;
          t[q] = wsep;
        }
      }
    }
    std::int64_t* out = dt.data() + static_cast<std::size_t>(r) * w;
    for (std::int64_t u = w - 1; u >= 0; --u) {
      out[u] = f(u, s[q]);
      if (u == t[q]) --q;
    }
  }
  return dt;
}

std::vector<std::int64_t> sample(const std::vector<std::int64_t>& dt,
                                 const Mask& source) {
  std::vector<std::int64_t> out;
  out.reserve(source.foreground_count());
  const auto bits = source.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(dt[i]);
  }
  return out;
}

}  // namespace

double iou(const ConfusionCounts& c) noexcept {
  const std::uint64_t den = c.tp + c.fp + c.fn;
  if (den == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(den);
}

double precision(const ConfusionCounts& c) noexcept {
  const std::uint64_t den = c.tp + c.fp;
  if (den == 0) return c.fn == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(den);
}

double recall(const ConfusionCounts& c) noexcept {
  const std::uint64_t den = c.tp + c.fn;
  if (den == 0) return c.fp == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(den);
}

double f1(double p, double r) noexcept {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

std::size_t nearest_rank(std::size_t m, double percentile) {
  check_percentile(percentile);
  if (m == 0) return 0;
  const double x = percentile * static_cast<double>(m);
  const double nearest = std::round(x);
  const double rank = std::abs(x - nearest) < 1e-9 ? nearest : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(rank), 1, m);
}

double directed_hausdorff(std::span<const Point> a, std::span<const Point> b,
                          double empty_distance) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return empty_distance;
  double worst = 0.0;
  for (const auto& p : a) {
    double best = INFINITY;
    for (const auto& q : b) best = std::min(best, distance(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

double hausdorff(std::span<const Point> a, std::span<const Point> b,
                 double empty_distance) {
  return std::max(directed_hausdorff(a, b, empty_distance),
                  directed_hausdorff(b, a, empty_distance));
}

double hd95(std::span<const Point> a, std::span<const Point> b,
            double empty_distance, double percentile) {
  check_percentile(percentile);
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return empty_distance;
  return std::max(ranked(nearest_sq(a, b), percentile),
                  ranked(nearest_sq(b, a), percentile));
}

BoundaryDistances boundary_distances(const Mask& prediction, const Mask& truth,
                                     double percentile) {
  require_same_extent(prediction.extent(), truth.extent(),
                      "boundary_distances");
  check_percentile(percentile);
  const std::size_t np = prediction.foreground_count();
  const std::size_t nt = truth.foreground_count();
  if (np == 0 && nt == 0) return {0.0, 0.0};
  if (np == 0 || nt == 0) {
    const double d = truth.extent().diagonal();
    return {d, d};
  }
  const auto truth_to_pred = sample(squared_edt(prediction), truth);
  const auto pred_to_truth = sample(squared_edt(truth), prediction);
  return {std::max(largest(truth_to_pred), largest(pred_to_truth)),
          std::max(ranked(truth_to_pred, percentile),
                   ranked(pred_to_truth, percentile))};
}

double aggregate_h(std::span<const double> hd95_values) {
  double sum = 0.0;
  for (std::size_t i = 0; i < hd95_values.size(); ++i) {
    const double v = hd95_values[i];
    if (!(std::isfinite(v) && v >= 0.0)) {
      throw DomainError("hd95 value " + std::to_string(i) +
                        " must be finite and non-negative");
    }
    sum += std::log10(v + 1.0);
  }
  return sum;
}

double z_transform(double iou_value, double max_iou) {
  if (!(iou_value <= max_iou)) {
    throw DomainError("z_transform: iou " + std::to_string(iou_value) +
                      " exceeds the maximum " + std::to_string(max_iou));
  }
  return std::log(std::abs(iou_value - max_iou - kZOffset)) /
         std::log(kZBase);
}

MetricsRecord overlap_metrics(const ConfusionCounts& c) noexcept {
  MetricsRecord m;
  m.iou = iou(c);
  m.precision = precision(c);
  m.recall = recall(c);
  m.f1 = f1(m.precision, m.recall);
  return m;
}

MetricsRecord slice_metrics(const Mask& prediction, const Mask& truth,
                            double percentile) {
  MetricsRecord m = overlap_metrics(confusion(prediction, truth));
  m.hd95 = boundary_distances(prediction, truth, percentile).hd95;
  return m;
}

}  // namespace segfusion
