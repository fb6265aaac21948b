#include "segfusion/ensemble.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "segfusion/error.hpp"
#include "segfusion/metrics.hpp"

namespace segfusion {

namespace {

__extension__ typedef unsigned __int128 u128;

constexpr std::size_t kMaxInlineModels = 16;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_digits(std::string_view s, std::uint64_t& out) {
  if (s.empty() || s.size() > 18) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Convex combination of one pixel. Each term n_k * e_k is exact in double
// (24-bit float significand times a 32-bit integer), and the terms are summed
// in ascending order so the result does not depend on model order.
template <typename SampleFn>
float fused_sample(std::span<const std::uint32_t> numerators,
                   std::uint32_t denominator, SampleFn&& sample) {
  std::array<double, kMaxInlineModels> inline_terms{};
  std::vector<double> heap_terms;
  double* terms = inline_terms.data();
  if (numerators.size() > kMaxInlineModels) {
    heap_terms.resize(numerators.size());
    terms = heap_terms.data();
  }
  std::size_t n = 0;
  for (std::size_t k = 0; k < numerators.size(); ++k) {
    if (numerators[k] == 0) continue;
    terms[n++] = static_cast<double>(numerators[k]) *
                 static_cast<double>(sample(k));
  }
  std::sort(terms, terms + n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += terms[i];
  return std::min(1.0F, static_cast<float>(sum / denominator));
}

void check_maps(std::span<const ProbMap> maps, std::size_t expected) {
  if (maps.size() < 2) {
    throw ShapeError("fusion needs at least two maps, got " +
                     std::to_string(maps.size()));
  }
  if (maps.size() != expected) {
    throw ShapeError("got " + std::to_string(maps.size()) + " maps for " +
                     std::to_string(expected) + " weights");
  }
  for (const auto& m : maps.subspan(1)) {
    require_same_extent(maps.front().extent(), m.extent(), "fuse");
  }
}

void enumerate_into(std::vector<std::uint32_t>& prefix, std::size_t slot,
                    std::uint32_t remaining, std::uint32_t denominator,
                    std::vector<WeightVector>& out) {
  if (slot + 1 == prefix.size()) {
    prefix[slot] = remaining;
    out.emplace_back(prefix, denominator);
    return;
  }
  for (std::uint32_t n = 0; n <= remaining; ++n) {
    prefix[slot] = n;
    enumerate_into(prefix, slot + 1, remaining - n, denominator, out);
  }
}

struct SliceView {
  const std::uint8_t* truth;
  std::vector<const float*> maps;
  std::size_t pixels;
};

ConfusionCounts score_slice(const SliceView& s,
                            std::span<const std::uint32_t> numerators,
                            std::uint32_t denominator, double threshold) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < s.pixels; ++i) {
    const float v = fused_sample(numerators, denominator,
                                 [&](std::size_t k) { return s.maps[k][i]; });
    const bool pred = static_cast<double>(v) >= threshold;
    const bool truth = s.truth[i] != 0;
    if (pred && truth) {
      ++c.tp;
    } else if (pred) {
      ++c.fp;
    } else if (truth) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

std::vector<SliceView> views_of(std::span<const Slice> slices) {
  if (slices.empty()) throw DomainError("grid search needs at least one slice");
  const std::size_t n_models = slices.front().maps.size();
  std::vector<SliceView> views;
  views.reserve(slices.size());
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const auto& slice = slices[s];
    check_maps(slice.maps, n_models);
    require_same_extent(slice.truth.extent(), slice.maps.front().extent(),
                        "slice truth");
    SliceView v{slice.truth.bits().data(), {}, slice.truth.bits().size()};
    for (const auto& m : slice.maps) v.maps.push_back(m.values().data());
    views.push_back(std::move(v));
  }
  return views;
}

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw DomainError("threshold must be in [0,1], got " +
                      std::to_string(threshold));
  }
}

}  // namespace

WeightVector::WeightVector(std::vector<std::uint32_t> numerators,
                           std::uint32_t denominator)
    : numerators_(std::move(numerators)), denominator_(denominator) {
  if (denominator_ == 0) throw DomainError("weight denominator must be positive");
  if (numerators_.empty()) throw DomainError("weight vector is empty");
  const std::uint64_t sum = std::accumulate(
      numerators_.begin(), numerators_.end(), std::uint64_t{0});
  if (sum != denominator_) {
    throw DomainError("weights must sum to 1: numerators sum to " +
                      std::to_string(sum) + " over denominator " +
                      std::to_string(denominator_));
  }
}

WeightVector WeightVector::one_hot(std::size_t size, std::size_t index,
                                   std::uint32_t denominator) {
  if (index >= size) throw DomainError("one-hot index out of range");
  std::vector<std::uint32_t> n(size, 0);
  n[index] = denominator;
  return WeightVector(std::move(n), denominator);
}

std::uint32_t parse_grid_weight(std::string_view text,
                                std::uint32_t denominator) {
  const std::string_view s = trim(text);
  auto fail = [&](const char* why) -> std::uint32_t {
    throw DomainError("weight '" + std::string(text) + "' " + why);
  };
  if (denominator == 0) fail("has no grid (denominator 0)");
  u128 num = 0;
  u128 den = 1;
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    if (!parse_digits(s.substr(0, slash), a) ||
        !parse_digits(s.substr(slash + 1), b) || b == 0) {
      fail("is not a fraction n/d");
    }
    num = a;
    den = b;
  } else {
    const auto dot = s.find('.');
    const std::string_view ip = s.substr(0, dot);
    const std::string_view fp =
        dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    std::uint64_t i = 0;
    std::uint64_t f = 0;
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !parse_digits(ip, i)) ||
        (!fp.empty() && !parse_digits(fp, f)) ||
        (dot != std::string_view::npos && fp.empty() && ip.empty())) {
      fail("is not a decimal number");
    }
    if (fp.size() > 18) fail("has too many decimals");
    for (std::size_t k = 0; k < fp.size(); ++k) den *= 10;
    num = i * den + f;
  }
  const u128 scaled = num * denominator;
  if (scaled % den != 0) {
    fail(("is not a multiple of 1/" + std::to_string(denominator)).c_str());
  }
  const u128 n = scaled / den;
  if (n > denominator) fail("exceeds 1");
  return static_cast<std::uint32_t>(n);
}

WeightVector WeightVector::parse(std::string_view text,
                                 std::uint32_t denominator) {
  std::vector<std::uint32_t> n;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    n.push_back(parse_grid_weight(text.substr(start, comma - start), denominator));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return WeightVector(std::move(n), denominator);
}

std::string WeightVector::format_weight(std::size_t k) const {
  const std::uint64_t n = numerators_.at(k);
  const std::uint64_t whole = n / denominator_;
  const std::uint64_t rest = n % denominator_;
  u128 pow10 = 10;
  for (int digits = 1; digits <= 18; ++digits, pow10 *= 10) {
    const u128 scaled = static_cast<u128>(rest) * pow10;
    if (scaled % denominator_ != 0) continue;
    std::string frac = std::to_string(static_cast<std::uint64_t>(scaled / denominator_));
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    return std::to_string(whole) + "." + frac;
  }
  return std::to_string(n) + "/" + std::to_string(denominator_);
}

std::string WeightVector::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k) out += ',';
    out += format_weight(k);
  }
  return out;
}

WeightVector reference_weights() { return WeightVector({2, 1, 6, 1}, 10); }

ProbMap fuse(std::span<const ProbMap> maps, const WeightVector& w) {
  check_maps(maps, w.size());
  const std::size_t pixels = maps.front().values().size();
  std::vector<float> out(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    out[i] = fused_sample(w.numerators(), w.denominator(),
                          [&](std::size_t k) { return maps[k].values()[i]; });
  }
  return ProbMap(maps.front().extent(), std::move(out));
}

std::uint64_t simplex_size(std::size_t n_models, std::uint32_t denominator) {
  // C(d + n - 1, n - 1), built incrementally so every step stays integral.
  u128 c = 1;
  for (std::uint64_t i = 1; i + 1 <= n_models; ++i) {
    c = c * (denominator + i) / i;
  }
  return static_cast<std::uint64_t>(c);
}

std::vector<WeightVector> enumerate_simplex(std::size_t n_models,
                                            std::uint32_t denominator) {
  if (n_models < 2) throw DomainError("simplex needs at least two models");
  if (denominator == 0) throw DomainError("denominator must be positive");
  std::vector<WeightVector> out;
  out.reserve(simplex_size(n_models, denominator));
  std::vector<std::uint32_t> prefix(n_models, 0);
  enumerate_into(prefix, 0, denominator, denominator, out);
  return out;
}

std::string_view to_string(Objective o) noexcept {
  return o == Objective::kMicro ? "micro" : "macro";
}

Objective parse_objective(std::string_view text) {
  if (text == "micro") return Objective::kMicro;
  if (text == "macro") return Objective::kMacro;
  throw DomainError("objective must be micro or macro, got '" +
                    std::string(text) + "'");
}

ConfusionCounts fused_counts(std::span<const Slice> slices,
                             const WeightVector& w, double threshold) {
  check_threshold(threshold);
  const auto views = views_of(slices);
  if (views.front().maps.size() != w.size()) {
    throw ShapeError("weight vector length does not match model count");
  }
  ConfusionCounts total;
  for (const auto& v : views) {
    total += score_slice(v, w.numerators(), w.denominator(), threshold);
  }
  return total;
}

std::size_t argmax_index(std::span<const GridEntry> table) {
  if (table.empty()) throw DomainError("empty grid table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].objective > table[best].objective) best = i;
  }
  return best;
}

GridSearchResult grid_search(std::span<const Slice> slices,
                             const GridSearchOptions& options) {
  check_threshold(options.threshold);
  const auto views = views_of(slices);
  GridSearchResult result;
  result.n_models = views.front().maps.size();
  result.denominator = options.denominator;
  for (auto& w : enumerate_simplex(result.n_models, options.denominator)) {
    result.table.push_back({std::move(w), 0.0});
  }

  auto evaluate = [&](GridEntry& entry) {
    const auto num = entry.weights.numerators();
    if (options.objective == Objective::kMicro) {
      ConfusionCounts pooled;
      for (const auto& v : views) {
        pooled += score_slice(v, num, options.denominator, options.threshold);
      }
      entry.objective = iou(pooled);
    } else {
      double sum = 0.0;
      for (const auto& v : views) {
        sum += iou(score_slice(v, num, options.denominator, options.threshold));
      }
      entry.objective = sum / static_cast<double>(views.size());
    }
  };

  // Each worker owns a strided subset of table slots; the argmax is taken
  // afterwards over the table in enumeration order.
  unsigned workers = options.threads != 0 ? options.threads
                                          : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1,
                                 static_cast<unsigned>(result.table.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < result.table.size(); i += workers)
          evaluate(result.table[i]);
      });
    }
    for (std::size_t i = 0; i < result.table.size(); i += workers)
      evaluate(result.table[i]);
  }

  result.best_index = argmax_index(result.table);
  return result;
}

WeightVector HeatmapMatrix::weights_at(std::uint32_t x, std::uint32_t y) const {
  std::vector<std::uint32_t> n(4, 0);
  n[fixed_index] = fixed_numerator;
  n[x_index] = x;
  n[y_index] = y;
  n[implied_index] = denominator - fixed_numerator - x - y;
  return WeightVector(std::move(n), denominator);
}

HeatmapMatrix heatmap(const GridSearchResult& result, std::size_t fixed_index,
                      std::uint32_t fixed_numerator) {
  if (result.n_models != 4) {
    throw DomainError("heatmap panels need exactly four models, got " +
                      std::to_string(result.n_models));
  }
  if (fixed_index >= 4) throw DomainError("fixed weight index out of range");
  if (fixed_numerator > result.denominator) {
    throw DomainError("fixed numerator " + std::to_string(fixed_numerator) +
                      " exceeds denominator " +
                      std::to_string(result.denominator));
  }
  if (result.table.size() != simplex_size(4, result.denominator)) {
    throw DomainError("grid table does not cover the full enumeration");
  }

  std::map<std::vector<std::uint32_t>, double> lookup;
  for (const auto& e : result.table) {
    lookup.emplace(std::vector<std::uint32_t>(e.weights.numerators().begin(),
                                              e.weights.numerators().end()),
                   e.objective);
  }
  const double global_max = result.best_objective();

  HeatmapMatrix m;
  m.fixed_index = fixed_index;
  m.fixed_numerator = fixed_numerator;
  m.denominator = result.denominator;
  std::array<std::size_t, 3> free{};
  for (std::size_t k = 0, j = 0; k < 4; ++k) {
    if (k != fixed_index) free[j++] = k;
  }
  m.x_index = free[0];
  m.y_index = free[1];
  m.implied_index = free[2];

  const std::uint32_t d = result.denominator;
  m.cells.assign(d + 1, std::vector<std::optional<double>>(d + 1));
  std::optional<WeightVector> best_w;
  for (std::uint32_t y = 0; y <= d; ++y) {
    for (std::uint32_t x = 0; x <= d; ++x) {
      if (std::uint64_t{fixed_numerator} + x + y > d) continue;
      const WeightVector w = m.weights_at(x, y);
      const auto it = lookup.find(std::vector<std::uint32_t>(
          w.numerators().begin(), w.numerators().end()));
      if (it == lookup.end()) {
        throw DomainError("grid table is missing " + w.to_string());
      }
      const double z = z_transform(it->second, global_max);
      m.cells[y][x] = z;
      if (!best_w || z > m.argmax_z || (z == m.argmax_z && w < *best_w)) {
        best_w = w;
        m.argmax_x = x;
        m.argmax_y = y;
        m.argmax_z = z;
      }
    }
  }
  return m;
}

}  // namespace segfusion
