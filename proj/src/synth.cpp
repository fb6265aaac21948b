#include "segfusion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segfusion/error.hpp"

namespace segfusion {

namespace {

constexpr std::uint64_t kTruthStream = 0;

Ellipse random_blob(SplitMix64& rng, const SynthConfig& c) {
  Ellipse e;
  e.center_row = rng.uniform(0.0, static_cast<double>(c.height - 1));
  e.center_col = rng.uniform(0.0, static_cast<double>(c.width - 1));
  e.radius_row = rng.uniform(c.blob_radius_min, c.blob_radius_max);
  e.radius_col = rng.uniform(c.blob_radius_min, c.blob_radius_max);
  return e;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable convolution, clamp-to-edge.
std::vector<double> blur(const std::vector<double>& in, Extent e, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(in.size());
  std::vector<double> out(in.size());
  for (int row = 0; row < e.height; ++row) {
    for (int col = 0; col < e.width; ++col) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int c = std::clamp(col + j, 0, e.width - 1);
        acc += k[static_cast<std::size_t>(j + r)] *
               in[static_cast<std::size_t>(row) * e.width + c];
      }
      tmp[static_cast<std::size_t>(row) * e.width + col] = acc;
    }
  }
  for (int row = 0; row < e.height; ++row) {
    for (int col = 0; col < e.width; ++col) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int rr = std::clamp(row + j, 0, e.height - 1);
        acc += k[static_cast<std::size_t>(j + r)] *
               tmp[static_cast<std::size_t>(rr) * e.width + col];
      }
      out[static_cast<std::size_t>(row) * e.width + col] = acc;
    }
  }
  return out;
}

void check_rate(double v, const char* name, std::size_t model) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + " of model " +
                      std::to_string(model + 1) + " must be in [0,1]");
  }
}

}  // namespace

std::int64_t SplitMix64::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  const auto span = static_cast<double>(hi - lo + 1);
  const auto v = lo + static_cast<std::int64_t>(std::floor(uniform() * span));
  return std::min(v, hi);
}

SplitMix64 SplitMix64::substream(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) noexcept {
  SplitMix64 mix(seed);
  std::uint64_t s = mix.next();
  s ^= SplitMix64(a ^ 0xD1B54A32D192ED03ULL).next();
  s = SplitMix64(s).next();
  s ^= SplitMix64(b ^ 0x8CB92BA72F3D8DD7ULL).next();
  return SplitMix64(SplitMix64(s).next());
}

bool Ellipse::contains(int row, int col) const noexcept {
  const double dr = (row - center_row) / radius_row;
  const double dc = (col - center_col) / radius_col;
  return dr * dr + dc * dc <= 1.0;
}

void SynthConfig::validate() const {
  if (width <= 0 || height <= 0) throw DomainError("raster size must be positive");
  if (n_slices <= 0) throw DomainError("slice count must be positive");
  if (profiles.size() < 2) throw DomainError("need at least two models");
  if (blob_count_min < 0 || blob_count_max < blob_count_min) {
    throw DomainError("blob count range is empty or negative");
  }
  if (!(blob_radius_min > 0.0 && blob_radius_min <= blob_radius_max &&
        blob_radius_max <= 0.5 * std::min(width, height))) {
    throw DomainError(
        "blob radius range must satisfy 0 < min <= max <= half the raster");
  }
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    check_rate(profiles[k].miss_rate, "miss_rate", k);
    check_rate(profiles[k].clutter_rate, "clutter_rate", k);
    if (!(profiles[k].blur_sigma >= 0.0 && std::isfinite(profiles[k].blur_sigma))) {
      throw DomainError("blur_sigma of model " + std::to_string(k + 1) +
                        " must be non-negative");
    }
  }
}

Mask rasterize(Extent extent, std::span<const Ellipse> blobs) {
  std::vector<std::uint8_t> bits(extent.pixel_count(), 0);
  for (int r = 0; r < extent.height; ++r) {
    for (int c = 0; c < extent.width; ++c) {
      const bool hit = std::any_of(blobs.begin(), blobs.end(),
                                   [&](const Ellipse& e) { return e.contains(r, c); });
      bits[static_cast<std::size_t>(r) * extent.width + c] = hit ? 1 : 0;
    }
  }
  return Mask(extent, std::move(bits));
}

ProbMap render_probability(Extent extent, std::span<const Ellipse> blobs,
                           double blur_sigma) {
  const Mask mask = rasterize(extent, blobs);
  std::vector<double> v(mask.bits().begin(), mask.bits().end());
  if (blur_sigma > 0.0) v = blur(v, extent, blur_sigma);
  std::vector<float> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) {
    return static_cast<float>(std::clamp(x, 0.0, 1.0));
  });
  return ProbMap(extent, std::move(out));
}

Slice generate_slice(const SynthConfig& config, int index) {
  config.validate();
  const Extent extent{config.width, config.height};
  const auto slice = static_cast<std::uint64_t>(index);

  SplitMix64 truth_rng =
      SplitMix64::substream(config.seed, slice, kTruthStream);
  const auto count = truth_rng.uniform_int(config.blob_count_min,
                                           config.blob_count_max);
  std::vector<Ellipse> blobs;
  for (std::int64_t i = 0; i < count; ++i) {
    blobs.push_back(random_blob(truth_rng, config));
  }

  Slice out{rasterize(extent, blobs), {}};
  for (std::size_t k = 0; k < config.profiles.size(); ++k) {
    const ErrorProfile& p = config.profiles[k];
    SplitMix64 rng = SplitMix64::substream(config.seed, slice, k + 1);
    std::vector<Ellipse> seen;
    for (const auto& b : blobs) {
      // Both draws happen for every blob so one rate does not shift the
      // stream consumed by the other.
      const bool missed = rng.bernoulli(p.miss_rate);
      const bool clutter = rng.bernoulli(p.clutter_rate);
      const Ellipse spurious = random_blob(rng, config);
      if (!missed) seen.push_back(b);
      if (clutter) seen.push_back(spurious);
    }
    out.maps.push_back(render_probability(extent, seen, p.blur_sigma));
  }
  return out;
}

std::vector<Slice> generate(const SynthConfig& config) {
  config.validate();
  std::vector<Slice> out;
  out.reserve(static_cast<std::size_t>(config.n_slices));
  for (int i = 0; i < config.n_slices; ++i) {
    out.push_back(generate_slice(config, i));
  }
  return out;
}

}  // namespace segfusion
