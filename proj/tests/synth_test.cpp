#include "segfusion/synth.hpp"

#include <gtest/gtest.h>

#include "segfusion/error.hpp"
#include "segfusion/metrics.hpp"

namespace segfusion {
namespace {

TEST(SplitMix64, ReferenceSequence) {
  // Published reference outputs for seed 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, UniformIntStaysInRange) {
  SplitMix64 rng(42);
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.uniform_int(-3, 5);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 5);
  }
}

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.width = 24;
  c.height = 20;
  c.n_slices = 3;
  c.blob_radius_min = 2.0;
  c.blob_radius_max = 6.0;
  return c;
}

TEST(Generate, NoiselessModelsReproduceTruth) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& s : generate(small_config(seed))) {
      for (const auto& m : s.maps) {
        ASSERT_EQ(binarize(m, 0.5), s.truth);
        EXPECT_EQ(slice_metrics(binarize(m, 0.5), s.truth).iou, 1.0);
      }
    }
  }
}

TEST(Generate, SameSeedSameOutput) {
  auto c = small_config(99);
  c.profiles = {{0.3, 0.2, 1.0}, {0.1, 0.5, 0.0}, {0.0, 0.0, 2.5}};
  const auto a = generate(c);
  const auto b = generate(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].truth, b[i].truth);
    EXPECT_EQ(a[i].maps, b[i].maps);
  }
  c.seed = 100;
  EXPECT_NE(generate(c)[0].truth, a[0].truth);
}

TEST(Generate, SliceDependsOnlyOnSeedAndIndex) {
  auto c = small_config(5);
  const auto all = generate(c);
  EXPECT_EQ(generate_slice(c, 2).truth, all[2].truth);
  c.n_slices = 10;
  EXPECT_EQ(generate(c)[1].maps, all[1].maps);
}

TEST(Generate, ProbabilitiesInUnitInterval) {
  auto c = small_config(8);
  c.profiles = {{0.5, 0.5, 0.7}, {0.2, 0.9, 3.0}};
  for (const auto& s : generate(c)) {
    for (const auto& m : s.maps) {
      for (float v : m.values()) {
        ASSERT_GE(v, 0.0F);
        ASSERT_LE(v, 1.0F);
      }
    }
  }
}

TEST(Generate, ErrorModesHaveTheirEffect) {
  auto c = small_config(21);
  c.n_slices = 20;
  c.blob_count_min = 2;
  c.blob_count_max = 4;
  c.profiles = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  for (const auto& s : generate(c)) {
    const auto missed = confusion(binarize(s.maps[0]), s.truth);
    EXPECT_EQ(missed.tp + missed.fp, 0u);  // every blob dropped
    const auto clutter = confusion(binarize(s.maps[1]), s.truth);
    EXPECT_EQ(clutter.fn, 0u);  // all truth kept, extras allowed
  }
}

TEST(Generate, ComplementaryMissesFuseToMore) {
  // Two fixed blobs; each model misses a different one.
  const Extent e{20, 12};
  const Ellipse left{5.0, 4.0, 3.0, 3.0};
  const Ellipse right{6.0, 15.0, 2.5, 3.5};
  const std::vector<Ellipse> both = {left, right};
  const Mask truth = rasterize(e, both);
  const std::vector<ProbMap> maps = {render_probability(e, std::vector{left}, 0.0),
                                     render_probability(e, std::vector{right}, 0.0)};
  const auto tp1 = confusion(binarize(maps[0]), truth).tp;
  const auto tp2 = confusion(binarize(maps[1]), truth).tp;
  const auto fused = confusion(binarize(fuse(maps, WeightVector({5, 5}, 10))), truth);
  EXPECT_GT(fused.tp, std::max(tp1, tp2));
  EXPECT_EQ(fused.tp, truth.foreground_count());
}

TEST(Generate, EqualWeightFusionNeverLosesTruePixels) {
  auto c = small_config(0);
  c.profiles = {{0.5, 0.0, 0.0}, {0.5, 0.0, 0.0}};
  c.blob_count_min = 2;
  c.blob_count_max = 5;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    c.seed = seed;
    for (const auto& s : generate(c)) {
      const auto t1 = confusion(binarize(s.maps[0]), s.truth).tp;
      const auto t2 = confusion(binarize(s.maps[1]), s.truth).tp;
      const auto tf = confusion(binarize(fuse(s.maps, WeightVector({1, 1}, 2))), s.truth).tp;
      ASSERT_GE(tf, std::max(t1, t2));
    }
  }
}

TEST(Generate, BlurSoftensBoundaries) {
  const Extent e{16, 16};
  const std::vector<Ellipse> blob = {{8.0, 8.0, 4.0, 4.0}};
  const ProbMap soft = render_probability(e, blob, 1.5);
  bool fractional = false;
  for (float v : soft.values()) fractional |= (v > 0.0F && v < 1.0F);
  EXPECT_TRUE(fractional);
  EXPECT_GT(soft.at(8, 8), 0.5F);
  EXPECT_LT(soft.at(0, 0), 0.5F);
}

TEST(SynthConfig, Validation) {
  auto c = small_config(1);
  c.profiles = {{1.5, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config(1);
  c.profiles.resize(1);
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config(1);
  c.blob_radius_max = 50.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config(1);
  c.blob_count_min = 4;
  c.blob_count_max = 2;
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config(1);
  c.profiles[0].blur_sigma = -1.0;
  EXPECT_THROW(generate(c), DomainError);
}

}  // namespace
}  // namespace segfusion
