#include "segfusion/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "segfusion/error.hpp"

namespace segfusion {
namespace {

using Points = std::vector<Point>;

TEST(Overlap, IouExamples) {
  EXPECT_EQ(iou({5, 0, 0, 0}), 1.0);
  EXPECT_EQ(iou({1, 1, 2, 0}), 0.25);
  EXPECT_EQ(iou({0, 3, 4, 0}), 0.0);
  EXPECT_EQ(iou({0, 0, 0, 9}), 1.0);
}

TEST(Overlap, PrecisionExamples) {
  EXPECT_EQ(precision({3, 1, 0, 0}), 0.75);
  EXPECT_EQ(precision({0, 0, 0, 0}), 1.0);
  EXPECT_EQ(precision({0, 0, 7, 0}), 0.0);
}

TEST(Overlap, RecallExamples) {
  EXPECT_EQ(recall({3, 0, 1, 0}), 0.75);
  EXPECT_EQ(recall({0, 0, 0, 0}), 1.0);
  EXPECT_EQ(recall({2, 0, 0, 0}), 1.0);
  EXPECT_EQ(recall({0, 4, 0, 0}), 0.0);
}

TEST(Overlap, F1Examples) {
  EXPECT_EQ(f1(1.0, 1.0), 1.0);
  EXPECT_EQ(f1(0.5, 0.5), 0.5);
  EXPECT_NEAR(f1(1.0, 0.25), 0.4, 1e-15);
  EXPECT_EQ(f1(0.0, 0.0), 0.0);
}

TEST(Hausdorff, DirectedExamples) {
  const Points ab = {{0, 0}, {3, 4}};
  EXPECT_EQ(directed_hausdorff(ab, ab), 0.0);
  EXPECT_EQ(directed_hausdorff(Points{{0, 0}}, Points{{3, 4}}), 5.0);
  EXPECT_EQ(directed_hausdorff(Points{{0, 0}, {0, 1}}, Points{{0, 0}}), 1.0);
}

TEST(Hausdorff, SymmetricExamples) {
  const Points a = {{0, 0}};
  const Points b = {{0, 0}, {0, 2}};
  EXPECT_EQ(directed_hausdorff(a, b), 0.0);
  EXPECT_EQ(directed_hausdorff(b, a), 2.0);
  EXPECT_EQ(hausdorff(a, b), 2.0);
  EXPECT_EQ(hausdorff(b, b), 0.0);
  EXPECT_NEAR(hausdorff(a, Points{{2, 3}}), std::sqrt(13.0), 1e-12);
  EXPECT_NEAR(hausdorff(a, Points{{2, 3}}), 3.6056, 5e-5);
}

TEST(Hausdorff, EmptySetConvention) {
  const Points none;
  const Points one = {{1, 1}};
  EXPECT_EQ(hausdorff(none, none, 7.0), 0.0);
  EXPECT_EQ(hausdorff(none, one, 7.0), 7.0);
  EXPECT_EQ(hd95(one, none, 7.0), 7.0);
  EXPECT_EQ(hd95(none, none, 7.0), 0.0);
}

TEST(Hd95, TwentyUnitDistances) {
  // Twenty points at distance 1 from the origin (with repeats).
  const Points ring = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  Points a;
  for (int i = 0; i < 20; ++i) a.push_back(ring[i % 4]);
  EXPECT_EQ(hd95(a, Points{{0, 0}}), 1.0);
}

TEST(Hd95, DropsTheOutlierTail) {
  // 19 points on top of B and one far outlier: rank 19 of 20 ignores it.
  Points a(19, Point{0, 0});
  a.push_back({30, 40});
  const Points b = {{0, 0}};
  EXPECT_EQ(hausdorff(a, b), 50.0);
  EXPECT_EQ(hd95(a, b), 0.0);
  // Two outliers out of 20 reach rank 19.
  a[0] = {30, 40};
  EXPECT_EQ(hd95(a, b), 50.0);
}

TEST(NearestRank, IntegerProductsAreExact) {
  EXPECT_EQ(nearest_rank(20, 0.95), 19u);
  EXPECT_EQ(nearest_rank(100, 0.95), 95u);
  EXPECT_EQ(nearest_rank(1, 0.95), 1u);
  EXPECT_EQ(nearest_rank(3, 0.95), 3u);
  EXPECT_EQ(nearest_rank(10, 1.0), 10u);
  for (std::size_t m = 1; m < 2000; ++m) {
    ASSERT_EQ(nearest_rank(m, 0.95), (95 * m + 99) / 100) << m;
  }
  EXPECT_THROW(nearest_rank(4, 0.0), DomainError);
  EXPECT_THROW(nearest_rank(4, 1.01), DomainError);
}

TEST(BoundaryDistances, MatchesBruteForceOnRandomMasks) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 24);
  std::uniform_real_distribution<double> density(0.0, 0.6);
  for (int trial = 0; trial < 1500; ++trial) {
    const int w = dim(rng);
    const int h = dim(rng);
    const Mask p = oracle::random_mask(rng, w, h, density(rng) * density(rng));
    const Mask t = oracle::random_mask(rng, w, h, density(rng));
    const auto fast = boundary_distances(p, t);
    const auto pp = foreground_points(p);
    const auto tp = foreground_points(t);
    const double diag = Extent{w, h}.diagonal();
    ASSERT_NEAR(fast.hausdorff, oracle::brute_hausdorff(tp, pp, diag), 1e-9);
    ASSERT_NEAR(fast.hd95, oracle::brute_hd95(tp, pp, diag), 1e-9);
  }
}

TEST(SliceMetrics, Identity) {
  const Mask m = Mask::from_points({6, 5}, Points{{1, 1}, {4, 3}});
  EXPECT_EQ(slice_metrics(m, m), (MetricsRecord{1, 1, 1, 1, 0}));
}

TEST(SliceMetrics, BothEmpty) {
  const Mask m = Mask::empty({4, 4});
  EXPECT_EQ(slice_metrics(m, m), (MetricsRecord{1, 1, 1, 1, 0}));
}

TEST(SliceMetrics, MissedLesionUsesDiagonal) {
  const Mask truth = Mask::from_points({10, 10}, Points{{4, 4}, {4, 5}});
  const auto r = slice_metrics(Mask::empty({10, 10}), truth);
  EXPECT_EQ(r.iou, 0.0);
  EXPECT_NEAR(r.hd95, std::sqrt(81.0 + 81.0), 1e-12);
  EXPECT_NEAR(r.hd95, 12.7279, 5e-5);
}

TEST(AggregateH, Examples) {
  EXPECT_EQ(aggregate_h(std::vector<double>(5, 0.0)), 0.0);
  EXPECT_EQ(aggregate_h(std::vector<double>{9.0}), 1.0);
  EXPECT_NEAR(aggregate_h(std::vector<double>{9.0, 99.0, 0.0}), 3.0, 1e-12);
  EXPECT_THROW(aggregate_h(std::vector<double>{-1.0}), DomainError);
  EXPECT_THROW(aggregate_h(std::vector<double>{NAN}), DomainError);
}

TEST(AggregateH, AdditiveOverConcatenation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(rng() % 20), b(rng() % 20);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    EXPECT_NEAR(aggregate_h(ab), aggregate_h(a) + aggregate_h(b), 1e-10);
  }
}

TEST(ZTransform, ClosedForms) {
  // 40-digit evaluations: ln(1e-4)/ln(0.9) = 87.4173813071...,
  // ln(0.0199)/ln(0.9) = 37.1774523197...
  EXPECT_NEAR(z_transform(0.7, 0.7), std::log(1e-4) / std::log(0.9), 1e-12);
  EXPECT_NEAR(z_transform(0.7, 0.7), 87.4173813071, 1e-9);
  EXPECT_NEAR(z_transform(0.7, 0.7), 87.4176, 1e-3);
  EXPECT_NEAR(z_transform(0.95 - 0.8999, 0.95), 1.0, 1e-9);
  EXPECT_NEAR(z_transform(0.5 - 0.0198, 0.5), std::log(0.0199) / std::log(0.9), 1e-9);
  EXPECT_NEAR(z_transform(0.5 - 0.0198, 0.5), 37.1774523197, 1e-9);
}

TEST(ZTransform, RejectsValuesAboveMaximum) {
  EXPECT_THROW(z_transform(0.8, 0.7), DomainError);
}

TEST(ZTransform, StrictlyDecreasingInGap) {
  double previous = z_transform(0.9, 0.9);
  for (int i = 1; i <= 900; ++i) {
    const double z = z_transform(0.9 - i * 1e-3, 0.9);
    ASSERT_LT(z, previous);
    previous = z;
  }
}

}  // namespace
}  // namespace segfusion
