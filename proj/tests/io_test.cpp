#include "segfusion/io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include <unistd.h>

#include "oracle.hpp"
#include "segfusion/error.hpp"

namespace segfusion::io {
namespace {

using Kind = ParseError::Kind;

template <typename F>
ParseError parse_error_of(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError thrown";
  return ParseError(Kind::kBadValue, "", 0, "");
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() /
                   ("segfusion_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

TEST(Pgm, AllForegroundBytes) {
  const Mask m({2, 2}, {1, 1, 1, 1});
  EXPECT_EQ(encode_mask(m), std::string("P5\n2 2\n255\n\xFF\xFF\xFF\xFF"));
}

TEST(Pgm, RoundTripRandomMasks) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Mask m = oracle::random_mask(rng, 1 + rng() % 17, 1 + rng() % 13, 0.4);
    ASSERT_EQ(decode_mask(encode_mask(m)), m);
  }
  const Mask m = oracle::random_mask(rng, 9, 4, 0.5);
  write_mask(m, scratch("m.pgm"));
  EXPECT_EQ(read_mask(scratch("m.pgm")), m);
}

TEST(Pgm, AcceptsCommentsAndWhitespace) {
  const std::string bytes = std::string("P5 # made by hand\n 2\t1\n#c\n255\n") + '\0' + '\xFF';
  EXPECT_EQ(decode_mask(bytes), Mask({2, 1}, {0, 1}));
}

TEST(Pgm, InvalidPixelNamesOffset) {
  const std::string bytes = std::string("P5\n2 1\n255\n\xFF") + '\x07';
  const auto e = parse_error_of([&] { decode_mask(bytes); });
  EXPECT_EQ(e.kind(), Kind::kInvalidPixel);
  EXPECT_EQ(e.position(), 12u);
}

TEST(Pgm, MalformedInputs) {
  EXPECT_EQ(parse_error_of([] { decode_mask("P6\n1 1\n255\n\xFF"); }).kind(), Kind::kBadMagic);
  EXPECT_EQ(parse_error_of([] { decode_mask("P5\n2 x\n255\n"); }).kind(), Kind::kBadHeader);
  EXPECT_EQ(parse_error_of([] { decode_mask("P5\n2 2\n1\n\x01\x01\x01\x01"); }).kind(),
            Kind::kUnsupported);
  const auto t = parse_error_of([] { decode_mask("P5\n2 2\n255\n\xFF\xFF"); });
  EXPECT_EQ(t.kind(), Kind::kTruncated);
  EXPECT_EQ(t.position(), 13u);
  EXPECT_EQ(parse_error_of([] { decode_mask("P5\n2 2"); }).kind(), Kind::kTruncated);
  EXPECT_EQ(parse_error_of([] { decode_mask("P5\n1 1\n255\n\xFF\xFF"); }).kind(),
            Kind::kBadValue);
  EXPECT_THROW(read_mask(scratch("does_not_exist.pgm")), IoError);
}

TEST(Pfm, HalfEncodesLittleEndian) {
  const ProbMap m({1, 1}, {0.5F});
  EXPECT_EQ(encode_probmap(m), std::string("Pf\n1 1\n-1.0\n\x00\x00\x00\x3F", 16));
}

TEST(Pfm, RowsAreStoredBottomUp) {
  const ProbMap m({1, 2}, {0.25F, 0.75F});  // top, bottom
  const std::string bytes = encode_probmap(m);
  float first = 0;
  std::memcpy(&first, bytes.data() + 12, 4);
  EXPECT_EQ(first, 0.75F);
  EXPECT_EQ(decode_probmap(bytes).at(0, 0), 0.25F);
}

TEST(Pfm, RoundTripIsBitExact) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const Extent e{static_cast<int>(1 + rng() % 11), static_cast<int>(1 + rng() % 9)};
    std::vector<float> v(e.pixel_count());
    for (auto& x : v) {
      // Arbitrary bit patterns inside [0,1], including subnormals.
      do {
        const auto bits = static_cast<std::uint32_t>(rng()) & 0x3FFFFFFFu;
        std::memcpy(&x, &bits, 4);
      } while (!(x <= 1.0F));
    }
    const ProbMap m(e, v);
    ASSERT_EQ(decode_probmap(encode_probmap(m)), m);
  }
}

TEST(Pfm, Rejections) {
  const auto bad = parse_error_of([] {
    decode_probmap(std::string("Pf\n2 1\n-1.0\n\x00\x00\x00\x00\x00\x00\xC0\x3F", 20));
  });
  EXPECT_EQ(bad.kind(), Kind::kInvalidPixel);  // 1.5
  EXPECT_NE(std::string(bad.what()).find("index 1"), std::string::npos);
  EXPECT_EQ(parse_error_of([] {
              decode_probmap(std::string("Pf\n1 1\n1.0\n\x00\x00\x00\x3F", 15));
            }).kind(),
            Kind::kUnsupported);
  EXPECT_EQ(parse_error_of([] { decode_probmap("PF\n1 1\n-1.0\n0000"); }).kind(),
            Kind::kBadMagic);
  EXPECT_EQ(parse_error_of([] { decode_probmap(std::string("Pf\n1 1\n-1.0\n\x00\x00", 14)); })
                .kind(),
            Kind::kTruncated);
}

TEST(Manifest, ParsesModelOrder) {
  const auto m = parse_manifest(
      "slice_id,truth,PAN,FPN,Unet,DeepLabv3+\n"
      "a,t/a.pgm,p/a.pfm,f/a.pfm,u/a.pfm,d/a.pfm\n"
      "b,t/b.pgm,p/b.pfm,f/b.pfm,u/b.pfm,d/b.pfm\n");
  EXPECT_EQ(m.model_names, (std::vector<std::string>{"PAN", "FPN", "Unet", "DeepLabv3+"}));
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[1].models[2], fs::path("u/b.pfm"));
}

TEST(Manifest, Errors) {
  const auto dup = parse_error_of([] {
    parse_manifest("slice_id,truth,A,B\nx,t,a,b\nx,t,a,b\n");
  });
  EXPECT_EQ(dup.kind(), Kind::kDuplicateId);
  EXPECT_EQ(dup.position(), 3u);
  EXPECT_EQ(parse_error_of([] { parse_manifest("slice_id,truth,A,B\nx,t,a\n"); }).kind(),
            Kind::kRaggedRow);
  EXPECT_EQ(parse_error_of([] { parse_manifest("id,truth,A\n"); }).kind(), Kind::kBadHeader);

  const fs::path path = scratch("manifest_missing.csv");
  write_file(path, "slice_id,truth,A,B\nx,nowhere.pgm,a.pfm,b.pfm\n");
  EXPECT_EQ(parse_error_of([&] { read_manifest(path); }).kind(), Kind::kMissingFile);
}

TEST(Manifest, RoundTripAndResolution) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Manifest m;
    const std::size_t n = 2 + rng() % 4;
    for (std::size_t k = 0; k < n; ++k) m.model_names.push_back("m" + std::to_string(k));
    for (std::size_t i = 0; i < rng() % 6; ++i) {
      ManifestEntry e{"s" + std::to_string(i), "truth/s" + std::to_string(i) + ".pgm", {}};
      for (std::size_t k = 0; k < n; ++k) e.models.emplace_back("m/" + std::to_string(rng() % 100));
      m.entries.push_back(e);
    }
    ASSERT_EQ(parse_manifest(format_manifest(m)), m);
  }

  const fs::path dir = scratch("resolve");
  fs::create_directories(dir);
  write_mask(Mask::empty({2, 2}), dir / "t.pgm");
  write_probmap(ProbMap::filled({2, 2}, 0.1F), dir / "a.pfm");
  write_probmap(ProbMap::filled({2, 2}, 0.2F), dir / "b.pfm");
  write_file(dir / "manifest.csv", "slice_id,truth,A,B\r\nx,t.pgm,a.pfm,b.pfm\r\n\r\n");
  const auto m = read_manifest(dir / "manifest.csv");
  EXPECT_EQ(m.entries[0].truth, dir / "t.pgm");
  const auto slices = load_slices(m);
  ASSERT_EQ(slices.size(), 1u);
  EXPECT_EQ(slices[0].maps[1].at(1, 1), 0.2F);
}

TEST(Report, FixedFormattingRoundsHalfToEven) {
  EXPECT_EQ(format_fixed4(0.03125), "0.0312");  // exact binary tie
  EXPECT_EQ(format_fixed4(0.09375), "0.0938");
  EXPECT_EQ(format_fixed4(1.0), "1.0000");
  EXPECT_EQ(format_fixed4(0.0), "0.0000");
  EXPECT_EQ(format_fixed4(92.46043), "92.4604");
}

TEST(Report, TableFourRowRendersExactly) {
  const MetricsRecord m{0.7279, 0.8065, 0.8065, 0.8065, 92.4604};
  EXPECT_EQ(format_report_row(kAggregateId, m),
            "AGGREGATE,0.7279,0.8065,0.8065,0.8065,92.4604\n");
}

TEST(Report, AggregateRow) {
  const MetricsRecord perfect{1, 1, 1, 1, 0};
  const auto r = make_report({{"a", perfect}, {"b", perfect}}, {10, 0, 0, 90});
  EXPECT_EQ(format_report(r),
            "id,iou,precision,recall,f1,hd95\n"
            "a,1.0000,1.0000,1.0000,1.0000,0.0000\n"
            "b,1.0000,1.0000,1.0000,1.0000,0.0000\n"
            "AGGREGATE,1.0000,1.0000,1.0000,1.0000,0.0000\n");

  const ConfusionCounts c{3, 1, 2, 10};
  MetricsRecord one = overlap_metrics(c);
  one.hd95 = 4.0;
  const auto single = make_report({{"s", one}}, c);
  EXPECT_EQ(single.aggregate.iou, one.iou);
  EXPECT_EQ(single.aggregate.f1, one.f1);
  EXPECT_EQ(single.aggregate.hd95, std::log10(5.0));
}

TEST(Report, FormatParseIsStable) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Report r;
    for (std::size_t i = 0; i < rng() % 8; ++i) {
      r.slices.push_back({"slice_" + std::to_string(i),
                          {u(rng), u(rng), u(rng), u(rng), 100 * u(rng)}});
    }
    r.aggregate = {u(rng), u(rng), u(rng), u(rng), 500 * u(rng)};
    const std::string text = format_report(r);
    ASSERT_EQ(format_report(parse_report(text)), text);
  }
  EXPECT_THROW(parse_report("id,iou,precision,recall,f1,hd95\na,1,1,1,1,0\n"), ParseError);
}

GridSearchResult sample_result() {
  GridSearchResult r;
  r.n_models = 4;
  r.denominator = 10;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.6, 0.75);
  for (auto& w : enumerate_simplex(4, 10)) r.table.push_back({w, u(rng)});
  r.best_index = argmax_index(r.table);
  return r;
}

TEST(GridTable, Format) {
  const auto r = sample_result();
  const std::string text = format_grid_table(r);
  EXPECT_EQ(text.substr(0, text.find('\n')), "w_1,w_2,w_3,w_4,objective,best");
  EXPECT_NE(text.find("\n0.1,0.0,0.9,0.0,"), std::string::npos);
  std::size_t rows = 0, flagged = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\n') continue;
    ++rows;
    flagged += text.compare(i - 2, 2, ",1") == 0;
  }
  EXPECT_EQ(rows, 287u);
  EXPECT_EQ(flagged, 1u);
}

TEST(GridTable, RoundTripIsExact) {
  const auto r = sample_result();
  const auto back = parse_grid_table(format_grid_table(r), 10);
  ASSERT_EQ(back.table.size(), r.table.size());
  EXPECT_EQ(back.best_index, r.best_index);
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    ASSERT_EQ(back.table[i].weights, r.table[i].weights);
    ASSERT_EQ(back.table[i].objective, r.table[i].objective);
  }
  EXPECT_THROW(parse_grid_table(format_grid_table(r), 3), ParseError);
}

TEST(Heatmap, CsvLayout) {
  auto r = sample_result();
  const auto m = heatmap(r, 0, 2);
  const std::string text = format_heatmap(m);
  std::vector<std::string> lines;
  for (std::size_t start = 0; start < text.size();) {
    const auto end = text.find('\n', start);
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  ASSERT_EQ(lines.size(), 13u);
  EXPECT_EQ(lines[0].rfind("# fixed=w_1:0.2 implied=w_4 argmax=w_2:", 0), 0u);
  EXPECT_EQ(lines[1], "w_3\\w_2,0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0");
  EXPECT_EQ(lines[2 + 9], "0.9,,,,,,,,,,,");
  EXPECT_EQ(lines[2 + 10], "1.0,,,,,,,,,,,");
  EXPECT_EQ(std::count(lines[2].begin(), lines[2].end(), ','), 11);

  // Putting the optimum on a known cell pins the panel maximum.
  r.best_index = 0;
  for (auto& e : r.table) e.objective = 0.5;
  for (auto& e : r.table) {
    if (e.weights == WeightVector({2, 1, 6, 1}, 10)) e.objective = 0.7279;
  }
  r.best_index = argmax_index(r.table);
  const auto top = heatmap(r, 0, 2);
  // ln(1e-4) / ln(0.9) = 87.417381307... (40-digit evaluation).
  EXPECT_EQ(format_heatmap(top).substr(0, format_heatmap(top).find('\n')),
            "# fixed=w_1:0.2 implied=w_4 argmax=w_2:0.1,w_3:0.6 z=87.4174");
  const std::vector<HeatmapMatrix> panels = {heatmap(r, 0, 0), top};
  const std::string summary = format_heatmap_summary(panels);
  EXPECT_NE(summary.find("\n0.2,0.1,0.6,0.1,87.4174\n"), std::string::npos);
}

}  // namespace
}  // namespace segfusion::io
