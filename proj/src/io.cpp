#include "segfusion/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "segfusion/error.hpp"

namespace segfusion::io {

namespace {

using Kind = ParseError::Kind;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Netpbm header tokenizer: whitespace separated, '#' comments to end of line.
class HeaderCursor {
 public:
  HeaderCursor(std::string_view bytes, std::string_view origin)
      : bytes_(bytes), origin_(origin) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.substr(0, magic.size()) != magic) {
      fail(Kind::kBadMagic, 0, "expected magic '" + std::string(magic) + "'");
    }
    pos_ = magic.size();
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      fail(Kind::kBadMagic, pos_, "magic must be followed by whitespace");
    }
  }

  std::string_view token(const char* what) {
    skip();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') {
      ++pos_;
    }
    if (start == pos_) {
      fail(pos_ >= bytes_.size() ? Kind::kTruncated : Kind::kBadHeader, start,
           std::string("missing ") + what);
    }
    return bytes_.substr(start, pos_ - start);
  }

  int positive_int(const char* what) {
    const std::size_t at = next_token_offset();
    const auto t = token(what);
    int v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || v <= 0) {
      fail(Kind::kBadHeader, at,
           std::string(what) + " must be a positive integer, got '" +
               std::string(t) + "'");
    }
    return v;
  }

  double real(const char* what) {
    const std::size_t at = next_token_offset();
    const auto t = token(what);
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v)) {
      fail(Kind::kBadHeader, at,
           std::string(what) + " must be a real number, got '" +
               std::string(t) + "'");
    }
    return v;
  }

  /// Exactly one whitespace byte separates the header from the payload.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size()) fail(Kind::kTruncated, pos_, "header ends early");
    if (!is_space(bytes_[pos_])) {
      fail(Kind::kBadHeader, pos_, "expected whitespace before payload");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(Kind kind, std::size_t at, const std::string& what) const {
    throw ParseError(kind, std::string(origin_), at, what);
  }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t next_token_offset() {
    skip();
    return pos_;
  }

  std::string_view bytes_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

void check_payload(const HeaderCursor& cur, std::string_view bytes,
                   std::size_t start, std::size_t expected) {
  const std::size_t have = bytes.size() - std::min(start, bytes.size());
  if (have < expected) {
    cur.fail(Kind::kTruncated, bytes.size(),
             "payload has " + std::to_string(have) + " bytes, expected " +
                 std::to_string(expected));
  }
  if (have > expected) {
    cur.fail(Kind::kBadValue, start + expected,
             std::to_string(have - expected) + " trailing bytes after payload");
  }
}

std::uint32_t load_le32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(p[i]);
  }
  return v;
}

void store_le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

// CSV: unquoted fields, '\n' or "\r\n" line ends, trailing blank lines ignored.
struct CsvLine {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<CsvLine> split_csv(std::string_view text, bool skip_comments) {
  std::vector<CsvLine> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++number;
    start = end + 1;
    if (line.empty()) continue;
    if (skip_comments && line.front() == '#') continue;
    lines.push_back({number, split_fields(line)});
  }
  return lines;
}

double parse_real(const std::string& field, std::string_view origin,
                  std::size_t line) {
  double v = 0;
  const char* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || p != end) {
    throw ParseError(Kind::kBadValue, std::string(origin), line,
                     "not a number: '" + field + "'");
  }
  return v;
}

std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string weight_header(std::size_t n) {
  std::string out;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) out += ',';
    out += "w_" + std::to_string(k + 1);
  }
  return out;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError(path.string(), "write failed");
}

// --- PGM ------------------------------------------------------------------

std::string encode_mask(const Mask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " +
                    std::to_string(mask.height()) + "\n255\n";
  out.reserve(out.size() + mask.bits().size());
  for (auto b : mask.bits()) out.push_back(b ? '\xFF' : '\0');
  return out;
}

Mask decode_mask(std::string_view bytes, std::string_view origin) {
  HeaderCursor cur(bytes, origin);
  cur.expect_magic("P5");
  const int w = cur.positive_int("width");
  const int h = cur.positive_int("height");
  const int maxval = cur.positive_int("maxval");
  if (maxval != 255) {
    cur.fail(Kind::kUnsupported, 0,
             "maxval must be 255, got " + std::to_string(maxval));
  }
  const std::size_t start = cur.payload_start();
  const Extent extent{w, h};
  check_payload(cur, bytes, start, extent.pixel_count());
  std::vector<std::uint8_t> bits(extent.pixel_count());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const auto v = static_cast<unsigned char>(bytes[start + i]);
    if (v != 0 && v != 255) {
      cur.fail(Kind::kInvalidPixel, start + i,
               "pixel (" + std::to_string(i / w) + "," +
                   std::to_string(i % w) + ") has value " + std::to_string(v) +
                   ", expected 0 or 255");
    }
    bits[i] = v ? 1 : 0;
  }
  return Mask(extent, std::move(bits));
}

Mask read_mask(const fs::path& path) {
  return decode_mask(read_file(path), path.string());
}

void write_mask(const Mask& mask, const fs::path& path) {
  write_file(path, encode_mask(mask));
}

// --- PFM ------------------------------------------------------------------

std::string encode_probmap(const ProbMap& map) {
  std::string out = "Pf\n" + std::to_string(map.width()) + " " +
                    std::to_string(map.height()) + "\n-1.0\n";
  out.reserve(out.size() + 4 * map.values().size());
  for (int r = map.height() - 1; r >= 0; --r) {
    for (int c = 0; c < map.width(); ++c) {
      store_le32(out, std::bit_cast<std::uint32_t>(map.at(r, c)));
    }
  }
  return out;
}

ProbMap decode_probmap(std::string_view bytes, std::string_view origin) {
  HeaderCursor cur(bytes, origin);
  cur.expect_magic("Pf");
  const int w = cur.positive_int("width");
  const int h = cur.positive_int("height");
  const double scale = cur.real("scale");
  if (scale > 0.0) {
    cur.fail(Kind::kUnsupported, 0,
             "positive scale (big-endian samples) is not supported");
  }
  if (scale == 0.0) cur.fail(Kind::kBadHeader, 0, "scale must be non-zero");
  const std::size_t start = cur.payload_start();
  const Extent extent{w, h};
  check_payload(cur, bytes, start, 4 * extent.pixel_count());
  std::vector<float> values(extent.pixel_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t at = start + 4 * i;
    const float v = std::bit_cast<float>(load_le32(bytes.data() + at));
    const std::size_t file_row = i / w;
    const std::size_t row = static_cast<std::size_t>(h) - 1 - file_row;
    const std::size_t col = i % w;
    if (!(v >= 0.0F && v <= 1.0F)) {
      cur.fail(Kind::kInvalidPixel, at,
               "pixel (" + std::to_string(row) + "," + std::to_string(col) +
                   ") index " + std::to_string(row * w + col) + " has value " +
                   std::to_string(v) + " outside [0,1]");
    }
    values[row * w + col] = v;
  }
  return ProbMap(extent, std::move(values));
}

ProbMap read_probmap(const fs::path& path) {
  return decode_probmap(read_file(path), path.string());
}

void write_probmap(const ProbMap& map, const fs::path& path) {
  write_file(path, encode_probmap(map));
}

// --- manifest ---------------------------------------------------------------

Manifest parse_manifest(std::string_view text, std::string_view origin) {
  const auto lines = split_csv(text, false);
  if (lines.empty()) {
    throw ParseError(Kind::kBadHeader, std::string(origin), 1, "empty manifest");
  }
  const auto& header = lines.front();
  if (header.fields.size() < 3 || header.fields[0] != "slice_id" ||
      header.fields[1] != "truth") {
    throw ParseError(Kind::kBadHeader, std::string(origin), header.number,
                     "header must be slice_id,truth,<model>,...");
  }
  Manifest m;
  m.model_names.assign(header.fields.begin() + 2, header.fields.end());
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.fields.size() != header.fields.size()) {
      throw ParseError(Kind::kRaggedRow, std::string(origin), line.number,
                       "row has " + std::to_string(line.fields.size()) +
                           " fields, header has " +
                           std::to_string(header.fields.size()));
    }
    if (!seen.insert(line.fields[0]).second) {
      throw ParseError(Kind::kDuplicateId, std::string(origin), line.number,
                       "duplicate slice_id '" + line.fields[0] + "'");
    }
    ManifestEntry e{line.fields[0], line.fields[1], {}};
    for (std::size_t k = 2; k < line.fields.size(); ++k) {
      e.models.emplace_back(line.fields[k]);
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string format_manifest(const Manifest& manifest) {
  std::string out = "slice_id,truth";
  for (const auto& n : manifest.model_names) out += "," + n;
  out += '\n';
  for (const auto& e : manifest.entries) {
    out += e.slice_id + "," + e.truth.generic_string();
    for (const auto& p : e.models) out += "," + p.generic_string();
    out += '\n';
  }
  return out;
}

Manifest read_manifest(const fs::path& path) {
  Manifest m = parse_manifest(read_file(path), path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](fs::path& p, std::size_t row) {
    if (p.is_relative()) p = base / p;
    if (!fs::is_regular_file(p)) {
      throw ParseError(Kind::kMissingFile, path.string(), row,
                       "missing file " + p.string());
    }
  };
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    // Header is line 1; rows follow (blank lines are not counted here).
    resolve(m.entries[i].truth, i + 2);
    for (auto& p : m.entries[i].models) resolve(p, i + 2);
  }
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_file(path, format_manifest(manifest));
}

std::vector<Slice> load_slices(const Manifest& manifest) {
  std::vector<Slice> slices;
  slices.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Slice s{read_mask(e.truth), {}};
    for (const auto& p : e.models) s.maps.push_back(read_probmap(p));
    for (const auto& m : s.maps) {
      require_same_extent(s.truth.extent(), m.extent(),
                          ("slice " + e.slice_id).c_str());
    }
    slices.push_back(std::move(s));
  }
  return slices;
}

// --- reports ----------------------------------------------------------------

std::string format_fixed4(double value) {
  // glibc printf rounds the exact binary value, ties to even.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

Report make_report(std::vector<ReportRow> slices, const ConfusionCounts& pooled) {
  Report r;
  r.aggregate = overlap_metrics(pooled);
  std::vector<double> hd;
  hd.reserve(slices.size());
  for (const auto& s : slices) hd.push_back(s.metrics.hd95);
  r.aggregate.hd95 = aggregate_h(hd);
  r.slices = std::move(slices);
  return r;
}

std::string format_report_row(std::string_view id, const MetricsRecord& m) {
  return std::string(id) + "," + format_fixed4(m.iou) + "," +
         format_fixed4(m.precision) + "," + format_fixed4(m.recall) + "," +
         format_fixed4(m.f1) + "," + format_fixed4(m.hd95) + "\n";
}

std::string format_report(const Report& report) {
  std::string out = "id,iou,precision,recall,f1,hd95\n";
  for (const auto& row : report.slices) out += format_report_row(row.id, row.metrics);
  out += format_report_row(kAggregateId, report.aggregate);
  return out;
}

Report parse_report(std::string_view text, std::string_view origin) {
  const auto lines = split_csv(text, false);
  if (lines.empty() ||
      lines.front().fields !=
          std::vector<std::string>{"id", "iou", "precision", "recall", "f1", "hd95"}) {
    throw ParseError(Kind::kBadHeader, std::string(origin), 1,
                     "header must be id,iou,precision,recall,f1,hd95");
  }
  Report r;
  bool have_aggregate = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (l.fields.size() != 6) {
      throw ParseError(Kind::kRaggedRow, std::string(origin), l.number,
                       "expected 6 fields");
    }
    if (have_aggregate) {
      throw ParseError(Kind::kBadValue, std::string(origin), l.number,
                       "rows after the aggregate row");
    }
    MetricsRecord m{parse_real(l.fields[1], origin, l.number),
                    parse_real(l.fields[2], origin, l.number),
                    parse_real(l.fields[3], origin, l.number),
                    parse_real(l.fields[4], origin, l.number),
                    parse_real(l.fields[5], origin, l.number)};
    if (l.fields[0] == kAggregateId) {
      r.aggregate = m;
      have_aggregate = true;
    } else {
      r.slices.push_back({l.fields[0], m});
    }
  }
  if (!have_aggregate) {
    throw ParseError(Kind::kTruncated, std::string(origin),
                     lines.back().number, "missing AGGREGATE row");
  }
  return r;
}

void write_report(const Report& report, const fs::path& path) {
  write_file(path, format_report(report));
}

// --- grid table -------------------------------------------------------------

std::string format_grid_table(const GridSearchResult& result) {
  std::string out = weight_header(result.n_models) + ",objective,best\n";
  for (std::size_t i = 0; i < result.table.size(); ++i) {
    const auto& e = result.table[i];
    out += e.weights.to_string() + "," + shortest(e.objective) + "," +
           (i == result.best_index ? "1" : "0") + "\n";
  }
  return out;
}

GridSearchResult parse_grid_table(std::string_view text, std::uint32_t denominator,
                                  std::string_view origin) {
  const auto lines = split_csv(text, false);
  if (lines.empty() || lines.front().fields.size() < 4) {
    throw ParseError(Kind::kBadHeader, std::string(origin), 1,
                     "header must be w_1,...,w_N,objective,best");
  }
  const auto& header = lines.front().fields;
  const std::size_t n = header.size() - 2;
  std::string expected = weight_header(n) + ",objective,best";
  if (split_fields(expected) != header) {
    throw ParseError(Kind::kBadHeader, std::string(origin), 1,
                     "header must be " + expected);
  }
  GridSearchResult r;
  r.n_models = n;
  r.denominator = denominator;
  std::size_t flagged = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (l.fields.size() != header.size()) {
      throw ParseError(Kind::kRaggedRow, std::string(origin), l.number,
                       "expected " + std::to_string(header.size()) + " fields");
    }
    std::vector<std::uint32_t> num;
    try {
      for (std::size_t k = 0; k < n; ++k) {
        num.push_back(parse_grid_weight(l.fields[k], denominator));
      }
      r.table.push_back({WeightVector(std::move(num), denominator),
                         parse_real(l.fields[n], origin, l.number)});
    } catch (const DomainError& e) {
      throw ParseError(Kind::kBadValue, std::string(origin), l.number, e.what());
    }
    if (l.fields[n + 1] == "1") {
      ++flagged;
      r.best_index = r.table.size() - 1;
    } else if (l.fields[n + 1] != "0") {
      throw ParseError(Kind::kBadValue, std::string(origin), l.number,
                       "best flag must be 0 or 1");
    }
  }
  if (r.table.empty()) {
    throw ParseError(Kind::kTruncated, std::string(origin), 1, "no rows");
  }
  if (flagged != 1) {
    throw ParseError(Kind::kBadValue, std::string(origin), 1,
                     "exactly one row must be flagged best, found " +
                         std::to_string(flagged));
  }
  return r;
}

void write_grid_table(const GridSearchResult& result, const fs::path& path) {
  write_file(path, format_grid_table(result));
}

GridSearchResult read_grid_table(const fs::path& path, std::uint32_t denominator) {
  return parse_grid_table(read_file(path), denominator, path.string());
}

std::string format_best_weights(const GridSearchResult& result,
                                std::span<const std::string> model_names,
                                Objective objective) {
  const WeightVector& w = result.best();
  std::string out = "weights=" + w.to_string() + "\n";
  out += "denominator=" + std::to_string(result.denominator) + "\n";
  out += "objective=" + std::string(to_string(objective)) + "\n";
  out += "best_objective=" + shortest(result.best_objective()) + "\n";
  for (std::size_t k = 0; k < w.size(); ++k) {
    out += "w_" + std::to_string(k + 1) + "=" + w.format_weight(k);
    if (k < model_names.size()) out += "  # " + model_names[k];
    out += "\n";
  }
  return out;
}

void write_best_weights(const GridSearchResult& result,
                        std::span<const std::string> model_names,
                        Objective objective, const fs::path& path) {
  write_file(path, format_best_weights(result, model_names, objective));
}

WeightVector read_best_weights(const fs::path& path, std::uint32_t denominator) {
  const std::string text = read_file(path);
  std::size_t line_no = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.rfind("weights=", 0) == 0) {
      try {
        return WeightVector::parse(std::string_view(line).substr(8), denominator);
      } catch (const DomainError& e) {
        throw ParseError(Kind::kBadValue, path.string(), line_no, e.what());
      }
    }
  }
  throw ParseError(Kind::kBadValue, path.string(), line_no, "no weights= entry");
}

// --- heatmaps ---------------------------------------------------------------

std::string format_heatmap(const HeatmapMatrix& m) {
  auto grid = [&](std::uint32_t n) {
    return WeightVector({n, m.denominator - n}, m.denominator).format_weight(0);
  };
  const std::string xs = "w_" + std::to_string(m.x_index + 1);
  const std::string ys = "w_" + std::to_string(m.y_index + 1);
  std::string out = "# fixed=w_" + std::to_string(m.fixed_index + 1) + ":" +
                    grid(m.fixed_numerator) + " implied=w_" +
                    std::to_string(m.implied_index + 1) + " argmax=" + xs + ":" +
                    grid(m.argmax_x) + "," + ys + ":" + grid(m.argmax_y) +
                    " z=" + format_fixed4(m.argmax_z) + "\n";
  out += ys + "\\" + xs;
  for (std::uint32_t x = 0; x <= m.denominator; ++x) out += "," + grid(x);
  out += "\n";
  for (std::uint32_t y = 0; y <= m.denominator; ++y) {
    out += grid(y);
    for (std::uint32_t x = 0; x <= m.denominator; ++x) {
      out += ',';
      if (const auto& cell = m.cells[y][x]) out += format_fixed4(*cell);
    }
    out += "\n";
  }
  return out;
}

void write_heatmap(const HeatmapMatrix& matrix, const fs::path& path) {
  write_file(path, format_heatmap(matrix));
}

std::string format_heatmap_summary(std::span<const HeatmapMatrix> panels) {
  std::string out = weight_header(4) + ",z\n";
  for (const auto& p : panels) {
    out += p.weights_at(p.argmax_x, p.argmax_y).to_string() + "," +
           format_fixed4(p.argmax_z) + "\n";
  }
  return out;
}

void write_heatmap_summary(std::span<const HeatmapMatrix> panels,
                           const fs::path& path) {
  write_file(path, format_heatmap_summary(panels));
}

}  // namespace segfusion::io
