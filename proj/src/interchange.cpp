#include "tscal/interchange.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "tscal/metrics.hpp"

namespace tscal {

namespace {

std::string at_line(std::string_view what, std::size_t line) {
  std::string msg(what);
  msg += ", line ";
  msg += std::to_string(line);
  return msg;
}

// Splits on '\n', dropping one trailing empty line and any '\r' before '\n'.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

enum class RealParse { ok, empty, malformed, non_finite };

RealParse parse_real(std::string_view s, double& out) {
  if (s.empty()) return RealParse::empty;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  if (ptr != s.data() + s.size()) return RealParse::malformed;
  if (ec == std::errc::result_out_of_range) return RealParse::non_finite;
  if (ec != std::errc()) return RealParse::malformed;
  return std::isfinite(out) ? RealParse::ok : RealParse::non_finite;
}

void append_sig9(std::string& out, double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%#.9g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

void append_fixed6(std::string& out, double v) {
  char buf[64];
  const int len = std::snprintf(buf, sizeof buf, "%.6f", v);
  out.append(buf, static_cast<std::size_t>(len));
}

void append_optional6(std::string& out, const std::optional<double>& v) {
  if (v) {
    append_fixed6(out, *v);
  } else {
    out += "null";
  }
}

std::string with_path(const std::filesystem::path& path, const std::exception& e) {
  return path.string() + ": " + e.what();
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain types

LabeledLogits::LabeledLogits(std::size_t num_classes, std::vector<int> labels, std::vector<double> logits)
    : num_classes_(num_classes), labels_(std::move(labels)), logits_(std::move(logits)) {
  if (num_classes_ < 2) throw std::invalid_argument("logits need at least 2 classes");
  if (labels_.empty()) throw std::invalid_argument("logits need at least 1 record");
  if (logits_.size() != labels_.size() * num_classes_) {
    throw std::invalid_argument("logit count does not match records x classes");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw std::invalid_argument("label out of range in record " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    if (!std::isfinite(logits_[i])) {
      throw std::invalid_argument("non-finite logit in record " + std::to_string(i / num_classes_));
    }
  }
}

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : GrayImage(width, height, std::vector<double>(width * height, fill)) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_) throw std::invalid_argument("pixel count does not match width x height");
  for (double p : pixels_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("pixel outside [0, 1]");
  }
}

GrayImage GrayImage::crop_rows(std::size_t first_row, std::size_t rows) const {
  if (first_row + rows > height_) throw std::out_of_range("crop exceeds image height");
  const auto begin = pixels_.begin() + static_cast<std::ptrdiff_t>(first_row * width_);
  return GrayImage(width_, rows, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(rows * width_)));
}

void DatasetManifest::validate(std::size_t num_classes) const {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.path.empty()) throw std::invalid_argument("empty path in manifest entry " + std::to_string(i));
    if (!seen.insert(e.path).second) throw std::invalid_argument("duplicate path '" + e.path + "' in manifest");
    if (e.label < 0 || static_cast<std::size_t>(e.label) >= num_classes) {
      throw std::invalid_argument("label out of range in manifest entry " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// Logits CSV

LabeledLogits parse_logits_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].empty()) throw InterchangeError(at_line("missing header", 1));

  const auto header = split_fields(lines[0]);
  if (header.size() < 3 || header[0] != "label") throw InterchangeError(at_line("malformed header", 1));
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (header[k] != "logit_" + std::to_string(k - 1)) throw InterchangeError(at_line("malformed header", 1));
  }
  const std::size_t num_classes = header.size() - 1;

  std::vector<int> labels;
  std::vector<double> logits;
  labels.reserve(lines.size() - 1);
  logits.reserve((lines.size() - 1) * num_classes);

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) throw InterchangeError(at_line("empty line", line_no));
    const auto fields = split_fields(lines[i]);
    if (fields.size() < num_classes + 1) {
      if (fields.size() == num_classes && !fields.empty()) {
        throw InterchangeError(at_line("missing logit", line_no));
      }
      throw InterchangeError(at_line("ragged row: expected " + std::to_string(num_classes + 1) + " fields, got " +
                                         std::to_string(fields.size()),
                                     line_no));
    }
    if (fields.size() > num_classes + 1) {
      throw InterchangeError(at_line("ragged row: expected " + std::to_string(num_classes + 1) + " fields, got " +
                                         std::to_string(fields.size()),
                                     line_no));
    }
    int label = 0;
    if (!parse_int(fields[0], label)) throw InterchangeError(at_line("non-integer label", line_no));
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw InterchangeError(at_line("label out of range", line_no));
    }
    labels.push_back(label);
    for (std::size_t k = 0; k < num_classes; ++k) {
      double v = 0.0;
      switch (parse_real(fields[k + 1], v)) {
        case RealParse::ok: break;
        case RealParse::empty: throw InterchangeError(at_line("missing logit", line_no));
        case RealParse::malformed: throw InterchangeError(at_line("malformed logit", line_no));
        case RealParse::non_finite: throw InterchangeError(at_line("non-finite logit", line_no));
      }
      logits.push_back(v);
    }
  }
  if (labels.empty()) throw InterchangeError(at_line("no records", 2));
  return LabeledLogits(num_classes, std::move(labels), std::move(logits));
}

std::string format_logits_csv(const LabeledLogits& data) {
  if (data.size() == 0) throw std::invalid_argument("cannot write an empty logits table");
  std::string out = "label";
  for (std::size_t k = 0; k < data.num_classes(); ++k) out += ",logit_" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.label(i));
    for (double v : data.row(i)) {
      out += ',';
      append_sig9(out, v);
    }
    out += '\n';
  }
  return out;
}

LabeledLogits read_logits_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_logits_csv(text);
  } catch (const InterchangeError& e) {
    throw InterchangeError(with_path(path, e));
  }
}

void write_logits_csv(const LabeledLogits& data, const std::filesystem::path& path) {
  write_text_file(path, format_logits_csv(data));
}

// ---------------------------------------------------------------------------
// PGM

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000) throw InterchangeError(std::string(what) + " too large at byte " + std::to_string(start));
      ++pos_;
    }
    if (pos_ == start) throw InterchangeError(std::string("expected ") + what + " at byte " + std::to_string(start));
    return value;
  }

  void expect_single_whitespace() {
    if (pos_ >= bytes_.size()) throw InterchangeError("truncated header at byte " + std::to_string(pos_));
    const auto c = bytes_[pos_];
    if (!(c == ' ' || c == '\t' || c == '\n' || c == '\r')) {
      throw InterchangeError("expected whitespace after maxval at byte " + std::to_string(pos_));
    }
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t quantize(double p) {
  const double q = std::round(p * 255.0);
  if (!(q > 0.0)) return 0;
  if (q >= 255.0) return 255;
  return static_cast<std::uint8_t>(q);
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw InterchangeError("unsupported magic at byte 0 (expected binary PGM 'P5')");
  }
  PgmHeaderReader header(bytes.subspan(2));
  const std::size_t width = header.read_uint("width");
  const std::size_t height = header.read_uint("height");
  const std::size_t maxval_at = header.offset() + 2;
  const std::size_t maxval = header.read_uint("maxval");
  if (maxval != 255) {
    throw InterchangeError("maxval must be 255, got " + std::to_string(maxval) + " near byte " +
                           std::to_string(maxval_at));
  }
  header.expect_single_whitespace();
  if (width == 0 || height == 0) throw InterchangeError("zero image dimension at byte 2");

  const std::size_t payload = header.offset() + 2;
  const std::size_t expected = width * height;
  if (bytes.size() - payload < expected) {
    throw InterchangeError("truncated payload at byte " + std::to_string(bytes.size()) + ": expected " +
                           std::to_string(expected) + " pixel bytes from byte " + std::to_string(payload) + ", got " +
                           std::to_string(bytes.size() - payload));
  }
  std::vector<double> pixels(expected);
  for (std::size_t i = 0; i < expected; ++i) pixels[i] = bytes[payload + i] / 255.0;
  return GrayImage(width, height, std::move(pixels));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  if (img.size() == 0) throw std::invalid_argument("cannot encode an empty image");
  const std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.size());
  for (double p : img.pixels()) out.push_back(quantize(p));
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  try {
    return decode_pgm(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  } catch (const InterchangeError& e) {
    throw InterchangeError(with_path(path, e));
  }
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(img);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---------------------------------------------------------------------------
// Manifest CSV

DatasetManifest parse_manifest(std::string_view text, std::size_t num_classes) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "path,label") throw InterchangeError(at_line("malformed manifest header", 1));
  DatasetManifest manifest;
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto line = lines[i];
    const std::size_t comma = line.rfind(',');
    if (comma == std::string_view::npos) throw InterchangeError(at_line("expected 'path,label'", line_no));
    const auto path = line.substr(0, comma);
    int label = 0;
    if (path.empty()) throw InterchangeError(at_line("empty path", line_no));
    if (!parse_int(line.substr(comma + 1), label)) throw InterchangeError(at_line("non-integer label", line_no));
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw InterchangeError(at_line("label out of range", line_no));
    }
    if (!seen.insert(path).second) throw InterchangeError(at_line("duplicate path", line_no));
    manifest.entries.push_back({std::string(path), label});
  }
  if (manifest.entries.empty()) throw InterchangeError(at_line("no entries", 2));
  return manifest;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out = "path,label\n";
  for (const auto& e : manifest.entries) out += e.path + "," + std::to_string(e.label) + "\n";
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path, std::size_t num_classes) {
  const std::string text = read_text_file(path);
  try {
    return parse_manifest(text, num_classes);
  } catch (const InterchangeError& e) {
    throw InterchangeError(with_path(path, e));
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate(std::numeric_limits<int>::max());
  write_text_file(path, format_manifest(manifest));
}

// ---------------------------------------------------------------------------
// Report JSON

std::string format_report_json(const MetricsReport& r) {
  const std::size_t k = r.confusion.num_classes();
  std::string out = "{\n";
  auto key = [&](const char* name) {
    out += "  \"";
    out += name;
    out += "\": ";
  };
  auto real = [&](const char* name, double v) {
    key(name);
    append_fixed6(out, v);
    out += ",\n";
  };

  real("accuracy", r.accuracy);
  real("macro_precision", r.macro_precision);
  real("macro_recall", r.macro_recall);
  real("macro_f1", r.macro_f1);

  key("confusion");
  out += "{\n    \"num_classes\": " + std::to_string(k) + ",\n    \"counts\": [";
  for (std::size_t t = 0; t < k; ++t) {
    out += t ? ", [" : "[";
    for (std::size_t p = 0; p < k; ++p) {
      if (p) out += ", ";
      out += std::to_string(r.confusion.at(t, p));
    }
    out += "]";
  }
  out += "]";
  if (k == 2) {
    out += ",\n    \"tp\": " + std::to_string(r.confusion.tp());
    out += ",\n    \"fn\": " + std::to_string(r.confusion.fn());
    out += ",\n    \"fp\": " + std::to_string(r.confusion.fp());
    out += ",\n    \"tn\": " + std::to_string(r.confusion.tn());
  }
  out += "\n  },\n";

  real("nll", r.nll);
  real("ece", r.ece);
  key("temperature");
  append_optional6(out, r.temperature);
  out += ",\n";
  key("ece_bins");
  out += std::to_string(r.ece_bins) + ",\n";

  key("bin_stats");
  out += "[";
  for (std::size_t m = 0; m < r.bin_stats.size(); ++m) {
    const auto& b = r.bin_stats[m];
    out += m ? ",\n    " : "\n    ";
    out += "{\"count\": " + std::to_string(b.count) + ", \"mean_confidence\": ";
    append_optional6(out, b.mean_confidence);
    out += ", \"mean_accuracy\": ";
    append_optional6(out, b.mean_accuracy);
    out += "}";
  }
  out += r.bin_stats.empty() ? "],\n" : "\n  ],\n";

  key("per_class");
  out += "[";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    out += c ? ",\n    " : "\n    ";
    out += "{\"class\": " + std::to_string(c) + ", \"precision\": ";
    append_fixed6(out, m.precision);
    out += ", \"recall\": ";
    append_fixed6(out, m.recall);
    out += ", \"f1\": ";
    append_fixed6(out, m.f1);
    out += ", \"support\": " + std::to_string(m.support) + "}";
  }
  out += r.per_class.empty() ? "]\n" : "\n  ]\n";
  out += "}\n";
  return out;
}

void write_report_json(const MetricsReport& report, const std::filesystem::path& path) {
  if (report.bin_stats.size() != report.ece_bins) throw std::invalid_argument("bin_stats size differs from ece_bins");
  write_text_file(path, format_report_json(report));
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InterchangeError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InterchangeError("read error on " + path.string());
  return std::move(buf).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InterchangeError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) throw InterchangeError("write error on " + path.string());
}

}  // namespace tscal
