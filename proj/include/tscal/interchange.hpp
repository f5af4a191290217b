#pragma once

// On-disk data model shared by every tool in the kit and by external logit
// exporters: logits CSV, binary PGM images, dataset manifests and JSON
// metric reports.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tscal {

struct MetricsReport;

/// Raised for unreadable, unwritable or malformed files. The message names
/// the offending line (text formats) or byte offset (PGM).
class InterchangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n records of (true class, K raw logits), stored row-major.
class LabeledLogits {
 public:
  LabeledLogits() = default;
  /// Throws std::invalid_argument unless n >= 1, K >= 2, logits.size() == n*K,
  /// every label lies in [0, K) and every logit is finite.
  LabeledLogits(std::size_t num_classes, std::vector<int> labels, std::vector<double> logits);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const double> row(std::size_t i) const {
    return {logits_.data() + i * num_classes_, num_classes_};
  }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& values() const noexcept { return logits_; }

  friend bool operator==(const LabeledLogits&, const LabeledLogits&) = default;

 private:
  std::size_t num_classes_ = 0;
  std::vector<int> labels_;
  std::vector<double> logits_;
};

/// Grayscale image with intensities in [0, 1], row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  /// Throws std::invalid_argument on a size mismatch or a pixel outside [0, 1].
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  double operator()(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  /// Rows [first_row, first_row + rows) as a new image.
  GrayImage crop_rows(std::size_t first_row, std::size_t rows) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  int label = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  /// Throws std::invalid_argument on empty/duplicate paths or labels outside [0, K).
  void validate(std::size_t num_classes = 2) const;
};

// Logits CSV: header `label,logit_0,...,logit_{K-1}`, one record per line,
// reals printed with 9 significant digits.
LabeledLogits parse_logits_csv(std::string_view text);
std::string format_logits_csv(const LabeledLogits& data);
LabeledLogits read_logits_csv(const std::filesystem::path& path);
void write_logits_csv(const LabeledLogits& data, const std::filesystem::path& path);

// Binary PGM (P5), maxval 255. Pixels map to p/255 on read and to
// round(p*255) on write.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

// Manifest CSV: header `path,label`.
DatasetManifest parse_manifest(std::string_view text, std::size_t num_classes = 2);
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path, std::size_t num_classes = 2);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Metrics report JSON: fixed key order, reals with 6 decimals.
std::string format_report_json(const MetricsReport& report);
void write_report_json(const MetricsReport& report, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace tscal
