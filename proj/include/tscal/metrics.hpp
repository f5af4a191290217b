#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tscal {

/// Row-stochastic predictions paired with true labels.
class ProbPredictions {
 public:
  ProbPredictions() = default;
  /// Throws std::invalid_argument unless every row has K entries in [0, 1]
  /// summing to 1 within 1e-9 and every label is in [0, K).
  ProbPredictions(std::size_t num_classes, std::vector<int> labels, std::vector<double> probs);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const double> row(std::size_t i) const {
    return {probs_.data() + i * num_classes_, num_classes_};
  }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& values() const noexcept { return probs_; }

 private:
  std::size_t num_classes_ = 0;
  std::vector<int> labels_;
  std::vector<double> probs_;
};

/// counts[t][p]: records with true class t predicted as p.
/// For K = 2, class 1 is the positive class.
class ConfusionCounts {
 public:
  ConfusionCounts() = default;
  explicit ConfusionCounts(std::size_t num_classes)
      : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}
  /// Binary counts in the TP/FN/FP/TN vocabulary.
  static ConfusionCounts binary(std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * num_classes_ + pred]; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * num_classes_ + pred]; }
  std::uint64_t total() const noexcept;

  std::uint64_t tp() const { return at(1, 1); }
  std::uint64_t fn() const { return at(1, 0); }
  std::uint64_t fp() const { return at(0, 1); }
  std::uint64_t tn() const { return at(0, 0); }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;

 private:
  std::size_t num_classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

struct ReliabilityBin {
  std::uint64_t count = 0;
  double sum_confidence = 0.0;
  std::uint64_t sum_correct = 0;

  std::optional<double> mean_confidence() const;
  std::optional<double> mean_accuracy() const;
};

/// M equal-width confidence bins. Bin m (0-based) covers [m/M, (m+1)/M),
/// except the last one, which is closed at 1.
struct ReliabilityBins {
  std::vector<ReliabilityBin> bins;

  std::size_t size() const noexcept { return bins.size(); }
  std::uint64_t total() const noexcept;
};

/// Index of the largest entry; ties go to the smallest index.
std::size_t argmax(std::span<const double> values);
/// Maximum entry of a probability row.
double confidence(std::span<const double> probs);
/// 0-based bin holding `conf` among `num_bins` equal-width bins.
std::size_t bin_index(double conf, std::size_t num_bins);
/// Lower edge of bin m, computed the same way everywhere.
inline double bin_lower_edge(std::size_t m, std::size_t num_bins) {
  return static_cast<double>(m) / static_cast<double>(num_bins);
}

ConfusionCounts confusion_matrix(const ProbPredictions& preds);

double accuracy(const ConfusionCounts& c);
std::vector<double> precision_per_class(const ConfusionCounts& c);
std::vector<double> recall_per_class(const ConfusionCounts& c);
std::vector<double> f1_per_class(const ConfusionCounts& c);
double precision_macro(const ConfusionCounts& c);
double recall_macro(const ConfusionCounts& c);
double f1_macro(const ConfusionCounts& c);

/// Smallest probability used inside the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Mean negative log-likelihood of the true class.
double mean_nll(const ProbPredictions& preds);

ReliabilityBins reliability_bins(const ProbPredictions& preds, std::size_t num_bins);
/// Bin-weighted |accuracy - confidence| over `n` records.
double ece(const ReliabilityBins& bins, std::uint64_t n);
double ece(const ProbPredictions& preds, std::size_t num_bins);

inline constexpr std::size_t kDefaultEceBins = 15;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct BinStat {
  std::uint64_t count = 0;
  std::optional<double> mean_confidence;
  std::optional<double> mean_accuracy;
};

/// Everything the evaluate step reports for one set of predictions.
struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ConfusionCounts confusion;
  double nll = 0.0;
  double ece = 0.0;
  std::optional<double> temperature;
  std::size_t ece_bins = kDefaultEceBins;
  std::vector<BinStat> bin_stats;
  std::vector<ClassMetrics> per_class;
};

MetricsReport make_report(const ProbPredictions& preds, std::size_t num_bins,
                          std::optional<double> temperature = std::nullopt);

}  // namespace tscal
