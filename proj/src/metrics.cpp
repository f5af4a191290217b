#include "tscal/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tscal {

ProbPredictions::ProbPredictions(std::size_t num_classes, std::vector<int> labels, std::vector<double> probs)
    : num_classes_(num_classes), labels_(std::move(labels)), probs_(std::move(probs)) {
  if (num_classes_ < 1) throw std::invalid_argument("predictions need at least 1 class");
  if (probs_.size() != labels_.size() * num_classes_) {
    throw std::invalid_argument("probability count does not match records x classes");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw std::invalid_argument("label out of range in record " + std::to_string(i));
    }
    double sum = 0.0;
    for (double p : row(i)) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1] in record " + std::to_string(i));
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("row does not sum to 1 in record " + std::to_string(i));
  }
}

ConfusionCounts ConfusionCounts::binary(std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn) {
  ConfusionCounts c(2);
  c.at(1, 1) = tp;
  c.at(1, 0) = fn;
  c.at(0, 1) = fp;
  c.at(0, 0) = tn;
  return c;
}

std::uint64_t ConfusionCounts::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::optional<double> ReliabilityBin::mean_confidence() const {
  if (count == 0) return std::nullopt;
  return sum_confidence / static_cast<double>(count);
}

std::optional<double> ReliabilityBin::mean_accuracy() const {
  if (count == 0) return std::nullopt;
  return static_cast<double>(sum_correct) / static_cast<double>(count);
}

std::uint64_t ReliabilityBins::total() const noexcept {
  std::uint64_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

double confidence(std::span<const double> probs) { return probs[argmax(probs)]; }

std::size_t bin_index(double conf, std::size_t num_bins) {
  if (!(conf > 0.0)) return 0;
  if (conf >= 1.0) return num_bins - 1;
  auto m = static_cast<std::size_t>(conf * static_cast<double>(num_bins));
  if (m >= num_bins) m = num_bins - 1;
  // Snap to the edges as bin_lower_edge computes them, so the bin test
  // edge(m) <= conf < edge(m + 1) holds exactly.
  while (m > 0 && conf < bin_lower_edge(m, num_bins)) --m;
  while (m + 1 < num_bins && conf >= bin_lower_edge(m + 1, num_bins)) ++m;
  return m;
}

ConfusionCounts confusion_matrix(const ProbPredictions& preds) {
  ConfusionCounts c(preds.num_classes());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++c.at(static_cast<std::size_t>(preds.label(i)), argmax(preds.row(i)));
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  const auto n = c.total();
  if (n == 0) return 0.0;
  std::uint64_t diag = 0;
  for (std::size_t k = 0; k < c.num_classes(); ++k) diag += c.at(k, k);
  return static_cast<double>(diag) / static_cast<double>(n);
}

std::vector<double> precision_per_class(const ConfusionCounts& c) {
  const std::size_t k_count = c.num_classes();
  std::vector<double> out(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    std::uint64_t predicted = 0;
    for (std::size_t t = 0; t < k_count; ++t) predicted += c.at(t, k);
    if (predicted > 0) out[k] = static_cast<double>(c.at(k, k)) / static_cast<double>(predicted);
  }
  return out;
}

std::vector<double> recall_per_class(const ConfusionCounts& c) {
  const std::size_t k_count = c.num_classes();
  std::vector<double> out(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    std::uint64_t support = 0;
    for (std::size_t p = 0; p < k_count; ++p) support += c.at(k, p);
    if (support > 0) out[k] = static_cast<double>(c.at(k, k)) / static_cast<double>(support);
  }
  return out;
}

std::vector<double> f1_per_class(const ConfusionCounts& c) {
  const auto prec = precision_per_class(c);
  const auto rec = recall_per_class(c);
  std::vector<double> out(prec.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double denom = prec[k] + rec[k];
    if (denom > 0.0) out[k] = 2.0 * prec[k] * rec[k] / denom;
  }
  return out;
}

namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double precision_macro(const ConfusionCounts& c) { return mean(precision_per_class(c)); }
double recall_macro(const ConfusionCounts& c) { return mean(recall_per_class(c)); }
double f1_macro(const ConfusionCounts& c) { return mean(f1_per_class(c)); }

double mean_nll(const ProbPredictions& preds) {
  if (preds.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = preds.row(i)[static_cast<std::size_t>(preds.label(i))];
    sum -= std::log(std::max(p, kProbabilityFloor));
  }
  return sum / static_cast<double>(preds.size());
}

ReliabilityBins reliability_bins(const ProbPredictions& preds, std::size_t num_bins) {
  if (num_bins < 1) throw std::invalid_argument("need at least one bin");
  ReliabilityBins out;
  out.bins.resize(num_bins);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto row = preds.row(i);
    const std::size_t pred = argmax(row);
    const double conf = row[pred];
    auto& bin = out.bins[bin_index(conf, num_bins)];
    ++bin.count;
    bin.sum_confidence += conf;
    if (static_cast<int>(pred) == preds.label(i)) ++bin.sum_correct;
  }
  return out;
}

double ece(const ReliabilityBins& bins, std::uint64_t n) {
  if (n == 0) return 0.0;
  double total = 0.0;
  for (const auto& b : bins.bins) {
    if (b.count == 0) continue;
    const double count = static_cast<double>(b.count);
    const double acc = static_cast<double>(b.sum_correct) / count;
    const double conf = b.sum_confidence / count;
    total += count / static_cast<double>(n) * std::fabs(acc - conf);
  }
  return total;
}

double ece(const ProbPredictions& preds, std::size_t num_bins) {
  return ece(reliability_bins(preds, num_bins), preds.size());
}

MetricsReport make_report(const ProbPredictions& preds, std::size_t num_bins, std::optional<double> temperature) {
  MetricsReport r;
  r.confusion = confusion_matrix(preds);
  r.accuracy = accuracy(r.confusion);
  r.macro_precision = precision_macro(r.confusion);
  r.macro_recall = recall_macro(r.confusion);
  r.macro_f1 = f1_macro(r.confusion);
  r.nll = mean_nll(preds);

  const auto bins = reliability_bins(preds, num_bins);
  r.ece = ece(bins, preds.size());
  r.temperature = temperature;
  r.ece_bins = num_bins;
  for (const auto& b : bins.bins) r.bin_stats.push_back({b.count, b.mean_confidence(), b.mean_accuracy()});

  const auto prec = precision_per_class(r.confusion);
  const auto rec = recall_per_class(r.confusion);
  const auto f1 = f1_per_class(r.confusion);
  for (std::size_t k = 0; k < prec.size(); ++k) {
    std::uint64_t support = 0;
    for (std::size_t p = 0; p < r.confusion.num_classes(); ++p) support += r.confusion.at(k, p);
    r.per_class.push_back({prec[k], rec[k], f1[k], support});
  }
  return r;
}

}  // namespace tscal
