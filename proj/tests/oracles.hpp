#pragma once

// Independent reference computations for the unit and acceptance suites.
// Nothing here calls the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tscal/interchange.hpp"
#include "tscal/metrics.hpp"

namespace oracle {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random labelled logits with entries in [-scale, scale].
inline tscal::LabeledLogits random_logits(Rng& rng, std::size_t n, std::size_t k, double scale = 4.0) {
  std::vector<int> labels(n);
  std::vector<double> logits(n * k);
  for (auto& l : labels) l = static_cast<int>(pick(rng, 0, k - 1));
  for (auto& z : logits) z = uniform(rng, -scale, scale);
  return tscal::LabeledLogits(k, std::move(labels), std::move(logits));
}

/// Random probability rows (normalised positive draws, occasionally peaked).
inline tscal::ProbPredictions random_predictions(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> labels(n);
  std::vector<double> probs(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(pick(rng, 0, k - 1));
    const double sharp = uniform(rng, 0.5, 6.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = std::pow(uniform(rng, 1e-3, 1.0), sharp);
      sum += probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= sum;
  }
  return tscal::ProbPredictions(k, std::move(labels), std::move(probs));
}

/// Softmax(z / t) by the textbook formula, no stabilisation tricks beyond
/// max subtraction in long double.
inline std::vector<double> softmax(const std::vector<double>& z, double t) {
  long double mx = z[0];
  for (double v : z) mx = std::max<long double>(mx, v);
  long double sum = 0;
  std::vector<long double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) sum += e[i] = std::exp((z[i] - mx) / t);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = static_cast<double>(e[i] / sum);
  return out;
}

/// First index of the maximum, written as a plain loop.
inline std::size_t first_max(const double* p, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (p[j] > p[best]) best = j;
  }
  return best;
}

/// counts[t][p] via a per-row loop.
inline std::vector<std::vector<std::uint64_t>> confusion(const tscal::ProbPredictions& preds) {
  const std::size_t k = preds.num_classes();
  std::vector<std::vector<std::uint64_t>> c(k, std::vector<std::uint64_t>(k, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    c[preds.label(i)][first_max(preds.values().data() + i * k, k)] += 1;
  }
  return c;
}

/// O(n * M) ECE: for every bin scan every record, accumulating in record order.
inline double naive_ece(const tscal::ProbPredictions& preds, std::size_t m_bins) {
  const std::size_t k = preds.num_classes();
  const std::size_t n = preds.size();
  double total = 0.0;
  for (std::size_t m = 0; m < m_bins; ++m) {
    const double lo = static_cast<double>(m) / static_cast<double>(m_bins);
    const double hi = static_cast<double>(m + 1) / static_cast<double>(m_bins);
    std::uint64_t count = 0, correct = 0;
    double conf_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = preds.values().data() + i * k;
      const std::size_t pred = first_max(row, k);
      const double conf = row[pred];
      const bool last = m + 1 == m_bins;
      const bool inside = conf >= lo && (last ? conf <= 1.0 : conf < hi);
      if (!inside) continue;
      ++count;
      conf_sum += conf;
      if (static_cast<int>(pred) == preds.label(i)) ++correct;
    }
    if (count == 0) continue;
    const double c = static_cast<double>(count);
    total += c / static_cast<double>(n) * std::fabs(static_cast<double>(correct) / c - conf_sum / c);
  }
  return total;
}

/// Mean NLL of softmax(z / t) computed from probabilities in long double.
inline double nll(const tscal::LabeledLogits& d, double t) {
  long double total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto row = d.row(i);
    long double mx = row[0];
    for (double v : row) mx = std::max<long double>(mx, v);
    long double sum = 0;
    for (double v : row) sum += std::exp((v - mx) / t);
    total += std::log(sum) - (row[d.label(i)] - mx) / t;
  }
  return static_cast<double>(total / d.size());
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Minimum of f over `points` log-spaced temperatures in [0.05, 20].
inline double log_grid_min(const std::function<double(double)>& f, std::size_t points) {
  const double lo = std::log(0.05), hi = std::log(20.0);
  double best = INFINITY;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    best = std::min(best, f(std::clamp(t, 0.05, 20.0)));
  }
  return best;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::uint64_t counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("tscal_test_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
