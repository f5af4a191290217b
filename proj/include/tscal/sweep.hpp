#pragma once

// Noise-robustness sweep: train once on clean phantoms, then for every noise
// setting corrupt the validation and test images, fit T on validation logits
// and report test metrics before and after scaling.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tscal/metrics.hpp"
#include "tscal/noise.hpp"
#include "tscal/phantom.hpp"

namespace tscal {

/// The seven Gaussian, three Poisson, three salt & pepper, three speckle and
/// three uniform settings, in that order.
std::vector<NoiseSpec> default_noise_grid();

struct SweepConfig {
  std::vector<NoiseSpec> grid = default_noise_grid();
  std::size_t ece_bins = kDefaultEceBins;
  std::uint64_t data_seed = 20240601;
  std::uint64_t noise_seed = 7;
  std::uint64_t train_seed = 11;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  PhantomConfig phantom{.n_per_class = 2500};
  TrainParams train{};

  /// Throws std::invalid_argument on an empty grid, non-positive fractions
  /// or fractions not summing to 1 within 1e-9.
  void validate() const;
};

struct SweepRow {
  std::string noise;
  bool calibrated = false;
  double accuracy = 0.0;
  double prec = 0.0;
  double rec = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0, fn = 0, fp = 0, tn = 0;
  double nll = 0.0;
  double ece = 0.0;
  std::optional<double> optimal_temp;  // calibrated rows only
};

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Per-class split keeping the generation order within each class.
Split stratified_split(std::span<const int> labels, double train_fraction, double val_fraction);

/// Two rows per grid entry: uncalibrated, then calibrated.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

/// Full-precision CSV: noise, calibrated, prec, rec, f1, tp, fn, fp, tn, nll, ece, optimal_temp, accuracy.
std::string format_sweep_csv(std::span<const SweepRow> rows);
/// Markdown table with report rounding (metrics on a 0.005 grid, NLL,
/// ECE and temperature to 3 decimals).
std::string format_sweep_markdown(std::span<const SweepRow> rows);

}  // namespace tscal
