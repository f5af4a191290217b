#pragma once

// Temperature scaling: logits are divided by a single positive scalar T
// before the softmax, with T chosen to minimise the mean negative
// log-likelihood on held-out data. Dividing by T never changes the argmax.

#include <cstddef>
#include <span>
#include <vector>

#include "tscal/interchange.hpp"
#include "tscal/metrics.hpp"

namespace tscal {

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;

/// A temperature inside [kMinTemperature, kMaxTemperature].
class Temperature {
 public:
  /// Throws std::invalid_argument when `value` is outside the search domain.
  explicit Temperature(double value);

  double value() const noexcept { return value_; }

  friend bool operator==(const Temperature&, const Temperature&) = default;

 private:
  double value_;
};

struct FitOptions {
  std::size_t grid_points = 50;
  double log_tolerance = 1e-5;      // final bracket width in log T
  std::size_t max_evaluations = 10000;
};

struct FitResult {
  Temperature temperature{1.0};
  double nll_before = 0.0;  // at T = 1
  double nll_after = 0.0;   // at the fitted T
  std::size_t evaluations = 0;
  bool converged = false;
  bool at_boundary = false;  // fitted T sits on a search-domain bound
};

/// softmax(z / T), stabilised by subtracting max(z) / T.
std::vector<double> tempered_softmax(std::span<const double> logits, Temperature t);
void tempered_softmax(std::span<const double> logits, Temperature t, std::span<double> out);

/// Mean over records of logsumexp(z / T) - z_y / T.
double nll_at(const LabeledLogits& data, Temperature t);

/// d nll_at / dT = mean over records of (z_y - sum_k p_k z_k) / T^2.
double nll_gradient(const LabeledLogits& data, Temperature t);

/// Minimises nll_at over the temperature domain: a log-spaced coarse scan
/// followed by golden-section search on log T inside the bracket around the
/// best grid point. The objective is convex in 1/T, so the bracket holds the
/// global minimum.
FitResult fit_temperature(const LabeledLogits& data, const FitOptions& options = {});

/// Row-wise tempered softmax; labels are carried through.
ProbPredictions apply_temperature(const LabeledLogits& data, Temperature t);

}  // namespace tscal
