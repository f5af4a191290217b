#include "tscal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tscal {

Temperature::Temperature(double value) : value_(value) {
  if (!(value >= kMinTemperature && value <= kMaxTemperature)) {
    throw std::invalid_argument("temperature " + std::to_string(value) + " outside [0.05, 20]");
  }
}

void tempered_softmax(std::span<const double> logits, Temperature t, std::span<double> out) {
  if (out.size() != logits.size()) throw std::invalid_argument("output size differs from logit count");
  const double inv_t = 1.0 / t.value();
  const double shift = *std::max_element(logits.begin(), logits.end()) * inv_t;
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] * inv_t - shift);
    sum += out[k];
  }
  for (double& p : out) p /= sum;
}

std::vector<double> tempered_softmax(std::span<const double> logits, Temperature t) {
  std::vector<double> out(logits.size());
  tempered_softmax(logits, t, out);
  return out;
}

namespace {

// logsumexp(z / T) for one row.
double scaled_logsumexp(std::span<const double> z, double inv_t) {
  const double shift = *std::max_element(z.begin(), z.end()) * inv_t;
  double sum = 0.0;
  for (double v : z) sum += std::exp(v * inv_t - shift);
  return shift + std::log(sum);
}

}  // namespace

double nll_at(const LabeledLogits& data, Temperature t) {
  const double inv_t = 1.0 / t.value();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto z = data.row(i);
    total += scaled_logsumexp(z, inv_t) - z[static_cast<std::size_t>(data.label(i))] * inv_t;
  }
  return total / static_cast<double>(data.size());
}

double nll_gradient(const LabeledLogits& data, Temperature t) {
  const double inv_t = 1.0 / t.value();
  std::vector<double> p(data.num_classes());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto z = data.row(i);
    tempered_softmax(z, t, p);
    double expected = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) expected += p[k] * z[k];
    total += z[static_cast<std::size_t>(data.label(i))] - expected;
  }
  return total / static_cast<double>(data.size()) * inv_t * inv_t;
}

FitResult fit_temperature(const LabeledLogits& data, const FitOptions& options) {
  if (data.size() == 0) throw std::invalid_argument("cannot fit a temperature on empty data");
  if (options.grid_points < 2) throw std::invalid_argument("coarse grid needs at least 2 points");

  const double log_min = std::log(kMinTemperature);
  const double log_max = std::log(kMaxTemperature);

  FitResult result;
  std::size_t evals = 0;
  double best_t = 1.0;
  double best_f = 0.0;

  auto eval_log = [&](double log_t) {
    double t = std::clamp(std::exp(log_t), kMinTemperature, kMaxTemperature);
    if (log_t <= log_min) t = kMinTemperature;
    if (log_t >= log_max) t = kMaxTemperature;
    ++evals;
    const double f = nll_at(data, Temperature(t));
    if (f < best_f) {
      best_f = f;
      best_t = t;
    }
    return f;
  };

  result.nll_before = nll_at(data, Temperature(1.0));
  ++evals;
  best_f = result.nll_before;

  // Coarse scan; endpoints land exactly on the domain bounds.
  const std::size_t n_grid = options.grid_points;
  const double step = (log_max - log_min) / static_cast<double>(n_grid - 1);
  auto grid_log = [&](std::size_t i) { return i + 1 == n_grid ? log_max : log_min + step * static_cast<double>(i); };
  std::vector<double> grid_f(n_grid);
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    grid_f[i] = eval_log(grid_log(i));
    if (grid_f[i] < grid_f[best_i]) best_i = i;
  }

  // Golden-section search on log T inside the neighbouring grid cells.
  double a = grid_log(best_i == 0 ? 0 : best_i - 1);
  double b = grid_log(std::min(best_i + 1, n_grid - 1));
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval_log(c);
  double fd = eval_log(d);
  bool converged = true;
  while (b - a >= options.log_tolerance) {
    if (evals + 1 > options.max_evaluations) {
      converged = false;
      break;
    }
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval_log(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval_log(d);
    }
  }

  result.temperature = Temperature(best_t);
  result.nll_after = best_f;
  result.evaluations = evals;
  result.converged = converged;
  result.at_boundary = best_t == kMinTemperature || best_t == kMaxTemperature;
  return result;
}

ProbPredictions apply_temperature(const LabeledLogits& data, Temperature t) {
  const std::size_t k = data.num_classes();
  std::vector<double> probs(data.size() * k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    tempered_softmax(data.row(i), t, std::span(probs).subspan(i * k, k));
  }
  return ProbPredictions(k, data.labels(), std::move(probs));
}

}  // namespace tscal
