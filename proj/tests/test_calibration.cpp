#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "tscal/calibration.hpp"

using namespace tscal;

namespace {

LabeledLogits two_records(int label_a, int label_b) {
  return LabeledLogits(2, {label_a, label_b}, {5.0, 0.0, 0.0, 5.0});
}

}  // namespace

TEST_SUITE("calibration") {
  TEST_CASE("temperature domain") {
    CHECK_NOTHROW(Temperature(0.05));
    CHECK_NOTHROW(Temperature(20.0));
    CHECK_THROWS_AS(Temperature(0.0499), std::invalid_argument);
    CHECK_THROWS_AS(Temperature(20.01), std::invalid_argument);
    CHECK_THROWS_AS(Temperature(NAN), std::invalid_argument);
  }

  TEST_CASE("tempered softmax examples") {
    for (double t : {0.05, 1.0, 20.0}) {
      const auto p = tempered_softmax(std::vector<double>{0.0, 0.0}, Temperature(t));
      CHECK(p[0] == 0.5);
      CHECK(p[1] == 0.5);
    }
    const auto a = tempered_softmax(std::vector<double>{std::log(3.0), 0.0}, Temperature(1.0));
    CHECK(a[0] == doctest::Approx(0.75).epsilon(1e-15));
    const auto b = tempered_softmax(std::vector<double>{2.0, 0.0}, Temperature(2.0));
    CHECK(b[0] == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(b[1] == doctest::Approx(0.268941).epsilon(1e-6));
    const auto c = tempered_softmax(std::vector<double>{50.0, 0.0}, Temperature(20.0));
    CHECK(c[0] == doctest::Approx(0.924142).epsilon(1e-6));
    CHECK(c[1] == doctest::Approx(0.075858).epsilon(1e-5));
    // Large logits at the smallest temperature stay finite.
    const auto d = tempered_softmax(std::vector<double>{1000.0, -1000.0, 999.0}, Temperature(0.05));
    CHECK(std::isfinite(d[2]));
    CHECK(d[0] == doctest::Approx(1.0));
  }

  TEST_CASE("softmax matches the long double oracle and stays normalised") {
    oracle::Rng rng(41);
    for (int rep = 0; rep < 500; ++rep) {
      const std::size_t k = oracle::pick(rng, 2, 6);
      std::vector<double> z(k);
      for (auto& v : z) v = oracle::uniform(rng, -30, 30);
      const double t = std::exp(oracle::uniform(rng, std::log(0.05), std::log(20.0)));
      const auto p = tempered_softmax(z, Temperature(t));
      const auto ref = oracle::softmax(z, t);
      double sum = 0;
      for (std::size_t j = 0; j < k; ++j) {
        CHECK(p[j] >= 0.0);
        CHECK(p[j] <= 1.0);
        CHECK(std::fabs(p[j] - ref[j]) <= 1e-14);
        sum += p[j];
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
      CHECK(oracle::first_max(p.data(), k) == oracle::first_max(z.data(), k));
    }
  }

  TEST_CASE("max probability falls toward 1/K as T grows") {
    oracle::Rng rng(42);
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t k = oracle::pick(rng, 2, 5);
      std::vector<double> z(k);
      for (auto& v : z) v = oracle::uniform(rng, -5, 5);
      double prev = 1.0 + 1e-12;
      for (int i = 0; i <= 60; ++i) {
        const double t = 0.05 * std::pow(400.0, i / 60.0);
        const auto p = tempered_softmax(z, Temperature(std::min(t, 20.0)));
        const double mx = *std::max_element(p.begin(), p.end());
        CHECK(mx <= prev + 1e-15);
        CHECK(mx > 1.0 / static_cast<double>(k) - 1e-15);
        prev = mx;
      }
    }
  }

  TEST_CASE("nll and gradient examples") {
    const LabeledLogits flat(2, {0}, {0.0, 0.0});
    CHECK(nll_at(flat, Temperature(0.3)) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(nll_gradient(flat, Temperature(3.0)) == 0.0);
    const LabeledLogits one(2, {0}, {1.0, 0.0});
    CHECK(nll_at(one, Temperature(1.0)) == doctest::Approx(0.313262).epsilon(1e-6));
    CHECK(nll_gradient(one, Temperature(1.0)) == doctest::Approx(0.268941).epsilon(1e-6));
  }

  TEST_CASE("nll agrees with the oracle and the gradient with finite differences") {
    oracle::Rng rng(43);
    for (int rep = 0; rep < 100; ++rep) {
      const auto d = oracle::random_logits(rng, oracle::pick(rng, 1, 200), oracle::pick(rng, 2, 5));
      const double t = std::exp(oracle::uniform(rng, std::log(0.2), std::log(10.0)));
      CHECK(nll_at(d, Temperature(t)) == doctest::Approx(oracle::nll(d, t)).epsilon(1e-12));
      const double fd = oracle::central_difference([&](double x) { return oracle::nll(d, x); }, t, 1e-4 * t);
      const double g = nll_gradient(d, Temperature(t));
      CHECK(std::fabs(g - fd) <= 1e-6 * std::max(1.0, std::fabs(fd)));
    }
  }

  TEST_CASE("boundary fits") {
    const auto wrong = fit_temperature(two_records(1, 0));
    CHECK(wrong.temperature.value() == 20.0);
    CHECK(wrong.at_boundary);
    CHECK(wrong.converged);
    CHECK(wrong.nll_after < wrong.nll_before);
    const auto right = fit_temperature(two_records(0, 1));
    CHECK(right.temperature.value() == 0.05);
    CHECK(right.at_boundary);
    CHECK(right.nll_after <= right.nll_before);
  }

  TEST_CASE("already calibrated logits fit T near 1") {
    oracle::Rng rng(44);
    const std::size_t n = 10000, k = 3;
    std::vector<int> labels(n);
    std::vector<double> z(n * k);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> q(k);
      for (auto& v : q) v = std::pow(oracle::uniform(rng, 0.01, 1.0), 3.0);
      const double s = std::accumulate(q.begin(), q.end(), 0.0);
      const double c = oracle::uniform(rng, -2, 2);
      for (std::size_t j = 0; j < k; ++j) z[i * k + j] = std::log(q[j] / s) + c;
      labels[i] = static_cast<int>(std::discrete_distribution<int>(q.begin(), q.end())(rng));
    }
    const auto fit = fit_temperature(LabeledLogits(k, labels, z));
    CHECK(std::fabs(fit.temperature.value() - 1.0) <= 0.05);
    CHECK_FALSE(fit.at_boundary);
  }

  TEST_CASE("fit optimality against dense grids") {
    oracle::Rng rng(45);
    for (int rep = 0; rep < 50; ++rep) {
      const auto d = oracle::random_logits(rng, oracle::pick(rng, 2, 150), oracle::pick(rng, 2, 4), oracle::uniform(rng, 0.5, 12));
      const auto fit = fit_temperature(d);
      const double at_fit = nll_at(d, fit.temperature);
      CHECK(fit.nll_after == at_fit);
      CHECK(fit.nll_before == nll_at(d, Temperature(1.0)));
      CHECK(fit.nll_after <= fit.nll_before + 1e-12);
      CHECK(at_fit <= oracle::log_grid_min([&](double t) { return nll_at(d, Temperature(t)); }, 1000) + 1e-6);
      CHECK(fit.evaluations >= 1);
      CHECK(fit.evaluations <= FitOptions{}.max_evaluations);
      CHECK(fit.converged);
    }
  }

  TEST_CASE("scaling the logits scales the temperature") {
    // Labels sampled from softmax(z / t0) keep the optimum near t0, well
    // inside the domain for both the original and the scaled logits.
    oracle::Rng rng(46);
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
      const std::size_t n = 300, k = oracle::pick(rng, 2, 4);
      const double t0 = oracle::uniform(rng, 0.5, 3.0);
      std::vector<double> z(n * k);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(k);
        for (auto& v : row) v = oracle::uniform(rng, -4, 4);
        const auto p = oracle::softmax(row, t0);
        labels[i] = std::discrete_distribution<int>(p.begin(), p.end())(rng);
        std::copy(row.begin(), row.end(), z.begin() + static_cast<std::ptrdiff_t>(i * k));
      }
      const double c = oracle::uniform(rng, 0.5, 3.0);
      std::vector<double> scaled(z);
      for (auto& v : scaled) v *= c;
      const auto a = fit_temperature(LabeledLogits(k, labels, z));
      const auto b = fit_temperature(LabeledLogits(k, labels, scaled));
      if (a.at_boundary || b.at_boundary) continue;
      ++checked;
      CHECK(std::fabs(std::log(b.temperature.value()) - std::log(c * a.temperature.value())) <= 2 * FitOptions{}.log_tolerance);
    }
    CHECK(checked >= 50);
  }

  TEST_CASE("scaling keeps every argmax and therefore every count") {
    oracle::Rng rng(47);
    for (int rep = 0; rep < 100; ++rep) {
      const auto d = oracle::random_logits(rng, oracle::pick(rng, 1, 200), oracle::pick(rng, 2, 5));
      const auto base = confusion_matrix(apply_temperature(d, Temperature(1.0)));
      for (double t : {0.05, 1.0, 2.5, 20.0}) {
        const auto p = apply_temperature(d, Temperature(t));
        CHECK(p.labels() == d.labels());
        CHECK(confusion_matrix(p) == base);
      }
    }
  }

  TEST_CASE("apply at T = 1 is the plain softmax") {
    const LabeledLogits d(3, {2}, {1.0, 2.0, 3.0});
    const auto p = apply_temperature(d, Temperature(1.0));
    const double s = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(p.row(0)[0] == doctest::Approx(std::exp(1.0) / s).epsilon(1e-15));
    CHECK(p.row(0)[2] == doctest::Approx(std::exp(3.0) / s).epsilon(1e-15));
  }

  TEST_CASE("evaluation budget") {
    oracle::Rng rng(48);
    const auto d = oracle::random_logits(rng, 50, 2);
    FitOptions tight;
    tight.max_evaluations = 60;  // grid plus a handful of probes
    const auto fit = fit_temperature(d, tight);
    CHECK_FALSE(fit.converged);
    CHECK(fit.evaluations <= 60);
    CHECK(fit.nll_after <= fit.nll_before + 1e-12);
  }
}
