#include "tscal/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace tscal {

void PhantomConfig::validate() const {
  if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
  if (side < 16) throw std::invalid_argument("side must be >= 16");
  if (!(radius_min > 0.0 && radius_min <= radius_max)) throw std::invalid_argument("blob radius range is empty");
  if (2.0 * radius_max >= static_cast<double>(side)) throw std::invalid_argument("blob radius does not fit the image");
  if (!(intensity_min >= 0.0 && intensity_min <= intensity_max && intensity_max <= 1.0)) {
    throw std::invalid_argument("blob intensity range must be a nonempty subrange of [0, 1]");
  }
  if (!(background_noise_sigma >= 0.0 && background_noise_sigma <= 1.0)) {
    throw std::invalid_argument("background_noise_sigma must lie in [0, 1]");
  }
}

GrayImage generate_phantom(const PhantomConfig& cfg, int label, Seed seed) {
  SplitMix64 rng(seed.stream());
  const std::size_t side = cfg.side;
  const double s = static_cast<double>(side);

  // Smooth background: a level plus a few low-frequency gratings.
  const double level = rng.uniform(0.15, 0.45);
  struct Grating {
    double amp, kx, ky, phase;
  };
  Grating gratings[3];
  for (auto& g : gratings) {
    const double cycles = rng.uniform(0.5, 3.0);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    g.amp = rng.uniform(0.0, 0.05);
    g.kx = 2.0 * std::numbers::pi * cycles * std::cos(angle) / s;
    g.ky = 2.0 * std::numbers::pi * cycles * std::sin(angle) / s;
    g.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  // Soft bright bumps appear in both classes and are what makes the task
  // ambiguous.
  struct Bump {
    double cx, cy, amp, inv_two_var;
  };
  const std::size_t n_bumps = rng.below(3);
  std::vector<Bump> bumps(n_bumps);
  for (auto& b : bumps) {
    b.cx = rng.uniform(0.0, s);
    b.cy = rng.uniform(0.0, s);
    b.amp = rng.uniform(0.05, 0.3);
    const double sd = rng.uniform(2.0, 6.0);
    b.inv_two_var = 1.0 / (2.0 * sd * sd);
  }

  double disc_r = 0.0, disc_x = 0.0, disc_y = 0.0, disc_v = 0.0;
  if (label == 1) {
    disc_r = rng.uniform(cfg.radius_min, cfg.radius_max);
    disc_x = rng.uniform(disc_r, s - disc_r);
    disc_y = rng.uniform(disc_r, s - disc_r);
    disc_v = rng.uniform(cfg.intensity_min, cfg.intensity_max);
  }

  std::vector<double> pixels(side * side);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      double v = level;
      for (const auto& g : gratings) v += g.amp * std::sin(g.kx * px + g.ky * py + g.phase);
      for (const auto& b : bumps) {
        const double d2 = (px - b.cx) * (px - b.cx) + (py - b.cy) * (py - b.cy);
        v += b.amp * std::exp(-d2 * b.inv_two_var);
      }
      if (label == 1) {
        const double dist = std::hypot(px - disc_x, py - disc_y);
        const double alpha = std::clamp(disc_r + 0.5 - dist, 0.0, 1.0);  // one-pixel antialiased rim
        v += alpha * (disc_v - v);
      }
      v += rng.normal(0.0, cfg.background_noise_sigma);
      pixels[y * side + x] = std::clamp(v, 0.0, 1.0);
    }
  }
  return GrayImage(side, side, std::move(pixels));
}

PhantomSet generate_phantoms(const PhantomConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PhantomSet set;
  const std::size_t n = 2 * cfg.n_per_class;
  set.images.reserve(n);
  set.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    set.images.push_back(generate_phantom(cfg, label, Seed{seed, i}));
    set.labels.push_back(label);
  }
  return set;
}

std::vector<double> featurize(const GrayImage& img) {
  if (img.width() < kFeatureGrid || img.height() < kFeatureGrid) {
    throw std::invalid_argument("image is smaller than the 8x8 feature grid");
  }
  const std::size_t bw = img.width() / kFeatureGrid;
  const std::size_t bh = img.height() / kFeatureGrid;
  std::vector<double> features(kFeatureDim);
  for (std::size_t by = 0; by < kFeatureGrid; ++by) {
    const std::size_t y0 = by * bh;
    const std::size_t y1 = by + 1 == kFeatureGrid ? img.height() : y0 + bh;
    for (std::size_t bx = 0; bx < kFeatureGrid; ++bx) {
      const std::size_t x0 = bx * bw;
      const std::size_t x1 = bx + 1 == kFeatureGrid ? img.width() : x0 + bw;
      double sum = 0.0;
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) sum += img(x, y);
      }
      features[by * kFeatureGrid + bx] = sum / static_cast<double>((y1 - y0) * (x1 - x0));
    }
  }
  return features;
}

FeatureMatrix featurize(std::span<const GrayImage> images) {
  FeatureMatrix out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(featurize(img));
  return out;
}

// ---------------------------------------------------------------------------
// Reference model

std::array<double, RefModel::kOutputs> RefModel::forward(std::span<const double> x) const {
  if (x.size() != input_dim) throw std::invalid_argument("feature dimension does not match the model");
  std::array<double, kOutputs> out{b2[0], b2[1]};
  for (std::size_t h = 0; h < hidden; ++h) {
    double a = b1[h];
    const double* w = w1.data() + h * input_dim;
    for (std::size_t d = 0; d < input_dim; ++d) a += w[d] * x[d];
    if (a <= 0.0) continue;
    out[0] += w2[h] * a;
    out[1] += w2[hidden + h] * a;
  }
  return out;
}

RefModel init_ref_model(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  if (input_dim == 0 || hidden == 0) throw std::invalid_argument("layer sizes must be positive");
  RefModel m;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.w1.resize(hidden * input_dim);
  m.b1.assign(hidden, 0.0);
  m.w2.resize(RefModel::kOutputs * hidden);
  m.b2.assign(RefModel::kOutputs, 0.0);
  SplitMix64 rng(derive_seed(seed, 0));
  const double sd1 = std::sqrt(2.0 / static_cast<double>(input_dim));
  const double sd2 = std::sqrt(2.0 / static_cast<double>(hidden));
  for (double& w : m.w1) w = rng.normal(0.0, sd1);
  for (double& w : m.w2) w = rng.normal(0.0, sd2);
  m.params.hidden = hidden;
  m.params.seed = seed;
  return m;
}

double loss_and_gradients(const RefModel& model, const FeatureMatrix& features, std::span<const int> labels,
                          std::span<const std::size_t> batch, ModelGradients& grads) {
  const std::size_t d_in = model.input_dim;
  const std::size_t n_hidden = model.hidden;
  grads.w1.assign(model.w1.size(), 0.0);
  grads.b1.assign(model.b1.size(), 0.0);
  grads.w2.assign(model.w2.size(), 0.0);
  grads.b2.assign(model.b2.size(), 0.0);
  if (batch.empty()) return 0.0;

  std::vector<double> pre(n_hidden), act(n_hidden);
  double loss = 0.0;
  for (const std::size_t idx : batch) {
    const auto& x = features[idx];
    for (std::size_t h = 0; h < n_hidden; ++h) {
      double a = model.b1[h];
      const double* w = model.w1.data() + h * d_in;
      for (std::size_t d = 0; d < d_in; ++d) a += w[d] * x[d];
      pre[h] = a;
      act[h] = a > 0.0 ? a : 0.0;
    }
    double o0 = model.b2[0], o1 = model.b2[1];
    for (std::size_t h = 0; h < n_hidden; ++h) {
      o0 += model.w2[h] * act[h];
      o1 += model.w2[n_hidden + h] * act[h];
    }
    const double shift = std::max(o0, o1);
    const double e0 = std::exp(o0 - shift), e1 = std::exp(o1 - shift);
    const double lse = shift + std::log(e0 + e1);
    const int y = labels[idx];
    loss += lse - (y == 0 ? o0 : o1);

    const double g0 = e0 / (e0 + e1) - (y == 0 ? 1.0 : 0.0);
    const double g1 = e1 / (e0 + e1) - (y == 1 ? 1.0 : 0.0);
    grads.b2[0] += g0;
    grads.b2[1] += g1;
    for (std::size_t h = 0; h < n_hidden; ++h) {
      grads.w2[h] += g0 * act[h];
      grads.w2[n_hidden + h] += g1 * act[h];
      if (pre[h] <= 0.0) continue;
      const double gh = g0 * model.w2[h] + g1 * model.w2[n_hidden + h];
      grads.b1[h] += gh;
      double* gw = grads.w1.data() + h * d_in;
      for (std::size_t d = 0; d < d_in; ++d) gw[d] += gh * x[d];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (auto* g : {&grads.w1, &grads.b1, &grads.w2, &grads.b2}) {
    for (double& v : *g) v *= inv_n;
  }
  return loss * inv_n;
}

RefModel train_ref_model(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params) {
  if (features.size() != labels.size()) throw std::invalid_argument("features and labels differ in length");
  if (features.size() < 2) throw std::invalid_argument("training needs at least two examples");
  const std::size_t d_in = features.front().size();
  if (d_in == 0) throw std::invalid_argument("empty feature vectors");
  bool seen[2] = {false, false};
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d_in) throw std::invalid_argument("ragged feature matrix");
    for (double v : features[i]) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    }
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    seen[labels[i]] = true;
  }
  if (!seen[0] || !seen[1]) throw std::invalid_argument("training data must contain both classes");
  if (params.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(params.learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");

  RefModel model = init_ref_model(d_in, params.hidden, params.seed);
  model.params = params;

  SplitMix64 rng(derive_seed(params.seed, 1));
  std::vector<std::size_t> order(features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  ModelGradients grads;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t len = std::min(params.batch_size, order.size() - start);
      loss_and_gradients(model, features, labels, std::span(order).subspan(start, len), grads);
      auto step = [&](std::vector<double>& w, const std::vector<double>& g) {
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= params.learning_rate * g[j];
      };
      step(model.w1, grads.w1);
      step(model.b1, grads.b1);
      step(model.w2, grads.w2);
      step(model.b2, grads.b2);
    }
  }
  return model;
}

LabeledLogits model_logits(const RefModel& model, const FeatureMatrix& features, std::span<const int> labels) {
  if (features.size() != labels.size()) throw std::invalid_argument("features and labels differ in length");
  std::vector<double> logits;
  logits.reserve(features.size() * RefModel::kOutputs);
  for (const auto& x : features) {
    if (x.size() != model.input_dim) throw std::invalid_argument("feature dimension does not match the model");
    const auto z = model.forward(x);
    logits.insert(logits.end(), z.begin(), z.end());
  }
  return LabeledLogits(RefModel::kOutputs, std::vector<int>(labels.begin(), labels.end()), std::move(logits));
}

// ---------------------------------------------------------------------------
// Persistence

std::string format_ref_model_json(const RefModel& m) {
  nlohmann::ordered_json j;
  j["layer_sizes"] = {m.input_dim, m.hidden, RefModel::kOutputs};
  j["hyperparameters"] = {{"hidden", m.params.hidden},
                          {"epochs", m.params.epochs},
                          {"learning_rate", m.params.learning_rate},
                          {"batch_size", m.params.batch_size},
                          {"seed", m.params.seed}};
  j["w1"] = m.w1;
  j["b1"] = m.b1;
  j["w2"] = m.w2;
  j["b2"] = m.b2;
  return j.dump(1) + "\n";
}

RefModel parse_ref_model_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InterchangeError(std::string("malformed model JSON: ") + e.what());
  }
  try {
    RefModel m;
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != 3 || sizes[2] != RefModel::kOutputs) throw InterchangeError("layer_sizes must be [D, H, 2]");
    m.input_dim = sizes[0];
    m.hidden = sizes[1];
    const auto& hp = j.at("hyperparameters");
    m.params.hidden = hp.at("hidden").get<std::size_t>();
    m.params.epochs = hp.at("epochs").get<std::size_t>();
    m.params.learning_rate = hp.at("learning_rate").get<double>();
    m.params.batch_size = hp.at("batch_size").get<std::size_t>();
    m.params.seed = hp.at("seed").get<std::uint64_t>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    if (m.w1.size() != m.hidden * m.input_dim || m.b1.size() != m.hidden ||
        m.w2.size() != RefModel::kOutputs * m.hidden || m.b2.size() != RefModel::kOutputs) {
      throw InterchangeError("weight array sizes do not match layer_sizes");
    }
    for (const auto* w : {&m.w1, &m.b1, &m.w2, &m.b2}) {
      for (double v : *w) {
        if (!std::isfinite(v)) throw InterchangeError("non-finite weight");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InterchangeError(std::string("invalid model JSON: ") + e.what());
  }
}

void save_ref_model(const RefModel& model, const std::filesystem::path& path) {
  write_text_file(path, format_ref_model_json(model));
}

RefModel load_ref_model(const std::filesystem::path& path) { return parse_ref_model_json(read_text_file(path)); }

}  // namespace tscal
