#pragma once

// Synthetic two-class image data and a small reference classifier that
// turns it into logits: class 1 images hold one bright disc over a textured
// background, class 0 images are background only. The classifier is a
// two-layer perceptron over 8x8 block means.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tscal/interchange.hpp"
#include "tscal/rng.hpp"

namespace tscal {

struct PhantomConfig {
  std::size_t n_per_class = 400;
  std::size_t side = 64;
  double radius_min = 6.0;
  double radius_max = 14.0;
  double intensity_min = 0.6;
  double intensity_max = 0.9;
  double background_noise_sigma = 0.05;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct PhantomSet {
  std::vector<GrayImage> images;
  std::vector<int> labels;
};

/// One phantom of the given class, drawn from the stream of `seed`.
GrayImage generate_phantom(const PhantomConfig& cfg, int label, Seed seed);

/// 2 * n_per_class images, classes alternating 0, 1, 0, 1, ...; image i
/// draws from Seed{seed, i}.
PhantomSet generate_phantoms(const PhantomConfig& cfg, std::uint64_t seed);

inline constexpr std::size_t kFeatureGrid = 8;
inline constexpr std::size_t kFeatureDim = kFeatureGrid * kFeatureGrid;

using FeatureMatrix = std::vector<std::vector<double>>;

/// 8x8 block means, row-major. Blocks are side / 8 pixels wide (floor); the
/// last block in each direction absorbs the remainder.
std::vector<double> featurize(const GrayImage& img);
FeatureMatrix featurize(std::span<const GrayImage> images);

struct TrainParams {
  std::size_t hidden = 64;
  std::size_t epochs = 500;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

/// Linear -> ReLU -> linear network with two outputs.
struct RefModel {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x input_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // 2 x hidden, row-major
  std::vector<double> b2;  // 2
  TrainParams params;

  static constexpr std::size_t kOutputs = 2;

  /// Raw logits for one input.
  std::array<double, kOutputs> forward(std::span<const double> x) const;

  friend bool operator==(const RefModel&, const RefModel&) = default;
};

/// He-initialised weights drawn from `seed`, zero biases.
RefModel init_ref_model(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

/// Parameter gradients laid out like RefModel.
struct ModelGradients {
  std::vector<double> w1, b1, w2, b2;
};

/// Mean softmax cross-entropy over the rows named by `batch`, with gradients.
double loss_and_gradients(const RefModel& model, const FeatureMatrix& features, std::span<const int> labels,
                          std::span<const std::size_t> batch, ModelGradients& grads);

/// Mini-batch gradient descent on softmax cross-entropy. Throws
/// std::invalid_argument for fewer than two examples, a single class,
/// mismatched sizes or non-finite features.
RefModel train_ref_model(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params);

/// Raw logits paired with labels. Throws std::invalid_argument on a
/// dimension mismatch.
LabeledLogits model_logits(const RefModel& model, const FeatureMatrix& features, std::span<const int> labels);

std::string format_ref_model_json(const RefModel& model);
RefModel parse_ref_model_json(std::string_view text);
void save_ref_model(const RefModel& model, const std::filesystem::path& path);
RefModel load_ref_model(const std::filesystem::path& path);

}  // namespace tscal
