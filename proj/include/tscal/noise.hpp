#pragma once

// Seeded synthetic noise on grayscale images. Each pixel draws from its own
// counter-addressed generator keyed by (image stream, pixel index), so the
// noise field is a pure function of the seed and independent of how pixels
// are traversed. Every injector clips its output to [0, 1].

#include <cstdint>
#include <string>
#include <variant>

#include "tscal/interchange.hpp"
#include "tscal/rng.hpp"

namespace tscal {

/// Additive N(mu, sigma^2); sigma is the standard deviation.
struct GaussianNoise {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Impulse noise: white with salt_prob, black with pepper_prob, disjoint.
struct SaltPepperNoise {
  double salt_prob = 0.0;
  double pepper_prob = 0.0;
};

/// Photon counting: Poisson(p * 255 * scale) / (255 * scale).
struct PoissonNoise {
  double scale = 1.0;
};

/// Multiplicative 1 + N(0, scale^2).
struct SpeckleNoise {
  double scale = 0.0;
};

/// Additive U[-scale, +scale].
struct UniformNoise {
  double scale = 0.0;
};

enum class NoiseKind { gaussian, salt_pepper, poisson, speckle, uniform };

class NoiseSpec {
 public:
  using Params = std::variant<GaussianNoise, SaltPepperNoise, PoissonNoise, SpeckleNoise, UniformNoise>;

  /// Throws std::invalid_argument if the parameters are out of range.
  explicit NoiseSpec(Params params);

  NoiseKind kind() const noexcept { return static_cast<NoiseKind>(params_.index()); }
  const Params& params() const noexcept { return params_; }
  /// Short human-readable label, e.g. "gaussian mu=0 sigma=0.02".
  std::string label() const;

 private:
  Params params_;
};

/// CLI spelling of a kind ("gaussian", "salt-pepper", ...).
std::string kind_name(NoiseKind kind);

// `first_pixel` is the stream position of the image's first pixel. It is 0
// for whole images; a crop of full rows starting at row r uses r * width.
GrayImage inject_gaussian(const GrayImage& img, double mu, double sigma, Seed seed,
                          std::uint64_t first_pixel = 0);
GrayImage inject_salt_pepper(const GrayImage& img, double salt_prob, double pepper_prob, Seed seed,
                             std::uint64_t first_pixel = 0);
GrayImage inject_poisson(const GrayImage& img, double scale, Seed seed, std::uint64_t first_pixel = 0);
GrayImage inject_speckle(const GrayImage& img, double scale, Seed seed, std::uint64_t first_pixel = 0);
GrayImage inject_uniform(const GrayImage& img, double scale, Seed seed, std::uint64_t first_pixel = 0);

GrayImage inject(const GrayImage& img, const NoiseSpec& spec, Seed seed, std::uint64_t first_pixel = 0);

}  // namespace tscal
