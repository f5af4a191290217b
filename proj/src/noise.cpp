#include "tscal/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tscal {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// Applies `pixel_fn(value, rng)` to every pixel, each with its own generator.
template <class PixelFn>
GrayImage map_pixels(const GrayImage& img, Seed seed, std::uint64_t first_pixel, PixelFn pixel_fn) {
  const std::uint64_t stream = seed.stream();
  const auto in = img.pixels();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto rng = SplitMix64::at(stream, first_pixel + i);
    out[i] = clip01(pixel_fn(in[i], rng));
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

NoiseSpec::NoiseSpec(Params params) : params_(params) {
  std::visit(overloaded{
                 [](const GaussianNoise& g) {
                   require(std::isfinite(g.mu), "gaussian mu must be finite");
                   require(g.sigma >= 0.0 && std::isfinite(g.sigma), "gaussian sigma must be >= 0");
                 },
                 [](const SaltPepperNoise& s) {
                   require(is_probability(s.salt_prob) && is_probability(s.pepper_prob),
                           "salt/pepper probabilities must lie in [0, 1]");
                   require(s.salt_prob + s.pepper_prob <= 1.0, "salt_prob + pepper_prob must be <= 1");
                 },
                 [](const PoissonNoise& p) {
                   require(p.scale > 0.0 && std::isfinite(p.scale), "poisson scale must be > 0");
                 },
                 [](const SpeckleNoise& s) {
                   require(s.scale >= 0.0 && std::isfinite(s.scale), "speckle scale must be >= 0");
                 },
                 [](const UniformNoise& u) {
                   require(u.scale >= 0.0 && std::isfinite(u.scale), "uniform scale must be >= 0");
                 },
             },
             params_);
}

std::string NoiseSpec::label() const {
  return std::visit(
      overloaded{
          [](const GaussianNoise& g) { return "gaussian mu=" + fmt(g.mu) + " sigma=" + fmt(g.sigma); },
          [](const SaltPepperNoise& s) {
            return "salt-pepper salt=" + fmt(s.salt_prob) + " pepper=" + fmt(s.pepper_prob);
          },
          [](const PoissonNoise& p) { return "poisson scale=" + fmt(p.scale); },
          [](const SpeckleNoise& s) { return "speckle scale=" + fmt(s.scale); },
          [](const UniformNoise& u) { return "uniform scale=" + fmt(u.scale); },
      },
      params_);
}

std::string kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::salt_pepper: return "salt-pepper";
    case NoiseKind::poisson: return "poisson";
    case NoiseKind::speckle: return "speckle";
    case NoiseKind::uniform: return "uniform";
  }
  return "unknown";
}

GrayImage inject_gaussian(const GrayImage& img, double mu, double sigma, Seed seed, std::uint64_t first_pixel) {
  NoiseSpec(GaussianNoise{mu, sigma});
  if (sigma == 0.0 && mu == 0.0) return img;
  return map_pixels(img, seed, first_pixel, [&](double p, SplitMix64& rng) { return p + rng.normal(mu, sigma); });
}

GrayImage inject_salt_pepper(const GrayImage& img, double salt_prob, double pepper_prob, Seed seed,
                             std::uint64_t first_pixel) {
  NoiseSpec(SaltPepperNoise{salt_prob, pepper_prob});
  return map_pixels(img, seed, first_pixel, [&](double p, SplitMix64& rng) {
    const double u = rng.uniform();
    if (u < salt_prob) return 1.0;
    if (u < salt_prob + pepper_prob) return 0.0;
    return p;
  });
}

GrayImage inject_poisson(const GrayImage& img, double scale, Seed seed, std::uint64_t first_pixel) {
  NoiseSpec(PoissonNoise{scale});
  const double photons = 255.0 * scale;
  return map_pixels(img, seed, first_pixel, [&](double p, SplitMix64& rng) {
    return static_cast<double>(rng.poisson(p * photons)) / photons;
  });
}

GrayImage inject_speckle(const GrayImage& img, double scale, Seed seed, std::uint64_t first_pixel) {
  NoiseSpec(SpeckleNoise{scale});
  if (scale == 0.0) return img;
  return map_pixels(img, seed, first_pixel,
                    [&](double p, SplitMix64& rng) { return p * (1.0 + rng.normal(0.0, scale)); });
}

GrayImage inject_uniform(const GrayImage& img, double scale, Seed seed, std::uint64_t first_pixel) {
  NoiseSpec(UniformNoise{scale});
  if (scale == 0.0) return img;
  return map_pixels(img, seed, first_pixel,
                    [&](double p, SplitMix64& rng) { return p + rng.uniform(-scale, scale); });
}

GrayImage inject(const GrayImage& img, const NoiseSpec& spec, Seed seed, std::uint64_t first_pixel) {
  return std::visit(
      overloaded{
          [&](const GaussianNoise& g) { return inject_gaussian(img, g.mu, g.sigma, seed, first_pixel); },
          [&](const SaltPepperNoise& s) {
            return inject_salt_pepper(img, s.salt_prob, s.pepper_prob, seed, first_pixel);
          },
          [&](const PoissonNoise& p) { return inject_poisson(img, p.scale, seed, first_pixel); },
          [&](const SpeckleNoise& s) { return inject_speckle(img, s.scale, seed, first_pixel); },
          [&](const UniformNoise& u) { return inject_uniform(img, u.scale, seed, first_pixel); },
      },
      spec.params());
}

}  // namespace tscal
