#include "privlens/stage2_mocks.hpp"

#include <cmath>
#include <stdexcept>

#include "privlens/errors.hpp"
#include "privlens/rng.hpp"

namespace privlens::stage2::mocks {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Image image_from_flat(const std::vector<double>& flat, int height, int width, int channels) {
  Image out(height, width, channels);
  std::size_t t = 0;
  for (int c = 0; c < channels; ++c) {
    for (auto& v : out.plane(c).values()) {
      v = flat[t++];
    }
  }
  return out;
}

std::vector<double> project(std::uint64_t seed, int dims, const Image& image, double scale) {
  const std::vector<double> x = flatten(image);
  std::vector<double> out(dims, 0.0);
  for (int k = 0; k < dims; ++k) {
    double sum = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      sum += weight(seed, k, t) * x[t];
    }
    out[k] = sum * scale;
  }
  return out;
}

double inverse_sqrt_size(const Image& image) {
  return image.value_count() == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(image.value_count()));
}

void require_positive(int value, const char* what) {
  if (value < 1) {
    throw std::invalid_argument(std::string(what) + " must be >= 1");
  }
}

}  // namespace

double weight(std::uint64_t seed, std::uint64_t row, std::uint64_t col) {
  return rng::uniform(rng::derive(seed, row), col, -1.0, 1.0);
}

Image LatentDecoderGenerator::generate(const Latent& latent, const Heatmap&,
                                       const StyleCode&) const {
  const std::size_t expected = static_cast<std::size_t>(height_) * width_ * channels_;
  if (latent.size() != expected) {
    throw std::invalid_argument("LatentDecoderGenerator: latent has " +
                                std::to_string(latent.size()) + " entries, expected " +
                                std::to_string(expected));
  }
  return image_from_flat(latent, height_, width_, channels_);
}

Image StyleBroadcastGenerator::generate(const Latent&, const Heatmap&,
                                        const StyleCode& style) const {
  if (style.empty()) {
    throw std::invalid_argument("StyleBroadcastGenerator: empty style code");
  }
  const std::size_t count = static_cast<std::size_t>(height_) * width_ * channels_;
  std::vector<double> flat(count);
  for (std::size_t t = 0; t < count; ++t) {
    flat[t] = style[t % style.size()];
  }
  return image_from_flat(flat, height_, width_, channels_);
}

Image LinearGenerator::generate(const Latent& latent, const Heatmap& heatmap,
                                const StyleCode& style) const {
  if (latent.empty() || style.empty()) {
    throw std::invalid_argument("LinearGenerator: empty latent or style code");
  }
  if (heatmap.height() != height_ || heatmap.width() != width_) {
    throw std::invalid_argument("LinearGenerator: heatmap size differs from output size");
  }
  Image out(height_, width_, channels_);
  std::size_t t = 0;
  for (int c = 0; c < channels_; ++c) {
    for (int r = 0; r < height_; ++r) {
      for (int k = 0; k < width_; ++k, ++t) {
        out(r, k, c) = sigmoid(weight(seed_, 0, t) * latent[t % latent.size()] +
                               weight(seed_, 1, t) * heatmap(r, k) +
                               weight(seed_, 2, t) * style[t % style.size()] +
                               weight(seed_, 3, t));
      }
    }
  }
  return out;
}

StyleCode LinearStyleEncoder::encode(const Image& image, DomainLabel domain) const {
  require_positive(dims_, "LinearStyleEncoder dims");
  return project(rng::derive(seed_, static_cast<std::uint64_t>(domain.value)), dims_, image,
                 inverse_sqrt_size(image));
}

StyleCode BroadcastStyleReader::encode(const Image& image, DomainLabel) const {
  require_positive(dims_, "BroadcastStyleReader dims");
  const std::vector<double> x = flatten(image);
  StyleCode sums(dims_, 0.0);
  std::vector<int> counts(dims_, 0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    sums[t % dims_] += x[t];
    ++counts[t % dims_];
  }
  for (int k = 0; k < dims_; ++k) {
    sums[k] = (counts[k] > 0 ? sums[k] / counts[k] : 0.0) + offset_;
  }
  return sums;
}

double LogisticDiscriminator::score(const Image& image, DomainLabel domain) const {
  const std::uint64_t key = rng::derive(seed_, static_cast<std::uint64_t>(domain.value));
  const std::vector<double> logit = project(key, 1, image, inverse_sqrt_size(image));
  return sigmoid(logit[0] + weight(key, 1, 0));
}

double RecordingDiscriminator::score(const Image& image, DomainLabel domain) const {
  {
    std::lock_guard lock(mutex_);
    seen_.push_back(image);
  }
  return inner_->score(image, domain);
}

std::vector<Image> RecordingDiscriminator::seen() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

Latent ProjectionEncoder::encode(const Image& image) const {
  require_positive(dims_, "ProjectionEncoder dims");
  return project(seed_, dims_, image, inverse_sqrt_size(image));
}

Features LinearPerceptual::features(const Image& image) const {
  require_positive(dims_, "LinearPerceptual dims");
  return project(seed_, dims_, image, 1.0);
}

ModelBundle make_bundle(const std::string& name, int height, int width, int channels,
                        std::uint64_t seed, double heatmap_cutoff) {
  ModelBundle bundle;
  bundle.style_encoder = std::make_shared<LinearStyleEncoder>(rng::derive(seed, 1), kDefaultStyleDims);
  bundle.discriminator = std::make_shared<LogisticDiscriminator>(rng::derive(seed, 2));
  bundle.inversion_encoder =
      std::make_shared<ProjectionEncoder>(rng::derive(seed, 3), kDefaultLatentDims);
  bundle.perceptual = std::make_shared<LinearPerceptual>(rng::derive(seed, 4), kDefaultFeatureDims);
  bundle.heatmap = std::make_shared<LowpassHeatmapProxy>(heatmap_cutoff);
  if (name == "identity") {
    bundle.generator = std::make_shared<LatentDecoderGenerator>(height, width, channels);
    bundle.inversion_encoder = std::make_shared<FlattenEncoder>();
  } else if (name == "linear") {
    bundle.generator =
        std::make_shared<LinearGenerator>(rng::derive(seed, 5), height, width, channels);
  } else if (name == "constant") {
    bundle.generator =
        std::make_shared<ConstantImageGenerator>(Image(height, width, channels, 0.5));
    bundle.discriminator = std::make_shared<ConstantDiscriminator>(0.5);
  } else {
    throw ConfigError("unknown mock bundle '" + name + "' (expected identity, linear or constant)");
  }
  return bundle;
}

std::vector<std::string> bundle_names() { return {"identity", "linear", "constant"}; }

}  // namespace privlens::stage2::mocks
