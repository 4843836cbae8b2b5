#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "privlens/stage2.hpp"

namespace privlens::stage2::mocks {

// Deterministic stand-ins for the Stage II networks. Random weights are
// drawn from a counter-based stream, so a mock is fully described by its
// seed and shape and holds no mutable state (RecordingDiscriminator aside).

/// Weight in [-1, 1] addressed by (seed, row, col).
double weight(std::uint64_t seed, std::uint64_t row, std::uint64_t col);

/// Returns a fixed image regardless of its inputs.
class ConstantImageGenerator final : public Generator {
 public:
  explicit ConstantImageGenerator(Image image) : image_(std::move(image)) {}
  Image generate(const Latent&, const Heatmap&, const StyleCode&) const override {
    return image_;
  }

 private:
  Image image_;
};

/// Reshapes the latent vector back into an H x W x C image (inverse of
/// FlattenEncoder); heatmap and style are ignored.
class LatentDecoderGenerator final : public Generator {
 public:
  LatentDecoderGenerator(int height, int width, int channels)
      : height_(height), width_(width), channels_(channels) {}
  Image generate(const Latent& latent, const Heatmap&, const StyleCode&) const override;

 private:
  int height_, width_, channels_;
};

/// Value at flat index t (channel-major) is style[t mod D].
class StyleBroadcastGenerator final : public Generator {
 public:
  StyleBroadcastGenerator(int height, int width, int channels)
      : height_(height), width_(width), channels_(channels) {}
  Image generate(const Latent& latent, const Heatmap& heatmap,
                 const StyleCode& style) const override;

 private:
  int height_, width_, channels_;
};

/// Random single-layer generator:
/// out_t = sigmoid(a_t latent[t mod L] + b_t m(pixel) + c_t style[t mod D] + d_t).
class LinearGenerator final : public Generator {
 public:
  LinearGenerator(std::uint64_t seed, int height, int width, int channels)
      : seed_(seed), height_(height), width_(width), channels_(channels) {}
  Image generate(const Latent& latent, const Heatmap& heatmap,
                 const StyleCode& style) const override;

 private:
  std::uint64_t seed_;
  int height_, width_, channels_;
};

/// s_k = sum_t W[omega][k][t] x_t / sqrt(P).
class LinearStyleEncoder final : public StyleEncoder {
 public:
  LinearStyleEncoder(std::uint64_t seed, int dims) : seed_(seed), dims_(dims) {}
  StyleCode encode(const Image& image, DomainLabel domain) const override;

 private:
  std::uint64_t seed_;
  int dims_;
};

/// Reads back what StyleBroadcastGenerator wrote: s_k is the mean over
/// flat indices t with t mod D == k, plus a constant offset.
class BroadcastStyleReader final : public StyleEncoder {
 public:
  BroadcastStyleReader(int dims, double offset = 0.0) : dims_(dims), offset_(offset) {}
  StyleCode encode(const Image& image, DomainLabel domain) const override;

 private:
  int dims_;
  double offset_;
};

class ConstantDiscriminator final : public Discriminator {
 public:
  explicit ConstantDiscriminator(double value) : value_(value) {}
  double score(const Image&, DomainLabel) const override { return value_; }

 private:
  double value_;
};

class FunctionDiscriminator final : public Discriminator {
 public:
  using Fn = std::function<double(const Image&, DomainLabel)>;
  explicit FunctionDiscriminator(Fn fn) : fn_(std::move(fn)) {}
  double score(const Image& image, DomainLabel domain) const override {
    return fn_(image, domain);
  }

 private:
  Fn fn_;
};

/// sigmoid(sum_t w[omega][t] x_t / sqrt(P) + b_omega).
class LogisticDiscriminator final : public Discriminator {
 public:
  explicit LogisticDiscriminator(std::uint64_t seed) : seed_(seed) {}
  double score(const Image& image, DomainLabel domain) const override;

 private:
  std::uint64_t seed_;
};

/// Forwards to an inner discriminator and keeps a copy of every input.
class RecordingDiscriminator final : public Discriminator {
 public:
  explicit RecordingDiscriminator(std::shared_ptr<const Discriminator> inner)
      : inner_(std::move(inner)) {}
  double score(const Image& image, DomainLabel domain) const override;
  std::vector<Image> seen() const;

 private:
  std::shared_ptr<const Discriminator> inner_;
  mutable std::mutex mutex_;
  mutable std::vector<Image> seen_;
};

/// Latent = flattened pixels.
class FlattenEncoder final : public InversionEncoder {
 public:
  Latent encode(const Image& image) const override { return flatten(image); }
};

/// Latent = W x / sqrt(P) with a random L x P matrix.
class ProjectionEncoder final : public InversionEncoder {
 public:
  ProjectionEncoder(std::uint64_t seed, int dims) : seed_(seed), dims_(dims) {}
  Latent encode(const Image& image) const override;

 private:
  std::uint64_t seed_;
  int dims_;
};

/// Features = W x with a random F x P matrix, W[f][t] = weight(seed, f, t).
class LinearPerceptual final : public PerceptualExtractor {
 public:
  LinearPerceptual(std::uint64_t seed, int dims) : seed_(seed), dims_(dims) {}
  Features features(const Image& image) const override;
  double entry(int feature, std::size_t pixel) const { return weight(seed_, feature, pixel); }
  int dims() const { return dims_; }

 private:
  std::uint64_t seed_;
  int dims_;
};

inline constexpr int kDefaultStyleDims = 16;
inline constexpr int kDefaultLatentDims = 32;
inline constexpr int kDefaultFeatureDims = 64;

/// Named bundles for images of the given shape:
///   "identity" - G decodes E(y) = flattened y, so G(E(y), ...) == y;
///   "linear"   - every network a seeded random linear map;
///   "constant" - G returns mid-grey, D returns 0.5.
/// Throws ConfigError for unknown names.
ModelBundle make_bundle(const std::string& name, int height, int width, int channels,
                        std::uint64_t seed, double heatmap_cutoff = 0.05);

std::vector<std::string> bundle_names();

}  // namespace privlens::stage2::mocks
