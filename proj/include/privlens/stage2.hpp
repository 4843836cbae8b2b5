#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "privlens/heatmap.hpp"
#include "privlens/image.hpp"

namespace privlens::stage2 {

using StyleCode = std::vector<double>;
using Latent = std::vector<double>;
using Features = std::vector<double>;

/// Domain id omega, e.g. 0 = male, 1 = female.
struct DomainLabel {
  int value = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual Image generate(const Latent& latent, const Heatmap& heatmap,
                         const StyleCode& style) const = 0;
};

class StyleEncoder {
 public:
  virtual ~StyleEncoder() = default;
  virtual StyleCode encode(const Image& image, DomainLabel domain) const = 0;
};

/// Multi-task discriminator; score() is branch D_omega, a probability.
class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual double score(const Image& image, DomainLabel domain) const = 0;
};

class InversionEncoder {
 public:
  virtual ~InversionEncoder() = default;
  virtual Latent encode(const Image& image) const = 0;
};

class PerceptualExtractor {
 public:
  virtual ~PerceptualExtractor() = default;
  virtual Features features(const Image& image) const = 0;
};

struct ModelBundle {
  std::shared_ptr<const Generator> generator;
  std::shared_ptr<const StyleEncoder> style_encoder;
  std::shared_ptr<const Discriminator> discriminator;
  std::shared_ptr<const InversionEncoder> inversion_encoder;
  std::shared_ptr<const PerceptualExtractor> perceptual;
  /// Frozen heatmap regressor used for m = U(y) and m_hat = U*(G(...)).
  std::shared_ptr<const HeatmapExtractor> heatmap;

  /// Throws std::invalid_argument when a member is missing.
  void check() const;
};

struct LossWeights {
  double sty = 1.0;
  double ds = 1.0;
  double cyc = 1.0;
  double lpips = 1.0;
  double expr = 1.0;
};

inline constexpr double kDiscriminatorEpsilon = 1e-7;

struct AdversarialLoss {
  double value = 0.0;
  /// Number of discriminator outputs that had to be clamped into
  /// [eps, 1 - eps].
  int clamped = 0;
};

/// log D_omega(r) + log(1 - D_omega~(G(E(y), U(y), S_omega~(r)))).
AdversarialLoss adv_loss(const ModelBundle& bundle, const Image& y, const Image& r,
                         DomainLabel omega, DomainLabel omega_tilde);

/// mean_k |s~_k - S_omega~(G(E(y), U(y), s~))_k| with s~ = S_omega~(r).
double sty_loss(const ModelBundle& bundle, const Image& y, const Image& r,
                DomainLabel omega_tilde);

/// mean |G(E(y), U(y), s~1) - G(E(y), U(y), s~2)|.
double ds_loss(const ModelBundle& bundle, const Image& y, const Image& r1, const Image& r2,
               DomainLabel omega_tilde);

/// mean |y - G(y^, m^, s^)| with y^ = E(f), m^ = U*(f), s^ = S_omega(y),
/// f = G(E(y), U(y), S_omega~(r)).
double cyc_loss(const ModelBundle& bundle, const Image& y, DomainLabel omega,
                DomainLabel omega_tilde, const Image& r);

/// ||Q(r) - Q(G(E(y), U(y), s~))||_2, not squared.
double lpips_loss(const ModelBundle& bundle, const Image& y, const Image& r,
                  DomainLabel omega_tilde);

/// mean |m* . x - m . y|, heatmaps broadcast over channels.
double expr_loss(const Image& x, const Image& y, const Heatmap& m_star, const Heatmap& m);

/// One training example. The discriminator only ever sees r and generated
/// images; x is consumed by expr_loss alone.
struct Stage2Sample {
  Image x;
  Image y;
  Image r;
  Image r1;
  Image r2;
  DomainLabel omega;
  DomainLabel omega_tilde;
  /// Ground-truth heatmap of x; U applied to x when absent.
  std::optional<Heatmap> m_star;
};

struct LossBreakdown {
  double adv = 0.0;
  double sty = 0.0;
  double ds = 0.0;
  double cyc = 0.0;
  double lpips = 0.0;
  double expr = 0.0;
  double total = 0.0;
  int clamped_discriminator_outputs = 0;
};

/// total = adv + w.sty sty - w.ds ds + w.cyc cyc + w.lpips lpips + w.expr expr
double combine(const LossBreakdown& components, const LossWeights& weights);

/// Batch means of every component and their weighted total. Throws
/// std::invalid_argument on an empty batch or negative weights.
LossBreakdown full_stage2_objective(const ModelBundle& bundle,
                                    std::span<const Stage2Sample> batch,
                                    const LossWeights& weights);

}  // namespace privlens::stage2
