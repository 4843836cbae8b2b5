#include "privlens/stage2.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "privlens/errors.hpp"

namespace privlens::stage2 {
namespace {

double mean_l1(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
  if (a.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a[i] - b[i]);
  }
  return sum / static_cast<double>(a.size());
}

double image_l1(const Image& a, const Image& b, const char* what) {
  require_same_shape(a, b, what);
  return mean_absolute_error(a, b);
}

// G(E(y), U(y), style)
Image translate(const ModelBundle& bundle, const Image& y, const StyleCode& style) {
  return bundle.generator->generate(bundle.inversion_encoder->encode(y),
                                    bundle.heatmap->extract(y), style);
}

double clamp_probability(double p, int& clamped) {
  if (std::isnan(p)) {
    throw NumericalError("discriminator returned NaN");
  }
  if (p < kDiscriminatorEpsilon) {
    ++clamped;
    return kDiscriminatorEpsilon;
  }
  if (p > 1.0 - kDiscriminatorEpsilon) {
    ++clamped;
    return 1.0 - kDiscriminatorEpsilon;
  }
  return p;
}

}  // namespace

void ModelBundle::check() const {
  if (!generator || !style_encoder || !discriminator || !inversion_encoder || !perceptual ||
      !heatmap) {
    throw std::invalid_argument("ModelBundle: every network must be provided");
  }
}

AdversarialLoss adv_loss(const ModelBundle& bundle, const Image& y, const Image& r,
                         DomainLabel omega, DomainLabel omega_tilde) {
  bundle.check();
  const Image fake = translate(bundle, y, bundle.style_encoder->encode(r, omega_tilde));
  AdversarialLoss out;
  const double real_score = clamp_probability(bundle.discriminator->score(r, omega), out.clamped);
  const double fake_score =
      clamp_probability(bundle.discriminator->score(fake, omega_tilde), out.clamped);
  out.value = std::log(real_score) + std::log(1.0 - fake_score);
  return out;
}

double sty_loss(const ModelBundle& bundle, const Image& y, const Image& r,
                DomainLabel omega_tilde) {
  bundle.check();
  const StyleCode style = bundle.style_encoder->encode(r, omega_tilde);
  const Image fake = translate(bundle, y, style);
  return mean_l1(style, bundle.style_encoder->encode(fake, omega_tilde), "sty_loss");
}

double ds_loss(const ModelBundle& bundle, const Image& y, const Image& r1, const Image& r2,
               DomainLabel omega_tilde) {
  bundle.check();
  const Latent latent = bundle.inversion_encoder->encode(y);
  const Heatmap m = bundle.heatmap->extract(y);
  const Image a =
      bundle.generator->generate(latent, m, bundle.style_encoder->encode(r1, omega_tilde));
  const Image b =
      bundle.generator->generate(latent, m, bundle.style_encoder->encode(r2, omega_tilde));
  return image_l1(a, b, "ds_loss");
}

double cyc_loss(const ModelBundle& bundle, const Image& y, DomainLabel omega,
                DomainLabel omega_tilde, const Image& r) {
  bundle.check();
  const Image fake = translate(bundle, y, bundle.style_encoder->encode(r, omega_tilde));
  const Image back = bundle.generator->generate(bundle.inversion_encoder->encode(fake),
                                                bundle.heatmap->extract(fake),
                                                bundle.style_encoder->encode(y, omega));
  return image_l1(y, back, "cyc_loss");
}

double lpips_loss(const ModelBundle& bundle, const Image& y, const Image& r,
                  DomainLabel omega_tilde) {
  bundle.check();
  const Image fake = translate(bundle, y, bundle.style_encoder->encode(r, omega_tilde));
  const Features a = bundle.perceptual->features(r);
  const Features b = bundle.perceptual->features(fake);
  if (a.size() != b.size()) {
    throw std::invalid_argument("lpips_loss: feature dimensions differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(sum);
}

double expr_loss(const Image& x, const Image& y, const Heatmap& m_star, const Heatmap& m) {
  require_same_shape(x, y, "expr_loss");
  if (m_star.height() != x.height() || m_star.width() != x.width() || !m.same_shape(m_star)) {
    throw std::invalid_argument("expr_loss: heatmap size differs from image size");
  }
  if (x.value_count() == 0) {
    return 0.0;
  }
  double sum = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    for (int r = 0; r < x.height(); ++r) {
      for (int k = 0; k < x.width(); ++k) {
        sum += std::abs(m_star(r, k) * x(r, k, c) - m(r, k) * y(r, k, c));
      }
    }
  }
  return sum / static_cast<double>(x.value_count());
}

double combine(const LossBreakdown& c, const LossWeights& w) {
  return c.adv + w.sty * c.sty - w.ds * c.ds + w.cyc * c.cyc + w.lpips * c.lpips +
         w.expr * c.expr;
}

LossBreakdown full_stage2_objective(const ModelBundle& bundle,
                                    std::span<const Stage2Sample> batch,
                                    const LossWeights& weights) {
  bundle.check();
  if (batch.empty()) {
    throw std::invalid_argument("full_stage2_objective: empty batch");
  }
  if (weights.sty < 0 || weights.ds < 0 || weights.cyc < 0 || weights.lpips < 0 ||
      weights.expr < 0) {
    throw std::invalid_argument("full_stage2_objective: weights must be >= 0");
  }
  LossBreakdown out;
  for (const Stage2Sample& s : batch) {
    const AdversarialLoss adv = adv_loss(bundle, s.y, s.r, s.omega, s.omega_tilde);
    out.adv += adv.value;
    out.clamped_discriminator_outputs += adv.clamped;
    out.sty += sty_loss(bundle, s.y, s.r, s.omega_tilde);
    out.ds += ds_loss(bundle, s.y, s.r1, s.r2, s.omega_tilde);
    out.cyc += cyc_loss(bundle, s.y, s.omega, s.omega_tilde, s.r);
    out.lpips += lpips_loss(bundle, s.y, s.r, s.omega_tilde);
    const Heatmap m_star = s.m_star ? *s.m_star : bundle.heatmap->extract(s.x);
    out.expr += expr_loss(s.x, s.y, m_star, bundle.heatmap->extract(s.y));
  }
  const double n = static_cast<double>(batch.size());
  out.adv /= n;
  out.sty /= n;
  out.ds /= n;
  out.cyc /= n;
  out.lpips /= n;
  out.expr /= n;
  out.total = combine(out, weights);
  return out;
}

}  // namespace privlens::stage2
