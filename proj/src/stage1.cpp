#include "privlens/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "privlens/errors.hpp"
#include "privlens/parallel.hpp"
#include "privlens/rng.hpp"

namespace privlens {

void Stage1Hyper::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) {
    throw ConfigError("stage1: alpha1 and alpha2 must be >= 0");
  }
  if (!(learning_rate > 0.0) || !(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("stage1: learning_rate must be > 0 and momentum in [0, 1)");
  }
  if (iterations < 0) {
    throw ConfigError("stage1: iterations must be >= 0");
  }
  if (!(fd_step_um > 0.0)) {
    throw ConfigError("stage1: fd_step_um must be > 0");
  }
  if (batch_size < 1) {
    throw ConfigError("stage1: batch_size must be >= 1");
  }
  if (!(init_jitter_um >= 0.0) || !std::isfinite(regularizer_defocus_um)) {
    throw ConfigError("stage1: init_jitter_um must be >= 0 and the H_f defocus finite");
  }
  if (!(noise_sigma >= 0.0)) {
    throw ConfigError("stage1: noise sigma must be >= 0");
  }
  if (zernike_terms < 1) {
    throw ConfigError("stage1: zernike_terms must be >= 1");
  }
}

double psf_distance(const PsfStack& a, const PsfStack& b) {
  if (a.channels() != b.channels() || a.size() != b.size()) {
    throw std::invalid_argument("psf_distance: PSF stacks differ in shape");
  }
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto va = a.kernels[c].values();
    const auto vb = b.kernels[c].values();
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = va[i] - vb[i];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

double optics_loss(const Image& x, const Image& y, const PsfStack& psf,
                   const PsfStack& regularizer, double alpha1) {
  return 1.0 - mean_squared_error(x, y) + alpha1 * psf_distance(psf, regularizer);
}

double optics_loss(std::span<const Image> xs, std::span<const Image> ys, const PsfStack& psf,
                   const PsfStack& regularizer, double alpha1) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw std::invalid_argument("optics_loss: batches must be non-empty and aligned");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += optics_loss(xs[i], ys[i], psf, regularizer, alpha1);
  }
  return sum / static_cast<double>(xs.size());
}

double hmap_loss(const Heatmap& m_y, const Heatmap& m_x_star) {
  if (!m_y.same_shape(m_x_star)) {
    throw std::invalid_argument("hmap_loss: heatmap shapes differ");
  }
  const auto a = m_y.grid().values();
  const auto b = m_x_star.grid().values();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a[i] - b[i]);
  }
  return a.empty() ? 0.0 : sum / static_cast<double>(a.size());
}

std::vector<double> fd_gradient(const ScalarObjective& objective,
                                const zernike::ZernikeCoefficients& beta, double step,
                                const std::vector<bool>& active) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("fd_gradient: step must be positive");
  }
  const int p = beta.size();
  if (!active.empty() && static_cast<int>(active.size()) != p) {
    throw std::invalid_argument("fd_gradient: active mask length differs from p");
  }
  std::vector<int> indices;
  for (int j = 0; j < p; ++j) {
    if (active.empty() || active[j]) {
      indices.push_back(j);
    }
  }

  // Entry 2k is L(b + h e_j), entry 2k+1 is L(b - h e_j), with j = indices[k].
  std::vector<double> values(2 * indices.size());
  const std::vector<double> base(beta.values().begin(), beta.values().end());
  parallel_for(values.size(), [&](std::size_t e) {
    std::vector<double> shifted = base;
    shifted[indices[e / 2]] += (e % 2 == 0) ? step : -step;
    values[e] = objective(zernike::ZernikeCoefficients(std::move(shifted)));
  });

  std::vector<double> gradient(p, 0.0);
  std::string bad;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double plus = values[2 * k];
    const double minus = values[2 * k + 1];
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(indices[k] + 1);
      continue;
    }
    gradient[indices[k]] = (plus - minus) / (2.0 * step);
  }
  if (!bad.empty()) {
    throw NumericalError("fd_gradient: non-finite objective for Noll indices " + bad);
  }
  return gradient;
}

Stage1Problem::Stage1Problem(std::vector<Stage1Sample> batch, const OpticsConfig& optics,
                             const Stage1Hyper& hyper,
                             std::shared_ptr<const HeatmapExtractor> extractor,
                             std::shared_ptr<const HeatmapExtractor> target_extractor,
                             double landmark_sigma_px)
    : batch_(std::move(batch)),
      hyper_(hyper),
      model_(optics, hyper.zernike_terms),
      regularizer_(defocus_psf(optics, hyper.regularizer_defocus_um)),
      extractor_(std::move(extractor)),
      convolver_(batch_.empty() ? 1 : batch_.front().x.height(),
                 batch_.empty() ? 1 : batch_.front().x.width(), optics.psf_crop) {
  hyper_.validate();
  if (batch_.empty()) {
    throw std::invalid_argument("Stage1Problem: batch must be non-empty");
  }
  if (!extractor_) {
    throw std::invalid_argument("Stage1Problem: heatmap extractor is required");
  }
  const Image& first = batch_.front().x;
  if (first.channels() != optics.channels()) {
    throw std::invalid_argument("Stage1Problem: image channels differ from wavelength count");
  }
  for (const auto& sample : batch_) {
    require_same_shape(first, sample.x, "Stage1Problem");
  }

  targets_.resize(batch_.size());
  scene_spectra_.resize(batch_.size());
  parallel_for(batch_.size(), [&](std::size_t i) {
    const auto& sample = batch_[i];
    if (sample.landmarks) {
      targets_[i] = landmark_heatmap_oracle(*sample.landmarks, sample.x.height(),
                                            sample.x.width(), landmark_sigma_px);
    } else if (target_extractor) {
      targets_[i] = target_extractor->extract(sample.x);
    } else {
      throw std::invalid_argument("Stage1Problem: sample without landmarks needs U*");
    }
    for (int c = 0; c < sample.x.channels(); ++c) {
      scene_spectra_[i].push_back(convolver_.image_spectrum(sample.x.plane(c)));
    }
  });
}

std::vector<Image> Stage1Problem::captures(const zernike::ZernikeCoefficients& beta,
                                           std::uint64_t noise_seed) const {
  const PsfStack psf = model_.compute(beta);
  std::vector<Convolver::Spectrum> kernels;
  for (const auto& kernel : psf.kernels) {
    kernels.push_back(convolver_.kernel_spectrum(kernel));
  }
  const Image& first = batch_.front().x;
  std::vector<Image> ys(batch_.size());
  parallel_for(batch_.size(), [&](std::size_t i) {
    Image y(first.height(), first.width(), first.channels());
    for (int c = 0; c < y.channels(); ++c) {
      y.plane(c) = convolver_.apply(scene_spectra_[i][c], kernels[c]);
    }
    add_gaussian_noise(y, NoiseSpec{hyper_.noise_sigma, noise_seed}, i);
    apply_camera_response(y);
    ys[i] = std::move(y);
  });
  return ys;
}

Stage1Terms Stage1Problem::evaluate(const zernike::ZernikeCoefficients& beta,
                                    std::uint64_t noise_seed) const {
  const PsfStack psf = model_.compute(beta);
  std::vector<Convolver::Spectrum> kernels;
  for (const auto& kernel : psf.kernels) {
    kernels.push_back(convolver_.kernel_spectrum(kernel));
  }
  const Image& first = batch_.front().x;
  std::vector<double> mse(batch_.size());
  std::vector<double> hmap(batch_.size());
  parallel_for(batch_.size(), [&](std::size_t i) {
    Image y(first.height(), first.width(), first.channels());
    for (int c = 0; c < y.channels(); ++c) {
      y.plane(c) = convolver_.apply(scene_spectra_[i][c], kernels[c]);
    }
    add_gaussian_noise(y, NoiseSpec{hyper_.noise_sigma, noise_seed}, i);
    apply_camera_response(y);
    mse[i] = mean_squared_error(batch_[i].x, y);
    hmap[i] = hmap_loss(extractor_->extract(y), targets_[i]);
  });

  const double n = static_cast<double>(batch_.size());
  Stage1Terms terms;
  for (std::size_t i = 0; i < batch_.size(); ++i) {
    terms.mse_mean += mse[i] / n;
    terms.hmap += hmap[i] / n;
  }
  terms.optics = 1.0 - terms.mse_mean + hyper_.alpha1 * psf_distance(psf, regularizer_);
  terms.total = terms.optics + hyper_.alpha2 * terms.hmap;
  return terms;
}

double stage1_objective(std::span<const Stage1Sample> batch,
                        const zernike::ZernikeCoefficients& beta, const OpticsConfig& optics,
                        std::shared_ptr<const HeatmapExtractor> extractor,
                        std::shared_ptr<const HeatmapExtractor> target_extractor,
                        const Stage1Hyper& hyper, std::uint64_t noise_seed) {
  Stage1Hyper local = hyper;
  local.zernike_terms = std::max(hyper.zernike_terms, beta.size());
  const Stage1Problem problem(std::vector<Stage1Sample>(batch.begin(), batch.end()), optics,
                              local, std::move(extractor), std::move(target_extractor));
  return problem.evaluate(beta, noise_seed).total;
}

LensOptimizationResult optimize_lens(const Stage1Problem& problem,
                                     const zernike::ZernikeCoefficients& initial,
                                     std::uint64_t seed) {
  return optimize_lens(
      [&problem](const zernike::ZernikeCoefficients& beta, std::uint64_t noise_seed) {
        return problem.evaluate(beta, noise_seed);
      },
      problem.hyper(), initial, seed);
}

LensOptimizationResult optimize_lens(const SeededObjective& objective, const Stage1Hyper& hyper,
                                     const zernike::ZernikeCoefficients& initial,
                                     std::uint64_t seed) {
  hyper.validate();
  LensOptimizationResult result;
  result.beta = initial;
  if (hyper.iterations == 0) {
    return result;
  }

  const int p = initial.size();
  std::vector<bool> active(p, true);
  active[0] = false;  // piston only adds a global phase

  std::vector<double> beta(initial.values().begin(), initial.values().end());
  const std::uint64_t jitter_key = rng::derive(seed, 0x6a6974746572ULL);
  for (int j = 1; j < p; ++j) {
    beta[j] += hyper.init_jitter_um * rng::normal(jitter_key, j);
  }
  std::vector<double> velocity(p, 0.0);
  double best_total = std::numeric_limits<double>::infinity();

  for (int t = 0; t < hyper.iterations; ++t) {
    const std::uint64_t noise_seed = rng::derive(seed, static_cast<std::uint64_t>(t));
    const zernike::ZernikeCoefficients current(beta);
    const Stage1Terms terms = objective(current, noise_seed);
    if (!std::isfinite(terms.total)) {
      result.diverged = true;
      break;
    }
    result.trace.records.push_back(TraceRecord{t, terms, current});
    if (terms.total < best_total) {
      best_total = terms.total;
      result.best_iteration = t;
      result.beta = current;
    }
    if (t + 1 == hyper.iterations) {
      break;
    }

    std::vector<double> gradient;
    try {
      gradient = fd_gradient(
          [&](const zernike::ZernikeCoefficients& b) {
            return objective(b, noise_seed).total;
          },
          current, hyper.fd_step_um, active);
    } catch (const NumericalError&) {
      result.diverged = true;
      break;
    }
    for (int j = 0; j < p; ++j) {
      velocity[j] = hyper.momentum * velocity[j] - hyper.learning_rate * gradient[j];
      beta[j] += velocity[j];
    }
    bool finite = true;
    for (double b : beta) {
      finite = finite && std::isfinite(b);
    }
    if (!finite) {
      result.diverged = true;
      break;
    }
  }
  return result;
}

}  // namespace privlens
