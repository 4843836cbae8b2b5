#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "privlens/heatmap.hpp"
#include "privlens/image.hpp"
#include "privlens/optics.hpp"
#include "privlens/sensor.hpp"
#include "privlens/zernike.hpp"

namespace privlens {

/// Default H_f defocus amplitude for the default OpticsConfig, calibrated
/// with calibrate_defocus() to a mean central-3x3 energy fraction of 0.15.
inline constexpr double kDefaultRegularizerDefocusUm = 0.1248;

struct Stage1Hyper {
  double alpha1 = 0.5;
  double alpha2 = 1.0;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int iterations = 200;
  double fd_step_um = 1e-3;
  int batch_size = 16;
  /// Std-dev of the seeded perturbation applied to the starting lens. An
  /// exactly aberration-free start is a stationary point of the objective.
  double init_jitter_um = 0.005;
  double regularizer_defocus_um = kDefaultRegularizerDefocusUm;
  double noise_sigma = 0.01;
  int zernike_terms = 15;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct Stage1Sample {
  Image x;
  std::optional<std::vector<Landmark>> landmarks;
};

/// Terms of the Stage I objective averaged over the batch.
struct Stage1Terms {
  double optics = 0.0;
  double hmap = 0.0;
  double total = 0.0;
  double mse_mean = 0.0;
};

struct TraceRecord {
  int iteration = 0;
  Stage1Terms terms;
  zernike::ZernikeCoefficients beta;
};

struct OptimizationTrace {
  std::vector<TraceRecord> records;
};

struct LensOptimizationResult {
  zernike::ZernikeCoefficients beta;
  OptimizationTrace trace;
  int best_iteration = -1;
  bool diverged = false;
};

/// 1 - MSE(x,y) + alpha1 * ||H - H_f||_2 (Frobenius over all channels).
double optics_loss(const Image& x, const Image& y, const PsfStack& psf,
                   const PsfStack& regularizer, double alpha1);

/// Batch mean of optics_loss over aligned (x, y) pairs.
double optics_loss(std::span<const Image> xs, std::span<const Image> ys, const PsfStack& psf,
                   const PsfStack& regularizer, double alpha1);

/// ||H - H_f||_2 over all kernel entries.
double psf_distance(const PsfStack& a, const PsfStack& b);

/// Mean absolute difference of two equally sized heatmaps.
double hmap_loss(const Heatmap& m_y, const Heatmap& m_x_star);

/// Central-difference gradient, g_j = [L(b + h e_j) - L(b - h e_j)] / 2h.
/// Indices with active[j] == false are skipped and left at 0 (an empty
/// `active` means all). Throws NumericalError naming every index whose
/// objective evaluations were non-finite.
using ScalarObjective = std::function<double(const zernike::ZernikeCoefficients&)>;
std::vector<double> fd_gradient(const ScalarObjective& objective,
                                const zernike::ZernikeCoefficients& beta, double step,
                                const std::vector<bool>& active = {});

/// Stage I objective on a fixed batch: the heatmap targets m* = U*(x) and
/// the scene spectra are computed once.
class Stage1Problem {
 public:
  /// Ground truth per sample comes from its landmarks (Gaussian oracle) when
  /// present, otherwise from `target_extractor` applied to x.
  Stage1Problem(std::vector<Stage1Sample> batch, const OpticsConfig& optics,
                const Stage1Hyper& hyper, std::shared_ptr<const HeatmapExtractor> extractor,
                std::shared_ptr<const HeatmapExtractor> target_extractor,
                double landmark_sigma_px = 3.0);

  /// Evaluates L_optics + alpha2 L_hmap at beta with the noise stream keyed
  /// by `noise_seed` (image i uses image id i).
  Stage1Terms evaluate(const zernike::ZernikeCoefficients& beta, std::uint64_t noise_seed) const;

  /// Captures of every batch image under beta.
  std::vector<Image> captures(const zernike::ZernikeCoefficients& beta,
                              std::uint64_t noise_seed) const;

  const PsfModel& psf_model() const { return model_; }
  const PsfStack& regularizer() const { return regularizer_; }
  const Stage1Hyper& hyper() const { return hyper_; }
  std::size_t batch_size() const { return batch_.size(); }
  const std::vector<Heatmap>& targets() const { return targets_; }

 private:
  std::vector<Stage1Sample> batch_;
  Stage1Hyper hyper_;
  PsfModel model_;
  PsfStack regularizer_;
  std::shared_ptr<const HeatmapExtractor> extractor_;
  Convolver convolver_;
  std::vector<std::vector<Convolver::Spectrum>> scene_spectra_;
  std::vector<Heatmap> targets_;
};

/// One-shot Stage I objective (builds a Stage1Problem internally).
double stage1_objective(std::span<const Stage1Sample> batch,
                        const zernike::ZernikeCoefficients& beta, const OpticsConfig& optics,
                        std::shared_ptr<const HeatmapExtractor> extractor,
                        std::shared_ptr<const HeatmapExtractor> target_extractor,
                        const Stage1Hyper& hyper, std::uint64_t noise_seed);

/// Gradient descent with momentum on beta_2..beta_p (piston is frozen).
/// Iteration t evaluates the objective at the current iterate with noise
/// seed derive(seed, t), records it, then steps along the finite-difference
/// gradient computed under that same seed. Returns the best recorded
/// iterate (earliest wins ties). A non-finite objective stops the run with
/// `diverged` set and the trace so far preserved.
LensOptimizationResult optimize_lens(const Stage1Problem& problem,
                                     const zernike::ZernikeCoefficients& initial,
                                     std::uint64_t seed);

/// The same loop over an arbitrary objective evaluated under a noise seed.
using SeededObjective =
    std::function<Stage1Terms(const zernike::ZernikeCoefficients&, std::uint64_t)>;
LensOptimizationResult optimize_lens(const SeededObjective& objective, const Stage1Hyper& hyper,
                                     const zernike::ZernikeCoefficients& initial,
                                     std::uint64_t seed);

}  // namespace privlens
