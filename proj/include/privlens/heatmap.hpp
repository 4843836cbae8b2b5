#pragma once

#include <span>
#include <vector>

#include "privlens/image.hpp"

namespace privlens {

/// Face heatmap regressor. Implementations must be deterministic and
/// return a map with the image's spatial size.
class HeatmapExtractor {
 public:
  virtual ~HeatmapExtractor() = default;
  virtual Heatmap extract(const Image& image) const = 0;
};

/// Facial landmark in pixel coordinates: x is the column, y the row.
struct Landmark {
  double x = 0.0;
  double y = 0.0;
};

/// Max-composite of isotropic Gaussians with peak 1 at each landmark.
/// Throws std::invalid_argument for landmarks outside the image.
Heatmap landmark_heatmap_oracle(std::span<const Landmark> landmarks, int height, int width,
                                double sigma_px);

/// Min-max normalised Gaussian low-pass of the luminance. `cutoff` is the
/// Gaussian's frequency-domain standard deviation as a fraction of Nyquist
/// (0 < cutoff <= 1). A constant image yields an all-zero map.
Heatmap lowpass_heatmap_proxy(const Image& image, double cutoff);

/// Separable Gaussian blur with reflected borders.
Grid<double> gaussian_blur(const Grid<double>& plane, double sigma_px);

class LowpassHeatmapProxy final : public HeatmapExtractor {
 public:
  explicit LowpassHeatmapProxy(double cutoff = 0.05);
  Heatmap extract(const Image& image) const override;
  double cutoff() const { return cutoff_; }

 private:
  double cutoff_;
};

}  // namespace privlens
