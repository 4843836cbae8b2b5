#include "privlens/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace privlens {
namespace {

int reflect(int i, int n) {
  if (n == 1) {
    return 0;
  }
  const int period = 2 * n;
  i %= period;
  if (i < 0) {
    i += period;
  }
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_taps(double sigma_px) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_px)));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * (k * k) / (sigma_px * sigma_px));
    taps[k + radius] = v;
    sum += v;
  }
  for (auto& t : taps) {
    t /= sum;
  }
  return taps;
}

}  // namespace

Grid<double> gaussian_blur(const Grid<double>& plane, double sigma_px) {
  if (!(sigma_px > 0.0)) {
    throw std::invalid_argument("gaussian_blur: sigma must be positive");
  }
  const auto taps = gaussian_taps(sigma_px);
  const int radius = static_cast<int>(taps.size() / 2);
  const int rows = plane.rows();
  const int cols = plane.cols();

  Grid<double> horizontal(rows, cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * plane(r, reflect(c + k, cols));
      }
      horizontal(r, c) = acc;
    }
  }
  Grid<double> out(rows, cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * horizontal(reflect(r + k, rows), c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Heatmap landmark_heatmap_oracle(std::span<const Landmark> landmarks, int height, int width,
                                double sigma_px) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("landmark_heatmap_oracle: empty shape");
  }
  if (!(sigma_px > 0.0)) {
    throw std::invalid_argument("landmark_heatmap_oracle: sigma must be positive");
  }
  for (const auto& p : landmarks) {
    if (!(p.x >= 0.0 && p.x <= width - 1.0 && p.y >= 0.0 && p.y <= height - 1.0)) {
      throw std::invalid_argument("landmark_heatmap_oracle: landmark outside the image");
    }
  }
  Grid<double> values(height, width, 0.0);
  const double inv_two_var = 1.0 / (2.0 * sigma_px * sigma_px);
  for (const auto& p : landmarks) {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double dx = c - p.x;
        const double dy = r - p.y;
        values(r, c) = std::max(values(r, c), std::exp(-(dx * dx + dy * dy) * inv_two_var));
      }
    }
  }
  return Heatmap(std::move(values));
}

Heatmap lowpass_heatmap_proxy(const Image& image, double cutoff) {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw std::invalid_argument("lowpass_heatmap_proxy: cutoff must lie in (0, 1]");
  }
  // Frequency-domain std-dev cutoff * 0.5 cycles/px <=> spatial 1/(pi cutoff).
  const double sigma_px = 1.0 / (std::numbers::pi * cutoff);
  Grid<double> low = gaussian_blur(luminance(image), sigma_px);
  const auto [lo_it, hi_it] = std::minmax_element(low.values().begin(), low.values().end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 1e-12)) {
    return Heatmap(image.height(), image.width());
  }
  for (auto& v : low.values()) {
    v = std::clamp((v - lo) / range, 0.0, 1.0);
  }
  return Heatmap(std::move(low));
}

LowpassHeatmapProxy::LowpassHeatmapProxy(double cutoff) : cutoff_(cutoff) {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw std::invalid_argument("LowpassHeatmapProxy: cutoff must lie in (0, 1]");
  }
}

Heatmap LowpassHeatmapProxy::extract(const Image& image) const {
  return lowpass_heatmap_proxy(image, cutoff_);
}

}  // namespace privlens
