#include "privlens/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace privlens {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw std::invalid_argument("Image: dimensions must be positive");
  }
  planes_.assign(channels, Grid<double>(height, width, fill));
}

void Image::clamp01() {
  for (auto& plane : planes_) {
    for (auto& v : plane.values()) {
      v = std::clamp(v, 0.0, 1.0);
    }
  }
}

Heatmap::Heatmap(Grid<double> values) : values_(std::move(values)) {
  for (double v : values_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("Heatmap: values must lie in [0,1]");
    }
  }
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": image shapes differ");
  }
}

double mean_squared_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_squared_error");
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c).values();
    const auto pb = b.plane(c).values();
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = pa[i] - pb[i];
      sum += d * d;
    }
  }
  return sum / static_cast<double>(a.value_count());
}

double mean_absolute_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_absolute_error");
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c).values();
    const auto pb = b.plane(c).values();
    for (std::size_t i = 0; i < pa.size(); ++i) {
      sum += std::abs(pa[i] - pb[i]);
    }
  }
  return sum / static_cast<double>(a.value_count());
}

Grid<double> luminance(const Image& image) {
  Grid<double> out(image.height(), image.width(), 0.0);
  auto dst = out.values();
  if (image.channels() == 3) {
    constexpr double kWeights[3] = {0.299, 0.587, 0.114};
    for (int c = 0; c < 3; ++c) {
      const auto src = image.plane(c).values();
      for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += kWeights[c] * src[i];
      }
    }
    return out;
  }
  for (int c = 0; c < image.channels(); ++c) {
    const auto src = image.plane(c).values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] += src[i] / image.channels();
    }
  }
  return out;
}

std::vector<double> flatten(const Image& image) {
  std::vector<double> out;
  out.reserve(image.value_count());
  for (int c = 0; c < image.channels(); ++c) {
    const auto values = image.plane(c).values();
    out.insert(out.end(), values.begin(), values.end());
  }
  return out;
}

}  // namespace privlens
