#pragma once

#include <span>
#include <vector>

#include "privlens/grid.hpp"

namespace privlens {

/// H x W x C image stored as one plane per channel. Values are nominally in
/// [0,1]; intermediate results (e.g. a convolution before the camera
/// response) may leave that range until clamp01() is applied.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return static_cast<int>(planes_.size()); }
  std::size_t value_count() const {
    return static_cast<std::size_t>(height_) * width_ * planes_.size();
  }
  bool empty() const { return planes_.empty(); }

  Grid<double>& plane(int channel) { return planes_.at(channel); }
  const Grid<double>& plane(int channel) const { return planes_.at(channel); }

  double& operator()(int row, int col, int channel) {
    return planes_[channel](row, col);
  }
  double operator()(int row, int col, int channel) const {
    return planes_[channel](row, col);
  }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels() == other.channels();
  }

  void clamp01();

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Grid<double>> planes_;
};

/// Single-channel map in [0,1] highlighting face geometry.
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(int height, int width) : values_(height, width, 0.0) {}
  /// Throws std::invalid_argument if any value lies outside [0,1].
  explicit Heatmap(Grid<double> values);

  int height() const { return values_.rows(); }
  int width() const { return values_.cols(); }
  double operator()(int row, int col) const { return values_(row, col); }
  const Grid<double>& grid() const { return values_; }
  bool same_shape(const Heatmap& other) const {
    return values_.same_shape(other.values_);
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  Grid<double> values_;
};

/// Mean of (a-b)^2 over every value. Throws on shape mismatch.
double mean_squared_error(const Image& a, const Image& b);

/// Mean of |a-b| over every value. Throws on shape mismatch.
double mean_absolute_error(const Image& a, const Image& b);

/// Rec.601 luma for 3-channel images, channel mean otherwise.
Grid<double> luminance(const Image& image);

/// Flattened values in channel, row, column order.
std::vector<double> flatten(const Image& image);

void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace privlens
