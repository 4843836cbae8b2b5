#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "privlens/image.hpp"
#include "privlens/optics.hpp"

namespace privlens {

struct NoiseSpec {
  double sigma = 0.01;
  std::uint64_t seed = 0;
};

/// Linear (zero-padded) convolution of H x W images with K x K kernels
/// whose origin is (K/2, K/2). Spectra can be cached, which the Stage I
/// objective relies on: the scene spectra stay fixed while the PSF changes.
class Convolver {
 public:
  using Spectrum = Grid<std::complex<double>>;

  Convolver(int height, int width, int kernel_size);

  int padded_rows() const { return padded_rows_; }
  int padded_cols() const { return padded_cols_; }

  Spectrum image_spectrum(const Grid<double>& plane) const;
  Spectrum kernel_spectrum(const Grid<double>& kernel) const;

  /// Inverse transform of `product`, cropped back to H x W.
  Grid<double> crop_inverse(const Spectrum& product) const;

  Grid<double> apply(const Spectrum& image, const Spectrum& kernel) const;

 private:
  int height_;
  int width_;
  int kernel_size_;
  int padded_rows_;
  int padded_cols_;
};

/// Per-channel linear convolution, cropped to the input size. No clamping.
Image convolve(const Image& image, const PsfStack& psf);

/// Adds N(0, sigma^2) noise in place. The stream of channel c is keyed by
/// (seed, image_id, c), so the result does not depend on evaluation order.
void add_gaussian_noise(Image& image, const NoiseSpec& noise, std::uint64_t image_id);

/// Camera response: identity followed by clamping to [0,1].
void apply_camera_response(Image& image);

/// y = clamp(H * x + eta, 0, 1).
Image capture(const Image& x, const PsfStack& psf, const NoiseSpec& noise,
              std::uint64_t image_id = 0);

/// Box-average onto an S x S sensor, then nearest-neighbour upsample back
/// to the original size. Models a low-resolution camera.
Image box_resample(const Image& x, int sensor_size);

/// Low-resolution camera capture: box average onto the S x S sensor, add
/// noise and clamp per sensor cell, then nearest-neighbour upsample.
Image capture_low_resolution(const Image& x, int sensor_size, const NoiseSpec& noise,
                             std::uint64_t image_id = 0);

}  // namespace privlens
