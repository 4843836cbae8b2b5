#include "privlens/sensor.hpp"

#include <stdexcept>
#include <string>

#include "privlens/fft.hpp"
#include "privlens/parallel.hpp"
#include "privlens/rng.hpp"

namespace privlens {

Convolver::Convolver(int height, int width, int kernel_size)
    : height_(height),
      width_(width),
      kernel_size_(kernel_size),
      padded_rows_(fft::good_size(height + kernel_size - 1)),
      padded_cols_(fft::good_size(width + kernel_size - 1)) {
  if (height <= 0 || width <= 0 || kernel_size <= 0) {
    throw std::invalid_argument("Convolver: dimensions must be positive");
  }
}

Convolver::Spectrum Convolver::image_spectrum(const Grid<double>& plane) const {
  if (plane.rows() != height_ || plane.cols() != width_) {
    throw std::invalid_argument("Convolver: plane size mismatch");
  }
  Grid<double> padded(padded_rows_, padded_cols_, 0.0);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      padded(r, c) = plane(r, c);
    }
  }
  return fft::forward_real(padded);
}

Convolver::Spectrum Convolver::kernel_spectrum(const Grid<double>& kernel) const {
  if (kernel.rows() != kernel_size_ || kernel.cols() != kernel_size_) {
    throw std::invalid_argument("Convolver: kernel size mismatch");
  }
  // Origin (K/2, K/2) moves to (0, 0); negative offsets wrap into the
  // padding, which is wide enough that nothing aliases onto the crop.
  const int center = kernel_size_ / 2;
  Grid<double> padded(padded_rows_, padded_cols_, 0.0);
  for (int a = 0; a < kernel_size_; ++a) {
    const int r = (a - center + padded_rows_) % padded_rows_;
    for (int b = 0; b < kernel_size_; ++b) {
      const int c = (b - center + padded_cols_) % padded_cols_;
      padded(r, c) = kernel(a, b);
    }
  }
  return fft::forward_real(padded);
}

Grid<double> Convolver::crop_inverse(const Spectrum& product) const {
  const Grid<double> full = fft::inverse_real(product, padded_cols_);
  Grid<double> out(height_, width_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      out(r, c) = full(r, c);
    }
  }
  return out;
}

Grid<double> Convolver::apply(const Spectrum& image, const Spectrum& kernel) const {
  if (!image.same_shape(kernel)) {
    throw std::invalid_argument("Convolver: spectrum shapes differ");
  }
  Spectrum product = image;
  auto dst = product.values();
  const auto k = kernel.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] *= k[i];
  }
  return crop_inverse(product);
}

Image convolve(const Image& image, const PsfStack& psf) {
  if (psf.channels() != image.channels()) {
    throw std::invalid_argument("convolve: PSF has " + std::to_string(psf.channels()) +
                                " channels, image has " + std::to_string(image.channels()));
  }
  const Convolver convolver(image.height(), image.width(), psf.size());
  Image out(image.height(), image.width(), image.channels());
  parallel_for(image.channels(), [&](std::size_t c) {
    const int ch = static_cast<int>(c);
    out.plane(ch) = convolver.apply(convolver.image_spectrum(image.plane(ch)),
                                    convolver.kernel_spectrum(psf.kernels[c]));
  });
  return out;
}

void add_gaussian_noise(Image& image, const NoiseSpec& noise, std::uint64_t image_id) {
  if (!(noise.sigma >= 0.0)) {
    throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
  }
  if (noise.sigma == 0.0) {
    return;
  }
  for (int c = 0; c < image.channels(); ++c) {
    const std::uint64_t key = rng::derive(noise.seed, image_id, static_cast<std::uint64_t>(c));
    auto values = image.plane(c).values();
    for (std::size_t t = 0; t < values.size(); ++t) {
      values[t] += noise.sigma * rng::normal(key, t);
    }
  }
}

void apply_camera_response(Image& image) { image.clamp01(); }

Image capture(const Image& x, const PsfStack& psf, const NoiseSpec& noise,
              std::uint64_t image_id) {
  Image y = convolve(x, psf);
  add_gaussian_noise(y, noise, image_id);
  apply_camera_response(y);
  return y;
}

namespace {

void require_sensor_size(const Image& x, int sensor_size) {
  if (sensor_size < 1 || sensor_size > x.height() || sensor_size > x.width()) {
    throw std::invalid_argument("low-resolution sensor size must be in [1, min(H, W)]");
  }
}

int bin_of(int index, int sensor_size, int extent) {
  return static_cast<int>(static_cast<long>(index) * sensor_size / extent);
}

// Pixel (r, c) falls into sensor cell (r*S/H, c*S/W).
Image box_downsample(const Image& x, int sensor_size) {
  Image cells(sensor_size, sensor_size, x.channels());
  Grid<int> counts(sensor_size, sensor_size, 0);
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      counts(bin_of(r, sensor_size, x.height()), bin_of(c, sensor_size, x.width())) += 1;
    }
  }
  for (int ch = 0; ch < x.channels(); ++ch) {
    for (int r = 0; r < x.height(); ++r) {
      for (int c = 0; c < x.width(); ++c) {
        cells(bin_of(r, sensor_size, x.height()), bin_of(c, sensor_size, x.width()), ch) +=
            x(r, c, ch);
      }
    }
    for (int r = 0; r < sensor_size; ++r) {
      for (int c = 0; c < sensor_size; ++c) {
        cells(r, c, ch) /= counts(r, c);
      }
    }
  }
  return cells;
}

Image nearest_upsample(const Image& cells, int height, int width) {
  const int s = cells.height();
  Image out(height, width, cells.channels());
  for (int ch = 0; ch < cells.channels(); ++ch) {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        out(r, c, ch) = cells(bin_of(r, s, height), bin_of(c, s, width), ch);
      }
    }
  }
  return out;
}

}  // namespace

Image box_resample(const Image& x, int sensor_size) {
  require_sensor_size(x, sensor_size);
  return nearest_upsample(box_downsample(x, sensor_size), x.height(), x.width());
}

Image capture_low_resolution(const Image& x, int sensor_size, const NoiseSpec& noise,
                             std::uint64_t image_id) {
  require_sensor_size(x, sensor_size);
  // Noise belongs to the S x S sensor cells, not to the upsampled pixels.
  Image cells = box_downsample(x, sensor_size);
  add_gaussian_noise(cells, noise, image_id);
  apply_camera_response(cells);
  return nearest_upsample(cells, x.height(), x.width());
}

}  // namespace privlens
