#include "privlens/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "privlens/errors.hpp"
#include "privlens/fft.hpp"
#include "privlens/parallel.hpp"

namespace privlens {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wavelength_m(const OpticsConfig& config, int channel) {
  return config.wavelengths_nm.at(channel) * 1e-9;
}

double pitch_m(const OpticsConfig& config) { return config.pixel_pitch_um * 1e-6; }

void require_channel(const OpticsConfig& config, int channel) {
  if (channel < 0 || channel >= config.channels()) {
    throw std::invalid_argument("optics: channel " + std::to_string(channel) +
                                " out of range");
  }
}

const OpticsConfig& validated(const OpticsConfig& config) {
  config.validate();
  return config;
}

}  // namespace

int OpticsConfig::aperture_pixels() const {
  const double pixels = aperture_diameter_mm * 1e-3 / (pixel_pitch_um * 1e-6);
  return 2 * static_cast<int>(std::lround(pixels / 2.0));
}

double OpticsConfig::lens_focal_length_m() const {
  return 1.0 / (1.0 / object_distance_m + 1.0 / sensor_distance_m);
}

void OpticsConfig::validate() const {
  if (wavelengths_nm.empty()) {
    throw ConfigError("optics: at least one wavelength is required");
  }
  for (double w : wavelengths_nm) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ConfigError("optics: wavelengths must be positive");
    }
  }
  // object_distance_m may be +inf (point source at infinity).
  if (!(aperture_diameter_mm > 0.0) || !(object_distance_m > 0.0) ||
      !(sensor_distance_m > 0.0) || !(pixel_pitch_um > 0.0) ||
      !std::isfinite(aperture_diameter_mm) || !std::isfinite(sensor_distance_m) ||
      !std::isfinite(pixel_pitch_um)) {
    throw ConfigError("optics: distances, aperture and pixel pitch must be positive");
  }
  if (pupil_resolution < 2 || psf_crop < 1) {
    throw ConfigError("optics: pupil resolution and PSF crop must be positive");
  }
  if (psf_crop > pupil_resolution) {
    throw ConfigError("optics: psf_crop (" + std::to_string(psf_crop) +
                      ") exceeds pupil_resolution (" + std::to_string(pupil_resolution) + ")");
  }
  const int aperture = aperture_pixels();
  if (aperture < 2 || aperture > pupil_resolution) {
    throw ConfigError("optics: aperture spans " + std::to_string(aperture) +
                      " pupil samples; it must be within [2, pupil_resolution]");
  }
}

PsfStack PsfStack::delta(int channels, int size) {
  PsfStack psf;
  for (int c = 0; c < channels; ++c) {
    Grid<double> kernel(size, size, 0.0);
    kernel(size / 2, size / 2) = 1.0;
    psf.kernels.push_back(std::move(kernel));
    psf.crop_energy_loss.push_back(0.0);
  }
  return psf;
}

void PsfStack::check_invariants(double tolerance) const {
  if (kernels.empty()) {
    throw std::invalid_argument("PsfStack: no channels");
  }
  const int k = kernels.front().rows();
  for (std::size_t c = 0; c < kernels.size(); ++c) {
    const auto& kernel = kernels[c];
    if (kernel.rows() != k || kernel.cols() != k) {
      throw std::invalid_argument("PsfStack: channel kernels must all be K x K");
    }
    double sum = 0.0;
    for (double v : kernel.values()) {
      if (!(v >= 0.0)) {
        throw std::invalid_argument("PsfStack: negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw std::invalid_argument("PsfStack: channel " + std::to_string(c) + " sums to " +
                                  std::to_string(sum));
    }
  }
}

ComplexField propagation_phase(const OpticsConfig& config, int channel) {
  require_channel(config, channel);
  const int n = config.pupil_resolution;
  const double k = kTwoPi / wavelength_m(config, channel);
  const double dx = pitch_m(config);
  const double curvature = k / (2.0 * config.object_distance_m);  // 0 when d = inf
  ComplexField field(n, n);
  for (int row = 0; row < n; ++row) {
    const double y = (row - n / 2) * dx;
    for (int col = 0; col < n; ++col) {
      const double x = (col - n / 2) * dx;
      field(row, col) = std::polar(1.0, -curvature * (x * x + y * y));
    }
  }
  return field;
}

ComplexField transfer_function(const OpticsConfig& config, int channel) {
  require_channel(config, channel);
  const int n = config.pupil_resolution;
  const double lambda = wavelength_m(config, channel);
  const double inv_lambda_sq = 1.0 / (lambda * lambda);
  const double df = 1.0 / (n * pitch_m(config));
  const double z = config.sensor_distance_m;
  ComplexField transfer(n, n, {0.0, 0.0});
  for (int row = 0; row < n; ++row) {
    const double fy = fft::signed_frequency(row, n) * df;
    for (int col = 0; col < n; ++col) {
      const double fx = fft::signed_frequency(col, n) * df;
      const double arg = inv_lambda_sq - fx * fx - fy * fy;
      if (arg <= 0.0) {
        continue;  // evanescent
      }
      // Paraxial expansion of sqrt(1/lambda^2 - f^2) - 1/lambda, matching the
      // quadratic pupil phases.
      const double excess = -0.5 * lambda * (fx * fx + fy * fy);
      transfer(row, col) = std::polar(1.0, -kTwoPi * z * excess);
    }
  }
  return transfer;
}

PsfModel::PsfModel(const OpticsConfig& config, int zernike_terms)
    : config_(config),
      basis_(zernike_terms, zernike::UnitDiskGrid(validated(config).aperture_pixels())) {
  const int aperture = config_.aperture_pixels();
  const double dx = pitch_m(config_);
  const double focal = config_.lens_focal_length_m();
  for (int c = 0; c < config_.channels(); ++c) {
    const double lambda = wavelength_m(config_, c);
    const double k = kTwoPi / lambda;
    ChannelCache cache{kTwoPi / (lambda * 1e6), Grid<double>(aperture, aperture, 0.0),
                       transfer_function(config_, c)};
    // P_t from the point source at distance d, times the ideal lens.
    for (int row = 0; row < aperture; ++row) {
      const double y = (row - aperture / 2) * dx;
      for (int col = 0; col < aperture; ++col) {
        const double x = (col - aperture / 2) * dx;
        const double r2 = x * x + y * y;
        cache.static_phase(row, col) =
            -k * r2 / (2.0 * config_.object_distance_m) + k * r2 / (2.0 * focal);
      }
    }
    channels_.push_back(std::move(cache));
  }
}

PsfStack PsfModel::compute(const zernike::ZernikeCoefficients& beta) const {
  const zernike::PhaseMask mask = basis_.synthesize(beta);
  const int n = config_.pupil_resolution;
  const int k_crop = config_.psf_crop;
  const int aperture = config_.aperture_pixels();
  const int offset = (n - aperture) / 2;
  const auto& grid = basis_.grid();

  PsfStack psf;
  psf.wavelengths_nm = config_.wavelengths_nm;
  psf.kernels.resize(config_.channels());
  psf.crop_energy_loss.resize(config_.channels());

  parallel_for(config_.channels(), [&](std::size_t c) {
    const ChannelCache& cache = channels_[c];
    ComplexField field(n, n, {0.0, 0.0});
    for (int row = 0; row < aperture; ++row) {
      for (int col = 0; col < aperture; ++col) {
        if (!grid.inside(row, col)) {
          continue;
        }
        // W is a unit plane wave; P_phi = exp(-i k phi).
        const double phase =
            cache.static_phase(row, col) - cache.wavenumber_per_um * mask.height_um(row, col);
        field(row + offset, col + offset) = std::polar(1.0, phase);
      }
    }
    fft::forward(field);
    auto spectrum = field.values();
    const auto transfer = cache.transfer.values();
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      spectrum[i] *= transfer[i];
    }
    fft::inverse(field);

    double total = 0.0;
    for (const auto& v : field.values()) {
      total += std::norm(v);
    }
    Grid<double> kernel(k_crop, k_crop, 0.0);
    const int start = n / 2 - k_crop / 2;
    double cropped = 0.0;
    for (int row = 0; row < k_crop; ++row) {
      for (int col = 0; col < k_crop; ++col) {
        const double intensity = std::norm(field(start + row, start + col));
        kernel(row, col) = intensity;
        cropped += intensity;
      }
    }
    if (!(cropped > 0.0) || !std::isfinite(cropped)) {
      throw std::runtime_error("compute_psf: no energy inside the crop window");
    }
    for (auto& v : kernel.values()) {
      v /= cropped;
    }
    psf.kernels[c] = std::move(kernel);
    psf.crop_energy_loss[c] = total > 0.0 ? 1.0 - cropped / total : 0.0;
  });
  return psf;
}

PsfStack compute_psf(const zernike::ZernikeCoefficients& beta, const OpticsConfig& config) {
  return PsfModel(config, beta.size()).compute(beta);
}

PsfStack defocus_psf(const OpticsConfig& config, double defocus_beta4_um) {
  if (!std::isfinite(defocus_beta4_um)) {
    throw std::invalid_argument("defocus_psf: amplitude must be finite");
  }
  auto beta = zernike::ZernikeCoefficients::zeros(4);
  beta.set_noll(4, defocus_beta4_um);
  return compute_psf(beta, config);
}

double central_energy_fraction(const Grid<double>& kernel, int half) {
  const int center_row = kernel.rows() / 2;
  const int center_col = kernel.cols() / 2;
  double total = 0.0;
  for (double v : kernel.values()) {
    total += v;
  }
  double window = 0.0;
  for (int r = center_row - half; r <= center_row + half; ++r) {
    for (int c = center_col - half; c <= center_col + half; ++c) {
      if (r >= 0 && r < kernel.rows() && c >= 0 && c < kernel.cols()) {
        window += kernel(r, c);
      }
    }
  }
  return total > 0.0 ? window / total : 0.0;
}

double central_energy_fraction(const PsfStack& psf, int half) {
  double sum = 0.0;
  for (const auto& kernel : psf.kernels) {
    sum += central_energy_fraction(kernel, half);
  }
  return psf.kernels.empty() ? 0.0 : sum / psf.channels();
}

std::vector<double> mtf_highfreq_ratio(const PsfStack& psf, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw std::invalid_argument("mtf_highfreq_ratio: cutoff must lie in (0, 1)");
  }
  std::vector<double> ratios;
  for (const auto& kernel : psf.kernels) {
    const int rows = kernel.rows();
    const int cols = kernel.cols();
    Grid<fft::Complex> spectrum(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        spectrum(r, c) = kernel(r, c);
      }
    }
    fft::forward(spectrum);
    double high = 0.0;
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double fy = static_cast<double>(fft::signed_frequency(r, rows)) / rows;
      for (int c = 0; c < cols; ++c) {
        const double fx = static_cast<double>(fft::signed_frequency(c, cols)) / cols;
        const double radial = std::sqrt(fx * fx + fy * fy) / 0.5;
        const double energy = std::norm(spectrum(r, c));
        total += energy;
        if (radial > cutoff) {
          high += energy;
        }
      }
    }
    ratios.push_back(total > 0.0 ? high / total : 0.0);
  }
  return ratios;
}

double calibrate_defocus(const OpticsConfig& config, double target_fraction, double upper_um,
                         double tolerance) {
  auto fraction = [&](double beta4) {
    return central_energy_fraction(defocus_psf(config, beta4));
  };
  double lo = 0.0;
  double hi = upper_um;
  if (fraction(lo) < target_fraction || fraction(hi) > target_fraction) {
    throw std::invalid_argument("calibrate_defocus: target not bracketed by [0, upper]");
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (fraction(mid) > target_fraction) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace privlens
