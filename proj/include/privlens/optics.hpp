#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "privlens/grid.hpp"
#include "privlens/zernike.hpp"

namespace privlens {

using ComplexField = Grid<std::complex<double>>;

/// Physical camera model. The lens is an ideal thin lens focused on the
/// object plane (its focal length follows from the object and sensor
/// distances); the phase mask adds aberrations on top of it.
///
/// The pupil is sampled at `pixel_pitch_um`, and angular-spectrum
/// propagation keeps that sampling, so the PSF comes out directly on the
/// sensor pixel grid.
struct OpticsConfig {
  std::vector<double> wavelengths_nm{640.0, 550.0, 460.0};
  double aperture_diameter_mm = 5.0;
  double object_distance_m = 1.0;
  double sensor_distance_m = 0.3;
  int pupil_resolution = 512;
  int psf_crop = 64;
  double pixel_pitch_um = 20.0;

  int channels() const { return static_cast<int>(wavelengths_nm.size()); }

  /// Aperture diameter in pupil samples, rounded to an even count.
  int aperture_pixels() const;

  /// Focal length placing the sensor at the image of the object plane.
  double lens_focal_length_m() const;

  /// Throws ConfigError on non-positive values, K > N, or an aperture that
  /// does not fit the pupil grid.
  void validate() const;
};

/// Per-channel normalised K x K kernels.
struct PsfStack {
  std::vector<Grid<double>> kernels;
  std::vector<double> wavelengths_nm;
  /// Fraction of the propagated energy that fell outside the crop window.
  std::vector<double> crop_energy_loss;

  int channels() const { return static_cast<int>(kernels.size()); }
  int size() const { return kernels.empty() ? 0 : kernels.front().rows(); }

  /// Single unit impulse at (K/2, K/2) in every channel.
  static PsfStack delta(int channels, int size);

  /// Throws std::invalid_argument unless every channel is K x K,
  /// non-negative, and sums to 1 within `tolerance`.
  void check_invariants(double tolerance = 1e-6) const;
};

/// P_t(u,v) = exp(-i k (u^2+v^2) / (2d)) over the full N x N pupil grid,
/// physical coordinates (pixel offset from N/2 times the pixel pitch).
ComplexField propagation_phase(const OpticsConfig& config, int channel);

/// Fresnel transfer function exp(i pi lambda z (fu^2 + fv^2)) for the
/// pupil-to-sensor distance, in DFT bin order. Bins beyond 1/lambda
/// (evanescent) are zero. The constant exp(-ikz) carrier is dropped since
/// it cancels under |.|^2.
ComplexField transfer_function(const OpticsConfig& config, int channel);

/// Reusable PSF simulator: caches the Zernike basis, the static pupil phase
/// and the transfer function of every channel.
class PsfModel {
 public:
  PsfModel(const OpticsConfig& config, int zernike_terms);

  const OpticsConfig& config() const { return config_; }
  int zernike_terms() const { return basis_.size(); }

  /// Throws std::invalid_argument if beta has more terms than the model.
  PsfStack compute(const zernike::ZernikeCoefficients& beta) const;

 private:
  struct ChannelCache {
    double wavenumber_per_um;
    Grid<double> static_phase;  // aperture-local, radians
    ComplexField transfer;
  };

  OpticsConfig config_;
  zernike::ZernikeBasis basis_;
  std::vector<ChannelCache> channels_;
};

/// |F^-1{ F{P W} T }|^2, centre-cropped to K x K and normalised per channel.
PsfStack compute_psf(const zernike::ZernikeCoefficients& beta, const OpticsConfig& config);

/// PSF of a pure Noll-4 defocus term; used as the frozen regulariser H_f.
PsfStack defocus_psf(const OpticsConfig& config, double defocus_beta4_um);

/// Energy in the (2*half+1)^2 window centred on (K/2, K/2).
double central_energy_fraction(const Grid<double>& kernel, int half = 1);

/// Mean of central_energy_fraction over channels.
double central_energy_fraction(const PsfStack& psf, int half = 1);

/// Per channel: sum of |F{H}|^2 over bins whose radial frequency exceeds
/// `cutoff` (as a fraction of Nyquist), divided by the sum over all bins.
/// Requires 0 < cutoff < 1.
std::vector<double> mtf_highfreq_ratio(const PsfStack& psf, double cutoff);

/// Defocus amplitude (>= 0) whose PSF has the requested mean central-3x3
/// energy fraction, by bisection on [0, upper_um].
double calibrate_defocus(const OpticsConfig& config, double target_fraction,
                         double upper_um = 2.0, double tolerance = 1e-4);

}  // namespace privlens
