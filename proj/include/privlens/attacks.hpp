#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "privlens/image.hpp"
#include "privlens/optics.hpp"
#include "privlens/sensor.hpp"
#include "privlens/zernike.hpp"

namespace privlens {

/// Non-blind Wiener filter with a constant noise-to-signal ratio.
struct WienerAttack {
  double nsr = 1e-3;
};

/// Constrained least squares: conj(H) Y / (|H|^2 + epsilon |L|^2), L the
/// discrete Laplacian.
struct RegularizedInverseAttack {
  double epsilon = 1e-2;
};

/// PSF-agnostic sharpening: y + amount * (y - blur(y, radius)).
struct UnsharpBlindAttack {
  double radius_px = 2.0;
  double amount = 1.5;
};

using AttackMethod = std::variant<WienerAttack, RegularizedInverseAttack, UnsharpBlindAttack>;

std::string method_name(const AttackMethod& method);

/// Throws ConfigError for non-positive parameters (nsr may be 0).
void validate(const AttackMethod& method);

/// Wiener output plus a flag raised when the epsilon floor was needed.
struct Recovery {
  Image image;
  bool ill_conditioned = false;
};

inline constexpr double kWienerDenominatorFloor = 1e-12;

/// x = F^-1{ conj(H) Y / (|H|^2 + nsr) } on the zero-padded geometry of
/// Convolver, cropped and clamped to [0,1].
Recovery wiener_deconvolve(const Image& y, const PsfStack& psf, double nsr);

Image regularized_inverse(const Image& y, const PsfStack& psf, double epsilon);

Image unsharp_mask(const Image& y, double radius_px, double amount);

/// Dispatches on the method; blind methods ignore `psf`.
Recovery run_attack(const AttackMethod& method, const Image& y, const PsfStack& psf);

/// Sentinel for identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) for images on [0,1].
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

/// Mean local SSIM over 8x8 windows with stride 4, per channel, with the
/// usual constants (0.01)^2 and (0.03)^2 for unit dynamic range. Throws
/// std::invalid_argument for images smaller than the window.
double ssim(const Image& a, const Image& b);

/// Low-resolution camera with an S x S sensor.
struct LowResolutionLens {
  int sensor_size = 16;
};

/// A camera under attack: a Zernike lens, a fixed PSF (e.g. an ideal
/// impulse), or a low-resolution sensor.
struct LensSpec {
  std::string name;
  std::variant<zernike::ZernikeCoefficients, PsfStack, LowResolutionLens> model;
};

struct AttackRow {
  std::string lens;
  std::string method;
  int image_index = 0;
  std::string image_name;
  bool ok = true;
  std::string status = "ok";
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  /// PSNR of the capture itself against the source, before any attack.
  double capture_psnr_db = 0.0;
};

struct AttackAggregate {
  std::string lens;
  std::string method;
  int count = 0;
  int failures = 0;
  double mean_mse = 0.0;
  double mean_psnr_db = 0.0;
  double mean_ssim = 0.0;
};

struct AttackReport {
  std::vector<AttackRow> rows;  // sorted by (lens, method, image index)
  std::vector<AttackAggregate> aggregates() const;
};

struct AttackImage {
  std::string name;
  Image x;
};

/// Simulates every lens on every image and runs every method. Noise for
/// image i uses image id i so rows depend only on (lens, method, image,
/// seed). Per-item failures become rows with ok == false.
AttackReport attack_suite(const std::vector<AttackImage>& dataset,
                          const std::vector<LensSpec>& lenses,
                          const std::vector<AttackMethod>& methods, const NoiseSpec& noise,
                          const OpticsConfig& optics);

/// The PSF an attacker with camera access measures: the simulated PSF for
/// Zernike lenses, the stored PSF, or a box of width H/S for the
/// low-resolution camera.
PsfStack attacker_psf(const LensSpec& lens, const OpticsConfig& optics, int image_height);

/// Capture of x through `lens`.
Image simulate_lens(const LensSpec& lens, const PsfStack& psf, const Image& x,
                    const NoiseSpec& noise, std::uint64_t image_id);

}  // namespace privlens
