#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "privlens/errors.hpp"
#include "privlens/fft.hpp"
#include "privlens/optics.hpp"
#include "privlens/stage1.hpp"
#include "support.hpp"

using namespace privlens;
using zernike::ZernikeCoefficients;

namespace {

const PsfModel& default_model() {
  static const PsfModel model(OpticsConfig{}, 15);
  return model;
}

ZernikeCoefficients random_beta(std::uint64_t seed, double scale) {
  std::vector<double> beta(15);
  for (int j = 0; j < 15; ++j) {
    beta[j] = rng::uniform(seed, j, -scale, scale);
  }
  return ZernikeCoefficients(beta);
}

double max_abs_diff(const PsfStack& a, const PsfStack& b) {
  double worst = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto va = a.kernels[c].values();
    const auto vb = b.kernels[c].values();
    for (std::size_t i = 0; i < va.size(); ++i) {
      worst = std::max(worst, std::abs(va[i] - vb[i]));
    }
  }
  return worst;
}

}  // namespace

TEST(Optics, DefaultGeometry) {
  const OpticsConfig cfg;
  EXPECT_EQ(cfg.channels(), 3);
  EXPECT_EQ(cfg.aperture_pixels(), 250);
  EXPECT_NEAR(cfg.lens_focal_length_m(), 1.0 / (1.0 / 1.0 + 1.0 / 0.3), 1e-12);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Optics, ValidationRejectsBadConfigs) {
  OpticsConfig cfg;
  cfg.psf_crop = 1024;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = OpticsConfig{};
  cfg.wavelengths_nm = {};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = OpticsConfig{};
  cfg.aperture_diameter_mm = 50.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = OpticsConfig{};
  cfg.object_distance_m = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(PsfModel(cfg, 15), ConfigError);
}

TEST(Optics, PsfChannelsSumToOne) {
  for (std::uint64_t trial = 0; trial < 4; ++trial) {
    const PsfStack psf = default_model().compute(random_beta(trial, 0.3));
    ASSERT_EQ(psf.channels(), 3);
    ASSERT_EQ(psf.size(), 64);
    for (const auto& kernel : psf.kernels) {
      double sum = 0.0;
      for (double v : kernel.values()) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
    EXPECT_NO_THROW(psf.check_invariants());
    for (double loss : psf.crop_energy_loss) {
      EXPECT_GE(loss, 0.0);
      EXPECT_LT(loss, 1.0);
    }
  }
}

TEST(Optics, PistonDoesNotChangePsf) {
  auto beta = random_beta(11, 0.2);
  const PsfStack a = default_model().compute(beta);
  std::vector<double> shifted(beta.values().begin(), beta.values().end());
  shifted[0] += 0.37;
  const PsfStack b = default_model().compute(ZernikeCoefficients(shifted));
  EXPECT_LE(max_abs_diff(a, b), 1e-8);
}

TEST(Optics, AberrationFreePsfPeaksAtCentre) {
  const PsfStack psf = default_model().compute(ZernikeCoefficients::zeros(15));
  for (const auto& kernel : psf.kernels) {
    const auto values = kernel.values();
    const auto peak = std::max_element(values.begin(), values.end()) - values.begin();
    EXPECT_EQ(peak / 64, 32);
    EXPECT_EQ(peak % 64, 32);
  }
  EXPECT_GT(central_energy_fraction(psf), 0.5);
}

TEST(Optics, DefocusSignSymmetry) {
  auto plus = ZernikeCoefficients::zeros(15);
  auto minus = ZernikeCoefficients::zeros(15);
  plus.set_noll(4, 0.3);
  minus.set_noll(4, -0.3);
  const PsfStack a = default_model().compute(plus);
  const PsfStack b = default_model().compute(minus);
  double peak = 0.0;
  for (const auto& k : a.kernels) {
    peak = std::max(peak, *std::max_element(k.values().begin(), k.values().end()));
  }
  // Exact in the continuum. At 20 um pupil sampling the blue channel's
  // chirp sits close to Nyquist, which leaves a sub-percent asymmetry.
  EXPECT_LE(max_abs_diff(a, b), 1e-2 * peak);
}

TEST(Optics, TiltShiftsThePeak) {
  auto beta = ZernikeCoefficients::zeros(3);
  beta.set_noll(2, 1.0);
  const PsfStack psf = PsfModel(OpticsConfig{}, 3).compute(beta);
  const auto values = psf.kernels[1].values();
  const auto peak = std::max_element(values.begin(), values.end()) - values.begin();
  EXPECT_EQ(peak / 64, 32);
  EXPECT_NE(peak % 64, 32);
}

TEST(Optics, DefocusSpreadsEnergyMonotonically) {
  double previous = 1.0;
  for (double b : {0.0, 0.1, 0.2, 0.4}) {
    const double fraction = central_energy_fraction(defocus_psf(OpticsConfig{}, b));
    EXPECT_LT(fraction, previous);
    previous = fraction;
  }
}

TEST(Optics, FreeFunctionMatchesModel) {
  const auto beta = random_beta(5, 0.1);
  EXPECT_LE(max_abs_diff(compute_psf(beta, OpticsConfig{}), default_model().compute(beta)),
            1e-15);
}

TEST(Optics, TooManyCoefficientsRejected) {
  EXPECT_THROW(default_model().compute(ZernikeCoefficients::zeros(16)), std::invalid_argument);
}

TEST(Optics, DeltaStack) {
  const PsfStack delta = PsfStack::delta(2, 5);
  EXPECT_EQ(delta.channels(), 2);
  EXPECT_EQ(delta.kernels[0](2, 2), 1.0);
  EXPECT_NO_THROW(delta.check_invariants());
  PsfStack broken = delta;
  broken.kernels[1](0, 0) = 0.5;
  EXPECT_THROW(broken.check_invariants(), std::invalid_argument);
}

TEST(Optics, CentralEnergyOfDeltaAndBox) {
  EXPECT_DOUBLE_EQ(central_energy_fraction(PsfStack::delta(1, 9)), 1.0);
  Grid<double> flat(9, 9, 1.0 / 81.0);
  EXPECT_NEAR(central_energy_fraction(flat), 9.0 / 81.0, 1e-15);
  EXPECT_NEAR(central_energy_fraction(flat, 0), 1.0 / 81.0, 1e-15);
}

TEST(Optics, MtfRatioOfDeltaCountsBins) {
  // A unit impulse has a flat spectrum, so the ratio is the fraction of
  // bins beyond the cutoff.
  const int k = 16;
  const double cutoff = 0.5;
  const auto ratio = mtf_highfreq_ratio(PsfStack::delta(1, k), cutoff);
  int high = 0;
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      const double fr = fft::signed_frequency(r, k) / static_cast<double>(k);
      const double fc = fft::signed_frequency(c, k) / static_cast<double>(k);
      high += std::hypot(fr, fc) / 0.5 > cutoff ? 1 : 0;
    }
  }
  EXPECT_NEAR(ratio[0], static_cast<double>(high) / (k * k), 1e-12);
}

TEST(Optics, MtfRatioFallsWithDefocus) {
  const OpticsConfig cfg;
  auto mean = [](const std::vector<double>& v) { return (v[0] + v[1] + v[2]) / 3.0; };
  const double sharp = mean(mtf_highfreq_ratio(defocus_psf(cfg, 0.0), 0.5));
  const double soft = mean(mtf_highfreq_ratio(defocus_psf(cfg, 0.3), 0.5));
  EXPECT_LT(soft, sharp);
  EXPECT_THROW(mtf_highfreq_ratio(defocus_psf(cfg, 0.0), 1.5), std::invalid_argument);
}

TEST(Optics, CalibratedRegularizerDefault) {
  const OpticsConfig cfg;
  const double b = calibrate_defocus(cfg, 0.15);
  EXPECT_NEAR(central_energy_fraction(defocus_psf(cfg, b)), 0.15, 2e-3);
  EXPECT_NEAR(b, kDefaultRegularizerDefocusUm, 1e-3);
}

TEST(Optics, PropagationPhaseIsUnitModulus) {
  OpticsConfig cfg;
  cfg.pupil_resolution = 64;
  cfg.psf_crop = 16;
  cfg.aperture_diameter_mm = 1.0;
  const ComplexField p = propagation_phase(cfg, 0);
  for (const auto& v : p.values()) {
    EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
  }
  EXPECT_NEAR(std::arg(p(32, 32)), 0.0, 1e-12);
}

TEST(Optics, HardwarePresetSpreadsEnergy) {
  auto beta = ZernikeCoefficients::zeros(15);
  beta.set_noll(4, -0.83);
  beta.set_noll(6, -0.31);
  beta.set_noll(7, 0.08);
  beta.set_noll(8, -0.69);
  beta.set_noll(12, -0.67);
  beta.set_noll(14, 0.18);
  const double preset = central_energy_fraction(default_model().compute(beta));
  const double ideal = central_energy_fraction(default_model().compute(ZernikeCoefficients::zeros(15)));
  EXPECT_LT(preset, ideal);
}
