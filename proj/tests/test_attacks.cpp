#include <gtest/gtest.h>

#include <cmath>

#include "privlens/attacks.hpp"
#include "privlens/errors.hpp"
#include "privlens/synthetic.hpp"
#include "support.hpp"

using namespace privlens;
using privlens::testing::random_image;

namespace {

// Face on a black border so the truncated convolution loses almost nothing
// at the image edge.
Image bordered_face(int size) {
  const int inner = size - 24;
  const Image face = synthetic::make_face(inner, 21, 0).image;
  Image out(size, size, 3, 0.0);
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < inner; ++r) {
      for (int k = 0; k < inner; ++k) {
        out(r + 12, k + 12, c) = face(r, k, c);
      }
    }
  }
  return out;
}

PsfStack mild_defocus() { return defocus_psf(OpticsConfig{}, 0.05); }

double brute_ssim(const Image& a, const Image& b) {
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int r0 = 0; r0 + 8 <= a.height(); r0 += 4) {
      for (int c0 = 0; c0 + 8 <= a.width(); c0 += 4) {
        std::vector<double> xa, xb;
        for (int r = r0; r < r0 + 8; ++r) {
          for (int k = c0; k < c0 + 8; ++k) {
            xa.push_back(a(r, k, c));
            xb.push_back(b(r, k, c));
          }
        }
        double ma = 0, mb = 0;
        for (int i = 0; i < 64; ++i) {
          ma += xa[i] / 64;
          mb += xb[i] / 64;
        }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < 64; ++i) {
          va += (xa[i] - ma) * (xa[i] - ma) / 64;
          vb += (xb[i] - mb) * (xb[i] - mb) / 64;
          cov += (xa[i] - ma) * (xb[i] - mb) / 64;
        }
        const double c1 = 1e-4, c2 = 9e-4;
        sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return sum / count;
}

}  // namespace

TEST(Attacks, WienerWithDeltaAndZeroNsrIsIdentity) {
  const Image y = random_image(20, 20, 3, 1);
  const Recovery rec = wiener_deconvolve(y, PsfStack::delta(3, 9), 0.0);
  EXPECT_FALSE(rec.ill_conditioned);
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 20; ++r) {
      for (int k = 0; k < 20; ++k) {
        EXPECT_NEAR(rec.image(r, k, c), y(r, k, c), 1e-12);
      }
    }
  }
}

TEST(Attacks, WienerRecoversMildDefocus) {
  const Image x = bordered_face(128);
  const PsfStack psf = mild_defocus();
  const Image y = capture(x, psf, NoiseSpec{0.0, 0});
  const Recovery rec = wiener_deconvolve(y, psf, 1e-4);
  EXPECT_GE(psnr(x, rec.image), 35.0);
  EXPECT_GT(psnr(x, rec.image), psnr(x, y));
}

TEST(Attacks, WienerConvergesAsNsrShrinks) {
  const Image x = bordered_face(96);
  const PsfStack psf = mild_defocus();
  const Image y = capture(x, psf, NoiseSpec{0.0, 0});
  const double p1 = psnr(x, wiener_deconvolve(y, psf, 1e-2).image);
  const double p2 = psnr(x, wiener_deconvolve(y, psf, 1e-3).image);
  const double p3 = psnr(x, wiener_deconvolve(y, psf, 1e-4).image);
  EXPECT_LT(p1, p2);
  EXPECT_LT(p2, p3);
}

TEST(Attacks, WienerFlagsIllConditionedFilters) {
  // A two-tap average has an exact zero at the Nyquist bin.
  Grid<double> box(3, 3, 0.0);
  box(1, 1) = 0.5;
  box(1, 2) = 0.5;
  PsfStack psf;
  psf.kernels = {box};
  psf.crop_energy_loss = {0.0};
  const Image y = random_image(10, 10, 1, 2);
  const Recovery rec = wiener_deconvolve(y, psf, 0.0);
  EXPECT_TRUE(rec.ill_conditioned);
  for (double v : rec.image.plane(0).values()) {
    EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_FALSE(wiener_deconvolve(y, psf, 1e-3).ill_conditioned);
  EXPECT_THROW(wiener_deconvolve(y, psf, -1.0), std::invalid_argument);
}

TEST(Attacks, RegularizedInverseApproachesIdentityForDelta) {
  const Image y = random_image(16, 16, 1, 3);
  const Image rec = regularized_inverse(y, PsfStack::delta(1, 5), 1e-9);
  EXPECT_GT(psnr(y, rec), 80.0);
  EXPECT_THROW(regularized_inverse(y, PsfStack::delta(1, 5), 0.0), std::invalid_argument);
}

TEST(Attacks, RegularizedInverseRecoversDefocus) {
  const Image x = bordered_face(96);
  const PsfStack psf = mild_defocus();
  const Image y = capture(x, psf, NoiseSpec{0.0, 0});
  EXPECT_GT(psnr(x, regularized_inverse(y, psf, 1e-4)), psnr(x, y));
}

TEST(Attacks, UnsharpMaskFormula) {
  const Image flat(12, 12, 2, 0.4);
  const Image flat_out = unsharp_mask(flat, 2.0, 1.5);
  for (int c = 0; c < 2; ++c) {
    for (double v : flat_out.plane(c).values()) {
      EXPECT_NEAR(v, 0.4, 1e-12);
    }
  }
  const Image y = random_image(12, 12, 1, 4, 0.3, 0.7);
  const Image sharp = unsharp_mask(y, 1.0, 0.5);
  const Grid<double> blurred = gaussian_blur(y.plane(0), 1.0);
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      const double expected = std::clamp(y(r, c, 0) + 0.5 * (y(r, c, 0) - blurred(r, c)), 0.0, 1.0);
      EXPECT_NEAR(sharp(r, c, 0), expected, 1e-15);
    }
  }
}

TEST(Attacks, MethodNamesAndValidation) {
  EXPECT_EQ(method_name(WienerAttack{1e-3}), "wiener(nsr=0.001)");
  EXPECT_EQ(method_name(RegularizedInverseAttack{0.01}), "regularized_inverse(epsilon=0.01)");
  EXPECT_EQ(method_name(UnsharpBlindAttack{2.0, 1.5}), "unsharp_blind(radius=2,amount=1.5)");
  EXPECT_NO_THROW(validate(WienerAttack{0.0}));
  EXPECT_THROW(validate(WienerAttack{-1.0}), ConfigError);
  EXPECT_THROW(validate(RegularizedInverseAttack{0.0}), ConfigError);
  EXPECT_THROW(validate(UnsharpBlindAttack{0.0, 1.0}), ConfigError);
}

TEST(Attacks, PsnrDefinition) {
  const Image a = random_image(8, 8, 1, 5);
  EXPECT_EQ(psnr(a, a), kInfinitePsnr);
  EXPECT_NEAR(psnr_from_mse(0.01), 20.0, 1e-12);
  EXPECT_THROW(psnr_from_mse(-1.0), std::invalid_argument);
  EXPECT_THROW(psnr(a, random_image(8, 9, 1, 5)), std::invalid_argument);
}

TEST(Attacks, PsnrMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Image a = random_image(9, 7, 3, seed);
    const Image b = random_image(9, 7, 3, seed + 1000);
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < 9; ++r) {
        for (int k = 0; k < 7; ++k) {
          sum += (a(r, k, c) - b(r, k, c)) * (a(r, k, c) - b(r, k, c));
        }
      }
    }
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / (sum / (9 * 7 * 3))), 1e-9);
  }
}

TEST(Attacks, SsimProperties) {
  const Image a = random_image(24, 20, 3, 6);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_LT(ssim(Image(16, 16, 1, 0.0), Image(16, 16, 1, 1.0)), 0.01);
  EXPECT_THROW(ssim(Image(7, 16, 1), Image(7, 16, 1)), std::invalid_argument);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image x = random_image(17, 21, 2, seed);
    const Image y = random_image(17, 21, 2, seed + 77);
    EXPECT_NEAR(ssim(x, y), ssim(y, x), 1e-14);
    EXPECT_NEAR(ssim(x, y), brute_ssim(x, y), 1e-12);
    EXPECT_GE(ssim(x, y), -1.0);
    EXPECT_LE(ssim(x, y), 1.0);
  }
}

TEST(Attacks, LowResolutionAttackerPsfIsCentredBox) {
  const LensSpec lens{"lr", LowResolutionLens{16}};
  const PsfStack psf = attacker_psf(lens, OpticsConfig{}, 128);
  EXPECT_EQ(psf.channels(), 3);
  EXPECT_NO_THROW(psf.check_invariants());
  EXPECT_DOUBLE_EQ(psf.kernels[0](32, 32), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(psf.kernels[0](28, 28), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(psf.kernels[0](36, 36), 0.0);
}

TEST(Attacks, SuiteDeltaWienerIsNearPerfect) {
  std::vector<AttackImage> data;
  for (int i = 0; i < 3; ++i) {
    data.push_back({"img" + std::to_string(i), random_image(32, 32, 3, 40 + i)});
  }
  const std::vector<LensSpec> lenses{{"delta", PsfStack::delta(3, 64)}};
  const AttackReport report =
      attack_suite(data, lenses, {WienerAttack{1e-3}}, NoiseSpec{0.0, 1}, OpticsConfig{});
  const auto aggregates = report.aggregates();
  ASSERT_EQ(aggregates.size(), 1u);
  EXPECT_GE(aggregates[0].mean_psnr_db, 40.0);
  EXPECT_EQ(aggregates[0].count, 3);
}

TEST(Attacks, SuiteRowsSortedDeterministicAndConsistent) {
  std::vector<AttackImage> data;
  for (int i = 0; i < 2; ++i) {
    data.push_back({"f" + std::to_string(i), synthetic::make_face(64, 8, i).image});
  }
  auto defocus = zernike::ZernikeCoefficients::zeros(4);
  defocus.set_noll(4, 0.1);
  const std::vector<LensSpec> lenses{{"zeta", defocus}, {"alpha", LowResolutionLens{16}}};
  const std::vector<AttackMethod> methods{UnsharpBlindAttack{}, WienerAttack{1e-3}};
  const NoiseSpec noise{0.01, 33};
  const AttackReport a = attack_suite(data, lenses, methods, noise, OpticsConfig{});
  const AttackReport b = attack_suite(data, lenses, methods, noise, OpticsConfig{});
  ASSERT_EQ(a.rows.size(), 8u);
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    const auto& p = a.rows[i - 1];
    const auto& q = a.rows[i];
    EXPECT_LE(std::tie(p.lens, p.method, p.image_index), std::tie(q.lens, q.method, q.image_index));
  }
  EXPECT_EQ(a.rows.front().lens, "alpha");
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_TRUE(a.rows[i].ok);
    EXPECT_EQ(a.rows[i].psnr_db, b.rows[i].psnr_db);
    EXPECT_EQ(a.rows[i].ssim, b.rows[i].ssim);
    EXPECT_NEAR(psnr_from_mse(a.rows[i].mse), a.rows[i].psnr_db, 1e-6);
    EXPECT_TRUE(std::isfinite(a.rows[i].capture_psnr_db));
  }
  // A row depends only on (lens, method, image, seed): dropping a lens
  // leaves the other rows untouched.
  const AttackReport solo = attack_suite(data, {lenses[0]}, methods, noise, OpticsConfig{});
  for (const auto& row : solo.rows) {
    const auto match = std::find_if(a.rows.begin(), a.rows.end(), [&](const AttackRow& r) {
      return r.lens == row.lens && r.method == row.method && r.image_index == row.image_index;
    });
    ASSERT_NE(match, a.rows.end());
    EXPECT_EQ(match->mse, row.mse);
  }
}

TEST(Attacks, SuiteRecordsFailuresAndContinues) {
  std::vector<AttackImage> data{{"small", random_image(16, 16, 3, 1)}};
  const std::vector<LensSpec> lenses{{"too-fine", LowResolutionLens{32}},
                                     {"delta", PsfStack::delta(3, 64)}};
  const AttackReport report =
      attack_suite(data, lenses, {WienerAttack{1e-3}}, NoiseSpec{0.0, 1}, OpticsConfig{});
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_TRUE(report.rows[0].ok);
  EXPECT_FALSE(report.rows[1].ok);
  EXPECT_NE(report.rows[1].status.find("capture failed"), std::string::npos);
  const auto aggregates = report.aggregates();
  EXPECT_EQ(aggregates[1].failures, 1);
  EXPECT_THROW(attack_suite({}, lenses, {WienerAttack{}}, NoiseSpec{}, OpticsConfig{}),
               std::invalid_argument);
}
