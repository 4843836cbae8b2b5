#include "privlens/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

#include "privlens/errors.hpp"
#include "privlens/fft.hpp"
#include "privlens/heatmap.hpp"
#include "privlens/parallel.hpp"

namespace privlens {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string format_parameter(const char* name, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%s=%g", name, value);
  return buffer;
}

void require_psf_for(const Image& y, const PsfStack& psf, const char* what) {
  if (psf.channels() != y.channels()) {
    throw std::invalid_argument(std::string(what) + ": PSF channels differ from image channels");
  }
  if (psf.size() < 1) {
    throw std::invalid_argument(std::string(what) + ": empty PSF");
  }
}

// conj(H) Y / (|H|^2 + reg) per bin, where reg comes from `regularizer`.
template <class Regularizer>
Recovery filtered_inverse(const Image& y, const PsfStack& psf, Regularizer regularizer) {
  const Convolver convolver(y.height(), y.width(), psf.size());
  Recovery out{Image(y.height(), y.width(), y.channels()), false};
  std::vector<char> floored(y.channels(), 0);
  parallel_for(y.channels(), [&](std::size_t c) {
    const int ch = static_cast<int>(c);
    Convolver::Spectrum spectrum = convolver.image_spectrum(y.plane(ch));
    const Convolver::Spectrum h = convolver.kernel_spectrum(psf.kernels[c]);
    const Convolver::Spectrum reg = regularizer(convolver);
    auto dst = spectrum.values();
    const auto hv = h.values();
    const auto rv = reg.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      double denom = std::norm(hv[i]) + rv[i].real();
      if (!(denom >= kWienerDenominatorFloor)) {
        denom = kWienerDenominatorFloor;
        floored[c] = 1;
      }
      dst[i] = std::conj(hv[i]) * dst[i] / denom;
    }
    out.image.plane(ch) = convolver.crop_inverse(spectrum);
  });
  out.image.clamp01();
  out.ill_conditioned = std::any_of(floored.begin(), floored.end(), [](char f) { return f != 0; });
  return out;
}

double finite_or_throw(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw NumericalError(std::string(what) + " produced a non-finite value");
  }
  return value;
}

}  // namespace

std::string method_name(const AttackMethod& method) {
  return std::visit(
      Overloaded{
          [](const WienerAttack& m) { return "wiener(" + format_parameter("nsr", m.nsr) + ")"; },
          [](const RegularizedInverseAttack& m) {
            return "regularized_inverse(" + format_parameter("epsilon", m.epsilon) + ")";
          },
          [](const UnsharpBlindAttack& m) {
            return "unsharp_blind(" + format_parameter("radius", m.radius_px) + "," +
                   format_parameter("amount", m.amount) + ")";
          },
      },
      method);
}

void validate(const AttackMethod& method) {
  std::visit(Overloaded{
                 [](const WienerAttack& m) {
                   if (!(m.nsr >= 0.0) || !std::isfinite(m.nsr)) {
                     throw ConfigError("wiener: nsr must be >= 0");
                   }
                 },
                 [](const RegularizedInverseAttack& m) {
                   if (!(m.epsilon > 0.0) || !std::isfinite(m.epsilon)) {
                     throw ConfigError("regularized_inverse: epsilon must be > 0");
                   }
                 },
                 [](const UnsharpBlindAttack& m) {
                   if (!(m.radius_px > 0.0) || !(m.amount > 0.0) || !std::isfinite(m.radius_px) ||
                       !std::isfinite(m.amount)) {
                     throw ConfigError("unsharp_blind: radius and amount must be > 0");
                   }
                 },
             },
             method);
}

Recovery wiener_deconvolve(const Image& y, const PsfStack& psf, double nsr) {
  if (!(nsr >= 0.0)) {
    throw std::invalid_argument("wiener_deconvolve: nsr must be >= 0");
  }
  require_psf_for(y, psf, "wiener_deconvolve");
  return filtered_inverse(y, psf, [&](const Convolver& convolver) {
    return Convolver::Spectrum(convolver.padded_rows(), convolver.padded_cols() / 2 + 1,
                               std::complex<double>(nsr, 0.0));
  });
}

Image regularized_inverse(const Image& y, const PsfStack& psf, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("regularized_inverse: epsilon must be > 0");
  }
  require_psf_for(y, psf, "regularized_inverse");
  return filtered_inverse(y, psf, [&](const Convolver& convolver) {
           Grid<double> laplacian(3, 3, 0.0);
           laplacian(0, 1) = laplacian(1, 0) = laplacian(1, 2) = laplacian(2, 1) = 1.0;
           laplacian(1, 1) = -4.0;
           Grid<double> padded(convolver.padded_rows(), convolver.padded_cols(), 0.0);
           for (int a = 0; a < 3; ++a) {
             for (int b = 0; b < 3; ++b) {
               padded((a - 1 + padded.rows()) % padded.rows(),
                      (b - 1 + padded.cols()) % padded.cols()) = laplacian(a, b);
             }
           }
           Convolver::Spectrum spectrum = fft::forward_real(padded);
           for (auto& v : spectrum.values()) {
             v = std::complex<double>(epsilon * std::norm(v), 0.0);
           }
           return spectrum;
         })
      .image;
}

Image unsharp_mask(const Image& y, double radius_px, double amount) {
  if (!(radius_px > 0.0) || !(amount >= 0.0)) {
    throw std::invalid_argument("unsharp_mask: radius must be > 0 and amount >= 0");
  }
  Image out(y.height(), y.width(), y.channels());
  for (int c = 0; c < y.channels(); ++c) {
    const Grid<double> blurred = gaussian_blur(y.plane(c), radius_px);
    const auto src = y.plane(c).values();
    const auto low = blurred.values();
    auto dst = out.plane(c).values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = src[i] + amount * (src[i] - low[i]);
    }
  }
  out.clamp01();
  return out;
}

Recovery run_attack(const AttackMethod& method, const Image& y, const PsfStack& psf) {
  validate(method);
  return std::visit(
      Overloaded{
          [&](const WienerAttack& m) { return wiener_deconvolve(y, psf, m.nsr); },
          [&](const RegularizedInverseAttack& m) {
            return Recovery{regularized_inverse(y, psf, m.epsilon), false};
          },
          [&](const UnsharpBlindAttack& m) {
            return Recovery{unsharp_mask(y, m.radius_px, m.amount), false};
          },
      },
      method);
}

double psnr_from_mse(double mse) {
  if (!(mse >= 0.0)) {
    throw std::invalid_argument("psnr: MSE must be >= 0");
  }
  if (mse == 0.0) {
    return kInfinitePsnr;
  }
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mean_squared_error(a, b)); }

double ssim(const Image& a, const Image& b) {
  constexpr int kWindow = 8;
  constexpr int kStride = 4;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  require_same_shape(a, b, "ssim");
  if (a.height() < kWindow || a.width() < kWindow) {
    throw std::invalid_argument("ssim: images must be at least 8x8");
  }
  constexpr double n = kWindow * kWindow;
  double sum = 0.0;
  long windows = 0;
  for (int c = 0; c < a.channels(); ++c) {
    const Grid<double>& pa = a.plane(c);
    const Grid<double>& pb = b.plane(c);
    for (int r0 = 0; r0 + kWindow <= a.height(); r0 += kStride) {
      for (int c0 = 0; c0 + kWindow <= a.width(); c0 += kStride) {
        double mean_a = 0.0;
        double mean_b = 0.0;
        for (int r = r0; r < r0 + kWindow; ++r) {
          for (int k = c0; k < c0 + kWindow; ++k) {
            mean_a += pa(r, k);
            mean_b += pb(r, k);
          }
        }
        mean_a /= n;
        mean_b /= n;
        double var_a = 0.0;
        double var_b = 0.0;
        double cov = 0.0;
        for (int r = r0; r < r0 + kWindow; ++r) {
          for (int k = c0; k < c0 + kWindow; ++k) {
            const double da = pa(r, k) - mean_a;
            const double db = pb(r, k) - mean_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
          }
        }
        var_a /= n;
        var_b /= n;
        cov /= n;
        sum += ((2.0 * mean_a * mean_b + kC1) * (2.0 * cov + kC2)) /
               ((mean_a * mean_a + mean_b * mean_b + kC1) * (var_a + var_b + kC2));
        ++windows;
      }
    }
  }
  return sum / static_cast<double>(windows);
}

PsfStack attacker_psf(const LensSpec& lens, const OpticsConfig& optics, int image_height) {
  return std::visit(
      Overloaded{
          [&](const zernike::ZernikeCoefficients& beta) {
            return PsfModel(optics, beta.size()).compute(beta);
          },
          [&](const PsfStack& psf) { return psf; },
          [&](const LowResolutionLens& lr) {
            if (lr.sensor_size < 1 || lr.sensor_size > image_height) {
              throw std::invalid_argument("low-resolution sensor size must be in [1, H]");
            }
            const int k = optics.psf_crop;
            const int width = std::min(k, std::max(1, image_height / lr.sensor_size));
            const int start = k / 2 - width / 2;
            Grid<double> box(k, k, 0.0);
            for (int r = start; r < start + width; ++r) {
              for (int c = start; c < start + width; ++c) {
                box(r, c) = 1.0 / (static_cast<double>(width) * width);
              }
            }
            PsfStack psf;
            psf.kernels.assign(optics.channels(), box);
            psf.wavelengths_nm = optics.wavelengths_nm;
            psf.crop_energy_loss.assign(optics.channels(), 0.0);
            return psf;
          },
      },
      lens.model);
}

Image simulate_lens(const LensSpec& lens, const PsfStack& psf, const Image& x,
                    const NoiseSpec& noise, std::uint64_t image_id) {
  if (const auto* lr = std::get_if<LowResolutionLens>(&lens.model)) {
    return capture_low_resolution(x, lr->sensor_size, noise, image_id);
  }
  return capture(x, psf, noise, image_id);
}

AttackReport attack_suite(const std::vector<AttackImage>& dataset,
                          const std::vector<LensSpec>& lenses,
                          const std::vector<AttackMethod>& methods, const NoiseSpec& noise,
                          const OpticsConfig& optics) {
  if (dataset.empty() || lenses.empty() || methods.empty()) {
    throw std::invalid_argument("attack_suite: dataset, lenses and methods must be non-empty");
  }
  for (const auto& method : methods) {
    validate(method);
  }

  const std::size_t n_images = dataset.size();
  const std::size_t n_methods = methods.size();
  std::vector<AttackRow> rows(lenses.size() * n_images * n_methods);
  // One task per (lens, image): the capture is shared by every method.
  parallel_for(lenses.size() * n_images, [&](std::size_t task) {
    const std::size_t l = task / n_images;
    const std::size_t i = task % n_images;
    const AttackImage& item = dataset[i];
    auto row_at = [&](std::size_t m) -> AttackRow& {
      AttackRow& row = rows[(l * n_images + i) * n_methods + m];
      row.lens = lenses[l].name;
      row.method = method_name(methods[m]);
      row.image_index = static_cast<int>(i);
      row.image_name = item.name;
      return row;
    };
    auto fail = [&](std::size_t m, const std::string& why) {
      AttackRow& row = row_at(m);
      row.ok = false;
      row.status = why;
      row.mse = row.psnr_db = row.ssim = row.capture_psnr_db = std::nan("");
    };

    PsfStack psf;
    Image y;
    try {
      psf = attacker_psf(lenses[l], optics, item.x.height());
      y = simulate_lens(lenses[l], psf, item.x, noise, i);
    } catch (const std::exception& e) {
      for (std::size_t m = 0; m < n_methods; ++m) {
        fail(m, std::string("capture failed: ") + e.what());
      }
      return;
    }
    double capture_psnr = std::nan("");
    try {
      capture_psnr = psnr(item.x, y);
    } catch (const std::exception&) {
    }
    for (std::size_t m = 0; m < n_methods; ++m) {
      try {
        const Recovery recovery = run_attack(methods[m], y, psf);
        AttackRow& row = row_at(m);
        row.mse = finite_or_throw(mean_squared_error(item.x, recovery.image), "mse");
        row.psnr_db = psnr_from_mse(row.mse);
        row.ssim = finite_or_throw(ssim(item.x, recovery.image), "ssim");
        row.capture_psnr_db = capture_psnr;
        row.status = recovery.ill_conditioned ? "ok (ill-conditioned)" : "ok";
      } catch (const std::exception& e) {
        fail(m, std::string("attack failed: ") + e.what());
      }
    }
  });

  std::stable_sort(rows.begin(), rows.end(), [](const AttackRow& a, const AttackRow& b) {
    return std::tie(a.lens, a.method, a.image_index) < std::tie(b.lens, b.method, b.image_index);
  });
  return AttackReport{std::move(rows)};
}

std::vector<AttackAggregate> AttackReport::aggregates() const {
  std::vector<AttackAggregate> out;
  for (const AttackRow& row : rows) {
    if (out.empty() || out.back().lens != row.lens || out.back().method != row.method) {
      out.push_back(AttackAggregate{row.lens, row.method});
    }
    AttackAggregate& agg = out.back();
    if (!row.ok) {
      ++agg.failures;
      continue;
    }
    ++agg.count;
    agg.mean_mse += row.mse;
    agg.mean_psnr_db += row.psnr_db;
    agg.mean_ssim += row.ssim;
  }
  for (AttackAggregate& agg : out) {
    if (agg.count > 0) {
      agg.mean_mse /= agg.count;
      agg.mean_psnr_db /= agg.count;
      agg.mean_ssim /= agg.count;
    } else {
      agg.mean_mse = agg.mean_psnr_db = agg.mean_ssim = std::nan("");
    }
  }
  return out;
}

}  // namespace privlens
