#include "privlens/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace privlens::fft {
namespace {

enum class Kind { kForward, kBackward, kRealForward, kRealBackward };

// FFTW planning is not thread-safe, execution with the new-array interface
// is. Plans are created once per (kind, shape) under a lock and reused.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(Kind kind, int rows, int cols) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(kind, rows, cols);
    if (auto it = plans_.find(key); it != plans_.end()) {
      return it->second;
    }
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    const std::size_t half = static_cast<std::size_t>(rows) * (cols / 2 + 1);
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::kForward:
      case Kind::kBackward: {
        auto* buf = fftw_alloc_complex(n);
        plan = fftw_plan_dft_2d(rows, cols, buf, buf,
                                kind == Kind::kForward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
        fftw_free(buf);
        break;
      }
      case Kind::kRealForward: {
        auto* in = fftw_alloc_real(n);
        auto* out = fftw_alloc_complex(half);
        plan = fftw_plan_dft_r2c_2d(rows, cols, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case Kind::kRealBackward: {
        auto* in = fftw_alloc_complex(half);
        auto* out = fftw_alloc_real(n);
        plan = fftw_plan_dft_c2r_2d(rows, cols, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    if (plan == nullptr) {
      throw std::runtime_error("fft: planning failed");
    }
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) {
      fftw_destroy_plan(plan);
    }
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<Kind, int, int>, fftw_plan> plans_;
};

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

void require_nonempty(int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("fft: empty input");
  }
}

}  // namespace

void forward(Grid<Complex>& field) {
  require_nonempty(field.rows(), field.cols());
  auto plan = PlanCache::instance().get(Kind::kForward, field.rows(), field.cols());
  fftw_execute_dft(plan, as_fftw(field.data()), as_fftw(field.data()));
}

void inverse(Grid<Complex>& field) {
  require_nonempty(field.rows(), field.cols());
  auto plan = PlanCache::instance().get(Kind::kBackward, field.rows(), field.cols());
  fftw_execute_dft(plan, as_fftw(field.data()), as_fftw(field.data()));
  const double scale = 1.0 / static_cast<double>(field.size());
  for (auto& v : field.values()) {
    v *= scale;
  }
}

Grid<Complex> forward_real(const Grid<double>& input) {
  require_nonempty(input.rows(), input.cols());
  Grid<double> scratch = input;  // r2c may not preserve its input
  Grid<Complex> out(input.rows(), input.cols() / 2 + 1);
  auto plan = PlanCache::instance().get(Kind::kRealForward, input.rows(), input.cols());
  fftw_execute_dft_r2c(plan, scratch.data(), as_fftw(out.data()));
  return out;
}

Grid<double> inverse_real(const Grid<Complex>& spectrum, int cols) {
  require_nonempty(spectrum.rows(), cols);
  if (spectrum.cols() != cols / 2 + 1) {
    throw std::invalid_argument("fft: spectrum width does not match signal width");
  }
  Grid<Complex> scratch = spectrum;  // c2r destroys its input
  Grid<double> out(spectrum.rows(), cols);
  auto plan = PlanCache::instance().get(Kind::kRealBackward, spectrum.rows(), cols);
  fftw_execute_dft_c2r(plan, as_fftw(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out.values()) {
    v *= scale;
  }
  return out;
}

int good_size(int n) {
  if (n <= 1) {
    return 1;
  }
  for (int candidate = n;; ++candidate) {
    int rest = candidate;
    for (int f : {2, 3, 5, 7}) {
      while (rest % f == 0) {
        rest /= f;
      }
    }
    if (rest == 1) {
      return candidate;
    }
  }
}

}  // namespace privlens::fft
