#include "privlens/zernike.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace privlens::zernike {

NollIndex NollIndex::from_j(int j) {
  const auto [n, m] = noll_to_nm(j);
  return NollIndex{j, n, m};
}

std::pair<int, int> noll_to_nm(int j) {
  if (j < 1) {
    throw std::invalid_argument("noll_to_nm: j must be >= 1, got " + std::to_string(j));
  }
  // Row n holds indices n(n+1)/2 + 1 .. (n+1)(n+2)/2.
  int n = 0;
  while ((n + 1) * (n + 2) / 2 < j) {
    ++n;
  }
  const int position = j - n * (n + 1) / 2 - 1;
  // |m| runs over the values of n's parity in increasing order, each
  // non-zero |m| occupying two consecutive indices.
  const int m_abs = (n % 2 == 0) ? 2 * ((position + 1) / 2) : 2 * (position / 2) + 1;
  if (m_abs == 0) {
    return {n, 0};
  }
  return {n, (j % 2 == 0) ? m_abs : -m_abs};
}

double radial_polynomial(int n, int m_abs, double rho) {
  if (m_abs < 0 || m_abs > n || (n - m_abs) % 2 != 0) {
    throw std::invalid_argument("radial_polynomial: need n >= |m| >= 0 and n - |m| even");
  }
  auto factorial = [](int k) { return std::tgamma(static_cast<double>(k) + 1.0); };
  double sum = 0.0;
  for (int k = 0; k <= (n - m_abs) / 2; ++k) {
    const double coeff = ((k % 2 == 0) ? 1.0 : -1.0) * factorial(n - k) /
                         (factorial(k) * factorial((n + m_abs) / 2 - k) *
                          factorial((n - m_abs) / 2 - k));
    sum += coeff * std::pow(rho, n - 2 * k);
  }
  return sum;
}

double noll_normalization(int n, int m) {
  return m == 0 ? std::sqrt(n + 1.0) : std::sqrt(2.0 * (n + 1.0));
}

UnitDiskGrid::UnitDiskGrid(int resolution)
    : resolution_(resolution), half_(resolution / 2), mask_() {
  if (resolution < 2) {
    throw std::invalid_argument("UnitDiskGrid: resolution must be >= 2");
  }
  mask_ = Grid<unsigned char>(resolution, resolution, 0);
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const double uu = u(col);
      const double vv = v(row);
      if (uu * uu + vv * vv <= 1.0) {
        mask_(row, col) = 1;
        ++aperture_pixels_;
      }
    }
  }
}

Grid<double> evaluate_basis(int j, const UnitDiskGrid& grid) {
  const auto [n, m] = noll_to_nm(j);
  const double norm = noll_normalization(n, m);
  const int m_abs = std::abs(m);
  const int size = grid.resolution();
  Grid<double> out(size, size, 0.0);
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      if (!grid.inside(row, col)) {
        continue;
      }
      const double u = grid.u(col);
      const double v = grid.v(row);
      const double rho = std::sqrt(u * u + v * v);
      const double theta = std::atan2(v, u);
      double angular = 1.0;
      if (m > 0) {
        angular = std::cos(m_abs * theta);
      } else if (m < 0) {
        angular = std::sin(m_abs * theta);
      }
      out(row, col) = norm * radial_polynomial(n, m_abs, rho) * angular;
    }
  }
  return out;
}

ZernikeCoefficients::ZernikeCoefficients(std::vector<double> beta_um) : beta_(std::move(beta_um)) {
  if (beta_.empty()) {
    throw std::invalid_argument("ZernikeCoefficients: p must be >= 1");
  }
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    if (!std::isfinite(beta_[i])) {
      throw std::invalid_argument("ZernikeCoefficients: beta_" + std::to_string(i + 1) +
                                  " is not finite");
    }
  }
}

ZernikeCoefficients ZernikeCoefficients::zeros(int p) {
  return ZernikeCoefficients(std::vector<double>(static_cast<std::size_t>(p), 0.0));
}

void ZernikeCoefficients::set_noll(int j, double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("ZernikeCoefficients: non-finite value");
  }
  beta_.at(j - 1) = value;
}

ZernikeBasis::ZernikeBasis(int p, const UnitDiskGrid& grid) : grid_(grid) {
  if (p < 1) {
    throw std::invalid_argument("ZernikeBasis: p must be >= 1");
  }
  modes_.reserve(p);
  for (int j = 1; j <= p; ++j) {
    modes_.push_back(evaluate_basis(j, grid));
  }
}

PhaseMask ZernikeBasis::synthesize(const ZernikeCoefficients& beta) const {
  if (beta.size() > size()) {
    throw std::invalid_argument("ZernikeBasis: " + std::to_string(beta.size()) +
                                " coefficients but only " + std::to_string(size()) + " modes");
  }
  const int n = grid_.resolution();
  PhaseMask mask{Grid<double>(n, n, 0.0), grid_};
  auto phi = mask.height_um.values();
  for (int i = 0; i < beta.size(); ++i) {
    const double b = beta[i];
    if (b == 0.0) {
      continue;
    }
    const auto q = modes_[i].values();
    for (std::size_t k = 0; k < phi.size(); ++k) {
      phi[k] += b * q[k];
    }
  }
  return mask;
}

PhaseMask synthesize_phase(const ZernikeCoefficients& beta, const UnitDiskGrid& grid) {
  return ZernikeBasis(beta.size(), grid).synthesize(beta);
}

}  // namespace privlens::zernike
