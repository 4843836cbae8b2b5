#pragma once

#include <span>
#include <utility>
#include <vector>

#include "privlens/grid.hpp"

namespace privlens::zernike {

/// Noll single index together with its radial order and signed azimuthal
/// frequency. Positive m selects the cosine term, negative m the sine term.
struct NollIndex {
  int j = 1;
  int n = 0;
  int m = 0;

  /// Throws std::invalid_argument for j < 1.
  static NollIndex from_j(int j);
};

/// (n, m) of Noll index j. Even j carries the cosine (m > 0) mode and odd j
/// the sine (m < 0) mode whenever m != 0.
std::pair<int, int> noll_to_nm(int j);

/// Zernike radial polynomial R_n^m(rho) from its factorial series.
/// Requires n >= m_abs >= 0 and n - m_abs even.
double radial_polynomial(int n, int m_abs, double rho);

/// Noll normalisation: sqrt(n+1) for m == 0, sqrt(2(n+1)) otherwise.
double noll_normalization(int n, int m);

/// Square sampling of the pupil plane. Pixel (N/2, N/2) is the origin and
/// the grid spans u, v in [-1, 1): u = (col - N/2) / (N/2), v likewise with
/// rows. The aperture is the closed unit disk.
class UnitDiskGrid {
 public:
  explicit UnitDiskGrid(int resolution);

  int resolution() const { return resolution_; }
  double u(int col) const { return (col - resolution_ / 2) / half_; }
  double v(int row) const { return (row - resolution_ / 2) / half_; }
  bool inside(int row, int col) const { return mask_(row, col) != 0; }
  const Grid<unsigned char>& mask() const { return mask_; }
  int aperture_pixel_count() const { return aperture_pixels_; }

  friend bool operator==(const UnitDiskGrid& a, const UnitDiskGrid& b) {
    return a.resolution_ == b.resolution_;
  }

 private:
  int resolution_;
  double half_;
  Grid<unsigned char> mask_;
  int aperture_pixels_ = 0;
};

/// Q_j sampled on `grid`; zero outside the aperture.
Grid<double> evaluate_basis(int j, const UnitDiskGrid& grid);

/// Zernike amplitudes beta_1..beta_p in micrometres. Stored 0-based, so
/// element i belongs to Noll index i + 1.
class ZernikeCoefficients {
 public:
  ZernikeCoefficients() = default;
  /// Throws std::invalid_argument on an empty or non-finite vector.
  explicit ZernikeCoefficients(std::vector<double> beta_um);

  static ZernikeCoefficients zeros(int p);

  int size() const { return static_cast<int>(beta_.size()); }
  double operator[](int i) const { return beta_[i]; }
  double noll(int j) const { return beta_.at(j - 1); }
  void set_noll(int j, double value);
  std::span<const double> values() const { return beta_; }

  friend bool operator==(const ZernikeCoefficients&, const ZernikeCoefficients&) = default;

 private:
  std::vector<double> beta_;
};

/// Discretised surface profile phi (micrometres of optical path).
struct PhaseMask {
  Grid<double> height_um;
  UnitDiskGrid grid;
};

/// Precomputed Q_1..Q_p on one grid. synthesize() is then a weighted sum.
class ZernikeBasis {
 public:
  ZernikeBasis(int p, const UnitDiskGrid& grid);

  int size() const { return static_cast<int>(modes_.size()); }
  const UnitDiskGrid& grid() const { return grid_; }
  const Grid<double>& mode(int j) const { return modes_.at(j - 1); }

  /// phi = sum_j beta_j Q_j. Coefficients beyond p are rejected.
  PhaseMask synthesize(const ZernikeCoefficients& beta) const;

 private:
  UnitDiskGrid grid_;
  std::vector<Grid<double>> modes_;
};

PhaseMask synthesize_phase(const ZernikeCoefficients& beta, const UnitDiskGrid& grid);

}  // namespace privlens::zernike
