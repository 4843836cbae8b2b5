#pragma once

#include <complex>

#include "privlens/grid.hpp"

namespace privlens::fft {

using Complex = std::complex<double>;

/// In-place unnormalized forward 2D DFT (sign -1).
void forward(Grid<Complex>& field);

/// In-place inverse 2D DFT scaled by 1/(rows*cols), so inverse(forward(x)) == x.
void inverse(Grid<Complex>& field);

/// Real-to-complex forward transform. Result has rows x (cols/2 + 1) entries.
Grid<Complex> forward_real(const Grid<double>& input);

/// Complex-to-real inverse of forward_real, scaled by 1/(rows*cols).
/// `cols` is the width of the real signal.
Grid<double> inverse_real(const Grid<Complex>& spectrum, int cols);

/// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
int good_size(int n);

/// Signed frequency index of DFT bin `k` for a transform of length `n`.
inline int signed_frequency(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

}  // namespace privlens::fft
