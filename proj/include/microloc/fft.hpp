#pragma once

#include <vector>

#include "microloc/grid.hpp"

namespace microloc {

/// Forward DFT with 1/N normalization: uhat(k) = (1/N) sum_x u(x) e^{-i x.xi_k}.
std::vector<Cplx> fft_forward(const GridSpec& grid, const std::vector<Cplx>& v);

/// Inverse DFT, unnormalized: u(x) = sum_k uhat(k) e^{+i x.xi_k}.
std::vector<Cplx> fft_inverse(const GridSpec& grid, const std::vector<Cplx>& v);

}  // namespace microloc
