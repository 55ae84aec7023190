#pragma once

#include <memory>

#include "microloc/grid.hpp"
#include "microloc/symbols.hpp"

namespace microloc {

enum class OpMode { Left, AdjointOfLeft };

/// Discrete Kohn-Nirenberg quantization of a symbol on a periodic grid:
///   (A u)(x) = sum_k a(x, xi_k) uhat(k) e^{i x.xi_k},
/// with the forward transform normalized so that a == 1 is the identity.
/// AdjointOfLeft applies the conjugate transpose of the same matrix,
/// realized spectrally.
class Operator {
 public:
  Operator() = default;
  Operator(Symbol sym, GridSpec grid, OpMode mode = OpMode::Left);

  const Symbol& symbol() const;
  const GridSpec& grid() const;
  OpMode mode() const;

  Operator adjoint() const;
  Field apply(const Field& u) const;

  struct State;  // opaque sampled-table state, shared between adjoint pairs

 private:
  std::shared_ptr<const State> state_;
  OpMode mode_ = OpMode::Left;
};

Operator quantize(const Symbol& a, const GridSpec& grid);

/// Composition helper: applies ops right to left.
Field apply_chain(const std::vector<Operator>& ops, const Field& u);

// ---- norms and multiplier scales ---------------------------------------------

/// H^s norm via the frequency lattice: (L^d sum <xi_k>^{2s} |uhat|^2)^{1/2}.
double sobolev_norm(const Field& u, double s);
/// L^2 norm computed on the space side (Riemann sum); Parseval partner of
/// sobolev_norm(u, 0).
double l2_norm_physical(const Field& u);
inline double l2_norm(const Field& u) { return sobolev_norm(u, 0.0); }
/// <u, v> = (L^d/N) sum u conj(v).
Cplx inner(const Field& u, const Field& v);

/// Lambda_s = (I - Delta)^{s/2}, the Sobolev scale multiplier.
Operator lambda_operator(double s, const GridSpec& grid);
/// Lambda_{eps,-r} = (1 - eps^2 Delta)^{-r/2}, multiplier <eps xi>^{-r}.
Operator lambda_reg(double eps, double r, const GridSpec& grid);

/// Spectral application of the flat wave operator multiplier
/// xi_0^2 - xi_1^2 - ... - xi_n^2.
Field apply_dalembertian(const Field& u);

}  // namespace microloc
