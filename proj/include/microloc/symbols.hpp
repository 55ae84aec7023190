#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "microloc/vec.hpp"

namespace microloc {

/// One separable term a(x,xi) = space(x) * freq(xi). A null factor means the
/// constant 1. Factor gradients are optional; when present they are analytic.
struct SeparableTerm {
  std::function<Cplx(const Vec&)> space;
  std::function<Cplx(const Vec&)> freq;
  std::function<CVec(const Vec&)> space_grad;
  std::function<CVec(const Vec&)> freq_grad;
};

/// Order-tagged black-box symbol a(x, xi). Immutable and cheap to copy;
/// safe to share across threads.
///
/// Structure tags let quantization pick a fast application path:
/// x-independent symbols become Fourier multipliers, xi-independent ones
/// pointwise multipliers, separable sums use one transform per term, and
/// generic symbols fall back to the direct lattice sum (optionally
/// accelerated by a frequency prefactor whose zero set prunes columns).
class Symbol {
 public:
  enum class Structure { Generic, XIndependent, XiIndependent, Separable };

  using Eval = std::function<Cplx(const Vec& x, const Vec& xi)>;
  using GradFn = std::function<CVec(const Vec& x, const Vec& xi)>;
  using FreqFn = std::function<Cplx(const Vec& xi)>;

  Symbol() = default;

  static Symbol generic(int dim, double order, Eval eval, std::string label);
  /// Generic symbol factored as core(x,xi) * prefactor(xi).
  static Symbol generic_factored(int dim, double order, Eval core,
                                 FreqFn prefactor, std::string label);
  static Symbol from_terms(int dim, double order,
                           std::vector<SeparableTerm> terms, std::string label);

  bool valid() const { return impl_ != nullptr; }
  int dim() const;
  double order() const;
  const std::string& label() const;
  Structure structure() const;
  const std::vector<SeparableTerm>& terms() const;
  const std::optional<BoxRegion>& x_support() const;
  const std::array<double, kMaxDim>& periods() const;

  /// Evaluate; returns 0 outside x_support when a support box is set.
  Cplx eval(const Vec& x, const Vec& xi) const;
  Cplx operator()(const Vec& x, const Vec& xi) const { return eval(x, xi); }

  /// Generic-path factorization: eval = core * freq_prefactor. Both null for
  /// structured symbols.
  const Eval& core() const;
  const FreqFn& freq_prefactor() const;

  bool has_analytic_gradients() const;
  /// Analytic gradient when available, otherwise central finite differences
  /// with step 1e-5*(1+|x|) resp. 1e-5*(1+|xi|).
  CVec grad_x(const Vec& x, const Vec& xi) const;
  CVec grad_xi(const Vec& x, const Vec& xi) const;
  CVec grad_x_fd(const Vec& x, const Vec& xi, double scale = 1e-5) const;
  CVec grad_xi_fd(const Vec& x, const Vec& xi, double scale = 1e-5) const;

  Symbol with_x_support(BoxRegion box) const;
  Symbol with_label(std::string label) const;
  Symbol with_order(double order) const;
  /// Torus periods used for periodic containment of x_support.
  Symbol with_periods(std::array<double, kMaxDim> periods) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  explicit Symbol(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
};

// ---- algebra ----------------------------------------------------------------

Symbol symbol_product(const Symbol& a, const Symbol& b);
Symbol symbol_sum(const Symbol& a, const Symbol& b);
Symbol symbol_scale(const Symbol& a, Cplx c);
inline Symbol symbol_negate(const Symbol& a) { return symbol_scale(a, -1.0); }
Symbol symbol_conjugate(const Symbol& a);

// ---- builders ---------------------------------------------------------------

/// sigma_2(box) = xi_0^2 - xi_1^2 - ... - xi_n^2 (order 2, analytic gradients).
Symbol make_box_symbol(int d);

/// <xi>^m (order m, analytic gradients).
Symbol make_bracket_symbol(int d, double m);

/// <eps*xi>^p (order p; for p<0 and eps in (0,1] a regularizer symbol).
Symbol make_eps_bracket_symbol(int d, double eps, double p);

Symbol make_constant_symbol(int d, Cplx c);

/// Linear frequency coordinate xi_axis (order 1, analytic gradients).
Symbol make_xi_coordinate_symbol(int d, int axis);

/// Smooth compactly supported x-cutoff (tensor plateau bumps, periodic wrap).
struct BumpSpec {
  Vec center;
  Vec halfwidth;
  double plateau = 0.5;  // fraction of halfwidth that evaluates to exactly 1
  double period = kTwoPi;
};
Symbol make_bump_multiplier(const BumpSpec& spec);

/// Direction cone cutoff around `direction`, smooth on all of R^d thanks to a
/// radial low cut; optional <xi>^m weight.
struct ConeSpec {
  Vec direction;           // need not be normalized
  double half_angle = 0.2; // radians
  double plateau = 0.5;    // fraction (in the cos-based surrogate coordinate)
  double lowcut_on = 2.0;  // symbol vanishes for |xi| <= lowcut_on
  double lowcut_full = 4.0;
  double order = 0.0;      // multiplies by <xi>^order
};
Symbol make_cone_cutoff(const ConeSpec& spec);

/// chi_C of the parametrix footnote: identically 1 on |xi| <= C, 0 beyond
/// C + width.
Symbol make_radial_cutoff(int d, double C, double width);

/// Phase-space tube: plateau profile along/across a spatial axis, times a
/// direction cone, times <xi>^order. The workhorse for b/e/g triples.
struct TubeSpec {
  Vec center;
  Vec axis;                // spatial axis of the tube (unit not required)
  double par_halfwidth = 1.0, par_plateau = 0.5;
  double perp_halfwidth = 0.5, perp_plateau = 0.5;
  Vec direction;           // cone center
  double half_angle = 0.2, ang_plateau = 0.5;
  double lowcut_on = 2.0, lowcut_full = 4.0;
  double order = 0.0;
  double period = kTwoPi;

  TubeSpec shrunk(double factor) const;  // shrink spatial + angular extents
};
Symbol make_tube_cutoff(const TubeSpec& spec);

// ---- numerical checks of the defining bounds --------------------------------

struct NeighborhoodSpec {
  double x_radius = 0.1;
  double ang_radius = 0.05;
  std::vector<double> lambdas = {16, 32, 64, 128, 256, 512, 1024};
};

struct DerivativeFit {
  std::array<int, kMaxDim> alpha{0, 0, 0};  // x multi-index
  std::array<int, kMaxDim> beta{0, 0, 0};   // xi multi-index
  std::vector<double> sup_per_annulus;
  double fitted_exponent = 0.0;
  double bound_exponent = 0.0;  // m - |beta|
  bool ok = false;
};

struct OrderCheckConfig {
  int max_deriv = 2;
  std::vector<double> annuli = {16, 32, 64, 128, 256, 512, 1024};
  double slack = 0.2;
  int n_x = 4;
  int n_dir = 12;
  int n_radial = 2;
  uint64_t seed = 12345;
  std::optional<BoxRegion> x_box;  // defaults to the symbol's support or torus
  // focus the direction net for narrowly supported symbols
  std::optional<Vec> dir_center;
  double dir_spread = 0.2;
};

struct OrderReport {
  std::vector<DerivativeFit> fits;
  double slack = 0.2;
  bool all_ok = false;
};

/// Fits growth exponents of sampled derivative sups over dyadic annuli and
/// compares with the S^m bound m - |beta| + slack.
OrderReport check_symbol_order(const Symbol& a, const OrderCheckConfig& cfg);

/// Empirical essential-support exclusion: true iff |a| * lambda^N has a
/// non-increasing tail over dyadic lambda near p, for every tested N.
bool esssupp_excludes(const Symbol& a, const PhaseDirection& p,
                      const std::vector<int>& decay_orders = {1, 2, 4},
                      const NeighborhoodSpec& nb = {});

/// Empirical ellipticity: |a| >= eps * <lambda>^m on a sampled neighborhood
/// of p for all sampled lambda >= C.
bool is_elliptic_at(const Symbol& a, const PhaseDirection& p, double C,
                    double eps, const NeighborhoodSpec& nb = {});

}  // namespace microloc
