#pragma once

#include <string>
#include <vector>

#include "microloc/quantize.hpp"
#include "microloc/rng.hpp"

namespace microloc {

/// Band-localized random probe fields for operator-norm estimation.
struct BandProbeConfig {
  std::vector<double> bands = {8, 16, 32, 64};  // annulus [lam, 2*lam)
  int probes_per_band = 16;
  uint64_t seed = 99;
  double alias_cap = 0.5;  // probes boxed to |k_j| <= alias_cap * Nyquist
};

/// Unit-L2 field with spectrum of unit random phases on the annulus
/// [lam_lo, lam_hi) intersected with the alias cap.
Field random_band_probe(const GridSpec& grid, double lam_lo, double lam_hi,
                        Rng rng, double alias_cap = 0.5);

struct ResidualReport {
  std::string experiment;
  std::vector<double> band_lambdas;
  std::vector<double> residual_norms;  // max probe norm per band
  double fitted_exponent = 0.0;
  double target_exponent = 0.0;
  double slack = 0.3;
  bool verdict = false;
  bool used_fd_gradients = false;
  uint64_t seed = 0;
  int probes_per_band = 0;
};

/// a1 a2 + (1/i) d_xi a1 . d_x a2, staying separable (with analytic factor
/// derivatives) whenever both inputs allow it.
Symbol composition_combined_symbol(const Symbol& a1, const Symbol& a2,
                                   bool include_first_order, bool* used_fd);

/// (1/i) H_{a1}(a2) = (1/i) (d_xi a1 . d_x a2 - d_x a1 . d_xi a2).
Symbol hamilton_bracket_symbol(const Symbol& a1, const Symbol& a2,
                               bool* used_fd);

/// Measures A1 A2 - Op(a1 a2 + (1/i) d_xi a1 . d_x a2) on banded probes;
/// target decay exponent m1 + m2 - 2 (or m1 + m2 - 1 without the first-order
/// correction).
ResidualReport composition_residual(const Symbol& a1, const Symbol& a2,
                                    const GridSpec& grid,
                                    const BandProbeConfig& cfg,
                                    double slack = 0.3,
                                    bool include_first_order = true);

/// Measures A* - Op(conj a); target exponent m - 1.
ResidualReport adjoint_residual(const Symbol& a, const GridSpec& grid,
                                const BandProbeConfig& cfg, double slack = 0.3);

/// Measures [A1, A2] - Op((1/i) H_{a1}(a2)); target exponent m1 + m2 - 2.
ResidualReport commutator_principal_check(const Symbol& a1, const Symbol& a2,
                                          const GridSpec& grid,
                                          const BandProbeConfig& cfg,
                                          double slack = 0.3);

// ---- constant-fitting experiments --------------------------------------------

struct EstimateConfig {
  std::vector<int> resolutions = {64, 128, 256};
  int n_fields = 8;
  uint64_t seed = 7;
  double stability_factor = 2.0;
  double trivial_floor = 1e-3;   // fitted constants below this count as zero
  double hypothesis_eps = 0.01;  // ellipticity level for hypothesis nets
  double ellip_C = 16.0;
};

struct ConstantRow {
  std::string field;
  int resolution = 0;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

struct ConstantReport {
  std::string experiment;
  std::vector<ConstantRow> rows;
  std::vector<int> resolutions;
  std::vector<double> per_resolution;  // sup ratio (or fitted C) per resolution
  double sup = 0.0;
  double stability = 0.0;  // max/min across resolutions
  bool stable = false;
  bool hypothesis_ok = false;
};

/// ||A u||_{H^k} <= C (||A' u||_{H^{k+m-m'}} + ||u||_{H^{-N}}) on a sampled
/// corpus; refuses when esssupp(a) is not covered by ellip(a').
ConstantReport elliptic_estimate_experiment(const Symbol& a,
                                            const Symbol& a_prime, double k,
                                            double N,
                                            const EstimateConfig& cfg);

/// Fits the smallest C with Re<Au,u> >= -C ||u||^2_{H^{(m-1)/2}}; with b_loc
/// provided, uses the microlocalized right side
/// C ||B u||^2_{H^{(m-1)/2}} + C ||u||^2_{H^{-N}}.
ConstantReport garding_experiment(const Symbol& a, const Symbol* b_loc,
                                  double N, const EstimateConfig& cfg);

/// g = (1 - chi_C) psi a / a' of order m - m'; throws when a' drops below
/// threshold inside the claimed ellipticity region.
Symbol parametrix_factor(const Symbol& a, const Symbol& a_prime, double C,
                         const Symbol& psi, const Symbol& chi_C);

}  // namespace microloc
