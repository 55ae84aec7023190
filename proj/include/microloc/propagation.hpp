#pragma once

#include <string>
#include <vector>

#include "microloc/escape.hpp"
#include "microloc/hamilton.hpp"
#include "microloc/quantize.hpp"
#include "microloc/waves.hpp"

namespace microloc {

/// The triple of the propagation theorem: b, e in S^k, g in S^{k-1}, plus the
/// sampling net used to certify "b controlled by e through g".
struct TripleSpec {
  Symbol b, e, g;
  double k = 0.0;
  double N = 2.0;
  ControlNet net;
  std::string name = "triple";

  void validate_orders() const;
};

struct RatioRow {
  std::string solution;
  int band_limit = 0;
  int resolution = 0;
  double term_lambda_g = 0.0;  // lemma-form extra term (0 in theorem form)
  double term_e = 0.0;
  double term_gp = 0.0;
  double term_low = 0.0;
  double numerator = 0.0;
  double ratio = 0.0;
};

struct EstimateReport {
  std::string experiment;
  std::vector<RatioRow> rows;
  std::vector<int> band_limits;
  std::vector<double> per_band_sup;
  double sup_ratio = 0.0;
  double stability = 0.0;
  bool stable = false;
  double growth_exponent = 0.0;  // log-log fit of per-band sup vs band limit
  bool control_verdict = false;
};

struct PropagationOptions {
  std::vector<int> band_limits = {16, 32, 64, 128};
  int grid_factor = 4;  // grid N = grid_factor * band_limit
  double stability_factor = 2.0;
  bool allow_failed_control = false;  // necessity experiments opt in
  uint64_t seed = 1;
};

/// ||Bu|| <= C (||Eu|| + ||G P u|| + ||u||_{H^-N}); ratio protocol with the
/// unsquared four-term denominator (1-homogeneous in u).
EstimateReport run_theorem_estimate(const TripleSpec& triple,
                                    const std::vector<SolutionFamily>& sols,
                                    const PropagationOptions& opts);

/// Adds ||Lambda_{1-k} G u||_{H^{k-1/2}} to the denominator; u should come
/// from H^{k+1}-class families.
EstimateReport run_lemma_estimate(const TripleSpec& triple,
                                  const std::vector<SolutionFamily>& sols,
                                  const PropagationOptions& opts);

struct LadderRung {
  int m = 0;
  double sup_ratio = 0.0;
  double stability = 0.0;
  bool stable = false;
  bool control_b_e_g1 = false;
  bool control_shifted = false;
};

struct LadderReport {
  std::vector<LadderRung> rungs;
  int m_absorption = 0;
  double absorption_sup = 0.0;     // ||L_{1-k}Gu||_{H^{k-m/2}} / ||u||_{H^-N}
  double absorption_stability = 0.0;
  bool absorption_stable = false;
  double max_rung_growth = 0.0;    // max of C_{m+1}/C_m
  bool ok = false;
};

/// Inductive ladder m = 1..m_max with the shrunken symbol g1; verifies both
/// control conditions per rung and the final absorption at m = 2N + 2k.
LadderReport run_order_ladder(const TripleSpec& triple, const Symbol& g1,
                              const ControlNet& g1_net,
                              const std::vector<SolutionFamily>& sols,
                              int m_max, const PropagationOptions& opts);

struct IdentityReport {
  double im_pairing = 0.0;  // Im <Au, APu>
  Cplx bracket_form;        // (1/2i)(<PA*Au,u> - <A*APu,u>)
  Cplx commutator_form;     // <(1/2i)[P,A*A]u, u>
  double scale = 0.0;
  double max_rel = 0.0;
};

IdentityReport pairing_identity_check(const Operator& A, const Field& u);

struct CommutatorBoundReport {
  double cauchy_schwarz_violation = 0.0;  // normalized; ~0 when (7) holds
  std::vector<int> band_limits;
  std::vector<double> fitted_C;  // per resolution, inequality (11)
  double C = 0.0;
  double stability = 0.0;
  bool stable = false;
  bool combined_ok = false;   // step-3 inequality with eps = gamma/2
  double lemma_constant = 0.0;
  bool lemma_ok = false;      // implied lemma bound with B1 = Lambda_{1/2}A
};

CommutatorBoundReport commutator_bound_experiment(
    const EscapeBundle& bundle, const SignReport& sign, const Symbol& e,
    const Symbol& g, const std::vector<SolutionFamily>& sols,
    const PropagationOptions& opts, double eps, double gamma);

struct RegRow {
  double eps = 0.0;
  double ratio = 0.0;
  double twisted_b_norm = 0.0;
  bool control_ok = false;
};

struct RegReport {
  double commutation_residual = 0.0;  // ||[Lambda_{eps,r}, P]u|| / scale
  std::vector<RegRow> rows;
  bool monotone_ok = false;     // ||Lambda_{eps,-r} B u|| nondecreasing as eps->0
  double uniform_factor = 0.0;  // max/min of ratios over eps
  bool uniform_ok = false;
  bool control_all = false;
};

/// Conjugated-estimate sweep over the regularization family with r = N+k+1.
RegReport regularization_experiment(const TripleSpec& triple,
                                    const SolutionFamily& u_family,
                                    double r,
                                    const std::vector<double>& eps_list,
                                    int band_limit,
                                    const PropagationOptions& opts);

}  // namespace microloc
