#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "microloc/symbols.hpp"

namespace microloc {

/// Parameters of the explicit escape-function construction. The target is a
/// characteristic phase point; chi_1 is a plateau bump in the transported
/// transverse coordinates y and in direction, identically 1 near the target.
struct EscapeSpec {
  PhaseDirection target;
  double t0 = 1.0;
  double delta = 0.25;
  double gamma = 1.0;
  double k = 0.0;  // order parameter: a lands in S^{k - 1/2}
  double y_halfwidth = 0.5, y_plateau = 0.5;
  double ang_halfwidth = 0.15, ang_plateau = 0.4;
  double lowcut_on = 1.0, lowcut_full = 2.0;
  double zhat0_guard = 1e-6;
  double period = kTwoPi;
  double char_tol = 1e-9;
};

/// phi(t) = exp(-gamma t + (t-delta)^{-1} - (t+t0+delta)^{-1}) on
/// (-t0-delta, delta), 0 otherwise.
double escape_phi(double t, const EscapeSpec& spec);
double escape_phi_deriv(double t, const EscapeSpec& spec);

/// Root t* of gamma + 2(t-delta)^{-2} - 2(t+t0+delta)^{-2} = 0; the
/// expression 2 phi' + gamma phi is positive exactly on (-t0-delta, t*).
double escape_negativity_boundary(const EscapeSpec& spec);

struct EscapeBundle {
  EscapeSpec spec;
  Symbol a;                  // in S^{k - 1/2}
  double t_star = 0.0;       // analytic positivity boundary of 2phi'+gamma*phi
  double t_K = 0.0;          // K = { -t0-delta <= t <= t_K } cap supp chi
  bool paper_interval = false;  // t_star <= -t0, i.e. K matches [-t0-d,-t0]
  BoxRegion z_support;

  // transport-invariant pieces of a = phi(t) * theta(z, zeta):
  double t_of(const Vec& z, const Vec& zeta) const;  // (z0-x0)/zhat0
  double chi_of(const Vec& z, const Vec& zeta) const;   // chi = chi1^2 in [0,1]
  double invariant_weight(const Vec& z, const Vec& zeta) const;
  // theta = chi * lowcut * <zeta>^{k-1/2}
};

/// Builds the bundle; when g/e are supplied, the ray-pad conditions (flowed
/// neighborhoods elliptic for g on (-t0-delta, delta) and for e on
/// (-t0-delta, t0+delta)) are sampled and must pass.
EscapeBundle build_escape(const EscapeSpec& spec, const Symbol* g = nullptr,
                          const Symbol* e = nullptr);

/// Closed-form symbol of a H_P(a) = 2 (zeta_0/zhat_0) phi' phi chi^2
/// lowcut^2 <zeta>^{2k-1}; order 2k.
Symbol a_hamilton_a(const EscapeBundle& bundle);

/// Cross-validates the closed form against finite differences of H_P(a^2)/2
/// at `samples` random phase-space points; returns the max relative error
/// over points where the value is resolvable.
double a_hamilton_a_fd_error(const EscapeBundle& bundle, int samples,
                             uint64_t seed);

struct SignSampleSpec {
  long n = 100000;
  uint64_t seed = 2024;
  double lam_min = 2.0, lam_max = 1024.0;
  double inside_fraction = 0.7;  // fraction of directions drawn near supp chi
};

struct SignSample {
  Vec z;
  Vec zeta;
  double t;
  double value;   // principal expression -(2phi'+gamma phi) phi chi^2 w^2 <z>^{2k}
  bool in_paper_K;
};

struct SignReport {
  long n = 0;
  long negatives = 0;
  long negatives_outside_paper_K = 0;
  double neg_t_min = 0.0, neg_t_max = 0.0;  // measured t-range of negatives
  double t_star = 0.0;                      // analytic boundary
  double gamma_min_for_paper_interval = 0.0;
  bool paper_containment = false;  // negatives confined to [-t0-d, -t0]
  bool region_matches_prediction = false;  // negativity <=> 2phi'+gamma*phi>0
  bool exceptional_region_elliptic_for_e = false;
  double C_min = 0.0;  // minimal C with C e^2 - aH_P(a) - gamma <z> a^2 >= 0
  bool C_finite = false;
  bool verdict = false;  // paper_containment && exceptional ellipticity
  std::vector<SignSample> offenders;  // negatives outside the paper interval
};

SignReport verify_sign_condition(const EscapeBundle& bundle, const Symbol& e,
                                 double gamma, const SignSampleSpec& spec);

/// Smooth psi with psi = 0 near K and psi = 1 near the complement of the
/// e-elliptic pad; realized as 1 - (t-profile)*(widened direction cutoff).
Symbol make_sos_psi(const EscapeBundle& bundle, double margin = 0.08);

/// Footnote sum-of-squares factors for
/// C e^2 - a H_P(a) - gamma <zeta> a^2 = a1^2 + a2^2.
std::pair<Symbol, Symbol> sos_decomposition(const EscapeBundle& bundle,
                                            const Symbol& e, const Symbol& psi,
                                            double C, double gamma);

}  // namespace microloc
