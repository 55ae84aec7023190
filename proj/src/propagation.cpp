#include "microloc/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "microloc/calculus.hpp"
#include "microloc/errors.hpp"
#include "microloc/rng.hpp"

namespace microloc {

void TripleSpec::validate_orders() const {
  if (std::abs(b.order() - k) > 1e-12 || std::abs(e.order() - k) > 1e-12 ||
      std::abs(g.order() - (k - 1.0)) > 1e-12)
    throw ConfigError(
        "triple orders must follow the pattern b in S^k, e in S^k, "
        "g in S^{k-1}");
}

namespace {

double loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (ys[i] > 1e-280) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  if (lx.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

void finalize_estimate(EstimateReport* rep, double stability_factor) {
  rep->sup_ratio = 0.0;
  for (double v : rep->per_band_sup) rep->sup_ratio = std::max(rep->sup_ratio, v);
  double lo = 1e300, hi = 0.0;
  for (double v : rep->per_band_sup) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  rep->stability = (lo > 0.0) ? hi / lo : 1e300;
  rep->stable = rep->stability <= stability_factor;
  std::vector<double> bl(rep->band_limits.begin(), rep->band_limits.end());
  rep->growth_exponent = loglog_fit(bl, rep->per_band_sup);
}

EstimateReport run_estimate_impl(const TripleSpec& triple,
                                 const std::vector<SolutionFamily>& sols,
                                 const PropagationOptions& opts,
                                 bool lemma_form) {
  triple.validate_orders();
  ControlCertificate cert = check_control(triple.b, triple.e, triple.g,
                                          triple.net);
  if (!cert.verdict && !opts.allow_failed_control)
    throw HypothesisError(
        "propagation estimate: control certificate failed (" +
        std::to_string(cert.failed) + " uncovered samples); the hypothesis "
        "'b controlled by e through g' does not hold on the net");

  EstimateReport rep;
  rep.experiment = lemma_form ? "lemma-estimate" : "theorem-estimate";
  rep.control_verdict = cert.verdict;

  for (int bl : opts.band_limits) {
    int n = opts.grid_factor * bl;
    GridSpec grid = GridSpec::make(triple.b.dim(), n);
    Operator B = quantize(triple.b, grid);
    Operator E = quantize(triple.e, grid);
    Operator G = quantize(triple.g, grid);
    Operator L1k;
    if (lemma_form) L1k = lambda_operator(1.0 - triple.k, grid);

    double sup = 0.0;
    for (const auto& fam : sols) {
      SolutionFamily f = fam;
      if (f.band_limit <= 0) f.band_limit = bl;
      Field u = f.realize(grid);
      RatioRow row;
      row.solution = f.name();
      row.band_limit = bl;
      row.resolution = n;
      row.numerator = l2_norm(B.apply(u));
      row.term_e = l2_norm(E.apply(u));
      Field pu = apply_dalembertian(u);
      row.term_gp = l2_norm(G.apply(pu));
      row.term_low = sobolev_norm(u, -triple.N);
      double den = row.term_e + row.term_gp + row.term_low;
      if (lemma_form) {
        Field gu = G.apply(u);
        row.term_lambda_g = sobolev_norm(L1k.apply(gu), triple.k - 0.5);
        den += row.term_lambda_g;
      }
      row.ratio = row.numerator / den;
      sup = std::max(sup, row.ratio);
      rep.rows.push_back(std::move(row));
    }
    rep.band_limits.push_back(bl);
    rep.per_band_sup.push_back(sup);
  }
  finalize_estimate(&rep, opts.stability_factor);
  return rep;
}

}  // namespace

EstimateReport run_theorem_estimate(const TripleSpec& triple,
                                    const std::vector<SolutionFamily>& sols,
                                    const PropagationOptions& opts) {
  return run_estimate_impl(triple, sols, opts, false);
}

EstimateReport run_lemma_estimate(const TripleSpec& triple,
                                  const std::vector<SolutionFamily>& sols,
                                  const PropagationOptions& opts) {
  return run_estimate_impl(triple, sols, opts, true);
}

LadderReport run_order_ladder(const TripleSpec& triple, const Symbol& g1,
                              const ControlNet& g1_net,
                              const std::vector<SolutionFamily>& sols,
                              int m_max, const PropagationOptions& opts) {
  triple.validate_orders();
  const int d = triple.b.dim();
  LadderReport rep;
  rep.m_absorption = int(std::lround(2.0 * triple.N + 2.0 * triple.k));

  std::vector<double> prev_sup;
  for (int m = 1; m <= m_max; ++m) {
    LadderRung rung;
    rung.m = m;

    // control condition 1: b controlled by e through g1
    ControlCertificate c1 = check_control(triple.b, triple.e, g1, triple.net);
    rung.control_b_e_g1 = c1.verdict;
    // control condition 2: <z>^{1-m/2} g1 controlled by <z>^{-m/2} e
    // through <z>^{-m/2} g
    double shift = -0.5 * m;
    Symbol lhs = symbol_product(make_bracket_symbol(d, 1.0 + shift), g1);
    Symbol mid = symbol_product(make_bracket_symbol(d, shift), triple.e);
    Symbol rhs = symbol_product(make_bracket_symbol(d, shift), triple.g);
    ControlCertificate c2 = check_control(lhs, mid, rhs, g1_net);
    rung.control_shifted = c2.verdict;
    if ((!c1.verdict || !c2.verdict) && !opts.allow_failed_control)
      throw HypothesisError("order ladder: shrunken-symbol control failed at m=" +
                            std::to_string(m));

    std::vector<double> per_band;
    for (int bl : opts.band_limits) {
      int n = opts.grid_factor * bl;
      GridSpec grid = GridSpec::make(d, n);
      Operator B = quantize(triple.b, grid);
      Operator E = quantize(triple.e, grid);
      Operator G = quantize(triple.g, grid);
      Operator L1k = lambda_operator(1.0 - triple.k, grid);
      double sup = 0.0;
      for (const auto& fam : sols) {
        SolutionFamily f = fam;
        if (f.band_limit <= 0) f.band_limit = bl;
        Field u = f.realize(grid);
        double num = l2_norm(B.apply(u));
        Field gu = G.apply(u);
        double t0 = sobolev_norm(L1k.apply(gu), triple.k - 0.5 * m);
        double t1 = l2_norm(E.apply(u));
        double t2 = l2_norm(G.apply(apply_dalembertian(u)));
        double t3 = sobolev_norm(u, -triple.N);
        sup = std::max(sup, num / (t0 + t1 + t2 + t3));
      }
      per_band.push_back(sup);
    }
    rung.sup_ratio = *std::max_element(per_band.begin(), per_band.end());
    double lo = *std::min_element(per_band.begin(), per_band.end());
    rung.stability = lo > 0 ? rung.sup_ratio / lo : 1e300;
    rung.stable = rung.stability <= opts.stability_factor;
    if (!prev_sup.empty())
      rep.max_rung_growth = std::max(
          rep.max_rung_growth, rung.sup_ratio / prev_sup.back());
    prev_sup.push_back(rung.sup_ratio);
    rep.rungs.push_back(std::move(rung));
  }

  // absorption: for m >= 2N + 2k the ladder term is dominated by the
  // H^{-N} floor
  {
    int m = rep.m_absorption;
    std::vector<double> per_band;
    for (int bl : opts.band_limits) {
      int n = opts.grid_factor * bl;
      GridSpec grid = GridSpec::make(d, n);
      Operator G = quantize(triple.g, grid);
      Operator L1k = lambda_operator(1.0 - triple.k, grid);
      double sup = 0.0;
      for (const auto& fam : sols) {
        SolutionFamily f = fam;
        if (f.band_limit <= 0) f.band_limit = bl;
        Field u = f.realize(grid);
        double num = sobolev_norm(L1k.apply(G.apply(u)), triple.k - 0.5 * m);
        double den = sobolev_norm(u, -triple.N);
        sup = std::max(sup, num / den);
      }
      per_band.push_back(sup);
    }
    rep.absorption_sup = *std::max_element(per_band.begin(), per_band.end());
    double lo = *std::min_element(per_band.begin(), per_band.end());
    rep.absorption_stability = lo > 0 ? rep.absorption_sup / lo : 1e300;
    rep.absorption_stable = rep.absorption_stability <= opts.stability_factor;
  }

  rep.ok = rep.absorption_stable;
  for (const auto& r : rep.rungs)
    rep.ok = rep.ok && r.stable && r.control_b_e_g1 && r.control_shifted;
  return rep;
}

IdentityReport pairing_identity_check(const Operator& A, const Field& u) {
  Field Au = A.apply(u);
  Field Pu = apply_dalembertian(u);
  Field APu = A.apply(Pu);
  Operator Astar = A.adjoint();
  Field AstarAu = Astar.apply(Au);
  Field PAstarAu = apply_dalembertian(AstarAu);
  Field AstarAPu = Astar.apply(APu);

  IdentityReport rep;
  rep.im_pairing = inner(Au, APu).imag();
  const Cplx half_inv_i(0.0, -0.5);  // 1/(2i)
  rep.bracket_form =
      half_inv_i * (inner(PAstarAu, u) - inner(AstarAPu, u));
  Field commutator = PAstarAu - AstarAPu;
  rep.commutator_form = half_inv_i * inner(commutator, u);

  rep.scale = sobolev_norm(Au, 0.5) * sobolev_norm(APu, -0.5) +
              std::abs(rep.im_pairing);
  if (rep.scale == 0.0) rep.scale = 1e-300;
  Cplx v1(rep.im_pairing, 0.0);
  double d12 = std::abs(v1 - rep.bracket_form);
  double d13 = std::abs(v1 - rep.commutator_form);
  double d23 = std::abs(rep.bracket_form - rep.commutator_form);
  rep.max_rel = std::max({d12, d13, d23}) / rep.scale;
  return rep;
}

CommutatorBoundReport commutator_bound_experiment(
    const EscapeBundle& bundle, const SignReport& sign, const Symbol& e,
    const Symbol& g, const std::vector<SolutionFamily>& sols,
    const PropagationOptions& opts, double eps, double gamma) {
  // the proof needs the sign analysis: negativity region confined to an
  // e-elliptic compact set and a finite C
  bool sufficient = sign.region_matches_prediction && sign.C_finite &&
                    sign.exceptional_region_elliptic_for_e;
  if (!sufficient)
    throw HypothesisError(
        "commutator bound: sign-condition analysis insufficient (negativity "
        "region not e-elliptic or C infinite)");

  CommutatorBoundReport rep;
  double k = bundle.spec.k;
  double N = 2.0;

  for (int bl : opts.band_limits) {
    int n = opts.grid_factor * bl;
    GridSpec grid = GridSpec::make(bundle.a.dim(), n);
    Operator A = quantize(bundle.a, grid);
    Operator E = quantize(e, grid);
    Operator G = quantize(g, grid);
    Operator Lhalf = lambda_operator(0.5, grid);
    Operator Lmhalf = lambda_operator(-0.5, grid);
    Operator L1k = lambda_operator(1.0 - k, grid);

    double fitted = 0.0;
    for (const auto& fam : sols) {
      SolutionFamily f = fam;
      if (f.band_limit <= 0) f.band_limit = bl;
      Field u = f.realize(grid);
      Field Au = A.apply(u);
      Field Pu = apply_dalembertian(u);
      Field APu = A.apply(Pu);
      double q = inner(Au, APu).imag();
      double nLA = l2_norm(Lhalf.apply(Au));
      double nLAP = l2_norm(Lmhalf.apply(APu));

      // (7): Im<Au,APu> >= -(1/4 eps)||L_{-1/2}APu||^2 - eps||L_{1/2}Au||^2
      double rhs7 = -(1.0 / (4.0 * eps)) * nLAP * nLAP - eps * nLA * nLA;
      double scale7 = nLAP * nLAP / (4.0 * eps) + eps * nLA * nLA + 1e-300;
      rep.cauchy_schwarz_violation = std::max(
          rep.cauchy_schwarz_violation, (rhs7 - q) / scale7);

      // (11): q <= C (||Eu||^2 + ||L_{1-k}Gu||^2_{H^{k-1/2}} + ||u||^2_{-N})
      //            - gamma ||L_{1/2}Au||^2
      double nE = l2_norm(E.apply(u));
      double nG = sobolev_norm(L1k.apply(G.apply(u)), k - 0.5);
      double nLow = sobolev_norm(u, -N);
      double rhs_terms = nE * nE + nG * nG + nLow * nLow;
      double c_needed = (q + gamma * nLA * nLA) / rhs_terms;
      fitted = std::max(fitted, c_needed);
    }
    rep.band_limits.push_back(bl);
    rep.fitted_C.push_back(std::max(fitted, 0.0));
  }
  rep.C = *std::max_element(rep.fitted_C.begin(), rep.fitted_C.end());
  double lo = *std::min_element(rep.fitted_C.begin(), rep.fitted_C.end());
  rep.stability = lo > 1e-12 ? rep.C / lo : (rep.C <= 1e-12 ? 1.0 : 1e300);
  rep.stable = rep.stability <= opts.stability_factor;

  // step 3 with eps = gamma/2, and the implied lemma-form bound with
  // B1 = Lambda_{1/2} A
  rep.combined_ok = true;
  rep.lemma_ok = true;
  double c3 = 0.0;  // ||L_{-1/2} A P u|| <= c3 (||GPu|| + ||u||_{-N})
  {
    int bl = opts.band_limits.back();
    int n = opts.grid_factor * bl;
    GridSpec grid = GridSpec::make(bundle.a.dim(), n);
    Operator A = quantize(bundle.a, grid);
    Operator E = quantize(e, grid);
    Operator G = quantize(g, grid);
    Operator Lhalf = lambda_operator(0.5, grid);
    Operator Lmhalf = lambda_operator(-0.5, grid);
    Operator L1k = lambda_operator(1.0 - k, grid);
    for (const auto& fam : sols) {
      SolutionFamily f = fam;
      if (f.band_limit <= 0) f.band_limit = bl;
      Field u = f.realize(grid);
      Field Au = A.apply(u);
      Field Pu = apply_dalembertian(u);
      Field APu = A.apply(Pu);
      double nLA = l2_norm(Lhalf.apply(Au));
      double nLAP = l2_norm(Lmhalf.apply(APu));
      double nE = l2_norm(E.apply(u));
      double nG = sobolev_norm(L1k.apply(G.apply(u)), k - 0.5);
      double nGP = l2_norm(G.apply(Pu));
      double nLow = sobolev_norm(u, -N);
      double sum3 = nE * nE + nG * nG + nLow * nLow;
      double lhs = 0.5 * gamma * nLA * nLA;
      double rhs = rep.C * sum3 + (0.5 / gamma) * nLAP * nLAP;
      if (lhs > rhs * (1.0 + 1e-9) + 1e-300) rep.combined_ok = false;
      if (nGP + nLow > 0.0)
        c3 = std::max(c3, nLAP / (nGP + nLow));
    }
    rep.lemma_constant =
        std::max(2.0 * rep.C / gamma, 2.0 * c3 * c3 / (gamma * gamma));
    for (const auto& fam : sols) {
      SolutionFamily f = fam;
      if (f.band_limit <= 0) f.band_limit = bl;
      Field u = f.realize(grid);
      Field Au = A.apply(u);
      double nLA = l2_norm(Lhalf.apply(Au));
      double nE = l2_norm(E.apply(u));
      double nG = sobolev_norm(L1k.apply(G.apply(u)), k - 0.5);
      double nGP = l2_norm(G.apply(apply_dalembertian(u)));
      double nLow = sobolev_norm(u, -N);
      double rhs = rep.lemma_constant *
                   (nG * nG + nE * nE + nGP * nGP + nLow * nLow);
      if (nLA * nLA > rhs * (1.0 + 1e-9) + 1e-300) rep.lemma_ok = false;
    }
  }
  return rep;
}

RegReport regularization_experiment(const TripleSpec& triple,
                                    const SolutionFamily& u_family,
                                    double r,
                                    const std::vector<double>& eps_list,
                                    int band_limit,
                                    const PropagationOptions& opts) {
  triple.validate_orders();
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw ConstructionError("regularization: eps list must decrease");

  RegReport rep;
  const int d = triple.b.dim();
  int n = opts.grid_factor * band_limit;
  GridSpec grid = GridSpec::make(d, n);
  Operator B = quantize(triple.b, grid);
  Operator E = quantize(triple.e, grid);
  Operator G = quantize(triple.g, grid);

  SolutionFamily f = u_family;
  if (f.band_limit <= 0) f.band_limit = band_limit;
  Field u = f.realize(grid);
  Field Pu = apply_dalembertian(u);
  Field Bu = B.apply(u);
  Field Eu = E.apply(u);
  Field GPu = G.apply(Pu);

  // commutation of Lambda_{eps,r} with P on random probes
  {
    Rng rng(opts.seed);
    Operator Lr = quantize(make_eps_bracket_symbol(d, 0.5, r), grid);
    for (int t = 0; t < 4; ++t) {
      Field v = random_band_probe(grid, 4.0 * (t + 1), 8.0 * (t + 1),
                                  rng.split(uint64_t(t)));
      Field lhs = Lr.apply(apply_dalembertian(v));
      Field rhs = apply_dalembertian(Lr.apply(v));
      double scale = l2_norm(lhs) + l2_norm(rhs) + 1e-300;
      rep.commutation_residual =
          std::max(rep.commutation_residual, l2_norm(lhs - rhs) / scale);
    }
  }

  double prev_b_norm = -1.0;
  rep.monotone_ok = true;
  rep.control_all = true;
  for (double eps : eps_list) {
    Operator Reg = lambda_reg(eps, r, grid);
    RegRow row;
    row.eps = eps;
    double num = l2_norm(Reg.apply(Bu));
    row.twisted_b_norm = num;
    double den = l2_norm(Reg.apply(Eu)) + l2_norm(Reg.apply(GPu)) +
                 sobolev_norm(Reg.apply(u), -triple.N);
    row.ratio = num / den;

    // conjugated-symbol control: <eps z>^{-r} s <eps z>^{r} for s = b, e, g
    Symbol wm = make_eps_bracket_symbol(d, eps, -r);
    Symbol wp = make_eps_bracket_symbol(d, eps, r);
    Symbol bc = symbol_product(symbol_product(wm, triple.b), wp)
                    .with_order(triple.k);
    Symbol ec = symbol_product(symbol_product(wm, triple.e), wp)
                    .with_order(triple.k);
    Symbol gc = symbol_product(symbol_product(wm, triple.g), wp)
                    .with_order(triple.k - 1.0);
    ControlCertificate cert = check_control(bc, ec, gc, triple.net);
    row.control_ok = cert.verdict;
    rep.control_all = rep.control_all && cert.verdict;

    if (prev_b_norm >= 0.0 && num < prev_b_norm * (1.0 - 1e-12))
      rep.monotone_ok = false;  // eps decreasing => norm must not decrease
    prev_b_norm = num;
    rep.rows.push_back(row);
  }

  double lo = 1e300, hi = 0.0;
  for (const auto& row : rep.rows) {
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
  }
  rep.uniform_factor = lo > 0 ? hi / lo : 1e300;
  rep.uniform_ok = rep.uniform_factor <= opts.stability_factor;
  return rep;
}

}  // namespace microloc
