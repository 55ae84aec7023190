#include "microloc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "microloc/errors.hpp"
#include "microloc/smooth.hpp"

namespace microloc {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {
}  // namespace

Json to_json(const ResidualReport& r) {
  Json j;
  j["experiment"] = r.experiment;
  j["bands"] = r.band_lambdas;
  j["residual_norms"] = r.residual_norms;
  j["fitted_exponent"] = r.fitted_exponent;
  j["target_exponent"] = r.target_exponent;
  j["slack"] = r.slack;
  j["verdict"] = r.verdict;
  j["used_fd_gradients"] = r.used_fd_gradients;
  j["seed"] = r.seed;
  j["probes_per_band"] = r.probes_per_band;
  return j;
}

Json to_json(const ConstantReport& r) {
  Json j;
  j["experiment"] = r.experiment;
  j["resolutions"] = r.resolutions;
  j["per_resolution"] = r.per_resolution;
  j["sup"] = r.sup;
  j["stability"] = r.stability;
  j["stable"] = r.stable;
  j["hypothesis_ok"] = r.hypothesis_ok;
  return j;
}

Json to_json(const ControlCertificate& c) {
  Json j;
  j["verdict"] = c.verdict;
  j["checked"] = c.checked;
  j["excluded"] = c.excluded;
  j["ray_witness"] = c.ray_witness;
  j["char_complement"] = c.char_complement;
  j["failed"] = c.failed;
  return j;
}

Json to_json(const SignReport& r) {
  Json j;
  j["samples"] = r.n;
  j["negatives"] = r.negatives;
  j["negatives_outside_paper_interval"] = r.negatives_outside_paper_K;
  j["neg_t_min"] = r.negatives ? r.neg_t_min : 0.0;
  j["neg_t_max"] = r.negatives ? r.neg_t_max : 0.0;
  j["t_star_analytic"] = r.t_star;
  j["gamma_min_for_paper_interval"] = r.gamma_min_for_paper_interval;
  j["paper_containment"] = r.paper_containment;
  j["region_matches_prediction"] = r.region_matches_prediction;
  j["exceptional_region_elliptic_for_e"] = r.exceptional_region_elliptic_for_e;
  j["C_min"] = r.C_min;
  j["C_finite"] = r.C_finite;
  j["verdict"] = r.verdict;
  return j;
}

Json to_json(const EstimateReport& r) {
  Json j;
  j["experiment"] = r.experiment;
  j["band_limits"] = r.band_limits;
  j["per_band_sup"] = r.per_band_sup;
  j["sup_ratio"] = r.sup_ratio;
  j["stability"] = r.stability;
  j["stable"] = r.stable;
  j["growth_exponent"] = r.growth_exponent;
  j["control_verdict"] = r.control_verdict;
  return j;
}

Json to_json(const LadderReport& r) {
  Json j;
  Json rungs = Json::array();
  for (const auto& rung : r.rungs) {
    Json x;
    x["m"] = rung.m;
    x["sup_ratio"] = rung.sup_ratio;
    x["stability"] = rung.stability;
    x["stable"] = rung.stable;
    x["control_b_e_g1"] = rung.control_b_e_g1;
    x["control_shifted"] = rung.control_shifted;
    rungs.push_back(x);
  }
  j["rungs"] = rungs;
  j["m_absorption"] = r.m_absorption;
  j["absorption_sup"] = r.absorption_sup;
  j["absorption_stability"] = r.absorption_stability;
  j["absorption_stable"] = r.absorption_stable;
  j["max_rung_growth"] = r.max_rung_growth;
  j["ok"] = r.ok;
  return j;
}

Json to_json(const IdentityReport& r) {
  Json j;
  j["im_pairing"] = r.im_pairing;
  j["bracket_form"] = {r.bracket_form.real(), r.bracket_form.imag()};
  j["commutator_form"] = {r.commutator_form.real(), r.commutator_form.imag()};
  j["scale"] = r.scale;
  j["max_rel"] = r.max_rel;
  return j;
}

Json to_json(const CommutatorBoundReport& r) {
  Json j;
  j["cauchy_schwarz_violation"] = r.cauchy_schwarz_violation;
  j["band_limits"] = r.band_limits;
  j["fitted_C"] = r.fitted_C;
  j["C"] = r.C;
  j["stability"] = r.stability;
  j["stable"] = r.stable;
  j["combined_ok"] = r.combined_ok;
  j["lemma_constant"] = r.lemma_constant;
  j["lemma_ok"] = r.lemma_ok;
  return j;
}

Json to_json(const RegReport& r) {
  Json j;
  j["commutation_residual"] = r.commutation_residual;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json x;
    x["eps"] = row.eps;
    x["ratio"] = row.ratio;
    x["twisted_b_norm"] = row.twisted_b_norm;
    x["control_ok"] = row.control_ok;
    rows.push_back(x);
  }
  j["rows"] = rows;
  j["monotone_ok"] = r.monotone_ok;
  j["uniform_factor"] = r.uniform_factor;
  j["uniform_ok"] = r.uniform_ok;
  j["control_all"] = r.control_all;
  return j;
}

Json to_json(const SobolevEstimate& e) {
  Json j;
  j["x"] = std::vector<double>(e.point.x.a.begin(),
                               e.point.x.a.begin() + e.point.x.n);
  j["dir"] = std::vector<double>(e.point.xi_hat.a.begin(),
                                 e.point.xi_hat.a.begin() + e.point.xi_hat.n);
  j["sentinel"] = e.sentinel;
  j["s_est"] = e.s_est;
  j["raw_slope"] = e.raw_slope;
  j["ok"] = e.ok;
  if (!e.error.empty()) j["error"] = e.error;
  return j;
}

Json to_json(const CalibrationTable& t) {
  Json j;
  j["alpha"] = t.alpha;
  j["beta"] = t.beta;
  j["max_residual"] = t.max_residual;
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json x;
    x["s_label"] = r.s_label;
    x["mean_slope"] = r.mean_slope;
    x["fitted_s"] = r.fitted_s;
    rows.push_back(x);
  }
  j["rows"] = rows;
  return j;
}

Json to_json(const OrderReport& r) {
  Json j;
  j["slack"] = r.slack;
  j["all_ok"] = r.all_ok;
  Json fits = Json::array();
  for (const auto& f : r.fits) {
    Json x;
    x["alpha"] = std::vector<int>(f.alpha.begin(), f.alpha.end());
    x["beta"] = std::vector<int>(f.beta.begin(), f.beta.end());
    x["fitted_exponent"] = f.fitted_exponent;
    x["bound_exponent"] = f.bound_exponent;
    x["ok"] = f.ok;
    fits.push_back(x);
  }
  j["fits"] = fits;
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::string csv_of(const ResidualReport& r) {
  std::string s = "experiment,lambda,residual_norm\n";
  for (std::size_t i = 0; i < r.band_lambdas.size(); ++i)
    s += r.experiment + "," + fmt(r.band_lambdas[i]) + "," +
         fmt(r.residual_norms[i]) + "\n";
  return s;
}

std::string csv_of(const ConstantReport& r) {
  std::string s = "experiment,field,resolution,numerator,denominator,ratio\n";
  for (const auto& row : r.rows)
    s += r.experiment + "," + row.field + "," + std::to_string(row.resolution) +
         "," + fmt(row.numerator) + "," + fmt(row.denominator) + "," +
         fmt(row.ratio) + "\n";
  return s;
}

std::string csv_of(const ControlCertificate& c) {
  std::string s = "x0,x1,dir0,dir1,kind,witness_t,orientation\n";
  for (const auto& smp : c.samples) {
    const char* kind = "?";
    switch (smp.kind) {
      case ControlSample::Kind::Excluded: kind = "excluded"; break;
      case ControlSample::Kind::RayWitness: kind = "ray"; break;
      case ControlSample::Kind::CharComplement: kind = "char-complement"; break;
      case ControlSample::Kind::Failed: kind = "failed"; break;
    }
    s += fmt(smp.p.x[0]) + "," + fmt(smp.p.x.n > 1 ? smp.p.x[1] : 0.0) + "," +
         fmt(smp.p.xi_hat[0]) + "," +
         fmt(smp.p.xi_hat.n > 1 ? smp.p.xi_hat[1] : 0.0) + "," + kind + "," +
         fmt(smp.witness_t) + "," + std::to_string(smp.orientation) + "\n";
  }
  return s;
}

std::string csv_of(const EstimateReport& r) {
  std::string s =
      "experiment,solution,band_limit,resolution,numerator,term_lambda_g,"
      "term_e,term_gp,term_low,ratio\n";
  for (const auto& row : r.rows)
    s += r.experiment + "," + row.solution + "," +
         std::to_string(row.band_limit) + "," +
         std::to_string(row.resolution) + "," + fmt(row.numerator) + "," +
         fmt(row.term_lambda_g) + "," + fmt(row.term_e) + "," +
         fmt(row.term_gp) + "," + fmt(row.term_low) + "," + fmt(row.ratio) +
         "\n";
  return s;
}

std::string csv_of(const LadderReport& r) {
  std::string s = "m,sup_ratio,stability,stable,control_b_e_g1,control_shifted\n";
  for (const auto& rung : r.rungs)
    s += std::to_string(rung.m) + "," + fmt(rung.sup_ratio) + "," +
         fmt(rung.stability) + "," + (rung.stable ? "1" : "0") + "," +
         (rung.control_b_e_g1 ? "1" : "0") + "," +
         (rung.control_shifted ? "1" : "0") + "\n";
  s += "absorption," + fmt(r.absorption_sup) + "," +
       fmt(r.absorption_stability) + "," + (r.absorption_stable ? "1" : "0") +
       ",," + "\n";
  return s;
}

std::string csv_of(const RegReport& r) {
  std::string s = "eps,ratio,twisted_b_norm,control_ok\n";
  for (const auto& row : r.rows)
    s += fmt(row.eps) + "," + fmt(row.ratio) + "," + fmt(row.twisted_b_norm) +
         "," + (row.control_ok ? "1" : "0") + "\n";
  return s;
}

std::string scan_csv(const std::vector<SobolevEstimate>& scan) {
  std::string s = "x0,x1,dir0,dir1,s_est,sentinel,raw_slope,ok\n";
  for (const auto& e : scan) {
    s += fmt(e.point.x[0]) + "," + fmt(e.point.x.n > 1 ? e.point.x[1] : 0.0) +
         "," + fmt(e.point.xi_hat[0]) + "," +
         fmt(e.point.xi_hat.n > 1 ? e.point.xi_hat[1] : 0.0) + ",";
    s += e.sentinel ? "inf" : fmt(e.s_est);
    s += std::string(",") + (e.sentinel ? "1" : "0") + "," + fmt(e.raw_slope) +
         "," + (e.ok ? "1" : "0") + "\n";
  }
  return s;
}

std::string sign_samples_csv(const EscapeBundle& bundle, double gamma,
                             const SignSampleSpec& sspec) {
  // regenerate the deterministic sample stream and dump every row
  const EscapeSpec& es = bundle.spec;
  const int d = es.target.x.n;
  Rng rng(sspec.seed);
  double th0 = std::atan2(es.target.xi_hat[1], es.target.xi_hat[0]);
  std::string s = "t,z0,z1,theta,lambda,value,in_paper_K\n";
  for (long i = 0; i < sspec.n; ++i) {
    Rng r = rng.split(uint64_t(i));
    Vec z(d);
    for (int j = 0; j < d; ++j) {
      double pad = 0.3;
      z[j] = r.uniform(bundle.z_support.lo[j] - pad,
                       bundle.z_support.hi[j] + pad);
    }
    double lam =
        std::exp(r.uniform(std::log(sspec.lam_min), std::log(sspec.lam_max)));
    Vec zeta(d);
    double th = 0.0;
    if (d == 2) {
      if (r.uniform() < sspec.inside_fraction)
        th = th0 + r.uniform(-1.1, 1.1) * es.ang_halfwidth;
      else
        th = r.uniform(0.0, kTwoPi);
      zeta[0] = lam * std::cos(th);
      zeta[1] = lam * std::sin(th);
    } else {
      double zc = r.uniform(-1.0, 1.0);
      double az = r.uniform(0.0, kTwoPi);
      double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      Vec rnd{rr * std::cos(az), rr * std::sin(az), zc};
      double w = r.uniform() < sspec.inside_fraction
                     ? r.uniform(0.0, 1.2 * es.ang_halfwidth)
                     : r.uniform(0.0, 1.0);
      Vec dirv = es.target.xi_hat * (1.0 - w) + rnd * w;
      dirv = dirv * (1.0 / dirv.norm());
      zeta = dirv * lam;
      th = std::atan2(dirv[1], dirv[0]);
    }
    double t = bundle.t_of(z, zeta);
    double phi = escape_phi(t, es);
    double dphi = escape_phi_deriv(t, es);
    double chi = bundle.chi_of(z, zeta);
    double lc = ramp_up(zeta.norm(), es.lowcut_on, es.lowcut_full);
    double br2 = 1.0 + zeta.norm2();
    double value = -(2.0 * dphi + gamma * phi) * phi * chi * chi * lc * lc *
                   std::pow(br2, es.k);
    bool in_k = (t >= -es.t0 - es.delta && t <= -es.t0) && chi > 0.0;
    double tq = std::isfinite(t) ? t : 1e9;
    s += fmt(tq) + "," + fmt(z[0]) + "," + fmt(z[1]) + "," + fmt(th) + "," +
         fmt(lam) + "," + fmt(value) + "," + (in_k ? "1" : "0") + "\n";
  }
  return s;
}

std::string witness_csv(const std::vector<std::array<double, 5>>& rows) {
  std::string s = "t,x0,x1,x2,in_ellip_g\n";
  for (const auto& r : rows)
    s += fmt(r[0]) + "," + fmt(r[1]) + "," + fmt(r[2]) + "," + fmt(r[3]) +
         "," + fmt(r[4]) + "\n";
  return s;
}

uint64_t fnv64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace microloc
