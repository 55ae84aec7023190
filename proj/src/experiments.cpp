#include "microloc/experiments.hpp"

#include <cmath>
#include <filesystem>

#include "microloc/builtins.hpp"
#include "microloc/calculus.hpp"
#include "microloc/errors.hpp"
#include "microloc/propagation.hpp"
#include "microloc/report.hpp"
#include "microloc/wavefront.hpp"

namespace microloc {

namespace {

namespace fs = std::filesystem;

struct Context {
  GridSpec grid;
  SymbolTable table;
  uint64_t seed = 1;
  fs::path out;
  bool verbose = false;
  Json tolerances;

  double tol(const std::string& key, double fallback) const {
    return tolerances.contains(key) ? tolerances[key].get<double>() : fallback;
  }
};

Context make_context(const Json& config, const std::string& output_dir,
                     bool verbose) {
  const Json& g = config.at("grid");
  check_keys(g, "grid", {"dim", "n", "period"});
  int dim = int(get_num_or(g, "dim", 2));
  int n = int(get_num(g, "n", "grid"));
  double period = get_num_or(g, "period", kTwoPi);
  Context ctx{GridSpec::make(dim, n, period),
              config.contains("symbols")
                  ? SymbolTable(dim, period, config["symbols"])
                  : SymbolTable(dim, period),
              uint64_t(get_num_or(config, "seed", 1)),
              fs::path(output_dir),
              verbose,
              config.contains("tolerances") ? config["tolerances"]
                                            : Json::object()};
  fs::create_directories(ctx.out);
  return ctx;
}

TripleSpec parse_triple(const Json& config, const Context& ctx) {
  const Json& t = config.at("triple");
  check_keys(t, "triple", {"b", "e", "g", "k", "N"});
  TripleSpec triple;
  triple.b = ctx.table.resolve(t.at("b").get<std::string>());
  triple.e = ctx.table.resolve(t.at("e").get<std::string>());
  triple.g = ctx.table.resolve(t.at("g").get<std::string>());
  triple.k = get_num_or(t, "k", 0.0);
  triple.N = get_num_or(t, "N", 2.0);
  triple.net = parse_net(config.at("net"), "net", ctx.grid.dim, ctx.table);
  triple.validate_orders();
  return triple;
}

std::vector<SolutionFamily> parse_solutions(const Json& config) {
  std::vector<SolutionFamily> out;
  if (!config.contains("solutions") || !config["solutions"].is_array() ||
      config["solutions"].empty())
    throw ConfigError("solutions: need a non-empty array");
  for (std::size_t i = 0; i < config["solutions"].size(); ++i)
    out.push_back(parse_solution(config["solutions"][i],
                                 "solutions[" + std::to_string(i) + "]"));
  return out;
}

void write_summary(const Context& ctx, Json summary) {
  write_text((ctx.out / "summary.json").string(), summary.dump(2) + "\n");
}

// ---- experiment runners ------------------------------------------------------

bool run_check_calculus(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "pairs", "bands", "probes", "elliptic", "garding"});
  BandProbeConfig probe;
  if (config.contains("bands"))
    probe.bands = config["bands"].get<std::vector<double>>();
  probe.probes_per_band = int(get_num_or(config, "probes", 16));
  probe.seed = ctx.seed;
  double slack = ctx.tol("slack", 0.3);

  Json summary;
  summary["experiment"] = "check-calculus";
  Json items = Json::array();
  std::string csv;
  bool ok = true;

  if (config.contains("pairs")) {
    for (std::size_t i = 0; i < config["pairs"].size(); ++i) {
      const Json& p = config["pairs"][i];
      std::string where = "pairs[" + std::to_string(i) + "]";
      check_keys(p, where, {"op", "a1", "a2"});
      std::string op = p.at("op").get<std::string>();
      Symbol a1 = ctx.table.resolve(p.at("a1").get<std::string>());
      ResidualReport rep;
      if (op == "adjoint") {
        rep = adjoint_residual(a1, ctx.grid, probe, slack);
      } else {
        Symbol a2 = ctx.table.resolve(p.at("a2").get<std::string>());
        if (op == "composition")
          rep = composition_residual(a1, a2, ctx.grid, probe, slack, true);
        else if (op == "principal")
          rep = composition_residual(a1, a2, ctx.grid, probe, slack, false);
        else if (op == "commutator")
          rep = commutator_principal_check(a1, a2, ctx.grid, probe, slack);
        else
          throw ConfigError(where + ": unknown op '" + op + "'");
      }
      ok = ok && rep.verdict;
      items.push_back(to_json(rep));
      csv += csv_of(rep);
    }
  }
  if (config.contains("elliptic")) {
    const Json& el = config["elliptic"];
    check_keys(el, "elliptic",
               {"a", "a_prime", "k", "N", "resolutions", "n_fields"});
    EstimateConfig ecfg;
    if (el.contains("resolutions"))
      ecfg.resolutions = el["resolutions"].get<std::vector<int>>();
    ecfg.n_fields = int(get_num_or(el, "n_fields", 8));
    ecfg.seed = ctx.seed;
    ecfg.stability_factor = ctx.tol("stability_factor", 2.0);
    ConstantReport rep = elliptic_estimate_experiment(
        ctx.table.resolve(el.at("a").get<std::string>()),
        ctx.table.resolve(el.at("a_prime").get<std::string>()),
        get_num_or(el, "k", 0.0), get_num_or(el, "N", 2.0), ecfg);
    ok = ok && rep.stable;
    items.push_back(to_json(rep));
    csv += csv_of(rep);
  }
  if (config.contains("garding")) {
    const Json& ga = config["garding"];
    check_keys(ga, "garding", {"a", "b_loc", "N", "resolutions", "n_fields"});
    EstimateConfig ecfg;
    if (ga.contains("resolutions"))
      ecfg.resolutions = ga["resolutions"].get<std::vector<int>>();
    ecfg.n_fields = int(get_num_or(ga, "n_fields", 8));
    ecfg.seed = ctx.seed;
    ecfg.stability_factor = ctx.tol("stability_factor", 2.0);
    Symbol a = ctx.table.resolve(ga.at("a").get<std::string>());
    Symbol b;
    const Symbol* bp = nullptr;
    if (ga.contains("b_loc")) {
      b = ctx.table.resolve(ga["b_loc"].get<std::string>());
      bp = &b;
    }
    ConstantReport rep = garding_experiment(a, bp, get_num_or(ga, "N", 2.0),
                                            ecfg);
    ok = ok && rep.stable;
    items.push_back(to_json(rep));
    csv += csv_of(rep);
  }

  summary["items"] = items;
  summary["ok"] = ok;
  write_summary(ctx, summary);
  write_text((ctx.out / "residuals.csv").string(), csv);
  return ok;
}

bool run_trace_rays(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "triple", "net"});
  TripleSpec triple = parse_triple(config, ctx);
  ControlCertificate cert =
      check_control(triple.b, triple.e, triple.g, triple.net);
  Json summary;
  summary["experiment"] = "trace-rays";
  summary["certificate"] = to_json(cert);
  summary["ok"] = cert.verdict;
  write_summary(ctx, summary);
  write_text((ctx.out / "certificate.csv").string(), csv_of(cert));
  for (const auto& s : cert.samples) {
    if (s.kind == ControlSample::Kind::RayWitness) {
      write_text((ctx.out / "ray.csv").string(),
                 witness_csv(witness_ray_track(s, triple.g, triple.net)));
      break;
    }
  }
  return cert.verdict;
}

bool run_build_escape(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "escape", "e", "g", "gamma", "samples",
              "check_pads", "sos_margin"});
  EscapeSpec spec = ctx.table.escape_spec(config.at("escape").get<std::string>());
  Symbol e = ctx.table.resolve(config.at("e").get<std::string>());
  Symbol g;
  const Symbol* gp = nullptr;
  if (config.contains("g")) {
    g = ctx.table.resolve(config["g"].get<std::string>());
    gp = &g;
  }
  bool pads = config.value("check_pads", true);
  EscapeBundle bundle =
      pads ? build_escape(spec, gp, &e) : build_escape(spec);

  double gamma = get_num_or(config, "gamma", spec.gamma);
  SignSampleSpec sspec;
  sspec.n = long(get_num_or(config, "samples", 100000));
  sspec.seed = ctx.seed;
  SignReport sign = verify_sign_condition(bundle, e, gamma, sspec);

  OrderCheckConfig ocfg;
  ocfg.seed = ctx.seed;
  OrderReport order = check_symbol_order(bundle.a, ocfg);

  // footnote sum-of-squares at C slightly above the sampled minimum
  double C = std::max(1.0, 1.05 * sign.C_min);
  Symbol psi = make_sos_psi(bundle, get_num_or(config, "sos_margin", 0.08));
  auto [a1, a2] = sos_decomposition(bundle, e, psi, C, gamma);
  double sos_err = 0.0;
  {
    Rng rng(ctx.seed + 17);
    Symbol aha = a_hamilton_a(bundle);
    for (int i = 0; i < 10000; ++i) {
      Rng r = rng.split(uint64_t(i));
      Vec z(ctx.grid.dim);
      for (int j = 0; j < ctx.grid.dim; ++j)
        z[j] = r.uniform(bundle.z_support.lo[j] - 0.2,
                         bundle.z_support.hi[j] + 0.2);
      double th0 = std::atan2(spec.target.xi_hat[1], spec.target.xi_hat[0]);
      double th = th0 + r.uniform(-1.3, 1.3) * spec.ang_halfwidth;
      double lam = std::exp(r.uniform(std::log(2.0), std::log(512.0)));
      Vec zeta(ctx.grid.dim);
      zeta[0] = lam * std::cos(th);
      zeta[1] = lam * std::sin(th);
      double ev = std::abs(e.eval(z, zeta));
      double lhs = std::norm(a1.eval(z, zeta)) + std::norm(a2.eval(z, zeta));
      double X = aha.eval(z, zeta).real();
      double br = std::sqrt(1.0 + zeta.norm2());
      double av = std::abs(bundle.a.eval(z, zeta));
      double rhs = C * ev * ev - X - gamma * br * av * av;
      double scale = std::abs(lhs) + std::abs(rhs) + C * ev * ev + 1e-300;
      sos_err = std::max(sos_err, std::abs(lhs - rhs) / scale);
    }
  }

  Json summary;
  summary["experiment"] = "build-escape";
  summary["t_star"] = bundle.t_star;
  summary["t_K"] = bundle.t_K;
  summary["paper_interval"] = bundle.paper_interval;
  summary["order_check"] = to_json(order);
  summary["sign"] = to_json(sign);
  summary["sos_identity_max_rel"] = sos_err;
  summary["sos_C"] = C;
  bool ok = order.all_ok && sign.verdict && sos_err <= 1e-8;
  summary["ok"] = ok;
  write_summary(ctx, summary);
  write_text((ctx.out / "sign_samples.csv").string(),
             sign_samples_csv(bundle, gamma, sspec));
  return ok;
}

bool run_estimate_wavefront(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "solution", "window_scale", "cone_half_angle",
              "bands", "calibration", "scan", "point_checks"});
  WavefrontParams params;
  params.window_scale = get_num_or(config, "window_scale", 0.5);
  params.cone_half_angle = get_num_or(config, "cone_half_angle", 0.2);
  if (config.contains("bands"))
    params.bands = config["bands"].get<std::vector<double>>();

  std::vector<double> labels = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<uint64_t> seeds = {11, 12, 13};
  if (config.contains("calibration")) {
    const Json& c = config["calibration"];
    check_keys(c, "calibration", {"labels", "seeds"});
    if (c.contains("labels")) labels = c["labels"].get<std::vector<double>>();
    if (c.contains("seeds")) seeds = c["seeds"].get<std::vector<uint64_t>>();
  }
  CalibrationTable cal = calibrate(ctx.grid, params, labels, seeds);

  SolutionFamily fam;
  if (config.contains("solution"))
    fam = parse_solution(config["solution"], "solution");
  Field u = fam.realize(ctx.grid);
  params.margin_guard = fam.window;

  Json summary;
  summary["experiment"] = "estimate-wavefront";
  summary["calibration"] = to_json(cal);
  bool ok = cal.max_residual <= 0.15;

  Json checks = Json::array();
  if (config.contains("point_checks")) {
    for (std::size_t i = 0; i < config["point_checks"].size(); ++i) {
      const Json& pc = config["point_checks"][i];
      std::string where = "point_checks[" + std::to_string(i) + "]";
      check_keys(pc, where, {"x", "dir", "expect_s", "tol", "expect"});
      PhaseDirection p = PhaseDirection::make(
          get_vec(pc, "x", where, ctx.grid.dim),
          get_vec(pc, "dir", where, ctx.grid.dim));
      SobolevEstimate est = microlocal_estimate(u, p, params, cal);
      Json row = to_json(est);
      bool pass;
      if (pc.contains("expect") && pc["expect"] == "sentinel") {
        pass = est.sentinel;
      } else {
        double want = get_num(pc, "expect_s", where);
        double tol = get_num_or(pc, "tol", 0.15);
        pass = !est.sentinel && std::abs(est.s_est - want) <= tol;
      }
      row["pass"] = pass;
      ok = ok && pass;
      checks.push_back(row);
    }
  }
  summary["point_checks"] = checks;

  if (config.contains("scan")) {
    const Json& sc = config["scan"];
    check_keys(sc, "scan", {"x_count", "dirs", "margin_scales"});
    int xc = int(get_num_or(sc, "x_count", 8));
    int nd = int(get_num_or(sc, "dirs", 16));
    std::vector<Vec> xs, dirs;
    for (int i = 0; i < xc; ++i)
      for (int j = 0; j < xc; ++j)
        xs.push_back(Vec{ctx.grid.period[0] * (i + 0.5) / xc,
                         ctx.grid.period[1] * (j + 0.5) / xc});
    for (int i = 0; i < nd; ++i) {
      double th = kTwoPi * i / nd;
      dirs.push_back(Vec{std::cos(th), std::sin(th)});
    }
    auto scan = wavefront_scan(u, xs, dirs, params, cal);
    write_text((ctx.out / "scan.csv").string(), scan_csv(scan));
    long sentinels = 0, valid = 0;
    for (const auto& e : scan)
      if (e.ok) {
        valid++;
        if (e.sentinel) sentinels++;
      }
    summary["scan_points"] = valid;
    summary["scan_sentinels"] = sentinels;
  }

  summary["ok"] = ok;
  write_summary(ctx, summary);
  return ok;
}

bool run_propagation(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "triple", "net", "solutions", "band_limits",
              "grid_factor", "lemma", "expect"});
  TripleSpec triple = parse_triple(config, ctx);
  auto sols = parse_solutions(config);
  PropagationOptions opts;
  if (config.contains("band_limits"))
    opts.band_limits = config["band_limits"].get<std::vector<int>>();
  opts.grid_factor = int(get_num_or(config, "grid_factor", 4));
  opts.stability_factor = ctx.tol("stability_factor", 2.0);
  opts.seed = ctx.seed;
  std::string expect = config.value("expect", "pass");
  opts.allow_failed_control = (expect == "violation");

  bool lemma = config.value("lemma", false);
  EstimateReport rep = lemma ? run_lemma_estimate(triple, sols, opts)
                             : run_theorem_estimate(triple, sols, opts);

  bool ok;
  if (expect == "violation") {
    double want = ctx.tol("violation_exponent", 0.5);
    ok = !rep.control_verdict && rep.growth_exponent >= want;
  } else {
    ok = rep.control_verdict && rep.stable;
  }

  Json summary;
  summary["experiment"] = lemma ? "run-propagation(lemma)" : "run-propagation";
  summary["expect"] = expect;
  summary["report"] = to_json(rep);
  summary["ok"] = ok;
  write_summary(ctx, summary);
  write_text((ctx.out / "ratios.csv").string(), csv_of(rep));
  return ok;
}

bool run_ladder(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "triple", "net", "g1", "g1_net", "solutions",
              "m_max", "band_limits", "grid_factor"});
  TripleSpec triple = parse_triple(config, ctx);
  Symbol g1 = ctx.table.resolve(config.at("g1").get<std::string>());
  ControlNet g1_net =
      parse_net(config.at("g1_net"), "g1_net", ctx.grid.dim, ctx.table);
  auto sols = parse_solutions(config);
  PropagationOptions opts;
  if (config.contains("band_limits"))
    opts.band_limits = config["band_limits"].get<std::vector<int>>();
  opts.grid_factor = int(get_num_or(config, "grid_factor", 4));
  opts.stability_factor = ctx.tol("stability_factor", 2.0);
  opts.seed = ctx.seed;
  int m_max = int(get_num_or(config, "m_max",
                             2.0 * triple.N + 2.0 * triple.k));

  LadderReport rep =
      run_order_ladder(triple, g1, g1_net, sols, m_max, opts);
  Json summary;
  summary["experiment"] = "run-ladder";
  summary["report"] = to_json(rep);
  summary["ok"] = rep.ok;
  write_summary(ctx, summary);
  write_text((ctx.out / "ladder.csv").string(), csv_of(rep));
  return rep.ok;
}

bool run_regularization(const Json& config, Context& ctx) {
  check_keys(config, "config",
             {"experiment", "seed", "output_dir", "grid", "symbols",
              "tolerances", "triple", "net", "solution", "r", "eps_list",
              "band_limit", "grid_factor"});
  TripleSpec triple = parse_triple(config, ctx);
  SolutionFamily fam = parse_solution(config.at("solution"), "solution");
  double r = get_num_or(config, "r", triple.N + triple.k + 1.0);
  std::vector<double> eps_list = {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125,
                                  0.015625};
  if (config.contains("eps_list"))
    eps_list = config["eps_list"].get<std::vector<double>>();
  int band_limit = int(get_num_or(config, "band_limit", 64));
  PropagationOptions opts;
  opts.grid_factor = int(get_num_or(config, "grid_factor", 4));
  opts.stability_factor = ctx.tol("stability_factor", 2.0);
  opts.seed = ctx.seed;

  RegReport rep = regularization_experiment(triple, fam, r, eps_list,
                                            band_limit, opts);
  bool ok = rep.commutation_residual <= 1e-10 && rep.monotone_ok &&
            rep.uniform_ok && rep.control_all;
  Json summary;
  summary["experiment"] = "run-regularization";
  summary["report"] = to_json(rep);
  summary["ok"] = ok;
  write_summary(ctx, summary);
  write_text((ctx.out / "reg.csv").string(), csv_of(rep));
  return ok;
}

}  // namespace

void validate_top_level(const Json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (!config.contains("experiment"))
    throw ConfigError("config needs an 'experiment' key");
  if (!config.contains("grid"))
    throw ConfigError("config needs a 'grid' section");
  static const std::vector<std::string> kinds = {
      "check-calculus",  "trace-rays",   "build-escape",
      "estimate-wavefront", "run-propagation", "run-ladder",
      "run-regularization"};
  std::string kind = config["experiment"].get<std::string>();
  for (const auto& k : kinds)
    if (k == kind) return;
  throw ConfigError("unknown experiment kind '" + kind + "'");
}

bool run_experiment(const Json& config, const std::string& output_dir,
                    bool verbose) {
  validate_top_level(config);
  Context ctx = make_context(config, output_dir, verbose);
  std::string kind = config["experiment"].get<std::string>();
  if (kind == "check-calculus") return run_check_calculus(config, ctx);
  if (kind == "trace-rays") return run_trace_rays(config, ctx);
  if (kind == "build-escape") return run_build_escape(config, ctx);
  if (kind == "estimate-wavefront") return run_estimate_wavefront(config, ctx);
  if (kind == "run-propagation") return run_propagation(config, ctx);
  if (kind == "run-ladder") return run_ladder(config, ctx);
  if (kind == "run-regularization") return run_regularization(config, ctx);
  throw ConfigError("unknown experiment kind '" + kind + "'");
}

}  // namespace microloc
