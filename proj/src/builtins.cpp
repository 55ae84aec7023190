#include "microloc/builtins.hpp"

#include <algorithm>
#include <sstream>

#include "microloc/errors.hpp"

namespace microloc {

void check_keys(const Json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const Json& obj, const std::string& key,
               const std::string& where) {
  if (!obj.contains(key))
    throw ConfigError(where + ": missing required key '" + key + "'");
  if (!obj[key].is_number())
    throw ConfigError(where + ": key '" + key + "' must be a number");
  return obj[key].get<double>();
}

double get_num_or(const Json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

Vec get_vec(const Json& obj, const std::string& key, const std::string& where,
            int dim) {
  if (!obj.contains(key) || !obj[key].is_array() ||
      int(obj[key].size()) != dim)
    throw ConfigError(where + ": key '" + key + "' must be an array of " +
                      std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = obj[key][i].get<double>();
  return v;
}

SymbolTable::SymbolTable(int dim, double period)
    : dim_(dim), period_(period), defs_(Json::object()) {}

SymbolTable::SymbolTable(int dim, double period, const Json& defs)
    : dim_(dim), period_(period), defs_(defs) {
  if (!defs_.is_object()) throw ConfigError("symbols: expected an object");
}

bool SymbolTable::has(const std::string& name) const {
  return defs_.contains(name);
}

Symbol SymbolTable::resolve(const std::string& name) const {
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  Symbol s;
  if (defs_.contains(name)) {
    s = build(defs_[name], "symbols." + name).with_label(name);
  } else if (name == "box") {
    s = make_box_symbol(dim_);
  } else if (name.rfind("bracket:", 0) == 0) {
    s = make_bracket_symbol(dim_, std::stod(name.substr(8)));
  } else if (name.rfind("eps-bracket:", 0) == 0) {
    std::string rest = name.substr(12);
    auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw ConfigError("symbol '" + name + "': expected eps-bracket:eps:p");
    s = make_eps_bracket_symbol(dim_, std::stod(rest.substr(0, colon)),
                                std::stod(rest.substr(colon + 1)));
  } else {
    throw ConfigError("symbol '" + name +
                      "' is neither defined in the config nor a builtin "
                      "shorthand (box, bracket:m, eps-bracket:eps:p)");
  }
  cache_[name] = s;
  return s;
}

Symbol SymbolTable::build(const Json& def, const std::string& where) const {
  if (def.is_string()) return resolve(def.get<std::string>());
  if (!def.is_object())
    throw ConfigError(where + ": symbol definition must be an object or name");
  if (!def.contains("kind"))
    throw ConfigError(where + ": symbol definition needs a 'kind'");
  std::string kind = def["kind"].get<std::string>();

  if (kind == "box") {
    check_keys(def, where, {"kind"});
    return make_box_symbol(dim_);
  }
  if (kind == "bracket") {
    check_keys(def, where, {"kind", "m"});
    return make_bracket_symbol(dim_, get_num(def, "m", where));
  }
  if (kind == "eps-bracket") {
    check_keys(def, where, {"kind", "eps", "p"});
    return make_eps_bracket_symbol(dim_, get_num(def, "eps", where),
                                   get_num(def, "p", where));
  }
  if (kind == "constant") {
    check_keys(def, where, {"kind", "re", "im"});
    return make_constant_symbol(
        dim_, Cplx(get_num_or(def, "re", 1.0), get_num_or(def, "im", 0.0)));
  }
  if (kind == "xi") {
    check_keys(def, where, {"kind", "axis"});
    return make_xi_coordinate_symbol(dim_, int(get_num(def, "axis", where)));
  }
  if (kind == "bump") {
    check_keys(def, where, {"kind", "center", "halfwidth", "plateau"});
    BumpSpec spec;
    spec.center = get_vec(def, "center", where, dim_);
    spec.halfwidth = get_vec(def, "halfwidth", where, dim_);
    spec.plateau = get_num_or(def, "plateau", 0.5);
    spec.period = period_;
    return make_bump_multiplier(spec);
  }
  if (kind == "cone") {
    check_keys(def, where,
               {"kind", "direction", "half_angle", "plateau", "lowcut",
                "order"});
    ConeSpec spec;
    spec.direction = get_vec(def, "direction", where, dim_);
    spec.half_angle = get_num(def, "half_angle", where);
    spec.plateau = get_num_or(def, "plateau", 0.5);
    if (def.contains("lowcut")) {
      spec.lowcut_on = def["lowcut"][0].get<double>();
      spec.lowcut_full = def["lowcut"][1].get<double>();
    }
    spec.order = get_num_or(def, "order", 0.0);
    return make_cone_cutoff(spec);
  }
  if (kind == "radial-cutoff") {
    check_keys(def, where, {"kind", "C", "width"});
    return make_radial_cutoff(dim_, get_num(def, "C", where),
                              get_num(def, "width", where));
  }
  if (kind == "tube") {
    check_keys(def, where,
               {"kind", "center", "axis", "par", "perp", "direction",
                "half_angle", "ang_plateau", "lowcut", "order"});
    TubeSpec spec;
    spec.center = get_vec(def, "center", where, dim_);
    spec.axis = get_vec(def, "axis", where, dim_);
    if (def.contains("par")) {
      spec.par_halfwidth = def["par"][0].get<double>();
      spec.par_plateau = def["par"][1].get<double>();
    }
    if (def.contains("perp")) {
      spec.perp_halfwidth = def["perp"][0].get<double>();
      spec.perp_plateau = def["perp"][1].get<double>();
    }
    spec.direction = get_vec(def, "direction", where, dim_);
    spec.half_angle = get_num_or(def, "half_angle", 0.2);
    spec.ang_plateau = get_num_or(def, "ang_plateau", 0.5);
    if (def.contains("lowcut")) {
      spec.lowcut_on = def["lowcut"][0].get<double>();
      spec.lowcut_full = def["lowcut"][1].get<double>();
    }
    spec.order = get_num_or(def, "order", 0.0);
    spec.period = period_;
    return make_tube_cutoff(spec);
  }
  if (kind == "escape") {
    EscapeSpec spec = parse_escape_spec(def, where, dim_, period_);
    return build_escape(spec).a;
  }
  if (kind == "product" || kind == "sum") {
    check_keys(def, where, {"kind", "of"});
    if (!def.contains("of") || !def["of"].is_array() || def["of"].size() < 2)
      throw ConfigError(where + ": '" + kind +
                        "' needs an array 'of' with at least two entries");
    Symbol acc = build(def["of"][0], where + ".of[0]");
    for (std::size_t i = 1; i < def["of"].size(); ++i) {
      Symbol next = build(def["of"][i], where + ".of[" + std::to_string(i) +
                                            "]");
      acc = (kind == "product") ? symbol_product(acc, next)
                                : symbol_sum(acc, next);
    }
    return acc;
  }
  if (kind == "scale") {
    check_keys(def, where, {"kind", "of", "re", "im"});
    Symbol inner = build(def["of"], where + ".of");
    return symbol_scale(inner, Cplx(get_num_or(def, "re", 1.0),
                                    get_num_or(def, "im", 0.0)));
  }
  if (kind == "conjugate") {
    check_keys(def, where, {"kind", "of"});
    return symbol_conjugate(build(def["of"], where + ".of"));
  }
  throw ConfigError(where + ": unknown symbol kind '" + kind + "'");
}

EscapeSpec SymbolTable::escape_spec(const std::string& name) const {
  if (!defs_.contains(name))
    throw ConfigError("escape spec '" + name + "' not found in symbols");
  const Json& def = defs_[name];
  if (!def.is_object() || def.value("kind", "") != "escape")
    throw ConfigError("symbol '" + name + "' is not an escape definition");
  return parse_escape_spec(def, "symbols." + name, dim_, period_);
}

EscapeSpec parse_escape_spec(const Json& def, const std::string& where,
                             int dim, double period) {
  check_keys(def, where,
             {"kind", "target_x", "target_dir", "t0", "delta", "gamma", "k",
              "y_halfwidth", "y_plateau", "ang_halfwidth", "ang_plateau",
              "lowcut"});
  EscapeSpec spec;
  spec.target = PhaseDirection::make(get_vec(def, "target_x", where, dim),
                                     get_vec(def, "target_dir", where, dim));
  spec.t0 = get_num_or(def, "t0", 1.0);
  spec.delta = get_num_or(def, "delta", 0.25);
  spec.gamma = get_num_or(def, "gamma", 1.0);
  spec.k = get_num_or(def, "k", 0.0);
  spec.y_halfwidth = get_num_or(def, "y_halfwidth", 0.5);
  spec.y_plateau = get_num_or(def, "y_plateau", 0.5);
  spec.ang_halfwidth = get_num_or(def, "ang_halfwidth", 0.15);
  spec.ang_plateau = get_num_or(def, "ang_plateau", 0.4);
  if (def.contains("lowcut")) {
    spec.lowcut_on = def["lowcut"][0].get<double>();
    spec.lowcut_full = def["lowcut"][1].get<double>();
  }
  spec.period = period;
  return spec;
}

SolutionFamily parse_solution(const Json& def, const std::string& where) {
  check_keys(def, where,
             {"kind", "band_limit", "s", "seed", "offset", "center", "width",
              "wavenumber", "window"});
  if (!def.contains("kind"))
    throw ConfigError(where + ": solution needs a 'kind'");
  std::string kind = def["kind"].get<std::string>();
  SolutionFamily f;
  if (kind == "traveling-delta") {
    f.kind = SolutionFamily::Kind::TravelingDelta;
  } else if (kind == "random-hs") {
    f.kind = SolutionFamily::Kind::RandomHs;
    f.s = get_num_or(def, "s", 1.0);
  } else if (kind == "packet") {
    f.kind = SolutionFamily::Kind::PlaneWavePacket;
    f.packet_center = get_num_or(def, "center", 3.141592653589793);
    f.packet_width = get_num_or(def, "width", 0.8);
    f.packet_wavenumber = int(get_num_or(def, "wavenumber", 12));
  } else {
    throw ConfigError(where + ": unknown solution kind '" + kind +
                      "' (traveling-delta, random-hs, packet)");
  }
  f.band_limit = int(get_num_or(def, "band_limit", 0));
  f.seed = uint64_t(get_num_or(def, "seed", 0));
  f.offset = get_num_or(def, "offset", 0.0);
  f.window = def.value("window", false);
  return f;
}

ControlNet parse_net(const Json& def, const std::string& where, int dim,
                     const SymbolTable& table) {
  check_keys(def, where,
             {"x_box", "x_from_symbol", "x_count", "dir_center", "dir_spread",
              "dir_count", "extra_circle_dirs", "t_max", "samples_per_unit",
              "eps_g", "eps_e", "ellip_C"});
  ControlNet net;
  if (def.contains("x_from_symbol")) {
    Symbol s = table.resolve(def["x_from_symbol"].get<std::string>());
    if (!s.x_support())
      throw ConfigError(where + ": symbol has no x-support box");
    net.x_box = *s.x_support();
  } else if (def.contains("x_box")) {
    const Json& b = def["x_box"];
    net.x_box.lo = get_vec(b, "lo", where + ".x_box", dim);
    net.x_box.hi = get_vec(b, "hi", where + ".x_box", dim);
  } else {
    throw ConfigError(where + ": net needs x_box or x_from_symbol");
  }
  net.x_count = int(get_num_or(def, "x_count", 5));
  net.dir_center = get_vec(def, "dir_center", where, dim);
  net.dir_spread = get_num_or(def, "dir_spread", 0.15);
  net.dir_count = int(get_num_or(def, "dir_count", 7));
  net.extra_circle_dirs = int(get_num_or(def, "extra_circle_dirs", 8));
  net.t_max = get_num_or(def, "t_max", 3.0);
  net.samples_per_unit = int(get_num_or(def, "samples_per_unit", 64));
  net.eps_g = get_num_or(def, "eps_g", 0.01);
  net.eps_e = get_num_or(def, "eps_e", 0.01);
  net.ellip_C = get_num_or(def, "ellip_C", 16.0);
  return net;
}

std::string builtins_catalog() {
  std::vector<std::string> lines = {
      "experiment build-escape      escape, e, g, gamma, samples, sos_margin",
      "experiment check-calculus    pairs[{op,a1,a2}], bands, probes, slack, elliptic{}, garding{}",
      "experiment estimate-wavefront solution{}, calibration{labels,seeds}, scan{x_count,margin,dirs}",
      "experiment run-ladder        triple{b,e,g,k,N}, g1, net{}, g1_net{}, solutions[], m_max",
      "experiment run-propagation   triple{b,e,g,k,N}, net{}, solutions[], band_limits, expect",
      "experiment run-regularization triple{}, net{}, solution{}, r, eps_list, band_limit",
      "experiment trace-rays        triple{b,e,g}, net{}",
      "solution packet              center, width, wavenumber, window",
      "solution random-hs           s, seed, band_limit, window",
      "solution traveling-delta     band_limit, offset, window",
      "symbol box                   (no parameters)",
      "symbol bracket               m",
      "symbol bump                  center[], halfwidth[], plateau",
      "symbol cone                  direction[], half_angle, plateau, lowcut[2], order",
      "symbol conjugate             of",
      "symbol constant              re, im",
      "symbol eps-bracket           eps, p",
      "symbol escape                target_x[], target_dir[], t0, delta, gamma, k, y_halfwidth, y_plateau, ang_halfwidth, ang_plateau, lowcut[2]",
      "symbol product               of[]",
      "symbol radial-cutoff         C, width",
      "symbol scale                 of, re, im",
      "symbol sum                   of[]",
      "symbol tube                  center[], axis[], par[2], perp[2], direction[], half_angle, ang_plateau, lowcut[2], order",
      "symbol xi                    axis",
  };
  std::sort(lines.begin(), lines.end());
  std::ostringstream out;
  for (const auto& l : lines) out << l << "\n";
  return out.str();
}

}  // namespace microloc
