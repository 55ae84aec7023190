#include "microloc/symbols.hpp"

#include <algorithm>
#include <cmath>

#include "microloc/errors.hpp"
#include "microloc/smooth.hpp"

namespace microloc {

struct Symbol::Impl {
  int dim = 0;
  double order = 0.0;
  std::string label;
  Structure structure = Structure::Generic;
  std::vector<SeparableTerm> terms;
  Eval eval;                       // always set
  Eval core;                       // generic-factored only
  FreqFn prefactor;                // generic-factored only
  GradFn grad_x, grad_xi;          // optional analytic gradients
  std::optional<BoxRegion> x_support;
  std::array<double, kMaxDim> periods{kTwoPi, kTwoPi, kTwoPi};
};

namespace {

bool box_contains_periodic(const BoxRegion& box, const Vec& x,
                           const std::array<double, kMaxDim>& periods) {
  for (int i = 0; i < x.n; ++i) {
    double lo = box.lo[i], hi = box.hi[i], v = x[i], L = periods[i];
    bool in = false;
    for (int s = -1; s <= 1 && !in; ++s) {
      double w = v + s * L;
      in = (w >= lo && w <= hi);
    }
    if (!in) return false;
  }
  return true;
}

Cplx eval_terms(const std::vector<SeparableTerm>& terms, const Vec& x,
                const Vec& xi) {
  Cplx s = 0.0;
  for (const auto& t : terms) {
    Cplx v = 1.0;
    if (t.space) v *= t.space(x);
    if (v != 0.0 && t.freq) v *= t.freq(xi);
    s += v;
  }
  return s;
}

Symbol::Structure classify(const std::vector<SeparableTerm>& terms) {
  bool any_space = false, any_freq = false;
  for (const auto& t : terms) {
    if (t.space) any_space = true;
    if (t.freq) any_freq = true;
  }
  if (!any_space) return Symbol::Structure::XIndependent;
  if (!any_freq) return Symbol::Structure::XiIndependent;
  return Symbol::Structure::Separable;
}

bool terms_have_grads(const std::vector<SeparableTerm>& terms) {
  for (const auto& t : terms) {
    if (t.space && !t.space_grad) return false;
    if (t.freq && !t.freq_grad) return false;
  }
  return true;
}

}  // namespace

Symbol Symbol::generic(int dim, double order, Eval eval, std::string label) {
  auto impl = std::make_shared<Impl>();
  impl->dim = dim;
  impl->order = order;
  impl->eval = std::move(eval);
  impl->label = std::move(label);
  impl->structure = Structure::Generic;
  return Symbol(std::move(impl));
}

Symbol Symbol::generic_factored(int dim, double order, Eval core,
                                FreqFn prefactor, std::string label) {
  auto impl = std::make_shared<Impl>();
  impl->dim = dim;
  impl->order = order;
  impl->core = core;
  impl->prefactor = prefactor;
  impl->eval = [core, prefactor](const Vec& x, const Vec& xi) {
    Cplx p = prefactor(xi);
    if (p == 0.0) return Cplx(0.0);
    return core(x, xi) * p;
  };
  impl->label = std::move(label);
  impl->structure = Structure::Generic;
  return Symbol(std::move(impl));
}

Symbol Symbol::from_terms(int dim, double order,
                          std::vector<SeparableTerm> terms, std::string label) {
  auto impl = std::make_shared<Impl>();
  impl->dim = dim;
  impl->order = order;
  impl->structure = classify(terms);
  impl->terms = std::move(terms);
  auto terms_copy = impl->terms;
  impl->eval = [terms_copy](const Vec& x, const Vec& xi) {
    return eval_terms(terms_copy, x, xi);
  };
  if (terms_have_grads(impl->terms)) {
    impl->grad_x = [terms_copy, dim](const Vec& x, const Vec& xi) {
      CVec g(dim);
      for (const auto& t : terms_copy) {
        if (!t.space) continue;  // constant in x
        Cplx f = t.freq ? t.freq(xi) : Cplx(1.0);
        if (f == 0.0) continue;
        CVec gs = t.space_grad(x);
        for (int i = 0; i < dim; ++i) g[i] += gs[i] * f;
      }
      return g;
    };
    impl->grad_xi = [terms_copy, dim](const Vec& x, const Vec& xi) {
      CVec g(dim);
      for (const auto& t : terms_copy) {
        if (!t.freq) continue;
        Cplx s = t.space ? t.space(x) : Cplx(1.0);
        if (s == 0.0) continue;
        CVec gf = t.freq_grad(xi);
        for (int i = 0; i < dim; ++i) g[i] += gf[i] * s;
      }
      return g;
    };
  }
  impl->label = std::move(label);
  return Symbol(std::move(impl));
}

int Symbol::dim() const { return impl_->dim; }
double Symbol::order() const { return impl_->order; }
const std::string& Symbol::label() const { return impl_->label; }
Symbol::Structure Symbol::structure() const { return impl_->structure; }
const std::vector<SeparableTerm>& Symbol::terms() const { return impl_->terms; }
const std::optional<BoxRegion>& Symbol::x_support() const {
  return impl_->x_support;
}
const std::array<double, kMaxDim>& Symbol::periods() const {
  return impl_->periods;
}
const Symbol::Eval& Symbol::core() const { return impl_->core; }
const Symbol::FreqFn& Symbol::freq_prefactor() const { return impl_->prefactor; }

Cplx Symbol::eval(const Vec& x, const Vec& xi) const {
  if (x.n != impl_->dim || xi.n != impl_->dim)
    throw DimensionError("symbol eval: dimension mismatch for '" +
                         impl_->label + "'");
  if (impl_->x_support &&
      !box_contains_periodic(*impl_->x_support, x, impl_->periods))
    return 0.0;
  return impl_->eval(x, xi);
}

bool Symbol::has_analytic_gradients() const {
  return static_cast<bool>(impl_->grad_x) && static_cast<bool>(impl_->grad_xi);
}

CVec Symbol::grad_x(const Vec& x, const Vec& xi) const {
  if (impl_->grad_x) {
    if (impl_->x_support &&
        !box_contains_periodic(*impl_->x_support, x, impl_->periods))
      return CVec(impl_->dim);
    return impl_->grad_x(x, xi);
  }
  return grad_x_fd(x, xi);
}

CVec Symbol::grad_xi(const Vec& x, const Vec& xi) const {
  if (impl_->grad_xi) {
    if (impl_->x_support &&
        !box_contains_periodic(*impl_->x_support, x, impl_->periods))
      return CVec(impl_->dim);
    return impl_->grad_xi(x, xi);
  }
  return grad_xi_fd(x, xi);
}

CVec Symbol::grad_x_fd(const Vec& x, const Vec& xi, double scale) const {
  CVec g(impl_->dim);
  double h = scale * (1.0 + x.norm());
  for (int i = 0; i < impl_->dim; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (eval(xp, xi) - eval(xm, xi)) / (2.0 * h);
  }
  return g;
}

CVec Symbol::grad_xi_fd(const Vec& x, const Vec& xi, double scale) const {
  CVec g(impl_->dim);
  double h = scale * (1.0 + xi.norm());
  for (int i = 0; i < impl_->dim; ++i) {
    Vec xp = xi, xm = xi;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (eval(x, xp) - eval(x, xm)) / (2.0 * h);
  }
  return g;
}

Symbol Symbol::with_x_support(BoxRegion box) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->x_support = box;
  return Symbol(std::move(impl));
}

Symbol Symbol::with_label(std::string label) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->label = std::move(label);
  return Symbol(std::move(impl));
}

Symbol Symbol::with_order(double order) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->order = order;
  return Symbol(std::move(impl));
}

Symbol Symbol::with_periods(std::array<double, kMaxDim> periods) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->periods = periods;
  return Symbol(std::move(impl));
}

// ---- algebra ----------------------------------------------------------------

namespace {

SeparableTerm product_term(const SeparableTerm& s, const SeparableTerm& t) {
  SeparableTerm r;
  if (s.space && t.space) {
    auto a = s.space, b = t.space;
    r.space = [a, b](const Vec& x) { return a(x) * b(x); };
    if (s.space_grad && t.space_grad) {
      auto ga = s.space_grad, gb = t.space_grad;
      r.space_grad = [a, b, ga, gb](const Vec& x) {
        CVec g = ga(x) * b(x);
        CVec h = gb(x) * a(x);
        return g + h;
      };
    }
  } else if (s.space) {
    r.space = s.space;
    r.space_grad = s.space_grad;
  } else if (t.space) {
    r.space = t.space;
    r.space_grad = t.space_grad;
  }
  if (s.freq && t.freq) {
    auto a = s.freq, b = t.freq;
    r.freq = [a, b](const Vec& xi) { return a(xi) * b(xi); };
    if (s.freq_grad && t.freq_grad) {
      auto ga = s.freq_grad, gb = t.freq_grad;
      r.freq_grad = [a, b, ga, gb](const Vec& xi) {
        CVec g = ga(xi) * b(xi);
        CVec h = gb(xi) * a(xi);
        return g + h;
      };
    }
  } else if (s.freq) {
    r.freq = s.freq;
    r.freq_grad = s.freq_grad;
  } else if (t.freq) {
    r.freq = t.freq;
    r.freq_grad = t.freq_grad;
  }
  return r;
}

std::optional<BoxRegion> intersect_boxes(const std::optional<BoxRegion>& a,
                                         const std::optional<BoxRegion>& b) {
  if (!a) return b;
  if (!b) return a;
  BoxRegion r = *a;
  for (int i = 0; i < r.lo.n; ++i) {
    r.lo[i] = std::max(a->lo[i], b->lo[i]);
    r.hi[i] = std::min(a->hi[i], b->hi[i]);
    if (r.lo[i] > r.hi[i]) r.hi[i] = r.lo[i];  // empty support collapses
  }
  return r;
}

std::optional<BoxRegion> hull_boxes(const std::optional<BoxRegion>& a,
                                    const std::optional<BoxRegion>& b) {
  if (!a || !b) return std::nullopt;  // one side is unbounded
  BoxRegion r = *a;
  for (int i = 0; i < r.lo.n; ++i) {
    r.lo[i] = std::min(a->lo[i], b->lo[i]);
    r.hi[i] = std::max(a->hi[i], b->hi[i]);
  }
  return r;
}

void require_same_dim(const Symbol& a, const Symbol& b, const char* op) {
  if (a.dim() != b.dim())
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         a.label() + ", " + b.label() + ")");
}

}  // namespace

Symbol symbol_product(const Symbol& a, const Symbol& b) {
  require_same_dim(a, b, "symbol_product");
  std::string label = "(" + a.label() + ")*(" + b.label() + ")";
  Symbol r;
  bool structured = a.structure() != Symbol::Structure::Generic &&
                    b.structure() != Symbol::Structure::Generic;
  if (structured) {
    std::vector<SeparableTerm> terms;
    for (const auto& s : a.terms())
      for (const auto& t : b.terms()) terms.push_back(product_term(s, t));
    r = Symbol::from_terms(a.dim(), a.order() + b.order(), std::move(terms),
                           label);
  } else {
    Symbol ac = a, bc = b;
    r = Symbol::generic(
        a.dim(), a.order() + b.order(),
        [ac, bc](const Vec& x, const Vec& xi) {
          Cplx va = ac.eval(x, xi);
          if (va == 0.0) return Cplx(0.0);
          return va * bc.eval(x, xi);
        },
        label);
  }
  auto support = intersect_boxes(a.x_support(), b.x_support());
  if (support) r = r.with_x_support(*support);
  return r.with_periods(a.periods());
}

Symbol symbol_sum(const Symbol& a, const Symbol& b) {
  require_same_dim(a, b, "symbol_sum");
  std::string label = "(" + a.label() + ")+(" + b.label() + ")";
  double order = std::max(a.order(), b.order());
  Symbol r;
  bool structured = a.structure() != Symbol::Structure::Generic &&
                    b.structure() != Symbol::Structure::Generic;
  if (structured) {
    std::vector<SeparableTerm> terms = a.terms();
    // A plain term list ignores the operands' support clamps, so only merge
    // termwise when neither side carries one.
    if (!a.x_support() && !b.x_support()) {
      for (const auto& t : b.terms()) terms.push_back(t);
      r = Symbol::from_terms(a.dim(), order, std::move(terms), label);
      return r.with_periods(a.periods());
    }
  }
  Symbol ac = a, bc = b;
  r = Symbol::generic(
      a.dim(), order,
      [ac, bc](const Vec& x, const Vec& xi) {
        return ac.eval(x, xi) + bc.eval(x, xi);
      },
      label);
  auto support = hull_boxes(a.x_support(), b.x_support());
  if (support) r = r.with_x_support(*support);
  return r.with_periods(a.periods());
}

Symbol symbol_scale(const Symbol& a, Cplx c) {
  std::string label = "scale(" + a.label() + ")";
  Symbol r;
  if (a.structure() != Symbol::Structure::Generic) {
    std::vector<SeparableTerm> terms = a.terms();
    if (!terms.empty()) {
      // fold the scalar into the first term
      auto& t0 = terms.front();
      SeparableTerm scaled = t0;
      if (t0.freq) {
        auto f = t0.freq;
        scaled.freq = [f, c](const Vec& xi) { return c * f(xi); };
        if (t0.freq_grad) {
          auto g = t0.freq_grad;
          scaled.freq_grad = [g, c](const Vec& xi) { return g(xi) * c; };
        }
      } else if (t0.space) {
        auto f = t0.space;
        scaled.space = [f, c](const Vec& x) { return c * f(x); };
        if (t0.space_grad) {
          auto g = t0.space_grad;
          scaled.space_grad = [g, c](const Vec& x) { return g(x) * c; };
        }
      } else {
        scaled.freq = [c](const Vec&) { return c; };
        scaled.freq_grad = [c](const Vec& xi) { return CVec(xi.n); };
      }
      terms.front() = scaled;
      r = Symbol::from_terms(a.dim(), a.order(), std::move(terms), label);
    } else {
      r = Symbol::from_terms(a.dim(), a.order(), {}, label);
    }
  } else {
    Symbol ac = a;
    r = Symbol::generic(
        a.dim(), a.order(),
        [ac, c](const Vec& x, const Vec& xi) { return c * ac.eval(x, xi); },
        label);
  }
  if (a.x_support()) r = r.with_x_support(*a.x_support());
  return r.with_periods(a.periods());
}

Symbol symbol_conjugate(const Symbol& a) {
  std::string label = "conj(" + a.label() + ")";
  Symbol r;
  if (a.structure() != Symbol::Structure::Generic) {
    std::vector<SeparableTerm> terms;
    for (const auto& t : a.terms()) {
      SeparableTerm c;
      if (t.space) {
        auto f = t.space;
        c.space = [f](const Vec& x) { return std::conj(f(x)); };
        if (t.space_grad) {
          auto g = t.space_grad;
          c.space_grad = [g](const Vec& x) {
            CVec v = g(x);
            for (int i = 0; i < v.n; ++i) v[i] = std::conj(v[i]);
            return v;
          };
        }
      }
      if (t.freq) {
        auto f = t.freq;
        c.freq = [f](const Vec& xi) { return std::conj(f(xi)); };
        if (t.freq_grad) {
          auto g = t.freq_grad;
          c.freq_grad = [g](const Vec& xi) {
            CVec v = g(xi);
            for (int i = 0; i < v.n; ++i) v[i] = std::conj(v[i]);
            return v;
          };
        }
      }
      terms.push_back(std::move(c));
    }
    r = Symbol::from_terms(a.dim(), a.order(), std::move(terms), label);
  } else {
    Symbol ac = a;
    r = Symbol::generic(
        a.dim(), a.order(),
        [ac](const Vec& x, const Vec& xi) { return std::conj(ac.eval(x, xi)); },
        label);
  }
  if (a.x_support()) r = r.with_x_support(*a.x_support());
  return r.with_periods(a.periods());
}

// ---- builders ---------------------------------------------------------------

Symbol make_box_symbol(int d) {
  if (d < 2) throw DimensionError("box symbol needs dimension >= 2");
  SeparableTerm t;
  t.freq = [](const Vec& xi) {
    double s = xi[0] * xi[0];
    for (int j = 1; j < xi.n; ++j) s -= xi[j] * xi[j];
    return Cplx(s);
  };
  t.freq_grad = [](const Vec& xi) {
    CVec g(xi.n);
    g[0] = 2.0 * xi[0];
    for (int j = 1; j < xi.n; ++j) g[j] = -2.0 * xi[j];
    return g;
  };
  return Symbol::from_terms(d, 2.0, {t}, "box");
}

Symbol make_bracket_symbol(int d, double m) {
  SeparableTerm t;
  t.freq = [m](const Vec& xi) {
    return Cplx(std::pow(1.0 + xi.norm2(), 0.5 * m));
  };
  t.freq_grad = [m, d](const Vec& xi) {
    CVec g(d);
    double w = std::pow(1.0 + xi.norm2(), 0.5 * m - 1.0);
    for (int j = 0; j < d; ++j) g[j] = m * xi[j] * w;
    return g;
  };
  return Symbol::from_terms(d, m, {t}, "bracket:" + std::to_string(m));
}

Symbol make_eps_bracket_symbol(int d, double eps, double p) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw ConstructionError("eps bracket: eps must lie in (0,1]");
  SeparableTerm t;
  t.freq = [eps, p](const Vec& xi) {
    return Cplx(std::pow(1.0 + eps * eps * xi.norm2(), 0.5 * p));
  };
  t.freq_grad = [eps, p, d](const Vec& xi) {
    CVec g(d);
    double w = std::pow(1.0 + eps * eps * xi.norm2(), 0.5 * p - 1.0);
    for (int j = 0; j < d; ++j) g[j] = p * eps * eps * xi[j] * w;
    return g;
  };
  return Symbol::from_terms(
      d, p, {t}, "eps-bracket:" + std::to_string(eps) + ":" + std::to_string(p));
}

Symbol make_constant_symbol(int d, Cplx c) {
  SeparableTerm t;
  t.freq = [c](const Vec&) { return c; };
  t.freq_grad = [d](const Vec&) { return CVec(d); };
  return Symbol::from_terms(d, 0.0, {t}, "const");
}

Symbol make_xi_coordinate_symbol(int d, int axis) {
  if (axis < 0 || axis >= d) throw DimensionError("xi coordinate: bad axis");
  SeparableTerm t;
  t.freq = [axis](const Vec& xi) { return Cplx(xi[axis]); };
  t.freq_grad = [axis, d](const Vec&) {
    CVec g(d);
    g[axis] = 1.0;
    return g;
  };
  return Symbol::from_terms(d, 1.0, {t}, "xi" + std::to_string(axis));
}

Symbol make_bump_multiplier(const BumpSpec& spec) {
  int d = spec.center.n;
  Vec c = spec.center, h = spec.halfwidth;
  double p = spec.plateau, L = spec.period;
  SeparableTerm t;
  t.space = [c, h, p, L, d](const Vec& x) {
    double v = 1.0;
    for (int i = 0; i < d; ++i) {
      v *= plateau(wrap_displacement(x[i] - c[i], L) / h[i], p);
      if (v == 0.0) return Cplx(0.0);
    }
    return Cplx(v);
  };
  t.space_grad = [c, h, p, L, d](const Vec& x) {
    std::array<double, kMaxDim> f{1, 1, 1}, df{0, 0, 0};
    for (int i = 0; i < d; ++i) {
      double u = wrap_displacement(x[i] - c[i], L) / h[i];
      f[i] = plateau(u, p);
      df[i] = plateau_deriv(u, p) / h[i];
    }
    CVec g(d);
    for (int i = 0; i < d; ++i) {
      double v = df[i];
      for (int j = 0; j < d; ++j)
        if (j != i) v *= f[j];
      g[i] = v;
    }
    return g;
  };
  BoxRegion support;
  support.lo = Vec(d);
  support.hi = Vec(d);
  for (int i = 0; i < d; ++i) {
    support.lo[i] = c[i] - h[i];
    support.hi[i] = c[i] + h[i];
  }
  return Symbol::from_terms(d, 0.0, {t}, "bump").with_x_support(support);
}

namespace {

// Smooth direction cutoff in the surrogate coordinate
// u = (1 - dir.xihat) / (1 - cos(half_angle)); plateau in u.
struct AngularCutoff {
  Vec dir;  // unit
  double one_minus_cos;
  double plateau_frac;

  double value(const Vec& xi, double r) const {
    if (r == 0.0) return 0.0;
    double c = dir.dot(xi) / r;
    double u = (1.0 - c) / one_minus_cos;
    if (u >= 1.0) return 0.0;
    return plateau(u, plateau_frac);
  }
  // d/dxi of value
  CVec grad(const Vec& xi, double r) const {
    CVec g(xi.n);
    if (r == 0.0) return g;
    double c = dir.dot(xi) / r;
    double u = (1.0 - c) / one_minus_cos;
    if (u >= 1.0 || u <= plateau_frac) return g;
    double dp = plateau_deriv(u, plateau_frac);
    // du/dxi_l = -(dir_l - c*xihat_l) / (r * one_minus_cos)
    for (int l = 0; l < xi.n; ++l) {
      double xihat_l = xi[l] / r;
      double du = -(dir[l] - c * xihat_l) / (r * one_minus_cos);
      g[l] = dp * du;
    }
    return g;
  }
};

}  // namespace

Symbol make_cone_cutoff(const ConeSpec& spec) {
  int d = spec.direction.n;
  double n = spec.direction.norm();
  if (n == 0.0) throw ConstructionError("cone cutoff: zero direction");
  AngularCutoff ang{spec.direction * (1.0 / n),
                    1.0 - std::cos(spec.half_angle), spec.plateau};
  double on = spec.lowcut_on, full = spec.lowcut_full, m = spec.order;
  SeparableTerm t;
  t.freq = [ang, on, full, m](const Vec& xi) {
    double r = xi.norm();
    double lc = ramp_up(r, on, full);
    if (lc == 0.0) return Cplx(0.0);
    double a = ang.value(xi, r);
    if (a == 0.0) return Cplx(0.0);
    double w = (m == 0.0) ? 1.0 : std::pow(1.0 + r * r, 0.5 * m);
    return Cplx(lc * a * w);
  };
  t.freq_grad = [ang, on, full, m, d](const Vec& xi) {
    CVec g(d);
    double r = xi.norm();
    if (r == 0.0) return g;
    double lc = ramp_up(r, on, full);
    double a = ang.value(xi, r);
    double w = (m == 0.0) ? 1.0 : std::pow(1.0 + r * r, 0.5 * m);
    double dlc = ramp_up_deriv(r, on, full);
    CVec da = ang.grad(xi, r);
    double dw_fac = (m == 0.0) ? 0.0
                               : m * std::pow(1.0 + r * r, 0.5 * m - 1.0);
    for (int l = 0; l < d; ++l) {
      double xihat_l = xi[l] / r;
      g[l] = Cplx(dlc * xihat_l * a * w) + da[l] * (lc * w) +
             Cplx(lc * a * dw_fac * xi[l]);
    }
    return g;
  };
  return Symbol::from_terms(d, spec.order, {t}, "cone");
}

Symbol make_radial_cutoff(int d, double C, double width) {
  SeparableTerm t;
  double a = C, b = C + width;
  t.freq = [a, b](const Vec& xi) {
    return Cplx(1.0 - ramp_up(xi.norm(), a, b));
  };
  t.freq_grad = [a, b, d](const Vec& xi) {
    CVec g(d);
    double r = xi.norm();
    if (r == 0.0) return g;
    double dr = -ramp_up_deriv(r, a, b);
    for (int l = 0; l < d; ++l) g[l] = dr * xi[l] / r;
    return g;
  };
  // chi_C is 1 at |xi| <= C and 0 at |xi| >= C + width
  return Symbol::from_terms(d, 0.0, {t}, "chi_C");
}

TubeSpec TubeSpec::shrunk(double factor) const {
  TubeSpec s = *this;
  s.par_halfwidth *= factor;
  s.perp_halfwidth *= factor;
  s.half_angle *= factor;
  return s;
}

Symbol make_tube_cutoff(const TubeSpec& spec) {
  int d = spec.center.n;
  double an = spec.axis.norm();
  if (an == 0.0) throw ConstructionError("tube cutoff: zero axis");
  Vec axis = spec.axis * (1.0 / an);
  // orthonormal completion (d = 2 or 3)
  std::vector<Vec> perp;
  if (d == 2) {
    perp.push_back(Vec{-axis[1], axis[0]});
  } else if (d == 3) {
    Vec up = std::abs(axis[2]) < 0.9 ? Vec{0, 0, 1} : Vec{1, 0, 0};
    Vec p1(d);
    double c = up.dot(axis);
    for (int i = 0; i < d; ++i) p1[i] = up[i] - c * axis[i];
    p1 = p1 * (1.0 / p1.norm());
    Vec p2{axis[1] * p1[2] - axis[2] * p1[1], axis[2] * p1[0] - axis[0] * p1[2],
           axis[0] * p1[1] - axis[1] * p1[0]};
    perp.push_back(p1);
    perp.push_back(p2);
  } else {
    throw DimensionError("tube cutoff: dimension must be 2 or 3");
  }

  Vec c = spec.center;
  double L = spec.period;
  double ph = spec.par_halfwidth, pp = spec.par_plateau;
  double qh = spec.perp_halfwidth, qp = spec.perp_plateau;

  SeparableTerm t;
  t.space = [c, axis, perp, L, ph, pp, qh, qp, d](const Vec& x) {
    Vec dx(d);
    for (int i = 0; i < d; ++i) dx[i] = wrap_displacement(x[i] - c[i], L);
    double v = plateau(dx.dot(axis) / ph, pp);
    if (v == 0.0) return Cplx(0.0);
    for (const auto& p : perp) {
      v *= plateau(dx.dot(p) / qh, qp);
      if (v == 0.0) return Cplx(0.0);
    }
    return Cplx(v);
  };
  t.space_grad = [c, axis, perp, L, ph, pp, qh, qp, d](const Vec& x) {
    Vec dx(d);
    for (int i = 0; i < d; ++i) dx[i] = wrap_displacement(x[i] - c[i], L);
    double upar = dx.dot(axis) / ph;
    double fpar = plateau(upar, pp), dfpar = plateau_deriv(upar, pp) / ph;
    std::vector<double> fperp, dfperp;
    for (const auto& p : perp) {
      double u = dx.dot(p) / qh;
      fperp.push_back(plateau(u, qp));
      dfperp.push_back(plateau_deriv(u, qp) / qh);
    }
    CVec g(d);
    for (int l = 0; l < d; ++l) {
      double sum = dfpar * axis[l];
      for (std::size_t j = 0; j < perp.size(); ++j) sum *= fperp[j];
      for (std::size_t j = 0; j < perp.size(); ++j) {
        double term = fpar * dfperp[j] * perp[j][l];
        for (std::size_t j2 = 0; j2 < perp.size(); ++j2)
          if (j2 != j) term *= fperp[j2];
        sum += term;
      }
      g[l] = sum;
    }
    return g;
  };

  ConeSpec cone;
  cone.direction = spec.direction;
  cone.half_angle = spec.half_angle;
  cone.plateau = spec.ang_plateau;
  cone.lowcut_on = spec.lowcut_on;
  cone.lowcut_full = spec.lowcut_full;
  cone.order = spec.order;
  Symbol conesym = make_cone_cutoff(cone);
  t.freq = conesym.terms().front().freq;
  t.freq_grad = conesym.terms().front().freq_grad;

  // bounding box of the spatial factor
  BoxRegion support;
  support.lo = Vec(d);
  support.hi = Vec(d);
  double rad = std::sqrt(ph * ph + static_cast<double>(perp.size()) * qh * qh);
  for (int i = 0; i < d; ++i) {
    support.lo[i] = c[i] - rad;
    support.hi[i] = c[i] + rad;
  }
  return Symbol::from_terms(d, spec.order, {t}, "tube")
      .with_x_support(support);
}

}  // namespace microloc
