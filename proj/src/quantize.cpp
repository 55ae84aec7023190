#include "microloc/quantize.hpp"

#include <cmath>

#include "microloc/errors.hpp"
#include "microloc/fft.hpp"

namespace microloc {

namespace {

std::vector<Cplx> conj_all(const std::vector<Cplx>& v) {
  std::vector<Cplx> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::conj(v[i]);
  return out;
}

}  // namespace

struct Operator::State {
  Symbol sym;
  GridSpec grid;
  Symbol::Structure structure;

  // structured paths: sampled factor tables per separable term
  struct TermTable {
    std::vector<Cplx> space;  // empty => 1
    std::vector<Cplx> freq;   // empty => 1
  };
  std::vector<TermTable> terms;
  std::vector<Cplx> combined_freq;   // XIndependent: single multiplier table
  std::vector<Cplx> combined_space;  // XiIndependent: single space table

  // generic path
  std::vector<Cplx> prefac;        // per-frequency prefactor values
  std::vector<uint32_t> active_k;  // frequencies with prefac != 0
  std::vector<uint32_t> rows;      // x indices inside the support box
  std::vector<Vec> coords, freqs;  // cached lattice points
  std::array<std::vector<Cplx>, kMaxDim> phase;  // phase[ax][xi*n + ki]

  bool is_structured() const {
    return structure != Symbol::Structure::Generic;
  }
};

Operator::Operator(Symbol sym, GridSpec grid, OpMode mode) : mode_(mode) {
  if (!sym.valid()) throw ConstructionError("operator: invalid symbol");
  if (sym.dim() != grid.dim)
    throw DimensionError("quantize: symbol dimension " +
                         std::to_string(sym.dim()) + " != grid dimension " +
                         std::to_string(grid.dim));
  auto st = std::make_shared<State>();
  st->sym = sym;
  st->grid = grid;
  st->structure = sym.structure();
  const std::size_t total = grid.total();

  if (st->is_structured()) {
    for (const auto& term : sym.terms()) {
      State::TermTable tab;
      if (term.space) {
        tab.space.resize(total);
        for (std::size_t i = 0; i < total; ++i)
          tab.space[i] = term.space(grid.point(grid.unflatten(i)));
      }
      if (term.freq) {
        tab.freq.resize(total);
        for (std::size_t i = 0; i < total; ++i)
          tab.freq[i] = term.freq(grid.frequency(grid.unflatten(i)));
      }
      st->terms.push_back(std::move(tab));
    }
    // keep tables consistent with Symbol::eval's support clamp
    if (sym.x_support()) {
      const auto& support = *sym.x_support();
      for (auto& tab : st->terms) {
        if (tab.space.empty()) continue;
        for (std::size_t i = 0; i < total; ++i) {
          Vec x = grid.point(grid.unflatten(i));
          bool in = true;
          for (int ax = 0; ax < grid.dim && in; ++ax) {
            double L = grid.period[ax];
            bool axin = false;
            for (int s = -1; s <= 1 && !axin; ++s) {
              double w = x[ax] + s * L;
              axin = (w >= support.lo[ax] && w <= support.hi[ax]);
            }
            in = axin;
          }
          if (!in) tab.space[i] = 0.0;
        }
      }
    }
    if (st->structure == Symbol::Structure::XIndependent) {
      st->combined_freq.assign(total, 0.0);
      for (const auto& tab : st->terms)
        for (std::size_t i = 0; i < total; ++i)
          st->combined_freq[i] += tab.freq.empty() ? Cplx(1.0) : tab.freq[i];
    }
    if (st->structure == Symbol::Structure::XiIndependent) {
      st->combined_space.assign(total, 0.0);
      for (const auto& tab : st->terms)
        for (std::size_t i = 0; i < total; ++i)
          st->combined_space[i] += tab.space.empty() ? Cplx(1.0) : tab.space[i];
    }
  } else {
    // generic path tables
    st->coords.reserve(0);
    st->freqs.resize(total);
    for (std::size_t i = 0; i < total; ++i)
      st->freqs[i] = grid.frequency(grid.unflatten(i));
    st->prefac.assign(total, Cplx(1.0));
    if (sym.freq_prefactor()) {
      for (std::size_t i = 0; i < total; ++i)
        st->prefac[i] = sym.freq_prefactor()(st->freqs[i]);
    }
    st->active_k.clear();
    for (std::size_t i = 0; i < total; ++i)
      if (st->prefac[i] != 0.0) st->active_k.push_back(uint32_t(i));

    st->coords.resize(total);
    for (std::size_t i = 0; i < total; ++i)
      st->coords[i] = grid.point(grid.unflatten(i));
    st->rows.clear();
    const auto& support = sym.x_support();
    for (std::size_t i = 0; i < total; ++i) {
      if (!support) {
        st->rows.push_back(uint32_t(i));
        continue;
      }
      // periodic containment, consistent with Symbol::eval
      const Vec& x = st->coords[i];
      bool in = true;
      for (int ax = 0; ax < grid.dim && in; ++ax) {
        double L = grid.period[ax];
        bool axin = false;
        for (int s = -1; s <= 1 && !axin; ++s) {
          double w = x[ax] + s * L;
          axin = (w >= support->lo[ax] && w <= support->hi[ax]);
        }
        in = axin;
      }
      if (in) st->rows.push_back(uint32_t(i));
    }
    for (int ax = 0; ax < grid.dim; ++ax) {
      int n = grid.n[ax];
      st->phase[ax].resize(std::size_t(n) * n);
      for (int xi = 0; xi < n; ++xi) {
        double xc = grid.coord(ax, xi);
        for (int ki = 0; ki < n; ++ki) {
          double w = grid.freq(ax, ki) * xc;
          st->phase[ax][std::size_t(xi) * n + ki] = Cplx(std::cos(w), std::sin(w));
        }
      }
    }
  }
  state_ = std::move(st);
}

const Symbol& Operator::symbol() const { return state_->sym; }
const GridSpec& Operator::grid() const { return state_->grid; }
OpMode Operator::mode() const { return mode_; }

Operator Operator::adjoint() const {
  Operator a = *this;
  a.mode_ = (mode_ == OpMode::Left) ? OpMode::AdjointOfLeft : OpMode::Left;
  return a;
}

Operator quantize(const Symbol& a, const GridSpec& grid) {
  return Operator(a, grid, OpMode::Left);
}

namespace {

// Direct lattice sum for the generic left apply, restricted to support rows
// and to frequencies where both the prefactor and the input spectrum are
// nonzero.
Field generic_left_apply(const Operator::State& st, const Field& u);
Field generic_adjoint_apply(const Operator::State& st, const Field& u);

}  // namespace

Field Operator::apply(const Field& u) const {
  const State& st = *state_;
  if (!(u.grid() == st.grid))
    throw GridMismatchError("operator apply: field grid mismatch");
  const std::size_t total = st.grid.total();
  const bool adj = (mode_ == OpMode::AdjointOfLeft);

  switch (st.structure) {
    case Symbol::Structure::XIndependent: {
      const auto& uh = u.spectrum();
      std::vector<Cplx> vh(total);
      if (!adj) {
        for (std::size_t i = 0; i < total; ++i)
          vh[i] = st.combined_freq[i] * uh[i];
      } else {
        for (std::size_t i = 0; i < total; ++i)
          vh[i] = std::conj(st.combined_freq[i]) * uh[i];
      }
      return Field::from_spectrum(st.grid, std::move(vh));
    }
    case Symbol::Structure::XiIndependent: {
      std::vector<Cplx> v(total);
      if (!adj) {
        for (std::size_t i = 0; i < total; ++i)
          v[i] = st.combined_space[i] * u.values()[i];
      } else {
        for (std::size_t i = 0; i < total; ++i)
          v[i] = std::conj(st.combined_space[i]) * u.values()[i];
      }
      return Field(st.grid, std::move(v));
    }
    case Symbol::Structure::Separable: {
      std::vector<Cplx> acc(total, 0.0);
      if (!adj) {
        const auto& uh = u.spectrum();
        std::vector<Cplx> tmp(total);
        for (const auto& term : st.terms) {
          for (std::size_t i = 0; i < total; ++i)
            tmp[i] = term.freq.empty() ? uh[i] : term.freq[i] * uh[i];
          std::vector<Cplx> ts = fft_inverse(st.grid, tmp);
          if (term.space.empty()) {
            for (std::size_t i = 0; i < total; ++i) acc[i] += ts[i];
          } else {
            for (std::size_t i = 0; i < total; ++i)
              acc[i] += term.space[i] * ts[i];
          }
        }
      } else {
        // A* = sum_t F^{-1} conj(w_t) F conj(c_t)
        for (const auto& term : st.terms) {
          std::vector<Cplx> t1(total);
          if (term.space.empty()) {
            t1 = u.values();
          } else {
            for (std::size_t i = 0; i < total; ++i)
              t1[i] = std::conj(term.space[i]) * u.values()[i];
          }
          std::vector<Cplx> t2 = fft_forward(st.grid, t1);
          if (!term.freq.empty())
            for (std::size_t i = 0; i < total; ++i)
              t2[i] *= std::conj(term.freq[i]);
          std::vector<Cplx> t3 = fft_inverse(st.grid, t2);
          for (std::size_t i = 0; i < total; ++i) acc[i] += t3[i];
        }
      }
      return Field(st.grid, std::move(acc));
    }
    case Symbol::Structure::Generic:
      return adj ? generic_adjoint_apply(st, u) : generic_left_apply(st, u);
  }
  throw Error("operator apply: unreachable");
}

namespace {

Field generic_left_apply(const Operator::State& st, const Field& u) {
  const GridSpec& g = st.grid;
  const std::size_t total = g.total();
  const auto& uh = u.spectrum();
  Symbol::Eval eval = st.sym.core();
  if (!eval) {
    const Symbol& sym = st.sym;
    eval = [sym](const Vec& x, const Vec& xi) { return sym.eval(x, xi); };
  }

  // active frequencies: prefactor and spectrum both nonzero
  std::vector<uint32_t> ks;
  ks.reserve(st.active_k.size());
  for (uint32_t k : st.active_k)
    if (uh[k] != 0.0) ks.push_back(k);

  std::vector<Cplx> weighted(ks.size());
  for (std::size_t j = 0; j < ks.size(); ++j)
    weighted[j] = st.prefac[ks[j]] * uh[ks[j]];

  std::vector<Cplx> out(total, 0.0);
  const int d = g.dim;
  std::vector<std::array<int, kMaxDim>> kidx(ks.size());
  for (std::size_t j = 0; j < ks.size(); ++j) kidx[j] = g.unflatten(ks[j]);

  for (uint32_t row : st.rows) {
    const Vec& x = st.coords[row];
    std::array<int, kMaxDim> xi_idx = g.unflatten(row);
    Cplx acc = 0.0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      Cplx ph = 1.0;
      for (int ax = 0; ax < d; ++ax)
        ph *= st.phase[ax][std::size_t(xi_idx[ax]) * g.n[ax] + kidx[j][ax]];
      acc += eval(x, st.freqs[ks[j]]) * weighted[j] * ph;
    }
    out[row] = acc;
  }
  return Field(g, std::move(out));
}

Field generic_adjoint_apply(const Operator::State& st, const Field& u) {
  const GridSpec& g = st.grid;
  const std::size_t total = g.total();
  Symbol::Eval eval = st.sym.core();
  if (!eval) {
    const Symbol& sym = st.sym;
    eval = [sym](const Vec& x, const Vec& xi) { return sym.eval(x, xi); };
  }
  const int d = g.dim;
  const double invN = 1.0 / double(total);

  std::vector<Cplx> spec(total, 0.0);
  std::vector<std::array<int, kMaxDim>> rowidx(st.rows.size());
  for (std::size_t r = 0; r < st.rows.size(); ++r)
    rowidx[r] = g.unflatten(st.rows[r]);

  for (uint32_t k : st.active_k) {
    std::array<int, kMaxDim> ki = g.unflatten(k);
    const Vec& xi = st.freqs[k];
    Cplx acc = 0.0;
    for (std::size_t r = 0; r < st.rows.size(); ++r) {
      uint32_t row = st.rows[r];
      Cplx ph = 1.0;
      for (int ax = 0; ax < d; ++ax)
        ph *= st.phase[ax][std::size_t(rowidx[r][ax]) * g.n[ax] + ki[ax]];
      // conj(a(x,xi) e^{i x.xi}) v(x)
      acc += std::conj(eval(st.coords[row], xi) * st.prefac[k] * ph) *
             u.values()[row];
    }
    spec[k] = acc * invN;
  }
  return Field::from_spectrum(g, std::move(spec));
}

}  // namespace

Field apply_chain(const std::vector<Operator>& ops, const Field& u) {
  Field v = u;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) v = it->apply(v);
  return v;
}

double sobolev_norm(const Field& u, double s) {
  const GridSpec& g = u.grid();
  const auto& uh = u.spectrum();
  double vol = g.volume();
  double acc = 0.0;
  for (std::size_t i = 0; i < uh.size(); ++i) {
    double w = 1.0 + g.frequency(g.unflatten(i)).norm2();
    acc += std::pow(w, s) * std::norm(uh[i]);
  }
  return std::sqrt(vol * acc);
}

double l2_norm_physical(const Field& u) {
  double acc = 0.0;
  for (const auto& z : u.values()) acc += std::norm(z);
  return std::sqrt(u.grid().cell_volume() * acc);
}

Cplx inner(const Field& u, const Field& v) {
  if (!(u.grid() == v.grid())) throw GridMismatchError("inner: grid mismatch");
  Cplx acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    acc += u.values()[i] * std::conj(v.values()[i]);
  return acc * u.grid().cell_volume();
}

Operator lambda_operator(double s, const GridSpec& grid) {
  return quantize(make_bracket_symbol(grid.dim, s), grid);
}

Operator lambda_reg(double eps, double r, const GridSpec& grid) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw ConstructionError("lambda_reg: eps must lie in (0,1]");
  return quantize(make_eps_bracket_symbol(grid.dim, eps, -r), grid);
}

Field apply_dalembertian(const Field& u) {
  const GridSpec& g = u.grid();
  const auto& uh = u.spectrum();
  std::vector<Cplx> vh(uh.size());
  for (std::size_t i = 0; i < uh.size(); ++i) {
    Vec xi = g.frequency(g.unflatten(i));
    double p = xi[0] * xi[0];
    for (int j = 1; j < g.dim; ++j) p -= xi[j] * xi[j];
    vh[i] = p * uh[i];
  }
  return Field::from_spectrum(g, std::move(vh));
}

}  // namespace microloc
