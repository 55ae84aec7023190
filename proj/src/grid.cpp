#include "microloc/grid.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "microloc/errors.hpp"
#include "microloc/fft.hpp"

namespace microloc {

namespace {
bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

GridSpec GridSpec::make(int dim, int n_per_axis, double period_all) {
  std::array<int, kMaxDim> n{0, 0, 0};
  std::array<double, kMaxDim> p{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) {
    n[i] = n_per_axis;
    p[i] = period_all;
  }
  return make_anisotropic(dim, n, p);
}

GridSpec GridSpec::make_anisotropic(int dim, const std::array<int, kMaxDim>& n,
                                    const std::array<double, kMaxDim>& period) {
  if (dim < 1 || dim > kMaxDim)
    throw DimensionError("grid: dim must be 1..3, got " + std::to_string(dim));
  for (int i = 0; i < dim; ++i) {
    if (n[i] < 8 || !is_power_of_two(n[i]))
      throw ConstructionError("grid: n_points must be a power of two >= 8");
    if (!(period[i] > 0.0)) throw ConstructionError("grid: period must be > 0");
  }
  GridSpec g;
  g.dim = dim;
  g.n = n;
  g.period = period;
  return g;
}

Field::Field(GridSpec grid, std::vector<Cplx> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.total())
    throw GridMismatchError("field: value count does not match grid");
}

Field Field::from_spectrum(GridSpec grid, std::vector<Cplx> spectrum) {
  if (spectrum.size() != grid.total())
    throw GridMismatchError("field: spectrum count does not match grid");
  Field f(grid, fft_inverse(grid, spectrum));
  f.spectrum_ = std::make_shared<const std::vector<Cplx>>(std::move(spectrum));
  return f;
}

const std::vector<Cplx>& Field::spectrum() const {
  if (!spectrum_)
    spectrum_ = std::make_shared<const std::vector<Cplx>>(
        fft_forward(grid_, values_));
  return *spectrum_;
}

Field operator+(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw GridMismatchError("field +: grid mismatch");
  std::vector<Cplx> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  return Field(a.grid(), std::move(v));
}

Field operator-(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw GridMismatchError("field -: grid mismatch");
  std::vector<Cplx> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  return Field(a.grid(), std::move(v));
}

Field operator*(Cplx c, const Field& a) {
  std::vector<Cplx> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * a.values()[i];
  return Field(a.grid(), std::move(v));
}

namespace {
constexpr char kMagic[4] = {'M', 'L', 'F', 'D'};
}

void write_field(const Field& f, const std::string& path,
                 const std::string& label) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_field: cannot open " + path);
  out.write(kMagic, 4);
  uint32_t version = 1, dim = static_cast<uint32_t>(f.grid().dim);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  for (int i = 0; i < f.grid().dim; ++i) {
    uint32_t n = static_cast<uint32_t>(f.grid().n[i]);
    out.write(reinterpret_cast<const char*>(&n), 4);
  }
  for (int i = 0; i < f.grid().dim; ++i) {
    double p = f.grid().period[i];
    out.write(reinterpret_cast<const char*>(&p), 8);
  }
  // row-major interleaved re/im float64
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(Cplx)));
  if (!out) throw Error("write_field: write failed for " + path);

  nlohmann::json meta;
  meta["format"] = "mlfd-v1";
  meta["dim"] = f.grid().dim;
  for (int i = 0; i < f.grid().dim; ++i) {
    meta["n"].push_back(f.grid().n[i]);
    meta["period"].push_back(f.grid().period[i]);
  }
  meta["layout"] = "row-major, interleaved re/im float64";
  if (!label.empty()) meta["label"] = label;
  std::ofstream sidecar(path + ".json");
  sidecar << meta.dump(2) << "\n";
}

Field read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_field: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error("read_field: bad magic in " + path);
  uint32_t version = 0, dim = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  if (version != 1) throw Error("read_field: unsupported version");
  if (dim < 1 || dim > static_cast<uint32_t>(kMaxDim))
    throw Error("read_field: bad dimension");
  std::array<int, kMaxDim> n{0, 0, 0};
  std::array<double, kMaxDim> period{0.0, 0.0, 0.0};
  for (uint32_t i = 0; i < dim; ++i) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    n[i] = static_cast<int>(v);
  }
  for (uint32_t i = 0; i < dim; ++i)
    in.read(reinterpret_cast<char*>(&period[i]), 8);
  GridSpec g = GridSpec::make_anisotropic(static_cast<int>(dim), n, period);
  std::vector<Cplx> vals(g.total());
  in.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(Cplx)));
  if (!in) throw Error("read_field: truncated file " + path);
  return Field(g, std::move(vals));
}

}  // namespace microloc
