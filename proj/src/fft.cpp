#include "microloc/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "microloc/errors.hpp"

namespace microloc {

namespace {

// FFTW plan creation is not thread safe; execution via fftw_execute_dft is.
// Plans are created with FFTW_ESTIMATE so the chosen algorithm (and therefore
// the exact floating point result) is reproducible run to run.
class PlanCache {
 public:
  fftw_plan get(const GridSpec& grid, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    Key key{grid.dim, grid.n[0], grid.n[1], grid.n[2], sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    int dims[kMaxDim];
    for (int i = 0; i < grid.dim; ++i) dims[i] = grid.n[i];
    // Plan on a scratch buffer; FFTW_UNALIGNED lets us execute on any array.
    std::vector<Cplx> scratch(grid.total());
    auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft(grid.dim, dims, ptr, ptr, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw Error("fftw: failed to create plan");
    plans_[key] = p;
    return p;
  }

 private:
  using Key = std::tuple<int, int, int, int, int>;
  std::map<Key, fftw_plan> plans_;
  std::mutex mu_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

std::vector<Cplx> fft_forward(const GridSpec& grid, const std::vector<Cplx>& v) {
  if (v.size() != grid.total()) throw GridMismatchError("fft: size mismatch");
  std::vector<Cplx> out(v);
  fftw_plan p = cache().get(grid, FFTW_FORWARD);
  auto* ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(p, ptr, ptr);
  double scale = 1.0 / static_cast<double>(grid.total());
  for (auto& z : out) z *= scale;
  return out;
}

std::vector<Cplx> fft_inverse(const GridSpec& grid, const std::vector<Cplx>& v) {
  if (v.size() != grid.total()) throw GridMismatchError("fft: size mismatch");
  std::vector<Cplx> out(v);
  fftw_plan p = cache().get(grid, FFTW_BACKWARD);
  auto* ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(p, ptr, ptr);
  return out;
}

}  // namespace microloc
