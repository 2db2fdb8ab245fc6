#include "chaoslab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "chaoslab/errors.hpp"

namespace chaoslab {

namespace {

// FFTW planning is not thread-safe; execution on plan-owned buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlans {
public:
  explicit FftPlans(int G) : G_(G) {
    const std::size_t n = static_cast<std::size_t>(G) * G;
    const std::size_t nc = static_cast<std::size_t>(G) * (G / 2 + 1);
    std::lock_guard lock(planner_mutex());
    real_ = fftw_alloc_real(n);
    cplx_ = fftw_alloc_complex(nc);
    fwd_ = fftw_plan_dft_r2c_2d(G, G, real_, cplx_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(G, G, cplx_, real_, FFTW_ESTIMATE);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(cplx_);
  }

  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(fwd_);
    const std::size_t nc = static_cast<std::size_t>(G_) * (G_ / 2 + 1);
    out.resize(nc);
    auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
    std::copy(c, c + nc, out.begin());
  }

  // c2r destroys its input, so the spectrum is copied into the plan buffer first.
  void inverse(const std::vector<std::complex<double>>& in, std::span<double> out) {
    auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
    std::copy(in.begin(), in.end(), c);
    fftw_execute(bwd_);
    const double scale = 1.0 / (static_cast<double>(G_) * G_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
  }

private:
  int G_;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

FftPlans& plans_for(int G) {
  thread_local std::map<int, std::unique_ptr<FftPlans>> cache;
  auto& slot = cache[G];
  if (!slot) slot = std::make_unique<FftPlans>(G);
  return *slot;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* op) {
  if (!(a == b)) throw DomainError(std::string(op) + ": grid mismatch");
}

int wrap_index(int i, int G) {
  i %= G;
  return i < 0 ? i + G : i;
}

}  // namespace

void GridSpec::validate() const {
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("grid: box length must be positive");
  if (G < 32 || (G & (G - 1)) != 0) throw DomainError("grid: G must be a power of two >= 32");
}

Vec2 wrap(Vec2 p, const GridSpec& spec) {
  auto w = [L = spec.L](double x) {
    double r = x + 0.5 * L;
    r -= L * std::floor(r / L);
    if (r >= L) r -= L;  // floor round-off at exact multiples
    return r - 0.5 * L;
  };
  return {w(p.x), w(p.y)};
}

Vec2 min_image(Vec2 a, Vec2 b, const GridSpec& spec) {
  Vec2 d = a - b;
  d.x -= spec.L * std::round(d.x / spec.L);
  d.y -= spec.L * std::round(d.y / spec.L);
  return d;
}

ScalarField2D::ScalarField2D(const GridSpec& spec, double fill)
    : spec_(spec), values_(spec.size(), fill) {}

ScalarField2D::ScalarField2D(const GridSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.size()) throw DomainError("field: value count does not match grid");
}

double ScalarField2D::integral() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * h() * h();
}

double ScalarField2D::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField2D::min() const { return *std::min_element(values_.begin(), values_.end()); }

bool ScalarField2D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField2D& ScalarField2D::operator+=(const ScalarField2D& o) {
  require_same_grid(spec_, o.spec_, "field +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField2D& ScalarField2D::operator-=(const ScalarField2D& o) {
  require_same_grid(spec_, o.spec_, "field -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField2D& ScalarField2D::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

double wavenumber(int i, const GridSpec& spec) {
  const int signed_i = i <= spec.G / 2 ? i : i - spec.G;
  return 2.0 * std::numbers::pi * signed_i / spec.L;
}

Spectrum forward_fft(const ScalarField2D& f) {
  Spectrum s{f.spec(), {}};
  plans_for(f.G()).forward(f.values(), s.coeffs);
  return s;
}

ScalarField2D inverse_fft(const Spectrum& s) {
  ScalarField2D out(s.spec);
  plans_for(s.spec.G).inverse(s.coeffs, out.values());
  return out;
}

namespace {

// Multiply every mode by symbol(kx, ky) where (kx, ky) are physical wavenumbers.
// FFTW's r2c layout stores the x index (last dimension) in the half axis.
template <class Symbol>
void apply_symbol(Spectrum& s, Symbol&& symbol) {
  const int G = s.spec.G;
  for (int iy = 0; iy < G; ++iy) {
    const double ky = wavenumber(iy, s.spec);
    for (int ix = 0; ix <= G / 2; ++ix) {
      const double kx = wavenumber(ix, s.spec);
      s.at(ix, iy) *= symbol(kx, ky, ix, iy);
    }
  }
}

}  // namespace

ScalarField2D helmholtz_solve(const ScalarField2D& rhs, double mu2) {
  if (!rhs.all_finite()) throw NumericalError("helmholtz_solve: non-finite right-hand side");
  if (!(mu2 > 0.0)) throw DomainError("helmholtz_solve: screening must be positive");
  Spectrum s = forward_fft(rhs);
  apply_symbol(s, [mu2](double kx, double ky, int, int) { return 1.0 / (mu2 + kx * kx + ky * ky); });
  return inverse_fft(s);
}

ScalarField2D laplacian(const ScalarField2D& f) {
  Spectrum s = forward_fft(f);
  apply_symbol(s, [](double kx, double ky, int, int) { return -(kx * kx + ky * ky); });
  return inverse_fft(s);
}

ScalarField2D derivative(const ScalarField2D& f, int order_x, int order_y) {
  const int G = f.G();
  Spectrum s = forward_fft(f);
  apply_symbol(s, [&](double kx, double ky, int ix, int iy) {
    std::complex<double> m = 1.0;
    for (int k = 0; k < order_x; ++k) m *= std::complex<double>(0.0, kx);
    for (int k = 0; k < order_y; ++k) m *= std::complex<double>(0.0, ky);
    // The Nyquist mode has no sign; odd derivatives of it are not real.
    if ((order_x % 2 == 1 && ix == G / 2) || (order_y % 2 == 1 && iy == G / 2)) m = 0.0;
    return m;
  });
  return inverse_fft(s);
}

Spectrum kernel_spectrum(const ScalarField2D& k) {
  Spectrum s = forward_fft(k);
  const double h2 = k.h() * k.h();
  // Kernel origin sits at node G/2: shifting the circular result by G/2 is (-1)^(ix+iy).
  apply_symbol(s, [h2](double, double, int ix, int iy) { return ((ix + iy) % 2 == 0) ? h2 : -h2; });
  return s;
}

ScalarField2D convolve_with(const ScalarField2D& f, const Spectrum& kernel) {
  require_same_grid(f.spec(), kernel.spec, "convolve");
  Spectrum s = forward_fft(f);
  for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] *= kernel.coeffs[i];
  return inverse_fft(s);
}

ScalarField2D convolve(const ScalarField2D& f, const ScalarField2D& k) {
  require_same_grid(f.spec(), k.spec(), "convolve");
  return convolve_with(f, kernel_spectrum(k));
}

CicStencil cic_stencil(Vec2 p, const GridSpec& spec) {
  const double h = spec.h();
  const double sx = (p.x + 0.5 * spec.L) / h;
  const double sy = (p.y + 0.5 * spec.L) / h;
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  CicStencil st;
  st.ix[0] = wrap_index(static_cast<int>(fx), spec.G);
  st.ix[1] = wrap_index(st.ix[0] + 1, spec.G);
  st.iy[0] = wrap_index(static_cast<int>(fy), spec.G);
  st.iy[1] = wrap_index(st.iy[0] + 1, spec.G);
  st.wx[1] = sx - fx;
  st.wx[0] = 1.0 - st.wx[1];
  st.wy[1] = sy - fy;
  st.wy[0] = 1.0 - st.wy[1];
  return st;
}

ScalarField2D deposit_weighted(std::span<const Vec2> points, std::span<const double> weights,
                               const GridSpec& spec) {
  if (points.size() != weights.size()) throw DomainError("deposit: weight count mismatch");
  ScalarField2D out(spec);
  const double inv_h2 = 1.0 / (spec.h() * spec.h());
  for (std::size_t n = 0; n < points.size(); ++n) {
    const CicStencil st = cic_stencil(points[n], spec);
    const double m = weights[n] * inv_h2;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) out(st.ix[a], st.iy[b]) += m * st.wx[a] * st.wy[b];
  }
  return out;
}

ScalarField2D deposit(std::span<const Vec2> points, const GridSpec& spec) {
  if (points.empty()) return ScalarField2D(spec);
  std::vector<double> w(points.size(), 1.0 / static_cast<double>(points.size()));
  return deposit_weighted(points, w, spec);
}

double interpolate(const ScalarField2D& f, Vec2 p) {
  const CicStencil st = cic_stencil(p, f.spec());
  double v = 0.0;
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a) v += st.wx[a] * st.wy[b] * f(st.ix[a], st.iy[b]);
  return v;
}

void write_field_csv(std::ostream& os, const ScalarField2D& f, double t) {
  os << std::setprecision(17);
  os << "# " << f.G() << ' ' << f.spec().L << ' ' << t << '\n';
  for (int iy = 0; iy < f.G(); ++iy) {
    for (int ix = 0; ix < f.G(); ++ix) {
      if (ix) os << ',';
      os << f(ix, iy);
    }
    os << '\n';
  }
}

void write_field_csv(const std::string& path, const ScalarField2D& f, double t) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  write_field_csv(os, f, t);
}

ScalarField2D read_field_csv(std::istream& is, double* t) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw Error("field csv: missing header");
  std::istringstream hdr(line.substr(2));
  GridSpec spec;
  double time = 0.0;
  if (!(hdr >> spec.G >> spec.L >> time)) throw Error("field csv: malformed header");
  spec.validate();
  std::vector<double> values;
  values.reserve(spec.size());
  for (int iy = 0; iy < spec.G; ++iy) {
    if (!std::getline(is, line)) throw Error("field csv: truncated");
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
  }
  if (t) *t = time;
  return ScalarField2D(spec, std::move(values));
}

}  // namespace chaoslab
