#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace chaoslab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
};

// Periodic square box [-L/2, L/2)^2 sampled by G nodes per side.
// Node (ix, iy) sits at (-L/2 + ix*h, -L/2 + iy*h); the origin is node (G/2, G/2).
struct GridSpec {
  double L = 10.0;
  int G = 256;

  double h() const { return L / G; }
  std::size_t size() const { return static_cast<std::size_t>(G) * G; }
  double coord(int i) const { return -0.5 * L + i * h(); }
  // Throws DomainError unless G >= 32 is a power of two and L > 0.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Wrap a point into [-L/2, L/2)^2.
Vec2 wrap(Vec2 p, const GridSpec& spec);
// Minimum-image displacement a - b on the torus.
Vec2 min_image(Vec2 a, Vec2 b, const GridSpec& spec);

// Real field on a periodic grid, row-major: values[iy * G + ix].
class ScalarField2D {
public:
  ScalarField2D() = default;
  explicit ScalarField2D(const GridSpec& spec, double fill = 0.0);
  ScalarField2D(const GridSpec& spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  int G() const { return spec_.G; }
  double h() const { return spec_.h(); }

  double& operator()(int ix, int iy) { return values_[index(ix, iy)]; }
  double operator()(int ix, int iy) const { return values_[index(ix, iy)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  // h^2 * sum of values.
  double integral() const;
  double max() const;
  double min() const;
  bool all_finite() const;

  ScalarField2D& operator+=(const ScalarField2D& o);
  ScalarField2D& operator-=(const ScalarField2D& o);
  ScalarField2D& operator*=(double s);
  friend ScalarField2D operator+(ScalarField2D a, const ScalarField2D& b) { return a += b; }
  friend ScalarField2D operator-(ScalarField2D a, const ScalarField2D& b) { return a -= b; }
  friend ScalarField2D operator*(double s, ScalarField2D a) { return a *= s; }

  // Sample f(x, y) at every node.
  template <class F>
  static ScalarField2D sample(const GridSpec& spec, F&& f) {
    ScalarField2D out(spec);
    for (int iy = 0; iy < spec.G; ++iy)
      for (int ix = 0; ix < spec.G; ++ix) out(ix, iy) = f(spec.coord(ix), spec.coord(iy));
    return out;
  }

private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * spec_.G + ix;
  }

  GridSpec spec_;
  std::vector<double> values_;
};

// Half-complex spectrum of a real G x G field (FFTW r2c layout: G rows of G/2+1).
struct Spectrum {
  GridSpec spec;
  std::vector<std::complex<double>> coeffs;

  int cols() const { return spec.G / 2 + 1; }
  std::complex<double>& at(int kx, int ky) { return coeffs[static_cast<std::size_t>(ky) * cols() + kx]; }
  std::complex<double> at(int kx, int ky) const { return coeffs[static_cast<std::size_t>(ky) * cols() + kx]; }
};

Spectrum forward_fft(const ScalarField2D& f);
// Normalized inverse (1/G^2), so inverse_fft(forward_fft(f)) == f.
ScalarField2D inverse_fft(const Spectrum& s);
// Physical angular wavenumber of mode index i (0 <= i < G).
double wavenumber(int i, const GridSpec& spec);

// (-Delta + mu2) v = rhs on the torus, with the spectral Laplacian.
ScalarField2D helmholtz_solve(const ScalarField2D& rhs, double mu2 = 1.0);
// Spectral Laplacian.
ScalarField2D laplacian(const ScalarField2D& f);
// Spectral partial derivatives; Nyquist modes of odd derivatives are dropped.
ScalarField2D derivative(const ScalarField2D& f, int order_x, int order_y);

// Spectrum of a kernel field k (centred at the origin node) prepared for
// convolve_with: includes the h^2 factor and the shift back to the physical layout.
Spectrum kernel_spectrum(const ScalarField2D& k);
// (f * k)(x_i) = h^2 sum_j f(x_j) k(x_i - x_j), where k is stored centred at the origin node.
ScalarField2D convolve(const ScalarField2D& f, const ScalarField2D& k);
ScalarField2D convolve_with(const ScalarField2D& f, const Spectrum& kernel);

// Cloud-in-cell deposit of point masses 1/N; integrates to 1.
ScalarField2D deposit(std::span<const Vec2> points, const GridSpec& spec);
// Deposit with per-point weights (mass weight_i, not divided by N).
ScalarField2D deposit_weighted(std::span<const Vec2> points, std::span<const double> weights,
                               const GridSpec& spec);
// Periodic bilinear interpolation.
double interpolate(const ScalarField2D& f, Vec2 p);

// CIC stencil of a point: the four nodes and their weights.
struct CicStencil {
  int ix[2];
  int iy[2];
  double wx[2];
  double wy[2];
};
CicStencil cic_stencil(Vec2 p, const GridSpec& spec);

// Snapshot format: header "# G L t", then G rows of G values.
void write_field_csv(std::ostream& os, const ScalarField2D& f, double t);
void write_field_csv(const std::string& path, const ScalarField2D& f, double t);
ScalarField2D read_field_csv(std::istream& is, double* t = nullptr);

}  // namespace chaoslab
