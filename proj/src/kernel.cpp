#include "chaoslab/kernel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "chaoslab/errors.hpp"

namespace chaoslab {

namespace {

constexpr double kTruncationTolerance = 1e-8;
constexpr double kRangeMultiple = 8.0;

double bump_profile(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

// 1 / integral of the bump over the unit disc.
double bump_normalization() {
  static const double c = [] {
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double mass = integrator.integrate(
        [](double r) { return 2.0 * std::numbers::pi * r * bump_profile(r * r); }, 0.0, 1.0);
    return 1.0 / mass;
  }();
  return c;
}

}  // namespace

void YukawaParams::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("yukawa: mu must be positive");
  if (!(chi >= 0.0) || !std::isfinite(chi)) throw DomainError("yukawa: chi must be non-negative");
}

void Mollifier::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mollifier: eps must lie in (0, 1)");
}

double yukawa_eval(double r, const YukawaParams& p) {
  if (!(r > 0.0)) throw DomainError("yukawa_eval: r must be positive (log singularity at 0)");
  p.validate();
  // t = e^s turns the integrand into (4 pi)^-1 exp(-r^2 e^-s / 4 - mu^2 e^s), a
  // doubly-exponentially decaying analytic function of s, so the trapezoidal rule
  // converges geometrically. Centre on the maximiser e^s = r / (2 mu).
  const double a = 0.25 * r * r;
  const double b = p.mu * p.mu;
  const double centre = std::log(r / (2.0 * p.mu));
  const double step = 0.05;
  auto integrand = [&](double s) { return std::exp(-a * std::exp(-s) - b * std::exp(s)); };

  double sum = integrand(centre);
  for (int dir : {-1, 1}) {
    for (int k = 1; k < 4000; ++k) {
      const double term = integrand(centre + dir * k * step);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
  }
  return p.chi * sum * step / (4.0 * std::numbers::pi);
}

double mollifier_eval(Vec2 x, const Mollifier& m) {
  m.validate();
  const double inv = 1.0 / m.eps;
  const double r2 = (x.x * x.x + x.y * x.y) * inv * inv;
  return inv * inv * bump_normalization() * bump_profile(r2);
}

ScalarField2D mollifier_field(const GridSpec& spec, const Mollifier& m) {
  spec.validate();
  m.validate();
  ScalarField2D j = ScalarField2D::sample(spec, [&](double x, double y) {
    return mollifier_eval({x, y}, m);
  });
  const double mass = j.integral();
  if (!(mass > 0.0)) throw DomainError("mollifier_field: eps not resolved by the grid");
  j *= 1.0 / mass;
  return j;
}

ScalarField2D PotentialKernel::grad_norm() const {
  ScalarField2D out(spec());
  auto gx = grad_x_.values();
  auto gy = grad_y_.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::hypot(gx[i], gy[i]);
  return out;
}

PotentialKernel build_kernel(const YukawaParams& p, const Mollifier& m, const GridSpec& g) {
  p.validate();
  m.validate();
  g.validate();
  if (g.h() > 0.25 * m.eps * (1.0 + 1e-12))
    throw DomainError("build_kernel: grid spacing h must be <= eps/4");

  PotentialKernel k;
  k.params_ = p;
  k.eps_ = m.eps;
  k.mollifier_ = mollifier_field(g, m);
  // (-Delta + mu^2)^-1 is convolution with the Yukawa kernel, so Phi^eps = solve(chi j^eps).
  k.table_ = helmholtz_solve(p.chi * k.mollifier_, p.mu * p.mu);
  k.grad_x_ = derivative(k.table_, 1, 0);
  k.grad_y_ = derivative(k.table_, 0, 1);
  k.spectrum_ = kernel_spectrum(k.table_);
  k.boundary_value_ = yukawa_eval(0.5 * g.L, {p.mu, 1.0});
  k.truncation_flag_ = k.boundary_value_ > kTruncationTolerance || g.L < kRangeMultiple / p.mu;
  return k;
}

KernelNorms norm_report(const PotentialKernel& k) {
  const ScalarField2D hxx = derivative(k.table(), 2, 0);
  const ScalarField2D hyy = derivative(k.table(), 0, 2);
  const ScalarField2D hxy = derivative(k.table(), 1, 1);
  const double h2 = k.spec().h() * k.spec().h();

  KernelNorms n;
  auto phi = k.table().values();
  auto gx = k.grad_x().values();
  auto gy = k.grad_y().values();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double grad = std::hypot(gx[i], gy[i]);
    const double a = hxx.values()[i], c = hyy.values()[i], b = hxy.values()[i];
    const double hess = std::abs(0.5 * (a + c)) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    n.sup_phi = std::max(n.sup_phi, std::abs(phi[i]));
    n.sup_grad = std::max(n.sup_grad, grad);
    n.sup_hess = std::max(n.sup_hess, hess);
    n.l1_phi += std::abs(phi[i]) * h2;
    n.l1_grad += grad * h2;
  }
  return n;
}

void write_kernel_csv(std::ostream& os, const PotentialKernel& k) {
  const GridSpec& g = k.spec();
  os << std::setprecision(17) << "x,y,phi,dphi_dx,dphi_dy\n";
  for (int iy = 0; iy < g.G; ++iy)
    for (int ix = 0; ix < g.G; ++ix)
      os << g.coord(ix) << ',' << g.coord(iy) << ',' << k.table()(ix, iy) << ','
         << k.grad_x()(ix, iy) << ',' << k.grad_y()(ix, iy) << '\n';
}

}  // namespace chaoslab
