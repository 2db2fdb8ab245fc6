#include "chaoslab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace chaoslab {

namespace {

constexpr double kNegativeFloor = -1e-10;
constexpr double kClipMassLimit = 1e-9;
constexpr double kLogSupport = 1e-8;

double gaussian_pdf(Vec2 x, const GaussianBlob& b) {
  const Vec2 d = x - b.center;
  const double s2 = b.sigma * b.sigma;
  return std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * s2)) / (2.0 * std::numbers::pi * s2);
}

}  // namespace

InitialDensity InitialDensity::gaussian(Vec2 center, double sigma) {
  InitialDensity d;
  d.shape = std::vector<GaussianBlob>{{center, sigma, 1.0}};
  return d;
}

void InitialDensity::validate() const {
  if (const auto* blobs = std::get_if<std::vector<GaussianBlob>>(&shape)) {
    if (blobs->empty()) throw DomainError("initial: mixture needs at least one component");
    double total = 0.0;
    for (const auto& b : *blobs) {
      if (!(b.sigma > 0.0)) throw DomainError("initial: sigma must be positive");
      if (!(b.weight > 0.0)) throw DomainError("initial: weights must be positive");
      total += b.weight;
    }
    if (!std::isfinite(total)) throw DomainError("initial: weights not finite");
  } else {
    if (!(std::get<UniformDisk>(shape).radius > 0.0)) throw DomainError("initial: radius must be positive");
  }
}

ScalarField2D InitialDensity::on_grid(const GridSpec& spec) const {
  validate();
  ScalarField2D u(spec);
  if (const auto* blobs = std::get_if<std::vector<GaussianBlob>>(&shape)) {
    for (const auto& b : *blobs) {
      u += b.weight * ScalarField2D::sample(spec, [&](double x, double y) {
        // Periodic images keep the sampled density smooth across the seam.
        return gaussian_pdf(min_image({x, y}, b.center, spec) + b.center, b);
      });
    }
  } else {
    const auto& d = std::get<UniformDisk>(shape);
    u = ScalarField2D::sample(spec, [&](double x, double y) {
      return min_image({x, y}, d.center, spec).norm() < d.radius ? 1.0 : 0.0;
    });
  }
  const double mass = u.integral();
  if (!(mass > 0.0)) throw DomainError("initial: density not resolved by the grid");
  u *= 1.0 / mass;
  return u;
}

Vec2 InitialDensity::draw(Engine& rng) const {
  if (const auto* blobs = std::get_if<std::vector<GaussianBlob>>(&shape)) {
    std::size_t pick = 0;
    if (blobs->size() > 1) {
      std::vector<double> w;
      for (const auto& b : *blobs) w.push_back(b.weight);
      pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    }
    const auto& b = (*blobs)[pick];
    std::normal_distribution<double> n(0.0, b.sigma);
    const double x = n(rng);
    const double y = n(rng);
    return b.center + Vec2{x, y};
  }
  const auto& d = std::get<UniformDisk>(shape);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const Vec2 p{u(rng), u(rng)};
    if (p.x * p.x + p.y * p.y < 1.0) return d.center + d.radius * p;
  }
}

Vec2 draw_mollifier(Engine& rng, double eps) {
  // Accept a uniform disc point with probability exp(1 - 1/(1 - r^2)) <= 1.
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  for (;;) {
    const Vec2 p{u(rng), u(rng)};
    const double r2 = p.x * p.x + p.y * p.y;
    if (r2 >= 1.0) continue;
    if (a(rng) < std::exp(1.0 - 1.0 / (1.0 - r2))) return eps * p;
  }
}

ScalarField2D mollify_initial(const ScalarField2D& u0, const Mollifier& m) {
  if (u0.integral() < 0.0) throw DomainError("mollify_initial: negative total mass");
  return convolve(u0, mollifier_field(u0.spec(), m));
}

ScalarField2D signal_from(const ScalarField2D& u, const PotentialKernel& k) {
  return helmholtz_solve(k.params().chi * convolve(u, k.mollifier()), k.params().mu * k.params().mu);
}

PdeState make_pde_state(ScalarField2D u, std::shared_ptr<const PotentialKernel> kernel, double t) {
  if (!kernel) throw DomainError("pde: kernel required");
  if (!(u.spec() == kernel->spec())) throw DomainError("pde: density and kernel grids differ");
  PdeState s;
  s.t = t;
  s.v = signal_from(u, *kernel);
  s.u = std::move(u);
  s.kernel = std::move(kernel);
  return s;
}

double dt_max(const PdeState& s) {
  const double h = s.u.h();
  return h * h / (4.0 * (1.0 + std::exp(-s.v.min())));
}

PdeState step(const PdeState& s, double dt) {
  if (!(dt > 0.0)) throw DomainError("pde step: dt must be positive");
  if (dt > dt_max(s) * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "pde step: dt=" << dt << " exceeds stability limit " << dt_max(s);
    throw NumericalError(msg.str());
  }
  const int G = s.u.G();
  const double h = s.u.h();
  const double r = dt / (h * h);

  // Flux form: w = (e^-v + 1) u and u += dt * Delta_h w; the periodic 5-point
  // Laplacian sums to zero, so mass changes by round-off only.
  ScalarField2D w(s.u.spec());
  {
    auto wv = w.values();
    auto uv = s.u.values();
    auto vv = s.v.values();
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = (std::exp(-vv[i]) + 1.0) * uv[i];
  }
  ScalarField2D u(s.u.spec());
  for (int iy = 0; iy < G; ++iy) {
    const int up = (iy + 1) % G, dn = (iy + G - 1) % G;
    for (int ix = 0; ix < G; ++ix) {
      const int rt = (ix + 1) % G, lf = (ix + G - 1) % G;
      const double lap = w(rt, iy) + w(lf, iy) + w(ix, up) + w(ix, dn) - 4.0 * w(ix, iy);
      u(ix, iy) = s.u(ix, iy) + r * lap;
    }
  }

  if (!u.all_finite()) throw PdeFailure("pde step: non-finite density at t=" + std::to_string(s.t + dt), s);

  double clipped = 0.0;
  bool any_below = false;
  for (double x : u.values()) {
    if (x < kNegativeFloor) any_below = true;
    if (x < 0.0) clipped -= x;
  }
  if (any_below) {
    clipped *= h * h;
    if (clipped >= kClipMassLimit)
      throw PdeFailure("pde step: negative mass " + std::to_string(clipped) + " at t=" +
                           std::to_string(s.t + dt),
                       s);
    const double mass = u.integral();
    for (double& x : u.values()) x = std::max(x, 0.0);
    u *= mass / u.integral();
  }
  return make_pde_state(std::move(u), s.kernel, s.t + dt);
}

Diagnostics diagnose(const PdeState& s) {
  const GridSpec& g = s.u.spec();
  const double h = g.h();
  const double h2 = h * h;
  Diagnostics d;
  d.t = s.t;
  double mass = 0.0, m2 = 0.0, l2 = 0.0, l4 = 0.0, ent = 0.0, linf = 0.0, glog = 0.0;
  for (int iy = 0; iy < g.G; ++iy) {
    const double y = g.coord(iy);
    for (int ix = 0; ix < g.G; ++ix) {
      const double x = g.coord(ix);
      const double u = s.u(ix, iy);
      const double u2 = u * u;
      mass += u;
      m2 += (x * x + y * y) * u;
      l2 += u2;
      l4 += u2 * u2;
      linf = std::max(linf, std::abs(u));
      if (u > 0.0) ent += u * std::log(u);
      if (u > kLogSupport) {
        const double ur = s.u((ix + 1) % g.G, iy), ul = s.u((ix + g.G - 1) % g.G, iy);
        const double uu = s.u(ix, (iy + 1) % g.G), ud = s.u(ix, (iy + g.G - 1) % g.G);
        if (ur > 0.0 && ul > 0.0 && uu > 0.0 && ud > 0.0) {
          const double gx = (std::log(ur) - std::log(ul)) / (2.0 * h);
          const double gy = (std::log(uu) - std::log(ud)) / (2.0 * h);
          glog = std::max(glog, std::hypot(gx, gy));
        }
      }
    }
  }
  d.mass = mass * h2;
  d.m2 = m2 * h2;
  d.l2 = std::sqrt(l2 * h2);
  d.l4 = std::sqrt(std::sqrt(l4 * h2));
  d.linf = linf;
  d.entropy = ent * h2;
  d.grad_log_sup = glog;
  return d;
}

std::pair<double, double> diffusivity_range(const PdeState& s) {
  return {std::exp(-s.v.max()) + 1.0, std::exp(-s.v.min()) + 1.0};
}

ScalarField2D mean_field_potential(const PdeState& s) {
  return convolve_with(s.u, s.kernel->spectrum());
}

PdeRun run(const PdeState& s0, double T, double dt, int every) {
  if (!(T >= 0.0) || !(dt > 0.0) || every < 1) throw DomainError("pde run: need T >= 0, dt > 0, every >= 1");
  const auto steps = static_cast<long>(std::ceil(T / dt - 1e-9));

  PdeRun out;
  auto record = [&](const PdeState& s) {
    const auto [dmin, dmax] = diffusivity_range(s);
    if (!(dmin > 1.0) || dmax > 2.0 + 1e-9)
      throw PdeFailure("pde run: diffusivity left (1, 2] at t=" + std::to_string(s.t), s);
    out.snapshots.push_back({s, diagnose(s)});
    const double g0 = out.snapshots.front().diag.grad_log_sup;
    if (!out.gradient_blowup_time && out.snapshots.back().diag.grad_log_sup > 10.0 * g0)
      out.gradient_blowup_time = s.t;
  };

  PdeState s = s0;
  record(s);
  for (long n = 1; n <= steps; ++n) {
    const double h = (n == steps) ? (s0.t + T) - s.t : dt;
    if (h > 0.0) s = step(s, std::min(h, dt));
    if (n % every == 0 || n == steps) record(s);
  }
  return out;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<Diagnostics>& rows) {
  os << std::setprecision(17) << "t,mass,m2,l2,l4,linf,entropy,grad_log_sup\n";
  for (const auto& d : rows)
    os << d.t << ',' << d.mass << ',' << d.m2 << ',' << d.l2 << ',' << d.l4 << ',' << d.linf << ','
       << d.entropy << ',' << d.grad_log_sup << '\n';
}

}  // namespace chaoslab
