#include "chaoslab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "chaoslab/errors.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

namespace {

constexpr double kFastTolerance = 1e-3;
constexpr double kSqrt2 = 1.4142135623730951;

// FFT round-off can leave -1e-17 where the exact value is a tiny positive number.
double clamp_roundoff(double s, double scale) {
  if (s < 0.0 && s > -1e-12 * std::max(scale, 1.0)) return 0.0;
  return s;
}

}  // namespace

double diffusion_coeff(double s) {
  if (!(s >= 0.0)) throw NumericalError("diffusion_coeff: negative interaction " + std::to_string(s));
  return std::sqrt(2.0 * std::exp(-s) + 2.0);
}

std::vector<double> interaction_exact(std::span<const Vec2> X, const PotentialKernel& k) {
  const auto N = static_cast<std::ptrdiff_t>(X.size());
  std::vector<double> S(X.size(), 0.0);
  const double inv_n = N > 0 ? 1.0 / static_cast<double>(N) : 0.0;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < N; ++i) {
    double sum = 0.0;
    for (std::ptrdiff_t j = 0; j < N; ++j) sum += k(min_image(X[i], X[j], k.spec()));
    S[i] = sum * inv_n;
  }
  return S;
}

std::vector<double> interaction_fast(std::span<const Vec2> X, const PotentialKernel& k,
                                     const GridSpec& g, bool validate) {
  if (!(g == k.spec())) throw DomainError("interaction_fast: grid differs from the kernel grid");
  const std::size_t N = X.size();
  std::vector<double> S(N, 0.0);
  if (N == 0) return S;
  const ScalarField2D field = convolve_with(deposit(X, g), k.spectrum());
  const ScalarField2D& table = k.table();
  const int G = g.G;
  const double inv_n = 1.0 / static_cast<double>(N);
  const double phi0 = k.at_origin();

  for (std::size_t i = 0; i < N; ++i) {
    const CicStencil st = cic_stencil(X[i], g);
    // Particle i's own contribution as seen through deposit + interpolate:
    // sum over stencil pairs (p, q) of w_p w_q Phi(node_q - node_p).
    double self = 0.0;
    for (int pb = 0; pb < 2; ++pb)
      for (int pa = 0; pa < 2; ++pa)
        for (int qb = 0; qb < 2; ++qb)
          for (int qa = 0; qa < 2; ++qa) {
            const int dx = ((st.ix[qa] - st.ix[pa] + G + G / 2) % G);
            const int dy = ((st.iy[qb] - st.iy[pb] + G + G / 2) % G);
            self += st.wx[pa] * st.wy[pb] * st.wx[qa] * st.wy[qb] * table(dx, dy);
          }
    double grid = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) grid += st.wx[a] * st.wy[b] * field(st.ix[a], st.iy[b]);
    S[i] = grid + inv_n * (phi0 - self);
  }

  if (validate) {
    const std::vector<double> exact = interaction_exact(X, k);
    const double tol = kFastTolerance * table.max();
    for (std::size_t i = 0; i < N; ++i)
      if (std::abs(S[i] - exact[i]) > tol)
        throw NumericalError("interaction_fast: deviation " + std::to_string(std::abs(S[i] - exact[i])) +
                             " exceeds tolerance " + std::to_string(tol));
  }
  return S;
}

NoiseBlock make_noise(std::uint64_t seed, std::span<const std::uint64_t> streams, std::uint64_t step,
                      double dt) {
  NoiseBlock nb;
  nb.dW.reserve(streams.size());
  const double sd = std::sqrt(dt);
  for (std::uint64_t s : streams) nb.dW.push_back(sd * counter_normal2(seed, s, step));
  return nb;
}

double CoupledEnsemble::threshold() const {
  return std::pow(static_cast<double>(N()), -alpha);
}

CoupledEnsemble make_ensemble(std::vector<Vec2> initial, std::uint64_t seed, double alpha) {
  CoupledEnsemble e;
  e.Xbar = initial;
  e.X = std::move(initial);
  e.streams.resize(e.X.size());
  for (std::size_t i = 0; i < e.streams.size(); ++i) e.streams[i] = i;
  e.seed = seed;
  e.alpha = alpha;
  return e;
}

double max_deviation(const CoupledEnsemble& e, const GridSpec& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < e.N(); ++i) m = std::max(m, min_image(e.X[i], e.Xbar[i], g).norm());
  return m;
}

CoupledEnsemble coupled_step(CoupledEnsemble e, const MeanFieldSnapshot& mf, const PotentialKernel& k,
                             double dt, InteractionMethod method) {
  if (std::abs(mf.t - e.t) > 1e-9 * std::max(1.0, std::abs(e.t)))
    throw DomainError("coupled_step: mean-field snapshot at t=" + std::to_string(mf.t) +
                      " but ensemble at t=" + std::to_string(e.t));
  if (!(dt > 0.0)) throw DomainError("coupled_step: dt must be positive");
  const GridSpec& g = k.spec();
  const double scale = k.table().max();

  const std::vector<double> S = method == InteractionMethod::exact ? interaction_exact(e.X, k)
                                                                   : interaction_fast(e.X, k, g);
  const NoiseBlock noise = make_noise(e.seed, e.streams, e.step, dt);

  for (std::size_t i = 0; i < e.N(); ++i) {
    const double c = diffusion_coeff(clamp_roundoff(S[i], scale));
    const double cbar = diffusion_coeff(clamp_roundoff(interpolate(mf.potential, e.Xbar[i]), scale));
    if (!(c > kSqrt2 && c <= 2.0) || !(cbar > kSqrt2 && cbar <= 2.0))
      throw NumericalError("coupled_step: diffusion coefficient left (sqrt 2, 2]");
    e.X[i] = wrap(e.X[i] + c * noise.dW[i], g);
    e.Xbar[i] = wrap(e.Xbar[i] + cbar * noise.dW[i], g);
  }
  e.step += 1;
  e.t = static_cast<double>(e.step) * dt;

  const double dev = max_deviation(e, g);
  e.running_max = std::max(e.running_max, dev);
  if (!e.tau_hit && e.running_max >= e.threshold()) e.tau_hit = e.t;
  return e;
}

double default_sde_dt(double eps, double h) { return std::min(eps * eps / 10.0, h * h / 8.0); }

int pde_substeps(double dt_sde, double h) {
  return std::max(1, static_cast<int>(std::ceil(dt_sde / (h * h / 8.0) - 1e-12)));
}

MeanFieldPath solve_mean_field(const PdeState& s0, double T, double dt_sde) {
  if (!(dt_sde > 0.0) || !(T > 0.0)) throw DomainError("solve_mean_field: need T > 0 and dt > 0");
  const double ratio = T / dt_sde;
  const auto steps = static_cast<long>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio)
    throw DomainError("solve_mean_field: T must be a multiple of the SDE step");
  const int sub = pde_substeps(dt_sde, s0.u.h());
  const double dt_pde = dt_sde / sub;

  MeanFieldPath path;
  path.dt = dt_sde;
  path.steps.reserve(static_cast<std::size_t>(steps));
  PdeState s = s0;
  for (long n = 0; n < steps; ++n) {
    path.steps.push_back({static_cast<double>(n) * dt_sde, mean_field_potential(s)});
    for (int j = 0; j < sub; ++j) s = step(s, dt_pde);
    s.t = static_cast<double>(n + 1) * dt_sde;  // pin to the SDE clock
  }
  path.final_state = std::move(s);
  return path;
}

double TrialRecord::max_dev_at(double time) const {
  if (t.empty()) throw DomainError("trial record is empty");
  const auto it = std::min_element(t.begin(), t.end(), [time](double a, double b) {
    return std::abs(a - time) < std::abs(b - time);
  });
  const double spacing = t.size() > 1 ? t[1] - t[0] : 1.0;
  if (std::abs(*it - time) > 0.5 * spacing + 1e-12) throw DomainError("trial record: time not recorded");
  return max_dev[static_cast<std::size_t>(it - t.begin())];
}

TrialRecord coupled_run(const CoupledRunConfig& cfg, const MeanFieldPath& path, const PotentialKernel& k) {
  if (cfg.record_every < 1) throw DomainError("coupled_run: record_every must be >= 1");
  if (cfg.k < 1) throw DomainError("coupled_run: k must be >= 1");
  const GridSpec& g = k.spec();

  std::vector<Vec2> init;
  if (cfg.initial_positions) {
    init = *cfg.initial_positions;
  } else {
    Engine rng(cfg.seed);
    init.reserve(cfg.N);
    for (std::size_t i = 0; i < cfg.N; ++i) {
      const Vec2 y = cfg.initial.draw(rng);
      init.push_back(wrap(y + draw_mollifier(rng, k.eps()), g));
    }
  }
  CoupledEnsemble e = make_ensemble(std::move(init), cfg.seed, cfg.alpha);
  if (cfg.streams) {
    if (cfg.streams->size() != e.N()) throw DomainError("coupled_run: stream count mismatch");
    e.streams = *cfg.streams;
  }

  TrialRecord rec;
  rec.N = e.N();
  rec.eps = k.eps();
  rec.alpha = cfg.alpha;
  rec.k = cfg.k;
  rec.seed = cfg.seed;
  rec.T = path.dt * static_cast<double>(path.steps.size());

  const double scale = std::pow(static_cast<double>(e.N()), cfg.alpha);
  auto record = [&] {
    const double dev = max_deviation(e, g);
    // Stopped at tau the statistic equals 1; the discrete overshoot is not kept.
    const double S = e.tau_hit ? 1.0 : std::min(1.0, std::pow(scale * dev, cfg.k));
    rec.t.push_back(e.t);
    rec.max_dev.push_back(dev);
    rec.S_alpha_k.push_back(S);
  };

  record();
  for (std::size_t n = 0; n < path.steps.size(); ++n) {
    e = coupled_step(std::move(e), path.steps[n], k, path.dt, cfg.method);
    rec.sup_dev = std::max(rec.sup_dev, e.running_max);
    if ((n + 1) % static_cast<std::size_t>(cfg.record_every) == 0 || n + 1 == path.steps.size()) record();
  }
  rec.tau_hit = e.tau_hit;
  rec.final_X = std::move(e.X);
  rec.final_Xbar = std::move(e.Xbar);
  return rec;
}

void write_trial_csv(std::ostream& os, const TrialRecord& r) {
  os << std::setprecision(17) << "t,max_dev,S_alpha_k,tau_hit_flag\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    const bool hit = r.tau_hit && *r.tau_hit <= r.t[i] + 1e-12;
    os << r.t[i] << ',' << r.max_dev[i] << ',' << r.S_alpha_k[i] << ',' << (hit ? 1 : 0) << '\n';
  }
}

void write_ensemble_csv(std::ostream& os, std::span<const Vec2> X, std::span<const Vec2> Xbar) {
  os << std::setprecision(17) << "i,x,y,xbar_x,xbar_y\n";
  for (std::size_t i = 0; i < X.size(); ++i)
    os << i << ',' << X[i].x << ',' << X[i].y << ',' << Xbar[i].x << ',' << Xbar[i].y << '\n';
}

}  // namespace chaoslab
