#include "chaoslab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "chaoslab/errors.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

namespace {

constexpr double kSupportFloor = 1e-12;
constexpr double kMaxExcludedMass = 1e-3;
constexpr std::size_t kMinLlnReplicas = 50;

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void require_same_grid(const ScalarField2D& f, const ScalarField2D& g, const char* op) {
  if (!(f.spec() == g.spec())) throw DomainError(std::string(op) + ": grid mismatch");
}

}  // namespace

ScalarField2D psi_table(const PotentialKernel& k, PsiKind kind) {
  switch (kind) {
    case PsiKind::phi: return k.table();
    case PsiKind::grad_norm: return k.grad_norm();
    case PsiKind::grad_x: return k.grad_x();
    case PsiKind::grad_y: return k.grad_y();
  }
  throw DomainError("psi_table: unknown kind");
}

std::string to_string(PsiKind kind) {
  switch (kind) {
    case PsiKind::phi: return "phi";
    case PsiKind::grad_norm: return "grad_norm";
    case PsiKind::grad_x: return "grad_x";
    case PsiKind::grad_y: return "grad_y";
  }
  return "unknown";
}

LlnStat lln_statistic(std::span<const Vec2> Xbar, const ScalarField2D& psi, const ScalarField2D& u_eps,
                      double theta, std::string psi_id) {
  require_same_grid(psi, u_eps, "lln_statistic");
  const auto N = static_cast<std::ptrdiff_t>(Xbar.size());
  const ScalarField2D mean_field = convolve(u_eps, psi);
  const GridSpec& g = psi.spec();

  LlnStat st;
  st.psi_id = std::move(psi_id);
  st.theta = theta;
  st.hbar.assign(Xbar.size(), 0.0);
  if (N == 0) return st;
  const double inv_n = 1.0 / static_cast<double>(N);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < N; ++i) {
    const double m = interpolate(mean_field, Xbar[i]);
    double sum = 0.0;
    for (std::ptrdiff_t j = 0; j < N; ++j) sum += interpolate(psi, min_image(Xbar[i], Xbar[j], g)) - m;
    st.hbar[i] = sum * inv_n;
  }
  const double cut = std::pow(static_cast<double>(N), -theta);
  st.in_B = std::any_of(st.hbar.begin(), st.hbar.end(), [cut](double v) { return std::abs(v) > cut; });
  return st;
}

Estimate bootstrap_mean(std::span<const double> samples, std::uint64_t seed, int resamples) {
  Estimate e;
  e.n = samples.size();
  if (samples.empty()) throw DomainError("bootstrap_mean: no samples");
  e.value = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  Engine rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) s += samples[pick(rng)];
    means.push_back(s / static_cast<double>(samples.size()));
  }
  std::sort(means.begin(), means.end());
  e.ci_lo = quantile_sorted(means, 0.025);
  e.ci_hi = quantile_sorted(means, 0.975);
  return e;
}

Estimate lln_moment(std::span<const LlnStat> replicas, int m, std::uint64_t seed) {
  if (replicas.size() < kMinLlnReplicas)
    throw DomainError("lln_moment: need at least 50 replicas, got " + std::to_string(replicas.size()));
  if (m < 1) throw DomainError("lln_moment: m must be >= 1");
  std::vector<double> v;
  v.reserve(replicas.size());
  for (const auto& r : replicas) {
    if (r.hbar.empty()) throw DomainError("lln_moment: empty replica");
    v.push_back(std::pow(std::abs(r.hbar.front()), 2 * m));
  }
  return bootstrap_mean(v, seed);
}

Estimate wilson(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw DomainError("wilson: no trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // the endpoints are exact at 0 and n; rounding would leave a 1e-18 residue
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, centre + half);
  return {p, lo, hi, n};
}

Estimate deviation_probability_at(std::span<const TrialRecord> trials, double threshold, double t) {
  if (trials.empty()) throw DomainError("deviation_probability: no trials");
  const auto& f = trials.front();
  std::size_t hits = 0;
  for (const auto& r : trials) {
    if (r.N != f.N || r.eps != f.eps || r.alpha != f.alpha || r.T != f.T)
      throw DomainError("deviation_probability: trials have mixed configurations");
    if (r.max_dev_at(t) > threshold) ++hits;
  }
  return wilson(hits, trials.size());
}

Estimate deviation_probability(std::span<const TrialRecord> trials, double alpha, double t) {
  if (trials.empty()) throw DomainError("deviation_probability: no trials");
  if (trials.front().alpha != alpha) throw DomainError("deviation_probability: alpha differs from trials");
  return deviation_probability_at(trials, std::pow(static_cast<double>(trials.front().N), -alpha), t);
}

double silverman_bandwidth(std::span<const Vec2> points, const GridSpec& spec) {
  const double h = spec.h();
  if (points.size() < 2) return h;
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) { mx += p.x; my += p.y; }
  mx /= n;
  my /= n;
  double var = 0.0;
  for (const auto& p : points) var += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  const double sigma = std::sqrt(var / (2.0 * (n - 1.0)));
  // (4 / (d + 2))^(1/(d+4)) n^(-1/(d+4)) sigma with d = 2.
  return std::clamp(sigma * std::pow(n, -1.0 / 6.0), h, 10.0 * h);
}

ScalarField2D kde(std::span<const Vec2> points, double bandwidth, const GridSpec& spec) {
  if (!(bandwidth >= spec.h() * (1.0 - 1e-12)))
    throw DomainError("kde: bandwidth must be at least the grid spacing");
  const double b2 = bandwidth * bandwidth;
  ScalarField2D gauss = ScalarField2D::sample(spec, [b2](double x, double y) {
    return std::exp(-(x * x + y * y) / (2.0 * b2));
  });
  gauss *= 1.0 / gauss.integral();
  return convolve(deposit(points, spec), gauss);
}

double l1_distance(const ScalarField2D& f, const ScalarField2D& g) {
  require_same_grid(f, g, "l1_distance");
  double s = 0.0;
  auto a = f.values();
  auto b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * f.h() * f.h();
}

namespace {

EntropyValue masked_entropy(const ScalarField2D& f, const ScalarField2D& g) {
  require_same_grid(f, g, "relative_entropy");
  EntropyValue out;
  auto a = f.values();
  auto b = g.values();
  const double h2 = f.h() * f.h();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] <= kSupportFloor) continue;
    if (b[i] <= kSupportFloor) {
      out.excluded_mass += a[i] * h2;
      continue;
    }
    out.value += a[i] * std::log(a[i] / b[i]) * h2;
  }
  return out;
}

}  // namespace

EntropyValue relative_entropy_detail(const ScalarField2D& f, const ScalarField2D& g) {
  const EntropyValue out = masked_entropy(f, g);
  if (out.excluded_mass > kMaxExcludedMass)
    throw DomainError("relative_entropy: excluded mass " + std::to_string(out.excluded_mass) +
                      " exceeds 1e-3");
  return out;
}

double relative_entropy(const ScalarField2D& f, const ScalarField2D& g) {
  return relative_entropy_detail(f, g).value;
}

DistanceReport ckp_check(const ScalarField2D& f, const ScalarField2D& g, double bandwidth) {
  DistanceReport r;
  r.bandwidth = bandwidth;
  r.l1 = l1_distance(f, g);
  const EntropyValue h = masked_entropy(f, g);
  r.rel_entropy = h.value;
  r.excluded_mass = h.excluded_mass;
  r.ckp_lhs = r.l1;
  r.ckp_rhs = std::sqrt(2.0 * std::max(0.0, h.value));
  r.violation = r.ckp_lhs > r.ckp_rhs;
  return r;
}

Regression loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("loglog_fit: length mismatch");
  Regression r;
  r.n = x.size();
  std::set<double> distinct(x.begin(), x.end());
  r.sufficient = distinct.size() >= 2;
  if (!r.sufficient) return r;
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_fit: non-positive value");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly; syy += ly * ly;
  }
  const double cxx = sxx - sx * sx / n;
  const double cxy = sxy - sx * sy / n;
  const double cyy = syy - sy * sy / n;
  r.slope = cxy / cxx;
  r.intercept = (sy - r.slope * sx) / n;
  r.r2 = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  r.slope_ci_lo = r.slope_ci_hi = r.slope;
  return r;
}

Regression loglog_fit(std::span<const double> x, std::span<const Estimate> y, std::uint64_t seed,
                      int resamples) {
  std::vector<double> centre;
  for (const auto& e : y) centre.push_back(e.value);
  Regression r = loglog_fit(x, centre);
  if (!r.sufficient) return r;
  Engine rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> slopes;
  std::vector<double> draw(y.size());
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double lo = std::log(std::max(y[i].ci_lo, 1e-300 + 0.0));
      const double hi = std::log(std::max(y[i].ci_hi, y[i].ci_lo + 1e-300));
      const double sd = std::max(0.0, hi - lo) / (2.0 * 1.959963984540054);
      draw[i] = std::exp(std::log(y[i].value) + sd * normal(rng));
    }
    slopes.push_back(loglog_fit(x, draw).slope);
  }
  std::sort(slopes.begin(), slopes.end());
  r.slope_ci_lo = quantile_sorted(slopes, 0.025);
  r.slope_ci_hi = quantile_sorted(slopes, 0.975);
  return r;
}

}  // namespace chaoslab
