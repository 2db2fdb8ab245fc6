#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "chaoslab/metrics.hpp"

using namespace chaoslab;
using std::numbers::pi;

namespace {

const GridSpec kBox{16.0, 256};

ScalarField2D gauss2(const GridSpec& g, Vec2 c, double s) {
  ScalarField2D f = ScalarField2D::sample(g, [&](double x, double y) {
    return std::exp(-((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y)) / (2 * s * s)) / (2 * pi * s * s);
  });
  return f;
}

std::vector<Vec2> gaussian_samples(std::size_t n, std::uint64_t seed, double s) {
  Engine rng(seed);
  std::normal_distribution<double> nd(0.0, s);
  std::vector<Vec2> x(n);
  for (auto& p : x) p = {nd(rng), nd(rng)};
  return x;
}

ScalarField2D random_mixture(const GridSpec& g, Engine& rng) {
  std::uniform_real_distribution<double> c(-2.0, 2.0), s(0.5, 1.5), w(0.2, 1.0);
  ScalarField2D f(g, 0.01 / (g.L * g.L));
  const int comps = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < comps; ++i) f += w(rng) * gauss2(g, {c(rng), c(rng)}, s(rng));
  f *= 1.0 / f.integral();
  return f;
}

}  // namespace

TEST_CASE("lln statistic: constant psi gives zero") {
  const GridSpec g{8.0, 64};
  const ScalarField2D psi(g, 2.5);
  ScalarField2D u = gauss2(g, {}, 0.7);
  u *= 1.0 / u.integral();
  const auto X = gaussian_samples(50, 1, 0.7);
  const LlnStat st = lln_statistic(X, psi, u, 0.3);
  for (double h : st.hbar) CHECK(std::abs(h) < 1e-12);
  CHECK_FALSE(st.in_B);
  CHECK(st.psi_id == "phi");
}

TEST_CASE("lln statistic: two-particle hand oracle") {
  const GridSpec g{6.4, 128};
  const PotentialKernel k = build_kernel({1.0, 0.5}, {0.2}, g);
  const ScalarField2D psi = psi_table(k, PsiKind::phi);
  const ScalarField2D u = gauss2(g, {}, 0.6);
  const std::vector<Vec2> X{{0.1, -0.3}, {-0.4, 0.2}};
  const LlnStat st = lln_statistic(X, psi, u, 0.25);

  const ScalarField2D mf = convolve(u, psi);
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 2; ++j) s += k(min_image(X[i], X[j], g)) - interpolate(mf, X[i]);
    CHECK(st.hbar[i] == doctest::Approx(s / 2).epsilon(1e-12));
  }
  CHECK(st.in_B == (std::abs(st.hbar[0]) > std::pow(2.0, -0.25) || std::abs(st.hbar[1]) > std::pow(2.0, -0.25)));
}

TEST_CASE("lln moment guards and psi = 0") {
  std::vector<LlnStat> few(10, LlnStat{"phi", {0.1}, 0.3, false});
  CHECK_THROWS_AS(lln_moment(few, 1), DomainError);
  std::vector<LlnStat> zero(60, LlnStat{"phi", {0.0, 0.0}, 0.3, false});
  const Estimate e = lln_moment(zero, 1);
  CHECK(e.value == 0.0);
  CHECK(e.n == 60);
}

TEST_CASE("replica mean |hbar_1| decays like N^-1/2") {
  const GridSpec g{6.4, 128};
  const PotentialKernel k = build_kernel({1.0, 0.5}, {0.2}, g);
  const ScalarField2D psi = psi_table(k, PsiKind::phi);
  const double s = 0.6;
  ScalarField2D u = gauss2(g, {}, s);
  u *= 1.0 / u.integral();
  std::vector<double> Ns, ms;
  for (std::size_t N : {32, 128, 512}) {
    double acc = 0.0;
    const int R = 200;
    for (int r = 0; r < R; ++r) {
      const auto X = gaussian_samples(N, replica_seed(31, static_cast<std::uint64_t>(r)) + N, s);
      acc += std::abs(lln_statistic(std::span<const Vec2>(X.data(), X.size()), psi, u, 0.3).hbar[0]);
    }
    Ns.push_back(static_cast<double>(N));
    ms.push_back(acc / R);
  }
  CHECK(loglog_fit(Ns, ms).slope == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("wilson interval") {
  const Estimate a = wilson(0, 20);
  CHECK(a.value == 0.0);
  CHECK(a.ci_lo == 0.0);
  const double z = 1.959963984540054;
  CHECK(a.ci_hi == doctest::Approx(z * z / (20 + z * z)));
  const Estimate b = wilson(5, 10);
  CHECK(b.ci_lo + b.ci_hi == doctest::Approx(1.0));
  CHECK(wilson(20, 20).ci_hi == 1.0);
  CHECK(wilson(0, 200).ci_lo == 0.0);
  CHECK(wilson(200, 200).ci_hi == 1.0);
  CHECK_THROWS_AS(wilson(0, 0), DomainError);
}

TEST_CASE("deviation probability") {
  TrialRecord r;
  r.N = 100;
  r.alpha = 0.5;
  r.T = 1.0;
  r.eps = 0.2;
  r.t = {0.0, 0.5, 1.0};
  r.max_dev = {0.0, 0.05, 0.2};
  TrialRecord q = r;
  q.max_dev = {0.0, 0.0, 0.0};
  const std::vector<TrialRecord> trials{r, q, q, r};
  CHECK(deviation_probability(trials, 0.5, 1.0).value == 0.5);   // threshold 0.1
  CHECK(deviation_probability(trials, 0.5, 0.5).value == 0.0);
  CHECK(deviation_probability_at(trials, 0.0, 0.5).value == 0.5);
  const std::vector<TrialRecord> deviating{r, r};
  CHECK(deviation_probability_at(deviating, 0.0, 1.0).value == 1.0);
  TrialRecord other = r;
  other.N = 200;
  const std::vector<TrialRecord> mixed{r, other};
  CHECK_THROWS_AS(deviation_probability(mixed, 0.5, 1.0), DomainError);
}

TEST_CASE("bootstrap mean is deterministic and brackets the mean") {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(std::sin(i * 1.3));
  const Estimate a = bootstrap_mean(v), b = bootstrap_mean(v);
  CHECK(a.value == b.value);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_lo <= a.value);
  CHECK(a.value <= a.ci_hi);
}

TEST_CASE("silverman bandwidth is clamped to [h, 10h]") {
  const GridSpec g{16.0, 256};
  const auto X = gaussian_samples(1000, 2, 1.0);
  const double b = silverman_bandwidth(X, g);
  CHECK(b == doctest::Approx(std::pow(1000.0, -1.0 / 6.0)).epsilon(0.1));
  const auto tight = gaussian_samples(1000, 2, 1e-4);
  CHECK(silverman_bandwidth(tight, g) == g.h());
  const auto wide = gaussian_samples(100, 2, 50.0);
  CHECK(silverman_bandwidth(wide, g) == 10 * g.h());
}

TEST_CASE("kde basics") {
  const GridSpec g{8.0, 128};
  const std::vector<Vec2> one{{g.coord(70), g.coord(60)}};
  const double b = 0.3;
  const ScalarField2D f = kde(one, b, g);
  CHECK(f.integral() == doctest::Approx(1.0).epsilon(1e-8));
  double worst = 0.0;
  for (int iy = 0; iy < g.G; ++iy)
    for (int ix = 0; ix < g.G; ++ix) {
      const double dx = g.coord(ix) - one[0].x, dy = g.coord(iy) - one[0].y;
      worst = std::max(worst, std::abs(f(ix, iy) - std::exp(-(dx * dx + dy * dy) / (2 * b * b)) / (2 * pi * b * b)));
    }
  CHECK(worst <= 1e-8 * f.max());
  CHECK_THROWS_AS(kde(one, 0.5 * g.h(), g), DomainError);
  const auto X = gaussian_samples(333, 4, 1.3);
  CHECK(kde(X, 0.4, g).integral() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("kde of 1e5 Gaussian samples with Silverman bandwidth") {
  const auto X = gaussian_samples(100000, 6, 1.0);
  const ScalarField2D f = kde(X, silverman_bandwidth(X, kBox), kBox);
  CHECK(l1_distance(f, gauss2(kBox, {}, 1.0)) <= 0.05);
}

TEST_CASE("kde error falls as the sample quadruples") {
  const ScalarField2D truth = gauss2(kBox, {}, 1.0);
  double prev = 1e9;
  for (std::size_t n : {1000, 4000, 16000}) {
    const auto X = gaussian_samples(n, 100 + n, 1.0);
    const double e = l1_distance(kde(X, silverman_bandwidth(X, kBox), kBox), truth);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("l1 distance") {
  const ScalarField2D f = gauss2(kBox, {}, 1.0);
  CHECK(l1_distance(f, f) == 0.0);
  CHECK(l1_distance(gauss2(kBox, {-4, 0}, 0.3), gauss2(kBox, {4, 0}, 0.3)) == doctest::Approx(2.0).epsilon(1e-8));

  // reduce to one dimension: |phi(x) - phi(x - d)| integrated along the shift
  for (double d : {0.1, 0.2}) {
    auto phi = [](double x) { return std::exp(-x * x / 2) / std::sqrt(2 * pi); };
    const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return std::abs(phi(x) - phi(x - d)); }, -12.0, 12.0, 20, 1e-14);
    CHECK(quad == doctest::Approx(2 * std::erf(d / (2 * std::sqrt(2.0)))).epsilon(1e-10));
    CHECK(std::abs(l1_distance(f, gauss2(kBox, {d, 0}, 1.0)) - quad) <= 1e-3);
  }
  CHECK_THROWS_AS(l1_distance(f, ScalarField2D(GridSpec{16.0, 128})), DomainError);
}

TEST_CASE("relative entropy") {
  const ScalarField2D f = gauss2(kBox, {}, 1.0);
  CHECK(std::abs(relative_entropy(f, f)) <= 1e-10);
  const ScalarField2D g = gauss2(kBox, {0.1, 0.0}, 1.0);
  CHECK(relative_entropy(f, g) == doctest::Approx(0.005).epsilon(1e-4 / 0.005));

  const ScalarField2D far = gauss2(kBox, {6.0, 0.0}, 0.2);
  CHECK_THROWS_AS(relative_entropy(gauss2(kBox, {}, 0.2), far), DomainError);
  const DistanceReport rep = ckp_check(gauss2(kBox, {}, 0.2), far);
  CHECK(rep.excluded_mass > 1e-3);
}

TEST_CASE("C-K-P check") {
  const ScalarField2D f = gauss2(kBox, {}, 1.0);
  const DistanceReport same = ckp_check(f, f);
  CHECK(same.ckp_lhs == 0.0);
  CHECK(same.ckp_rhs <= 1e-5);
  CHECK_FALSE(same.violation);

  const DistanceReport shift = ckp_check(f, gauss2(kBox, {0.1, 0.0}, 1.0), 0.25);
  CHECK(shift.ckp_lhs == doctest::Approx(0.0797).epsilon(1e-3));
  CHECK(shift.ckp_rhs == doctest::Approx(0.1).epsilon(1e-2));
  CHECK_FALSE(shift.violation);
  CHECK(shift.bandwidth == 0.25);
}

TEST_CASE("Pinsker holds on random density pairs") {
  const GridSpec g{16.0, 128};
  Engine rng(2718);
  for (int i = 0; i < 20; ++i) {
    const ScalarField2D f = random_mixture(g, rng), h = random_mixture(g, rng);
    const double H = relative_entropy(f, h);
    const double l1 = l1_distance(f, h);
    CHECK(H >= -1e-6);
    CHECK(H >= l1 * l1 / 2);
    CHECK_FALSE(ckp_check(f, h).violation);
  }
}

TEST_CASE("log-log regression") {
  const std::vector<double> x{64, 128, 256, 512};
  std::vector<double> y;
  std::vector<Estimate> ye;
  for (double n : x) {
    y.push_back(3.0 / n);
    ye.push_back({3.0 / n, 2.9 / n, 3.1 / n, 200});
  }
  const Regression r = loglog_fit(x, y);
  CHECK(r.sufficient);
  CHECK(r.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(r.r2 == doctest::Approx(1.0));
  const Regression rb = loglog_fit(x, ye);
  CHECK(rb.slope == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(rb.slope_ci_lo < -1.0);
  CHECK(rb.slope_ci_hi > -1.0);
  CHECK(rb.slope_ci_hi - rb.slope_ci_lo < 0.1);

  const std::vector<double> one{64.0}, v{0.1};
  CHECK_FALSE(loglog_fit(one, v).sufficient);
}
