#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "chaoslab/errors.hpp"
#include "chaoslab/grid.hpp"

using namespace chaoslab;
using std::numbers::pi;

namespace {

double max_abs_diff(const ScalarField2D& a, const ScalarField2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

ScalarField2D gaussian(const GridSpec& g, double sigma, Vec2 c = {}) {
  return ScalarField2D::sample(g, [&](double x, double y) {
    const double r2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
    return std::exp(-r2 / (2 * sigma * sigma)) / (2 * pi * sigma * sigma);
  });
}

}  // namespace

TEST_CASE("grid spec validation") {
  CHECK_NOTHROW(GridSpec{10.0, 64}.validate());
  CHECK_THROWS_AS(GridSpec(10.0, 48).validate(), DomainError);
  CHECK_THROWS_AS(GridSpec(10.0, 16).validate(), DomainError);
  CHECK_THROWS_AS(GridSpec(-1.0, 64).validate(), DomainError);
  const GridSpec g{8.0, 64};
  CHECK(g.coord(32) == 0.0);
  CHECK(g.h() == 0.125);
}

TEST_CASE("wrap and minimum image") {
  const GridSpec g{4.0, 32};
  const Vec2 w = wrap({2.5, -2.25}, g);
  CHECK(w.x == doctest::Approx(-1.5));
  CHECK(w.y == doctest::Approx(1.75));
  const Vec2 d = min_image({1.9, 0.0}, {-1.9, 0.0}, g);
  CHECK(d.x == doctest::Approx(-0.2));
}

TEST_CASE("helmholtz: constants and single Fourier modes") {
  const GridSpec g{6.0, 64};
  const ScalarField2D c(g, 3.5);
  CHECK(max_abs_diff(helmholtz_solve(c), c) < 1e-13);

  for (int k : {1, 3, 7}) {
    const double kk = 2 * pi * k / g.L;
    const ScalarField2D rhs = ScalarField2D::sample(g, [&](double x, double) { return std::cos(kk * x); });
    ScalarField2D expect = rhs;
    expect *= 1.0 / (1.0 + kk * kk);
    CHECK(max_abs_diff(helmholtz_solve(rhs), expect) < 1e-13);
  }
}

TEST_CASE("helmholtz residual") {
  const GridSpec g{10.0, 128};
  const ScalarField2D rhs = gaussian(g, 0.7, {1.0, -0.5}) + 0.3 * gaussian(g, 0.4, {-2.0, 2.0});
  const ScalarField2D v = helmholtz_solve(rhs);
  const ScalarField2D res = v - laplacian(v);
  CHECK(max_abs_diff(res, rhs) <= 1e-8 * rhs.max());
}

TEST_CASE("helmholtz rejects non-finite input") {
  ScalarField2D f(GridSpec{4.0, 32}, 1.0);
  f(3, 4) = std::nan("");
  CHECK_THROWS_AS(helmholtz_solve(f), NumericalError);
}

TEST_CASE("helmholtz on a narrow blob matches the free-space convolution oracle") {
  // v = K0(|.|)/(2 pi) * g with g a unit Gaussian. The radial oracle is a Hankel transform of
  // the product of the two transforms, integrated piecewise with Gauss-Legendre.
  const double sigma = 0.3;
  const GridSpec g{30.0, 256};
  const ScalarField2D v = helmholtz_solve(gaussian(g, sigma));

  auto oracle = [&](double r) {
    boost::math::quadrature::gauss<double, 20> q;
    double s = 0.0;
    const double w = 0.1;
    for (int i = 0; i < 260; ++i) {  // the Gaussian factor is below 1e-13 past k = 26
      s += q.integrate(
          [&](double k) {
            return boost::math::cyl_bessel_j(0, k * r) * std::exp(-0.5 * sigma * sigma * k * k) / (1 + k * k) * k;
          },
          i * w, (i + 1) * w);
    }
    return s / (2 * pi);
  };
  const double dr = 0.01;
  const int nr = static_cast<int>(std::ceil(g.L / std::sqrt(2.0) / dr)) + 2;
  std::vector<double> table(static_cast<std::size_t>(nr));
  for (int i = 0; i < nr; ++i) table[static_cast<std::size_t>(i)] = oracle(i * dr);

  double l1 = 0.0;
  for (int iy = 0; iy < g.G; ++iy)
    for (int ix = 0; ix < g.G; ++ix) {
      const double r = std::hypot(g.coord(ix), g.coord(iy));
      const int i = static_cast<int>(r / dr);
      const double t = r / dr - i;
      const double ref = (1 - t) * table[static_cast<std::size_t>(i)] + t * table[static_cast<std::size_t>(i + 1)];
      l1 += std::abs(v(ix, iy) - ref);
    }
  l1 *= g.h() * g.h();
  CHECK(l1 <= 1e-4);
}

TEST_CASE("helmholtz is linear") {
  const GridSpec g{8.0, 64};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  ScalarField2D f(g), h(g);
  for (double& x : f.values()) x = n(rng);
  for (double& x : h.values()) x = n(rng);
  const double a = 1.7, b = -0.3;
  const ScalarField2D lhs = helmholtz_solve(a * f + b * h);
  const ScalarField2D rhs = a * helmholtz_solve(f) + b * helmholtz_solve(h);
  CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("spectra of real fields are Hermitian and round-trip") {
  const GridSpec g{5.0, 32};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u;
  ScalarField2D f(g);
  for (double& x : f.values()) x = u(rng);
  const Spectrum s = forward_fft(f);
  for (int ky = 1; ky < g.G; ++ky) {
    CHECK(std::abs(s.at(0, ky) - std::conj(s.at(0, g.G - ky))) < 1e-12);
    CHECK(std::abs(s.at(g.G / 2, ky) - std::conj(s.at(g.G / 2, g.G - ky))) < 1e-12);
  }
  CHECK(std::abs(s.at(0, 0).imag()) < 1e-12);
  CHECK(max_abs_diff(inverse_fft(s), f) < 1e-14);
}

TEST_CASE("convolution identities") {
  const GridSpec g{6.0, 64};
  const ScalarField2D f = gaussian(g, 0.6, {0.5, 0.2});
  const ScalarField2D k = gaussian(g, 0.3, {-0.4, 0.1}) + 0.2 * gaussian(g, 0.9);

  ScalarField2D delta(g);
  delta(g.G / 2, g.G / 2) = 1.0 / (g.h() * g.h());
  CHECK(max_abs_diff(convolve(f, delta), f) < 1e-13);

  const ScalarField2D fk = convolve(f, k);
  CHECK(fk.integral() == doctest::Approx(f.integral() * k.integral()).epsilon(1e-10));
  CHECK(max_abs_diff(fk, convolve(k, f)) < 1e-12);
  CHECK_THROWS_AS(convolve(f, ScalarField2D(GridSpec{6.0, 32})), DomainError);
}

TEST_CASE("deposit") {
  const GridSpec g{4.0, 32};
  const std::vector<Vec2> one{{g.coord(5), g.coord(9)}};
  const ScalarField2D f = deposit(one, g);
  CHECK(f(5, 9) == doctest::Approx(1.0 / (g.h() * g.h())).epsilon(1e-14));
  double rest = 0.0;
  for (int iy = 0; iy < g.G; ++iy)
    for (int ix = 0; ix < g.G; ++ix)
      if (ix != 5 || iy != 9) rest += std::abs(f(ix, iy));
  CHECK(rest == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int n : {1, 7, 1000}) {
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.push_back(wrap({u(rng), u(rng)}, g));
    CHECK(deposit(pts, g).integral() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("deposit of uniform points stays within the binomial noise floor") {
  const GridSpec g{1.0, 64};
  const std::size_t N = 100000;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec2> pts(N);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const ScalarField2D f = deposit(pts, g);
  const double floor = std::sqrt(double(N)) / (double(N) * g.h() * g.L);
  double worst = 0.0;
  for (double v : f.values()) worst = std::max(worst, std::abs(v - 1.0 / (g.L * g.L)));
  CHECK(worst <= 5 * floor);
}

TEST_CASE("interpolation") {
  const GridSpec g{4.0, 32};
  const ScalarField2D lin = ScalarField2D::sample(g, [](double x, double y) { return 0.7 * x - 1.3 * y + 0.25; });
  CHECK(interpolate(lin, {g.coord(4), g.coord(17)}) == doctest::Approx(lin(4, 17)).epsilon(1e-15));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{u(rng), u(rng)};
    CHECK(interpolate(lin, p) == doctest::Approx(0.7 * p.x - 1.3 * p.y + 0.25).epsilon(1e-12));
  }
  const ScalarField2D c(g, 2.5);
  for (int i = 0; i < 20; ++i) CHECK(interpolate(c, wrap({3 * u(rng), 3 * u(rng)}, g)) == doctest::Approx(2.5));
}

TEST_CASE("interpolation error of a smooth Gaussian is second order") {
  auto worst = [](int G) {
    const GridSpec g{6.0, G};
    const double s = 0.5;
    const ScalarField2D f = ScalarField2D::sample(g, [&](double x, double y) { return std::exp(-(x * x + y * y) / (2 * s * s)); });
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double e = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec2 p{u(rng), u(rng)};
      e = std::max(e, std::abs(interpolate(f, p) - std::exp(-(p.x * p.x + p.y * p.y) / (2 * s * s))));
    }
    return e / (g.h() * g.h());
  };
  const double c64 = worst(64), c128 = worst(128), c256 = worst(256);
  CHECK(c64 < 2.0);
  CHECK(c128 < 2.0);
  CHECK(c256 < 2.0);
  CHECK(c128 == doctest::Approx(c64).epsilon(0.35));
}

TEST_CASE("field csv round trip") {
  const GridSpec g{3.0, 32};
  const ScalarField2D f = gaussian(g, 0.4);
  std::stringstream ss;
  write_field_csv(ss, f, 0.125);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "# 32 3 0.125");
  ss.seekg(0);
  double t = 0.0;
  const ScalarField2D back = read_field_csv(ss, &t);
  CHECK(t == 0.125);
  CHECK(back.spec() == g);
  CHECK(max_abs_diff(back, f) == 0.0);
}
