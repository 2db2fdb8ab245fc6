#include <doctest.h>

#include <boost/rational.hpp>
#include <cmath>
#include <sstream>

#include "chaoslab/regime.hpp"

using namespace chaoslab;
using Q = boost::rational<long long>;

namespace {
double as_double(Q q) { return boost::rational_cast<double>(q); }
Q qmin(Q a, Q b) { return a < b ? a : b; }
}  // namespace

TEST_CASE("feasibility of the worked parameter sets") {
  CHECK(check_feasible(0.3, 0.1, 4, Theorem::deviation_probability).feasible);
  const auto bad = check_feasible(0.3, 0.1, 3, Theorem::deviation_probability);
  CHECK_FALSE(bad.feasible);
  CHECK(bad.reasons().find("m >") != std::string::npos);
  // m = 1.4 / 0.2 = 7 sits on the boundary: allowed only by the >= of theorem 2
  CHECK(check_feasible(0.4, 0.1, 7, Theorem::strong_chaos).feasible);
  CHECK_FALSE(check_feasible(0.4, 0.1, 7, Theorem::deviation_probability).feasible);
  CHECK_FALSE(check_feasible(0.6, 0.1, 7, Theorem::deviation_probability).feasible);
  CHECK_FALSE(check_feasible(0.3, 0.2, 7, Theorem::deviation_probability).feasible);
}

TEST_CASE("gamma interval, first parameter set, against rational arithmetic") {
  const Q theta(3, 10), alpha(1, 10);
  const long long m = 4;
  const Q first = alpha / 3;
  const Q second = (-2 * alpha + m * (1 - 2 * theta) - 1) / Q(4 * m + 4);
  CHECK((second == Q(1, 50)));
  const auto b = gamma_bound(0.3, 0.1, 4, Theorem::deviation_probability);
  CHECK(b.first == doctest::Approx(as_double(first)).epsilon(1e-15));
  CHECK(b.second == doctest::Approx(as_double(second)).epsilon(1e-14));
  CHECK(b.value() == doctest::Approx(0.02).epsilon(1e-14));
  const auto iv = gamma_interval(0.3, 0.1, 4, Theorem::deviation_probability);
  CHECK(iv.lo == 0.0);
  CHECK(iv.hi == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(iv.lo_open);
  CHECK(iv.hi_open);
}

TEST_CASE("gamma interval, second parameter set") {
  const Q theta(2, 5), alpha(1, 10);
  const long long m = 7;
  const Q first = 2 * alpha / 7;
  const Q second = (-2 * alpha + m * (1 - 2 * theta) - 1) / Q(4 * m + 4);
  CHECK((second == Q(1, 160)));
  CHECK(as_double(qmin(first, second)) == 0.00625);
  const auto b = gamma_bound(0.4, 0.1, 7, Theorem::strong_chaos);
  CHECK(b.first == doctest::Approx(as_double(first)).epsilon(1e-14));
  CHECK(b.value() == doctest::Approx(0.00625).epsilon(1e-12));
}

TEST_CASE("gamma interval empties as alpha goes to zero") {
  CHECK(gamma_bound(0.3, 0.0, 4, Theorem::deviation_probability).value() <= 0.0);
  CHECK(gamma_interval(0.3, 1e-9, 4, Theorem::deviation_probability).hi < 1e-9);
  CHECK_THROWS_AS(gamma_interval(0.3, 0.0, 4, Theorem::deviation_probability), InfeasibleRegime);
}

TEST_CASE("eta interval") {
  const auto e1 = eta_interval(0.3, 0.1, 4, 0.019, Theorem::deviation_probability);
  CHECK(e1.lo == 0.0);
  CHECK(e1.lo_open);
  CHECK_FALSE(e1.hi_open);
  const Q cap = qmin(Q(3, 10) - Q(2, 10), -Q(20) * Q(19, 1000) - Q(2, 10) + 4 * Q(4, 10) - 1);
  CHECK((cap == Q(1, 50)));
  CHECK(e1.hi == doctest::Approx(0.02).epsilon(1e-12));

  const auto e2 = eta_interval(0.4, 0.1, 7, 0.0025, Theorem::strong_chaos);
  CHECK(e2.lo == doctest::Approx(0.0125).epsilon(1e-14));
  CHECK(e2.lo_open);
  CHECK(e2.hi == doctest::Approx(0.12).epsilon(1e-12));
  const auto eb = eta_bound(0.4, 0.1, 7, 0.0025);
  CHECK(eb.first == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(eb.second == doctest::Approx(0.12).epsilon(1e-12));

  // linear in gamma: at the top of the gamma interval the cap reaches zero
  CHECK(eta_interval(0.3, 0.1, 4, 0.02 - 1e-9, Theorem::deviation_probability).hi < 1e-7);
  CHECK_THROWS_AS(eta_interval(0.3, 0.1, 4, 0.02, Theorem::deviation_probability), InfeasibleRegime);
  CHECK_THROWS_AS(eta_interval(0.3, 0.1, 4, 0.03, Theorem::deviation_probability), InfeasibleRegime);
}

TEST_CASE("beta bound") {
  CHECK(beta_bound(0.1, 0.0025, 0.03) == doctest::Approx(8.0).epsilon(1e-12));
  const Q a = 2 * Q(1, 10) / Q(1, 400) - 6, b = Q(3, 100) / Q(1, 400) - 4;
  CHECK((a == Q(74)));
  CHECK((b == Q(8)));
  CHECK_THROWS_AS(beta_bound(0.1, 0.0025, 5 * 0.0025), InfeasibleRegime);
  // doubling eta below its cap doubles (eta/gamma - 4) + 4
  const double b1 = beta_bound(0.1, 0.0025, 0.02), b2 = beta_bound(0.1, 0.0025, 0.04);
  CHECK(b2 + 4 == doctest::Approx(2 * (b1 + 4)));
}

TEST_CASE("plan picks midpoints and epsilon = N^-gamma") {
  const auto p = plan(0.3, 0.1, 4, 1024, Theorem::deviation_probability);
  CHECK(p.gamma == doctest::Approx(0.01));
  CHECK(p.eps == doctest::Approx(std::pow(1024.0, -0.01)));
  CHECK(std::log(p.eps) == doctest::Approx(-p.gamma * std::log(1024.0)));
  CHECK_NOTHROW(p.validate());

  const auto over = plan(0.3, 0.1, 4, 1024, Theorem::deviation_probability, 0.02 * 0.999999);
  CHECK(over.eps == doctest::Approx(std::pow(1024.0, -0.02 * 0.999999)));
  // gamma = 0.02 is the open upper end itself, so plan refuses it; eps just inside matches N^-0.02
  CHECK(std::pow(1024.0, -0.02) == doctest::Approx(0.8706).epsilon(1e-4));
  CHECK(over.eps == doctest::Approx(0.8706).epsilon(1e-4));
  CHECK_THROWS_AS(plan(0.3, 0.1, 4, 1024, Theorem::deviation_probability, 0.02), InfeasibleRegime);

  const auto r1 = plan(0.3, 0.1, 4, 1024, Theorem::deviation_probability, 0.019);
  CHECK(r1.eta == doctest::Approx(0.01));  // midpoint of (0, 0.02]

  const auto p2 = plan(0.4, 0.1, 7, 1024, Theorem::strong_chaos);
  REQUIRE(p2.beta.has_value());
  CHECK(*p2.beta > 1.0);
  CHECK_NOTHROW(p2.validate());
  for (const auto& c : p2.certificate()) CHECK_MESSAGE(c.pass, c.name);

  CHECK_THROWS_AS(plan(0.3, 0.1, 3, 1024, Theorem::deviation_probability), InfeasibleRegime);
}

TEST_CASE("plan output re-checks every literal inequality") {
  for (int m = 4; m <= 30; ++m)
    for (double theta : {0.2, 0.3, 0.4})
      for (double alpha : {0.02, 0.05, 0.09}) {
        for (Theorem th : {Theorem::deviation_probability, Theorem::strong_chaos}) {
          if (!check_feasible(theta, alpha, m, th).feasible) continue;
          if (gamma_interval(theta, alpha, m, th).empty()) continue;
          RegimeParams p;
          try {
            p = plan(theta, alpha, m, 512, th);
          } catch (const InfeasibleRegime&) {
            continue;  // e.g. beta bound not above 1
          }
          const double first = th == Theorem::deviation_probability ? alpha / 3 : 2 * alpha / 7;
          CHECK(p.gamma > 0);
          CHECK(p.gamma < first);
          CHECK(p.gamma < (-2 * alpha + m * (1 - 2 * theta) - 1) / (4 * m + 4));
          CHECK(p.eta <= theta - 2 * alpha);
          CHECK(p.eta <= -(4 * m + 4) * p.gamma - 2 * alpha + m * (1 - 2 * theta) - 1 + 1e-12);
          if (th == Theorem::strong_chaos) {
            CHECK(p.eta > 5 * p.gamma);
            REQUIRE(p.beta);
            CHECK(*p.beta > 1);
            CHECK(*p.beta <= 2 * alpha / p.gamma - 6 + 1e-9);
            CHECK(*p.beta <= p.eta / p.gamma - 4 + 1e-9);
          }
        }
      }
}

TEST_CASE("gamma upper bound is nondecreasing in m") {
  double prev = -1.0;
  for (int m = 7; m <= 20; ++m) {
    if (!check_feasible(0.4, 0.1, m, Theorem::deviation_probability).feasible) continue;
    const double hi = gamma_interval(0.4, 0.1, m, Theorem::deviation_probability).hi;
    CHECK(hi >= prev);
    prev = hi;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("certificate has aligned text and a machine row") {
  std::ostringstream os;
  write_certificate(os, plan(0.3, 0.1, 4, 1024, Theorem::deviation_probability));
  const std::string s = os.str();
  CHECK(s.find("theorem,theta,alpha,m,N,gamma,eta,beta,eps,feasible") != std::string::npos);
  CHECK(s.find("fail") == std::string::npos);
}
