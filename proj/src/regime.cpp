#include "chaoslab/regime.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace chaoslab {

namespace {

// Inputs such as theta = 0.4 are not exact in binary; boundary cases like
// m = (1 + theta)/(1 - 2 theta) = 7 need a relative slack to compare as written.
constexpr double kSlack = 1e-12;

double slack(double b) { return kSlack * std::max(1.0, std::abs(b)); }
bool lt(double a, double b) { return a < b - slack(b); }
bool le(double a, double b) { return a <= b + slack(b); }
bool gt(double a, double b) { return a > b + slack(b); }
bool ge(double a, double b) { return a >= b - slack(b); }

Constraint make(std::string name, std::string rel, double lhs, double rhs) {
  bool pass = false;
  if (rel == "<") pass = lt(lhs, rhs);
  else if (rel == "<=") pass = le(lhs, rhs);
  else if (rel == ">") pass = gt(lhs, rhs);
  else pass = ge(lhs, rhs);
  return {std::move(name), std::move(rel), lhs, rhs, pass};
}

double m_threshold(double theta) { return (1.0 + theta) / (1.0 - 2.0 * theta); }

double gamma_numerator(double theta, double alpha, int m) {
  return -2.0 * alpha + m * (1.0 - 2.0 * theta) - 1.0;
}

void require(const Feasibility& f) {
  if (!f.feasible) throw InfeasibleRegime("infeasible parameters: " + f.reasons());
}

}  // namespace

std::string Feasibility::reasons() const {
  std::string out;
  for (const auto& c : constraints) {
    if (c.pass) continue;
    if (!out.empty()) out += ", ";
    std::ostringstream s;
    s << c.name << " (" << c.lhs << ' ' << c.relation << ' ' << c.rhs << " fails)";
    out += s.str();
  }
  return out;
}

bool Interval::empty() const {
  if (lo_open || hi_open) return !lt(lo, hi);
  return !le(lo, hi);
}

bool Interval::contains(double x) const {
  const bool above = lo_open ? gt(x, lo) : ge(x, lo);
  const bool below = hi_open ? lt(x, hi) : le(x, hi);
  return above && below;
}

Feasibility check_feasible(double theta, double alpha, int m, Theorem which) {
  Feasibility f;
  f.constraints.push_back(make("theta > 0", ">", theta, 0.0));
  f.constraints.push_back(make("theta < 1/2", "<", theta, 0.5));
  f.constraints.push_back(make("alpha > 0", ">", alpha, 0.0));
  f.constraints.push_back(make("alpha < theta/2", "<", alpha, 0.5 * theta));
  if (theta < 0.5) {
    if (which == Theorem::deviation_probability)
      f.constraints.push_back(make("m > (theta+1)/(1-2theta)", ">", m, m_threshold(theta)));
    else
      f.constraints.push_back(make("m >= (1+theta)/(1-2theta)", ">=", m, m_threshold(theta)));
  }
  f.constraints.push_back(make("m >= 1", ">=", m, 1.0));
  f.feasible = std::all_of(f.constraints.begin(), f.constraints.end(), [](const Constraint& c) { return c.pass; });
  return f;
}

double GammaBound::value() const { return std::min(first, second); }

GammaBound gamma_bound(double theta, double alpha, int m, Theorem which) {
  GammaBound b;
  b.first = which == Theorem::deviation_probability ? alpha / 3.0 : 2.0 * alpha / 7.0;
  b.second = gamma_numerator(theta, alpha, m) / (4.0 * m + 4.0);
  return b;
}

Interval gamma_interval(double theta, double alpha, int m, Theorem which) {
  require(check_feasible(theta, alpha, m, which));
  return {0.0, gamma_bound(theta, alpha, m, which).value(), true, true};
}

double EtaBound::value() const { return std::min(first, second); }

EtaBound eta_bound(double theta, double alpha, int m, double gamma) {
  return {theta - 2.0 * alpha, -(4.0 * m + 4.0) * gamma + gamma_numerator(theta, alpha, m)};
}

Interval eta_interval(double theta, double alpha, int m, double gamma, Theorem which) {
  const Interval g = gamma_interval(theta, alpha, m, which);
  if (!g.contains(gamma)) {
    std::ostringstream s;
    s << "gamma=" << gamma << " outside (0, " << g.hi << ")";
    throw InfeasibleRegime(s.str());
  }
  const double cap = eta_bound(theta, alpha, m, gamma).value();
  if (which == Theorem::deviation_probability) return {0.0, cap, true, false};
  return {5.0 * gamma, cap, true, true};
}

double beta_bound(double alpha, double gamma, double eta) {
  if (!(gamma > 0.0)) throw InfeasibleRegime("beta_bound: gamma must be positive");
  const double b = std::min(2.0 * alpha / gamma - 6.0, eta / gamma - 4.0);
  if (!gt(b, 1.0)) {
    std::ostringstream s;
    s << "beta bound " << b << " is not > 1";
    throw InfeasibleRegime(s.str());
  }
  return b;
}

std::vector<Constraint> RegimeParams::certificate() const {
  std::vector<Constraint> c = check_feasible(theta, alpha, m, which).constraints;
  const GammaBound gb = gamma_bound(theta, alpha, m, which);
  const EtaBound eb = eta_bound(theta, alpha, m, gamma);
  c.push_back(make("gamma > 0", ">", gamma, 0.0));
  if (which == Theorem::deviation_probability) {
    c.push_back(make("gamma < alpha/3", "<", gamma, gb.first));
  } else {
    c.push_back(make("gamma < 2alpha/7", "<", gamma, gb.first));
  }
  c.push_back(make("gamma < (-2alpha+m(1-2theta)-1)/(4m+4)", "<", gamma, gb.second));
  if (which == Theorem::deviation_probability) {
    c.push_back(make("eta > 0", ">", eta, 0.0));
    c.push_back(make("eta <= theta-2alpha", "<=", eta, eb.first));
    c.push_back(make("eta <= -(4m+4)gamma-2alpha+m(1-2theta)-1", "<=", eta, eb.second));
  } else {
    c.push_back(make("eta > 5gamma", ">", eta, 5.0 * gamma));
    c.push_back(make("eta < theta-2alpha", "<", eta, eb.first));
    c.push_back(make("eta < -(4m+4)gamma-2alpha+m(1-2theta)-1", "<", eta, eb.second));
    const double b = beta.value_or(0.0);
    c.push_back(make("beta > 1", ">", b, 1.0));
    c.push_back(make("beta <= 2alpha/gamma-6", "<=", b, 2.0 * alpha / gamma - 6.0));
    c.push_back(make("beta <= eta/gamma-4", "<=", b, eta / gamma - 4.0));
  }
  c.push_back(make("eps = N^-gamma", "<=", std::abs(eps - std::pow(static_cast<double>(N), -gamma)), 0.0));
  return c;
}

void RegimeParams::validate() const {
  for (const auto& c : certificate())
    if (!c.pass) {
      std::ostringstream s;
      s << "violated: " << c.name << " (" << c.lhs << ' ' << c.relation << ' ' << c.rhs << ')';
      throw InfeasibleRegime(s.str());
    }
}

RegimeParams plan(double theta, double alpha, int m, long N, Theorem which,
                  std::optional<double> gamma_override, std::optional<double> eta_override) {
  if (N < 1) throw InfeasibleRegime("plan: N must be positive");
  const Interval gi = gamma_interval(theta, alpha, m, which);
  if (gi.empty()) throw InfeasibleRegime("plan: gamma interval is empty");
  RegimeParams p;
  p.theta = theta;
  p.alpha = alpha;
  p.m = m;
  p.N = N;
  p.which = which;
  p.gamma = gamma_override.value_or(gi.midpoint());
  const Interval ei = eta_interval(theta, alpha, m, p.gamma, which);
  if (ei.empty()) throw InfeasibleRegime("plan: eta interval is empty");
  p.eta = eta_override.value_or(ei.midpoint());
  if (!ei.contains(p.eta)) throw InfeasibleRegime("plan: eta outside its interval");
  if (which == Theorem::strong_chaos) p.beta = beta_bound(alpha, p.gamma, p.eta);
  p.eps = std::pow(static_cast<double>(N), -p.gamma);
  p.validate();
  return p;
}

void write_certificate(std::ostream& os, const RegimeParams& p) {
  const auto cert = p.certificate();
  std::size_t width = 0;
  for (const auto& c : cert) width = std::max(width, c.name.size());
  os << "theorem " << static_cast<int>(p.which) << "  theta=" << p.theta << " alpha=" << p.alpha
     << " m=" << p.m << " N=" << p.N << '\n';
  os << std::setprecision(10);
  for (const auto& c : cert) {
    os << "  " << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << std::right
       << std::setw(16) << c.lhs << ' ' << std::setw(2) << c.relation << ' ' << std::setw(16) << c.rhs
       << "  " << (c.pass ? "pass" : "FAIL") << '\n';
  }
  os << "theorem,theta,alpha,m,N,gamma,eta,beta,eps,feasible\n";
  const bool ok = std::all_of(cert.begin(), cert.end(), [](const Constraint& c) { return c.pass; });
  os << std::setprecision(17) << static_cast<int>(p.which) << ',' << p.theta << ',' << p.alpha << ','
     << p.m << ',' << p.N << ',' << p.gamma << ',' << p.eta << ',';
  if (p.beta) os << *p.beta;
  os << ',' << p.eps << ',' << (ok ? 1 : 0) << '\n';
}

}  // namespace chaoslab
