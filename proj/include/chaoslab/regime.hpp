#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chaoslab/errors.hpp"

namespace chaoslab {

enum class Theorem { deviation_probability = 1, strong_chaos = 2 };

// One inequality of the parameter certificate: lhs <relation> rhs.
struct Constraint {
  std::string name;
  std::string relation;  // "<", "<=", ">", ">="
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct Feasibility {
  bool feasible = true;
  std::vector<Constraint> constraints;

  // Names of the failed constraints, comma separated.
  std::string reasons() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = true;
  bool hi_open = true;

  bool empty() const;
  bool contains(double x) const;
  double midpoint() const { return 0.5 * (lo + hi); }
};

class InfeasibleRegime : public DomainError {
public:
  using DomainError::DomainError;
};

// theta in (0, 1/2), alpha in (0, theta/2), and the m bound: m > (1+theta)/(1-2 theta)
// strictly for theorem 1, m >= for theorem 2.
Feasibility check_feasible(double theta, double alpha, int m, Theorem which);

// The two arguments of the min in the gamma bound.
struct GammaBound {
  double first = 0.0;   // alpha/3 (thm 1) or 2 alpha/7 (thm 2)
  double second = 0.0;  // (-2 alpha + m(1 - 2 theta) - 1) / (4m + 4)
  double value() const;
};

GammaBound gamma_bound(double theta, double alpha, int m, Theorem which);
// (0, bound). Throws InfeasibleRegime when the inputs fail check_feasible.
Interval gamma_interval(double theta, double alpha, int m, Theorem which);

struct EtaBound {
  double first = 0.0;   // theta - 2 alpha
  double second = 0.0;  // -(4m+4) gamma - 2 alpha + m(1 - 2 theta) - 1
  double value() const;
};

EtaBound eta_bound(double theta, double alpha, int m, double gamma);
// Theorem 1: (0, cap]; theorem 2: (5 gamma, cap). May be empty.
Interval eta_interval(double theta, double alpha, int m, double gamma, Theorem which);

// min{2 alpha/gamma - 6, eta/gamma - 4}; throws InfeasibleRegime if not > 1.
double beta_bound(double alpha, double gamma, double eta);

struct RegimeParams {
  double theta = 0.3;
  double alpha = 0.1;
  int m = 4;
  double gamma = 0.0;
  double eta = 0.0;
  std::optional<double> beta;
  long N = 1024;
  double eps = 1.0;  // N^-gamma
  Theorem which = Theorem::deviation_probability;

  // Every inequality of the chosen theorem evaluated on these values.
  std::vector<Constraint> certificate() const;
  // Throws InfeasibleRegime naming the first violated inequality.
  void validate() const;
};

// gamma and eta at interval midpoints unless overridden, beta at its maximum (theorem 2),
// eps = N^-gamma.
RegimeParams plan(double theta, double alpha, int m, long N, Theorem which,
                  std::optional<double> gamma_override = std::nullopt,
                  std::optional<double> eta_override = std::nullopt);

// Aligned table of the certificate followed by one machine-readable CSV row.
void write_certificate(std::ostream& os, const RegimeParams& p);

}  // namespace chaoslab
