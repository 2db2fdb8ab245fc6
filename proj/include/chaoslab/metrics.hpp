#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/grid.hpp"
#include "chaoslab/kernel.hpp"
#include "chaoslab/particles.hpp"

namespace chaoslab {

// Which kernel psi^eps the LLN statistic is taken over.
enum class PsiKind { phi, grad_norm, grad_x, grad_y };

ScalarField2D psi_table(const PotentialKernel& k, PsiKind kind);
std::string to_string(PsiKind kind);

struct LlnStat {
  std::string psi_id;
  std::vector<double> hbar;  // (1/N) sum_j h_ij
  double theta = 0.0;
  bool in_B = false;         // some |hbar_i| > N^-theta
};

// h_ij = psi(Xbar_i - Xbar_j) - (psi * u)(Xbar_i). `psi` is a table centred at the origin node.
LlnStat lln_statistic(std::span<const Vec2> Xbar, const ScalarField2D& psi, const ScalarField2D& u_eps,
                      double theta, std::string psi_id = "phi");

struct Estimate {
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n = 0;
};

// Percentile bootstrap (95%) of the mean.
Estimate bootstrap_mean(std::span<const double> samples, std::uint64_t seed = 20240901,
                        int resamples = 2000);

// Mean of |hbar_1|^(2m) over replicas; needs >= 50 replicas.
Estimate lln_moment(std::span<const LlnStat> replicas, int m, std::uint64_t seed = 20240901);

// 95% Wilson score interval.
Estimate wilson(std::size_t successes, std::size_t n, double z = 1.959963984540054);

// Fraction of trials with max_i |X_i - Xbar_i|(t) > N^-alpha.
Estimate deviation_probability(std::span<const TrialRecord> trials, double alpha, double t);
// Same with an explicit threshold.
Estimate deviation_probability_at(std::span<const TrialRecord> trials, double threshold, double t);

// Silverman's rule for a 2-d Gaussian kernel, clamped to [h, 10h].
double silverman_bandwidth(std::span<const Vec2> points, const GridSpec& spec);

// Gaussian KDE on the grid (deposit + convolution). Requires bandwidth >= h.
ScalarField2D kde(std::span<const Vec2> points, double bandwidth, const GridSpec& spec);

double l1_distance(const ScalarField2D& f, const ScalarField2D& g);

struct EntropyValue {
  double value = 0.0;
  double excluded_mass = 0.0;  // mass of f where g <= 1e-12
};

// h^2 sum f log(f/g) over {f > 1e-12, g > 1e-12}. Excluded mass above 1e-3 is an error.
EntropyValue relative_entropy_detail(const ScalarField2D& f, const ScalarField2D& g);
double relative_entropy(const ScalarField2D& f, const ScalarField2D& g);

struct DistanceReport {
  double l1 = 0.0;
  double rel_entropy = 0.0;
  double ckp_lhs = 0.0;  // ||f - g||_1
  double ckp_rhs = 0.0;  // sqrt(2 H)
  double bandwidth = 0.0;
  double excluded_mass = 0.0;
  bool violation = false;
};

// Standard-form check ||f - g||_1 <= sqrt(2 H(f|g)).
DistanceReport ckp_check(const ScalarField2D& f, const ScalarField2D& g, double bandwidth = 0.0);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
  bool sufficient = false;  // at least two distinct abscissae
  double slope_ci_lo = 0.0;
  double slope_ci_hi = 0.0;
};

// Least squares fit of log y against log x.
Regression loglog_fit(std::span<const double> x, std::span<const double> y);
// As loglog_fit, with a parametric bootstrap CI for the slope: each log y_i is redrawn
// from a normal whose 95% interval is [log lo_i, log hi_i].
Regression loglog_fit(std::span<const double> x, std::span<const Estimate> y, std::uint64_t seed = 7,
                      int resamples = 2000);

}  // namespace chaoslab
