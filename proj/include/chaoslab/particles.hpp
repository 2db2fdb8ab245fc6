#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "chaoslab/grid.hpp"
#include "chaoslab/kernel.hpp"
#include "chaoslab/pde.hpp"

namespace chaoslab {

// sqrt(2 e^-s + 2); requires s >= 0.
double diffusion_coeff(double s);

// S_i = (1/N) sum_j Phi^eps(X_i - X_j), self term included. O(N^2).
std::vector<double> interaction_exact(std::span<const Vec2> X, const PotentialKernel& k);

// Deposit -> convolve -> interpolate, with the smeared self term replaced by Phi^eps(0).
// With `validate`, also computes the exact sums and throws NumericalError when
// max_i |fast - exact| > 1e-3 * sup Phi^eps.
std::vector<double> interaction_fast(std::span<const Vec2> X, const PotentialKernel& k,
                                     const GridSpec& g, bool validate = false);

enum class InteractionMethod { exact, fast };

struct NoiseBlock {
  std::vector<Vec2> dW;
};

// dW_i ~ N(0, dt I), a pure function of (seed, streams[i], step).
NoiseBlock make_noise(std::uint64_t seed, std::span<const std::uint64_t> streams, std::uint64_t step,
                      double dt);

// Interacting system X and mean-field system Xbar under synchronous coupling.
struct CoupledEnsemble {
  std::vector<Vec2> X;
  std::vector<Vec2> Xbar;
  std::vector<std::uint64_t> streams;  // Brownian stream of each particle
  double t = 0.0;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  double alpha = 0.1;
  std::optional<double> tau_hit;
  double running_max = 0.0;  // sup over steps of max_i |X_i - Xbar_i|

  std::size_t N() const { return X.size(); }
  double threshold() const;  // N^-alpha
};

CoupledEnsemble make_ensemble(std::vector<Vec2> initial, std::uint64_t seed, double alpha);

// max_i |X_i - Xbar_i| (minimum image).
double max_deviation(const CoupledEnsemble& e, const GridSpec& g);

// Phi^eps * u^eps at time t.
struct MeanFieldSnapshot {
  double t = 0.0;
  ScalarField2D potential;
};

// One Euler-Maruyama step of both systems with shared increments. `mf.t` must equal e.t.
CoupledEnsemble coupled_step(CoupledEnsemble e, const MeanFieldSnapshot& mf, const PotentialKernel& k,
                             double dt, InteractionMethod method = InteractionMethod::fast);

// Mean-field potentials at every SDE step time, from one PDE solve shared by all replicas.
struct MeanFieldPath {
  double dt = 0.0;
  std::vector<MeanFieldSnapshot> steps;  // t = 0, dt, ..., T - dt
  PdeState final_state;                  // u^eps(T)
};

// min(eps^2 / 10, h^2 / 8).
double default_sde_dt(double eps, double h);
// PDE sub-steps per SDE step so that the PDE step stays below h^2 / 8.
int pde_substeps(double dt_sde, double h);

MeanFieldPath solve_mean_field(const PdeState& s0, double T, double dt_sde);

struct CoupledRunConfig {
  std::size_t N = 256;
  double alpha = 0.1;
  int k = 2;                // exponent of S_alpha^k
  std::uint64_t seed = 1;
  int record_every = 1;     // SDE steps between recorded rows
  InteractionMethod method = InteractionMethod::fast;
  InitialDensity initial;
  // Overrides the sampled initial positions and the identity stream assignment.
  std::optional<std::vector<Vec2>> initial_positions;
  std::optional<std::vector<std::uint64_t>> streams;
};

struct TrialRecord {
  std::size_t N = 0;
  double eps = 0.0;
  double alpha = 0.0;
  int k = 2;
  double T = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> max_dev;    // max_i |X_i - Xbar_i|(t)
  std::vector<double> S_alpha_k;  // (N^alpha max dev(t ^ tau))^k, capped at 1
  std::optional<double> tau_hit;
  double sup_dev = 0.0;           // sup over all steps
  std::vector<Vec2> final_X;
  std::vector<Vec2> final_Xbar;

  // max_dev at the recorded time closest to t (within half a step).
  double max_dev_at(double t) const;
};

TrialRecord coupled_run(const CoupledRunConfig& cfg, const MeanFieldPath& path, const PotentialKernel& k);

// Columns t, max_dev, S_alpha_k, tau_hit_flag.
void write_trial_csv(std::ostream& os, const TrialRecord& r);
// Columns i, x, y, xbar_x, xbar_y.
void write_ensemble_csv(std::ostream& os, std::span<const Vec2> X, std::span<const Vec2> Xbar);

}  // namespace chaoslab
