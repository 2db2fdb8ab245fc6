#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/grid.hpp"
#include "chaoslab/kernel.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

// Initial density u_0.
struct GaussianBlob {
  Vec2 center;
  double sigma = 0.5;
  double weight = 1.0;
};

struct UniformDisk {
  Vec2 center;
  double radius = 1.0;
};

struct InitialDensity {
  // One blob is a Gaussian; several form a mixture with normalised weights.
  std::variant<std::vector<GaussianBlob>, UniformDisk> shape = std::vector<GaussianBlob>{{}};

  static InitialDensity gaussian(Vec2 center, double sigma);

  void validate() const;
  // Sampled on the grid and renormalised to unit mass.
  ScalarField2D on_grid(const GridSpec& spec) const;
  Vec2 draw(Engine& rng) const;
};

// A point drawn from the mollifier j^eps (rejection from the disc).
Vec2 draw_mollifier(Engine& rng, double eps);

struct Diagnostics {
  double t = 0.0;
  double mass = 0.0;
  double m2 = 0.0;  // integral of |x|^2 u
  double l2 = 0.0;
  double l4 = 0.0;
  double linf = 0.0;
  double entropy = 0.0;       // integral of u log u
  double grad_log_sup = 0.0;  // sup |grad log u| on {u > 1e-8}
};

struct PdeState {
  double t = 0.0;
  ScalarField2D u;
  ScalarField2D v;
  std::shared_ptr<const PotentialKernel> kernel;

  double eps() const { return kernel->eps(); }
};

// Raised on NaN or unrecoverable negativity; carries the offending state.
class PdeFailure : public NumericalError {
public:
  PdeFailure(const std::string& what, PdeState state)
      : NumericalError(what), state_(std::move(state)) {}
  const PdeState& state() const { return state_; }

private:
  PdeState state_;
};

// u_0 * j^eps. Throws DomainError on negative total mass.
ScalarField2D mollify_initial(const ScalarField2D& u0, const Mollifier& m);

// v = (-Delta + 1)^-1 chi (u * j^eps).
ScalarField2D signal_from(const ScalarField2D& u, const PotentialKernel& k);

// State at t with v consistent with u.
PdeState make_pde_state(ScalarField2D u, std::shared_ptr<const PotentialKernel> kernel, double t = 0.0);

// Explicit stability limit h^2 / (4 (1 + sup e^-v)).
double dt_max(const PdeState& s);

// One explicit conservative step of du/dt = Delta((e^-v + 1) u).
PdeState step(const PdeState& s, double dt);

Diagnostics diagnose(const PdeState& s);

// Range of the diffusivity e^-v + 1 over the grid.
std::pair<double, double> diffusivity_range(const PdeState& s);

// (Phi^eps * u^eps), the mean-field interaction potential.
ScalarField2D mean_field_potential(const PdeState& s);

struct PdeSnapshot {
  PdeState state;
  Diagnostics diag;
};

struct PdeRun {
  std::vector<PdeSnapshot> snapshots;
  // First output time at which grad_log_sup exceeds 10x its initial value.
  std::optional<double> gradient_blowup_time;
};

// Steps to horizon T with step dt, keeping a snapshot every `every` steps plus the last.
PdeRun run(const PdeState& s0, double T, double dt, int every);

// Columns t, mass, m2, l2, l4, linf, entropy, grad_log_sup.
void write_diagnostics_csv(std::ostream& os, const std::vector<Diagnostics>& rows);

}  // namespace chaoslab
