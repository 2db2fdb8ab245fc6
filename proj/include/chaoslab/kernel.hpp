#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "chaoslab/grid.hpp"

namespace chaoslab {

struct YukawaParams {
  double mu = 1.0;   // screening mass
  double chi = 0.5;  // chemotactic strength

  void validate() const;
};

enum class MollifierProfile {
  // c * exp(-1 / (1 - |x|^2)) on the unit disc.
  bump,
};

struct Mollifier {
  double eps = 0.1;
  MollifierProfile profile = MollifierProfile::bump;

  void validate() const;
};

// chi * Yukawa(r), the time-integral form evaluated by trapezoidal quadrature in log-time.
double yukawa_eval(double r, const YukawaParams& p);

// j^eps(x) = eps^-2 j(x / eps) with j normalised to unit mass in the continuum.
double mollifier_eval(Vec2 x, const Mollifier& m);

// j^eps sampled on the grid with its centre at the origin node; h^2 * sum == 1.
ScalarField2D mollifier_field(const GridSpec& spec, const Mollifier& m);

// Tabulated Phi^eps = chi * (Yukawa * j^eps) on the periodic box.
// Immutable once built.
class PotentialKernel {
public:
  const YukawaParams& params() const { return params_; }
  double eps() const { return eps_; }
  const GridSpec& spec() const { return table_.spec(); }

  // Values at displacements on the grid, origin at node (G/2, G/2).
  const ScalarField2D& table() const { return table_; }
  const ScalarField2D& grad_x() const { return grad_x_; }
  const ScalarField2D& grad_y() const { return grad_y_; }
  // |grad Phi^eps| at every node.
  ScalarField2D grad_norm() const;
  // Prepared for convolve_with(f, ...).
  const Spectrum& spectrum() const { return spectrum_; }
  const ScalarField2D& mollifier() const { return mollifier_; }

  // Bilinear lookup at an arbitrary displacement.
  double operator()(Vec2 d) const { return interpolate(table_, d); }
  double at_origin() const { return table_(spec().G / 2, spec().G / 2); }

  // Free-space Yukawa value at r = L/2 (no chi); above 1e-8 the periodic images matter.
  double boundary_value() const { return boundary_value_; }
  bool truncation_flag() const { return truncation_flag_; }

private:
  friend PotentialKernel build_kernel(const YukawaParams&, const Mollifier&, const GridSpec&);

  YukawaParams params_;
  double eps_ = 0.0;
  ScalarField2D table_;
  ScalarField2D grad_x_;
  ScalarField2D grad_y_;
  ScalarField2D mollifier_;
  Spectrum spectrum_;
  double boundary_value_ = 0.0;
  bool truncation_flag_ = false;
};

// Requires h <= eps / 4. The convolution is done spectrally on the torus, so the table is
// the periodised kernel; a box shorter than 8/mu or with boundary Yukawa value above 1e-8
// sets truncation_flag().
PotentialKernel build_kernel(const YukawaParams& p, const Mollifier& m, const GridSpec& g);

struct KernelNorms {
  double sup_phi = 0.0;
  double sup_grad = 0.0;  // max |grad Phi^eps|
  double sup_hess = 0.0;  // max spectral norm of D^2 Phi^eps
  double l1_phi = 0.0;
  double l1_grad = 0.0;   // integral of |grad Phi^eps|

  double w11() const { return l1_phi + l1_grad; }
};

KernelNorms norm_report(const PotentialKernel& k);

// Columns x, y, phi, dphi_dx, dphi_dy.
void write_kernel_csv(std::ostream& os, const PotentialKernel& k);

}  // namespace chaoslab
