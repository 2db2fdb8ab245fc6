#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "chaoslab/errors.hpp"
#include "chaoslab/harness.hpp"

namespace py = pybind11;
using namespace chaoslab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as (G, G) arrays indexed [iy, ix].
ScalarField2D to_field(const Array& a, double L) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw DomainError("field must be a square 2-d array");
  const GridSpec g{L, static_cast<int>(a.shape(0))};
  g.validate();
  return ScalarField2D(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const ScalarField2D& f) {
  Array out({f.G(), f.G()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

std::vector<Vec2> to_points(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw DomainError("points must have shape (N, 2)");
  std::vector<Vec2> p(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) p[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
  return p;
}

Theorem theorem(int t) {
  if (t != 1 && t != 2) throw DomainError("theorem must be 1 or 2");
  return t == 1 ? Theorem::deviation_probability : Theorem::strong_chaos;
}

py::dict regime_dict(const RegimeParams& p) {
  py::dict d;
  d["theta"] = p.theta;
  d["alpha"] = p.alpha;
  d["m"] = p.m;
  d["gamma"] = p.gamma;
  d["eta"] = p.eta;
  d["beta"] = p.beta ? py::cast(*p.beta) : py::none();
  d["N"] = p.N;
  d["eps"] = p.eps;
  d["theorem"] = static_cast<int>(p.which);
  return d;
}

}  // namespace

PYBIND11_MODULE(_chaoslab, m) {
  m.doc() = "Bindings for the chaoslab C++ core";
  m.attr("__version__") = kCodeVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def(
      "yukawa_eval",
      [](double r, double mu, double chi) { return yukawa_eval(r, {mu, chi}); }, py::arg("r"), py::arg("mu") = 1.0,
      py::arg("chi") = 1.0);

  m.def(
      "gamma_bound",
      [](double theta, double alpha, int mm, int t) { return gamma_bound(theta, alpha, mm, theorem(t)).value(); },
      py::arg("theta"), py::arg("alpha"), py::arg("m"), py::arg("theorem"));
  m.def(
      "eta_interval",
      [](double theta, double alpha, int mm, double gamma, int t) {
        const Interval iv = eta_interval(theta, alpha, mm, gamma, theorem(t));
        return py::make_tuple(iv.lo, iv.hi);
      },
      py::arg("theta"), py::arg("alpha"), py::arg("m"), py::arg("gamma"), py::arg("theorem"));
  m.def("beta_bound", &beta_bound, py::arg("alpha"), py::arg("gamma"), py::arg("eta"));
  m.def(
      "plan",
      [](double theta, double alpha, int mm, long N, int t, std::optional<double> gamma,
         std::optional<double> eta) { return regime_dict(plan(theta, alpha, mm, N, theorem(t), gamma, eta)); },
      py::arg("theta"), py::arg("alpha"), py::arg("m"), py::arg("N"), py::arg("theorem"),
      py::arg("gamma") = py::none(), py::arg("eta") = py::none());
  m.def(
      "certificate",
      [](double theta, double alpha, int mm, long N, int t) {
        std::ostringstream os;
        write_certificate(os, plan(theta, alpha, mm, N, theorem(t)));
        return os.str();
      },
      py::arg("theta"), py::arg("alpha"), py::arg("m"), py::arg("N"), py::arg("theorem"));

  m.def(
      "kernel_table",
      [](double eps, double L, int G, double mu, double chi) {
        return to_array(build_kernel({mu, chi}, {eps}, GridSpec{L, G}).table());
      },
      py::arg("eps"), py::arg("L"), py::arg("G"), py::arg("mu") = 1.0, py::arg("chi") = 1.0);
  m.def(
      "kernel_norms",
      [](double eps, double L, int G, double mu, double chi) {
        const PotentialKernel k = build_kernel({mu, chi}, {eps}, GridSpec{L, G});
        const KernelNorms n = norm_report(k);
        py::dict d;
        d["sup_phi"] = n.sup_phi;
        d["sup_grad"] = n.sup_grad;
        d["sup_hess"] = n.sup_hess;
        d["l1_phi"] = n.l1_phi;
        d["l1_grad"] = n.l1_grad;
        d["w11"] = n.w11();
        d["truncated"] = k.truncation_flag();
        return d;
      },
      py::arg("eps"), py::arg("L"), py::arg("G"), py::arg("mu") = 1.0, py::arg("chi") = 1.0);

  m.def(
      "helmholtz_solve", [](const Array& rhs, double L) { return to_array(helmholtz_solve(to_field(rhs, L))); },
      py::arg("rhs"), py::arg("L"));
  m.def(
      "deposit", [](const Array& pts, double L, int G) { return to_array(deposit(to_points(pts), {L, G})); },
      py::arg("points"), py::arg("L"), py::arg("G"));
  m.def(
      "silverman_bandwidth",
      [](const Array& pts, double L, int G) { return silverman_bandwidth(to_points(pts), {L, G}); },
      py::arg("points"), py::arg("L"), py::arg("G"));
  m.def(
      "kde",
      [](const Array& pts, double bandwidth, double L, int G) {
        return to_array(kde(to_points(pts), bandwidth, {L, G}));
      },
      py::arg("points"), py::arg("bandwidth"), py::arg("L"), py::arg("G"));
  m.def(
      "l1_distance", [](const Array& f, const Array& g, double L) { return l1_distance(to_field(f, L), to_field(g, L)); },
      py::arg("f"), py::arg("g"), py::arg("L"));
  m.def(
      "relative_entropy",
      [](const Array& f, const Array& g, double L) { return relative_entropy(to_field(f, L), to_field(g, L)); },
      py::arg("f"), py::arg("g"), py::arg("L"));

  m.def(
      "interaction_exact",
      [](const Array& pts, double eps, double L, int G, double mu, double chi) {
        const PotentialKernel k = build_kernel({mu, chi}, {eps}, GridSpec{L, G});
        return interaction_exact(to_points(pts), k);
      },
      py::arg("points"), py::arg("eps"), py::arg("L"), py::arg("G"), py::arg("mu") = 1.0, py::arg("chi") = 1.0);
  m.def(
      "interaction_fast",
      [](const Array& pts, double eps, double L, int G, double mu, double chi) {
        const GridSpec g{L, G};
        const PotentialKernel k = build_kernel({mu, chi}, {eps}, g);
        return interaction_fast(to_points(pts), k, g);
      },
      py::arg("points"), py::arg("eps"), py::arg("L"), py::arg("G"), py::arg("mu") = 1.0, py::arg("chi") = 1.0);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
        cfg.validate();
        RunManifest man;
        {
          py::gil_scoped_release release;
          man = run_experiment(cfg);
        }
        return man.to_json().dump();
      },
      py::arg("config_json"));
  m.def(
      "report",
      [](const std::string& dir) {
        py::list out;
        for (const auto& t : report(dir)) {
          py::dict d;
          d["statistic"] = t.statistic;
          d["status"] = t.status;
          d["n_points"] = t.fit.n;
          d["slope"] = t.fit.slope;
          d["intercept"] = t.fit.intercept;
          d["r2"] = t.fit.r2;
          d["slope_ci"] = py::make_tuple(t.fit.slope_ci_lo, t.fit.slope_ci_hi);
          out.append(d);
        }
        return out;
      },
      py::arg("run_dir"));
}
