/// @file bindings.cpp
/// @brief pybind11 module exposing the main operations: periodic-grid
/// calculus, the null-Lagrangian algebra, energy models, the variational
/// step, time marching, and the diagnostic certificates.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polytherm/cli.hpp"
#include "polytherm/diagnostics.hpp"

namespace py = pybind11;
using namespace polytherm;

namespace {

template <int NC>
py::array_t<double> field_to_numpy(const Field<NC>& f) {
  const auto& g = f.grid();
  py::array_t<double> out({g.n[2], g.n[1], g.n[0], NC});
  auto r = out.template mutable_unchecked<4>();
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i)
        for (int c = 0; c < NC; ++c)
          r(k, j, i, c) = f(g.index(i, j, k), c);
  return out;
}

template <int NC>
Field<NC> field_from_numpy(const GridSpec& g, const py::array_t<double>& arr) {
  const auto buf = arr.unchecked<4>();
  if (buf.shape(0) != g.n[2] || buf.shape(1) != g.n[1] ||
      buf.shape(2) != g.n[0] || buf.shape(3) != NC)
    throw std::invalid_argument("field_from_numpy: array shape must be "
                                "(n3, n2, n1, components)");
  Field<NC> f(g);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i)
        for (int c = 0; c < NC; ++c)
          f(g.index(i, j, k), c) = buf(k, j, i, c);
  return f;
}

Mat3 mat3_from_numpy(const py::array_t<double>& arr) {
  const auto buf = arr.unchecked<2>();
  if (buf.shape(0) != 3 || buf.shape(1) != 3)
    throw std::invalid_argument("expected a 3x3 array");
  Mat3 M;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) M(i, a) = buf(i, a);
  return M;
}

py::array_t<double> mat3_to_numpy(const Mat3& M) {
  py::array_t<double> out({3, 3});
  auto r = out.mutable_unchecked<2>();
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) r(i, a) = M(i, a);
  return out;
}

py::dict report_to_dict(const StepReport& r) {
  py::dict d;
  d["newton_iters"] = r.newton_iters;
  d["cg_iters_total"] = r.cg_iters_total;
  d["grad_norm_final"] = r.grad_norm_final;
  d["el_residual"] = r.el_residual;
  d["energy_before"] = r.energy_before;
  d["energy_after"] = r.energy_after;
  d["relative_energy"] = r.relative_energy;
  d["dissipation_margin"] = r.dissipation_margin;
  d["eta_min"] = r.eta_min;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variational time stepping for adiabatic polyconvex "
            "thermoelasticity on the periodic 3-torus";

  py::register_exception<ConstitutiveDomainError>(m, "ConstitutiveDomainError");
  py::register_exception<StepDomainError>(m, "StepDomainError");
  py::register_exception<StepSolveError>(m, "StepSolveError");
  py::register_exception<CheckpointError>(m, "CheckpointError");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<std::array<int, 3>, std::array<double, 3>>(), py::arg("n"),
           py::arg("length"))
      .def_readonly("n", &GridSpec::n)
      .def_readonly("length", &GridSpec::length)
      .def_readonly("dx", &GridSpec::dx)
      .def("points", &GridSpec::points)
      .def("cell_volume", &GridSpec::cell_volume);

  // Fields cross the boundary as numpy arrays of shape (n3, n2, n1, comps).
  m.def("diff", [](const GridSpec& g, const py::array_t<double>& f, int axis) {
    const auto comps = f.shape(3);
    if (comps == 1) return field_to_numpy(diff(field_from_numpy<1>(g, f), axis));
    if (comps == 3) return field_to_numpy(diff(field_from_numpy<3>(g, f), axis));
    if (comps == 9) return field_to_numpy(diff(field_from_numpy<9>(g, f), axis));
    if (comps == 19) return field_to_numpy(diff(field_from_numpy<19>(g, f), axis));
    throw std::invalid_argument("diff: unsupported component count");
  }, py::arg("grid"), py::arg("field"), py::arg("axis"),
     "Second-order centered periodic difference along axis in 1..3");
  m.def("gradient", [](const GridSpec& g, const py::array_t<double>& v) {
    return field_to_numpy(gradient(field_from_numpy<3>(g, v)));
  });
  m.def("divergence", [](const GridSpec& g, const py::array_t<double>& T) {
    return field_to_numpy(divergence(field_from_numpy<9>(g, T)));
  });
  m.def("integrate", [](const GridSpec& g, const py::array_t<double>& f) {
    return integrate(field_from_numpy<1>(g, f));
  });
  m.def("inner", [](const GridSpec& g, const py::array_t<double>& f,
                    const py::array_t<double>& q) {
    const auto comps = f.shape(3);
    if (comps == 1) return inner(field_from_numpy<1>(g, f), field_from_numpy<1>(g, q));
    if (comps == 3) return inner(field_from_numpy<3>(g, f), field_from_numpy<3>(g, q));
    if (comps == 9) return inner(field_from_numpy<9>(g, f), field_from_numpy<9>(g, q));
    if (comps == 19) return inner(field_from_numpy<19>(g, f), field_from_numpy<19>(g, q));
    throw std::invalid_argument("inner: unsupported component count");
  });
  m.def("curl_residual", [](const GridSpec& g, const py::array_t<double>& F) {
    return curl_residual(field_from_numpy<9>(g, F));
  });

  m.def("cof", [](const py::array_t<double>& F) {
    return mat3_to_numpy(cof(mat3_from_numpy(F)));
  });
  m.def("det", [](const py::array_t<double>& F) {
    return det(mat3_from_numpy(F));
  });
  m.def("phi", [](const py::array_t<double>& F) {
    const ExtVec p = phi(mat3_from_numpy(F));
    py::array_t<double> out(kExtComps);
    auto r = out.mutable_unchecked<1>();
    for (int c = 0; c < kExtComps; ++c) r(c) = p[std::size_t(c)];
    return out;
  });
  m.def("dphi_apply", [](const py::array_t<double>& F0, const Vec3& v) {
    const DphiPairing t = dphi_apply(mat3_from_numpy(F0), v);
    py::array_t<double> out({kExtComps, 3});
    auto r = out.mutable_unchecked<2>();
    for (int B = 0; B < kExtComps; ++B)
      for (int a = 0; a < 3; ++a) r(B, a) = t[std::size_t(B)][std::size_t(a)];
    return out;
  });

  py::class_<EnergyModel, std::shared_ptr<EnergyModel>>(m, "EnergyModel")
      .def("eval", [](const EnergyModel& e, const ExtVec& xi, double eta) {
        return e.eval(xi, eta);
      })
      .def("grad", [](const EnergyModel& e, const ExtVec& xi, double eta) {
        const EnergyDerivs d = e.grad(xi, eta);
        return py::make_tuple(d.e_xi, d.theta);
      })
      .def("hess_vec", [](const EnergyModel& e, const ExtVec& xi, double eta,
                          const ExtVec& dxi, double deta) {
        ExtVec hx{};
        double he = 0.0;
        e.hess_vec(xi, eta, dxi, deta, hx, he);
        return py::make_tuple(hx, he);
      })
      .def("theta", &EnergyModel::theta)
      .def_property_readonly("name", &EnergyModel::name)
      .def_property_readonly("convexity",
                             [](const EnergyModel& e) { return e.meta().convexity; })
      .def_property_readonly("theta_floor",
                             [](const EnergyModel& e) { return e.meta().theta_floor; });

  m.def("make_model",
        [](const std::string& name, const std::map<std::string, double>& prm) {
          return std::shared_ptr<EnergyModel>(make_model({name, prm}));
        },
        py::arg("name"), py::arg("params") = std::map<std::string, double>{});

  m.def("check_hypotheses", [](const EnergyModel& model, int samples,
                               unsigned long long seed) {
    const HypothesisReport r = check_hypotheses(model, samples, seed);
    py::dict d;
    d["growth_upper"] = r.growth_upper;
    d["growth_lower"] = r.growth_lower;
    d["theta_sublinear"] = r.theta_sublinear;
    d["dual_growth"] = r.dual_growth;
    d["theta_min"] = r.theta_min;
    d["hess_min"] = r.hess_min;
    d["passed"] = r.passed();
    return d;
  }, py::arg("model"), py::arg("samples") = 200, py::arg("seed") = 12345);

  py::class_<State>(m, "State")
      .def_property_readonly("t", [](const State& s) { return s.t; })
      .def_property_readonly("grid", &State::grid)
      .def_property_readonly("y_lin",
                             [](const State& s) { return mat3_to_numpy(s.y_lin); })
      .def_property_readonly("y", [](const State& s) { return field_to_numpy(s.y); })
      .def_property_readonly("v", [](const State& s) { return field_to_numpy(s.v); })
      .def_property_readonly("xi", [](const State& s) { return field_to_numpy(s.xi); })
      .def_property_readonly("eta",
                             [](const State& s) { return field_to_numpy(s.eta); })
      .def_property_readonly("F", [](const State& s) {
        return field_to_numpy(s.deformation_gradient());
      });

  m.def("make_state", [](const GridSpec& g, const py::array_t<double>& y_lin,
                         const py::array_t<double>& y,
                         const py::array_t<double>& v,
                         const py::array_t<double>& eta, double t) {
    return make_state(mat3_from_numpy(y_lin), field_from_numpy<3>(g, y),
                      field_from_numpy<3>(g, v), field_from_numpy<1>(g, eta), t);
  }, py::arg("grid"), py::arg("y_lin"), py::arg("y"), py::arg("v"),
     py::arg("eta"), py::arg("t") = 0.0);

  py::class_<StepConfig>(m, "StepConfig")
      .def(py::init<>())
      .def_readwrite("h", &StepConfig::h)
      .def_readwrite("newton_tol", &StepConfig::newton_tol)
      .def_readwrite("newton_max", &StepConfig::newton_max)
      .def_readwrite("cg_tol", &StepConfig::cg_tol)
      .def_readwrite("cg_max", &StepConfig::cg_max);

  m.def("solve_step", [](const State& U0, const GridSpec& g,
                         const py::array_t<double>& r, const StepConfig& cfg,
                         const EnergyModel& model) {
    auto [U1, rep] = solve_step(U0, field_from_numpy<1>(g, r), cfg, model);
    return py::make_tuple(U1, report_to_dict(rep));
  });
  m.def("total_energy", &total_energy);
  m.def("relative_energy", &relative_energy);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("steps", &Trajectory::steps)
      .def_property_readonly(
          "states", [](const Trajectory& t) { return t.states; })
      .def_property_readonly("reports", [](const Trajectory& t) {
        py::list out;
        for (const StepReport& r : t.reports) out.append(report_to_dict(r));
        return out;
      })
      .def_property_readonly("failed",
                             [](const Trajectory& t) { return bool(t.failure); })
      .def("telescoping_sum", &Trajectory::telescoping_sum);

  m.def("run", [](const State& init, double T, const StepConfig& cfg,
                  const EnergyModel& model) {
    return run(init, zero_heat(init.grid()), T, cfg, model);
  }, py::arg("init"), py::arg("T"), py::arg("cfg"), py::arg("model"),
     "March T/h steps with zero heat supply");
  m.def("interp_linear", &interp_linear);
  m.def("interp_constant", &interp_constant);
  m.def("checkpoint_save", &checkpoint_save);
  m.def("checkpoint_load", &checkpoint_load);

  m.def("dissipation_certificate", [](const Trajectory& traj,
                                      const EnergyModel& model, double kappa) {
    const DissipationCertificate c = dissipation_certificate(traj, model, kappa);
    py::dict d;
    d["pass"] = c.pass;
    d["c"] = c.c;
    d["worst_margin"] = c.worst_margin;
    d["margin"] = c.margin;
    d["tol_d"] = c.tol_d;
    return d;
  }, py::arg("traj"), py::arg("model"), py::arg("kappa") = 10.0);

  m.def("parse_config_text", &parse_config_text);
  m.def("initial_state_from_config", [](const std::string& text) {
    const RunConfig cfg = parse_config_text(text, "<python>");
    return make_initial_state(cfg);
  });
  m.def("set_worker_count", &set_worker_count);
}
