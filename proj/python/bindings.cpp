#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stommel/calibration.hpp"
#include "stommel/dynamics.hpp"
#include "stommel/etkf.hpp"
#include "stommel/experiments.hpp"
#include "stommel/io.hpp"
#include "stommel/model.hpp"
#include "stommel/observations.hpp"

namespace py = pybind11;
using namespace stommel;

namespace {

void bind_model(py::module_& m) {
  m.attr("SECONDS_PER_YEAR") = kSecondsPerYear;
  m.attr("SECONDS_PER_MONTH") = kSecondsPerMonth;
  m.def("year_to_model_time", &year_to_model_time);
  m.def("model_time_to_year", &model_time_to_year);

  py::class_<PhysicalConstants>(m, "PhysicalConstants")
      .def(py::init<>())
      .def_readwrite("rho0", &PhysicalConstants::rho0)
      .def_readwrite("S0", &PhysicalConstants::S0)
      .def_readwrite("T0", &PhysicalConstants::T0)
      .def_readwrite("alphaT", &PhysicalConstants::alphaT)
      .def_readwrite("alphaS", &PhysicalConstants::alphaS);

  py::class_<BoxGeometry>(m, "BoxGeometry")
      .def(py::init<>())
      .def_readwrite("dx", &BoxGeometry::dx)
      .def_readwrite("dy_p", &BoxGeometry::dy_p)
      .def_readwrite("dy_e", &BoxGeometry::dy_e)
      .def_readwrite("dz", &BoxGeometry::dz)
      .def("dy_bar", &BoxGeometry::dy_bar);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def(py::init([](double kT, double kS, double gamma) { return ModelParams{kT, kS, gamma}; }), py::arg("kT"),
           py::arg("kS"), py::arg("gamma"))
      .def_readwrite("kT", &ModelParams::kT)
      .def_readwrite("kS", &ModelParams::kS)
      .def_readwrite("gamma", &ModelParams::gamma)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(kT=" + io::format_double(p.kT) + ", kS=" + io::format_double(p.kS) +
               ", gamma=" + io::format_double(p.gamma) + ")";
      });

  py::class_<OceanState>(m, "OceanState")
      .def(py::init<>())
      .def(py::init([](double Te, double Tp, double Se, double Sp) { return OceanState{Te, Tp, Se, Sp}; }),
           py::arg("Te"), py::arg("Tp"), py::arg("Se"), py::arg("Sp"))
      .def_readwrite("Te", &OceanState::Te)
      .def_readwrite("Tp", &OceanState::Tp)
      .def_readwrite("Se", &OceanState::Se)
      .def_readwrite("Sp", &OceanState::Sp)
      .def("to_list", &OceanState::to_array);

  py::class_<HarmonicCoeffs>(m, "HarmonicCoeffs")
      .def(py::init([](double c0, double c_cos, double c_sin) { return HarmonicCoeffs{c0, c_cos, c_sin}; }),
           py::arg("c0") = 0.0, py::arg("c_cos") = 0.0, py::arg("c_sin") = 0.0)
      .def_readwrite("c0", &HarmonicCoeffs::c0)
      .def_readwrite("c_cos", &HarmonicCoeffs::c_cos)
      .def_readwrite("c_sin", &HarmonicCoeffs::c_sin)
      .def("evaluate", &HarmonicCoeffs::evaluate)
      .def("amplitude", &HarmonicCoeffs::amplitude);

  py::class_<SurfaceForcing>(m, "SurfaceForcing")
      .def(py::init<>())
      .def_static("en4_fit", &SurfaceForcing::en4_fit)
      .def_readwrite("Te", &SurfaceForcing::Te)
      .def_readwrite("Tp", &SurfaceForcing::Tp)
      .def_readwrite("Se", &SurfaceForcing::Se)
      .def_readwrite("Sp", &SurfaceForcing::Sp)
      .def_readwrite("period", &SurfaceForcing::period)
      .def("annual_mean", &SurfaceForcing::annual_mean);

  py::class_<ClimateScenario>(m, "ClimateScenario")
      .def(py::init<>())
      .def_readwrite("enabled", &ClimateScenario::enabled)
      .def_readwrite("onset_year", &ClimateScenario::onset_year)
      .def_readwrite("warm_e", &ClimateScenario::warm_e)
      .def_readwrite("warm_p", &ClimateScenario::warm_p)
      .def_readwrite("ice_volume", &ClimateScenario::ice_volume)
      .def_readwrite("melt_period", &ClimateScenario::melt_period);

  py::class_<ModelContext>(m, "ModelContext")
      .def(py::init<>())
      .def_readwrite("constants", &ModelContext::constants)
      .def_readwrite("geometry", &ModelContext::geometry)
      .def_readwrite("params", &ModelContext::params)
      .def_readwrite("forcing", &ModelContext::forcing)
      .def_readwrite("scenario", &ModelContext::scenario);

  py::class_<DimensionlessState>(m, "DimensionlessState")
      .def_readonly("T", &DimensionlessState::T)
      .def_readonly("S", &DimensionlessState::S)
      .def_readonly("Psi", &DimensionlessState::Psi)
      .def_readonly("eta1", &DimensionlessState::eta1)
      .def_readonly("eta2", &DimensionlessState::eta2)
      .def_readonly("eta3", &DimensionlessState::eta3)
      .def_readonly("Omega", &DimensionlessState::Omega)
      .def_readonly("B", &DimensionlessState::B)
      .def_readonly("Bhat", &DimensionlessState::Bhat)
      .def_readonly("A", &DimensionlessState::A);

  m.def("density", &density);
  m.def("transport", &transport);
  m.def("tendencies", &tendencies);
  m.def("nondimensionalize", &nondimensionalize);
  m.def(
      "integrate",
      [](const OceanState& x0, double t0, double t1, double dt, const ModelContext& ctx) {
        const Trajectory traj = integrate(x0, t0, t1, dt, ctx);
        Eigen::MatrixXd states(static_cast<Eigen::Index>(traj.size()), 4);
        for (std::size_t i = 0; i < traj.size(); ++i) {
          const auto a = traj.states[i].to_array();
          for (int k = 0; k < 4; ++k) states(static_cast<Eigen::Index>(i), k) = a[static_cast<std::size_t>(k)];
        }
        return py::make_tuple(traj.times, states);
      },
      "Returns (times, states) with state columns Te, Tp, Se, Sp.");
}

void bind_dynamics(py::module_& m) {
  auto d = m.def_submodule("dynamics");
  py::class_<dynamics::EquilibriumPoint>(d, "EquilibriumPoint")
      .def_readonly("Psi", &dynamics::EquilibriumPoint::Psi)
      .def_readonly("T", &dynamics::EquilibriumPoint::T)
      .def_readonly("S", &dynamics::EquilibriumPoint::S)
      .def_property_readonly("regime", [](const dynamics::EquilibriumPoint& e) { return dynamics::to_string(e.regime); })
      .def_property_readonly("stability",
                             [](const dynamics::EquilibriumPoint& e) { return dynamics::to_string(e.stability); });
  d.def("autonomous_rhs", [](double T, double S, double eta1, double eta2, double eta3) {
    const auto r = dynamics::autonomous_rhs(T, S, eta1, eta2, eta3);
    return py::make_tuple(r.dT, r.dS);
  });
  d.def("find_equilibria", &dynamics::find_equilibria);
  d.def("saddle_node", [](double eta1, double eta3) {
    const auto sn = dynamics::saddle_node(eta1, eta3);
    return py::make_tuple(sn.eta2, sn.Psi);
  });
  d.def("nsf_point", &dynamics::nsf_point);
  d.def("th_branch", py::overload_cast<double, double, double>(&dynamics::th_branch));
  d.def("sa_branch", py::overload_cast<double, double, double>(&dynamics::sa_branch));
  d.def("bifurcation_csv", [](double eta1, double eta3, double lo, double hi, std::size_t n) {
    return io::diagram_to_csv(dynamics::bifurcation_diagram(eta1, eta3, lo, hi, n));
  });
}

void bind_da(py::module_& m) {
  auto d = m.def_submodule("da");
  d.def(
      "etkf_update",
      [](Eigen::MatrixXd ensemble, const Eigen::MatrixXd& H, const Eigen::VectorXd& obs, const Eigen::MatrixXd& R) {
        da::etkf_update(ensemble, H, obs, R);
        return ensemble;
      },
      py::arg("ensemble"), py::arg("H"), py::arg("d"), py::arg("R"),
      "Square-root update of an n x M ensemble; returns the analysis ensemble.");
  d.def("ensemble_mean", &da::ensemble_mean);
  d.def("ensemble_covariance", &da::ensemble_covariance);
}

void bind_obs(py::module_& m) {
  auto o = m.def_submodule("obs");
  o.def(
      "fit_seasonal",
      [](const std::vector<double>& t, const std::vector<double>& value, const std::vector<double>& variance,
         double period) {
        if (t.size() != value.size() || t.size() != variance.size()) {
          throw std::invalid_argument("t, value and variance must have equal length");
        }
        std::vector<obs::SeasonalPoint> pts;
        for (std::size_t i = 0; i < t.size(); ++i) pts.push_back({t[i], value[i], variance[i]});
        const obs::SeasonalFit fit = obs::fit_seasonal(pts, period);
        return py::make_tuple(fit.coeffs.c0, fit.coeffs.c_cos, fit.coeffs.c_sin);
      },
      py::arg("t"), py::arg("value"), py::arg("variance"), py::arg("period") = kSecondsPerYear);
  o.def("cell_area", &obs::cell_area);
  o.def(
      "synth_profiles_csv",
      [](int months, double noise_T, std::uint64_t seed) {
        obs::SynthConfig fixture;
        fixture.months = months;
        fixture.noise_T = noise_T;
        fixture.seed = seed;
        return io::profiles_to_csv(obs::synth_profiles(fixture));
      },
      py::arg("months") = 24, py::arg("noise_T") = 0.0, py::arg("seed") = 1);
}

void bind_calibration(py::module_& m) {
  auto c = m.def_submodule("calibration");
  c.def(
      "nelder_mead",
      [](const std::function<double(const std::vector<double>&)>& cost, const std::vector<double>& x0,
         double tolerance, std::size_t max_iterations) {
        calibration::SimplexOptions opts;
        opts.tolerance = tolerance;
        opts.max_iterations = max_iterations;
        const auto r = calibration::nelder_mead(cost, x0, opts);
        return py::make_tuple(r.x, r.cost, r.converged);
      },
      py::arg("cost"), py::arg("x0"), py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 5000);
  c.def("equilibrium_for_params", [](const ModelParams& p, const ModelContext& ctx) {
    const auto e = calibration::equilibrium_for_params(p, ctx.geometry, ctx.constants, ctx.forcing);
    return py::dict(py::arg("state") = e.state, py::arg("dT") = e.dT, py::arg("dS") = e.dS, py::arg("Q") = e.Q,
                    py::arg("Psi") = e.Psi);
  });
  c.def("initial_param_fit", [](double dT, double dS, double Q, const ModelContext& ctx) {
    calibration::CalibrationTarget t;
    t.dT_star = dT;
    t.dS_star = dS;
    t.Q_target = Q;
    return calibration::initial_param_fit(t, ctx.geometry, ctx.constants, ctx.forcing).params;
  });
}

void bind_experiments(py::module_& m) {
  auto e = m.def_submodule("experiments");
  e.def(
      "twin_flip_fraction",
      [](std::size_t members, std::uint64_t seed, double melt_period_years, double warming_eq) {
        experiments::ExperimentConfig cfg;
        cfg.members = members;
        cfg.seed = seed;
        cfg.model.scenario.enabled = true;
        cfg.model.scenario.melt_period = melt_period_years;
        cfg.model.scenario.warm_e = warming_eq;
        cfg.model.scenario.warm_p = 2.0 * warming_eq;
        py::gil_scoped_release release;
        const auto r = experiments::twin_experiment(cfg);
        return experiments::flip_fraction(r, cfg.horizon_time());
      },
      py::arg("members") = 20, py::arg("seed") = 1, py::arg("melt_period_years") = 10000.0,
      py::arg("warming_eq") = 0.03);
}

}  // namespace

PYBIND11_MODULE(_stommel, m) {
  m.doc() = "Stommel two-box AMOC model with ensemble data assimilation";
  m.attr("__version__") = io::version_string();

  py::register_exception<NumericalBlowUp>(m, "NumericalBlowUp");
  py::register_exception<dynamics::NoRootError>(m, "NoRootError");
  py::register_exception<da::FilterError>(m, "FilterError");
  py::register_exception<obs::PipelineError>(m, "PipelineError");
  py::register_exception<calibration::NoEquilibriumError>(m, "NoEquilibriumError");

  bind_model(m);
  bind_dynamics(m);
  bind_da(m);
  bind_obs(m);
  bind_calibration(m);
  bind_experiments(m);
}
