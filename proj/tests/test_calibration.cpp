#include <doctest.h>

#include <cmath>
#include <limits>

#include "stommel/calibration.hpp"

using namespace stommel;
using namespace stommel::calibration;
using doctest::Approx;

TEST_SUITE("calibration") {
  TEST_CASE("nelder_mead on a quadratic") {
    const auto cost = [](const std::vector<double>& x) {
      return (x[0] - 1.0) * (x[0] - 1.0) + (x[1] - 2.0) * (x[1] - 2.0);
    };
    const SimplexResult r = nelder_mead(cost, {0.0, 0.0});
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-6);
    CHECK(std::abs(r.x[1] - 2.0) < 1e-6);
    CHECK(r.cost <= cost({0.0, 0.0}));
  }

  TEST_CASE("nelder_mead on Rosenbrock") {
    const auto rosen = [](const std::vector<double>& x) {
      return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const SimplexResult r = nelder_mead(rosen, {-1.2, 1.0});
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-4);
  }

  TEST_CASE("nelder_mead is equivariant under a coordinate permutation") {
    const auto f = [](double a, double b, double c) {
      return std::pow(a - 0.3, 2) + 2.0 * std::pow(b + 1.0, 2) + 3.0 * std::pow(c - 2.0, 2) + 0.5 * a * b;
    };
    const auto direct = [&](const std::vector<double>& x) { return f(x[0], x[1], x[2]); };
    const auto permuted = [&](const std::vector<double>& x) { return f(x[2], x[0], x[1]); };
    const SimplexResult a = nelder_mead(direct, {0.0, 0.0, 0.0});
    const SimplexResult b = nelder_mead(permuted, {0.0, 0.0, 0.0});
    CHECK(a.cost == Approx(b.cost).epsilon(1e-6).scale(1.0));
    CHECK(b.x[2] == Approx(a.x[0]).epsilon(1e-4));
    CHECK(b.x[0] == Approx(a.x[1]).epsilon(1e-4));
  }

  TEST_CASE("nelder_mead flags non-convergence and bad starts") {
    SimplexOptions opts;
    opts.max_iterations = 5;
    const auto rosen = [](const std::vector<double>& x) {
      return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const SimplexResult r = nelder_mead(rosen, {-1.2, 1.0}, opts);
    CHECK_FALSE(r.converged);
    CHECK(r.cost <= rosen({-1.2, 1.0}));
    CHECK_THROWS(nelder_mead([](const std::vector<double>&) { return std::nan(""); }, {0.0}));
    SimplexOptions bad;
    bad.contraction = 1.5;
    CHECK_THROWS(nelder_mead(rosen, {0.0, 0.0}, bad));
  }

  TEST_CASE("equilibrium_for_params is a TH fixed point") {
    const ModelContext ctx;
    const SurfaceForcing mean = ctx.forcing.annual_mean();
    const EquilibriumResult eq = equilibrium_for_params(ctx.params, ctx.geometry, ctx.constants, mean);
    CHECK(eq.Psi > 0.0);
    CHECK(eq.Q > 0.0);
    ModelContext annual = ctx;
    annual.forcing = mean;
    const OceanState tend = tendencies(0.0, eq.state, annual);
    CHECK(std::abs(tend.Te) < 1e-8);
    CHECK(std::abs(tend.Tp) < 1e-8);
    CHECK(std::abs(tend.Se) < 1e-8);
    CHECK(std::abs(tend.Sp) < 1e-8);
    CHECK(eq.dT == Approx(eq.state.Te - eq.state.Tp));

    // Long forward integration from the reference initial state converges to it.
    const Trajectory traj = integrate({5.4, 1.23, 35.15, 34.82}, 0.0, 3000.0 * kSecondsPerYear,
                                      kSecondsPerMonth, annual);
    const OceanState& end = traj.states.back();
    CHECK(end.Te - end.Tp == Approx(eq.dT).epsilon(1e-6));
    CHECK(end.Se - end.Sp == Approx(eq.dS).epsilon(1e-6));
    CHECK(transport(end, ctx.params, ctx.geometry, ctx.constants) / kSverdrup == Approx(eq.Q).epsilon(1e-6));
  }

  TEST_CASE("equilibrium_for_params reports missing TH equilibria") {
    const ModelContext ctx;
    SurfaceForcing f = ctx.forcing.annual_mean();
    f.Sp.c0 = 20.0;  // huge freshwater forcing: only SA equilibria remain
    CHECK_THROWS_AS(equilibrium_for_params(ctx.params, ctx.geometry, ctx.constants, f), NoEquilibriumError);
  }

  TEST_CASE("initial_param_fit recovers synthetic parameters") {
    const ModelContext ctx;
    const SurfaceForcing mean = ctx.forcing.annual_mean();
    const ModelParams truth{2.5e-6, 0.9e-6, 1.4};
    const EquilibriumResult eq = equilibrium_for_params(truth, ctx.geometry, ctx.constants, mean);
    CalibrationTarget target;
    target.dT_star = eq.dT;
    target.dS_star = eq.dS;
    target.Q_target = eq.Q;
    const FitResult fit = initial_param_fit(target, ctx.geometry, ctx.constants, mean);
    CHECK(fit.params.kT == Approx(truth.kT).epsilon(0.05));
    CHECK(fit.params.kS == Approx(truth.kS).epsilon(0.05));
    CHECK(fit.params.gamma == Approx(truth.gamma).epsilon(0.05));
    CHECK(fit.params.kT > 0.0);
    CHECK(fit.simplex.cost <= fit_cost({std::log(3.7e-6), std::log(1.2e-6), std::log(2.0)}, target, ctx.geometry,
                                        ctx.constants, mean));
  }

  TEST_CASE("infinite Q_sigma drops the transport term") {
    const ModelContext ctx;
    const SurfaceForcing mean = ctx.forcing.annual_mean();
    CalibrationTarget target;
    target.Q_sigma = std::numeric_limits<double>::infinity();
    target.Q_target = 1000.0;
    const FitResult fit = initial_param_fit(target, ctx.geometry, ctx.constants, mean);
    CHECK(std::abs(fit.equilibrium.dT - target.dT_star) < 1e-3);
    CHECK(std::abs(fit.equilibrium.dS - target.dS_star) < 1e-4);
  }

  TEST_CASE("reference targets give parameters of the expected order") {
    const ModelContext ctx;
    const FitResult fit = initial_param_fit(CalibrationTarget{}, ctx.geometry, ctx.constants, ctx.forcing.annual_mean());
    CHECK(fit.params.kT > 3.7e-7);
    CHECK(fit.params.kT < 3.7e-5);
    CHECK(fit.params.kS > 1.2e-7);
    CHECK(fit.params.kS < 1.2e-5);
    CHECK(fit.params.gamma > 0.2);
    CHECK(fit.params.gamma < 20.0);
    CHECK(fit.equilibrium.Q == Approx(18.0).epsilon(0.01));
  }

  TEST_CASE("target validation") {
    CalibrationTarget t;
    t.sigma_Tp = 0.0;
    CHECK_THROWS(t.validate());
  }
}
