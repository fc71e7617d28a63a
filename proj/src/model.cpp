#include "stommel/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stommel/rk4.hpp"

namespace stommel {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << name << " must be positive and finite, got " << value;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

void PhysicalConstants::validate() const {
  require_positive(rho0, "rho0");
  require_positive(alphaT, "alphaT");
  require_positive(alphaS, "alphaS");
}

void BoxGeometry::validate() const {
  require_positive(dx, "dx");
  require_positive(dy_p, "dy_p");
  require_positive(dy_e, "dy_e");
  require_positive(dz, "dz");
}

void ModelParams::validate() const {
  require_positive(kT, "kT");
  require_positive(kS, "kS");
  require_positive(gamma, "gamma");
}

void ClimateScenario::validate() const {
  if (warm_e < 0.0 || warm_p < 0.0) throw std::invalid_argument("warming rates must be non-negative");
  if (ice_volume < 0.0) throw std::invalid_argument("ice volume must be non-negative");
  require_positive(melt_period, "melt_period");
}

bool OceanState::finite() const {
  return std::isfinite(Te) && std::isfinite(Tp) && std::isfinite(Se) && std::isfinite(Sp);
}

double HarmonicCoeffs::evaluate(double t, double period) const {
  const double phase = 2.0 * std::numbers::pi * t / period;
  return c0 + c_sin * std::sin(phase) + c_cos * std::cos(phase);
}

double HarmonicCoeffs::amplitude() const { return std::hypot(c_cos, c_sin); }

SurfaceForcing SurfaceForcing::en4_fit() {
  SurfaceForcing f;
  f.Tp = {1.5, -1.5, -1.1};
  f.Te = {16.7, -2.4, -2.3};
  f.Sp = {33.05, 0.22, 0.32};
  f.Se = {35.77, 0.04, 0.05};
  return f;
}

SurfaceForcing SurfaceForcing::annual_mean() const {
  SurfaceForcing f = *this;
  for (HarmonicCoeffs* h : {&f.Te, &f.Tp, &f.Se, &f.Sp}) {
    h->c_cos = 0.0;
    h->c_sin = 0.0;
  }
  return f;
}

double SurfaceForcing::temperature_difference_amplitude() const {
  return std::hypot(Te.c_cos - Tp.c_cos, Te.c_sin - Tp.c_sin);
}

double SurfaceForcing::salinity_difference_amplitude() const {
  return std::hypot(Se.c_cos - Sp.c_cos, Se.c_sin - Sp.c_sin);
}

double density(double T, double S, const PhysicalConstants& c) {
  return c.rho0 * (1.0 - c.alphaT * (T - c.T0) + c.alphaS * (S - c.S0));
}

double transport(const OceanState& state, const ModelParams& p, const BoxGeometry& g,
                 const PhysicalConstants& c) {
  // (rho_p - rho_e) / rho0 written out so the reference values cancel exactly.
  const double drho = c.alphaT * (state.Te - state.Tp) - c.alphaS * (state.Se - state.Sp);
  return p.gamma * g.dx * g.dz * drho;
}

SurfaceTargets surface_target(double t, const SurfaceForcing& f, const ClimateScenario& s) {
  SurfaceTargets out{f.Te.evaluate(t, f.period), f.Tp.evaluate(t, f.period), f.Se.evaluate(t, f.period),
                     f.Sp.evaluate(t, f.period)};
  if (s.enabled) {
    const double onset = s.onset_time();
    if (t >= onset) {
      const double years = (t - onset) / kSecondsPerYear;
      out.Te += s.warm_e * years;
      out.Tp += s.warm_p * years;
    }
  }
  return out;
}

double melt_rate(const ClimateScenario& s, double t) {
  if (!s.enabled || t < s.onset_time()) return 0.0;
  return s.ice_volume / (s.melt_period * kSecondsPerYear);
}

OceanState tendencies(double t, const OceanState& x, const ModelContext& ctx) {
  const BoxGeometry& g = ctx.geometry;
  const ModelParams& p = ctx.params;
  const SurfaceTargets a = surface_target(t, ctx.forcing, ctx.scenario);
  const double flux = std::abs(transport(x, p, g, ctx.constants));
  const double melt = melt_rate(ctx.scenario, t);

  const double vol_e = g.dx * g.dz * g.dy_e;
  const double vol_p = g.dx * g.dz * g.dy_p;
  const double relax_T = p.kT / g.dz;
  const double relax_S = p.kS / g.dz;

  OceanState d;
  d.Te = relax_T * (a.Te - x.Te) + flux * (x.Tp - x.Te) / vol_e;
  d.Se = relax_S * (a.Se - x.Se) + flux * (x.Sp - x.Se) / vol_e;
  d.Tp = relax_T * (a.Tp - x.Tp) + flux * (x.Te - x.Tp) / vol_p;
  d.Sp = relax_S * (a.Sp - x.Sp) + flux * (x.Se - x.Sp) / vol_p - melt * x.Sp / vol_p;
  return d;
}

OceanState step_rk4(const OceanState& state, double t, double dt, const ModelContext& ctx) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be positive");
  auto rhs = [&ctx](double time, const std::array<double, 4>& y) {
    return tendencies(time, OceanState::from_array(y), ctx).to_array();
  };
  const OceanState next = OceanState::from_array(rk4_step<4>(rhs, t, state.to_array(), dt));
  if (!next.finite()) {
    std::ostringstream msg;
    msg << "non-finite state after RK4 step at t=" << t << " s (dt=" << dt << ")";
    throw NumericalBlowUp(msg.str());
  }
  return next;
}

Trajectory integrate(const OceanState& state0, double t0, double t1, double dt, const ModelContext& ctx) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (t1 < t0) throw std::invalid_argument("integrate: t1 must not precede t0");

  Trajectory traj;
  traj.step = dt;
  traj.times.push_back(t0);
  traj.states.push_back(state0);

  // Relative slack so accumulated round-off does not produce a sliver step.
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
  OceanState x = state0;
  double t = t0;
  bool warned = false;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double next_t = (k == steps) ? t1 : t0 + static_cast<double>(k) * dt;
    x = step_rk4(x, t, next_t - t, ctx);
    t = next_t;
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (!warned && (x.Se < 0.0 || x.Sp < 0.0)) {
      std::ostringstream msg;
      msg << "negative salinity at t=" << t << " s (Se=" << x.Se << ", Sp=" << x.Sp << ")";
      traj.warnings.push_back(msg.str());
      warned = true;
    }
  }
  return traj;
}

double temperature_scale(const ModelParams& p, const BoxGeometry& g, const PhysicalConstants& c) {
  return g.dz * p.gamma * c.alphaT / (g.dy_bar() * p.kT);
}

double salinity_scale(const ModelParams& p, const BoxGeometry& g, const PhysicalConstants& c) {
  return g.dz * p.gamma * c.alphaS / (g.dy_bar() * p.kT);
}

double transport_scale(const ModelParams& p, const BoxGeometry& g) { return 1.0 / (g.dy_bar() * g.dx * p.kT); }

DimensionlessState nondimensionalize(const OceanState& state, const ModelParams& p, const BoxGeometry& g,
                                     const PhysicalConstants& c, const SurfaceForcing& f) {
  p.validate();
  g.validate();
  const double cT = temperature_scale(p, g, c);
  const double cS = salinity_scale(p, g, c);

  DimensionlessState d;
  d.T = cT * (state.Te - state.Tp);
  d.S = cS * (state.Se - state.Sp);
  d.Psi = d.T - d.S;
  d.eta3 = p.kS / p.kT;
  d.eta1 = cT * (f.Te.c0 - f.Tp.c0);
  d.eta2 = d.eta3 * cS * (f.Se.c0 - f.Sp.c0);
  d.Omega = 2.0 * std::numbers::pi / f.period * g.dz / p.kT;
  d.B = cT * f.temperature_difference_amplitude();
  d.Bhat = d.eta3 * cS * f.salinity_difference_amplitude();
  d.A = d.B - d.Bhat;
  return d;
}

EtaValues eta_at(double t, const ModelContext& ctx) {
  const ModelParams& p = ctx.params;
  const SurfaceTargets a = surface_target(t, ctx.forcing, ctx.scenario);
  EtaValues e;
  e.eta3 = p.kS / p.kT;
  e.eta1 = temperature_scale(p, ctx.geometry, ctx.constants) * (a.Te - a.Tp);
  e.eta2 = e.eta3 * salinity_scale(p, ctx.geometry, ctx.constants) * (a.Se - a.Sp);
  return e;
}

OceanDifferences dimensionalize(const DimensionlessState& d, const ModelParams& p, const BoxGeometry& g,
                                const PhysicalConstants& c) {
  p.validate();
  return {d.T / temperature_scale(p, g, c), d.S / salinity_scale(p, g, c)};
}

}  // namespace stommel
