#include "stommel/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stommel/dynamics.hpp"

namespace stommel::calibration {

namespace {

// Cost assigned to parameter sets without a thermally driven equilibrium.
constexpr double kPenalty = 1e10;

}  // namespace

void CalibrationTarget::validate() const {
  for (double s : {sigma_Tp, sigma_Te, sigma_Sp, sigma_Se, Q_sigma}) {
    if (!(s > 0.0)) throw std::invalid_argument("CalibrationTarget: sigmas must be positive");
  }
  if (!std::isfinite(dT_star) || !std::isfinite(dS_star) || !std::isfinite(Q_target)) {
    throw std::invalid_argument("CalibrationTarget: targets must be finite");
  }
}

void SimplexOptions::validate() const {
  if (!(initial_step > 0.0)) throw std::invalid_argument("SimplexOptions: initial_step must be positive");
  if (!(reflection > 0.0)) throw std::invalid_argument("SimplexOptions: reflection must be positive");
  if (!(expansion > 1.0) || !(expansion > reflection)) {
    throw std::invalid_argument("SimplexOptions: expansion must exceed 1 and the reflection coefficient");
  }
  if (!(contraction > 0.0 && contraction < 1.0)) throw std::invalid_argument("SimplexOptions: contraction must be in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("SimplexOptions: shrink must be in (0, 1)");
  if (!(tolerance >= 0.0) || !(x_tolerance >= 0.0)) throw std::invalid_argument("SimplexOptions: tolerances must be non-negative");
}

SimplexResult nelder_mead(const CostFunction& cost, const std::vector<double>& x0, const SimplexOptions& opts) {
  opts.validate();
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start vector");

  SimplexResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double f = cost(x);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opts.initial_step;
  std::vector<double> f(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    f[i] = eval(simplex[i]);
    if (!std::isfinite(f[i])) {
      std::ostringstream msg;
      msg << "nelder_mead: cost is not finite at initial vertex " << i;
      throw std::invalid_argument(msg.str());
    }
  }

  std::vector<std::size_t> order(n + 1);
  auto combine = [n](const std::vector<double>& a, const std::vector<double>& b, double t) {
    // a + t (b - a)
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = a[j] + t * (b[j] - a[j]);
    return out;
  };

  for (result.iterations = 0; result.iterations < opts.max_iterations; ++result.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
    }
    if (f[worst] - f[best] <= opts.tolerance && diameter <= opts.x_tolerance) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }

    const std::vector<double> xr = combine(centroid, simplex[worst], -opts.reflection);
    const double fr = eval(xr);
    if (fr < f[best]) {
      const std::vector<double> xe = combine(centroid, simplex[worst], -opts.reflection * opts.expansion);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        f[worst] = fe;
      } else {
        simplex[worst] = xr;
        f[worst] = fr;
      }
      continue;
    }
    if (fr < f[second]) {
      simplex[worst] = xr;
      f[worst] = fr;
      continue;
    }

    bool accepted = false;
    if (fr < f[worst]) {
      const std::vector<double> xc = combine(centroid, simplex[worst], -opts.reflection * opts.contraction);
      const double fc = eval(xc);
      if (fc <= fr) {
        simplex[worst] = xc;
        f[worst] = fc;
        accepted = true;
      }
    } else {
      const std::vector<double> xc = combine(centroid, simplex[worst], opts.contraction);
      const double fc = eval(xc);
      if (fc < f[worst]) {
        simplex[worst] = xc;
        f[worst] = fc;
        accepted = true;
      }
    }
    if (!accepted) {
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == best) continue;
        simplex[i] = combine(simplex[best], simplex[i], opts.shrink);
        f[i] = eval(simplex[i]);
      }
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  result.x = simplex[best];
  result.cost = f[best];
  return result;
}

EquilibriumResult equilibrium_for_params(const ModelParams& p, const BoxGeometry& g, const PhysicalConstants& c,
                                         const SurfaceForcing& forcing) {
  p.validate();
  g.validate();
  const SurfaceForcing mean = forcing.annual_mean();
  const DimensionlessState nd = nondimensionalize(OceanState{}, p, g, c, mean);

  std::vector<dynamics::EquilibriumPoint> points;
  try {
    points = dynamics::find_equilibria(nd.eta1, nd.eta2, nd.eta3);
  } catch (const std::exception& e) {
    throw NoEquilibriumError(std::string("no equilibrium: ") + e.what());
  }

  const dynamics::EquilibriumPoint* chosen = nullptr;
  for (const auto& eq : points) {
    const bool stable = eq.stability == dynamics::Stability::StableNode || eq.stability == dynamics::Stability::StableFocus;
    if (eq.Psi > 0.0 && stable && (!chosen || eq.Psi > chosen->Psi)) chosen = &eq;
  }
  if (!chosen) {
    std::ostringstream msg;
    msg << "no stable thermally driven equilibrium (eta1=" << nd.eta1 << ", eta2=" << nd.eta2 << ", eta3=" << nd.eta3
        << ")";
    throw NoEquilibriumError(msg.str());
  }

  DimensionlessState eq_nd = nd;
  eq_nd.T = chosen->T;
  eq_nd.S = chosen->S;
  eq_nd.Psi = chosen->Psi;
  const OceanDifferences diff = dimensionalize(eq_nd, p, g, c);

  // The area-weighted box mean relaxes to the area-weighted target mean.
  const double w = g.dy_e + g.dy_p;
  const double T_mean = (g.dy_e * mean.Te.c0 + g.dy_p * mean.Tp.c0) / w;
  const double S_mean = (g.dy_e * mean.Se.c0 + g.dy_p * mean.Sp.c0) / w;

  EquilibriumResult out;
  out.state.Te = T_mean + diff.dT * g.dy_p / w;
  out.state.Tp = T_mean - diff.dT * g.dy_e / w;
  out.state.Se = S_mean + diff.dS * g.dy_p / w;
  out.state.Sp = S_mean - diff.dS * g.dy_e / w;
  out.dT = diff.dT;
  out.dS = diff.dS;
  out.Psi = chosen->Psi;
  out.Q = transport(out.state, p, g, c) / kSverdrup;
  return out;
}

double fit_cost(const std::vector<double>& x, const CalibrationTarget& target, const BoxGeometry& g,
                const PhysicalConstants& c, const SurfaceForcing& forcing) {
  if (x.size() != 3) throw std::invalid_argument("fit_cost: expects (log kT, log kS, log gamma)");
  const ModelParams p{std::exp(x[0]), std::exp(x[1]), std::exp(x[2])};
  if (!(p.kT > 0.0 && p.kS > 0.0 && p.gamma > 0.0) || !std::isfinite(p.kT + p.kS + p.gamma)) return kPenalty;
  EquilibriumResult eq;
  try {
    eq = equilibrium_for_params(p, g, c, forcing);
  } catch (const NoEquilibriumError&) {
    return kPenalty;
  }
  const double rT = target.dT_star - eq.dT;
  const double rS = target.dS_star - eq.dS;
  const double rQ = target.Q_target - eq.Q;
  const double varT = target.sigma_Te * target.sigma_Te + target.sigma_Tp * target.sigma_Tp;
  const double varS = target.sigma_Se * target.sigma_Se + target.sigma_Sp * target.sigma_Sp;
  const double termQ = std::isinf(target.Q_sigma) ? 0.0 : rQ * rQ / (target.Q_sigma * target.Q_sigma);
  return rT * rT / varT + rS * rS / varS + termQ;
}

FitResult initial_param_fit(const CalibrationTarget& target, const BoxGeometry& g, const PhysicalConstants& c,
                            const SurfaceForcing& forcing, const ModelParams& start, const SimplexOptions& opts) {
  target.validate();
  start.validate();
  const std::vector<double> x0 = {std::log(start.kT), std::log(start.kS), std::log(start.gamma)};
  auto cost = [&](const std::vector<double>& x) { return fit_cost(x, target, g, c, forcing); };

  FitResult out;
  out.simplex = nelder_mead(cost, x0, opts);
  out.params = {std::exp(out.simplex.x[0]), std::exp(out.simplex.x[1]), std::exp(out.simplex.x[2])};
  out.equilibrium = equilibrium_for_params(out.params, g, c, forcing);
  return out;
}

}  // namespace stommel::calibration
