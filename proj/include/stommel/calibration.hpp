// Initial parameter estimate: choose (kT, kS, gamma) so that the observed
// initial state is close to an equilibrium of the annual-mean model.
#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stommel/model.hpp"

namespace stommel::calibration {

class NoEquilibriumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationTarget {
  double dT_star = 5.5 - 1.2;    // Te - Tp, degC
  double dS_star = 35.15 - 34.83;  // Se - Sp, ppt
  double sigma_Tp = 0.3;
  double sigma_Te = 0.5;
  double sigma_Sp = 0.07;
  double sigma_Se = 0.07;
  double Q_target = 18.0;  // Sv
  double Q_sigma = 2.5;    // Sv

  void validate() const;
};

struct SimplexOptions {
  double initial_step = 0.1;  // per coordinate
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double tolerance = 1e-8;    // on max - min cost over the simplex
  double x_tolerance = 1e-8;  // on the largest vertex offset from the best vertex
  std::size_t max_iterations = 5000;

  void validate() const;
};

struct SimplexResult {
  std::vector<double> x;
  double cost = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

using CostFunction = std::function<double(const std::vector<double>&)>;

/// Downhill simplex minimisation starting from x0; the initial simplex is
/// x0 plus initial_step along each coordinate axis.
SimplexResult nelder_mead(const CostFunction& cost, const std::vector<double>& x0, const SimplexOptions& opts = {});

struct EquilibriumResult {
  OceanState state;
  double dT = 0.0;   // Te - Tp, degC
  double dS = 0.0;   // Se - Sp, ppt
  double Q = 0.0;    // Sv
  double Psi = 0.0;  // dimensionless
};

/// Thermally driven equilibrium of the autonomous model under the annual-mean
/// part of `forcing`. When several TH equilibria exist the stable one with
/// the largest transport is returned.
EquilibriumResult equilibrium_for_params(const ModelParams& p, const BoxGeometry& g, const PhysicalConstants& c,
                                         const SurfaceForcing& forcing);

/// Cost of the equilibrium mismatch for log-parameters x = (log kT, log kS, log gamma).
double fit_cost(const std::vector<double>& x, const CalibrationTarget& target, const BoxGeometry& g,
                const PhysicalConstants& c, const SurfaceForcing& forcing);

struct FitResult {
  ModelParams params;
  EquilibriumResult equilibrium;
  SimplexResult simplex;
};

/// Minimise fit_cost with Nelder-Mead, starting from `start` (Table 6 values by default).
FitResult initial_param_fit(const CalibrationTarget& target, const BoxGeometry& g, const PhysicalConstants& c,
                            const SurfaceForcing& forcing, const ModelParams& start = {},
                            const SimplexOptions& opts = {});

}  // namespace stommel::calibration
