// Dimensionless two-variable reduction of the box model:
//
//   dT/dt = eta1 - T (1 + |T - S|)
//   dS/dt = eta2 - S (eta3 + |T - S|)
//   Psi   = T - S
//
// and its equilibrium structure. The right-hand side is non-smooth on the
// line T = S, where the thermally driven branch ends in a non-smooth fold.
#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stommel::dynamics {

enum class Regime { TH, SA };
enum class Stability { StableNode, StableFocus, Unstable, Boundary };

std::string to_string(Regime r);
std::string to_string(Stability s);

class NoRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rhs {
  double dT = 0.0;
  double dS = 0.0;
};

Rhs autonomous_rhs(double T, double S, double eta1, double eta2, double eta3);

/// df/dT + dg/dS of the autonomous system (valid off the line T = S).
double divergence(double T, double S, double eta3);

/// Jacobian of the autonomous rhs on the smooth piece selected by `regime`
/// (TH: T > S, SA: T < S). Row-major [[df/dT, df/dS], [dg/dT, dg/dS]].
std::array<double, 4> jacobian(double T, double S, double eta3, Regime regime);

struct NonautonomousRhs {
  double dPsi = 0.0;
  double dT = 0.0;
};

/// Seasonally forced system written in (Psi, T), with eta1 and eta2
/// oscillating as eta_auto + amplitude * sin(Omega t) and A = B - Bhat.
NonautonomousRhs nonautonomous_rhs(double Psi, double T, double t, double eta1_auto, double eta2_auto,
                                   double eta3, double A, double B, double Omega);

/// eta2 on the thermally driven equilibrium branch, Psi >= 0.
double th_branch(double eta1, double eta3, double Psi);
std::vector<double> th_branch(double eta1, double eta3, std::span<const double> Psi);

/// eta2 on the salinity driven equilibrium branch, Psi <= 0.
double sa_branch(double eta1, double eta3, double Psi);
std::vector<double> sa_branch(double eta1, double eta3, std::span<const double> Psi);

struct EquilibriumPoint {
  double Psi = 0.0;
  double T = 0.0;
  double S = 0.0;
  Regime regime = Regime::TH;
  Stability stability = Stability::Boundary;
  std::array<std::complex<double>, 2> eigenvalues{};
};

/// Classify a fixed point from the Jacobian on its smooth piece.
EquilibriumPoint make_equilibrium(double Psi, double eta1, double eta2, double eta3);

/// All equilibria for the given eta values, sorted by increasing Psi.
/// Throws NoRootError (with the scanned range) when none is found.
std::vector<EquilibriumPoint> find_equilibria(double eta1, double eta2, double eta3);

struct SaddleNode {
  double Psi = 0.0;
  double eta2 = 0.0;
};

/// Fold of the TH branch. Requires eta1 > eta3 / (1 - eta3).
SaddleNode saddle_node(double eta1, double eta3);

/// eta2 at which the stable TH branch reaches Psi = 0.
double nsf_point(double eta1, double eta3);

/// Psi = 0 is reported as TH.
Regime classify_regime(double Psi);

struct BranchSample {
  double eta2 = 0.0;
  double Psi = 0.0;
  Regime regime = Regime::TH;
  Stability stability = Stability::Boundary;
};

struct BifurcationDiagram {
  double eta1 = 0.0;
  double eta3 = 0.0;
  double eta2_min = 0.0;
  double eta2_max = 0.0;
  std::vector<BranchSample> th;
  std::vector<BranchSample> sa;
  std::optional<SaddleNode> saddle_node;
  double nsf_eta2 = 0.0;
};

/// Sample both equilibrium branches for eta2 in [eta2_min, eta2_max].
/// `resolution` Psi samples are taken on each branch.
BifurcationDiagram bifurcation_diagram(double eta1, double eta3, double eta2_min, double eta2_max,
                                       std::size_t resolution);

}  // namespace stommel::dynamics
