#include "stommel/dynamics.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace stommel::dynamics {

namespace {

constexpr std::size_t kScanSamples = 10000;
constexpr double kRootTolerance = 1e-12;

template <typename F>
double refine_root(F&& f, double a, double b, double fa, double fb, double tol) {
  std::uintmax_t max_iter = 200;
  auto stop = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, stop, max_iter);
  return 0.5 * (lo + hi);
}

double branch_value(double eta1, double eta3, double Psi) {
  return Psi >= 0.0 ? th_branch(eta1, eta3, Psi) : sa_branch(eta1, eta3, Psi);
}

double th_branch_slope(double eta1, double eta3, double Psi) {
  const double q = 1.0 + Psi;
  return -2.0 * Psi - eta3 + eta1 * (1.0 - eta3) / (q * q);
}

}  // namespace

std::string to_string(Regime r) { return r == Regime::TH ? "TH" : "SA"; }

std::string to_string(Stability s) {
  switch (s) {
    case Stability::StableNode:
      return "stable-node";
    case Stability::StableFocus:
      return "stable-focus";
    case Stability::Unstable:
      return "unstable";
    case Stability::Boundary:
      break;
  }
  return "boundary";
}

Rhs autonomous_rhs(double T, double S, double eta1, double eta2, double eta3) {
  const double q = std::abs(T - S);
  return {eta1 - T * (1.0 + q), eta2 - S * (eta3 + q)};
}

double divergence(double T, double S, double eta3) { return -1.0 - eta3 - 3.0 * std::abs(T - S); }

std::array<double, 4> jacobian(double T, double S, double eta3, Regime regime) {
  // s = sign(T - S) on the chosen piece, |T - S| = s (T - S).
  const double s = regime == Regime::TH ? 1.0 : -1.0;
  const double q = s * (T - S);
  return {-(1.0 + q) - s * T, s * T, -s * S, -(eta3 + q) + s * S};
}

NonautonomousRhs nonautonomous_rhs(double Psi, double T, double t, double eta1_auto, double eta2_auto,
                                   double eta3, double A, double B, double Omega) {
  const double forcing = std::sin(Omega * t);
  NonautonomousRhs out;
  out.dPsi = eta1_auto - eta2_auto + (T - Psi) * eta3 - T - Psi * std::abs(Psi) + A * forcing;
  out.dT = eta1_auto + B * forcing - T * (1.0 + std::abs(Psi));
  return out;
}

double th_branch(double eta1, double eta3, double Psi) {
  return -Psi * Psi - eta3 * Psi + eta1 * ((eta3 + Psi) / (1.0 + Psi));
}

double sa_branch(double eta1, double eta3, double Psi) {
  return Psi * Psi - eta3 * Psi + eta1 * ((eta3 - Psi) / (1.0 - Psi));
}

std::vector<double> th_branch(double eta1, double eta3, std::span<const double> Psi) {
  std::vector<double> out(Psi.size());
  std::transform(Psi.begin(), Psi.end(), out.begin(), [&](double p) { return th_branch(eta1, eta3, p); });
  return out;
}

std::vector<double> sa_branch(double eta1, double eta3, std::span<const double> Psi) {
  std::vector<double> out(Psi.size());
  std::transform(Psi.begin(), Psi.end(), out.begin(), [&](double p) { return sa_branch(eta1, eta3, p); });
  return out;
}

EquilibriumPoint make_equilibrium(double Psi, double eta1, double eta2, double eta3) {
  EquilibriumPoint eq;
  eq.Psi = Psi;
  eq.T = eta1 / (1.0 + std::abs(Psi));
  eq.S = eta2 / (eta3 + std::abs(Psi));
  eq.regime = classify_regime(Psi);
  if (Psi == 0.0) {
    eq.stability = Stability::Boundary;
    return eq;
  }
  const auto J = jacobian(eq.T, eq.S, eta3, eq.regime);
  const double tr = J[0] + J[3];
  const double det = J[0] * J[3] - J[1] * J[2];
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) {
    const double im = 0.5 * std::sqrt(-disc);
    eq.eigenvalues = {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
    eq.stability = tr < 0.0 ? Stability::StableFocus : Stability::Unstable;
  } else {
    const double r = std::sqrt(disc);
    eq.eigenvalues = {std::complex<double>(0.5 * (tr + r), 0.0), std::complex<double>(0.5 * (tr - r), 0.0)};
    eq.stability = eq.eigenvalues[0].real() < 0.0 ? Stability::StableNode : Stability::Unstable;
  }
  return eq;
}

std::vector<EquilibriumPoint> find_equilibria(double eta1, double eta2, double eta3) {
  if (!(eta1 > 0.0) || !(eta3 > 0.0)) throw std::invalid_argument("find_equilibria: eta1 and eta3 must be positive");

  const double range = eta1 + std::abs(eta2) + 1.0;
  auto residual = [&](double Psi) { return branch_value(eta1, eta3, Psi) - eta2; };

  std::vector<double> grid(kScanSamples + 1);
  std::vector<double> values(kScanSamples + 1);
  for (std::size_t i = 0; i <= kScanSamples; ++i) {
    grid[i] = -range + 2.0 * range * static_cast<double>(i) / static_cast<double>(kScanSamples);
    values[i] = residual(grid[i]);
  }

  std::vector<double> roots;
  for (std::size_t i = 0; i <= kScanSamples; ++i) {
    if (values[i] == 0.0) {
      roots.push_back(grid[i]);
      continue;
    }
    if (i < kScanSamples && values[i + 1] != 0.0 && std::signbit(values[i]) != std::signbit(values[i + 1])) {
      roots.push_back(refine_root(residual, grid[i], grid[i + 1], values[i], values[i + 1], kRootTolerance));
    }
  }

  if (roots.empty()) {
    std::ostringstream msg;
    msg << "no equilibrium found for Psi in [" << -range << ", " << range << "] (eta1=" << eta1
        << ", eta2=" << eta2 << ", eta3=" << eta3 << ")";
    throw NoRootError(msg.str());
  }

  std::vector<EquilibriumPoint> out;
  out.reserve(roots.size());
  for (double Psi : roots) out.push_back(make_equilibrium(Psi, eta1, eta2, eta3));
  return out;
}

SaddleNode saddle_node(double eta1, double eta3) {
  if (!(eta3 > 0.0) || !(eta3 < 1.0) || !(eta1 > eta3 / (1.0 - eta3))) {
    std::ostringstream msg;
    msg << "saddle_node: requires 0 < eta3 < 1 and eta1 > eta3/(1-eta3) (eta1=" << eta1 << ", eta3=" << eta3 << ")";
    throw NoRootError(msg.str());
  }
  auto slope = [&](double Psi) { return th_branch_slope(eta1, eta3, Psi); };
  double hi = 1.0;
  while (slope(hi) > 0.0) hi *= 2.0;
  const double Psi = refine_root(slope, 0.0, hi, slope(0.0), slope(hi), 1e-15);
  return {Psi, th_branch(eta1, eta3, Psi)};
}

double nsf_point(double eta1, double eta3) { return eta1 * eta3; }

Regime classify_regime(double Psi) { return Psi < 0.0 ? Regime::SA : Regime::TH; }

BifurcationDiagram bifurcation_diagram(double eta1, double eta3, double eta2_min, double eta2_max,
                                       std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("bifurcation_diagram: resolution must be at least 2");
  if (!(eta2_max > eta2_min)) throw std::invalid_argument("bifurcation_diagram: empty eta2 range");
  if (!(eta1 > 0.0) || !(eta3 > 0.0)) throw std::invalid_argument("bifurcation_diagram: eta1, eta3 must be positive");

  BifurcationDiagram diagram;
  diagram.eta1 = eta1;
  diagram.eta3 = eta3;
  diagram.eta2_min = eta2_min;
  diagram.eta2_max = eta2_max;
  diagram.nsf_eta2 = nsf_point(eta1, eta3);

  if (eta3 < 1.0 && eta1 > eta3 / (1.0 - eta3)) {
    const SaddleNode sn = saddle_node(eta1, eta3);
    if (sn.eta2 >= eta2_min && sn.eta2 <= eta2_max) diagram.saddle_node = sn;
  }

  // Extend each branch until it leaves the requested eta2 window for good.
  double th_end = 1.0;
  while (th_branch(eta1, eta3, th_end) > eta2_min || th_branch_slope(eta1, eta3, th_end) > 0.0) th_end *= 2.0;
  double sa_end = -1.0;
  while (sa_branch(eta1, eta3, sa_end) < eta2_max) sa_end *= 2.0;

  auto sample = [&](double end, std::vector<BranchSample>& out) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const double Psi = end * static_cast<double>(i) / static_cast<double>(resolution - 1);
      const double eta2 = branch_value(eta1, eta3, Psi);
      if (eta2 < eta2_min || eta2 > eta2_max) continue;
      const EquilibriumPoint eq = make_equilibrium(Psi, eta1, eta2, eta3);
      out.push_back({eta2, Psi, end > 0.0 ? Regime::TH : Regime::SA, eq.stability});
    }
  };
  sample(th_end, diagram.th);
  sample(sa_end, diagram.sa);
  return diagram;
}

}  // namespace stommel::dynamics
