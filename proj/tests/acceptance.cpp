// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stommel/calibration.hpp"
#include "stommel/dynamics.hpp"
#include "stommel/etkf.hpp"
#include "stommel/experiments.hpp"
#include "stommel/io.hpp"
#include "stommel/model.hpp"
#include "stommel/observations.hpp"
#include "stommel/rk4.hpp"

#ifndef STOMMEL_CLI_PATH
#define STOMMEL_CLI_PATH "stommel"
#endif

using namespace stommel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates sub-checks; the first failing one is reported.
class Checker {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      failure_ = what;
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome outcome() const { return {pass_, pass_ ? notes_ : failure_ + (notes_.empty() ? "" : " | " + notes_)}; }

 private:
  bool pass_ = true;
  std::string failure_;
  std::string notes_;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double ulp_distance(double x, double ref) { return std::abs(x - ref) / (std::nextafter(std::abs(ref), INFINITY) - std::abs(ref)); }

const ModelParams kTable5{1.8e-7, 0.8e-7, 8.5e-2};

// ---------------------------------------------------------------------------

Outcome bifurcation_structure() {
  using namespace stommel::dynamics;
  Checker c;
  const double eta1 = 3.0, eta3 = 0.1;
  const double nsf = nsf_point(eta1, eta3);
  c.check(nsf == eta1 * eta3 && ulp_distance(nsf, 0.3) <= 1.0, fmt("NSF eta2 = %.17g", nsf));
  c.note(fmt("NSF eta2 = %.17g (eta1*eta3 in double, %.0f ulp from 0.3)", nsf, ulp_distance(nsf, 0.3)));

  const SaddleNode sn = saddle_node(eta1, eta3);
  // Dense grid-scan oracle: maximum of the TH branch over Psi in [0, 2].
  const std::size_t n = 2000000;
  double best_eta2 = -INFINITY, best_psi = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double psi = 2.0 * static_cast<double>(i) / static_cast<double>(n);
    const double v = -psi * psi - eta3 * psi + eta1 * (eta3 + psi) / (1.0 + psi);
    if (v > best_eta2) {
      best_eta2 = v;
      best_psi = psi;
    }
  }
  c.check(std::abs(sn.eta2 - best_eta2) < 1e-3 && std::abs(sn.Psi - best_psi) < 1e-3,
          fmt("saddle node (%.6f, %.6f) vs grid scan (%.6f, %.6f)", sn.eta2, sn.Psi, best_eta2, best_psi));
  c.check(std::abs(sn.eta2 - 0.901) < 1e-3 && std::abs(sn.Psi - 0.529) < 1e-3,
          fmt("saddle node (%.6f, %.6f) not near (0.901, 0.529)", sn.eta2, sn.Psi));
  c.note(fmt("saddle node eta2 = %.6f, Psi = %.6f; grid scan %.6f, %.6f", sn.eta2, sn.Psi, best_eta2, best_psi));

  int checked = 0;
  for (int i = 0; i < 25; ++i) {
    const double inside = nsf + (sn.eta2 - nsf) * (i + 0.5) / 25.0;
    const auto eq = find_equilibria(eta1, inside, eta3);
    c.check(eq.size() == 3, fmt("eta2 = %.4f: %zu equilibria, expected 3", inside, eq.size()));
    const double outside = i < 12 ? 0.01 + 0.28 * i / 11.0 : 0.92 + 1.08 * (i - 12) / 12.0;
    const auto one = find_equilibria(eta1, outside, eta3);
    c.check(one.size() == 1, fmt("eta2 = %.4f: %zu equilibria, expected 1", outside, one.size()));
    checked += 2;
  }
  c.note(fmt("equilibrium counts verified at %d eta2 values", checked));
  return c.outcome();
}

Outcome no_periodic_orbits() {
  using namespace stommel::dynamics;
  Checker c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const double eta1 = 3.0, eta3 = 0.1, dt = 0.01;
  double worst_time = 0.0;
  int runs = 0;
  for (double eta2 : {0.2, 0.6, 2.0}) {
    auto f = [&](double, const std::array<double, 2>& x) {
      const Rhs r = autonomous_rhs(x[0], x[1], eta1, eta2, eta3);
      return std::array<double, 2>{r.dT, r.dS};
    };
    for (int i = 0; i < 200; ++i) {
      std::array<double, 2> y = {u(rng), u(rng)};
      double reached = -1.0;
      for (int k = 1; k <= 20000; ++k) {
        y = rk4_step<2>(f, 0.0, y, dt);
        const Rhs r = autonomous_rhs(y[0], y[1], eta1, eta2, eta3);
        if (std::hypot(r.dT, r.dS) < 1e-8) {
          reached = k * dt;
          break;
        }
      }
      c.check(reached > 0.0, fmt("eta2 = %.1f: initial condition %d did not settle by t = 200", eta2, i));
      worst_time = std::max(worst_time, reached);
      ++runs;
    }
  }
  c.note(fmt("%d runs settled, slowest at t = %.2f", runs, worst_time));

  int negative = 0;
  double worst_fd = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double T = u(rng), S = u(rng);
    const double div = divergence(T, S, eta3);
    negative += div < 0.0;
    if (std::abs(T - S) > 1e-3) {
      const double h = 1e-6;
      const double fd = (autonomous_rhs(T + h, S, eta1, 1.0, eta3).dT - autonomous_rhs(T - h, S, eta1, 1.0, eta3).dT +
                         autonomous_rhs(T, S + h, eta1, 1.0, eta3).dS - autonomous_rhs(T, S - h, eta1, 1.0, eta3).dS) /
                        (2.0 * h);
      worst_fd = std::max(worst_fd, std::abs(fd - div));
    }
  }
  c.check(negative == 10000, fmt("divergence non-negative at %d points", 10000 - negative));
  c.check(worst_fd < 1e-6, fmt("divergence formula differs from finite differences by %.3g", worst_fd));
  c.note(fmt("divergence negative at %d/10000 points", negative));
  return c.outcome();
}

Outcome etkf_exactness() {
  Checker c;
  double worst_mean = 0.0, worst_var = 0.0;
  for (Eigen::Index M : {2, 10, 100}) {
    std::mt19937_64 rng(500 + static_cast<std::uint64_t>(M));
    std::normal_distribution<double> normal;
    Eigen::MatrixXd E(1, M);
    for (Eigen::Index j = 0; j < M; ++j) E(0, j) = 1.0 + normal(rng);
    double mean = da::ensemble_mean(E)[0];
    double var = da::ensemble_covariance(E)(0, 0);
    const double a = 0.95, q_obs = 0.4;
    double truth = 1.0;
    for (int k = 0; k < 100; ++k) {
      E *= a;
      mean *= a;
      var *= a * a;
      truth *= a;
      const double d = truth + std::sqrt(q_obs) * normal(rng);
      da::etkf_update(E, Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, d),
                      Eigen::MatrixXd::Constant(1, 1, q_obs));
      const double K = var / (var + q_obs);
      mean += K * (d - mean);
      var *= 1.0 - K;
      worst_mean = std::max(worst_mean, std::abs(da::ensemble_mean(E)[0] - mean));
      worst_var = std::max(worst_var, std::abs(da::ensemble_covariance(E)(0, 0) - var));
    }
  }
  c.check(worst_mean < 1e-10 && worst_var < 1e-10,
          fmt("Kalman mismatch: mean %.3g, variance %.3g", worst_mean, worst_var));
  c.note(fmt("max |mean - KF| = %.2g, max |var - KF| = %.2g over 100 cycles, M in {2,10,100}", worst_mean, worst_var));

  Eigen::MatrixXd E(1, 2);
  E << 0.0, 2.0;
  da::etkf_update(E, Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 2.0));
  const double m = da::ensemble_mean(E)[0];
  const double v = da::ensemble_covariance(E)(0, 0);
  // The transform square root involves sqrt(1/2), so the result is exact up
  // to the rounding of the final member values.
  c.check(ulp_distance(m, 1.5) <= 4.0 && ulp_distance(v, 1.0) <= 4.0,
          fmt("scalar example gives mean %.17g, variance %.17g", m, v));
  c.note(fmt("scalar example mean %.17g (%.0f ulp), variance %.17g (%.0f ulp)", m, ulp_distance(m, 1.5), v,
             ulp_distance(v, 1.0)));
  return c.outcome();
}

Outcome twin_skill() {
  Checker c;
  constexpr int kReplicates = 10;
  std::array<double, da::kStateDim> mse0{}, mse1{}, spread2{}, err2{};
  for (int r = 0; r < kReplicates; ++r) {
    experiments::ExperimentConfig cfg;
    cfg.members = 100;
    cfg.seed = 1000 + static_cast<std::uint64_t>(r);
    const experiments::DaPhase phase = experiments::twin_da_phase(cfg);
    const auto& diag = phase.result.diagnostics;
    const double window_start = (cfg.da_end_month - 60) * kSecondsPerMonth;
    for (std::size_t i = 0; i < da::kStateDim; ++i) {
      mse0[i] += std::pow((*diag.front().error)[i], 2);
      mse1[i] += std::pow((*diag.back().error)[i], 2);
    }
    for (const auto& s : diag) {
      if (s.time <= window_start + 1.0) continue;
      for (std::size_t i = 0; i < da::kStateDim; ++i) {
        spread2[i] += s.spread[i] * s.spread[i];
        err2[i] += std::pow((*s.error)[i], 2);
      }
    }
  }
  auto ratio = [&](int i) { return std::sqrt(mse1[static_cast<std::size_t>(i)] / mse0[static_cast<std::size_t>(i)]); };
  c.check(ratio(da::kLogKT) < 0.5, fmt("log kT final/initial RMSE %.3f", ratio(da::kLogKT)));
  c.check(ratio(da::kLogGamma) < 0.5, fmt("log gamma final/initial RMSE %.3f", ratio(da::kLogGamma)));
  c.check(ratio(da::kLogKS) < 1.0, fmt("log kS final/initial RMSE %.3f", ratio(da::kLogKS)));
  c.note(fmt("final/initial RMSE: log kT %.3f, log kS %.3f, log gamma %.3f", ratio(da::kLogKT), ratio(da::kLogKS),
             ratio(da::kLogGamma)));
  std::string sr = "spread/RMSE (last 5 yr):";
  const char* names[] = {"Te", "Tp", "Se", "Sp", "kT", "kS", "gamma"};
  for (std::size_t i = 0; i < da::kStateDim; ++i) {
    const double q = std::sqrt(spread2[i] / err2[i]);
    c.check(q >= 0.5 && q <= 2.0, fmt("spread/RMSE for %s = %.3f", names[i], q));
    sr += fmt(" %s %.2f", names[i], q);
  }
  c.note(sr);
  return c.outcome();
}

Outcome regime_flips() {
  Checker c;
  experiments::ExperimentConfig cfg;
  cfg.truth_params = kTable5;
  const experiments::SweepGrid grid = experiments::scenario_sweep(cfg, experiments::SweepGrid::default_grid());
  c.check(grid.failures.empty(), grid.failures.empty() ? "" : "sweep cell failed: " + grid.failures.front());
  auto cell = [&](double melt, double warm) {
    for (std::size_t i = 0; i < grid.melt_periods.size(); ++i) {
      for (std::size_t j = 0; j < grid.warming_rates_eq.size(); ++j) {
        if (grid.melt_periods[i] == melt && std::abs(grid.warming_rates_eq[j] - warm) < 1e-12) return grid.flip_fraction[i][j];
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double slow = cell(10000.0, 0.03);
  const double fast = cell(1000.0, 0.07);
  c.check(slow == 0.0, fmt("(10000 yr, 0.03) flip fraction %.2f", slow));
  c.check(fast >= 0.9, fmt("(1000 yr, 0.07) flip fraction %.2f", fast));
  int total = 0, decided = 0;
  for (const auto& row : grid.flip_fraction) {
    for (double f : row) {
      ++total;
      decided += (f <= 0.2 || f >= 0.8);
    }
  }
  const double share = static_cast<double>(decided) / total;
  c.check(share >= 0.9, fmt("only %d/%d cells outside (0.2, 0.8)", decided, total));
  c.note(fmt("(10000 yr, 0.03): %.2f; (1000 yr, 0.07): %.2f; %d/%d cells outside (0.2, 0.8)", slow, fast, decided, total));
  return c.outcome();
}

Outcome forcing_scaling() {
  Checker c;
  const SurfaceForcing f = SurfaceForcing::en4_fit();
  const std::array<std::pair<const char*, std::pair<double, double>>, 4> amps = {{
      {"Tp", {f.Tp.amplitude(), 1.9}},
      {"Te", {f.Te.amplitude(), 3.4}},
      {"Sp", {f.Sp.amplitude(), 0.39}},
      {"Se", {f.Se.amplitude(), 0.07}},
  }};
  std::string line = "amplitudes:";
  for (const auto& [name, v] : amps) {
    c.check(std::abs(v.first - v.second) <= 0.01 + 1e-12,
            fmt("%s amplitude %.4f vs tabulated %.2f (|diff| %.4f > 0.01)", name, v.first, v.second,
                std::abs(v.first - v.second)));
    line += fmt(" %s %.4f (tab %.2f)", name, v.first, v.second);
  }
  c.note(line);
  const double B = f.temperature_difference_amplitude();
  const double Bhat = f.salinity_difference_amplitude();
  // 1e-12 absorbs the representation error of the decimal bounds.
  c.check(std::abs(B - 1.51) <= 0.01 + 1e-12, fmt("B = %.4f", B));
  c.check(std::abs(Bhat - 0.32) <= 0.01 + 1e-12, fmt("Bhat = %.4f", Bhat));
  c.note(fmt("B = %.4f degC, Bhat = %.4f ppt", B, Bhat));

  const DimensionlessState d = nondimensionalize({}, kTable5, BoxGeometry{}, PhysicalConstants{}, f);
  c.check(std::abs(d.Omega / 3564.0 - 1.0) <= 0.05, fmt("Omega = %.1f", d.Omega));
  c.check(std::abs(d.B / 1.18 - 1.0) <= 0.2, fmt("B_nd = %.3f", d.B));
  c.check(std::abs(d.Bhat / 0.66 - 1.0) <= 0.2, fmt("Bhat_nd = %.3f", d.Bhat));
  c.check(std::abs(d.A / 0.52 - 1.0) <= 0.2, fmt("A = %.3f", d.A));
  c.note(fmt("Omega = %.1f, B_nd = %.3f, Bhat_nd = %.3f, A = %.3f", d.Omega, d.B, d.Bhat, d.A));
  return c.outcome();
}

Outcome eta_values() {
  Checker c;
  const DimensionlessState d = nondimensionalize({}, kTable5, BoxGeometry{}, PhysicalConstants{}, SurfaceForcing::en4_fit());
  c.check(std::abs(d.eta1 / 9.2 - 1.0) <= 0.3, fmt("eta1 = %.3f", d.eta1));
  c.check(std::abs(d.eta2 / 4.2 - 1.0) <= 0.3, fmt("eta2 = %.3f", d.eta2));
  c.check(std::abs(d.eta3 / 0.5 - 1.0) <= 0.3, fmt("eta3 = %.3f", d.eta3));
  c.note(fmt("eta1 = %.3f, eta2 = %.3f, eta3 = %.3f", d.eta1, d.eta2, d.eta3));
  return c.outcome();
}

// ---------------------------------------------------------------------------
// CLI helpers

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + STOMMEL_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome pipeline_correctness(const fs::path& work) {
  Checker c;
  const fs::path dir = work / "pipeline";
  fs::remove_all(dir);
  const int months = 36;
  const double trend = 0.01;
  if (run(fmt("synth-profiles --months %d --trend-T %.17g --add-rejects --out \"%s\"", months, trend,
              (dir / "synth").string().c_str()),
          work / "synth.log") != 0 ||
      run("obs-process --profiles \"" + (dir / "synth" / "profiles.csv").string() + "\" --out \"" +
              (dir / "obs").string() + "\"",
          work / "obs.log") != 0) {
    c.check(false, "CLI failed: " + slurp(work / "synth.log") + slurp(work / "obs.log"));
    return c.outcome();
  }

  // Analytic values for the default synthetic grid: 6 x 8 one-degree cells
  // centred at 55.5..60.5N, the two northern rows polar; level thicknesses
  // below; the level centred at 4.5 km is truncated.
  const obs::SynthConfig fixture;
  const std::vector<double> h = {20.0, 180.0, 300.0, 500.0, 1000.0, 1000.0, 1000.0};
  double top = 0.0, hz = 0.0, hs = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double z = top + 0.5 * h[k];
    top += h[k];
    if (k == 0) continue;
    hz += h[k] * z;
    hs += h[k];
  }
  const double mean_depth_km = hz / hs / 1000.0;
  const double R = fixture.earth_radius, rad = std::numbers::pi / 180.0;
  const double A_p = 8.0 * R * R * rad * (std::sin(61.0 * rad) - std::sin(59.0 * rad));
  const double A_e = 8.0 * R * R * rad * (std::sin(59.0 * rad) - std::sin(55.0 * rad));
  const double depth = top;  // 4000 m
  const double A_c = 8.0 * R * std::cos(59.0 * rad) * rad * depth;
  const double dx = A_c / depth;

  double worst = 0.0;
  auto compare = [&](double got, double want, const std::string& what, bool relative) {
    const double err = relative ? std::abs(got / want - 1.0) : std::abs(got - want);
    worst = std::max(worst, err);
    c.check(err <= 1e-10, fmt("%s: got %.17g, expected %.17g", what.c_str(), got, want));
  };

  const nlohmann::json g = io::read_json(dir / "obs" / "geometry.json");
  compare(g["dz"].get<double>(), depth, "dz", true);
  compare(g["dx"].get<double>(), dx, "dx", true);
  compare(g["dy_p"].get<double>(), A_p / dx, "dy_p", true);
  compare(g["dy_e"].get<double>(), A_e / dx, "dy_e", true);
  compare(g["cross_section"].get<double>(), A_c, "A_c", true);

  const io::CsvTable table = io::read_csv(dir / "obs" / "observations.csv");
  c.check(table.rows.size() == static_cast<std::size_t>(months), fmt("%zu observation rows", table.rows.size()));
  for (const auto& row : table.rows) {
    const int m = std::stoi(row[0]);
    const double f = 1.0 + fixture.sigma_seasonal * std::cos(2.0 * std::numbers::pi * m / 12.0);
    const double Tp = fixture.subsurface_T_polar + fixture.T_gradient_per_km * mean_depth_km + trend * m;
    const double Te = fixture.subsurface_T_equatorial + fixture.T_gradient_per_km * mean_depth_km + trend * m;
    const std::array<double, 8> want = {Tp,
                                        Te,
                                        fixture.subsurface_S_polar,
                                        fixture.subsurface_S_equatorial,
                                        std::pow(fixture.sigma_T * f, 2),
                                        std::pow(fixture.sigma_T * f, 2),
                                        std::pow(fixture.sigma_S * f, 2),
                                        std::pow(fixture.sigma_S * f, 2)};
    for (std::size_t i = 0; i < want.size(); ++i) {
      compare(std::stod(row[i + 1]), want[i], fmt("month %d %s", m, table.header[i + 1].c_str()), false);
    }
  }

  const nlohmann::json forcing = io::read_json(dir / "obs" / "forcing.json");
  const std::array<std::pair<const char*, HarmonicCoeffs>, 4> planted = {{{"Tp", fixture.surface_T_polar},
                                                                           {"Te", fixture.surface_T_equatorial},
                                                                           {"Sp", fixture.surface_S_polar},
                                                                           {"Se", fixture.surface_S_equatorial}}};
  for (const auto& [name, h0] : planted) {
    compare(forcing[name]["c0"].get<double>(), h0.c0, std::string(name) + " c0", false);
    compare(forcing[name]["c_cos"].get<double>(), h0.c_cos, std::string(name) + " c_cos", false);
    compare(forcing[name]["c_sin"].get<double>(), h0.c_sin, std::string(name) + " c_sin", false);
  }

  const io::CsvTable labels = io::read_csv(dir / "obs" / "assignment.csv");
  int polar = 0;
  for (const auto& row : labels.rows) {
    const bool expect_polar = std::stod(row[0]) > 59.0;
    polar += row[2] == "polar";
    c.check((row[2] == "polar") == expect_polar, "column at " + row[0] + "N labelled " + row[2]);
  }
  c.check(labels.rows.size() == 48, fmt("%zu columns selected, expected 48", labels.rows.size()));

  // Direct regression check: a noiseless planted signal is recovered exactly.
  std::vector<obs::SeasonalPoint> pts;
  for (int m = 0; m < 24; ++m) {
    const double t = m * kSecondsPerMonth;
    pts.push_back({t, HarmonicCoeffs{-0.7, 1.3, 2.9}.evaluate(t, kSecondsPerYear), 0.5 + 0.1 * (m % 5)});
  }
  const obs::SeasonalFit fit = obs::fit_seasonal(pts);
  compare(fit.coeffs.c0, -0.7, "planted c0", false);
  compare(fit.coeffs.c_cos, 1.3, "planted c_cos", false);
  compare(fit.coeffs.c_sin, 2.9, "planted c_sin", false);

  c.note(fmt("%zu months, %d polar of %zu columns; max deviation %.2g", table.rows.size(), polar, labels.rows.size(), worst));
  return c.outcome();
}

// Files in `dir` with manifest.json compared without its wall-clock field.
std::vector<std::pair<std::string, std::string>> output_files(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string content = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      nlohmann::json j = nlohmann::json::parse(content);
      j.erase("wall_clock_seconds");
      content = j.dump();
    }
    out.emplace_back(e.path().filename().string(), std::move(content));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism(const fs::path& work) {
  Checker c;
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // A reduced configuration keeps the run short; every command still runs
  // end to end.
  const nlohmann::json config = {
      {"experiment", {{"members", 20}, {"horizon_year", 2030.0}}},
      {"simulate", {{"end_year", 2030.0}}},
      {"sweep", {{"melt_periods_years", {1000.0, 10000.0}}, {"warming_rates_eq", {0.0, 0.07}}}},
  };
  const fs::path cfg = dir / "config.json";
  io::write_atomic(cfg, config.dump(2));
  const std::string cfg_arg = " --config \"" + cfg.string() + "\" --seed 11";

  // Inputs for assimilate and sweep: a synthetic series covering 2004-2022.
  if (run("synth-profiles --months 217 --noise-T 0.05 --out \"" + (dir / "fixture").string() + "\"", dir / "fx.log") != 0 ||
      run("obs-process --profiles \"" + (dir / "fixture" / "profiles.csv").string() + "\" --out \"" +
              (dir / "fixture_obs").string() + "\"",
          dir / "fxo.log") != 0) {
    c.check(false, "fixture generation failed: " + slurp(dir / "fx.log") + slurp(dir / "fxo.log"));
    return c.outcome();
  }
  const std::string obs_args = " --obs \"" + (dir / "fixture_obs" / "observations.csv").string() + "\" --forcing \"" +
                               (dir / "fixture_obs" / "forcing.json").string() + "\"";

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate" + cfg_arg},
      {"bifurcation", "bifurcation --eta1 3 --eta3 0.1" + cfg_arg},
      {"twin", "twin" + cfg_arg},
      {"assimilate", "assimilate" + cfg_arg + obs_args},
      {"sweep", "sweep" + cfg_arg},
      {"calibrate", "calibrate" + cfg_arg},
      {"obs-process", "obs-process" + cfg_arg + " --profiles \"" + (dir / "fixture" / "profiles.csv").string() + "\""},
      {"synth-profiles", "synth-profiles --months 24 --noise-T 0.1 --seed 11"},
  };
  std::string done;
  for (const auto& [name, args] : commands) {
    std::vector<std::pair<std::string, std::string>> runs[2];
    bool ok = true;
    for (int r = 0; r < 2; ++r) {
      const fs::path out = dir / (name + "_" + std::to_string(r));
      const fs::path log = dir / (name + "_" + std::to_string(r) + ".log");
      if (run(args + " --out \"" + out.string() + "\"", log) != 0) {
        c.check(false, name + " failed: " + slurp(log));
        ok = false;
        break;
      }
      runs[r] = output_files(out);
    }
    if (!ok) continue;
    c.check(runs[0].size() > 1, name + " wrote no outputs");
    c.check(runs[0] == runs[1], name + " outputs differ between identical runs");
    done += (done.empty() ? "" : ", ") + name + fmt(" (%zu files)", runs[0].size());
  }
  c.note("byte-identical: " + done + "; manifest compared without wall_clock_seconds");
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "stommel_acceptance";
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bifurcation structure", bifurcation_structure},
      {"no periodic orbits", no_periodic_orbits},
      {"ETKF exactness", etkf_exactness},
      {"twin-experiment skill", twin_skill},
      {"regime-flip scenarios", regime_flips},
      {"forcing-scaling arithmetic", forcing_scaling},
      {"nondimensional eta values", eta_values},
      {"pipeline correctness", [&] { return pipeline_correctness(work); }},
      {"determinism", [&] { return determinism(work); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
