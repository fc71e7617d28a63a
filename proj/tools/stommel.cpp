// Command-line driver: every workflow reads a JSON config (optional), writes
// CSV/JSON outputs into --out and finishes with manifest.json.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include "stommel/calibration.hpp"
#include "stommel/dynamics.hpp"
#include "stommel/experiments.hpp"
#include "stommel/io.hpp"
#include "stommel/observations.hpp"

namespace {

using namespace stommel;
using nlohmann::json;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

struct ScenarioOptions {
  std::optional<double> melt_period_years;
  std::optional<double> warming_eq;
  std::optional<double> warming_pole;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON run configuration (or a previous manifest.json)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Random seed (overrides experiment.seed)");
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
}

void add_scenario(CLI::App* cmd, ScenarioOptions& s) {
  cmd->add_option("--melt-period-years", s.melt_period_years, "Ice melt period; enables the climate scenario")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--warming-eq", s.warming_eq, "Equatorial warming rate (degC/yr); enables the climate scenario");
  cmd->add_option("--warming-pole", s.warming_pole, "Polar warming rate (degC/yr); default twice --warming-eq");
}

io::RunConfig resolve(const CommonOptions& o, const ScenarioOptions* s = nullptr) {
  io::RunConfig cfg = o.config.empty() ? io::config_from_json(json::object()) : io::load_config(o.config);
  if (o.seed) cfg.experiment.seed = *o.seed;
  if (s) {
    ClimateScenario& sc = cfg.experiment.model.scenario;
    if (s->melt_period_years) {
      sc.enabled = true;
      sc.melt_period = *s->melt_period_years;
    }
    if (s->warming_eq) {
      sc.enabled = true;
      sc.warm_e = *s->warming_eq;
      sc.warm_p = 2.0 * *s->warming_eq;
    }
    if (s->warming_pole) {
      sc.enabled = true;
      sc.warm_p = *s->warming_pole;
    }
  }
  // Re-validate after overrides.
  return io::config_from_json(io::config_to_json(cfg));
}

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void add_run_outputs(io::RunRecorder& rec, const experiments::RunResult& r, const ModelContext& ctx) {
  rec.add_output("members.csv", io::member_series_csv(r));
  rec.add_output("most_likely.csv", io::most_likely_csv(r, ctx));
  rec.add_output("diagnostics.csv", io::diagnostics_csv(r));
  rec.add_output("flips.csv", io::flips_csv(r));
  if (!r.truth.empty()) rec.add_output("truth.csv", io::truth_csv(r));
}

json run_summary(const experiments::RunResult& r, const experiments::ExperimentConfig& cfg) {
  const da::AugmentedState& ml = r.most_likely.back();
  const ModelParams p = ml.params();
  const da::AugmentedState& at_da_end = r.most_likely.at(static_cast<std::size_t>(cfg.da_end_month - cfg.da_start_month));
  const ModelParams p_da = at_da_end.params();
  return {{"members", r.member_count()},
          {"flip_fraction", experiments::flip_fraction(r, cfg.horizon_time())},
          {"flip_events", r.flips.size()},
          {"da_end_params", {{"kT", p_da.kT}, {"kS", p_da.kS}, {"gamma", p_da.gamma}}},
          {"final_params", {{"kT", p.kT}, {"kS", p.kS}, {"gamma", p.gamma}}}};
}

int cmd_simulate(const CommonOptions& o, const ScenarioOptions& s) {
  Timer timer;
  const io::RunConfig cfg = resolve(o, &s);
  ModelContext ctx = cfg.experiment.model;
  if (!cfg.simulate.seasonal) ctx.forcing = ctx.forcing.annual_mean();
  const double t0 = year_to_model_time(cfg.simulate.start_year);
  const double t1 = year_to_model_time(cfg.simulate.end_year);
  const Trajectory full = integrate(cfg.experiment.initial_state, t0, t1, cfg.simulate.step_days * 86400.0, ctx);

  Trajectory out;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (i % cfg.simulate.output_every == 0 || i + 1 == full.size()) {
      out.times.push_back(full.times[i]);
      out.states.push_back(full.states[i]);
    }
  }
  const OceanState& last = full.states.back();
  const OceanState d = tendencies(full.times.back(), last, ctx);
  const double norm = std::sqrt(d.Te * d.Te + d.Tp * d.Tp + d.Se * d.Se + d.Sp * d.Sp);

  io::RunRecorder rec(o.out, "simulate", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  rec.add_output("trajectory.csv", io::trajectory_to_csv(out, ctx));
  rec.summary() = {{"final_Q_Sv", transport(last, ctx.params, ctx.geometry, ctx.constants) / kSverdrup},
                   {"final_tendency_norm", norm},
                   {"warnings", full.warnings}};
  rec.commit(timer.seconds());
  std::printf("simulate: %zu samples, final Q = %.4f Sv, |tendency| = %.3e per s\n", out.size(),
              rec.summary()["final_Q_Sv"].get<double>(), norm);
  for (const auto& w : full.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

struct BifurcationFlags {
  std::optional<double> eta1, eta3, eta2_min, eta2_max;
  std::optional<std::size_t> resolution;
};

int cmd_bifurcation(const CommonOptions& o, const BifurcationFlags& f) {
  Timer timer;
  io::RunConfig cfg = resolve(o);
  io::BifurcationSettings& b = cfg.bifurcation;
  if (f.eta1) b.eta1 = *f.eta1;
  if (f.eta3) b.eta3 = *f.eta3;
  if (f.eta2_min) b.eta2_min = *f.eta2_min;
  if (f.eta2_max) b.eta2_max = *f.eta2_max;
  if (f.resolution) b.resolution = *f.resolution;
  if (!(b.eta1 > 0.0) || !(b.eta3 > 0.0)) throw CLI::ValidationError("eta1 and eta3 must be positive");

  const dynamics::BifurcationDiagram d = dynamics::bifurcation_diagram(b.eta1, b.eta3, b.eta2_min, b.eta2_max, b.resolution);
  io::RunRecorder rec(o.out, "bifurcation", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  rec.add_output("bifurcation.csv", io::diagram_to_csv(d));
  rec.summary() = {{"nsf_eta2", d.nsf_eta2}};
  if (d.saddle_node) rec.summary()["saddle_node"] = {{"eta2", d.saddle_node->eta2}, {"Psi", d.saddle_node->Psi}};
  rec.commit(timer.seconds());
  std::printf("bifurcation: NSF eta2 = %.6g", d.nsf_eta2);
  if (d.saddle_node) std::printf(", saddle node at eta2 = %.6g, Psi = %.6g", d.saddle_node->eta2, d.saddle_node->Psi);
  std::printf("\n");
  return 0;
}

int cmd_twin(const CommonOptions& o, const ScenarioOptions& s, std::optional<std::size_t> members) {
  Timer timer;
  io::RunConfig cfg = resolve(o, &s);
  if (members) cfg.experiment.members = *members;
  const experiments::RunResult r = experiments::twin_experiment(cfg.experiment);
  io::RunRecorder rec(o.out, "twin", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  add_run_outputs(rec, r, cfg.experiment.model);
  rec.summary() = run_summary(r, cfg.experiment);
  rec.commit(timer.seconds());
  std::printf("twin: %s\n", rec.summary().dump().c_str());
  return 0;
}

int cmd_assimilate(const CommonOptions& o, const ScenarioOptions& s, const std::string& obs_path,
                   const std::string& forcing_path, std::optional<std::size_t> members) {
  Timer timer;
  io::RunConfig cfg = resolve(o, &s);
  if (members) cfg.experiment.members = *members;
  const obs::BoxObservationSeries series = io::read_observations(obs_path);
  const SurfaceForcing forcing =
      forcing_path.empty() ? cfg.experiment.model.forcing : io::forcing_from_json(io::read_json(forcing_path));
  cfg.experiment.model.forcing = forcing;
  const experiments::RunResult r = experiments::real_experiment(cfg.experiment, series, forcing);

  io::RunRecorder rec(o.out, "assimilate", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  rec.add_input(obs_path);
  if (!forcing_path.empty()) rec.add_input(forcing_path);
  add_run_outputs(rec, r, cfg.experiment.model);
  rec.summary() = run_summary(r, cfg.experiment);
  rec.commit(timer.seconds());
  std::printf("assimilate: %s\n", rec.summary().dump().c_str());
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& obs_path, const std::string& forcing_path,
              std::optional<std::size_t> members) {
  Timer timer;
  io::RunConfig cfg = resolve(o);
  if (members) cfg.experiment.members = *members;
  std::optional<obs::BoxObservationSeries> series;
  if (!obs_path.empty()) series = io::read_observations(obs_path);
  if (!forcing_path.empty()) cfg.experiment.model.forcing = io::forcing_from_json(io::read_json(forcing_path));

  const experiments::SweepGrid grid =
      experiments::scenario_sweep(cfg.experiment, cfg.sweep, series ? &*series : nullptr);
  io::RunRecorder rec(o.out, "sweep", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  if (!obs_path.empty()) rec.add_input(obs_path);
  if (!forcing_path.empty()) rec.add_input(forcing_path);
  rec.add_output("sweep.csv", io::sweep_csv(grid));
  rec.summary() = {{"cells", grid.melt_periods.size() * grid.warming_rates_eq.size()}, {"failures", grid.failures}};
  rec.commit(timer.seconds());
  for (const auto& f : grid.failures) std::fprintf(stderr, "cell failed: %s\n", f.c_str());
  std::printf("sweep: %zu x %zu cells written to %s\n", grid.melt_periods.size(), grid.warming_rates_eq.size(),
              (std::filesystem::path(o.out) / "sweep.csv").string().c_str());
  return 0;
}

int cmd_calibrate(const CommonOptions& o, std::optional<double> q_target) {
  Timer timer;
  io::RunConfig cfg = resolve(o);
  if (q_target) cfg.calibration_target.Q_target = *q_target;
  const ModelContext& m = cfg.experiment.model;
  const calibration::FitResult fit =
      calibration::initial_param_fit(cfg.calibration_target, m.geometry, m.constants, m.forcing, m.params, cfg.simplex);

  const json result = {
      {"params", {{"kT", fit.params.kT}, {"kS", fit.params.kS}, {"gamma", fit.params.gamma}}},
      {"equilibrium",
       {{"Te", fit.equilibrium.state.Te},
        {"Tp", fit.equilibrium.state.Tp},
        {"Se", fit.equilibrium.state.Se},
        {"Sp", fit.equilibrium.state.Sp},
        {"dT", fit.equilibrium.dT},
        {"dS", fit.equilibrium.dS},
        {"Q_Sv", fit.equilibrium.Q},
        {"Psi", fit.equilibrium.Psi}}},
      {"cost", fit.simplex.cost},
      {"iterations", fit.simplex.iterations},
      {"evaluations", fit.simplex.evaluations},
      {"converged", fit.simplex.converged}};
  io::RunRecorder rec(o.out, "calibrate", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  rec.add_output("calibration.json", result.dump(2) + "\n");
  rec.summary() = {{"converged", fit.simplex.converged}, {"cost", fit.simplex.cost}};
  rec.commit(timer.seconds());
  std::printf("calibrate: kT = %.4g m/s, kS = %.4g m/s, gamma = %.4g m/s, Q = %.3f Sv, cost = %.3e%s\n", fit.params.kT,
              fit.params.kS, fit.params.gamma, fit.equilibrium.Q, fit.simplex.cost,
              fit.simplex.converged ? "" : " (not converged)");
  if (!fit.simplex.converged) std::fprintf(stderr, "warning: simplex did not converge; best point written\n");
  return 0;
}

int cmd_obs_process(const CommonOptions& o, const std::string& profiles_path) {
  Timer timer;
  const io::RunConfig cfg = resolve(o);
  const obs::ProfileSet raw = io::read_profiles(profiles_path);
  const obs::ProfileSet set = obs::select_profiles(raw, cfg.obs.selection);
  const obs::BoxAssignment assignment = obs::assign_boxes(set);
  const obs::GeometryReport geometry = obs::compute_geometry(set, assignment, cfg.obs.adjacency);
  const obs::BoxObservationSeries series = obs::build_obs_series(set, assignment, cfg.obs.first_month, cfg.obs.last_month);
  const SurfaceForcing forcing = obs::fit_surface_forcing(series);

  io::CsvWriter labels({"lat", "lon", "label", "cold_months", "valid_months"});
  for (std::size_t i = 0; i < set.columns.size(); ++i) {
    const obs::BoxLabel l = assignment.labels[i];
    labels.row(std::vector<std::string>{io::format_double(set.columns[i].lat), io::format_double(set.columns[i].lon),
                                        l == obs::BoxLabel::Polar ? "polar" : l == obs::BoxLabel::Equatorial ? "equatorial" : "excluded",
                                        std::to_string(assignment.cold_months[i]), std::to_string(assignment.valid_months[i])});
  }

  io::RunRecorder rec(o.out, "obs-process", io::config_to_json(cfg), cfg.experiment.seed);
  if (!o.config.empty()) rec.add_input(o.config);
  rec.add_input(profiles_path);
  rec.add_output("observations.csv", io::observations_to_csv(series));
  rec.add_output("forcing.json", io::forcing_to_json(forcing).dump(2) + "\n");
  rec.add_output("geometry.json", io::geometry_to_json(geometry).dump(2) + "\n");
  rec.add_output("assignment.csv", labels.str());
  rec.summary() = {{"columns_in", raw.columns.size()},
                   {"columns_selected", set.columns.size()},
                   {"months", series.size()},
                   {"sigma_d", series.sigma_d}};
  rec.commit(timer.seconds());
  std::printf("obs-process: %zu of %zu columns kept, %zu monthly observations\n", set.columns.size(), raw.columns.size(),
              series.size());
  return 0;
}

int cmd_synth_profiles(const CommonOptions& o, obs::SynthConfig fixture) {
  Timer timer;
  if (o.seed) fixture.seed = *o.seed;
  const obs::ProfileSet set = obs::synth_profiles(fixture);
  io::RunRecorder rec(o.out, "synth-profiles",
                      {{"months", fixture.months}, {"noise_T", fixture.noise_T}, {"noise_S", fixture.noise_S},
                       {"T_trend_per_month", fixture.T_trend_per_month}, {"add_rejects", fixture.add_rejects}},
                      fixture.seed);
  rec.add_output("profiles.csv", io::profiles_to_csv(set));
  rec.commit(timer.seconds());
  std::printf("synth-profiles: %zu columns, %zu months\n", set.columns.size(), set.months.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stommel two-box AMOC model with ensemble data assimilation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version_string());

  CommonOptions common;
  ScenarioOptions scenario;
  std::optional<std::size_t> members;
  int status = 0;

  auto* sim = app.add_subcommand("simulate", "Integrate a single model run");
  add_common(sim, common);
  add_scenario(sim, scenario);

  BifurcationFlags bf;
  auto* bif = app.add_subcommand("bifurcation", "Equilibrium branches of the dimensionless model");
  add_common(bif, common);
  bif->add_option("--eta1", bf.eta1, "Temperature forcing eta1");
  bif->add_option("--eta3", bf.eta3, "Diffusivity ratio eta3")->check(CLI::PositiveNumber);
  bif->add_option("--eta2-min", bf.eta2_min);
  bif->add_option("--eta2-max", bf.eta2_max);
  bif->add_option("--resolution", bf.resolution)->check(CLI::Range(2, 1000000));

  auto* twin = app.add_subcommand("twin", "Twin experiment with synthetic observations");
  add_common(twin, common);
  add_scenario(twin, scenario);
  twin->add_option("--members", members)->check(CLI::Range(3, 100000));

  std::string obs_path, forcing_path;
  auto* assim = app.add_subcommand("assimilate", "Assimilate a box-averaged observation series");
  add_common(assim, common);
  add_scenario(assim, scenario);
  assim->add_option("--obs", obs_path, "Observation CSV from obs-process")->required()->check(CLI::ExistingFile);
  assim->add_option("--forcing", forcing_path, "Forcing JSON from obs-process")->check(CLI::ExistingFile);
  assim->add_option("--members", members)->check(CLI::Range(2, 100000));

  auto* sweep = app.add_subcommand("sweep", "Flip fractions over melt period x warming rate");
  add_common(sweep, common);
  sweep->add_option("--obs", obs_path, "Assimilate this series instead of a twin experiment")->check(CLI::ExistingFile);
  sweep->add_option("--forcing", forcing_path, "Forcing JSON from obs-process")->check(CLI::ExistingFile);
  sweep->add_option("--members", members)->check(CLI::Range(3, 100000));

  std::optional<double> q_target;
  auto* cal = app.add_subcommand("calibrate", "Initial parameter fit to an equilibrium");
  add_common(cal, common);
  cal->add_option("--q-target", q_target, "Target overturning transport (Sv)");

  std::string profiles_path;
  auto* obsp = app.add_subcommand("obs-process", "Box averages, geometry and forcing fit from profile CSV");
  add_common(obsp, common);
  obsp->add_option("--profiles", profiles_path, "Profile CSV")->required()->check(CLI::ExistingFile);

  obs::SynthConfig fixture;
  auto* synth = app.add_subcommand("synth-profiles", "Write a synthetic profile CSV");
  add_common(synth, common);
  synth->add_option("--months", fixture.months)->check(CLI::Range(1, 100000));
  synth->add_option("--noise-T", fixture.noise_T)->check(CLI::NonNegativeNumber);
  synth->add_option("--noise-S", fixture.noise_S)->check(CLI::NonNegativeNumber);
  synth->add_option("--trend-T", fixture.T_trend_per_month, "Subsurface temperature trend per month");
  synth->add_flag("--add-rejects", fixture.add_rejects, "Append columns that selection must drop");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) status = cmd_simulate(common, scenario);
    else if (*bif) status = cmd_bifurcation(common, bf);
    else if (*twin) status = cmd_twin(common, scenario, members);
    else if (*assim) status = cmd_assimilate(common, scenario, obs_path, forcing_path, members);
    else if (*sweep) status = cmd_sweep(common, obs_path, forcing_path, members);
    else if (*cal) status = cmd_calibrate(common, q_target);
    else if (*obsp) status = cmd_obs_process(common, profiles_path);
    else if (*synth) status = cmd_synth_profiles(common, fixture);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const io::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return status;
}
