// Twin experiments, assimilation of box-averaged observations, forward
// projections under climate scenarios, and tipping sweeps.
//
// A run has two phases. During the assimilation (DA) phase the ensemble is
// propagated month by month and updated with observations; the scenario is
// not applied. During the projection phase members run freely with the
// climate scenario switched on, starting at the scenario onset.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stommel/etkf.hpp"
#include "stommel/model.hpp"
#include "stommel/observations.hpp"

namespace stommel::experiments {

struct ExperimentConfig {
  ModelContext model;  // params are the prior centre, scenario is applied after DA
  OceanState initial_state{5.4, 1.23, 35.15, 34.82};  // January 2004 prior mean
  std::array<double, 4> initial_variance = {0.09, 0.25, 0.0049, 0.0049};  // [Tp, Te, Sp, Se]
  std::array<double, 4> obs_variance = {0.09, 0.25, 0.0049, 0.0049};      // twin observations, [Tp, Te, Sp, Se]
  double log_std = 0.26;
  std::size_t members = 100;
  std::uint64_t seed = 1;
  bool da_enabled = true;
  int da_start_month = 0;   // January 2004
  int da_end_month = 216;   // January 2022
  double horizon_year = 2104.0;
  // Twin mode: parameters of the truth member. If unset the truth keeps its
  // prior draw.
  std::optional<ModelParams> truth_params;

  double da_start_time() const { return da_start_month * kSecondsPerMonth; }
  double da_end_time() const { return da_end_month * kSecondsPerMonth; }
  double horizon_time() const { return year_to_model_time(horizon_year); }
  void validate() const;
};

/// One ensemble member at one output time.
struct MemberSample {
  double dT = 0.0;  // Te - Tp, degC
  double dS = 0.0;  // Se - Sp, ppt
  double Q = 0.0;   // Sv
  double T = 0.0;   // dimensionless, with the member's parameters
  double S = 0.0;
};

struct DiagnosticsSample {
  double time = 0.0;
  std::array<double, da::kStateDim> spread{};
  std::optional<std::array<double, da::kStateDim>> error;  // |mean - truth|
  std::optional<std::array<double, da::kObsDim>> innovation;  // d - H mu before the update
};

struct FlipEvent {
  std::size_t member = 0;
  double time = 0.0;
};

struct RunResult {
  std::vector<double> times;                       // monthly, s
  std::vector<std::vector<MemberSample>> members;  // [time][member]
  std::vector<da::AugmentedState> most_likely;     // [time]
  std::vector<DiagnosticsSample> diagnostics;      // one per update
  std::vector<da::AugmentedState> truth;           // [time], twin mode only
  std::vector<FlipEvent> flips;                    // after the DA phase
  double da_end_time = 0.0;
  da::Ensemble final_ensemble;

  std::size_t member_count() const { return members.empty() ? 0 : members.front().size(); }
};

/// State of a run at the end of the DA phase; reused by sweeps.
struct DaPhase {
  RunResult result;
  da::Ensemble ensemble;
  std::optional<da::AugmentedState> truth;
};

/// Synthetic observations of the truth: one batch per DA month, truth plus
/// Gaussian noise with cfg.obs_variance.
DaPhase twin_da_phase(const ExperimentConfig& cfg);
DaPhase real_da_phase(const ExperimentConfig& cfg, const obs::BoxObservationSeries& observations);

/// Free projection from the end of the DA phase to the horizon with the
/// scenario in cfg.model.scenario.
RunResult project(const ExperimentConfig& cfg, const DaPhase& phase);

RunResult twin_experiment(const ExperimentConfig& cfg);

/// Assimilate supplied observations. Months without observations are
/// forecast only. `forcing` replaces cfg.model.forcing.
RunResult real_experiment(const ExperimentConfig& cfg, const obs::BoxObservationSeries& observations,
                          const SurfaceForcing& forcing);

/// Sign changes of Q in each member's series strictly after `after` and at
/// or before `horizon`. Q = 0 counts as thermally driven.
std::vector<FlipEvent> detect_flips(const RunResult& result, double after, double horizon);

/// Fraction of members with at least one flip after the DA phase and up to
/// `horizon`.
double flip_fraction(const RunResult& result, double horizon);

struct SweepGrid {
  std::vector<double> melt_periods;      // years
  std::vector<double> warming_rates_eq;  // degC per year; polar rate is twice this
  std::vector<std::vector<double>> flip_fraction;  // [melt][warming], NaN on failure
  std::vector<std::string> failures;

  static SweepGrid default_grid();
};

/// Run the DA phase once (twin mode, or real mode when observations are
/// given) and one projection per grid cell.
SweepGrid scenario_sweep(const ExperimentConfig& base, SweepGrid grid,
                         const obs::BoxObservationSeries* observations = nullptr);

}  // namespace stommel::experiments
