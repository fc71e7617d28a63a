#include "stommel/experiments.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace stommel::experiments {

namespace {

// Observation noise uses its own stream so the ensemble draws do not depend
// on whether observations are generated.
constexpr std::uint64_t kObsStreamSalt = 0x9E3779B97F4A7C15ULL;

MemberSample sample_member(const da::AugmentedState& m, const ModelContext& ctx) {
  const ModelParams p = m.params();
  MemberSample s;
  s.dT = m.ocean.Te - m.ocean.Tp;
  s.dS = m.ocean.Se - m.ocean.Sp;
  s.Q = transport(m.ocean, p, ctx.geometry, ctx.constants) / kSverdrup;
  s.T = temperature_scale(p, ctx.geometry, ctx.constants) * s.dT;
  s.S = salinity_scale(p, ctx.geometry, ctx.constants) * s.dS;
  return s;
}

void record(RunResult& r, const da::Ensemble& ens, const ModelContext& ctx,
            const std::optional<da::AugmentedState>& truth) {
  r.times.push_back(ens.time);
  std::vector<MemberSample> row;
  row.reserve(ens.size());
  for (const auto& m : ens.members) row.push_back(sample_member(m, ctx));
  r.members.push_back(std::move(row));
  r.most_likely.push_back(da::most_likely(ens));
  if (truth) r.truth.push_back(*truth);
}

DiagnosticsSample diagnose(const da::Ensemble& ens, const std::optional<da::AugmentedState>& truth) {
  const da::FilterDiagnostics d = da::diagnostics(ens, truth);
  DiagnosticsSample out;
  out.time = ens.time;
  out.spread = d.spread;
  out.error = d.rmse;
  return out;
}

std::array<double, da::kObsDim> innovation(const da::Ensemble& ens, const da::ObservationBatch& obs) {
  const Eigen::VectorXd mu = da::ensemble_mean(ens.matrix());
  std::array<double, da::kObsDim> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = obs.d[i] - mu[da::kObservedIndex[i]];
  return out;
}

da::AugmentedState advance_truth(const da::AugmentedState& truth, double t0, double t1, const ModelContext& base) {
  ModelContext ctx = base;
  ctx.params = truth.params();
  da::AugmentedState out = truth;
  out.ocean = integrate(truth.ocean, t0, t1, kSecondsPerMonth, ctx).states.back();
  return out;
}

ModelContext da_context(const ExperimentConfig& cfg) {
  ModelContext ctx = cfg.model;
  ctx.scenario.enabled = false;
  return ctx;
}

// Shared forecast/update cycle. `observe` returns the batch for a month, if any.
template <typename Observe>
DaPhase run_da(const ExperimentConfig& cfg, da::Ensemble ens, std::optional<da::AugmentedState> truth,
               Observe&& observe) {
  const ModelContext ctx = da_context(cfg);
  DaPhase phase;
  ens.time = cfg.da_start_time();
  record(phase.result, ens, ctx, truth);
  phase.result.diagnostics.push_back(diagnose(ens, truth));

  for (int month = cfg.da_start_month + 1; month <= cfg.da_end_month; ++month) {
    const double t1 = month * kSecondsPerMonth;
    const double t0 = ens.time;
    ens = da::forecast_step(ens, t1 - t0, ctx);
    ens.time = t1;
    if (truth) truth = advance_truth(*truth, t0, t1, ctx);

    std::optional<std::array<double, da::kObsDim>> innov;
    if (cfg.da_enabled) {
      if (const std::optional<da::ObservationBatch> batch = observe(month, truth)) {
        innov = innovation(ens, *batch);
        ens = da::analysis_update(ens, *batch);
      }
    }
    record(phase.result, ens, ctx, truth);
    DiagnosticsSample diag = diagnose(ens, truth);
    diag.innovation = innov;
    phase.result.diagnostics.push_back(diag);
  }

  phase.result.da_end_time = ens.time;
  phase.ensemble = std::move(ens);
  phase.truth = truth;
  return phase;
}

}  // namespace

void ExperimentConfig::validate() const {
  model.constants.validate();
  model.geometry.validate();
  model.params.validate();
  model.scenario.validate();
  if (members < 2) throw std::invalid_argument("experiment: at least 2 members are required");
  if (!(log_std >= 0.0)) throw std::invalid_argument("experiment: log_std must be non-negative");
  for (double v : initial_variance) {
    if (!(v >= 0.0)) throw std::invalid_argument("experiment: initial variances must be non-negative");
  }
  for (double v : obs_variance) {
    if (!(v > 0.0)) throw std::invalid_argument("experiment: observation variances must be positive");
  }
  if (da_end_month < da_start_month) throw std::invalid_argument("experiment: DA period ends before it starts");
  if (horizon_time() < da_end_time()) throw std::invalid_argument("experiment: horizon precedes the end of DA");
  if (model.scenario.enabled && model.scenario.onset_time() < da_end_time() - 1e-6) {
    throw std::invalid_argument("experiment: climate scenario must start at or after the end of DA");
  }
  if (truth_params) truth_params->validate();
}

DaPhase twin_da_phase(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.members < 3) throw std::invalid_argument("twin experiment: at least 3 members are required");
  da::Ensemble draws = da::init_ensemble(cfg.initial_state, cfg.initial_variance, cfg.model.params, cfg.log_std,
                                         cfg.members + 1, cfg.seed);
  da::AugmentedState truth = draws.members.front();
  if (cfg.truth_params) {
    const da::AugmentedState p = da::AugmentedState::from(truth.ocean, *cfg.truth_params);
    truth = p;
  }
  da::Ensemble ens;
  ens.seed = cfg.seed;
  ens.members.assign(draws.members.begin() + 1, draws.members.end());

  std::mt19937_64 rng(cfg.seed ^ kObsStreamSalt);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto observe = [&](int month, const std::optional<da::AugmentedState>& t) {
    da::ObservationBatch batch;
    batch.time = month * kSecondsPerMonth;
    batch.variance = cfg.obs_variance;
    const auto x = t->to_vector();
    for (std::size_t i = 0; i < batch.d.size(); ++i) {
      batch.d[i] = x[da::kObservedIndex[i]] + std::sqrt(cfg.obs_variance[i]) * normal(rng);
    }
    return std::optional<da::ObservationBatch>(batch);
  };
  return run_da(cfg, std::move(ens), truth, observe);
}

DaPhase real_da_phase(const ExperimentConfig& cfg, const obs::BoxObservationSeries& observations) {
  cfg.validate();
  std::map<int, const da::ObservationBatch*> by_month;
  for (std::size_t i = 0; i < observations.size(); ++i) by_month[observations.months[i]] = &observations.batches[i];
  if (cfg.da_enabled) {
    const bool covered = !by_month.empty() && by_month.begin()->first <= cfg.da_start_month + 1 &&
                         by_month.rbegin()->first >= cfg.da_end_month;
    if (!covered) throw std::invalid_argument("real experiment: observations do not cover the DA period");
  }
  da::Ensemble ens = da::init_ensemble(cfg.initial_state, cfg.initial_variance, cfg.model.params, cfg.log_std,
                                       cfg.members, cfg.seed);
  auto observe = [&](int month, const std::optional<da::AugmentedState>&) -> std::optional<da::ObservationBatch> {
    const auto it = by_month.find(month);
    if (it == by_month.end()) return std::nullopt;
    return *it->second;
  };
  return run_da(cfg, std::move(ens), std::nullopt, observe);
}

RunResult project(const ExperimentConfig& cfg, const DaPhase& phase) {
  ModelContext ctx = cfg.model;
  RunResult result = phase.result;
  da::Ensemble ens = phase.ensemble;
  std::optional<da::AugmentedState> truth = phase.truth;
  const double horizon = cfg.horizon_time();

  while (ens.time < horizon * (1.0 - 1e-15)) {
    const double t0 = ens.time;
    const double t1 = std::min(horizon, t0 + kSecondsPerMonth);
    ens = da::forecast_step(ens, t1 - t0, ctx);
    ens.time = t1;
    if (truth) truth = advance_truth(*truth, t0, t1, ctx);
    record(result, ens, ctx, truth);
  }
  result.flips = detect_flips(result, result.da_end_time, horizon);
  result.final_ensemble = std::move(ens);
  return result;
}

RunResult twin_experiment(const ExperimentConfig& cfg) { return project(cfg, twin_da_phase(cfg)); }

RunResult real_experiment(const ExperimentConfig& cfg, const obs::BoxObservationSeries& observations,
                          const SurfaceForcing& forcing) {
  ExperimentConfig c = cfg;
  c.model.forcing = forcing;
  return project(c, real_da_phase(c, observations));
}

std::vector<FlipEvent> detect_flips(const RunResult& result, double after, double horizon) {
  std::vector<FlipEvent> out;
  const std::size_t M = result.member_count();
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 1; k < result.times.size(); ++k) {
      const double t = result.times[k];
      if (t <= after || t > horizon) continue;
      const bool was_sa = result.members[k - 1][m].Q < 0.0;
      const bool is_sa = result.members[k][m].Q < 0.0;
      if (was_sa != is_sa) out.push_back({m, t});
    }
  }
  return out;
}

double flip_fraction(const RunResult& result, double horizon) {
  const std::size_t M = result.member_count();
  if (M == 0) return 0.0;
  std::vector<char> flipped(M, 0);
  for (const FlipEvent& e : detect_flips(result, result.da_end_time, horizon)) flipped[e.member] = 1;
  std::size_t count = 0;
  for (char f : flipped) count += f ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(M);
}

SweepGrid SweepGrid::default_grid() {
  SweepGrid g;
  g.melt_periods = {500.0, 1000.0, 2000.0, 4000.0, 7000.0, 10000.0, 15000.0};
  for (int i = 0; i <= 7; ++i) g.warming_rates_eq.push_back(0.01 * i);
  return g;
}

SweepGrid scenario_sweep(const ExperimentConfig& base, SweepGrid grid, const obs::BoxObservationSeries* observations) {
  if (grid.melt_periods.empty() || grid.warming_rates_eq.empty()) throw std::invalid_argument("scenario_sweep: empty grid");
  const DaPhase phase = observations ? real_da_phase(base, *observations) : twin_da_phase(base);

  grid.flip_fraction.assign(grid.melt_periods.size(),
                            std::vector<double>(grid.warming_rates_eq.size(), std::numeric_limits<double>::quiet_NaN()));
  grid.failures.clear();
  for (std::size_t i = 0; i < grid.melt_periods.size(); ++i) {
    for (std::size_t j = 0; j < grid.warming_rates_eq.size(); ++j) {
      ExperimentConfig cfg = base;
      cfg.model.scenario.enabled = true;
      cfg.model.scenario.melt_period = grid.melt_periods[i];
      cfg.model.scenario.warm_e = grid.warming_rates_eq[j];
      cfg.model.scenario.warm_p = 2.0 * grid.warming_rates_eq[j];
      try {
        cfg.validate();
        grid.flip_fraction[i][j] = flip_fraction(project(cfg, phase), cfg.horizon_time());
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "melt " << grid.melt_periods[i] << " yr, warming " << grid.warming_rates_eq[j] << ": " << e.what();
        grid.failures.push_back(msg.str());
      }
    }
  }
  return grid;
}

}  // namespace stommel::experiments
