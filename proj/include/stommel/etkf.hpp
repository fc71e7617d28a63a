// Augmented ensemble transform Kalman filter.
//
// The augmented state is [Te, Tp, Se, Sp, log kT, log kS, log gamma]; the
// model parameters are carried as logarithms (reference 1 m s^-1) so that
// they stay positive, and are only modified by the analysis update.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stommel/model.hpp"

namespace stommel::da {

inline constexpr int kStateDim = 7;
inline constexpr int kObsDim = 4;

/// Augmented-state component order.
enum StateIndex : int { kTe = 0, kTp, kSe, kSp, kLogKT, kLogKS, kLogGamma };

/// Observation order [Tp, Te, Sp, Se] mapped onto state indices.
inline constexpr std::array<int, kObsDim> kObservedIndex = {kTp, kTe, kSp, kSe};

class FilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AugmentedState {
  OceanState ocean;
  double log_kT = 0.0;
  double log_kS = 0.0;
  double log_gamma = 0.0;

  ModelParams params() const;
  static AugmentedState from(const OceanState& ocean, const ModelParams& p);
  Eigen::Matrix<double, kStateDim, 1> to_vector() const;
  static AugmentedState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
  bool finite() const;
};

struct Ensemble {
  std::vector<AugmentedState> members;
  std::uint64_t seed = 0;
  double time = 0.0;

  std::size_t size() const { return members.size(); }
  /// Members as columns of a kStateDim x M matrix.
  Eigen::MatrixXd matrix() const;
  void assign(const Eigen::MatrixXd& columns);
};

/// d holds [Tp, Te, Sp, Se]; variance is the diagonal of the error covariance.
struct ObservationBatch {
  std::array<double, kObsDim> d{};
  std::array<double, kObsDim> variance{};
  double time = 0.0;
};

/// Draw M members: ocean ~ N(mean, diag(variance)) with variance given in
/// observation order, log-parameters ~ log(params0) + N(0, log_std^2).
Ensemble init_ensemble(const OceanState& mean, const std::array<double, kObsDim>& variance,
                       const ModelParams& params0, double log_std, std::size_t M, std::uint64_t seed);

/// Advance each member by dt with its own parameters; log-parameters stay
/// fixed. Steps are at most `max_step` long. Throws FilterError naming the
/// members that produced non-finite values.
Ensemble forecast_step(const Ensemble& ens, double dt, const ModelContext& ctx,
                       double max_step = kSecondsPerMonth);

/// Deterministic square-root (transform) update of an n x M ensemble with a
/// linear observation operator H (p x n), observation d and error covariance
/// R (p x p). Members are replaced in place by
///   mu + K (d - H mu) + A T^{1/2} e_n
/// with A the anomaly matrix and T = I - (HA)^T ((M-1) R + HA (HA)^T)^{-1} HA.
void etkf_update(Eigen::MatrixXd& ensemble, const Eigen::MatrixXd& H, const Eigen::VectorXd& d,
                 const Eigen::MatrixXd& R);

/// Observation operator selecting [Tp, Te, Sp, Se] from the augmented state.
Eigen::MatrixXd observation_operator();

Ensemble analysis_update(const Ensemble& ens, const ObservationBatch& obs);

/// Ensemble mean for the ocean fields; lognormal mode exp(mu_p - Sigma_p 1)
/// for the parameters (returned in log form).
AugmentedState most_likely(const Ensemble& ens);

struct FilterDiagnostics {
  std::array<double, kStateDim> spread{};
  // Error of the ensemble mean against the truth (twin mode only). For one
  // variable at one time this is |mean - truth|.
  std::optional<std::array<double, kStateDim>> rmse;
};

FilterDiagnostics diagnostics(const Ensemble& ens, const std::optional<AugmentedState>& truth = std::nullopt);

Eigen::VectorXd ensemble_mean(const Eigen::MatrixXd& ensemble);
/// Sample covariance with M - 1 normalisation.
Eigen::MatrixXd ensemble_covariance(const Eigen::MatrixXd& ensemble);

}  // namespace stommel::da
