#include "stommel/etkf.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "stommel/parallel.hpp"

namespace stommel::da {

namespace {

// Eigenvalues of the transform matrix lie in (0, 1] in exact arithmetic;
// anything below this is treated as a genuine failure rather than round-off.
constexpr double kEigenClip = 1e-12;

}  // namespace

ModelParams AugmentedState::params() const { return {std::exp(log_kT), std::exp(log_kS), std::exp(log_gamma)}; }

AugmentedState AugmentedState::from(const OceanState& ocean, const ModelParams& p) {
  p.validate();
  return {ocean, std::log(p.kT), std::log(p.kS), std::log(p.gamma)};
}

Eigen::Matrix<double, kStateDim, 1> AugmentedState::to_vector() const {
  Eigen::Matrix<double, kStateDim, 1> v;
  v << ocean.Te, ocean.Tp, ocean.Se, ocean.Sp, log_kT, log_kS, log_gamma;
  return v;
}

AugmentedState AugmentedState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != kStateDim) throw FilterError("augmented state vector must have 7 entries");
  return {{v[kTe], v[kTp], v[kSe], v[kSp]}, v[kLogKT], v[kLogKS], v[kLogGamma]};
}

bool AugmentedState::finite() const {
  return ocean.finite() && std::isfinite(log_kT) && std::isfinite(log_kS) && std::isfinite(log_gamma);
}

Eigen::MatrixXd Ensemble::matrix() const {
  Eigen::MatrixXd E(kStateDim, static_cast<Eigen::Index>(members.size()));
  for (std::size_t m = 0; m < members.size(); ++m) E.col(static_cast<Eigen::Index>(m)) = members[m].to_vector();
  return E;
}

void Ensemble::assign(const Eigen::MatrixXd& columns) {
  if (columns.rows() != kStateDim) throw FilterError("ensemble matrix must have 7 rows");
  members.resize(static_cast<std::size_t>(columns.cols()));
  for (Eigen::Index m = 0; m < columns.cols(); ++m) {
    members[static_cast<std::size_t>(m)] = AugmentedState::from_vector(columns.col(m));
  }
}

Ensemble init_ensemble(const OceanState& mean, const std::array<double, kObsDim>& variance,
                       const ModelParams& params0, double log_std, std::size_t M, std::uint64_t seed) {
  if (M < 2) throw std::invalid_argument("init_ensemble: need at least 2 members");
  if (!(log_std >= 0.0)) throw std::invalid_argument("init_ensemble: log_std must be non-negative");
  params0.validate();
  for (double v : variance) {
    if (!(v >= 0.0)) throw std::invalid_argument("init_ensemble: variances must be non-negative");
  }

  std::array<double, 4> ocean_std{};
  for (int i = 0; i < kObsDim; ++i) ocean_std[static_cast<std::size_t>(kObservedIndex[i])] = std::sqrt(variance[i]);
  const AugmentedState centre = AugmentedState::from(mean, params0);
  const auto centre_vec = centre.to_vector();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Ensemble ens;
  ens.seed = seed;
  ens.time = 0.0;
  ens.members.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    Eigen::Matrix<double, kStateDim, 1> v = centre_vec;
    for (int i = 0; i < 4; ++i) v[i] += ocean_std[static_cast<std::size_t>(i)] * normal(rng);
    for (int i = kLogKT; i <= kLogGamma; ++i) v[i] += log_std * normal(rng);
    ens.members.push_back(AugmentedState::from_vector(v));
  }
  return ens;
}

Ensemble forecast_step(const Ensemble& ens, double dt, const ModelContext& ctx, double max_step) {
  if (!(dt > 0.0)) throw std::invalid_argument("forecast_step: dt must be positive");
  Ensemble out = ens;
  std::vector<char> failed(ens.size(), 0);
  parallel_for(ens.size(), [&](std::size_t m) {
    ModelContext member_ctx = ctx;
    member_ctx.params = ens.members[m].params();
    try {
      const Trajectory traj = integrate(ens.members[m].ocean, ens.time, ens.time + dt, max_step, member_ctx);
      out.members[m].ocean = traj.states.back();
    } catch (const NumericalBlowUp&) {
      failed[m] = 1;
    }
  });

  std::ostringstream bad;
  std::size_t count = 0;
  for (std::size_t m = 0; m < failed.size(); ++m) {
    if (failed[m]) bad << (count++ ? ", " : "") << m;
  }
  if (count > 0) {
    std::ostringstream msg;
    msg << "forecast produced non-finite values for member(s) " << bad.str() << " at t=" << ens.time << " s";
    throw FilterError(msg.str());
  }
  out.time = ens.time + dt;
  return out;
}

Eigen::VectorXd ensemble_mean(const Eigen::MatrixXd& ensemble) { return ensemble.rowwise().mean(); }

Eigen::MatrixXd ensemble_covariance(const Eigen::MatrixXd& ensemble) {
  const Eigen::Index M = ensemble.cols();
  if (M < 2) throw FilterError("covariance needs at least 2 members");
  const Eigen::MatrixXd A = ensemble.colwise() - ensemble_mean(ensemble);
  return A * A.transpose() / static_cast<double>(M - 1);
}

void etkf_update(Eigen::MatrixXd& ensemble, const Eigen::MatrixXd& H, const Eigen::VectorXd& d,
                 const Eigen::MatrixXd& R) {
  const Eigen::Index n = ensemble.rows();
  const Eigen::Index M = ensemble.cols();
  const Eigen::Index p = H.rows();
  if (M < 2) throw FilterError("analysis needs at least 2 members");
  if (H.cols() != n || d.size() != p || R.rows() != p || R.cols() != p) {
    std::ostringstream msg;
    msg << "dimension mismatch: state " << n << ", H " << H.rows() << "x" << H.cols() << ", d " << d.size()
        << ", R " << R.rows() << "x" << R.cols();
    throw FilterError(msg.str());
  }

  const Eigen::VectorXd mu = ensemble.rowwise().mean();
  const Eigen::MatrixXd A = ensemble.colwise() - mu;
  const Eigen::MatrixXd HA = H * A;
  const Eigen::MatrixXd C = static_cast<double>(M - 1) * R + HA * HA.transpose();

  const Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(C, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "innovation covariance is not positive definite (eigenvalues " << ev.eigenvalues().minCoeff() << " .. "
        << ev.eigenvalues().maxCoeff() << ")";
    throw FilterError(msg.str());
  }

  const Eigen::VectorXd mu_a = mu + A * (HA.transpose() * llt.solve(d - H * mu));

  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(M, M) - HA.transpose() * llt.solve(HA);
  T = 0.5 * (T + T.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
  if (eig.info() != Eigen::Success) throw FilterError("eigen-decomposition of the ensemble transform failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -kEigenClip) {
      std::ostringstream msg;
      msg << "ensemble transform has negative eigenvalue " << lambda[i];
      throw FilterError(msg.str());
    }
    lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
  }
  const Eigen::MatrixXd& Q = eig.eigenvectors();
  const Eigen::MatrixXd sqrtT = Q * lambda.asDiagonal() * Q.transpose();

  ensemble = (A * sqrtT).colwise() + mu_a;
}

Eigen::MatrixXd observation_operator() {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kObsDim, kStateDim);
  for (int i = 0; i < kObsDim; ++i) H(i, kObservedIndex[static_cast<std::size_t>(i)]) = 1.0;
  return H;
}

Ensemble analysis_update(const Ensemble& ens, const ObservationBatch& obs) {
  Eigen::VectorXd d(kObsDim);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(kObsDim, kObsDim);
  for (int i = 0; i < kObsDim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!(obs.variance[k] > 0.0)) throw FilterError("observation variances must be positive");
    d[i] = obs.d[k];
    R(i, i) = obs.variance[k];
  }
  Eigen::MatrixXd E = ens.matrix();
  etkf_update(E, observation_operator(), d, R);
  Ensemble out = ens;
  out.assign(E);
  for (const auto& m : out.members) {
    if (!m.finite()) throw FilterError("analysis produced non-finite members");
  }
  return out;
}

AugmentedState most_likely(const Ensemble& ens) {
  if (ens.size() < 2) throw FilterError("most_likely needs at least 2 members");
  const Eigen::MatrixXd E = ens.matrix();
  const Eigen::VectorXd mu = ensemble_mean(E);
  const Eigen::MatrixXd cov = ensemble_covariance(E);
  const Eigen::Vector3d log_mode = mu.tail<3>() - cov.bottomRightCorner<3, 3>() * Eigen::Vector3d::Ones();

  AugmentedState out = AugmentedState::from_vector(mu);
  out.log_kT = log_mode[0];
  out.log_kS = log_mode[1];
  out.log_gamma = log_mode[2];
  return out;
}

FilterDiagnostics diagnostics(const Ensemble& ens, const std::optional<AugmentedState>& truth) {
  FilterDiagnostics out;
  const Eigen::MatrixXd E = ens.matrix();
  const Eigen::VectorXd mu = ensemble_mean(E);
  if (ens.size() >= 2) {
    const Eigen::VectorXd var = ensemble_covariance(E).diagonal();
    for (int i = 0; i < kStateDim; ++i) out.spread[static_cast<std::size_t>(i)] = std::sqrt(std::max(var[i], 0.0));
  }
  if (truth) {
    const auto t = truth->to_vector();
    std::array<double, kStateDim> err{};
    for (int i = 0; i < kStateDim; ++i) err[static_cast<std::size_t>(i)] = std::abs(mu[i] - t[i]);
    out.rmse = err;
  }
  return out;
}

}  // namespace stommel::da
