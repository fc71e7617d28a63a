// Dimensional two-box (Stommel) ocean model with seasonal surface forcing,
// surface warming and ice-melt freshwater input.
//
// Model time is measured in seconds since the start of January 2004. A year
// is 365.25 days and a month is a twelfth of a year.
#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stommel {

inline constexpr double kSecondsPerYear = 365.25 * 86400.0;
inline constexpr double kSecondsPerMonth = kSecondsPerYear / 12.0;
inline constexpr double kSverdrup = 1.0e6;  // m^3 s^-1
inline constexpr double kEpochYear = 2004.0;

/// Convert a calendar year (e.g. 2022.0) to model time.
constexpr double year_to_model_time(double year) { return (year - kEpochYear) * kSecondsPerYear; }
constexpr double model_time_to_year(double t) { return kEpochYear + t / kSecondsPerYear; }

/// Raised when an integration step produces non-finite values.
class NumericalBlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhysicalConstants {
  double rho0 = 1027.0;           // kg m^-3
  double S0 = 35.0;               // ppt
  double T0 = 10.0;               // degC
  double alphaT = 0.15 / 1027.0;  // degC^-1
  double alphaS = 0.78 / 1027.0;  // ppt^-1

  void validate() const;
};

struct BoxGeometry {
  double dx = 7274.0e3;    // zonal width, m
  double dy_p = 324.0e3;   // polar meridional width, m
  double dy_e = 2262.0e3;  // equatorial meridional width, m
  double dz = 3148.0;      // depth, m

  /// Harmonic-type mean width dy_p*dy_e/(dy_p+dy_e).
  double dy_bar() const { return dy_p * dy_e / (dy_p + dy_e); }
  void validate() const;
};

struct ModelParams {
  double kT = 3.7e-6;  // surface temperature exchange velocity, m s^-1
  double kS = 1.2e-6;  // surface salinity exchange velocity, m s^-1
  double gamma = 2.0;  // advective transport coefficient, m s^-1

  void validate() const;
};

struct OceanState {
  double Te = 0.0;
  double Tp = 0.0;
  double Se = 0.0;
  double Sp = 0.0;

  std::array<double, 4> to_array() const { return {Te, Tp, Se, Sp}; }
  static OceanState from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
  bool finite() const;
};

/// c0 + c_cos*cos(2 pi t / tau) + c_sin*sin(2 pi t / tau)
struct HarmonicCoeffs {
  double c0 = 0.0;
  double c_cos = 0.0;
  double c_sin = 0.0;

  double evaluate(double t, double period) const;
  double amplitude() const;
};

struct SurfaceForcing {
  HarmonicCoeffs Te;
  HarmonicCoeffs Tp;
  HarmonicCoeffs Se;
  HarmonicCoeffs Sp;
  double period = kSecondsPerYear;

  /// Regression coefficients fitted to box-averaged EN4 surface values.
  static SurfaceForcing en4_fit();
  /// Same forcing with the seasonal terms removed.
  SurfaceForcing annual_mean() const;
  /// Seasonal amplitude of the equator-minus-pole temperature target.
  double temperature_difference_amplitude() const;
  double salinity_difference_amplitude() const;
};

struct ClimateScenario {
  bool enabled = false;
  double onset_year = 2022.0;
  double warm_e = 0.03;         // degC per year
  double warm_p = 0.06;         // degC per year
  double ice_volume = 2.9e15;   // m^3 (2.9e6 km^3)
  double melt_period = 10000.0; // years

  double onset_time() const { return year_to_model_time(onset_year); }
  void validate() const;
};

struct SurfaceTargets {
  double Te = 0.0;
  double Tp = 0.0;
  double Se = 0.0;
  double Sp = 0.0;
};

/// Everything the right-hand side needs besides the state.
struct ModelContext {
  PhysicalConstants constants;
  BoxGeometry geometry;
  ModelParams params;
  SurfaceForcing forcing = SurfaceForcing::en4_fit();
  ClimateScenario scenario;
};

double density(double T, double S, const PhysicalConstants& c);

/// Volume flux from the equatorial to the polar box at the surface (m^3 s^-1).
/// Positive when polar water is denser.
double transport(const OceanState& state, const ModelParams& p, const BoxGeometry& g,
                 const PhysicalConstants& c);

SurfaceTargets surface_target(double t, const SurfaceForcing& f, const ClimateScenario& s);

/// Freshwater discharge into the polar box (m^3 s^-1).
double melt_rate(const ClimateScenario& s, double t);

OceanState tendencies(double t, const OceanState& state, const ModelContext& ctx);

OceanState step_rk4(const OceanState& state, double t, double dt, const ModelContext& ctx);

struct Trajectory {
  std::vector<double> times;
  std::vector<OceanState> states;
  double step = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
};

/// Fixed-step RK4 from t0 to t1. The last step is shortened to land on t1.
Trajectory integrate(const OceanState& state0, double t0, double t1, double dt, const ModelContext& ctx);

struct DimensionlessState {
  double T = 0.0;
  double S = 0.0;
  double Psi = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
  double Omega = 0.0;
  double B = 0.0;
  double Bhat = 0.0;
  double A = 0.0;
};

/// Scale factor mapping Te-Tp (degC) to the dimensionless temperature.
double temperature_scale(const ModelParams& p, const BoxGeometry& g, const PhysicalConstants& c);
/// Scale factor mapping Se-Sp (ppt) to the dimensionless salinity.
double salinity_scale(const ModelParams& p, const BoxGeometry& g, const PhysicalConstants& c);
/// Scale factor mapping a dimensional volume flux to the dimensionless transport.
double transport_scale(const ModelParams& p, const BoxGeometry& g);

DimensionlessState nondimensionalize(const OceanState& state, const ModelParams& p, const BoxGeometry& g,
                                     const PhysicalConstants& c, const SurfaceForcing& f);

struct EtaValues {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
};

/// Instantaneous eta values using the surface targets at time t (seasonal
/// cycle and climate trend included).
EtaValues eta_at(double t, const ModelContext& ctx);

struct OceanDifferences {
  double dT = 0.0;  // Te - Tp
  double dS = 0.0;  // Se - Sp
};

OceanDifferences dimensionalize(const DimensionlessState& d, const ModelParams& p, const BoxGeometry& g,
                                const PhysicalConstants& c);

}  // namespace stommel
