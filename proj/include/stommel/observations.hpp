// Box-averaged observations from gridded ocean profiles.
//
// Profiles are grouped into columns (one per grid location) holding a fixed
// set of levels and one sample per level and month. Missing samples are
// stored as NaN and skipped, with the averaging weights renormalised.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "stommel/etkf.hpp"
#include "stommel/model.hpp"

namespace stommel::obs {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LevelSample {
  double T;
  double S;
  double sigma_T;
  double sigma_S;
};

struct ProfileColumn {
  double lat = 0.0;
  double lon = 0.0;
  double cell_area = 0.0;         // m^2
  std::vector<double> depth;      // level centre, m, strictly increasing
  std::vector<double> thickness;  // m
  // values[month position][level]; NaN marks a missing sample.
  std::vector<std::vector<LevelSample>> values;

  std::size_t levels() const { return depth.size(); }
  /// Depth of the bottom of the deepest level.
  double total_depth() const;
  void validate() const;
};

struct ProfileSet {
  std::vector<int> months;  // sorted month indices (0 = January 2004)
  std::vector<ProfileColumn> columns;

  /// Position of `month` in `months`; throws if absent.
  std::size_t month_position(int month) const;
};

struct SelectionBounds {
  double lat_min = 23.5;
  double lat_max = 89.0;
  double lon_min = -90.0;
  double lon_max = 90.0;
  double min_total_depth = 1500.0;
  double truncation_depth = 3500.0;
};

/// Keep columns inside the bounds that are at least min_total_depth deep,
/// dropping levels whose centre lies below truncation_depth.
ProfileSet select_profiles(const ProfileSet& set, const SelectionBounds& bounds = {});

enum class BoxLabel { Polar, Equatorial, Excluded };

struct BoxAssignment {
  std::vector<BoxLabel> labels;
  std::vector<int> cold_months;  // months with surface colder than the column mean
  std::vector<int> valid_months;
};

/// Polar iff the surface is colder than the thickness-weighted column mean
/// temperature in at least one month per year on average.
BoxAssignment assign_boxes(const ProfileSet& set);

struct GridAdjacency {
  double dlat = 1.0;  // degrees
  double dlon = 1.0;  // degrees
  double earth_radius = 6.371e6;
};

struct GeometryReport {
  BoxGeometry geometry;
  double volume_polar = 0.0;
  double volume_equatorial = 0.0;
  double area_polar = 0.0;
  double area_equatorial = 0.0;
  double cross_section = 0.0;
};

/// Box geometry from column volumes, surface areas and the vertical
/// interface area between 4-neighbouring columns with different labels.
GeometryReport compute_geometry(const ProfileSet& set, const BoxAssignment& assignment,
                                const GridAdjacency& adjacency = {});

struct BoxMoments {
  double T = 0.0;
  double S = 0.0;
  double var_T = 0.0;
  double var_S = 0.0;
};

struct BoxAverages {
  BoxMoments polar;
  BoxMoments equatorial;
};

enum class Layer { Subsurface, Surface };

/// Volume-weighted box means and mean variances for one month.
BoxAverages box_average(const ProfileSet& set, const BoxAssignment& assignment, int month,
                        Layer layer = Layer::Subsurface);

struct BoxObservationSeries {
  std::vector<int> months;
  std::vector<da::ObservationBatch> batches;         // variance = sigma_d
  std::vector<std::array<double, 4>> monthly_variance;  // [Tp, Te, Sp, Se]
  std::vector<BoxAverages> surface;
  std::array<double, 4> sigma_d{};  // max monthly variance per variable

  std::size_t size() const { return months.size(); }
};

/// Monthly observation vectors for months in [first_month, last_month].
/// Months missing from the data are skipped.
BoxObservationSeries build_obs_series(const ProfileSet& set, const BoxAssignment& assignment, int first_month,
                                      int last_month);

struct SeasonalPoint {
  double t = 0.0;  // model time, s
  double value = 0.0;
  double variance = 0.0;
};

struct SeasonalFit {
  HarmonicCoeffs coeffs;
  std::array<double, 3> std_error{};  // for (c0, c_cos, c_sin)
};

/// Weighted least squares on {1, cos(2 pi t/period), sin(2 pi t/period)}
/// with weights 1/variance.
SeasonalFit fit_seasonal(std::span<const SeasonalPoint> points, double period = kSecondsPerYear);

/// Fit all four surface targets from the surface part of a series.
SurfaceForcing fit_surface_forcing(const BoxObservationSeries& series, double period = kSecondsPerYear);

struct SynthConfig {
  int n_lat = 6;
  int n_lon = 8;
  double lat0 = 55.5;  // centre of the southernmost row
  double lon0 = -40.5;
  double dlat = 1.0;
  double dlon = 1.0;
  int polar_rows = 2;  // northernmost rows that receive polar surface forcing
  std::vector<double> level_thickness = {20.0, 180.0, 300.0, 500.0, 1000.0, 1000.0, 1000.0, 1000.0};
  int first_month = 0;
  int months = 24;

  double subsurface_T_polar = 3.0;
  double subsurface_T_equatorial = 5.5;
  double subsurface_S_polar = 34.9;
  double subsurface_S_equatorial = 35.1;
  double T_gradient_per_km = -0.5;  // applied to level centre depth
  double T_trend_per_month = 0.0;

  HarmonicCoeffs surface_T_polar{1.5, -1.5, -1.1};
  HarmonicCoeffs surface_T_equatorial{16.7, -2.4, -2.3};
  HarmonicCoeffs surface_S_polar{33.05, 0.22, 0.32};
  HarmonicCoeffs surface_S_equatorial{35.77, 0.04, 0.05};

  double sigma_T = 0.3;
  double sigma_S = 0.07;
  double sigma_surface_T = 0.4;
  double sigma_surface_S = 0.1;
  double sigma_seasonal = 0.25;  // relative seasonal modulation of all sigmas

  double noise_T = 0.0;  // Gaussian noise added to every T sample
  double noise_S = 0.0;
  std::uint64_t seed = 1;
  bool add_rejects = false;  // append one out-of-bounds and one shallow column
  double earth_radius = 6.371e6;
};

/// Area of a dlat x dlon cell centred at `lat` on a sphere.
double cell_area(double lat, double dlat, double dlon, double earth_radius);

/// Relative sigma multiplier used by synth_profiles for month index m.
double synth_sigma_factor(const SynthConfig& fixture, int month);

ProfileSet synth_profiles(const SynthConfig& fixture);

}  // namespace stommel::obs
