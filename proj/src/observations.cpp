#include "stommel/observations.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>

namespace stommel::obs {

namespace {


double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

struct WeightedSum {
  double weight = 0.0;
  double value = 0.0;
  double variance = 0.0;

  void add(double w, double x, double sigma) {
    weight += w;
    value += w * x;
    variance += w * sigma * sigma;
  }
};

}  // namespace

double ProfileColumn::total_depth() const {
  if (depth.empty()) return 0.0;
  return depth.back() + 0.5 * thickness.back();
}

void ProfileColumn::validate() const {
  if (depth.size() != thickness.size()) throw PipelineError("column depth/thickness size mismatch");
  for (std::size_t k = 0; k < depth.size(); ++k) {
    if (!(thickness[k] > 0.0)) throw PipelineError("level thickness must be positive");
    if (k > 0 && !(depth[k] > depth[k - 1])) throw PipelineError("level depths must be strictly increasing");
  }
  for (const auto& month : values) {
    if (month.size() != depth.size()) throw PipelineError("column values do not match its levels");
    for (const auto& s : month) {
      if (s.sigma_T < 0.0 || s.sigma_S < 0.0) throw PipelineError("sigmas must be non-negative");
    }
  }
}

std::size_t ProfileSet::month_position(int month) const {
  const auto it = std::lower_bound(months.begin(), months.end(), month);
  if (it == months.end() || *it != month) {
    std::ostringstream msg;
    msg << "month " << month << " not present in profile data";
    throw PipelineError(msg.str());
  }
  return static_cast<std::size_t>(it - months.begin());
}

ProfileSet select_profiles(const ProfileSet& set, const SelectionBounds& bounds) {
  ProfileSet out;
  out.months = set.months;
  for (const ProfileColumn& col : set.columns) {
    if (col.lat < bounds.lat_min || col.lat > bounds.lat_max) continue;
    if (col.lon < bounds.lon_min || col.lon > bounds.lon_max) continue;
    if (col.total_depth() < bounds.min_total_depth) continue;

    std::size_t keep = 0;
    while (keep < col.levels() && col.depth[keep] <= bounds.truncation_depth) ++keep;
    if (keep == 0) continue;

    ProfileColumn trimmed = col;
    trimmed.depth.resize(keep);
    trimmed.thickness.resize(keep);
    for (auto& month : trimmed.values) month.resize(keep);
    out.columns.push_back(std::move(trimmed));
  }
  if (out.columns.empty()) throw PipelineError("profile selection is empty");
  return out;
}

BoxAssignment assign_boxes(const ProfileSet& set) {
  if (set.months.size() < 12) throw PipelineError("box assignment needs at least 12 monthly snapshots");
  BoxAssignment out;
  out.labels.reserve(set.columns.size());
  for (const ProfileColumn& col : set.columns) {
    int cold = 0;
    int valid = 0;
    for (const auto& month : col.values) {
      if (month.empty() || !std::isfinite(month[0].T)) continue;
      double w = 0.0;
      double sum = 0.0;
      for (std::size_t k = 0; k < month.size(); ++k) {
        if (!std::isfinite(month[k].T)) continue;
        w += col.thickness[k];
        sum += col.thickness[k] * month[k].T;
      }
      ++valid;
      if (month[0].T < sum / w) ++cold;
    }
    out.cold_months.push_back(cold);
    out.valid_months.push_back(valid);
    // cold / (valid / 12) >= 1 month per year
    if (valid == 0) {
      out.labels.push_back(BoxLabel::Excluded);
    } else {
      out.labels.push_back(12 * cold >= valid ? BoxLabel::Polar : BoxLabel::Equatorial);
    }
  }
  return out;
}

GeometryReport compute_geometry(const ProfileSet& set, const BoxAssignment& assignment,
                                const GridAdjacency& adjacency) {
  if (assignment.labels.size() != set.columns.size()) throw PipelineError("assignment does not match columns");

  GeometryReport r;
  double lat_ref = std::numeric_limits<double>::infinity();
  double lon_ref = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.columns.size(); ++i) {
    const ProfileColumn& col = set.columns[i];
    lat_ref = std::min(lat_ref, col.lat);
    lon_ref = std::min(lon_ref, col.lon);
    double column_height = 0.0;
    for (double h : col.thickness) column_height += h;
    const double volume = col.cell_area * column_height;
    if (assignment.labels[i] == BoxLabel::Polar) {
      r.volume_polar += volume;
      r.area_polar += col.cell_area;
    } else if (assignment.labels[i] == BoxLabel::Equatorial) {
      r.volume_equatorial += volume;
      r.area_equatorial += col.cell_area;
    }
  }
  if (r.area_polar <= 0.0 || r.area_equatorial <= 0.0) throw PipelineError("both boxes must contain columns");

  std::map<std::pair<long, long>, std::size_t> index;
  auto key = [&](const ProfileColumn& c) {
    return std::make_pair(std::lround((c.lat - lat_ref) / adjacency.dlat), std::lround((c.lon - lon_ref) / adjacency.dlon));
  };
  for (std::size_t i = 0; i < set.columns.size(); ++i) {
    if (assignment.labels[i] != BoxLabel::Excluded) index.emplace(key(set.columns[i]), i);
  }

  const double meridional_edge = adjacency.earth_radius * deg2rad(adjacency.dlat);
  for (const auto& [k, i] : index) {
    const ProfileColumn& a = set.columns[i];
    // north neighbour shares a zonal edge, east neighbour a meridional edge
    for (const auto& [offset, north] : {std::make_pair(std::make_pair(1L, 0L), true),
                                        std::make_pair(std::make_pair(0L, 1L), false)}) {
      const auto it = index.find({k.first + offset.first, k.second + offset.second});
      if (it == index.end() || assignment.labels[it->second] == assignment.labels[i]) continue;
      const ProfileColumn& b = set.columns[it->second];
      const double edge = north ? adjacency.earth_radius * std::cos(deg2rad(0.5 * (a.lat + b.lat))) *
                                      deg2rad(adjacency.dlon)
                                : meridional_edge;
      r.cross_section += edge * std::min(a.total_depth(), b.total_depth());
    }
  }
  if (r.cross_section <= 0.0) throw PipelineError("polar and equatorial boxes share no interface");

  BoxGeometry& g = r.geometry;
  g.dz = (r.volume_polar + r.volume_equatorial) / (r.area_polar + r.area_equatorial);
  g.dx = r.cross_section / g.dz;
  g.dy_p = r.area_polar / g.dx;
  g.dy_e = r.area_equatorial / g.dx;
  return r;
}

BoxAverages box_average(const ProfileSet& set, const BoxAssignment& assignment, int month, Layer layer) {
  if (assignment.labels.size() != set.columns.size()) throw PipelineError("assignment does not match columns");
  const std::size_t m = set.month_position(month);

  WeightedSum T[2], S[2];
  for (std::size_t i = 0; i < set.columns.size(); ++i) {
    const BoxLabel label = assignment.labels[i];
    if (label == BoxLabel::Excluded) continue;
    const int box = label == BoxLabel::Polar ? 0 : 1;
    const ProfileColumn& col = set.columns[i];
    const auto& samples = col.values[m];
    const std::size_t first = layer == Layer::Surface ? 0 : 1;
    const std::size_t last = layer == Layer::Surface ? std::min<std::size_t>(1, col.levels()) : col.levels();
    for (std::size_t k = first; k < last; ++k) {
      const double volume = col.cell_area * col.thickness[k];
      const LevelSample& s = samples[k];
      if (std::isfinite(s.T) && std::isfinite(s.sigma_T)) T[box].add(volume, s.T, s.sigma_T);
      if (std::isfinite(s.S) && std::isfinite(s.sigma_S)) S[box].add(volume, s.S, s.sigma_S);
    }
  }

  auto finish = [month](const WeightedSum& t, const WeightedSum& s, const char* box) {
    if (t.weight <= 0.0 || s.weight <= 0.0) {
      std::ostringstream msg;
      msg << "no valid samples in the " << box << " box for month " << month;
      throw PipelineError(msg.str());
    }
    return BoxMoments{t.value / t.weight, s.value / s.weight, t.variance / t.weight, s.variance / s.weight};
  };
  return {finish(T[0], S[0], "polar"), finish(T[1], S[1], "equatorial")};
}

BoxObservationSeries build_obs_series(const ProfileSet& set, const BoxAssignment& assignment, int first_month,
                                      int last_month) {
  if (last_month < first_month) throw PipelineError("observation period is empty");
  BoxObservationSeries series;
  for (int month : set.months) {
    if (month < first_month || month > last_month) continue;
    const BoxAverages sub = box_average(set, assignment, month, Layer::Subsurface);
    const BoxAverages surf = box_average(set, assignment, month, Layer::Surface);
    da::ObservationBatch batch;
    batch.d = {sub.polar.T, sub.equatorial.T, sub.polar.S, sub.equatorial.S};
    batch.time = static_cast<double>(month) * kSecondsPerMonth;
    series.months.push_back(month);
    series.batches.push_back(batch);
    series.monthly_variance.push_back({sub.polar.var_T, sub.equatorial.var_T, sub.polar.var_S, sub.equatorial.var_S});
    series.surface.push_back(surf);
  }
  if (series.months.empty()) throw PipelineError("no data inside the observation period");

  series.sigma_d = series.monthly_variance.front();
  for (const auto& v : series.monthly_variance) {
    for (std::size_t i = 0; i < 4; ++i) series.sigma_d[i] = std::max(series.sigma_d[i], v[i]);
  }
  for (auto& b : series.batches) b.variance = series.sigma_d;
  return series;
}

SeasonalFit fit_seasonal(std::span<const SeasonalPoint> points, double period) {
  if (points.size() < 3) throw PipelineError("seasonal fit needs at least 3 points");
  if (!(period > 0.0)) throw PipelineError("seasonal fit period must be positive");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](const auto& a, const auto& b) { return a.t < b.t; });
  if (!(hi->t - lo->t > 0.5 * period)) throw PipelineError("seasonal fit points must span more than half a period");

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SeasonalPoint& p = points[static_cast<std::size_t>(i)];
    if (!(p.variance > 0.0) || !std::isfinite(p.value)) throw PipelineError("seasonal fit needs finite values and positive variances");
    const double sw = 1.0 / std::sqrt(p.variance);
    const double phase = 2.0 * std::numbers::pi * p.t / period;
    X(i, 0) = sw;
    X(i, 1) = sw * std::cos(phase);
    X(i, 2) = sw * std::sin(phase);
    y[i] = sw * p.value;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw PipelineError("seasonal fit is singular (points do not resolve the annual cycle)");
  const Eigen::Vector3d beta = qr.solve(y);
  const Eigen::Matrix3d cov = (X.transpose() * X).inverse();

  SeasonalFit fit;
  fit.coeffs = {beta[0], beta[1], beta[2]};
  for (int i = 0; i < 3; ++i) fit.std_error[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
  return fit;
}

SurfaceForcing fit_surface_forcing(const BoxObservationSeries& series, double period) {
  auto fit_field = [&](auto select) {
    std::vector<SeasonalPoint> pts;
    pts.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto [value, variance] = select(series.surface[i]);
      pts.push_back({series.batches[i].time, value, variance});
    }
    return fit_seasonal(pts, period).coeffs;
  };
  SurfaceForcing f;
  f.period = period;
  f.Tp = fit_field([](const BoxAverages& b) { return std::make_pair(b.polar.T, b.polar.var_T); });
  f.Te = fit_field([](const BoxAverages& b) { return std::make_pair(b.equatorial.T, b.equatorial.var_T); });
  f.Sp = fit_field([](const BoxAverages& b) { return std::make_pair(b.polar.S, b.polar.var_S); });
  f.Se = fit_field([](const BoxAverages& b) { return std::make_pair(b.equatorial.S, b.equatorial.var_S); });
  return f;
}

double cell_area(double lat, double dlat, double dlon, double earth_radius) {
  return earth_radius * earth_radius * deg2rad(dlon) *
         (std::sin(deg2rad(lat + 0.5 * dlat)) - std::sin(deg2rad(lat - 0.5 * dlat)));
}

double synth_sigma_factor(const SynthConfig& fixture, int month) {
  return 1.0 + fixture.sigma_seasonal * std::cos(2.0 * std::numbers::pi * static_cast<double>(month) / 12.0);
}

ProfileSet synth_profiles(const SynthConfig& fixture) {
  if (fixture.n_lat < 1 || fixture.n_lon < 1 || fixture.months < 1 || fixture.level_thickness.empty()) {
    throw PipelineError("synthetic fixture needs a non-empty grid, levels and months");
  }
  std::mt19937_64 rng(fixture.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ProfileSet set;
  for (int m = 0; m < fixture.months; ++m) set.months.push_back(fixture.first_month + m);

  std::vector<double> depth;
  double top = 0.0;
  for (double h : fixture.level_thickness) {
    depth.push_back(top + 0.5 * h);
    top += h;
  }

  auto make_column = [&](double lat, double lon, bool polar, std::size_t n_levels) {
    ProfileColumn col;
    col.lat = lat;
    col.lon = lon;
    col.cell_area = cell_area(lat, fixture.dlat, fixture.dlon, fixture.earth_radius);
    col.depth.assign(depth.begin(), depth.begin() + static_cast<long>(n_levels));
    col.thickness.assign(fixture.level_thickness.begin(), fixture.level_thickness.begin() + static_cast<long>(n_levels));
    const HarmonicCoeffs& sT = polar ? fixture.surface_T_polar : fixture.surface_T_equatorial;
    const HarmonicCoeffs& sS = polar ? fixture.surface_S_polar : fixture.surface_S_equatorial;
    const double deep_T = polar ? fixture.subsurface_T_polar : fixture.subsurface_T_equatorial;
    const double deep_S = polar ? fixture.subsurface_S_polar : fixture.subsurface_S_equatorial;
    for (int month : set.months) {
      const double t = static_cast<double>(month) * kSecondsPerMonth;
      const double factor = synth_sigma_factor(fixture, month);
      std::vector<LevelSample> samples(n_levels);
      for (std::size_t k = 0; k < n_levels; ++k) {
        LevelSample& s = samples[k];
        if (k == 0) {
          s = {sT.evaluate(t, kSecondsPerYear), sS.evaluate(t, kSecondsPerYear), fixture.sigma_surface_T * factor,
               fixture.sigma_surface_S * factor};
        } else {
          s = {deep_T + fixture.T_gradient_per_km * depth[k] / 1000.0 + fixture.T_trend_per_month * month, deep_S,
               fixture.sigma_T * factor, fixture.sigma_S * factor};
        }
        if (fixture.noise_T > 0.0) s.T += fixture.noise_T * normal(rng);
        if (fixture.noise_S > 0.0) s.S += fixture.noise_S * normal(rng);
      }
      col.values.push_back(std::move(samples));
    }
    return col;
  };

  for (int j = 0; j < fixture.n_lat; ++j) {
    const double lat = fixture.lat0 + fixture.dlat * j;
    const bool polar = j >= fixture.n_lat - fixture.polar_rows;
    for (int i = 0; i < fixture.n_lon; ++i) {
      set.columns.push_back(make_column(lat, fixture.lon0 + fixture.dlon * i, polar, depth.size()));
    }
  }
  if (fixture.add_rejects) {
    set.columns.push_back(make_column(10.5, fixture.lon0, false, depth.size()));
    std::size_t shallow = 0;
    while (shallow < depth.size() && depth[shallow] + 0.5 * fixture.level_thickness[shallow] <= 1000.0) ++shallow;
    set.columns.push_back(make_column(fixture.lat0, fixture.lon0 + fixture.dlon * fixture.n_lon, false, std::max<std::size_t>(shallow, 1)));
  }
  return set;
}

}  // namespace stommel::obs
