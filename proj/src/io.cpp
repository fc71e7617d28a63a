#include "stommel/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#ifndef STOMMEL_VERSION
#define STOMMEL_VERSION "0.0.0"
#endif

namespace stommel::io {

using nlohmann::json;

namespace {

using Setters = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& j, const std::string& where, const Setters& setters) {
  if (!j.is_object()) throw InputError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError("config: unknown key '" + key + "' in '" + where + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw InputError("config: bad value for '" + where + "." + key + "': " + e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::function<void(const json&)> set_harmonic(HarmonicCoeffs& h) {
  return [&h](const json& v) {
    const auto c = v.get<std::vector<double>>();
    if (c.size() != 3) throw InputError("config: harmonic coefficients need [c0, c_cos, c_sin]");
    h = {c[0], c[1], c[2]};
  };
}

json harmonic_json(const HarmonicCoeffs& h) { return json::array({h.c0, h.c_cos, h.c_sin}); }

void set_forcing(SurfaceForcing& f, const json& j) {
  double period_years = f.period / kSecondsPerYear;
  apply(j, "forcing",
        {{"Te", set_harmonic(f.Te)},
         {"Tp", set_harmonic(f.Tp)},
         {"Se", set_harmonic(f.Se)},
         {"Sp", set_harmonic(f.Sp)},
         {"period_years", set(period_years)}});
  if (!(period_years > 0.0)) throw InputError("config: forcing.period_years must be positive");
  f.period = period_years * kSecondsPerYear;
}

json forcing_json(const SurfaceForcing& f) {
  return {{"Te", harmonic_json(f.Te)},
          {"Tp", harmonic_json(f.Tp)},
          {"Se", harmonic_json(f.Se)},
          {"Sp", harmonic_json(f.Sp)},
          {"period_years", f.period / kSecondsPerYear}};
}

std::function<void(const json&)> set_params(ModelParams& p, const std::string& where) {
  return [&p, where](const json& v) { apply(v, where, {{"kT", set(p.kT)}, {"kS", set(p.kS)}, {"gamma", set(p.gamma)}}); };
}

json params_json(const ModelParams& p) { return {{"kT", p.kT}, {"kS", p.kS}, {"gamma", p.gamma}}; }

json state_json(const OceanState& s) { return {{"Te", s.Te}, {"Tp", s.Tp}, {"Se", s.Se}, {"Sp", s.Sp}}; }

std::function<void(const json&)> set_array4(std::array<double, 4>& a) {
  return [&a](const json& v) {
    const auto x = v.get<std::vector<double>>();
    if (x.size() != 4) throw InputError("config: expected 4 values in [Tp, Te, Sp, Se] order");
    std::copy(x.begin(), x.end(), a.begin());
  };
}

std::string join_header(const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  return out + "\n";
}

void check_header(const CsvTable& t, const std::vector<std::string>& expected, const std::filesystem::path& path) {
  if (t.header != expected) {
    std::string line = join_header(expected);
    line.pop_back();
    throw InputError(path.string() + ": unexpected header, expected " + line);
  }
}

std::string hex(const unsigned char* data, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

}  // namespace

RunConfig config_from_json(const json& input) {
  const json& j = (input.is_object() && input.contains("config") && input.contains("command")) ? input.at("config") : input;
  RunConfig cfg;
  experiments::ExperimentConfig& e = cfg.experiment;
  ModelContext& m = e.model;

  apply(j, "config",
        {{"constants",
          [&](const json& v) {
            apply(v, "constants",
                  {{"rho0", set(m.constants.rho0)},
                   {"S0", set(m.constants.S0)},
                   {"T0", set(m.constants.T0)},
                   {"alphaT", set(m.constants.alphaT)},
                   {"alphaS", set(m.constants.alphaS)}});
          }},
         {"geometry",
          [&](const json& v) {
            apply(v, "geometry",
                  {{"dx", set(m.geometry.dx)},
                   {"dy_p", set(m.geometry.dy_p)},
                   {"dy_e", set(m.geometry.dy_e)},
                   {"dz", set(m.geometry.dz)}});
          }},
         {"params", set_params(m.params, "params")},
         {"forcing", [&](const json& v) { set_forcing(m.forcing, v); }},
         {"scenario",
          [&](const json& v) {
            apply(v, "scenario",
                  {{"enabled", set(m.scenario.enabled)},
                   {"onset_year", set(m.scenario.onset_year)},
                   {"warm_e", set(m.scenario.warm_e)},
                   {"warm_p", set(m.scenario.warm_p)},
                   {"ice_volume", set(m.scenario.ice_volume)},
                   {"melt_period_years", set(m.scenario.melt_period)}});
          }},
         {"initial_state",
          [&](const json& v) {
            apply(v, "initial_state",
                  {{"Te", set(e.initial_state.Te)},
                   {"Tp", set(e.initial_state.Tp)},
                   {"Se", set(e.initial_state.Se)},
                   {"Sp", set(e.initial_state.Sp)}});
          }},
         {"experiment",
          [&](const json& v) {
            apply(v, "experiment",
                  {{"members", set(e.members)},
                   {"seed", set(e.seed)},
                   {"log_std", set(e.log_std)},
                   {"da_enabled", set(e.da_enabled)},
                   {"da_start_month", set(e.da_start_month)},
                   {"da_end_month", set(e.da_end_month)},
                   {"horizon_year", set(e.horizon_year)},
                   {"initial_variance", set_array4(e.initial_variance)},
                   {"obs_variance", set_array4(e.obs_variance)},
                   {"truth_params", [&](const json& t) {
                      if (t.is_null()) {
                        e.truth_params.reset();
                        return;
                      }
                      ModelParams p;
                      set_params(p, "experiment.truth_params")(t);
                      e.truth_params = p;
                    }}});
          }},
         {"simulate",
          [&](const json& v) {
            SimulateSettings& s = cfg.simulate;
            apply(v, "simulate",
                  {{"start_year", set(s.start_year)},
                   {"end_year", set(s.end_year)},
                   {"step_days", set(s.step_days)},
                   {"output_every", set(s.output_every)},
                   {"seasonal", set(s.seasonal)}});
          }},
         {"bifurcation",
          [&](const json& v) {
            BifurcationSettings& b = cfg.bifurcation;
            apply(v, "bifurcation",
                  {{"eta1", set(b.eta1)},
                   {"eta3", set(b.eta3)},
                   {"eta2_min", set(b.eta2_min)},
                   {"eta2_max", set(b.eta2_max)},
                   {"resolution", set(b.resolution)}});
          }},
         {"sweep",
          [&](const json& v) {
            apply(v, "sweep",
                  {{"melt_periods_years", set(cfg.sweep.melt_periods)},
                   {"warming_rates_eq", set(cfg.sweep.warming_rates_eq)}});
          }},
         {"calibration",
          [&](const json& v) {
            calibration::CalibrationTarget& t = cfg.calibration_target;
            calibration::SimplexOptions& o = cfg.simplex;
            apply(v, "calibration",
                  {{"dT_star", set(t.dT_star)},
                   {"dS_star", set(t.dS_star)},
                   {"sigma_Tp", set(t.sigma_Tp)},
                   {"sigma_Te", set(t.sigma_Te)},
                   {"sigma_Sp", set(t.sigma_Sp)},
                   {"sigma_Se", set(t.sigma_Se)},
                   {"Q_target_Sv", set(t.Q_target)},
                   {"Q_sigma_Sv", set(t.Q_sigma)},
                   {"simplex", [&](const json& s) {
                      apply(s, "calibration.simplex",
                            {{"initial_step", set(o.initial_step)},
                             {"reflection", set(o.reflection)},
                             {"expansion", set(o.expansion)},
                             {"contraction", set(o.contraction)},
                             {"shrink", set(o.shrink)},
                             {"tolerance", set(o.tolerance)},
                             {"x_tolerance", set(o.x_tolerance)},
                             {"max_iterations", set(o.max_iterations)}});
                    }}});
          }},
         {"obs", [&](const json& v) {
            ObsSettings& o = cfg.obs;
            apply(v, "obs",
                  {{"lat_min", set(o.selection.lat_min)},
                   {"lat_max", set(o.selection.lat_max)},
                   {"lon_min", set(o.selection.lon_min)},
                   {"lon_max", set(o.selection.lon_max)},
                   {"min_total_depth", set(o.selection.min_total_depth)},
                   {"truncation_depth", set(o.selection.truncation_depth)},
                   {"dlat", set(o.adjacency.dlat)},
                   {"dlon", set(o.adjacency.dlon)},
                   {"earth_radius", set(o.adjacency.earth_radius)},
                   {"first_month", set(o.first_month)},
                   {"last_month", set(o.last_month)}});
          }}});

  try {
    e.validate();
    cfg.calibration_target.validate();
    cfg.simplex.validate();
  } catch (const std::invalid_argument& ex) {
    throw InputError(std::string("config: ") + ex.what());
  }
  if (!(cfg.simulate.step_days > 0.0) || cfg.simulate.output_every == 0 ||
      !(cfg.simulate.end_year >= cfg.simulate.start_year)) {
    throw InputError("config: simulate needs step_days > 0, output_every >= 1 and end_year >= start_year");
  }
  if (cfg.obs.last_month < cfg.obs.first_month) throw InputError("config: obs.last_month precedes obs.first_month");
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  const experiments::ExperimentConfig& e = cfg.experiment;
  const ModelContext& m = e.model;
  const calibration::CalibrationTarget& t = cfg.calibration_target;
  const calibration::SimplexOptions& o = cfg.simplex;
  json j;
  j["constants"] = {{"rho0", m.constants.rho0},
                    {"S0", m.constants.S0},
                    {"T0", m.constants.T0},
                    {"alphaT", m.constants.alphaT},
                    {"alphaS", m.constants.alphaS}};
  j["geometry"] = {{"dx", m.geometry.dx}, {"dy_p", m.geometry.dy_p}, {"dy_e", m.geometry.dy_e}, {"dz", m.geometry.dz}};
  j["params"] = params_json(m.params);
  j["forcing"] = forcing_json(m.forcing);
  j["scenario"] = {{"enabled", m.scenario.enabled},
                   {"onset_year", m.scenario.onset_year},
                   {"warm_e", m.scenario.warm_e},
                   {"warm_p", m.scenario.warm_p},
                   {"ice_volume", m.scenario.ice_volume},
                   {"melt_period_years", m.scenario.melt_period}};
  j["initial_state"] = state_json(e.initial_state);
  j["experiment"] = {{"members", e.members},
                     {"seed", e.seed},
                     {"log_std", e.log_std},
                     {"da_enabled", e.da_enabled},
                     {"da_start_month", e.da_start_month},
                     {"da_end_month", e.da_end_month},
                     {"horizon_year", e.horizon_year},
                     {"initial_variance", e.initial_variance},
                     {"obs_variance", e.obs_variance},
                     {"truth_params", e.truth_params ? params_json(*e.truth_params) : json(nullptr)}};
  j["simulate"] = {{"start_year", cfg.simulate.start_year},
                   {"end_year", cfg.simulate.end_year},
                   {"step_days", cfg.simulate.step_days},
                   {"output_every", cfg.simulate.output_every},
                   {"seasonal", cfg.simulate.seasonal}};
  j["bifurcation"] = {{"eta1", cfg.bifurcation.eta1},
                      {"eta3", cfg.bifurcation.eta3},
                      {"eta2_min", cfg.bifurcation.eta2_min},
                      {"eta2_max", cfg.bifurcation.eta2_max},
                      {"resolution", cfg.bifurcation.resolution}};
  j["sweep"] = {{"melt_periods_years", cfg.sweep.melt_periods}, {"warming_rates_eq", cfg.sweep.warming_rates_eq}};
  j["calibration"] = {{"dT_star", t.dT_star},
                      {"dS_star", t.dS_star},
                      {"sigma_Tp", t.sigma_Tp},
                      {"sigma_Te", t.sigma_Te},
                      {"sigma_Sp", t.sigma_Sp},
                      {"sigma_Se", t.sigma_Se},
                      {"Q_target_Sv", t.Q_target},
                      {"Q_sigma_Sv", t.Q_sigma},
                      {"simplex",
                       {{"initial_step", o.initial_step},
                        {"reflection", o.reflection},
                        {"expansion", o.expansion},
                        {"contraction", o.contraction},
                        {"shrink", o.shrink},
                        {"tolerance", o.tolerance},
                        {"x_tolerance", o.x_tolerance},
                        {"max_iterations", o.max_iterations}}}};
  const ObsSettings& ob = cfg.obs;
  j["obs"] = {{"lat_min", ob.selection.lat_min},
              {"lat_max", ob.selection.lat_max},
              {"lon_min", ob.selection.lon_min},
              {"lon_max", ob.selection.lon_max},
              {"min_total_depth", ob.selection.min_total_depth},
              {"truncation_depth", ob.selection.truncation_depth},
              {"dlat", ob.adjacency.dlat},
              {"dlon", ob.adjacency.dlon},
              {"earth_radius", ob.adjacency.earth_radius},
              {"first_month", ob.first_month},
              {"last_month", ob.last_month}};
  return j;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json(path)); }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()), text_(join_header(header)) {}

CsvWriter& CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    text_ += format_double(values[i]);
  }
  text_ += '\n';
  return *this;
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw std::logic_error("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    text_ += fields[i];
  }
  text_ += '\n';
  return *this;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  auto split = [](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
  };

  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != t.header.size()) {
      std::ostringstream msg;
      msg << path.string() << ":" << lineno << ": expected " << t.header.size() << " fields, found " << fields.size();
      throw InputError(msg.str());
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

double parse_double(const std::string& field, const std::string& context) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  double x = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) throw InputError(context + ": cannot parse '" + field + "' as a number");
  return x;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string profiles_to_csv(const obs::ProfileSet& set) {
  CsvWriter w(kProfileHeader);
  for (std::size_t m = 0; m < set.months.size(); ++m) {
    for (const obs::ProfileColumn& col : set.columns) {
      for (std::size_t k = 0; k < col.levels(); ++k) {
        const obs::LevelSample& s = col.values[m][k];
        if (std::isnan(s.T) && std::isnan(s.S)) continue;
        w.row({static_cast<double>(set.months[m]), col.lat, col.lon, col.cell_area, col.depth[k], col.thickness[k], s.T,
               s.S, s.sigma_T, s.sigma_S});
      }
    }
  }
  return w.str();
}

obs::ProfileSet read_profiles(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  check_header(t, kProfileHeader, path);
  if (t.rows.empty()) throw InputError(path.string() + ": no profile rows");

  struct Row {
    int month;
    double depth, thickness;
    obs::LevelSample sample;
  };
  struct Accum {
    double cell_area = 0.0;
    std::map<double, double> levels;  // depth -> thickness
    std::vector<Row> rows;
  };
  std::map<std::pair<double, double>, Accum> columns;
  std::set<int> months;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string ctx = path.string() + ": row " + std::to_string(r + 2);
    std::array<double, 10> v{};
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = parse_double(f[i], ctx);
    if (!std::isfinite(v[0]) || v[0] != std::floor(v[0])) throw InputError(ctx + ": time_month must be an integer");
    for (std::size_t i : {1u, 2u, 3u, 4u, 5u}) {
      if (!std::isfinite(v[i])) throw InputError(ctx + ": coordinates, area, depth and thickness are required");
    }
    const int month = static_cast<int>(v[0]);
    Accum& a = columns[{v[1], v[2]}];
    if (a.rows.empty()) a.cell_area = v[3];
    if (a.cell_area != v[3]) throw InputError(ctx + ": cell_area_m2 differs between rows of the same column");
    const auto [it, inserted] = a.levels.emplace(v[4], v[5]);
    if (!inserted && it->second != v[5]) throw InputError(ctx + ": thickness differs between rows of the same level");
    a.rows.push_back({month, v[4], v[5], {v[6], v[7], v[8], v[9]}});
    months.insert(month);
  }

  obs::ProfileSet set;
  set.months.assign(months.begin(), months.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& [key, a] : columns) {
    obs::ProfileColumn col;
    col.lat = key.first;
    col.lon = key.second;
    col.cell_area = a.cell_area;
    std::map<double, std::size_t> level_index;
    for (const auto& [depth, thickness] : a.levels) {
      level_index[depth] = col.depth.size();
      col.depth.push_back(depth);
      col.thickness.push_back(thickness);
    }
    col.values.assign(set.months.size(), std::vector<obs::LevelSample>(col.levels(), {nan, nan, nan, nan}));
    for (const Row& r : a.rows) col.values[set.month_position(r.month)][level_index[r.depth]] = r.sample;
    try {
      col.validate();
    } catch (const obs::PipelineError& e) {
      std::ostringstream msg;
      msg << path.string() << ": column (" << col.lat << ", " << col.lon << "): " << e.what();
      throw InputError(msg.str());
    }
    set.columns.push_back(std::move(col));
  }
  return set;
}

std::string observations_to_csv(const obs::BoxObservationSeries& series) {
  CsvWriter w(kObservationHeader);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& d = series.batches[i].d;
    const auto& v = series.monthly_variance[i];
    w.row({static_cast<double>(series.months[i]), d[0], d[1], d[2], d[3], v[0], v[1], v[2], v[3]});
  }
  return w.str();
}

obs::BoxObservationSeries read_observations(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  check_header(t, kObservationHeader, path);
  if (t.rows.empty()) throw InputError(path.string() + ": no observation rows");
  obs::BoxObservationSeries s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string ctx = path.string() + ": row " + std::to_string(r + 2);
    std::array<double, 9> v{};
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = parse_double(t.rows[r][i], ctx);
      if (!std::isfinite(v[i])) throw InputError(ctx + ": all observation fields are required");
    }
    const int month = static_cast<int>(v[0]);
    if (static_cast<double>(month) != v[0]) throw InputError(ctx + ": time_month must be an integer");
    if (!s.months.empty() && month <= s.months.back()) throw InputError(ctx + ": months must be strictly increasing");
    da::ObservationBatch b;
    b.d = {v[1], v[2], v[3], v[4]};
    b.time = month * kSecondsPerMonth;
    const std::array<double, 4> var = {v[5], v[6], v[7], v[8]};
    for (double x : var) {
      if (!(x > 0.0)) throw InputError(ctx + ": variances must be positive");
    }
    s.months.push_back(month);
    s.batches.push_back(b);
    s.monthly_variance.push_back(var);
  }
  s.sigma_d = s.monthly_variance.front();
  for (const auto& v : s.monthly_variance) {
    for (std::size_t i = 0; i < 4; ++i) s.sigma_d[i] = std::max(s.sigma_d[i], v[i]);
  }
  for (auto& b : s.batches) b.variance = s.sigma_d;
  return s;
}

json forcing_to_json(const SurfaceForcing& f) {
  json j;
  const std::pair<const char*, const HarmonicCoeffs*> fields[] = {{"Tp", &f.Tp}, {"Te", &f.Te}, {"Sp", &f.Sp}, {"Se", &f.Se}};
  for (const auto& [name, h] : fields) {
    j[name] = {{"c0", h->c0}, {"c_cos", h->c_cos}, {"c_sin", h->c_sin}, {"amplitude", h->amplitude()}};
  }
  j["period_years"] = f.period / kSecondsPerYear;
  return j;
}

SurfaceForcing forcing_from_json(const json& j) {
  SurfaceForcing f;
  try {
    auto read = [&](const char* name) {
      const json& h = j.at(name);
      return HarmonicCoeffs{h.at("c0").get<double>(), h.at("c_cos").get<double>(), h.at("c_sin").get<double>()};
    };
    f.Tp = read("Tp");
    f.Te = read("Te");
    f.Sp = read("Sp");
    f.Se = read("Se");
    if (j.contains("period_years")) f.period = j.at("period_years").get<double>() * kSecondsPerYear;
  } catch (const json::exception& e) {
    throw InputError(std::string("forcing JSON: ") + e.what());
  }
  if (!(f.period > 0.0)) throw InputError("forcing JSON: period_years must be positive");
  return f;
}

json geometry_to_json(const obs::GeometryReport& g) {
  return {{"dx", g.geometry.dx},
          {"dy_p", g.geometry.dy_p},
          {"dy_e", g.geometry.dy_e},
          {"dz", g.geometry.dz},
          {"volume_polar", g.volume_polar},
          {"volume_equatorial", g.volume_equatorial},
          {"area_polar", g.area_polar},
          {"area_equatorial", g.area_equatorial},
          {"cross_section", g.cross_section}};
}

std::string trajectory_to_csv(const Trajectory& traj, const ModelContext& ctx) {
  CsvWriter w({"time_s", "year", "Te", "Tp", "Se", "Sp", "Q_Sv"});
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const OceanState& x = traj.states[i];
    w.row({traj.times[i], model_time_to_year(traj.times[i]), x.Te, x.Tp, x.Se, x.Sp,
           transport(x, ctx.params, ctx.geometry, ctx.constants) / kSverdrup});
  }
  return w.str();
}

std::string diagram_to_csv(const dynamics::BifurcationDiagram& d) {
  CsvWriter w({"branch", "eta2", "Psi", "stability", "eta1", "eta3", "nsf_eta2", "saddle_eta2", "saddle_Psi"});
  const std::string sn_eta2 = d.saddle_node ? format_double(d.saddle_node->eta2) : "nan";
  const std::string sn_psi = d.saddle_node ? format_double(d.saddle_node->Psi) : "nan";
  for (const auto* branch : {&d.th, &d.sa}) {
    for (const dynamics::BranchSample& s : *branch) {
      w.row(std::vector<std::string>{dynamics::to_string(s.regime), format_double(s.eta2), format_double(s.Psi),
                                     dynamics::to_string(s.stability), format_double(d.eta1), format_double(d.eta3),
                                     format_double(d.nsf_eta2), sn_eta2, sn_psi});
    }
  }
  return w.str();
}

std::string member_series_csv(const experiments::RunResult& r) {
  CsvWriter w({"time_s", "year", "member", "dT", "dS", "Q_Sv", "T_nd", "S_nd"});
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    for (std::size_t m = 0; m < r.members[k].size(); ++m) {
      const experiments::MemberSample& s = r.members[k][m];
      w.row({r.times[k], model_time_to_year(r.times[k]), static_cast<double>(m), s.dT, s.dS, s.Q, s.T, s.S});
    }
  }
  return w.str();
}

std::string most_likely_csv(const experiments::RunResult& r, const ModelContext& ctx) {
  CsvWriter w({"time_s", "year", "Te", "Tp", "Se", "Sp", "kT", "kS", "gamma", "Q_Sv", "eta1", "eta2", "eta3"});
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const da::AugmentedState& a = r.most_likely[k];
    ModelContext c = ctx;
    c.params = a.params();
    const DimensionlessState annual = nondimensionalize(a.ocean, c.params, c.geometry, c.constants, c.forcing);
    w.row({r.times[k], model_time_to_year(r.times[k]), a.ocean.Te, a.ocean.Tp, a.ocean.Se, a.ocean.Sp, c.params.kT,
           c.params.kS, c.params.gamma, transport(a.ocean, c.params, c.geometry, c.constants) / kSverdrup,
           annual.eta1, annual.eta2, annual.eta3});
  }
  return w.str();
}

std::string diagnostics_csv(const experiments::RunResult& r) {
  static const char* names[] = {"Te", "Tp", "Se", "Sp", "log_kT", "log_kS", "log_gamma"};
  static const char* obs_names[] = {"Tp", "Te", "Sp", "Se"};
  std::vector<std::string> header = {"time_s", "year"};
  for (const char* n : names) header.push_back(std::string("spread_") + n);
  for (const char* n : names) header.push_back(std::string("error_") + n);
  for (const char* n : obs_names) header.push_back(std::string("innovation_") + n);
  CsvWriter w(header);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const experiments::DiagnosticsSample& d : r.diagnostics) {
    std::vector<double> row = {d.time, model_time_to_year(d.time)};
    for (double s : d.spread) row.push_back(s);
    for (int i = 0; i < da::kStateDim; ++i) row.push_back(d.error ? (*d.error)[static_cast<std::size_t>(i)] : nan);
    for (int i = 0; i < da::kObsDim; ++i) row.push_back(d.innovation ? (*d.innovation)[static_cast<std::size_t>(i)] : nan);
    w.row(row);
  }
  return w.str();
}

std::string flips_csv(const experiments::RunResult& r) {
  CsvWriter w({"member", "time_s", "year"});
  for (const experiments::FlipEvent& f : r.flips) w.row({static_cast<double>(f.member), f.time, model_time_to_year(f.time)});
  return w.str();
}

std::string truth_csv(const experiments::RunResult& r) {
  CsvWriter w({"time_s", "year", "Te", "Tp", "Se", "Sp", "log_kT", "log_kS", "log_gamma"});
  for (std::size_t k = 0; k < r.truth.size(); ++k) {
    const da::AugmentedState& a = r.truth[k];
    w.row({r.times[k], model_time_to_year(r.times[k]), a.ocean.Te, a.ocean.Tp, a.ocean.Se, a.ocean.Sp, a.log_kT,
           a.log_kS, a.log_gamma});
  }
  return w.str();
}

std::string sweep_csv(const experiments::SweepGrid& grid) {
  std::vector<std::string> header = {"melt_period_years"};
  for (double w : grid.warming_rates_eq) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "warm_eq_%g", w);
    header.push_back(buf);
  }
  CsvWriter w(header);
  for (std::size_t i = 0; i < grid.melt_periods.size(); ++i) {
    std::vector<double> row = {grid.melt_periods[i]};
    row.insert(row.end(), grid.flip_fraction[i].begin(), grid.flip_fraction[i].end());
    w.row(row);
  }
  return w.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &n, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return hex(digest, n);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

RunRecorder::RunRecorder(std::filesystem::path out_dir, std::string command, json config, std::uint64_t seed)
    : out_dir_(std::move(out_dir)), command_(std::move(command)), config_(std::move(config)), seed_(seed) {}

void RunRecorder::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunRecorder::add_output(const std::string& name, std::string content) {
  outputs_.emplace_back(name, std::move(content));
}

void RunRecorder::commit(double wall_clock_seconds) {
  std::filesystem::create_directories(out_dir_);
  json outputs = json::array();
  for (const auto& [name, content] : outputs_) {
    write_atomic(out_dir_ / name, content);
    outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }
  json manifest = {{"command", command_},   {"version", version_string()}, {"seed", seed_},
                   {"config", config_},     {"inputs", inputs_},           {"outputs", outputs},
                   {"summary", summary_},   {"wall_clock_seconds", wall_clock_seconds}};
  write_atomic(out_dir_ / "manifest.json", manifest.dump(2) + "\n");
}

std::string version_string() { return STOMMEL_VERSION; }

}  // namespace stommel::io
