// Run configuration, CSV/JSON readers and writers, and run manifests.
//
// CSV files have a header row and fixed column order; floating-point values
// are written with 17 significant digits so they round-trip exactly.
#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stommel/calibration.hpp"
#include "stommel/dynamics.hpp"
#include "stommel/experiments.hpp"
#include "stommel/model.hpp"
#include "stommel/observations.hpp"

namespace stommel::io {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateSettings {
  double start_year = 2004.0;
  double end_year = 2104.0;
  double step_days = 30.4375;  // one month
  std::size_t output_every = 1;
  bool seasonal = true;  // false: annual-mean forcing
};

struct BifurcationSettings {
  double eta1 = 3.0;
  double eta3 = 0.1;
  double eta2_min = 0.0;
  double eta2_max = 2.0;
  std::size_t resolution = 401;
};

struct ObsSettings {
  obs::SelectionBounds selection;
  obs::GridAdjacency adjacency;
  int first_month = 0;
  int last_month = 216;
};

/// Everything a CLI command needs. Defaults are the model's reference values.
struct RunConfig {
  experiments::ExperimentConfig experiment;
  SimulateSettings simulate;
  BifurcationSettings bifurcation;
  experiments::SweepGrid sweep = experiments::SweepGrid::default_grid();
  calibration::CalibrationTarget calibration_target;
  calibration::SimplexOptions simplex;
  ObsSettings obs;
};

/// Overlay `j` on the defaults. Unknown keys are rejected. A run manifest is
/// accepted too: its "config" member is used.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);

/// %.17g formatting.
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& row(const std::vector<double>& values);
  CsvWriter& row(const std::vector<std::string>& fields);
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
double parse_double(const std::string& field, const std::string& context);

/// Write via a temporary file in the same directory and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

inline const std::vector<std::string> kProfileHeader = {
    "time_month", "lat", "lon", "cell_area_m2", "depth_m", "thickness_m", "T_degC", "S_ppt", "sigT_degC", "sigS_ppt"};
inline const std::vector<std::string> kObservationHeader = {"time_month", "Tp",    "Te",    "Sp",   "Se",
                                                            "varTp",      "varTe", "varSp", "varSe"};

std::string profiles_to_csv(const obs::ProfileSet& set);
/// Rows may come in any order; absent (month, column, level) rows become
/// missing samples.
obs::ProfileSet read_profiles(const std::filesystem::path& path);

/// One row per month with that month's variances.
std::string observations_to_csv(const obs::BoxObservationSeries& series);
/// Batches carry Sigma_d, the per-variable maximum of the monthly variances.
obs::BoxObservationSeries read_observations(const std::filesystem::path& path);

nlohmann::json forcing_to_json(const SurfaceForcing& f);
SurfaceForcing forcing_from_json(const nlohmann::json& j);
nlohmann::json geometry_to_json(const obs::GeometryReport& g);

std::string trajectory_to_csv(const Trajectory& traj, const ModelContext& ctx);
std::string diagram_to_csv(const dynamics::BifurcationDiagram& diagram);

std::string member_series_csv(const experiments::RunResult& r);
std::string most_likely_csv(const experiments::RunResult& r, const ModelContext& ctx);
std::string diagnostics_csv(const experiments::RunResult& r);
std::string flips_csv(const experiments::RunResult& r);
std::string truth_csv(const experiments::RunResult& r);
std::string sweep_csv(const experiments::SweepGrid& grid);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Collects outputs of one command and writes them plus a manifest.
class RunRecorder {
 public:
  RunRecorder(std::filesystem::path out_dir, std::string command, nlohmann::json config, std::uint64_t seed);

  void add_input(const std::filesystem::path& path);
  /// Buffer an output; nothing is written until commit().
  void add_output(const std::string& name, std::string content);
  nlohmann::json& summary() { return summary_; }
  /// Write all outputs atomically, then manifest.json.
  void commit(double wall_clock_seconds);

 private:
  std::filesystem::path out_dir_;
  std::string command_;
  nlohmann::json config_;
  std::uint64_t seed_;
  nlohmann::json inputs_ = nlohmann::json::array();
  std::vector<std::pair<std::string, std::string>> outputs_;
  nlohmann::json summary_ = nlohmann::json::object();
};

std::string version_string();

}  // namespace stommel::io
