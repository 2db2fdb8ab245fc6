#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaoslab/grid.hpp"
#include "chaoslab/metrics.hpp"
#include "chaoslab/particles.hpp"
#include "chaoslab/pde.hpp"
#include "chaoslab/regime.hpp"

namespace chaoslab {

inline constexpr const char* kCodeVersion = "chaoslab 0.3.0";

enum class Mode { pde, coupling, lln, regime, sweep };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);  // throws ConfigError

struct ExperimentConfig {
  Mode mode = Mode::coupling;
  YukawaParams physical;
  // Regime inputs; eps = N^-gamma unless eps_override is set.
  double theta = 0.3;
  double alpha = 0.1;
  int m = 4;
  long N = 256;
  Theorem theorem = Theorem::deviation_probability;
  std::optional<double> gamma;
  std::optional<double> eta;
  std::optional<double> eps_override;
  GridSpec grid{16.0, 128};
  double T = 0.25;
  std::optional<double> dt_sde;  // default min(eps^2/10, h^2/8)
  int record_every = 1;
  int pde_output_every = 50;
  int replicas = 100;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: all available, capped by CHAOS_LAB_THREADS
  InitialDensity initial = InitialDensity::gaussian({0.0, 0.0}, 0.5);
  InteractionMethod interaction = InteractionMethod::fast;
  std::vector<long> sweep_N;              // sweep mode
  std::vector<long> lln_N;                // lln mode
  std::vector<int> lln_moments{1, 2};
  PsiKind lln_psi = PsiKind::phi;
  double lln_sample_time = 0.0;
  bool write_trials = true;               // per-replica trial CSVs
  std::string output_dir = "chaoslab_out";

  // Checks every field against module preconditions; throws ConfigError naming the field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a of the key-sorted JSON serialisation (output_dir excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

struct RunManifest {
  std::string config_hash;
  std::string code_version = kCodeVersion;
  std::string mode;
  std::vector<std::uint64_t> replica_seeds;
  std::vector<std::string> files;  // relative to the output directory
  std::map<std::string, double> timings_s;
  std::string status = "ok";
  std::string failure;

  nlohmann::json to_json(bool with_timings = true) const;
  static RunManifest from_json(const nlohmann::json& j);
};

// One row of the metrics CSV.
struct MetricRow {
  long N = 0;
  double eps = 0.0;
  double alpha = 0.0;
  double theta = 0.0;
  int m = 0;
  std::string statistic;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_replicas = 0;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

// Results of one coupling experiment at a single N.
struct CouplingResult {
  RegimeParams regime;
  std::vector<TrialRecord> trials;
  std::vector<DistanceReport> distances;  // KDE of X(T) against u^eps(T), one per replica
  std::vector<MetricRow> rows;
};

// Shared PDE solve + replicated coupled runs at N (eps from the regime plan unless overridden).
CouplingResult run_coupling(const ExperimentConfig& cfg, long N);

struct LlnResult {
  std::vector<LlnStat> stats;
  std::vector<MetricRow> rows;
};

// I.i.d. mean-field samples at cfg.lln_sample_time and the LLN statistics at N.
LlnResult run_lln(const ExperimentConfig& cfg, long N);

// i.i.d. draws from a grid density (node cells, uniform within the cell).
std::vector<Vec2> sample_density(const ScalarField2D& u, std::size_t n, Engine& rng);

// Effective worker count: cfg.threads (0 = hardware) capped by CHAOS_LAB_THREADS.
int worker_count(int requested);

// Runs the recipe for cfg.mode, writes CSVs, config.json and manifest.json into
// cfg.output_dir. On failure a partial manifest is written and the error rethrown.
RunManifest run_experiment(const ExperimentConfig& cfg);

struct ReportTable {
  std::string statistic;
  Regression fit;
  std::string status;  // "ok", "insufficient points", "non-positive values"
};

// Log-log regressions against N for every statistic in the run's metrics files; writes
// summary.csv and plot_<statistic>.csv next to the manifest.
std::vector<ReportTable> report(const std::filesystem::path& run_dir);

}  // namespace chaoslab
