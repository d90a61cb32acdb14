#pragma once

// Scenario runner: drives the tracker over ground-truth tracks, interpolates
// the sampled estimates back to 1 s and reports mean error and energy.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grouptrack/channel.hpp"
#include "grouptrack/energy.hpp"
#include "grouptrack/movement.hpp"
#include "grouptrack/protocol.hpp"
#include "grouptrack/tracker.hpp"

namespace grouptrack::harness {

enum class ScenarioId { kA, kB, kC, kD };

char to_char(ScenarioId id);
std::optional<ScenarioId> parse_scenario(std::string_view name);

struct ScenarioConfig {
  ScenarioId scenario_id = ScenarioId::kA;
  double sigma_p = 1.0;         // dB
  double sigma_a_low = 1.0;     // m, high-performance GPS
  double sigma_a_high = 5.0;    // m
  double high_perf_fraction = 0.5;
  std::vector<std::int64_t> sampling_intervals;
  tracker::Algorithm algorithm = tracker::Algorithm::kMultiModeWlsrp;
  std::uint64_t seed = 1;
  movement::WorldConfig world = movement::WorldConfig::defaults();
  movement::FlockingParams flock;
  channel::PathLossParams path_loss;
  energy::EnergyParams energy;
  tracker::TrackerConfig tracker;

  /// Noise levels of scenarios (a)..(d); intervals 5, 10, ..., 50.
  static ScenarioConfig preset(ScenarioId id);
  void validate() const;
};

/// (sigma_p, sigma_a_low, sigma_a_high) of a scenario.
struct NoiseLevels {
  double sigma_p;
  double sigma_a_low;
  double sigma_a_high;
};
NoiseLevels scenario_noise(ScenarioId id);

/// The first round(n * (1 - high_perf_fraction)) node ids get sigma_a_high,
/// the rest sigma_a_low.
std::vector<channel::NoiseProfile> assign_noise(const ScenarioConfig& config);

struct RunResult {
  ScenarioId scenario_id = ScenarioId::kA;
  tracker::Algorithm algorithm = tracker::Algorithm::kMultiModeWlsrp;
  std::int64_t sampling_interval = 0;
  double mean_error = 0.0;
  double mean_energy = 0.0;
  std::vector<double> per_node_errors;
};

struct TrackSample {
  std::int64_t t = 0;
  Vec2 position{0.0, 0.0};
};

/// Linear interpolation at 1 s steps over [t_begin, t_end]; holds the first
/// sample before it and the last after it. Samples must be strictly
/// increasing in t. Throws std::invalid_argument on empty input.
std::vector<Vec2> interpolate_track(std::span<const TrackSample> samples, std::int64_t t_begin,
                                    std::int64_t t_end);

/// Mean Euclidean distance between aligned dense tracks.
double node_tracking_error(std::span<const Vec2> estimated, std::span<const Vec2> truth);

/// Sorted (error, rank/n) pairs; tied values collapse to one step.
std::vector<std::pair<double, double>> error_cdf(std::span<const double> per_node_errors);

/// Sampling instants k * interval for k = 0 .. max(1, duration / interval) - 1.
std::vector<std::int64_t> sampling_instants(std::int64_t duration, std::int64_t interval);

struct EstimateRecord {
  std::int64_t t = 0;
  NodeId node_id = 0;
  multilat::Method method = multilat::Method::kGps;
  Vec2 position{0.0, 0.0};
};

struct RunOptions {
  bool record_logs = false;
  // Checks cluster-table and GPS-budget invariants after every instant.
  bool check_invariants = false;
};

struct RunLogs {
  std::vector<EstimateRecord> estimates;
  std::vector<protocol::ProtocolEvent> events;
  std::vector<energy::EnergyLedger> ledgers;
  std::vector<tracker::InstantReport> reports;
};

struct RunOutput {
  RunResult result;
  RunLogs logs;
};

/// Mean over nodes of E_g * gps + E_r * (tx + rx) + E_l, from integer counts.
double mean_energy(std::span<const energy::EnergyLedger> ledgers, const energy::EnergyParams& p);

/// One algorithm at one interval over prepared tracks. Channel and protocol
/// streams depend only on config.seed, so every variant shares one world.
RunOutput simulate_run(const ScenarioConfig& config, tracker::Algorithm algorithm,
                       std::int64_t interval, std::span<const movement::Trajectory> tracks,
                       const RunOptions& options = {});

/// Generates tracks from config.seed and runs config.algorithm over every
/// configured interval.
std::vector<RunResult> run_scenario(const ScenarioConfig& config);

struct SweepSpec {
  ScenarioConfig base;  // noise fields are replaced per scenario unless overridden
  std::vector<ScenarioId> scenarios;
  std::vector<tracker::Algorithm> algorithms;
  std::optional<double> sigma_p_override;
  std::optional<double> sigma_a_low_override;
  std::optional<double> sigma_a_high_override;
  unsigned jobs = 1;
  // Per-run logs land in <dir>/runs/<scenario>_<algorithm>_<interval>/.
  std::optional<std::filesystem::path> log_dir;
};

ScenarioConfig scenario_config(const SweepSpec& spec, ScenarioId id);

/// All scenario x algorithm x interval runs over one shared set of tracks.
/// Results are sorted by (scenario, algorithm, interval).
std::vector<RunResult> run_sweep(const SweepSpec& spec);

/// `scenario,algorithm,interval_s,mean_error_m,mean_energy_J`.
void write_results_csv(std::ostream& os, std::span<const RunResult> results);

/// Mean error against mean energy, one polyline per algorithm ordered by
/// interval. Results are expected to come from a single scenario.
void write_results_svg(std::ostream& os, std::span<const RunResult> results,
                       std::string_view title);

/// results.csv plus, when svg is set, one results_<scenario>.svg per scenario.
/// Throws std::runtime_error when a file cannot be written.
void emit_results(std::span<const RunResult> results, const std::filesystem::path& dir,
                  bool svg);

/// estimates.csv, energy.csv, events.csv and cdf.csv under dir.
void write_run_logs(const RunOutput& run, const energy::EnergyParams& p,
                    const std::filesystem::path& dir);

}  // namespace grouptrack::harness
