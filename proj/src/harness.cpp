#include "grouptrack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace grouptrack::harness {
namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void check_written(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

char to_char(ScenarioId id) {
  switch (id) {
    case ScenarioId::kA: return 'a';
    case ScenarioId::kB: return 'b';
    case ScenarioId::kC: return 'c';
    case ScenarioId::kD: return 'd';
  }
  return '?';
}

std::optional<ScenarioId> parse_scenario(std::string_view name) {
  if (name == "a") return ScenarioId::kA;
  if (name == "b") return ScenarioId::kB;
  if (name == "c") return ScenarioId::kC;
  if (name == "d") return ScenarioId::kD;
  return std::nullopt;
}

NoiseLevels scenario_noise(ScenarioId id) {
  switch (id) {
    case ScenarioId::kA: return {1.0, 1.0, 5.0};
    case ScenarioId::kB: return {1.0, 5.0, 10.0};
    case ScenarioId::kC: return {3.0, 1.0, 5.0};
    case ScenarioId::kD: return {3.0, 5.0, 10.0};
  }
  throw std::invalid_argument("unknown scenario");
}

ScenarioConfig ScenarioConfig::preset(ScenarioId id) {
  ScenarioConfig c;
  c.scenario_id = id;
  const NoiseLevels n = scenario_noise(id);
  c.sigma_p = n.sigma_p;
  c.sigma_a_low = n.sigma_a_low;
  c.sigma_a_high = n.sigma_a_high;
  for (std::int64_t s = 5; s <= 50; s += 5) c.sampling_intervals.push_back(s);
  return c;
}

void ScenarioConfig::validate() const {
  if (!(sigma_p >= 0.0) || !(sigma_a_low >= 0.0) || !(sigma_a_high >= 0.0))
    throw std::invalid_argument("noise levels must be non-negative");
  if (!(high_perf_fraction >= 0.0 && high_perf_fraction <= 1.0))
    throw std::invalid_argument("high_perf_fraction must lie in [0, 1]");
  for (auto s : sampling_intervals)
    if (s < 1) throw std::invalid_argument("sampling intervals must be >= 1 s");
  world.validate();
  flock.validate();
  path_loss.validate();
  energy.validate();
  tracker::TrackerConfig t = tracker;
  t.validate();
}

std::vector<channel::NoiseProfile> assign_noise(const ScenarioConfig& config) {
  const std::size_t n = config.world.n_nodes;
  const auto n_low_perf = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * (1.0 - config.high_perf_fraction)));
  std::vector<channel::NoiseProfile> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].sigma_a = i < n_low_perf ? config.sigma_a_high : config.sigma_a_low;
    out[i].sigma_p = config.sigma_p;
  }
  return out;
}

std::vector<Vec2> interpolate_track(std::span<const TrackSample> samples, std::int64_t t_begin,
                                    std::int64_t t_end) {
  if (samples.empty()) throw std::invalid_argument("interpolate_track: no samples");
  if (t_end < t_begin) throw std::invalid_argument("interpolate_track: empty time range");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].t <= samples[i - 1].t)
      throw std::invalid_argument("interpolate_track: sample times must increase");

  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(t_end - t_begin + 1));
  std::size_t seg = 0;
  for (std::int64_t t = t_begin; t <= t_end; ++t) {
    if (t <= samples.front().t) {
      out.push_back(samples.front().position);
      continue;
    }
    if (t >= samples.back().t) {
      out.push_back(samples.back().position);
      continue;
    }
    while (samples[seg + 1].t < t) ++seg;
    const auto& a = samples[seg];
    const auto& b = samples[seg + 1];
    const double f = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
    out.push_back(a.position + f * (b.position - a.position));
  }
  return out;
}

double node_tracking_error(std::span<const Vec2> estimated, std::span<const Vec2> truth) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("node_tracking_error: track lengths differ");
  if (estimated.empty()) throw std::invalid_argument("node_tracking_error: empty tracks");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += (estimated[i] - truth[i]).norm();
  return sum / static_cast<double>(truth.size());
}

std::vector<std::pair<double, double>> error_cdf(std::span<const double> per_node_errors) {
  std::vector<double> sorted(per_node_errors.begin(), per_node_errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::vector<std::int64_t> sampling_instants(std::int64_t duration, std::int64_t interval) {
  if (interval < 1) throw std::invalid_argument("sampling interval must be >= 1 s");
  const std::int64_t count = std::max<std::int64_t>(1, duration / interval);
  std::vector<std::int64_t> out(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = k * interval;
  return out;
}

double mean_energy(std::span<const energy::EnergyLedger> ledgers, const energy::EnergyParams& p) {
  if (ledgers.empty()) throw std::invalid_argument("mean_energy: no nodes");
  std::uint64_t gps = 0;
  std::uint64_t radio = 0;
  for (const auto& l : ledgers) {
    gps += l.counts.gps;
    radio += l.counts.tx + l.counts.rx;
  }
  const double n = static_cast<double>(ledgers.size());
  return energy::gps_energy(p) * (static_cast<double>(gps) / n) +
         energy::radio_energy(p) * (static_cast<double>(radio) / n) +
         p.misc_energy * p.misc_energy_scale;
}

RunOutput simulate_run(const ScenarioConfig& config, tracker::Algorithm algorithm,
                       std::int64_t interval, std::span<const movement::Trajectory> tracks,
                       const RunOptions& options) {
  const std::size_t n = config.world.n_nodes;
  const std::int64_t duration = config.world.duration;
  if (tracks.size() != n) throw std::invalid_argument("simulate_run: one track per node required");
  for (const auto& tr : tracks)
    if (tr.positions.size() != static_cast<std::size_t>(duration + 1))
      throw std::invalid_argument("simulate_run: tracks must cover 0..duration");

  tracker::TrackerConfig tcfg = config.tracker;
  tcfg.algorithm = algorithm;
  tcfg.sampling_interval = interval;
  tracker::Tracker engine(tcfg, config.path_loss, config.energy, config.sigma_p,
                          assign_noise(config), config.seed);

  RunOutput out;
  auto* events = options.record_logs ? &out.logs.events : nullptr;
  std::vector<std::vector<TrackSample>> samples(n);
  std::vector<Vec2> truth(n);
  for (std::int64_t t : sampling_instants(duration, interval)) {
    for (std::size_t i = 0; i < n; ++i) truth[i] = tracks[i].positions[static_cast<std::size_t>(t)];
    tracker::InstantReport report = engine.step(t, truth, events);
    if (options.check_invariants) {
      if (algorithm != tracker::Algorithm::kIndividual) engine.clusters().check_invariants();
      tracker::check_gps_budget(report, tcfg, n);
    }
    for (const auto& s : engine.states()) {
      samples[s.node_id].push_back({t, s.last->estimate.w_hat});
      if (options.record_logs)
        out.logs.estimates.push_back({t, s.node_id, s.last->estimate.method, s.last->estimate.w_hat});
    }
    if (options.record_logs) out.logs.reports.push_back(std::move(report));
  }
  engine.finalize();

  RunResult& r = out.result;
  r.scenario_id = config.scenario_id;
  r.algorithm = algorithm;
  r.sampling_interval = interval;
  r.per_node_errors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto dense = interpolate_track(samples[i], 0, duration);
    r.per_node_errors[i] = node_tracking_error(dense, tracks[i].positions);
  }
  double sum = 0.0;
  for (double e : r.per_node_errors) sum += e;
  r.mean_error = sum / static_cast<double>(n);

  std::vector<energy::EnergyLedger> ledgers;
  ledgers.reserve(n);
  for (const auto& s : engine.states()) ledgers.push_back(s.ledger);
  r.mean_energy = mean_energy(ledgers, config.energy);
  if (options.record_logs) out.logs.ledgers = std::move(ledgers);
  return out;
}

std::vector<RunResult> run_scenario(const ScenarioConfig& config) {
  config.validate();
  const auto tracks = movement::generate_tracks(config.world, config.flock, config.seed);
  std::vector<RunResult> out;
  for (auto interval : config.sampling_intervals)
    out.push_back(simulate_run(config, config.algorithm, interval, tracks).result);
  return out;
}

ScenarioConfig scenario_config(const SweepSpec& spec, ScenarioId id) {
  ScenarioConfig c = spec.base;
  const NoiseLevels n = scenario_noise(id);
  c.scenario_id = id;
  c.sigma_p = spec.sigma_p_override.value_or(n.sigma_p);
  c.sigma_a_low = spec.sigma_a_low_override.value_or(n.sigma_a_low);
  c.sigma_a_high = spec.sigma_a_high_override.value_or(n.sigma_a_high);
  return c;
}

std::vector<RunResult> run_sweep(const SweepSpec& spec) {
  struct Job {
    ScenarioConfig config;
    tracker::Algorithm algorithm;
    std::int64_t interval;
  };
  std::vector<Job> jobs;
  for (ScenarioId id : spec.scenarios) {
    const ScenarioConfig c = scenario_config(spec, id);
    c.validate();
    for (auto a : spec.algorithms)
      for (auto s : c.sampling_intervals) jobs.push_back({c, a, s});
  }
  const auto tracks = movement::generate_tracks(spec.base.world, spec.base.flock, spec.base.seed);

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      RunOptions options;
      options.record_logs = spec.log_dir.has_value();
      RunOutput run = simulate_run(job.config, job.algorithm, job.interval, tracks, options);
      if (spec.log_dir) {
        const std::string name = std::string(1, to_char(job.config.scenario_id)) + "_" +
                                 std::string(tracker::to_string(job.algorithm)) + "_" +
                                 std::to_string(job.interval);
        write_run_logs(run, job.config.energy, *spec.log_dir / "runs" / name);
      }
      results[i] = std::move(run.result);
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(jobs.size())));
  std::vector<std::future<void>> pending;
  for (unsigned w = 1; w < n_workers; ++w) pending.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pending) f.get();

  std::sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
    if (a.scenario_id != b.scenario_id) return a.scenario_id < b.scenario_id;
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    return a.sampling_interval < b.sampling_interval;
  });
  return results;
}

void write_results_csv(std::ostream& os, std::span<const RunResult> results) {
  os << "scenario,algorithm,interval_s,mean_error_m,mean_energy_J\n";
  for (const auto& r : results)
    os << to_char(r.scenario_id) << ',' << tracker::to_string(r.algorithm) << ','
       << r.sampling_interval << ',' << fixed(r.mean_error) << ',' << fixed(r.mean_energy) << '\n';
}

void write_results_svg(std::ostream& os, std::span<const RunResult> results,
                       std::string_view title) {
  constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  std::map<tracker::Algorithm, std::vector<const RunResult*>> curves;
  double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
  for (const auto& r : results) {
    curves[r.algorithm].push_back(&r);
    x_min = std::min(x_min, r.mean_energy);
    x_max = std::max(x_max, r.mean_energy);
    y_min = std::min(y_min, r.mean_error);
    y_max = std::max(y_max, r.mean_error);
  }
  if (results.empty()) x_min = y_min = 0.0, x_max = y_max = 1.0;
  if (x_max - x_min < 1e-9) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-9) y_max = y_min + 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double e) { return kLeft + (e - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double err) { return kTop + plot_h - (err - y_min) / (y_max - y_min) * plot_h; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
     << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 28 << "\">" << fixed(x_min, 1)
     << "</text>\n";
  os << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kHeight - 28 << "\" text-anchor=\"end\">"
     << fixed(x_max, 1) << "</text>\n";
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
     << "\" text-anchor=\"middle\">mean energy (J)</text>\n";
  os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + plot_h << "\" text-anchor=\"end\">"
     << fixed(y_min, 2) << "</text>\n";
  os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10 << "\" text-anchor=\"end\">"
     << fixed(y_max, 2) << "</text>\n";
  os << "<text transform=\"translate(16," << kTop + plot_h / 2
     << ") rotate(-90)\" text-anchor=\"middle\">mean error (m)</text>\n";

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::size_t k = 0;
  for (auto& [algorithm, points] : curves) {
    std::sort(points.begin(), points.end(), [](const RunResult* a, const RunResult* b) {
      return a->sampling_interval < b->sampling_interval;
    });
    const char* color = kColors[k % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i)
      os << (i ? " " : "") << fixed(px(points[i]->mean_energy), 2) << ','
         << fixed(py(points[i]->mean_error), 2);
    os << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k) + 8.0;
    os << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\""
       << kWidth - kRight + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kWidth - kRight + 36 << "\" y=\"" << ly + 4 << "\">"
       << tracker::to_string(algorithm) << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
}

void emit_results(std::span<const RunResult> results, const std::filesystem::path& dir,
                  bool svg) {
  if (results.empty()) throw std::invalid_argument("emit_results: no results");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const auto csv_path = dir / "results.csv";
  auto csv = open_for_write(csv_path);
  write_results_csv(csv, results);
  check_written(csv, csv_path);
  if (!svg) return;

  std::map<ScenarioId, std::vector<RunResult>> by_scenario;
  for (const auto& r : results) by_scenario[r.scenario_id].push_back(r);
  for (const auto& [id, rs] : by_scenario) {
    const auto path = dir / (std::string("results_") + to_char(id) + ".svg");
    auto os = open_for_write(path);
    write_results_svg(os, rs, std::string("scenario (") + to_char(id) + ")");
    check_written(os, path);
  }
}

void write_run_logs(const RunOutput& run, const energy::EnergyParams& p,
                    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "estimates.csv";
    auto os = open_for_write(path);
    os << "t,node_id,method,x_hat,y_hat\n";
    for (const auto& e : run.logs.estimates)
      os << e.t << ',' << e.node_id << ',' << multilat::to_string(e.method) << ','
         << fixed(e.position.x()) << ',' << fixed(e.position.y()) << '\n';
    check_written(os, path);
  }
  {
    const auto path = dir / "energy.csv";
    auto os = open_for_write(path);
    os << "node_id,gps_fixes,tx,rx,consumed_J\n";
    for (const auto& l : run.logs.ledgers) {
      const double consumed = energy::consumed_from_counts(l.counts, l.finalized, p);
      os << l.node_id << ',' << l.counts.gps << ',' << l.counts.tx << ',' << l.counts.rx << ','
         << fixed(consumed) << '\n';
    }
    check_written(os, path);
  }
  {
    const auto path = dir / "events.csv";
    auto os = open_for_write(path);
    protocol::write_events_csv(os, run.logs.events);
    check_written(os, path);
  }
  {
    const auto path = dir / "cdf.csv";
    auto os = open_for_write(path);
    os << "error_m,fraction\n";
    for (const auto& [err, frac] : error_cdf(run.result.per_node_errors))
      os << fixed(err) << ',' << fixed(frac) << '\n';
    check_written(os, path);
  }
}

}  // namespace grouptrack::harness
