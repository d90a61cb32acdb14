#include "grouptrack/cli.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <thread>

#include <unistd.h>

#include <CLI11.hpp>

#include "grouptrack/config.hpp"
#include "grouptrack/movement.hpp"

namespace grouptrack::cli {
namespace {

struct RawArgs {
  std::string scenario = "all";
  std::string algorithm = "all";
  std::string intervals = "5:50:5";
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
  bool emit_svg = false;
  bool no_run_logs = false;
  unsigned jobs = 0;

  std::string tracks_out;
  std::uint64_t tracks_seed = 1;
  std::string tracks_config;

  std::size_t samples = 1'000'000;
  std::size_t trials = 100'000;
  std::uint64_t oracle_seed = 1;
  double u_scale = 1.0;
  std::vector<double> sigma_p{1.0, 3.0};
  std::vector<double> sigma_a{1.0, 5.0, 10.0};
  std::string oracle_config;
};

struct Apps {
  CLI::App app{"Cooperative GPS duty-cycling tracker for groups of animals", "grouptrack"};
  CLI::App* simulate = nullptr;
  CLI::App* generate = nullptr;
  CLI::App* oracles = nullptr;
};

void build(Apps& a, RawArgs& r) {
  const std::string keys = "Config file keys (key = value, # comments):\n" +
                           config::describe_keys(config::default_spec());
  a.app.require_subcommand(1);
  a.app.footer(keys);

  a.simulate = a.app.add_subcommand("simulate", "run scenario sweeps and write results");
  a.simulate->add_option("--scenario", r.scenario, "a, b, c, d or all")
      ->check(CLI::IsMember({"a", "b", "c", "d", "all"}))
      ->capture_default_str();
  a.simulate->add_option("--algorithm", r.algorithm, "wlsr, wlsrp, cbt, individual or all")
      ->check(CLI::IsMember({"wlsr", "wlsrp", "cbt", "individual", "all"}))
      ->capture_default_str();
  a.simulate->add_option("--intervals", r.intervals, "sampling intervals in s, start:stop:step or a,b,c")
      ->capture_default_str();
  a.simulate->add_option("--seed", r.seed, "master seed")->capture_default_str();
  a.simulate->add_option("--out", r.out, "output directory")->required();
  a.simulate->add_flag("--emit-svg", r.emit_svg, "also write error-vs-energy SVG plots");
  a.simulate->add_flag("--no-run-logs", r.no_run_logs, "skip per-run estimate/energy/event logs");
  a.simulate->add_option("--config", r.config, "config file");
  a.simulate->add_option("--jobs", r.jobs, "parallel runs, 0 = hardware threads")
      ->capture_default_str();
  a.simulate->footer(keys);

  a.generate = a.app.add_subcommand("generate-tracks", "write ground-truth trajectories as CSV");
  a.generate->add_option("--out", r.tracks_out, "output CSV file")->required();
  a.generate->add_option("--seed", r.tracks_seed, "master seed")->capture_default_str();
  a.generate->add_option("--config", r.tracks_config, "config file");
  a.generate->footer(keys);

  a.oracles = a.app.add_subcommand("validate-oracles", "Monte-Carlo checks of the noise moments");
  a.oracles->add_option("--samples", r.samples, "samples per moment check")->capture_default_str();
  a.oracles->add_option("--trials", r.trials, "trials for the position-bias check")
      ->capture_default_str();
  a.oracles->add_option("--seed", r.oracle_seed, "seed")->capture_default_str();
  a.oracles->add_option("--sigma-p", r.sigma_p, "RSSI noise levels (dB)")
      ->delimiter(',')
      ->capture_default_str();
  a.oracles->add_option("--sigma-a", r.sigma_a, "GPS noise levels (m)")
      ->delimiter(',')
      ->capture_default_str();
  a.oracles->add_option("--u-scale", r.u_scale, "test hook: scale u in the bias correction")
      ->capture_default_str();
  a.oracles->add_option("--config", r.oracle_config, "config file (channel keys are used)");
}

std::filesystem::path nearest_existing(std::filesystem::path p) {
  p = std::filesystem::absolute(p);
  while (!std::filesystem::exists(p) && p.has_parent_path() && p != p.parent_path())
    p = p.parent_path();
  return p;
}

void check_output_dir(const std::string& flag, const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir) && !std::filesystem::is_directory(dir))
    throw CliError(flag + ": '" + dir.string() + "' exists and is not a directory");
  const auto base = nearest_existing(dir);
  if (!std::filesystem::is_directory(base) || ::access(base.c_str(), W_OK) != 0)
    throw CliError(flag + ": cannot create '" + dir.string() + "' (" + base.string() +
                   " is not writable)");
}

void check_output_file(const std::string& flag, const std::filesystem::path& file) {
  if (std::filesystem::is_directory(file))
    throw CliError(flag + ": '" + file.string() + "' is a directory");
  const auto parent = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  if (std::filesystem::exists(file) && ::access(file.c_str(), W_OK) != 0)
    throw CliError(flag + ": '" + file.string() + "' is not writable");
  check_output_dir(flag, parent);
}

void load_config(harness::SweepSpec& spec, const std::string& path, std::optional<std::filesystem::path>& out) {
  if (path.empty()) return;
  if (!std::filesystem::is_regular_file(path))
    throw CliError("--config: '" + path + "' is not a readable file");
  try {
    config::apply_config_file(spec, path);
  } catch (const config::ConfigError& e) {
    throw CliError(e.what());
  }
  out = path;
}

void validate_spec(const harness::SweepSpec& spec) {
  for (auto id : spec.scenarios) {
    try {
      harness::scenario_config(spec, id).validate();
    } catch (const std::invalid_argument& e) {
      throw CliError(std::string("invalid parameters: ") + e.what());
    }
  }
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw CliError("--intervals: '" + std::string(s) + "' is not an integer");
  return v;
}

}  // namespace

std::vector<std::int64_t> parse_intervals(std::string_view text) {
  std::vector<std::int64_t> out;
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::int64_t> parts;
    while (true) {
      const auto colon = text.find(':');
      parts.push_back(parse_int(text.substr(0, colon)));
      if (colon == std::string_view::npos) break;
      text.remove_prefix(colon + 1);
    }
    if (parts.size() != 3) throw CliError("--intervals: expected start:stop:step");
    const auto [start, stop, step] = std::tuple{parts[0], parts[1], parts[2]};
    if (step < 1) throw CliError("--intervals: step must be >= 1");
    if (start < 1 || stop < start) throw CliError("--intervals: need 1 <= start <= stop");
    for (std::int64_t s = start; s <= stop; s += step) out.push_back(s);
  } else {
    while (true) {
      const auto comma = text.find(',');
      out.push_back(parse_int(text.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      text.remove_prefix(comma + 1);
    }
    for (auto s : out)
      if (s < 1) throw CliError("--intervals: intervals must be >= 1 s");
  }
  return out;
}

std::string help_text() {
  Apps a;
  RawArgs r;
  build(a, r);
  std::string text = a.app.help();
  for (auto* sub : {a.simulate, a.generate, a.oracles}) {
    sub->footer("");
    text += "\n" + sub->help();
  }
  return text;
}

CliInvocation parse_and_validate(int argc, const char* const* argv) {
  Apps a;
  RawArgs r;
  build(a, r);
  CliInvocation inv;
  try {
    a.app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    inv.subcommand = Subcommand::kHelp;
    const auto subs = a.app.get_subcommands();
    inv.help_text = subs.empty() ? help_text() : subs.front()->help();
    return inv;
  } catch (const CLI::CallForAllHelp&) {
    inv.subcommand = Subcommand::kHelp;
    inv.help_text = help_text();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw CliError(e.what());
  }

  inv.spec = config::default_spec();
  if (a.simulate->parsed()) {
    inv.subcommand = Subcommand::kSimulate;
    load_config(inv.spec, r.config, inv.config_path);
    if (r.scenario == "all") {
      inv.spec.scenarios = {harness::ScenarioId::kA, harness::ScenarioId::kB,
                            harness::ScenarioId::kC, harness::ScenarioId::kD};
    } else {
      inv.spec.scenarios = {*harness::parse_scenario(r.scenario)};
    }
    if (r.algorithm == "all") {
      inv.spec.algorithms = {tracker::Algorithm::kMultiModeWlsr, tracker::Algorithm::kMultiModeWlsrp,
                             tracker::Algorithm::kCbt, tracker::Algorithm::kIndividual};
    } else {
      inv.spec.algorithms = {*tracker::parse_algorithm(r.algorithm)};
    }
    inv.spec.base.sampling_intervals = parse_intervals(r.intervals);
    inv.spec.base.seed = r.seed;
    inv.spec.jobs = r.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : r.jobs;
    inv.emit_svg = r.emit_svg;
    inv.run_logs = !r.no_run_logs;
    inv.out = r.out;
    check_output_dir("--out", inv.out);
    if (inv.run_logs) inv.spec.log_dir = inv.out;
    validate_spec(inv.spec);
  } else if (a.generate->parsed()) {
    inv.subcommand = Subcommand::kGenerateTracks;
    load_config(inv.spec, r.tracks_config, inv.config_path);
    inv.spec.base.seed = r.tracks_seed;
    inv.out = r.tracks_out;
    check_output_file("--out", inv.out);
    try {
      inv.spec.base.world.validate();
      inv.spec.base.flock.validate();
    } catch (const std::invalid_argument& e) {
      throw CliError(std::string("invalid parameters: ") + e.what());
    }
  } else {
    inv.subcommand = Subcommand::kValidateOracles;
    load_config(inv.spec, r.oracle_config, inv.config_path);
    if (r.samples < 2) throw CliError("--samples: need at least 2 samples");
    if (r.trials < 1) throw CliError("--trials: need at least 1 trial");
    for (double v : r.sigma_p)
      if (!(v >= 0.0)) throw CliError("--sigma-p: levels must be non-negative");
    for (double v : r.sigma_a)
      if (!(v >= 0.0)) throw CliError("--sigma-a: levels must be non-negative");
    try {
      inv.spec.base.path_loss.validate();
    } catch (const std::invalid_argument& e) {
      throw CliError(std::string("invalid parameters: ") + e.what());
    }
    inv.oracle.samples = r.samples;
    inv.oracle.position_trials = r.trials;
    inv.oracle.seed = r.oracle_seed;
    inv.oracle.u_scale = r.u_scale;
    inv.oracle.sigma_p_levels = r.sigma_p;
    inv.oracle.sigma_a_levels = r.sigma_a;
  }
  return inv;
}

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  switch (inv.subcommand) {
    case Subcommand::kHelp:
      out << inv.help_text;
      return 0;
    case Subcommand::kSimulate: {
      std::filesystem::create_directories(inv.out);
      const auto results = harness::run_sweep(inv.spec);
      harness::emit_results(results, inv.out, inv.emit_svg);
      harness::write_results_csv(out, results);
      return 0;
    }
    case Subcommand::kGenerateTracks: {
      const auto tracks = movement::generate_tracks(inv.spec.base.world, inv.spec.base.flock,
                                                    inv.spec.base.seed);
      std::ofstream os(inv.out, std::ios::binary | std::ios::trunc);
      if (!os) {
        err << "error: cannot write " << inv.out.string() << '\n';
        return 1;
      }
      movement::write_tracks_csv(os, tracks);
      os.flush();
      if (!os) {
        err << "error: failed writing " << inv.out.string() << '\n';
        return 1;
      }
      return 0;
    }
    case Subcommand::kValidateOracles: {
      const auto report = oracle::run_oracles(inv.oracle, inv.spec.base.path_loss);
      oracle::print_report(out, report);
      const bool ok = report.all_passed();
      out << (ok ? "all oracle checks passed\n" : "oracle checks FAILED\n");
      return ok ? 0 : 1;
    }
  }
  return 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_and_validate(argc, argv);
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    return execute(inv, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace grouptrack::cli
