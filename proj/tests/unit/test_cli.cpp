#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "grouptrack/cli.hpp"
#include "grouptrack/config.hpp"

using namespace grouptrack;
using namespace grouptrack::cli;

namespace {

struct Argv {
  std::vector<std::string> store;
  std::vector<const char*> ptrs;
  explicit Argv(std::initializer_list<std::string> args) : store(args) {
    store.insert(store.begin(), "grouptrack");
    for (const auto& s : store) ptrs.push_back(s.c_str());
  }
  int argc() const { return static_cast<int>(ptrs.size()); }
  const char* const* argv() const { return ptrs.data(); }
};

CliInvocation parse(std::initializer_list<std::string> args) {
  const Argv a(args);
  return parse_and_validate(a.argc(), a.argv());
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("grouptrack_cli_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

}  // namespace

TEST_CASE("interval ranges") {
  CHECK(parse_intervals("5:50:5") == std::vector<std::int64_t>{5, 10, 15, 20, 25, 30, 35, 40, 45, 50});
  CHECK(parse_intervals("5:50:7") == std::vector<std::int64_t>{5, 12, 19, 26, 33, 40, 47});
  CHECK(parse_intervals("10") == std::vector<std::int64_t>{10});
  CHECK(parse_intervals("5,20,7") == std::vector<std::int64_t>{5, 20, 7});
  for (const char* bad : {"5:50", "5:50:0", "0:10:5", "50:5:5", "a", "5,,10", "-5", "5:x:1", ""})
    CHECK_THROWS_AS(parse_intervals(bad), CliError);
}

TEST_CASE("simulate invocation") {
  TempDir dir("sim");
  const auto inv = parse({"simulate", "--scenario", "a", "--algorithm", "all", "--seed", "1",
                          "--out", (dir.path / "r").string()});
  CHECK(inv.subcommand == Subcommand::kSimulate);
  CHECK(inv.spec.scenarios == std::vector<harness::ScenarioId>{harness::ScenarioId::kA});
  CHECK(inv.spec.algorithms.size() == 4);
  CHECK(inv.spec.base.sampling_intervals.size() == 10);
  CHECK(inv.spec.base.seed == 1);
  CHECK(inv.run_logs);
  CHECK(inv.spec.log_dir == dir.path / "r");
  CHECK_FALSE(std::filesystem::exists(dir.path / "r"));

  const auto quiet = parse({"simulate", "--out", (dir.path / "r").string(), "--intervals",
                            "5:50:7", "--no-run-logs", "--emit-svg", "--jobs", "2"});
  CHECK(quiet.spec.base.sampling_intervals.size() == 7);
  CHECK(quiet.spec.scenarios.size() == 4);
  CHECK_FALSE(quiet.run_logs);
  CHECK_FALSE(quiet.spec.log_dir.has_value());
  CHECK(quiet.emit_svg);
  CHECK(quiet.spec.jobs == 2);
}

TEST_CASE("bad scenario names the valid choices") {
  TempDir dir("bad");
  try {
    parse({"simulate", "--scenario", "z", "--out", dir.path.string()});
    FAIL("expected an error");
  } catch (const CliError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("z") != std::string::npos);
    for (const char* choice : {"a", "b", "c", "d", "all"})
      CHECK(msg.find(choice) != std::string::npos);
  }
  CHECK_THROWS_AS(parse({"simulate", "--algorithm", "kalman", "--out", dir.path.string()}),
                  CliError);
  CHECK_THROWS_AS(parse({"simulate"}), CliError);
  CHECK_THROWS_AS(parse({}), CliError);
  CHECK_THROWS_AS(parse({"simulate", "--out", dir.write("file", "x").string()}), CliError);
}

TEST_CASE("config files feed the invocation") {
  TempDir dir("cfg");
  const auto good = dir.write("good.cfg",
                              "# comment\n"
                              "world.n_nodes = 12   # trailing\n"
                              "tracker.comm_range=80\n"
                              "world.living_area_1 = 2000, 3000, 400\n"
                              "scenario.sigma_p = 2.5\n");
  const auto inv = parse({"simulate", "--out", (dir.path / "o").string(), "--config", good.string()});
  CHECK(inv.spec.base.world.n_nodes == 12);
  CHECK(inv.spec.base.tracker.comm_range == 80.0);
  CHECK(inv.spec.base.world.living_areas[0].center == Vec2(2000, 3000));
  CHECK(inv.spec.base.world.living_areas[0].radius == 400.0);
  CHECK(inv.spec.sigma_p_override == 2.5);
  CHECK(inv.config_path == good);

  const auto unknown = dir.write("unknown.cfg", "world.n_nodes = 3\nworld.colour = blue\n");
  try {
    parse({"simulate", "--out", (dir.path / "o").string(), "--config", unknown.string()});
    FAIL("expected an error");
  } catch (const CliError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("world.colour") != std::string::npos);
  }
  const auto invalid = dir.write("invalid.cfg", "tracker.comm_range = -3\n");
  CHECK_THROWS_AS(
      parse({"simulate", "--out", (dir.path / "o").string(), "--config", invalid.string()}),
      CliError);
  CHECK_THROWS_AS(parse({"simulate", "--out", (dir.path / "o").string(), "--config",
                         (dir.path / "missing.cfg").string()}),
                  CliError);
  CHECK_FALSE(std::filesystem::exists(dir.path / "o"));
}

TEST_CASE("config text parsing") {
  auto spec = config::default_spec();
  config::apply_config_text(spec, "energy.gps_fix_time = 2.5\nflock.w_goal=0.7\n");
  CHECK(spec.base.energy.gps_fix_time == 2.5);
  CHECK(spec.base.flock.w_goal == 0.7);
  CHECK_THROWS_AS(config::apply_config_text(spec, "flock.w_goal = 1\nflock.w_goal = 2\n"),
                  config::ConfigError);
  CHECK_THROWS_AS(config::apply_config_text(spec, "flock.w_goal\n"), config::ConfigError);
  CHECK_THROWS_AS(config::apply_config_text(spec, "flock.w_goal = fast\n"), config::ConfigError);
  CHECK_THROWS_AS(config::apply_config_text(spec, "world.n_nodes = 2.5\n"), config::ConfigError);
  CHECK_THROWS_AS(config::apply_config_text(spec, "world.foraging_area = 1,2\n"),
                  config::ConfigError);
  CHECK_THROWS_AS(config::apply_config_text(spec, "channel.eta = inf\n"), config::ConfigError);
}

TEST_CASE("every key round-trips through its own default") {
  const auto defaults = config::default_spec();
  for (const auto& key : config::config_keys()) {
    CAPTURE(key.name);
    auto spec = defaults;
    const std::string value = key.get(defaults);
    if (value == "scenario preset") continue;
    CHECK_NOTHROW(key.set(spec, value));
    CHECK(key.get(spec) == value);
  }
}

TEST_CASE("help lists every config key") {
  const std::string help = help_text();
  for (const auto& key : config::config_keys()) {
    CAPTURE(key.name);
    CHECK(help.find(key.name) != std::string::npos);
  }
  for (const char* flag : {"simulate", "generate-tracks", "validate-oracles", "--scenario",
                           "--algorithm", "--intervals", "--seed", "--out", "--emit-svg",
                           "--config", "--u-scale"})
    CHECK(help.find(flag) != std::string::npos);

  const auto inv = parse({"--help"});
  CHECK(inv.subcommand == Subcommand::kHelp);
  for (const auto& key : config::config_keys()) CHECK(inv.help_text.find(key.name) != std::string::npos);
  const auto sub = parse({"simulate", "--help"});
  CHECK(sub.subcommand == Subcommand::kHelp);
  for (const auto& key : config::config_keys()) CHECK(sub.help_text.find(key.name) != std::string::npos);
}

TEST_CASE("the documented keys cover the main parameters") {
  std::string names;
  for (const auto& key : config::config_keys()) names += key.name + "\n";
  for (const char* k : {"world.n_nodes", "world.duration", "world.max_speed",
                        "world.foraging_area", "flock.rw_step_sigma", "channel.eta", "channel.p0",
                        "channel.d0", "energy.gps_power", "energy.misc_energy",
                        "tracker.cluster_threshold", "tracker.n_anchors", "tracker.comm_range",
                        "scenario.sigma_p", "scenario.sigma_a_high"})
    CHECK(names.find(std::string(k) + "\n") != std::string::npos);
}

TEST_CASE("main entry exit codes") {
  TempDir dir("main");
  std::ostringstream out, err;

  const Argv bad({"simulate", "--scenario", "z", "--out", dir.path.string()});
  CHECK(main_entry(bad.argc(), bad.argv(), out, err) == 2);
  CHECK(err.str().find("error") != std::string::npos);

  const auto cfg = dir.write("small.cfg", "world.n_nodes = 6\nworld.duration = 300\n");
  const auto out_dir = dir.path / "run";
  const Argv sim({"simulate", "--scenario", "b", "--algorithm", "cbt", "--intervals", "10,20",
                  "--out", out_dir.string(), "--config", cfg.string(), "--emit-svg", "--jobs", "1"});
  out.str("");
  CHECK(main_entry(sim.argc(), sim.argv(), out, err) == 0);
  CHECK(std::filesystem::exists(out_dir / "results.csv"));
  CHECK(std::filesystem::exists(out_dir / "results_b.svg"));
  CHECK(std::filesystem::exists(out_dir / "runs" / "b_cbt_10" / "estimates.csv"));
  CHECK(std::filesystem::exists(out_dir / "runs" / "b_cbt_20" / "events.csv"));
  CHECK(out.str().rfind("scenario,algorithm,interval_s", 0) == 0);

  const auto tracks = dir.path / "tracks.csv";
  const Argv gen({"generate-tracks", "--out", tracks.string(), "--config", cfg.string()});
  CHECK(main_entry(gen.argc(), gen.argv(), out, err) == 0);
  std::ifstream is(tracks);
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,node_id,x,y");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 6 * 301);

  const Argv oracles({"validate-oracles", "--samples", "20000", "--trials", "100"});
  out.str("");
  const int code = main_entry(oracles.argc(), oracles.argv(), out, err);
  CHECK((code == 0 || code == 1));
  CHECK(out.str().find("Var(d~^2)") != std::string::npos);

  const Argv corrupted({"validate-oracles", "--samples", "20000", "--trials", "100",
                        "--u-scale", "3"});
  out.str("");
  CHECK(main_entry(corrupted.argc(), corrupted.argv(), out, err) == 1);
  CHECK(out.str().find("FAIL  E[d~^2] bias correction") != std::string::npos);
}
