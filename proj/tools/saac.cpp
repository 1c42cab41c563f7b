// saac: run experiments, print the closed-form predictions, validate the
// search oracles, and serve the lockstep protocol.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "saac/experiment.hpp"
#include "saac/session.hpp"
#include "saac/theory.hpp"
#include "saac/validation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitValidation = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string map = "find_and_defeat_zerglings";
  std::string config;  // inline JSON object or a path to one
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--map", o.map, "find_and_defeat_zerglings | find_and_defeat_drones (hyphens and short names accepted)");
  cmd->add_option("--config", o.config, "episode config overrides: inline JSON or a JSON file");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&o](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "base seed; episode i uses seed + i");
}

saac::EpisodeConfig build_config(const CommonOpts& o) {
  saac::EpisodeConfig base;
  try {
    base = saac::EpisodeConfig::defaults_for(saac::parse_map_id(o.map));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  saac::EpisodeConfig cfg = base;
  if (!o.config.empty()) {
    std::string text = o.config;
    if (text.find('{') == std::string::npos) {
      std::ifstream f(o.config);
      if (!f) throw UsageError("cannot read config file " + o.config);
      std::stringstream ss;
      ss << f.rdbuf();
      text = ss.str();
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
      cfg = saac::config_from_json(j, base);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (o.seed_set) cfg.seed = o.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int cmd_run(const CommonOpts& common, const std::string& pursuer, const std::string& evader, int episodes,
            const std::string& csv, int workers, bool wall_clock) {
  saac::ExperimentSpec spec;
  spec.config = build_config(common);
  spec.pursuer = pursuer;
  spec.evader = evader;
  spec.episodes = episodes;
  spec.workers = workers;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto rows = saac::run_experiment(spec);
  if (!csv.empty()) {
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + csv);
    saac::write_csv(f, rows, wall_clock);
  }
  const saac::Summary s = saac::summarize(rows);
  std::cout << "map=" << saac::to_string(spec.config.map_id) << " pursuer=" << pursuer << " evader=" << evader
            << " episodes=" << s.episodes << " seed=" << spec.config.seed << '\n'
            << std::fixed << std::setprecision(3) << "mean_score=" << s.mean_score
            << " stddev=" << s.stddev_score << " mean_capture_time=" << s.mean_capture_time << '\n';
  return kExitOk;
}

int cmd_theory(const CommonOpts& common, bool json) {
  const saac::EpisodeConfig cfg = build_config(common);
  const saac::UnitStats& p = saac::units::by_name(cfg.pursuer_type);
  const saac::UnitStats& e = saac::units::by_name(cfg.evader_type);
  using saac::theory::RMode;
  auto inputs = [&](bool use_R, RMode mode) { return saac::theory::TheoryInputs::from_config(cfg, use_R, mode); };
  struct Row {
    const char* name;
    saac::theory::TheoryInputs in;
  };
  const Row rows[] = {
      {"consecutive", inputs(false, RMode::diagonal)},
      {"repositioning_diagonal", inputs(true, RMode::diagonal)},
      {"repositioning_1.4lx", inputs(true, RMode::rounded_length)},
  };

  nlohmann::ordered_json out;
  out["map_id"] = std::string(saac::to_string(cfg.map_id));
  for (const Row& r : rows) {
    const auto grid = saac::theory::SearchGridSpec::standard(r.in);
    nlohmann::ordered_json j = saac::theory::to_json(saac::theory::evaluate(r.in, grid));
    j["R"] = r.in.use_R ? r.in.R() : 0.0;
    out[r.name] = j;
  }
  if (json) {
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  }
  std::cout << "map " << out["map_id"].get<std::string>() << "  (" << cfg.num_pursuers << " " << p.name << " vs "
            << cfg.num_evaders << " " << e.name << ")\n";
  std::cout << std::left << std::setw(24) << "variant" << std::right << std::setw(5) << "M" << std::setw(8) << "p"
            << std::setw(9) << "R" << std::setw(10) << "v [s]" << std::setw(10) << "T_k [s]" << std::setw(10)
            << "reward" << '\n';
  for (const Row& r : rows) {
    const auto& j = out[r.name];
    std::cout << std::left << std::setw(24) << r.name << std::right << std::setw(5) << j["M"].get<long long>()
              << std::fixed << std::setprecision(4) << std::setw(8) << j["p"].get<double>() << std::setprecision(2)
              << std::setw(9) << j["R"].get<double>() << std::setw(10) << j["v"].get<double>() << std::setw(10)
              << j["T_k"].get<double>() << std::setw(10) << j["reward"].get<double>() << '\n';
  }
  return kExitOk;
}

int cmd_validate(std::int64_t trials, std::uint64_t seed, int shards, bool corrupt) {
  if (trials < 10000) throw UsageError("--trials must be at least 10000");
  saac::theory::CaptureTimeFormula formula = saac::theory::expected_capture_time;
  if (corrupt) {
    // Negative control: forgets to count the successful round.
    formula = [](const saac::theory::TheoryInputs& in, const saac::theory::SearchGridSpec& g) {
      return saac::theory::expected_capture_time(in, g) - saac::theory::round_time(in, g);
    };
  }
  const auto rep = saac::theory::validate_oracles(trials, seed, shards, formula);
  std::cout << std::fixed;
  for (const auto& c : rep.checks) {
    std::cout << (c.pass ? "ok   " : "FAIL ") << std::left << std::setw(36) << c.name << std::right
              << std::setprecision(3) << " expected=" << std::setw(9) << c.expected << " oracle=" << std::setw(9)
              << c.oracle.mean;
    if (c.oracle.half_width > 0) std::cout << " +-" << std::setprecision(3) << c.oracle.half_width;
    std::cout << " dev=" << std::setprecision(2) << 100.0 * c.deviation << "%\n";
  }
  std::cout << (rep.pass() ? "all checks within " : "checks exceeded ") << std::setprecision(0)
            << 100.0 * rep.tolerance << "%\n";
  return rep.pass() ? kExitOk : kExitValidation;
}

int cmd_serve(const CommonOpts& common, const std::string& pursuer, const std::string& evader, int episodes,
              const std::string& host, int port, bool stdio, int timeout_ms, int sessions) {
  const saac::EpisodeConfig cfg = build_config(common);
  saac::session::SessionOptions opts;
  opts.episodes = episodes;
  opts.action_timeout_ms = timeout_ms;
  saac::session::ServeOptions sopts;
  sopts.host = host;
  sopts.port = port;
  sopts.stdio = stdio;
  sopts.max_sessions = sessions;
  try {
    saac::session::Session probe(cfg, pursuer, evader, opts);
    if (stdio && probe.is_remote(saac::Team::pursuer) == probe.is_remote(saac::Team::evader))
      throw UsageError("--stdio needs exactly one of --pursuer/--evader set to socket");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  saac::session::serve(cfg, pursuer, evader, opts, sopts, &std::cerr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Pursuit-evasion mini-game simulator"};
  app.require_subcommand(1);

  CommonOpts run_common;
  std::string run_pursuer = "traversal", run_evader = "builtin", run_csv;
  int run_episodes = 1, run_workers = 1;
  bool run_wall = false;
  auto* run = app.add_subcommand("run", "play episodes and summarize the scores");
  add_common(run, run_common);
  run->add_option("--pursuer", run_pursuer, "pursuer agent (traversal)");
  run->add_option("--evader", run_evader, "evader agent (builtin | random | cluster | stationary)");
  run->add_option("--episodes", run_episodes, "number of episodes")->check(CLI::PositiveNumber);
  run->add_option("--csv", run_csv, "write one row per episode");
  run->add_option("--workers", run_workers, "episodes played concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--wall-clock", run_wall, "fill the wall_ms column (breaks byte-for-byte reproducibility)");

  CommonOpts th_common;
  bool th_json = false;
  auto* theory = app.add_subcommand("theory", "closed-form capture time and expected score");
  add_common(theory, th_common);
  theory->add_flag("--json", th_json, "emit JSON");

  std::int64_t val_trials = 100000;
  std::uint64_t val_seed = 1;
  int val_shards = static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
  bool val_corrupt = false;
  auto* validate = app.add_subcommand("validate", "check the Monte Carlo oracles against the closed forms");
  validate->add_option("--trials", val_trials, "trials per check (>= 10000)");
  validate->add_option("--seed", val_seed, "oracle seed");
  validate->add_option("--shards", val_shards, "independently seeded worker threads")->check(CLI::PositiveNumber);
  validate->add_flag("--corrupt-formula", val_corrupt, "negative control: validate against a broken closed form");

  CommonOpts sv_common;
  std::string sv_pursuer = "traversal", sv_evader = "socket", sv_host = "127.0.0.1";
  int sv_port = 5000, sv_episodes = 1, sv_timeout = 1000, sv_sessions = 0;
  bool sv_stdio = false;
  auto* serve = app.add_subcommand("serve", "run the lockstep protocol server");
  add_common(serve, sv_common);
  serve->add_option("--pursuer", sv_pursuer, "pursuer agent, or socket for a remote peer");
  serve->add_option("--evader", sv_evader, "evader agent, or socket for a remote peer");
  serve->add_option("--episodes", sv_episodes, "episodes per session")->check(CLI::PositiveNumber);
  serve->add_option("--host", sv_host, "bind address");
  serve->add_option("--port", sv_port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_flag("--stdio", sv_stdio, "talk to a single peer over stdin/stdout");
  serve->add_option("--timeout-ms", sv_timeout, "per-step action timeout")->check(CLI::PositiveNumber);
  serve->add_option("--sessions", sv_sessions, "stop after this many sessions (0: unlimited)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_common, run_pursuer, run_evader, run_episodes, run_csv, run_workers, run_wall);
    if (*theory) return cmd_theory(th_common, th_json);
    if (*validate) return cmd_validate(val_trials, val_seed, val_shards, val_corrupt);
    if (*serve)
      return cmd_serve(sv_common, sv_pursuer, sv_evader, sv_episodes, sv_host, sv_port, sv_stdio, sv_timeout,
                       sv_sessions);
  } catch (const UsageError& e) {
    std::cerr << "saac: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "saac: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
