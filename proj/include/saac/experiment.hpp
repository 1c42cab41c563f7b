#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "saac/agents.hpp"
#include "saac/episode.hpp"

namespace saac {

// One line per decision step; the digest fingerprints the world after the step.
class EpisodeLog {
 public:
  void record(int step, const Action& p, const Action& e, const StepResult& r, std::uint64_t digest) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(digest));
    std::ostringstream os;
    os << step << ' ' << describe(p) << ' ' << describe(e) << ' ' << r.reward_pursuer << ' ' << r.episode_score
       << ' ' << (r.done ? 1 : 0) << ' ' << hex;
    lines_.push_back(os.str());
  }

  const std::vector<std::string>& lines() const { return lines_; }

  std::string text() const {
    std::string out;
    for (const std::string& l : lines_) out += l + '\n';
    return out;
  }

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;

 private:
  std::vector<std::string> lines_;
};

struct EpisodeOutcome {
  std::int64_t score = 0;
  int pursuers_surviving = 0;
  double duration = 0.0;  // simulated seconds
  int steps = 0;
};

/// Plays one episode in-process with both slots driven by local agents.
inline EpisodeOutcome play_episode(Episode& episode, Agent& pursuer, Agent& evader, EpisodeLog* log = nullptr) {
  auto [obs_p, obs_e] = episode.reset();
  while (!episode.done()) {
    const Action ap = pursuer.act(obs_p);
    const Action ae = evader.act(obs_e);
    const int step = episode.step_index();
    StepResult r = episode.step(ap, ae);
    if (log) log->record(step, ap, ae, r, world_digest(episode.world()));
    obs_p = std::move(r.obs_pursuer);
    obs_e = std::move(r.obs_evader);
  }
  return {episode.score(), episode.world().alive_count(Team::pursuer), episode.world().clock, episode.step_index()};
}

inline EpisodeOutcome play_episode(EpisodeConfig config, std::string_view pursuer_name,
                                   std::string_view evader_name, EpisodeLog* log = nullptr) {
  auto pursuer = make_agent(pursuer_name, Team::pursuer, config, config.seed);
  auto evader = make_agent(evader_name, Team::evader, config, config.seed);
  Episode episode(std::move(config));
  episode.set_evader_reflexes(wants_evader_reflexes(evader_name));
  return play_episode(episode, *pursuer, *evader, log);
}

// ---------------------------------------------------------------------------
// Batch runs
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  EpisodeConfig config;  // config.seed is the base seed; episode i uses seed + i
  std::string pursuer = "traversal";
  std::string evader = "builtin";
  int episodes = 1;
  int workers = 1;       // episodes run concurrently; rows stay in episode order
  std::string csv_path;  // empty: no CSV

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (!is_registered(Team::pursuer, pursuer)) throw std::invalid_argument("unknown pursuer agent: " + pursuer);
    if (!is_registered(Team::evader, evader)) throw std::invalid_argument("unknown evader agent: " + evader);
    config.validate();
  }
};

struct EpisodeRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::int64_t score = 0;
  double capture_time = 0.0;  // t_f / score, +inf when nothing was captured
  int pursuers_surviving = 0;
  double wall_ms = 0.0;
};

struct Summary {
  int episodes = 0;
  double mean_score = 0.0;
  double stddev_score = 0.0;  // sample standard deviation
  double mean_capture_time = 0.0;  // over episodes with at least one capture
};

inline Summary summarize(const std::vector<EpisodeRecord>& rows) {
  Summary s;
  s.episodes = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  double sum = 0.0;
  for (const auto& r : rows) sum += static_cast<double>(r.score);
  s.mean_score = sum / rows.size();
  double ss = 0.0;
  for (const auto& r : rows) ss += (r.score - s.mean_score) * (r.score - s.mean_score);
  s.stddev_score = rows.size() > 1 ? std::sqrt(ss / (rows.size() - 1)) : 0.0;
  double vsum = 0.0;
  int vn = 0;
  for (const auto& r : rows) {
    if (std::isfinite(r.capture_time)) {
      vsum += r.capture_time;
      ++vn;
    }
  }
  s.mean_capture_time = vn > 0 ? vsum / vn : std::numeric_limits<double>::infinity();
  return s;
}

inline constexpr const char* kCsvHeader = "episode,seed,score,capture_time,pursuers_surviving,wall_ms";

// Wall-clock time is excluded from the reproducible columns: it is written
// only when `include_wall_clock` is set, otherwise the column holds 0.
inline void write_csv(std::ostream& os, const std::vector<EpisodeRecord>& rows, bool include_wall_clock = false) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.index << ',' << r.seed << ',' << r.score << ',';
    if (std::isfinite(r.capture_time)) {
      os << std::fixed << std::setprecision(6) << r.capture_time;
    } else {
      os << "inf";
    }
    os << ',' << r.pursuers_surviving << ',' << std::fixed << std::setprecision(3)
       << (include_wall_clock ? r.wall_ms : 0.0) << '\n';
    os.unsetf(std::ios::floatfield);
  }
}

inline EpisodeRecord run_one(const ExperimentSpec& spec, int i) {
  EpisodeConfig cfg = spec.config;
  cfg.seed = spec.config.seed + static_cast<std::uint64_t>(i);
  const auto t0 = std::chrono::steady_clock::now();
  const EpisodeOutcome out = play_episode(cfg, spec.pursuer, spec.evader);
  const auto t1 = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  rec.index = i;
  rec.seed = cfg.seed;
  rec.score = out.score;
  rec.capture_time = empirical_capture_time(out.score, out.duration);
  rec.pursuers_surviving = out.pursuers_surviving;
  rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

inline std::vector<EpisodeRecord> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<EpisodeRecord> rows(static_cast<std::size_t>(spec.episodes));
  const int workers = std::min(spec.workers, spec.episodes);
  if (workers == 1) {
    for (int i = 0; i < spec.episodes; ++i) rows[static_cast<std::size_t>(i)] = run_one(spec, i);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < spec.episodes; i = next++) {
          try {
            rows[static_cast<std::size_t>(i)] = run_one(spec, i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  if (!spec.csv_path.empty()) {
    std::ofstream f(spec.csv_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + spec.csv_path);
    write_csv(f, rows);
  }
  return rows;
}

}  // namespace saac
