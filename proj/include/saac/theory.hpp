#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "saac/episode.hpp"
#include "saac/geometry.hpp"
#include "saac/rng.hpp"
#include "saac/units.hpp"

namespace saac::theory {

// How the per-round repositioning distance R is chosen when it is included.
enum class RMode : std::uint8_t {
  diagonal,        // sqrt(l_x^2 + l_y^2)
  rounded_length,  // 1.4 * l_x
};

struct TheoryInputs {
  GameDomain domain{32.0, 32.0};
  double r = 0.0;   // attack range, cells
  double U = 0.0;   // pursuer speed, cells/s
  int N_e = 0;
  int N_p = 0;
  double H_e = 0.0;  // evader hit points
  double dps = 0.0;  // per pursuer
  double T_f = 0.0;
  bool use_R = false;
  RMode r_mode = RMode::diagonal;

  void validate() const {
    if (!(r > 0.0) || !(U > 0.0) || !(H_e > 0.0) || !(dps > 0.0) || !(T_f > 0.0))
      throw std::invalid_argument("theory inputs must be positive");
    if (N_e < 1 || N_p < 1) throw std::invalid_argument("unit counts must be at least 1");
    if (r > domain.width() || r > domain.height()) throw std::invalid_argument("attack range exceeds the domain");
  }

  double R() const {
    return r_mode == RMode::diagonal ? longest_internal_distance(domain) : 1.4 * domain.width();
  }

  // Inputs for an episode configuration's roster.
  static TheoryInputs from_config(const EpisodeConfig& cfg, bool use_R = false, RMode mode = RMode::diagonal) {
    const UnitStats& p = units::by_name(cfg.pursuer_type);
    const UnitStats& e = units::by_name(cfg.evader_type);
    TheoryInputs in;
    in.domain = cfg.domain;
    in.r = p.attack_range;
    in.U = p.speed;
    in.N_e = cfg.num_evaders;
    in.N_p = cfg.num_pursuers;
    in.H_e = e.health_max;
    in.dps = p.dps;
    in.T_f = cfg.final_time;
    in.use_R = use_R;
    in.r_mode = mode;
    return in;
  }

  static TheoryInputs for_map(MapId map, bool use_R = false, RMode mode = RMode::diagonal) {
    return from_config(EpisodeConfig::defaults_for(map), use_R, mode);
  }
};

struct SearchGridSpec {
  double a = 0.0;      // block width along x
  double c = 0.0;      // lane height
  double c_bar = 0.0;  // height of the final (possibly partial) lane

  // a = l_x, c = 2r.
  static SearchGridSpec standard(const TheoryInputs& in) { return make(in.domain, in.domain.width(), 2.0 * in.r); }

  static SearchGridSpec make(const GameDomain& domain, double a, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("lane height must be positive");
    const double lanes = std::ceil(domain.height() / c - 1e-12);
    return {a, c, domain.height() - (lanes - 1.0) * c};
  }

  void validate(const GameDomain& domain, double r) const {
    if (!(a > 0.0) || a > domain.width()) throw std::invalid_argument("block width must lie in (0, l_x]");
    if (!(c > 0.0) || c > 2.0 * r + 1e-12) throw std::invalid_argument("lane height must lie in (0, 2r]");
    if (c_bar > c + 1e-12) throw std::invalid_argument("residual lane exceeds lane height");
  }
};

inline std::int64_t block_count(const SearchGridSpec& spec, const GameDomain& domain) {
  if (!(spec.a > 0.0) || !(spec.c > 0.0)) throw std::invalid_argument("block sides must be positive");
  const double cols = domain.width() / spec.a;
  if (std::abs(cols - std::round(cols)) > 1e-9) throw std::invalid_argument("l_x / a must be an integer");
  const double rows = std::ceil(domain.height() / spec.c - 1e-12);
  return static_cast<std::int64_t>(std::llround(cols)) * static_cast<std::int64_t>(rows);
}

inline double capture_probability(std::int64_t M, std::int64_t N) {
  if (M < 1) throw std::invalid_argument("block count must be at least 1");
  if (N < 1) throw std::invalid_argument("evader count must be at least 1");
  if (N > M) throw std::invalid_argument("more evaders than blocks");
  return std::min(1.0, static_cast<double>(N) / static_cast<double>(M));
}

inline double survival_probability(double p, std::int64_t K) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("p must lie in (0, 1]");
  if (K < 0) throw std::invalid_argument("K must be non-negative");
  return std::pow(1.0 - p, static_cast<double>(K));
}

// Duration of one search round: optional repositioning plus one block sweep.
inline double round_time(const TheoryInputs& in, const SearchGridSpec& spec) {
  return ((in.use_R ? in.R() : 0.0) + spec.a + spec.c) / in.U;
}

inline double expected_capture_time(const TheoryInputs& in, const SearchGridSpec& spec) {
  in.validate();
  spec.validate(in.domain, in.r);
  const double p = capture_probability(block_count(spec, in.domain), 1);
  return round_time(in, spec) / p;
}

inline double expected_capture_time_multi(const TheoryInputs& in, const SearchGridSpec& spec, std::int64_t N) {
  in.validate();
  spec.validate(in.domain, in.r);
  const double p_N = capture_probability(block_count(spec, in.domain), N);
  return static_cast<double>(N) * round_time(in, spec) / p_N;
}

// Time for the whole pursuer team to destroy every evader at point blank.
inline double kill_time(const TheoryInputs& in) { return in.N_e * in.H_e / (in.N_p * in.dps); }

inline double reward_estimate(const TheoryInputs& in, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("capture time must be positive");
  const double T_k = kill_time(in);
  if (T_k >= in.T_f) throw std::domain_error("kill time exceeds the episode length");
  return (in.T_f - T_k) / v * in.N_e;
}

struct TheoryReport {
  std::int64_t M = 0;
  double p = 0.0;
  double round_time = 0.0;
  double v = 0.0;
  double T_k = 0.0;
  double reward = 0.0;
};

inline TheoryReport evaluate(const TheoryInputs& in, const SearchGridSpec& spec) {
  TheoryReport rep;
  rep.M = block_count(spec, in.domain);
  rep.p = capture_probability(rep.M, 1);
  rep.round_time = round_time(in, spec);
  rep.v = expected_capture_time(in, spec);
  rep.T_k = kill_time(in);
  rep.reward = reward_estimate(in, rep.v);
  return rep;
}

inline nlohmann::ordered_json to_json(const TheoryReport& r) {
  return {{"M", r.M}, {"p", r.p}, {"round_time", r.round_time}, {"v", r.v}, {"T_k", r.T_k}, {"reward", r.reward}};
}

inline nlohmann::ordered_json to_json(const TheoryInputs& in) {
  return {{"l_x", in.domain.width()},
          {"l_y", in.domain.height()},
          {"r", in.r},
          {"U", in.U},
          {"N_e", in.N_e},
          {"N_p", in.N_p},
          {"H_e", in.H_e},
          {"dps", in.dps},
          {"T_f", in.T_f},
          {"use_R", in.use_R},
          {"R", in.use_R ? in.R() : 0.0}};
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct OracleResult {
  double mean = 0.0;
  double half_width = 0.0;  // 99% normal approximation
  std::int64_t trials = 0;
};

inline constexpr double kZ99 = 2.5758293035489004;

namespace detail {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  OracleResult result() const {
    OracleResult r;
    r.trials = n;
    r.mean = sum / static_cast<double>(n);
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - sum * r.mean) / static_cast<double>(n - 1));
      r.half_width = kZ99 * std::sqrt(var / static_cast<double>(n));
    }
    return r;
  }
};

// Rounds until the searched block holds an evader; the successful round counts.
inline std::int64_t rounds_to_capture(double p, Rng& rng) {
  std::int64_t k = 1;
  while (!rng.bernoulli(p)) ++k;
  return k;
}

// True when block 0 is among N distinct blocks drawn from M (Floyd's sampling).
inline bool block_zero_occupied(std::int64_t M, std::int64_t N, Rng& rng, std::vector<char>& marks) {
  marks.assign(static_cast<std::size_t>(M), 0);
  for (std::int64_t j = M - N; j < M; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(j + 1)));
    const std::size_t pick = marks[t] ? static_cast<std::size_t>(j) : t;
    if (pick == 0) return true;
    marks[pick] = 1;
  }
  return false;
}

template <class Trial>
OracleResult run_sharded(std::int64_t trials, std::uint64_t seed, int shards, Trial trial) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  shards = static_cast<int>(std::clamp<std::int64_t>(shards, 1, trials));
  std::vector<Moments> parts(static_cast<std::size_t>(shards));
  auto work = [&](int s) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
    const std::int64_t n = trials / shards + (s < trials % shards ? 1 : 0);
    for (std::int64_t i = 0; i < n; ++i) parts[static_cast<std::size_t>(s)].add(trial(rng));
  };
  if (shards == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int s = 0; s < shards; ++s) pool.emplace_back(work, s);
    for (auto& t : pool) t.join();
  }
  Moments total;
  for (const Moments& m : parts) total.merge(m);
  return total.result();
}

}  // namespace detail

inline OracleResult random_block_search_oracle(double p, double round_time, std::int64_t trials, Rng& rng) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("p must lie in (0, 1]");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  detail::Moments m;
  for (std::int64_t i = 0; i < trials; ++i)
    m.add(static_cast<double>(detail::rounds_to_capture(p, rng)) * round_time);
  return m.result();
}

// Same estimate split over independently seeded shards.
inline OracleResult random_block_search_oracle(double p, double round_time, std::int64_t trials, std::uint64_t seed,
                                               int shards) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("p must lie in (0, 1]");
  return detail::run_sharded(trials, seed, shards, [&](Rng& rng) {
    return static_cast<double>(detail::rounds_to_capture(p, rng)) * round_time;
  });
}

// N evaders hide in distinct blocks of M each round; the searcher checks one
// block per round. A trial lasts until N captures have been made.
inline OracleResult multi_evader_search_oracle(std::int64_t M, std::int64_t N, double round_time,
                                               std::int64_t trials, std::uint64_t seed, int shards = 1) {
  capture_probability(M, N);
  return detail::run_sharded(trials, seed, shards, [&](Rng& rng) {
    thread_local std::vector<char> marks;
    std::int64_t rounds = 0;
    for (std::int64_t caught = 0; caught < N;) {
      ++rounds;
      if (detail::block_zero_occupied(M, N, rng, marks)) ++caught;
    }
    return static_cast<double>(rounds) * round_time;
  });
}

}  // namespace saac::theory
