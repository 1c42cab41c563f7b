#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "saac/theory.hpp"

namespace saac::theory {

struct OracleCheck {
  std::string name;
  double expected = 0.0;  // closed form
  OracleResult oracle;
  double deviation = 0.0;  // |oracle - expected| / expected
  bool pass = false;
};

struct ValidationReport {
  std::vector<OracleCheck> checks;
  double tolerance = 0.02;
  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

// Closed form under test; swappable so a broken formula can be shown to fail.
using CaptureTimeFormula = std::function<double(const TheoryInputs&, const SearchGridSpec&)>;

// Grid with M = 25 * 3 = 75 blocks on the default domain: 25 columns, lanes of 2r = 12.
inline SearchGridSpec prop2_grid(const TheoryInputs& in) { return SearchGridSpec::make(in.domain, in.domain.width() / 25.0, 2.0 * in.r); }

/// Compares the Monte Carlo search oracles against the closed forms for both
/// mini-game rosters with and without the repositioning term, then checks that
/// the multi-evader capture time does not depend on N.
inline ValidationReport validate_oracles(std::int64_t trials, std::uint64_t seed, int shards = 1,
                                         CaptureTimeFormula formula = expected_capture_time, double tolerance = 0.02) {
  ValidationReport rep;
  rep.tolerance = tolerance;
  auto add = [&](std::string name, double expected, OracleResult o) {
    OracleCheck c{std::move(name), expected, o, std::abs(o.mean - expected) / expected, false};
    c.pass = c.deviation <= tolerance;
    rep.checks.push_back(std::move(c));
  };

  std::uint64_t stream = 0;
  for (MapId map : {MapId::find_and_defeat_zerglings, MapId::find_and_defeat_drones}) {
    for (bool use_R : {true, false}) {
      const TheoryInputs in = TheoryInputs::for_map(map, use_R, RMode::rounded_length);
      const SearchGridSpec grid = SearchGridSpec::standard(in);
      const double p = capture_probability(block_count(grid, in.domain), 1);
      const OracleResult o = random_block_search_oracle(p, round_time(in, grid), trials, mix_seed(seed, ++stream), shards);
      const std::string unit = map == MapId::find_and_defeat_zerglings ? "marine" : "void_ray";
      add(unit + (use_R ? " with repositioning" : " consecutive traversal"), formula(in, grid), o);
    }
  }

  const TheoryInputs in = TheoryInputs::for_map(MapId::find_and_defeat_drones);
  const SearchGridSpec grid = prop2_grid(in);
  const std::int64_t M = block_count(grid, in.domain);
  const double single = formula(in, grid);
  const std::vector<std::int64_t> sweep{1, 5, 25};
  std::vector<double> means;
  for (std::int64_t N : sweep) {
    const OracleResult o = multi_evader_search_oracle(M, N, round_time(in, grid), trials, mix_seed(seed, ++stream), shards);
    means.push_back(o.mean);
    add("N=" + std::to_string(N) + " evaders, M=" + std::to_string(M), single, o);
  }
  // Mutual agreement across N, independent of any closed form.
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      OracleCheck c;
      c.name = "N=" + std::to_string(sweep[i]) + " vs N=" + std::to_string(sweep[j]);
      c.expected = means[i];
      c.oracle.mean = means[j];
      c.deviation = std::abs(means[j] - means[i]) / means[i];
      c.pass = c.deviation <= tolerance;
      rep.checks.push_back(c);
    }
  }
  return rep;
}

}  // namespace saac::theory
