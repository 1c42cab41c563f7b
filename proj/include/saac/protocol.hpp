#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "saac/episode.hpp"

namespace saac::protocol {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxLineBytes = std::size_t{1} << 20;

using Json = nlohmann::ordered_json;

// Raised for frames that cannot be decoded. `offset` is the byte position in
// the line where decoding gave up.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Hello {
  Team role = Team::pursuer;
  int protocol_version = kProtocolVersion;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct ConfigMsg {
  EpisodeConfig config;
  friend bool operator==(const ConfigMsg&, const ConfigMsg&) = default;
};

struct ObsMsg {
  int episode = 0;
  int step = 0;
  Observation obs;
  friend bool operator==(const ObsMsg&, const ObsMsg&) = default;
};

// The action as sent by the agent; checked against the vocabulary with to_action().
struct Act {
  std::string name;
  std::optional<int> x;
  std::optional<int> y;
  friend bool operator==(const Act&, const Act&) = default;

  static Act from(const Action& a) {
    Act m{std::string(to_string(a.type)), std::nullopt, std::nullopt};
    if (takes_coordinates(a.type)) {
      m.x = a.x;
      m.y = a.y;
    }
    return m;
  }
};

struct Result {
  std::int64_t reward = 0;
  bool done = false;
  std::int64_t score = 0;
  friend bool operator==(const Result&, const Result&) = default;
};

struct EpisodeEnd {
  std::int64_t score = 0;
  std::int64_t kills = 0;
  double duration = 0.0;  // simulated seconds
  friend bool operator==(const EpisodeEnd&, const EpisodeEnd&) = default;
};

struct Error {
  std::string code;
  std::string detail;
  friend bool operator==(const Error&, const Error&) = default;
};

using Message = std::variant<Hello, ConfigMsg, ObsMsg, Act, Result, EpisodeEnd, Error>;

inline std::string_view to_string(Team t) { return t == Team::pursuer ? "pursuer" : "evader"; }

inline std::optional<Team> parse_team(std::string_view s) {
  if (s == "pursuer") return Team::pursuer;
  if (s == "evader") return Team::evader;
  return std::nullopt;
}

// Validates an act against the team's vocabulary. On failure returns nullopt
// and fills `why`.
inline std::optional<Action> to_action(const Act& m, Team team, std::string* why = nullptr) {
  auto fail = [&](std::string msg) -> std::optional<Action> {
    if (why) *why = std::move(msg);
    return std::nullopt;
  };
  const std::optional<ActionType> t = parse_action_type(m.name);
  if (!t) return fail("unknown action '" + m.name + "'");
  if (!allowed_for(team, *t)) return fail(m.name + " is not available to the " + std::string(to_string(team)));
  if (takes_coordinates(*t)) {
    if (!m.x || !m.y) return fail(m.name + " requires x and y");
    return Action{*t, *m.x, *m.y};
  }
  return Action{*t, 0, 0};
}

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

namespace detail {

inline Json grid_to_json(const Grid& g) {
  Json rows = Json::array();
  for (int y = 0; y < g.height; ++y) {
    Json row = Json::array();
    for (int x = 0; x < g.width; ++x) row.push_back(g.at(x, y));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Grid grid_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("grid must be an array of rows");
  const int h = static_cast<int>(j.size());
  const int w = h > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Grid g(w, h);
  for (int y = 0; y < h; ++y) {
    const Json& row = j.at(static_cast<std::size_t>(y));
    if (!row.is_array() || static_cast<int>(row.size()) != w) throw std::invalid_argument("ragged grid");
    for (int x = 0; x < w; ++x) g.at(x, y) = row.at(static_cast<std::size_t>(x)).get<std::int32_t>();
  }
  return g;
}

inline Json layers_to_json(const FeatureLayers& l) {
  return {{"fog", grid_to_json(l.fog)}, {"own", grid_to_json(l.own)}, {"enemy", grid_to_json(l.enemy)}};
}

inline FeatureLayers layers_from_json(const Json& j) {
  return {grid_from_json(j.at("fog")), grid_from_json(j.at("own")), grid_from_json(j.at("enemy"))};
}

inline Team team_from_json(const Json& j) {
  const auto t = parse_team(j.get<std::string>());
  if (!t) throw std::invalid_argument("role must be pursuer or evader");
  return *t;
}

}  // namespace detail

inline Json observation_to_json(const Observation& o) {
  const Scalars& s = o.scalars;
  Json j;
  j["role"] = std::string(to_string(o.team));
  j["minimap"] = detail::layers_to_json(o.minimap);
  j["screen"] = detail::layers_to_json(o.screen);
  j["scalars"] = {{"clock", s.clock},
                  {"kills", s.kills},
                  {"own_alive", s.own_alive},
                  {"enemy_alive", s.enemy_alive},
                  {"step", s.step},
                  {"camera", {{"x", s.camera.x}, {"y", s.camera.y}}},
                  {"selected", s.selected}};
  j["available_actions"] = o.available_actions;
  return j;
}

inline Observation observation_from_json(const Json& j) {
  Observation o;
  o.team = detail::team_from_json(j.at("role"));
  o.minimap = detail::layers_from_json(j.at("minimap"));
  o.screen = detail::layers_from_json(j.at("screen"));
  const Json& s = j.at("scalars");
  o.scalars.clock = s.at("clock").get<double>();
  o.scalars.kills = s.at("kills").get<std::int64_t>();
  o.scalars.own_alive = s.at("own_alive").get<int>();
  o.scalars.enemy_alive = s.at("enemy_alive").get<int>();
  o.scalars.step = s.at("step").get<int>();
  o.scalars.camera = {s.at("camera").at("x").get<int>(), s.at("camera").at("y").get<int>()};
  o.scalars.selected = s.at("selected").get<bool>();
  o.available_actions = j.at("available_actions").get<std::vector<std::string>>();
  return o;
}

inline Json to_json(const Message& m) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        Json j;
        if constexpr (std::is_same_v<T, Hello>) {
          j["type"] = "hello";
          j["role"] = std::string(to_string(v.role));
          j["protocol_version"] = v.protocol_version;
        } else if constexpr (std::is_same_v<T, ConfigMsg>) {
          j["type"] = "config";
          j["config"] = saac::to_json(v.config);
        } else if constexpr (std::is_same_v<T, ObsMsg>) {
          j["type"] = "obs";
          j["episode"] = v.episode;
          j["step"] = v.step;
          j.update(observation_to_json(v.obs));
        } else if constexpr (std::is_same_v<T, Act>) {
          j["type"] = "act";
          j["name"] = v.name;
          if (v.x) j["x"] = *v.x;
          if (v.y) j["y"] = *v.y;
        } else if constexpr (std::is_same_v<T, Result>) {
          j["type"] = "result";
          j["reward"] = v.reward;
          j["done"] = v.done;
          j["score"] = v.score;
        } else if constexpr (std::is_same_v<T, EpisodeEnd>) {
          j["type"] = "episode_end";
          j["score"] = v.score;
          j["kills"] = v.kills;
          j["duration"] = v.duration;
        } else {
          j["type"] = "error";
          j["code"] = v.code;
          j["detail"] = v.detail;
        }
        return j;
      },
      m);
}

inline Message from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("frame must be a JSON object");
  const std::string type = j.at("type").get<std::string>();
  if (type == "hello") return Hello{detail::team_from_json(j.at("role")), j.at("protocol_version").get<int>()};
  if (type == "config") return ConfigMsg{config_from_json(j.at("config"))};
  if (type == "obs") return ObsMsg{j.at("episode").get<int>(), j.at("step").get<int>(), observation_from_json(j)};
  if (type == "act") {
    Act a{j.at("name").get<std::string>(), std::nullopt, std::nullopt};
    if (j.contains("x")) a.x = j.at("x").get<int>();
    if (j.contains("y")) a.y = j.at("y").get<int>();
    return a;
  }
  if (type == "result")
    return Result{j.at("reward").get<std::int64_t>(), j.at("done").get<bool>(), j.at("score").get<std::int64_t>()};
  if (type == "episode_end")
    return EpisodeEnd{j.at("score").get<std::int64_t>(), j.at("kills").get<std::int64_t>(),
                      j.at("duration").get<double>()};
  if (type == "error") return Error{j.at("code").get<std::string>(), j.value("detail", std::string{})};
  throw std::invalid_argument("unknown frame type '" + type + "'");
}

/// One frame: compact JSON plus the LF terminator.
inline std::string encode(const Message& m) { return to_json(m).dump() + '\n'; }

/// Accepts a line with or without its trailing LF.
inline Message decode(std::string_view line) {
  if (line.size() > kMaxLineBytes + 1 || (line.size() == kMaxLineBytes + 1 && line.back() != '\n'))
    throw ProtocolError("frame exceeds " + std::to_string(kMaxLineBytes) + " bytes", kMaxLineBytes);
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("invalid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed frame: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(std::string("malformed frame: ") + e.what(), 0);
  }
}

}  // namespace saac::protocol
