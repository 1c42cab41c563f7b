#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "saac/agents.hpp"
#include "saac/episode.hpp"
#include "saac/experiment.hpp"
#include "saac/protocol.hpp"
#include "saac/transport.hpp"

namespace saac::session {

using transport::FdChannel;
using transport::ReadStatus;

// Agent name that marks a slot as driven over the wire.
inline constexpr const char* kRemoteAgent = "socket";

struct SessionOptions {
  int action_timeout_ms = 1000;
  int handshake_timeout_ms = 30000;
  int episodes = 1;  // episode i runs with config.seed + i
};

struct EpisodeReport {
  EpisodeOutcome outcome;
  bool aborted = false;  // a remote peer disappeared mid-episode
};

/// One lockstep session: a pursuer slot and an evader slot, each bound either
/// to a scripted agent or to a remote peer.
class Session {
 public:
  Session(EpisodeConfig config, std::string pursuer_agent, std::string evader_agent, SessionOptions opts = {})
      : config_(std::move(config)), opts_(opts) {
    config_.validate();
    if (opts_.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    slot(Team::pursuer).agent_name = std::move(pursuer_agent);
    slot(Team::evader).agent_name = std::move(evader_agent);
    for (Team t : {Team::pursuer, Team::evader}) {
      const std::string& n = slot(t).agent_name;
      if (n != kRemoteAgent && !is_registered(t, n))
        throw std::invalid_argument("unknown " + std::string(protocol::to_string(t)) + " agent: " + n);
    }
  }

  const EpisodeConfig& config() const { return config_; }
  const SessionOptions& options() const { return opts_; }

  bool is_remote(Team t) const { return slot(t).agent_name == kRemoteAgent; }
  bool open_slot(Team t) const { return is_remote(t) && !slot(t).channel; }
  bool ready() const { return !open_slot(Team::pursuer) && !open_slot(Team::evader); }

  // Reads the peer's hello and binds it to the requested slot. On rejection
  // the peer receives an error frame and the channel is dropped. Returns the
  // claimed team.
  std::optional<Team> handshake(std::unique_ptr<FdChannel> ch) {
    auto reject = [&](const std::string& code, const std::string& detail) -> std::optional<Team> {
      ch->send(protocol::Error{code, detail});
      return std::nullopt;
    };
    const transport::ReadResult r = ch->read_line(opts_.handshake_timeout_ms);
    if (r.status == ReadStatus::timeout) return reject("timeout", "no hello within handshake timeout");
    if (r.status != ReadStatus::line) return reject("bad_hello", "expected a hello frame");
    protocol::Message m;
    try {
      m = protocol::decode(r.line);
    } catch (const protocol::ProtocolError& e) {
      return reject("bad_hello", e.what());
    }
    const auto* hello = std::get_if<protocol::Hello>(&m);
    if (!hello) return reject("bad_hello", "expected a hello frame");
    if (hello->protocol_version != protocol::kProtocolVersion)
      return reject("version_mismatch", "server speaks protocol_version " + std::to_string(protocol::kProtocolVersion));
    if (!open_slot(hello->role))
      return reject("slot_taken", std::string(protocol::to_string(hello->role)) + " slot is not available");
    slot(hello->role).channel = std::move(ch);
    return hello->role;
  }

  // Binds a channel without a handshake (the caller has already vetted it).
  void attach(Team t, std::unique_ptr<FdChannel> ch) {
    if (!open_slot(t)) throw std::logic_error("slot is not open");
    slot(t).channel = std::move(ch);
  }

  // Plays every configured episode. `logs`, when given, receives one log per
  // episode in the same format as the in-process runner.
  std::vector<EpisodeReport> run(std::vector<EpisodeLog>* logs = nullptr) {
    if (!ready()) throw std::logic_error("session started with an unbound slot");
    std::vector<EpisodeReport> out;
    for (int i = 0; i < opts_.episodes; ++i) {
      EpisodeLog log;
      const EpisodeReport rep = run_episode(i, logs ? &log : nullptr);
      out.push_back(rep);
      if (logs) logs->push_back(std::move(log));
      if (rep.aborted) break;
    }
    for (Team t : {Team::pursuer, Team::evader}) slot(t).channel.reset();
    return out;
  }

  // Counters for the error frames sent to each slot, keyed by code.
  int errors_sent(Team t, const std::string& code) const {
    int n = 0;
    for (const auto& c : slot(t).errors) n += c == code;
    return n;
  }

 private:
  struct Slot {
    std::string agent_name;
    std::unique_ptr<FdChannel> channel;
    std::unique_ptr<Agent> agent;
    std::vector<std::string> errors;
    bool lost = false;
  };

  Slot& slot(Team t) { return slots_[t == Team::pursuer ? 0 : 1]; }
  const Slot& slot(Team t) const { return slots_[t == Team::pursuer ? 0 : 1]; }

  bool send(Team t, const protocol::Message& m) {
    Slot& s = slot(t);
    if (!s.channel || s.lost) return false;
    if (!s.channel->send(m)) s.lost = true;
    return !s.lost;
  }

  void notify(Team t, const std::string& code, const std::string& detail) {
    slot(t).errors.push_back(code);
    send(t, protocol::Error{code, detail});
  }

  EpisodeReport run_episode(int index, EpisodeLog* log) {
    EpisodeConfig cfg = config_;
    cfg.seed = config_.seed + static_cast<std::uint64_t>(index);
    Episode episode(cfg);
    episode.set_evader_reflexes(wants_evader_reflexes(slot(Team::evader).agent_name));
    for (Team t : {Team::pursuer, Team::evader}) {
      Slot& s = slot(t);
      if (is_remote(t)) {
        send(t, protocol::ConfigMsg{cfg});
      } else {
        s.agent = make_agent(s.agent_name, t, cfg, cfg.seed);
      }
    }

    auto [obs_p, obs_e] = episode.reset();
    bool aborted = false;
    while (!episode.done()) {
      std::optional<StepResult> r = lockstep_round(index, episode, obs_p, obs_e, log);
      if (!r) {
        aborted = true;
        break;
      }
      obs_p = std::move(r->obs_pursuer);
      obs_e = std::move(r->obs_evader);
    }

    const EpisodeOutcome outcome{episode.score(), episode.world().alive_count(Team::pursuer), episode.world().clock,
                                 episode.step_index()};
    for (Team t : {Team::pursuer, Team::evader})
      if (is_remote(t)) send(t, protocol::EpisodeEnd{outcome.score, episode.world().kills, outcome.duration});
    return {outcome, aborted};
  }

  // One decision step: obs out to both slots, one act back from each, engine
  // step, result out. Returns nullopt when a remote peer was lost.
  std::optional<StepResult> lockstep_round(int episode_index, Episode& episode, const Observation& obs_p,
                                           const Observation& obs_e, EpisodeLog* log) {
    const int step = episode.step_index();
    for (Team t : {Team::pursuer, Team::evader}) {
      if (!is_remote(t)) continue;
      // Anything still queued belongs to an earlier round that timed out.
      slot(t).channel->drain();
      send(t, protocol::ObsMsg{episode_index, step, t == Team::pursuer ? obs_p : obs_e});
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(opts_.action_timeout_ms);
    const Action ap = collect(Team::pursuer, obs_p, deadline);
    const Action ae = collect(Team::evader, obs_e, deadline);
    if (slot(Team::pursuer).lost || slot(Team::evader).lost) return std::nullopt;

    StepResult r = episode.step(ap, ae);
    if (log) log->record(step, ap, ae, r, world_digest(episode.world()));
    send(Team::pursuer, protocol::Result{r.reward_pursuer, r.done, r.episode_score});
    send(Team::evader, protocol::Result{r.reward_evader, r.done, r.episode_score});
    if (slot(Team::pursuer).lost || slot(Team::evader).lost) return std::nullopt;
    return r;
  }

  Action collect(Team t, const Observation& obs, std::chrono::steady_clock::time_point deadline) {
    Slot& s = slot(t);
    if (!is_remote(t)) return s.agent->act(obs);
    if (s.lost) return Action::no_op();
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
    const transport::ReadResult r = s.channel->read_line(static_cast<int>(std::max<long long>(left, 1)));
    switch (r.status) {
      case ReadStatus::closed: s.lost = true; return Action::no_op();
      case ReadStatus::timeout: notify(t, "timeout", "no act within the action timeout; no_op applied"); return Action::no_op();
      case ReadStatus::overflow: notify(t, "bad_action", "frame too long; no_op applied"); return Action::no_op();
      case ReadStatus::line: break;
    }
    try {
      const protocol::Message m = protocol::decode(r.line);
      const auto* act = std::get_if<protocol::Act>(&m);
      if (!act) {
        notify(t, "bad_action", "expected an act frame; no_op applied");
        return Action::no_op();
      }
      std::string why;
      if (const std::optional<Action> a = protocol::to_action(*act, t, &why)) return *a;
      notify(t, "bad_action", why + "; no_op applied");
    } catch (const protocol::ProtocolError& e) {
      notify(t, "bad_action", std::string(e.what()) + "; no_op applied");
    }
    return Action::no_op();
  }

  EpisodeConfig config_;
  SessionOptions opts_;
  std::array<Slot, 2> slots_;
};

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 5000;
  bool stdio = false;
  int max_sessions = 0;  // 0: keep serving
  // Called once the listener is bound, with the actual port.
  std::function<void(int)> on_listening;
};

struct ServeReport {
  int sessions = 0;
  std::vector<EpisodeReport> episodes;
};

/// Accepts peers until every remote slot is claimed, plays the session, and
/// repeats. Throws transport::TransportError when the address cannot be bound.
inline ServeReport serve(const EpisodeConfig& config, const std::string& pursuer_agent,
                         const std::string& evader_agent, const SessionOptions& opts, const ServeOptions& serve_opts,
                         std::ostream* diag = nullptr) {
  auto say = [&](const std::string& s) {
    if (diag) *diag << s << '\n' << std::flush;
  };
  ServeReport report;
  auto finish = [&](Session& s) {
    for (const EpisodeReport& e : s.run()) {
      say("episode score=" + std::to_string(e.outcome.score) + (e.aborted ? " (aborted)" : ""));
      report.episodes.push_back(e);
    }
    ++report.sessions;
  };

  if (serve_opts.stdio) {
    Session s(config, pursuer_agent, evader_agent, opts);
    if (s.is_remote(Team::pursuer) == s.is_remote(Team::evader))
      throw std::invalid_argument("standard-stream mode needs exactly one socket slot");
    if (!s.handshake(std::make_unique<FdChannel>(0, 1, false))) throw std::runtime_error("handshake rejected");
    finish(s);
    return report;
  }

  std::unique_ptr<transport::Listener> listener;
  const bool any_remote = pursuer_agent == kRemoteAgent || evader_agent == kRemoteAgent;
  if (any_remote) {
    listener = std::make_unique<transport::Listener>(serve_opts.host, serve_opts.port);
    say("listening on " + serve_opts.host + ":" + std::to_string(listener->port()));
  }
  if (serve_opts.on_listening) serve_opts.on_listening(listener ? listener->port() : 0);

  while (serve_opts.max_sessions == 0 || report.sessions < serve_opts.max_sessions) {
    Session s(config, pursuer_agent, evader_agent, opts);
    while (!s.ready()) {
      if (auto role = s.handshake(listener->accept(-1))) say(std::string(protocol::to_string(*role)) + " connected");
    }
    finish(s);
    if (!any_remote) break;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

struct ClientReport {
  std::vector<protocol::EpisodeEnd> episodes;
  std::vector<protocol::Error> errors;
  int observations = 0;
  bool rejected = false;  // the server refused the hello
};

/// Drives a registered scripted agent over the wire, for loopback checks and
/// as a reference peer.
class RemoteAgentClient {
 public:
  RemoteAgentClient(std::unique_ptr<FdChannel> ch, Team role, std::string agent_name,
                    int protocol_version = protocol::kProtocolVersion)
      : ch_(std::move(ch)), role_(role), agent_name_(std::move(agent_name)), version_(protocol_version) {
    if (!is_registered(role_, agent_name_)) throw std::invalid_argument("unknown agent: " + agent_name_);
  }

  // Runs until the server hangs up. read_timeout_ms bounds each wait.
  ClientReport run(int read_timeout_ms = -1) {
    ClientReport rep;
    bool configured = false;
    if (!ch_->send(protocol::Hello{role_, version_})) return rep;
    for (;;) {
      const transport::ReadResult r = ch_->read_line(read_timeout_ms);
      if (r.status != ReadStatus::line) break;
      const protocol::Message m = protocol::decode(r.line);
      if (const auto* c = std::get_if<protocol::ConfigMsg>(&m)) {
        agent_ = make_agent(agent_name_, role_, c->config, c->config.seed);
        configured = true;
      } else if (const auto* o = std::get_if<protocol::ObsMsg>(&m)) {
        ++rep.observations;
        const Action a = agent_ ? agent_->act(o->obs) : Action::no_op();
        if (!ch_->send(protocol::Act::from(a))) break;
      } else if (const auto* e = std::get_if<protocol::EpisodeEnd>(&m)) {
        rep.episodes.push_back(*e);
      } else if (const auto* err = std::get_if<protocol::Error>(&m)) {
        rep.errors.push_back(*err);
        if (!configured) rep.rejected = true;
      }
    }
    return rep;
  }

 private:
  std::unique_ptr<FdChannel> ch_;
  Team role_;
  std::string agent_name_;
  int version_;
  std::unique_ptr<Agent> agent_;
};

}  // namespace saac::session
