#include <gtest/gtest.h>

#include <future>
#include <sstream>
#include <thread>

#include "saac/session.hpp"

using namespace saac;
using namespace saac::session;
namespace proto = saac::protocol;

namespace {

EpisodeConfig short_config(double seconds = 1.0, std::uint64_t seed = 5) {
  EpisodeConfig c = EpisodeConfig::defaults_for(MapId::find_and_defeat_drones);
  c.final_time = seconds;
  c.seed = seed;
  return c;
}

// Test-side end of a channel that speaks raw frames.
struct Peer {
  std::unique_ptr<FdChannel> ch;

  proto::Message next(int timeout_ms = 5000) {
    const transport::ReadResult r = ch->read_line(timeout_ms);
    if (r.status != ReadStatus::line) throw std::runtime_error("peer read failed");
    return proto::decode(r.line);
  }
  template <class T>
  T expect(int timeout_ms = 5000) {
    const proto::Message m = next(timeout_ms);
    const T* v = std::get_if<T>(&m);
    if (!v) throw std::runtime_error("unexpected frame: " + proto::encode(m));
    return *v;
  }
  void send(const proto::Message& m) { ch->send(m); }
  void send_raw(const std::string& s) { ch->write_all(s); }
};

// A bound session with one side handed to the test as a raw peer.
struct Rig {
  std::unique_ptr<Session> session;
  Peer peer;

  Rig(const EpisodeConfig& cfg, std::string pursuer, std::string evader, SessionOptions opts, Team remote) {
    session = std::make_unique<Session>(cfg, std::move(pursuer), std::move(evader), opts);
    auto [server_end, client_end] = transport::channel_pair();
    peer.ch = std::move(client_end);
    peer.send(proto::Hello{remote, proto::kProtocolVersion});
    if (session->handshake(std::move(server_end)) != remote) throw std::runtime_error("handshake failed");
  }
};

proto::Act act(const Action& a) { return proto::Act::from(a); }

}  // namespace

TEST(Session, HandshakeThenConfigThenObservations) {
  Rig rig(short_config(), "traversal", kRemoteAgent, {}, Team::evader);
  ASSERT_TRUE(rig.session->ready());
  auto fut = std::async(std::launch::async, [&] { return rig.session->run(); });

  const auto cfg = rig.peer.expect<proto::ConfigMsg>();
  EXPECT_EQ(cfg.config, short_config());
  for (int step = 0; step < 4; ++step) {
    const auto obs = rig.peer.expect<proto::ObsMsg>();
    EXPECT_EQ(obs.episode, 0);
    EXPECT_EQ(obs.step, step);
    EXPECT_EQ(obs.obs.team, Team::evader);
    EXPECT_EQ(obs.obs.scalars.step, step);
    rig.peer.send(act(step == 0 ? Action::select_army() : Action::no_op()));
    const auto res = rig.peer.expect<proto::Result>();
    EXPECT_EQ(res.done, step == 3);
    EXPECT_LE(res.reward, 0);
  }
  const auto end = rig.peer.expect<proto::EpisodeEnd>();
  EXPECT_DOUBLE_EQ(end.duration, 1.0);
  const auto reports = fut.get();
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_FALSE(reports[0].aborted);
  EXPECT_EQ(reports[0].outcome.steps, 4);
  EXPECT_EQ(rig.peer.ch->read_line(2000).status, ReadStatus::closed);
}

TEST(Session, RejectsTakenSlotAndWrongVersion) {
  Session s(short_config(), "traversal", kRemoteAgent);
  auto try_hello = [&](proto::Hello h) {
    auto [a, b] = transport::channel_pair();
    b->send(h);
    const std::optional<Team> role = s.handshake(std::move(a));
    const transport::ReadResult r = b->read_line(1000);
    std::string code;
    if (r.status == ReadStatus::line) code = std::get<proto::Error>(proto::decode(r.line)).code;
    return std::make_pair(role, code);
  };
  EXPECT_EQ(try_hello({Team::pursuer, 1}), std::make_pair(std::optional<Team>{}, std::string("slot_taken")));
  EXPECT_EQ(try_hello({Team::evader, 2}), std::make_pair(std::optional<Team>{}, std::string("version_mismatch")));
  EXPECT_FALSE(s.ready());
  auto [a, b] = transport::channel_pair();
  b->send(proto::Hello{Team::evader, 1});
  EXPECT_EQ(s.handshake(std::move(a)), Team::evader);
  EXPECT_TRUE(s.ready());
  EXPECT_EQ(try_hello({Team::evader, 1}), std::make_pair(std::optional<Team>{}, std::string("slot_taken")));
}

TEST(Session, BadHelloAndHandshakeTimeout) {
  SessionOptions opts;
  opts.handshake_timeout_ms = 50;
  Session s(short_config(), kRemoteAgent, kRemoteAgent, opts);
  auto [a, b] = transport::channel_pair();
  b->write_all("{\"type\":\"act\",\"name\":\"no_op\"}\n");
  EXPECT_FALSE(s.handshake(std::move(a)));
  EXPECT_EQ(std::get<proto::Error>(proto::decode(b->read_line(1000).line)).code, "bad_hello");

  auto [c, d] = transport::channel_pair();
  EXPECT_FALSE(s.handshake(std::move(c)));
  EXPECT_EQ(std::get<proto::Error>(proto::decode(d->read_line(1000).line)).code, "timeout");
}

TEST(Session, SilentPeerGetsTimeoutAndNoOp) {
  SessionOptions opts;
  opts.action_timeout_ms = 50;
  Rig rig(short_config(), "traversal", kRemoteAgent, opts, Team::evader);
  std::vector<EpisodeLog> logs;
  auto fut = std::async(std::launch::async, [&] { return rig.session->run(&logs); });
  rig.peer.expect<proto::ConfigMsg>();
  rig.peer.expect<proto::ObsMsg>();
  // Say nothing for step 0.
  EXPECT_EQ(rig.peer.expect<proto::Error>().code, "timeout");
  rig.peer.expect<proto::Result>();
  for (int step = 1; step < 4; ++step) {
    EXPECT_EQ(rig.peer.expect<proto::ObsMsg>().step, step);
    rig.peer.send(act(Action::select_army()));
    rig.peer.expect<proto::Result>();
  }
  rig.peer.expect<proto::EpisodeEnd>();
  const auto reports = fut.get();
  EXPECT_FALSE(reports[0].aborted);
  EXPECT_EQ(rig.session->errors_sent(Team::evader, "timeout"), 1);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_NE(logs[0].lines()[0].find(" no_op "), std::string::npos);
}

TEST(Session, MalformedActsBecomeNoOp) {
  Rig rig(short_config(), kRemoteAgent, "builtin", {}, Team::pursuer);
  std::vector<EpisodeLog> logs;
  auto fut = std::async(std::launch::async, [&] { return rig.session->run(&logs); });
  rig.peer.expect<proto::ConfigMsg>();
  const std::vector<std::string> bad{
      "{\"type\":\"act\",\"name\":\"attack_screen\"}\n",   // no coordinates
      "{\"type\":\"act\",\"name\":\"move_minimap\",\"x\":1,\"y\":1}\n",  // evader-only
      "{\"type\":\"act\",\"name\":\n",                     // truncated JSON
      "{\"type\":\"hello\",\"role\":\"pursuer\",\"protocol_version\":1}\n",
  };
  for (const std::string& frame : bad) {
    rig.peer.expect<proto::ObsMsg>();
    rig.peer.send_raw(frame);
    EXPECT_EQ(rig.peer.expect<proto::Error>().code, "bad_action") << frame;
    rig.peer.expect<proto::Result>();
  }
  rig.peer.expect<proto::EpisodeEnd>();
  fut.get();
  EXPECT_EQ(rig.session->errors_sent(Team::pursuer, "bad_action"), 4);
  for (const std::string& line : logs[0].lines()) {
    std::istringstream is(line);
    int step;
    std::string pursuer_action;
    is >> step >> pursuer_action;
    EXPECT_EQ(pursuer_action, "no_op") << line;
  }
}

TEST(Session, PeerLossEndsEpisodeForSurvivor) {
  EpisodeConfig cfg = short_config(30.0);
  Session s(cfg, kRemoteAgent, kRemoteAgent);
  auto [p_srv, p_cli] = transport::channel_pair();
  auto [e_srv, e_cli] = transport::channel_pair();
  s.attach(Team::pursuer, std::move(p_srv));
  s.attach(Team::evader, std::move(e_srv));
  auto fut = std::async(std::launch::async, [&] { return s.run(); });
  Peer p{std::move(p_cli)}, e{std::move(e_cli)};
  p.expect<proto::ConfigMsg>();
  e.expect<proto::ConfigMsg>();
  for (int step = 0; step < 3; ++step) {
    p.expect<proto::ObsMsg>();
    e.expect<proto::ObsMsg>();
    p.send(act(Action::no_op()));
    e.send(act(Action::no_op()));
    p.expect<proto::Result>();
    e.expect<proto::Result>();
  }
  p.ch.reset();  // pursuer vanishes
  EXPECT_EQ(e.expect<proto::ObsMsg>().step, 3);
  e.send(act(Action::no_op()));
  const auto end = e.expect<proto::EpisodeEnd>();
  EXPECT_DOUBLE_EQ(end.duration, 0.75);
  const auto reports = fut.get();
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_TRUE(reports[0].aborted);
}

TEST(Session, ResultsAreZeroSumAcrossSlots) {
  EpisodeConfig cfg = short_config(20.0, 8);
  Session s(cfg, kRemoteAgent, kRemoteAgent);
  auto [p_srv, p_cli] = transport::channel_pair();
  auto [e_srv, e_cli] = transport::channel_pair();
  s.attach(Team::pursuer, std::move(p_srv));
  s.attach(Team::evader, std::move(e_srv));
  auto fut = std::async(std::launch::async, [&] { return s.run(); });
  Peer p{std::move(p_cli)}, e{std::move(e_cli)};
  p.expect<proto::ConfigMsg>();
  e.expect<proto::ConfigMsg>();
  auto pursuer = make_agent("traversal", Team::pursuer, cfg, cfg.seed);
  std::int64_t total = 0;
  for (int step = 0; step < 80; ++step) {
    const auto op = p.expect<proto::ObsMsg>();
    const auto oe = e.expect<proto::ObsMsg>();
    ASSERT_EQ(op.step, step);
    ASSERT_EQ(oe.step, step);
    p.send(act(pursuer->act(op.obs)));
    e.send(act(Action::no_op()));
    const auto rp = p.expect<proto::Result>();
    const auto re = e.expect<proto::Result>();
    EXPECT_EQ(rp.reward + re.reward, 0);
    EXPECT_EQ(rp.score, re.score);
    total += rp.reward;
    EXPECT_EQ(rp.score, total);
  }
  EXPECT_EQ(p.expect<proto::EpisodeEnd>().score, total);
  e.expect<proto::EpisodeEnd>();
  fut.get();
}

// Scripted agents on both ends of the wire must reproduce the in-process run.
TEST(Session, LoopbackMatchesInProcess) {
  EpisodeConfig cfg = EpisodeConfig::defaults_for(MapId::find_and_defeat_drones);
  cfg.seed = 1000;
  SessionOptions opts;
  opts.episodes = 2;
  opts.action_timeout_ms = 10000;
  Session s(cfg, kRemoteAgent, kRemoteAgent, opts);
  auto [p_srv, p_cli] = transport::channel_pair();
  auto [e_srv, e_cli] = transport::channel_pair();
  RemoteAgentClient pc(std::move(p_cli), Team::pursuer, "traversal");
  RemoteAgentClient ec(std::move(e_cli), Team::evader, "random");
  auto pf = std::async(std::launch::async, [&] { return pc.run(); });
  auto ef = std::async(std::launch::async, [&] { return ec.run(); });
  ASSERT_EQ(s.handshake(std::move(p_srv)), Team::pursuer);
  ASSERT_EQ(s.handshake(std::move(e_srv)), Team::evader);
  std::vector<EpisodeLog> wire;
  s.run(&wire);
  const ClientReport prep = pf.get();
  const ClientReport erep = ef.get();
  EXPECT_TRUE(prep.errors.empty());
  EXPECT_TRUE(erep.errors.empty());
  ASSERT_EQ(prep.episodes.size(), 2u);
  ASSERT_EQ(wire.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EpisodeConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    EpisodeLog local;
    const EpisodeOutcome out = play_episode(c, "traversal", "random", &local);
    EXPECT_EQ(wire[static_cast<std::size_t>(i)].text(), local.text()) << "episode " << i;
    EXPECT_EQ(prep.episodes[static_cast<std::size_t>(i)].score, out.score);
  }
  EXPECT_EQ(prep.observations, 1440);
}

TEST(Serve, TcpSessionOnEphemeralPort) {
  EpisodeConfig cfg = short_config(5.0);
  SessionOptions opts;
  opts.action_timeout_ms = 10000;
  ServeOptions so;
  so.port = 0;
  so.max_sessions = 1;
  std::promise<int> port;
  so.on_listening = [&](int p) { port.set_value(p); };
  auto server = std::async(std::launch::async, [&] { return serve(cfg, "traversal", kRemoteAgent, opts, so); });
  const int p = port.get_future().get();
  ASSERT_GT(p, 0);
  RemoteAgentClient client(transport::connect_tcp("127.0.0.1", p), Team::evader, "cluster");
  const ClientReport rep = client.run(10000);
  const ServeReport sr = server.get();
  EXPECT_EQ(sr.sessions, 1);
  ASSERT_EQ(rep.episodes.size(), 1u);
  EXPECT_EQ(rep.observations, 20);
  EXPECT_FALSE(rep.rejected);

  // Server-side in-process equivalent.
  EXPECT_EQ(rep.episodes[0].score, play_episode(cfg, "traversal", "cluster").score);
}

TEST(Serve, BindFailureThrows) {
  transport::Listener hog("127.0.0.1", 0);
  ServeOptions so;
  so.port = hog.port();
  EXPECT_THROW(serve(short_config(), "traversal", kRemoteAgent, {}, so), transport::TransportError);
  EXPECT_THROW(Session(short_config(), "traversal", "camper"), std::invalid_argument);
}

TEST(Serve, AllScriptedRunsOnce) {
  ServeOptions so;
  const ServeReport r = serve(short_config(), "traversal", "random", {}, so);
  EXPECT_EQ(r.sessions, 1);
  EXPECT_EQ(r.episodes.size(), 1u);
}
