#include <doctest.h>

#include <fedsentry/config.hpp>
#include <fedsentry/runner.hpp>
#include <fedsentry/transport.hpp>

#include <sys/socket.h>

#include <cstdint>
#include <thread>
#include <variant>
#include <vector>

using namespace fedsentry;

namespace {

ExperimentConfig socket_config() {
  ExperimentConfig cfg = default_config();
  cfg.seed = 9;
  cfg.clients = 3;
  cfg.rounds = 3;
  cfg.data.modalities = 2;
  cfg.data.feature_dim = 2;
  cfg.data.n_samples = 240;
  cfg.data.complementary_accuracy = 0.75;
  return cfg;
}

}  // namespace

TEST_CASE("messages cross a loopback connection intact") {
  ServerSocket server;
  REQUIRE(server.port() != 0);

  GlobalBroadcast broadcast;
  broadcast.round = 2;
  broadcast.theta = ParamVector::from_values({1.0, -2.0, 0.5});

  ClientUpdate update;
  update.client_id = 1;
  update.round = 2;
  update.update = ParamVector::from_values({0.25, 0.0, -0.25});
  update.n_samples = 40;
  update.train_seconds = 0.125;

  std::thread client([&] {
    Connection conn = Connection::connect_local(server.port());
    RoundMessage received = conn.recv();
    REQUIRE(std::holds_alternative<GlobalBroadcast>(received));
    CHECK(std::get<GlobalBroadcast>(received) == broadcast);
    conn.send(RoundMessage{update});
    RoundMessage bye = conn.recv();
    CHECK(std::holds_alternative<Shutdown>(bye));
  });

  Connection peer = server.accept_one();
  peer.send(RoundMessage{broadcast});
  RoundMessage received = peer.recv();
  REQUIRE(std::holds_alternative<ClientUpdate>(received));
  CHECK(std::get<ClientUpdate>(received) == update);
  peer.send(RoundMessage{Shutdown{}});
  client.join();
}

TEST_CASE("garbage on the wire raises a protocol error") {
  ServerSocket server;

  SUBCASE("wrong magic") {
    std::thread client([&] {
      Connection conn = Connection::connect_local(server.port());
      const std::uint8_t junk[10] = {'X', 'Y', 'Z', 'W', 1, 1, 0, 0, 0, 0};
      ::send(conn.fd(), junk, sizeof(junk), MSG_NOSIGNAL);
    });
    Connection peer = server.accept_one();
    CHECK_THROWS_AS(peer.recv(), ProtocolError);
    client.join();
  }

  SUBCASE("oversized payload claim") {
    std::thread client([&] {
      Connection conn = Connection::connect_local(server.port());
      // 256 MiB claimed payload, far over the transport cap.
      const std::uint8_t huge[10] = {'F', 'D', 'T', 'P', 1, 1, 0, 0, 0, 16};
      ::send(conn.fd(), huge, sizeof(huge), MSG_NOSIGNAL);
    });
    Connection peer = server.accept_one();
    CHECK_THROWS_AS(peer.recv(), ProtocolError);
    client.join();
  }

  SUBCASE("connection dropped mid-frame") {
    std::thread client([&] {
      Connection conn = Connection::connect_local(server.port());
      const std::uint8_t partial[4] = {'F', 'D', 'T', 'P'};
      ::send(conn.fd(), partial, sizeof(partial), MSG_NOSIGNAL);
      conn.close();
    });
    Connection peer = server.accept_one();
    CHECK_THROWS_AS(peer.recv(), ProtocolError);
    client.join();
  }
}

TEST_CASE("socket transport reproduces the simulated model exactly") {
  ExperimentConfig cfg = socket_config();
  RunReport sim = run_experiment(cfg);

  cfg.transport = TransportKind::socket;
  RunReport socket_run = run_experiment(cfg);

  CHECK(socket_run.theta == sim.theta);
  REQUIRE(socket_run.rounds.size() == sim.rounds.size());
  for (std::size_t i = 0; i < sim.rounds.size(); ++i) {
    CHECK(socket_run.rounds[i].accuracy == sim.rounds[i].accuracy);
    CHECK(socket_run.rounds[i].global_loss == sim.rounds[i].global_loss);
    // The server measures dispersion on models rebuilt from broadcast+delta,
    // which matches the simulator's direct client models only up to rounding.
    CHECK(socket_run.rounds[i].sync_error ==
          doctest::Approx(sim.rounds[i].sync_error).epsilon(1e-9));
    CHECK(socket_run.rounds[i].bytes_up == sim.rounds[i].bytes_up);
    CHECK(socket_run.rounds[i].bytes_down == sim.rounds[i].bytes_down);
    // Wall-clock timings replace the modeled clock.
    CHECK(socket_run.rounds[i].round_seconds > 0.0);
  }
}

TEST_CASE("asynchronous socket rounds run to completion") {
  ExperimentConfig cfg = socket_config();
  cfg.mode = RoundMode::async;
  cfg.transport = TransportKind::socket;
  cfg.async_options.schedule = AsyncSchedule::event;
  RunReport report = run_experiment(cfg);
  REQUIRE(report.rounds.size() == cfg.rounds);
  CHECK(report.final_metrics.accuracy >= 0.0);
  CHECK(report.final_metrics.accuracy <= 1.0);
  CHECK(report.total_bytes_up > 0);
}
