// Copyright 2026 The graphfog Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <vector>

#include <gtest/gtest.h>

#include "graphfog/io.hpp"
#include "graphfog/simulation.hpp"

namespace {

using namespace graphfog;
using namespace graphfog::literals;

struct Canonical {
  PhysicalGraph graph = io::graph_from_json(io::load_json_file(GRAPHFOG_DATA_DIR "/topology.json"));
  io::ApplicationFile file = io::application_from_json(io::load_json_file(GRAPHFOG_DATA_DIR "/application.json"));

  FogSimulation make(PlacementPolicy policy = PlacementPolicy::Explicit, SimulationOptions options = {}) {
    return FogSimulation(graph, file.app, place_modules(file.app, graph, policy, file.explicit_map), std::move(options));
  }
};

TEST(Simulation, SingleAlertCompletesTheLoop) {
  Canonical c;
  auto sim = c.make();
  sim.trigger_sensor("sas1", 1_s);
  sim.run_until(10_s);
  const auto m = sim.metrics();
  ASSERT_EQ(m.loop_samples.size(), 1u);
  const auto& s = m.loop_samples.front();
  EXPECT_EQ(s.loop_id, "alert-confirmation");
  EXPECT_EQ(s.breakdown.propagation, 200_ms);
  EXPECT_EQ(s.latency, s.breakdown.total());
  EXPECT_EQ(s.hops.front().node, "sas1");
  EXPECT_EQ(s.hops.front().arrival, 1_s);
  EXPECT_EQ(s.hops.back().arrival - s.hops.front().arrival, s.latency);
  for (std::size_t i = 1; i < s.hops.size(); ++i) EXPECT_LE(s.hops[i - 1].arrival, s.hops[i].arrival);
  EXPECT_TRUE(m.tuples.conserved());
  EXPECT_EQ(m.tuples.created, 4u);
  EXPECT_EQ(m.tuples.in_flight, 0u);
}

TEST(Simulation, ReplayGivesByteIdenticalTrace) {
  auto trace = [] {
    Canonical c;
    auto sim = c.make(PlacementPolicy::Explicit, {42, "", false, true, {}});
    for (int k = 1; k <= 5; ++k) sim.trigger_sensor("sas" + std::to_string(k), SimTime::from_millis(100 * k));
    sim.run_until(5_s);
    return sim.engine().serialize_trace();
  };
  const std::string a = trace();
  EXPECT_GT(a.size(), 100u);
  EXPECT_EQ(a, trace());
}

TEST(Simulation, EdgewardBeatsCloudOnly) {
  Canonical c;
  auto edge = c.make(PlacementPolicy::Edgeward);
  auto cloud = c.make(PlacementPolicy::CloudOnly);
  for (auto* sim : {&edge, &cloud}) {
    sim->trigger_sensor("sas2", 1_s);
    sim->run_until(10_s);
  }
  const auto e = edge.metrics().loop_samples, k = cloud.metrics().loop_samples;
  ASSERT_EQ(e.size(), 1u);
  ASSERT_EQ(k.size(), 1u);
  EXPECT_LT(e.front().latency, k.front().latency);
  // The cloud path adds the 50 ms ESN-cloud link in each direction.
  EXPECT_GE(k.front().breakdown.propagation - e.front().breakdown.propagation, 100_ms);
}

// Two tuples reaching one device at the same instant.
struct TwoJobs {
  static SimTime completion_gap(int parallelism, std::vector<SimTime>& done) {
    Application app;
    app.id = "two";
    app.modules.push_back({"m", 0, {}, false});
    app.edges.push_back({"S", "m", "IN", "", Direction::Up, 5.0, 0, Selectivity::always()});
    app.edges.push_back({"m", "A", "OUT", "", Direction::Actuator, 0, 0, Selectivity::always()});
    for (const char* id : {"s1", "s2"}) {
      Sensor s;
      s.id = id;
      s.type = "S";
      s.attached_device = "d";
      s.tuple_type = "IN";
      app.sensors.push_back(s);
    }
    app.actuators.push_back({"a", "A", "d", 0_ms});
    app.loops.push_back({"l", {"S", "m", "A"}});
    Device d;
    d.id = "d";
    d.mips = 1000;
    d.parallelism = parallelism;
    d.architecture = Architecture::FPGA;
    FogSimulation sim(build_graph({{d}, {}}), app, {{"m", {"d"}}});
    sim.trigger_sensor("s1", 10_ms);
    sim.trigger_sensor("s2", 10_ms);
    sim.run_until(1_s);
    for (const auto& s : sim.metrics().loop_samples) done.push_back(s.completed_at);
    return done.size() == 2 ? done[1] - done[0] : SimTime::max();
  }
};

TEST(Simulation, TwoJobFifoOracle) {
  std::vector<SimTime> p1, p2;
  TwoJobs::completion_gap(1, p1);
  TwoJobs::completion_gap(2, p2);
  ASSERT_EQ(p1.size(), 2u);
  ASSERT_EQ(p2.size(), 2u);
  EXPECT_EQ(p1[0], 15_ms);
  EXPECT_EQ(p1[1], 20_ms);
  EXPECT_EQ(p2[0], 15_ms);
  EXPECT_EQ(p2[1], 15_ms);
}

TEST(Simulation, ZeroLatencyZeroWorkGivesZeroSample) {
  Application app;
  app.id = "null";
  app.modules.push_back({"m", 0, {}, false});
  app.edges.push_back({"S", "m", "IN", "", Direction::Up, 0, 0, Selectivity::always()});
  app.edges.push_back({"m", "A", "OUT", "", Direction::Actuator, 0, 0, Selectivity::always()});
  Sensor s;
  s.id = "s";
  s.type = "S";
  s.attached_device = "a";
  s.tuple_type = "IN";
  app.sensors.push_back(s);
  app.actuators.push_back({"act", "A", "b", 0_ms});
  app.loops.push_back({"l", {"S", "m", "A"}});
  Device a, b;
  a.id = "a";
  b.id = "b";
  Link l;
  l.a = "a";
  l.b = "b";
  FogSimulation sim(build_graph({{a, b}, {l}}), app, {{"m", {"a"}}});
  sim.trigger_sensor("s", 7_ms);
  sim.run_until(1_s);
  const auto m = sim.metrics();
  ASSERT_EQ(m.loop_samples.size(), 1u);
  EXPECT_EQ(m.loop_samples.front().latency, 0_ns);
}

TEST(Faults, FailedCoordinatorDropsAlertsUntilRecovery) {
  Canonical c;
  auto sim = c.make();
  sim.schedule_topology_event({2_s, FailDevice{"esn"}});
  sim.schedule_topology_event({4_s, RecoverDevice{"esn"}});
  sim.trigger_sensor("sas1", 1_s);
  sim.trigger_sensor("sas2", 3_s);
  sim.trigger_sensor("sas3", 5_s);
  sim.run_until(10_s);
  const auto m = sim.metrics();
  EXPECT_GT(m.tuples.dropped, 0u);
  EXPECT_TRUE(m.tuples.conserved());
  ASSERT_EQ(m.loop_samples.size(), 2u);
  EXPECT_EQ(m.loop_samples[0].context.at("sensor"), "sas1");
  EXPECT_EQ(m.loop_samples[1].context.at("sensor"), "sas3");
  EXPECT_EQ(m.loop_samples[0].latency, m.loop_samples[1].latency);
}

TEST(Faults, FailAndRecoverWithoutTrafficRestoresState) {
  Canonical c;
  auto sim = c.make();
  const PhysicalGraph before = sim.graph();
  sim.schedule_topology_event({1_s, FailDevice{"esn"}});
  sim.schedule_topology_event({2_s, RecoverDevice{"esn"}});
  sim.run_until(3_s);
  EXPECT_TRUE(sim.graph() == before);
  EXPECT_EQ(sim.queue_length("esn"), 0u);
  EXPECT_EQ(sim.in_service("esn"), 0);
}

TEST(Faults, FailureDropsQueuedWork) {
  Canonical c;
  auto sim = c.make();
  for (int k = 1; k <= 5; ++k) sim.trigger_sensor("sas" + std::to_string(k), 1_s);
  // All five incident tuples reach the ESN at the same instant; fail it while they are in service.
  sim.schedule_topology_event({SimTime::from_millis(1107), FailDevice{"esn"}});
  sim.run_until(5_s);
  const auto m = sim.metrics();
  EXPECT_EQ(m.tuples.drops_by_reason.at("device-failed"), 5u);
  EXPECT_TRUE(m.tuples.conserved());
  EXPECT_TRUE(m.loop_samples.empty());
}

TEST(Faults, LinkLatencyChangeAppliesToLaterTransmissions) {
  Canonical c;
  auto sim = c.make();
  sim.schedule_topology_event({2_s, SetLinkLatency{"cad1", "esn", 200_ms}});
  sim.trigger_sensor("sas1", 1_s);
  sim.trigger_sensor("sas1", 3_s);
  sim.run_until(10_s);
  const auto m = sim.metrics();
  ASSERT_EQ(m.loop_samples.size(), 2u);
  EXPECT_EQ(m.loop_samples[1].latency - m.loop_samples[0].latency, 100_ms);
}

TEST(Faults, InFlightTransmissionKeepsItsParameters) {
  Canonical c;
  auto sim = c.make();
  // The INCIDENT tuple leaves cad1 at 1.006 s and is on the wire until 1.1064 s.
  sim.schedule_topology_event({SimTime::from_millis(1050), SetLinkLatency{"cad1", "esn", 900_ms}});
  sim.trigger_sensor("sas1", 1_s);
  sim.run_until(10_s);
  ASSERT_EQ(sim.metrics().loop_samples.size(), 1u);
  EXPECT_EQ(sim.metrics().loop_samples.front().breakdown.propagation, 200_ms);
}

TEST(Faults, UnknownTargetsAreRejected) {
  Canonical c;
  auto sim = c.make();
  EXPECT_THROW(sim.schedule_topology_event({1_s, FailDevice{"zz"}}), UnknownTarget);
  EXPECT_THROW(sim.schedule_topology_event({1_s, SetLinkLatency{"cad1", "cad2", 1_ms}}), UnknownTarget);
  EXPECT_THROW(sim.trigger_sensor("nope", 1_s), UnknownTarget);
}

TEST(Links, SerializationQueuesBackToBackTransmissions) {
  Canonical c;
  auto free_run = c.make();
  auto serial = c.make(PlacementPolicy::Explicit, {1, "", true, false, {}});
  for (auto* sim : {&free_run, &serial}) {
    sim->trigger_sensor("sas1", 1_s);
    sim->trigger_sensor("sas1", 1_s);
    sim->run_until(10_s);
  }
  const auto f = free_run.metrics().loop_samples, s = serial.metrics().loop_samples;
  ASSERT_EQ(f.size(), 2u);
  ASSERT_EQ(s.size(), 2u);
  // Without serialization the only wait is for the single cad1 CPU slot.
  EXPECT_GE(s[1].breakdown.queueing, f[1].breakdown.queueing);
  EXPECT_EQ(s[1].latency, s[1].breakdown.total());
}

TEST(Simulation, PeriodicSensorsRespectBattery) {
  Canonical c;
  for (auto& s : c.file.app.sensors) {
    s.nominal_interval_ms = 1000;
    s.battery_capacity_mj = 5;
    s.tx_energy_per_tuple_mj = 1;
  }
  auto sim = c.make();
  sim.run_until(60_s);
  const auto m = sim.metrics();
  for (const auto& r : m.sensors) {
    EXPECT_EQ(r.emissions, 5u) << r.sensor_id;
    EXPECT_TRUE(r.halted);
    EXPECT_EQ(r.consumed_mj, 5.0);
  }
  EXPECT_EQ(m.loop_samples.size(), 25u);
  EXPECT_TRUE(m.tuples.conserved());
}

}  // namespace
