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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "graphfog/emergency/canonical.hpp"
#include "graphfog/emergency/scenario.hpp"

namespace {

using namespace graphfog;
using namespace graphfog::emergency;
using namespace graphfog::literals;
using nlohmann::json;

json road_json() { return io::load_json_file(GRAPHFOG_DATA_DIR "/road_network.json"); }

// All-pairs distances straight from the JSON edge list, independent of the library graph.
struct Oracle {
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> d;
  std::set<std::string> units;

  explicit Oracle(const json& road) {
    for (const auto& n : road.at("nodes")) {
      index[n.at("id").get<std::string>()] = ids.size();
      ids.push_back(n.at("id").get<std::string>());
      const auto role = n.at("role").get<std::string>();
      if (role != "ZONE" && role != "RELAY") units.insert(ids.back());
    }
    const double inf = std::numeric_limits<double>::infinity();
    d.assign(ids.size(), std::vector<double>(ids.size(), inf));
    for (std::size_t i = 0; i < ids.size(); ++i) d[i][i] = 0;
    for (const auto& e : road.at("edges")) {
      const auto a = index.at(e.at("a")), b = index.at(e.at("b"));
      d[a][b] = d[b][a] = std::min(d[a][b], e.at("km").get<double>());
    }
    for (std::size_t k = 0; k < ids.size(); ++k)
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < ids.size(); ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  }

  double dist(const std::string& a, const std::string& b) const { return d[index.at(a)][index.at(b)]; }

  std::vector<std::pair<double, std::string>> ranking(const std::string& zone) const {
    std::vector<std::pair<double, std::string>> r;
    for (const auto& u : units) r.emplace_back(dist(zone, u), u);
    std::sort(r.begin(), r.end());
    return r;
  }

  std::vector<std::string> top8(const std::string& zone) const {
    std::vector<std::string> out;
    for (const auto& [_, u] : ranking(zone)) {
      if (out.size() == 8) break;
      out.push_back(u);
    }
    return out;
  }

  double mean_top8_km(const std::string& zone) const {
    double s = 0;
    const auto r = ranking(zone);
    for (std::size_t i = 0; i < 8; ++i) s += r[i].first;
    return s / 8;
  }
};

Device esn_device() {
  Device d;
  d.id = "esn";
  d.mips = 10000;
  d.architecture = Architecture::FPGA;
  return d;
}

std::vector<std::string> unit_ids(const DispatchPlan& p) {
  std::vector<std::string> out;
  for (const auto& a : p.assignments) out.push_back(a.unit);
  return out;
}

ScenarioResult run_incidents(const std::vector<IncidentSpec>& incidents, ScenarioOptions options = {},
                             ScenarioInputs inputs = canonical_inputs(), SimTime horizon = 60_s) {
  EmergencyScenario sc(inputs, {42, "", false, false, {}}, std::move(options));
  for (const auto& i : incidents) sc.add_incident(i);
  return sc.run(horizon);
}

const DispatchPlan& plan_of(const ScenarioResult& r, const std::string& zone) {
  for (const auto& p : r.plans)
    if (p.zone == zone) return p;
  throw std::runtime_error("no plan for " + zone);
}

TEST(RoadNetwork, CanonicalFileLoads) {
  const RoadNetwork net = load_road_network(road_json());
  EXPECT_EQ(net.graph.device_count(), 25u);
  EXPECT_EQ(net.graph.link_count(), 41u);
  EXPECT_EQ(net.with_role(Role::Zone).size(), 5u);
  EXPECT_EQ(net.with_role(Role::Fire).size(), 3u);
  EXPECT_EQ(net.with_role(Role::Police).size(), 2u);
  EXPECT_EQ(net.with_role(Role::Medical).size(), 3u);
  EXPECT_EQ(net.with_role(Role::AntiTerror).size(), 2u);
  EXPECT_EQ(net.with_role(Role::Relay).size(), 10u);
  EXPECT_EQ(net.units().size(), 10u);
  EXPECT_EQ(net.zone_sensor.at("z1"), "sas1");
  EXPECT_EQ(net.zone_of_sensor("sas4"), "z4");
}

TEST(RoadNetwork, EmbeddedCopyMatchesDataFile) {
  EXPECT_EQ(canonical_inputs().road, road_json());
  EXPECT_EQ(canonical_inputs().topology, io::load_json_file(GRAPHFOG_DATA_DIR "/topology.json"));
  EXPECT_EQ(canonical_inputs().application, io::load_json_file(GRAPHFOG_DATA_DIR "/application.json"));
}

TEST(RoadNetwork, RejectsWrongShapes) {
  json fewer = road_json();
  fewer["edges"].erase(fewer["edges"].size() - 1);
  EXPECT_THROW(load_road_network(fewer), WrongEdgeCount);

  json extra_zone = road_json();
  extra_zone["nodes"].push_back({{"id", "z6"}, {"role", "ZONE"}, {"sensor", "sas6"}});
  extra_zone["edges"].push_back({{"a", "z6"}, {"b", "a1"}, {"km", 1.0}});
  EXPECT_THROW(load_road_network(extra_zone), RoleCountMismatch);
  EXPECT_NO_THROW(load_road_network(extra_zone, std::nullopt));

  json island = road_json();
  island["nodes"].push_back({{"id", "far"}, {"role", "RELAY"}});
  EXPECT_THROW(load_road_network(island, std::nullopt), NotConnected);

  json bad = road_json();
  bad["nodes"][0]["role"] = "WIZARD";
  EXPECT_THROW(load_road_network(bad), ScenarioError);
}

TEST(Dispatch, MatchesBruteForceRanking) {
  const json road = road_json();
  const Oracle oracle(road);
  const RoadNetwork net = load_road_network(road);
  for (const auto& zone : net.zones()) {
    PathCache cache(0.03, 0.00015);
    const DispatchPlan plan = dispatch({"i", zone, "fire", 0_ms}, net, cache, esn_device());
    ASSERT_EQ(plan.assignments.size(), 8u);
    EXPECT_EQ(unit_ids(plan), oracle.top8(zone)) << zone;
    const auto ranked = oracle.ranking(zone);
    EXPECT_EQ(ranked.size(), 10u);
    for (const auto& [d, _] : ranked) EXPECT_TRUE(std::isfinite(d));
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_NEAR(plan.assignments[i].distance_km, ranked[i].first, 1e-9);
      EXPECT_GT(plan.assignments[i].travel_minutes, 0.0);
      EXPECT_EQ(plan.assignments[i].device, net.unit_device.at(plan.assignments[i].unit));
    }
    // Selected units are never farther than unselected ones.
    EXPECT_LE(plan.assignments.back().distance_km, ranked[8].first);
  }
}

TEST(Dispatch, CacheHitOnRepeatedZone) {
  const RoadNetwork net = load_road_network(road_json());
  PathCache cache(net.config.cold_mi, net.config.warm_mi);
  const auto first = dispatch({"i1", "z1", "fire", 0_ms}, net, cache, esn_device());
  const auto second = dispatch({"i2", "z1", "fire", 1_s}, net, cache, esn_device());
  EXPECT_FALSE(first.cache_hit);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
  EXPECT_EQ(unit_ids(first), unit_ids(second));
  const SimTime miss = execution_time(first.charged_mi, 10000), hit = execution_time(second.charged_mi, 10000);
  EXPECT_EQ(miss.nanos(), 200 * hit.nanos());
}

TEST(Dispatch, DisabledCacheAlwaysMisses) {
  const RoadNetwork net = load_road_network(road_json());
  PathCache cache(1, 1, false);
  for (int k = 0; k < 3; ++k) EXPECT_FALSE(dispatch({"i", "z1", "fire", 0_ms}, net, cache, esn_device()).cache_hit);
  EXPECT_EQ(cache.misses(), 3u);
  EXPECT_FALSE(cache.contains("z1"));
}

TEST(Dispatch, RejectsBadZoneAndDownCoordinator) {
  const RoadNetwork net = load_road_network(road_json());
  PathCache cache(1, 1);
  EXPECT_THROW(dispatch({"i", "a1", "fire", 0_ms}, net, cache, esn_device()), ZoneUnreachable);
  EXPECT_THROW(dispatch({"i", "nowhere", "fire", 0_ms}, net, cache, esn_device()), ZoneUnreachable);
  Device down = esn_device();
  down.status = Status::Down;
  EXPECT_THROW(dispatch({"i", "z1", "fire", 0_ms}, net, cache, down), EsnDown);
}

TEST(Dispatch, QuotaCapsUnitsPerKind) {
  json road = road_json();
  road["config"]["quota"] = {{"FIRE", 1}, {"MEDICAL", 1}};
  road["config"]["unitsPerIncident"] = 6;
  const RoadNetwork net = load_road_network(road);
  PathCache cache(1, 1);
  const auto plan = dispatch({"i", "z1", "fire", 0_ms}, net, cache, esn_device());
  std::map<Role, int> seen;
  for (const auto& a : plan.assignments) ++seen[net.roles.at(a.unit)];
  EXPECT_EQ(plan.assignments.size(), 6u);
  EXPECT_EQ(seen[Role::Fire], 1);
  EXPECT_EQ(seen[Role::Medical], 1);
}

TEST(Conflicts, Examples) {
  const json road = road_json();
  const Oracle oracle(road);
  const RoadNetwork net = load_road_network(road);
  PathCache cache(1, 1);
  auto plan = [&](const std::string& zone) { return dispatch({zone, zone, "fire", 0_ms}, net, cache, esn_device()); };

  const auto dual = resolve_conflicts({plan("z1"), plan("z2")}, 1.2);
  const auto a = oracle.top8("z1"), b = oracle.top8("z2");
  std::size_t shared = 0;
  for (const auto& u : b) shared += std::count(a.begin(), a.end(), u);
  EXPECT_EQ(shared, 6u);
  EXPECT_EQ(dual.conflict_rate, static_cast<double>(shared) / 8.0);
  EXPECT_EQ(dual.conflict_rate, 0.75);
  EXPECT_EQ(dual.rates.front(), 0.0);
  for (const auto& x : dual.plans.back().assignments) {
    if (x.conflicted) EXPECT_EQ(x.travel_minutes, x.base_travel_minutes * 1.2);
    else EXPECT_EQ(x.travel_minutes, x.base_travel_minutes);
  }

  EXPECT_EQ(resolve_conflicts({plan("z1"), plan("z1")}, 1.2).conflict_rate, 1.0);

  DispatchPlan p1 = plan("z1"), p2 = plan("z2");
  p2.assignments.clear();
  for (const auto& u : net.units())
    if (std::find(a.begin(), a.end(), u) == a.end()) p2.assignments.push_back({u, u, 1, 1, 1, false, std::nullopt});
  const auto disjoint = resolve_conflicts({p1, p2}, 1.2);
  EXPECT_EQ(disjoint.conflict_rate, 0.0);
  for (const auto& x : disjoint.plans.back().assignments) EXPECT_FALSE(x.conflicted);
}

TEST(Intervention, Examples) {
  DispatchPlan plan;
  plan.coordination_latency_ms = 205.0;
  Assignment near{"c1", "iops1", 1.5, 1.5, 1.5, false, std::nullopt};
  EXPECT_NEAR(intervention_time(near, plan), 1.5034, 1e-4);
  Assignment here{"x", "x", 0, 0, 0, false, std::nullopt};
  EXPECT_NEAR(intervention_time(here, plan), 0.0034, 1e-4);
  Assignment conflicted{"y", "y", 10, 10, 12, true, std::nullopt};
  EXPECT_DOUBLE_EQ(intervention_time(conflicted, plan), 12.0 + 205.0 / 60000.0);
  plan.coordination_latency_ms.reset();
  EXPECT_THROW(intervention_time(near, plan), std::logic_error);
}

TEST(Coordinator, IncidentTupleFansOutToEightDispatches) {
  auto inputs = canonical_inputs();
  auto board = std::make_shared<Blackboard>(load_road_network(inputs.road));
  auto file = io::application_from_json(inputs.application);
  CoordinatorBehavior coordinator(board, "DISPATCH");
  ModuleInstance inst{"esn-coordinator", "esn", json::object(), std::shared_ptr<ModuleBehavior>(&coordinator, [](auto*) {})};
  Tuple incident;
  incident.type = "INCIDENT";
  incident.mi = 20;
  incident.context = {{"incident", "inc1"}, {"sensor", "sas3"}};
  RngStream rng(1, "c");
  TupleIdSource ids;
  const auto out = process_tuple_arrival(inst, incident, file.app, esn_device(), 1_s, rng, ids);
  ASSERT_EQ(out.outputs.size(), 8u);
  ASSERT_EQ(out.phases.size(), 2u);
  EXPECT_EQ(out.phases[1].label, "dijkstra");
  EXPECT_EQ(out.phases[1].mi, 0.03);
  ASSERT_EQ(board->plans.size(), 1u);
  EXPECT_EQ(board->plans.front().zone, "z3");
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(out.outputs[i].type, "DISPATCH");
    EXPECT_EQ(out.outputs[i].target_device, board->plans.front().assignments[i].device);
    EXPECT_EQ(out.outputs[i].context.at("unit"), board->plans.front().assignments[i].unit);
    EXPECT_EQ(out.outputs[i].context.at("incident"), "inc1");
  }
  EXPECT_EQ(inst.state["handled"], 1);
}

TEST(Scenario, OneIncidentCreatesEighteenTuples) {
  const auto r = run_incidents({{1_s, "z1", "fire", ""}});
  EXPECT_EQ(r.metrics.tuples.created, 18u);
  EXPECT_EQ(r.metrics.tuples.consumed, 18u);
  EXPECT_TRUE(r.metrics.tuples.conserved());
  ASSERT_EQ(r.plans.size(), 1u);
  EXPECT_EQ(r.metrics.loop_samples.size(), 8u);
  const auto& plan = r.plans.front();
  ASSERT_TRUE(plan.coordination_latency_ms);
  for (const auto& a : plan.assignments) {
    ASSERT_TRUE(a.confirmation_latency_ms);
    EXPECT_GE(*a.confirmation_latency_ms, *plan.coordination_latency_ms);
  }
}

TEST(Scenario, CoordinationLatencyIsCalibrated) {
  const auto r = run_incidents({{1_s, "z1", "fire", ""}});
  const double ms = *r.plans.front().coordination_latency_ms;
  EXPECT_GE(ms, 200.0);
  EXPECT_LE(ms, 215.0);
  for (const auto& s : r.metrics.loop_samples) {
    EXPECT_EQ(s.breakdown.propagation, 200_ms);
    EXPECT_EQ(s.latency, s.breakdown.total());
  }
}

TEST(Scenario, OnlyTheCoordinatorTierAccruesCost) {
  const auto r = run_incidents({{1_s, "z2", "fire", ""}});
  for (const auto& [id, c] : r.metrics.cost) {
    if (id == "esn") EXPECT_GT(c.total_cost, 0.0);
    else EXPECT_EQ(c.total_cost, 0.0) << id;
  }
}

TEST(Scenario, ZoneInvarianceAndOracleOrdering) {
  const Oracle oracle(road_json());
  std::map<std::string, double> coordination, mean;
  for (const char* z : {"z1", "z2", "z3", "z4", "z5"}) {
    const auto r = run_incidents({{1_s, z, "fire", ""}});
    coordination[z] = *r.plans.front().coordination_latency_ms;
    mean[z] = mean_intervention_time(r.plans.front());
  }
  for (const auto& [z, c] : coordination) EXPECT_EQ(c, coordination.at("z1")) << z;

  std::vector<std::pair<double, std::string>> simulated, expected;
  for (const auto& [z, m] : mean) {
    simulated.emplace_back(m, z);
    expected.emplace_back(oracle.mean_top8_km(z), z);
    EXPECT_NEAR(m, oracle.mean_top8_km(z) + coordination.at(z) / 60000.0, 1e-12);
  }
  std::sort(simulated.begin(), simulated.end());
  std::sort(expected.begin(), expected.end());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(simulated[i].second, expected[i].second);
  EXPECT_EQ(simulated.front().second, "z4");
  EXPECT_EQ(simulated.back().second, "z1");

  int near = 0;
  for (const auto& [d, _] : oracle.ranking("z4")) near += d <= 1.5;
  EXPECT_GE(near, 3);
}

TEST(Scenario, TravelDominatesCoordination) {
  for (const char* z : {"z1", "z2", "z3", "z4", "z5"}) {
    const auto r = run_incidents({{1_s, z, "fire", ""}});
    const auto& plan = r.plans.front();
    double min_travel = std::numeric_limits<double>::infinity();
    for (const auto& a : plan.assignments) min_travel = std::min(min_travel, a.travel_minutes);
    EXPECT_GE(min_travel, 100 * *plan.coordination_latency_ms / 60000.0) << z;
  }
}

TEST(Scenario, ContentionDirection) {
  const double baseline = *plan_of(run_incidents({{1_s, "z2", "fire", ""}}), "z2").coordination_latency_ms;
  const std::vector<IncidentSpec> dual{{1_s, "z1", "fire", ""}, {1_s, "z2", "fire", ""}};
  ScenarioOptions p1, p2, p4;
  p1.coordinator_parallelism = 1;
  p2.coordinator_parallelism = 2;
  p4.coordinator_parallelism = 4;
  const auto r1 = run_incidents(dual, p1), r2 = run_incidents(dual, p2), r4 = run_incidents(dual, p4);
  EXPECT_GT(*plan_of(r1, "z2").coordination_latency_ms, baseline);
  EXPECT_EQ(*plan_of(r2, "z2").coordination_latency_ms, baseline);
  EXPECT_EQ(*plan_of(r4, "z2").coordination_latency_ms, baseline);
  EXPECT_EQ(r1.conflict_rates.back(), 0.75);
  EXPECT_EQ(r2.conflict_rates.back(), 0.75);
}

TEST(Scenario, SequentialIncidentsReuseTheCache) {
  std::vector<IncidentSpec> seq;
  for (int k = 0; k < 5; ++k) seq.push_back({SimTime::from_millis(1000 + 600000.0 * k), "z1", "fire", ""});
  const auto r = run_incidents(seq, {}, canonical_inputs(), 3001_s);
  EXPECT_EQ(r.cache_misses, 1u);
  EXPECT_EQ(r.cache_hits, 4u);
  std::vector<SimTime> dijkstra;
  for (const auto& ph : r.metrics.phases)
    if (ph.label == "dijkstra") dijkstra.push_back(ph.duration);
  ASSERT_EQ(dijkstra.size(), 5u);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_EQ(dijkstra[0].nanos(), 200 * dijkstra[k].nanos());
  for (double rate : r.conflict_rates) EXPECT_EQ(rate, 0.0);
}

TEST(Scenario, CacheIsTransparentWhenWarmEqualsCold) {
  auto with_cache = canonical_inputs();
  with_cache.road["config"]["warmMI"] = with_cache.road["config"]["coldMI"];
  auto without = with_cache;
  without.road["config"]["pathCache"] = false;
  std::vector<IncidentSpec> seq;
  for (int k = 0; k < 4; ++k) seq.push_back({SimTime::from_millis(1000 + 600000.0 * k), k % 2 ? "z3" : "z1", "fire", ""});
  const auto a = run_incidents(seq, {}, with_cache, 2000_s), b = run_incidents(seq, {}, without, 2000_s);
  EXPECT_EQ(a.cache_hits, 2u);
  EXPECT_EQ(b.cache_hits, 0u);
  ASSERT_EQ(a.metrics.loop_samples.size(), b.metrics.loop_samples.size());
  for (std::size_t i = 0; i < a.metrics.loop_samples.size(); ++i)
    EXPECT_EQ(a.metrics.loop_samples[i].latency, b.metrics.loop_samples[i].latency);
  for (std::size_t i = 0; i < a.plans.size(); ++i) EXPECT_EQ(unit_ids(a.plans[i]), unit_ids(b.plans[i]));
}

TEST(Scenario, FailedCoordinatorDropsAlertsAndRecovers) {
  EmergencyScenario sc(canonical_inputs(), {42, "", false, false, {}});
  sc.add_fault({2_s, FailDevice{"esn"}});
  sc.add_fault({4_s, RecoverDevice{"esn"}});
  sc.add_incident({1_s, "z1", "fire", "before"});
  sc.add_incident({3_s, "z2", "fire", "during"});
  sc.add_incident({5_s, "z3", "fire", "after"});
  const auto r = sc.run(10_s);
  EXPECT_GT(r.metrics.tuples.dropped, 0u);
  EXPECT_TRUE(r.metrics.tuples.conserved());
  ASSERT_EQ(r.plans.size(), 2u);
  EXPECT_EQ(r.plans[0].incident_id, "before");
  EXPECT_EQ(r.plans[1].incident_id, "after");
  EXPECT_EQ(*r.plans[0].coordination_latency_ms, *r.plans[1].coordination_latency_ms);
}

TEST(Scenario, UnknownZoneIsRejected) {
  EmergencyScenario sc(canonical_inputs(), {});
  EXPECT_THROW(sc.add_incident({1_s, "z9", "fire", ""}), ScenarioError);
}

TEST(Scenario, IncidentScriptParses) {
  const auto incidents = incidents_from_json(json::parse(R"([{"atMs": 1500, "zone": "z2"}, {"atMs": 2, "zone": "z4", "kind": "flood", "id": "x"}])"));
  ASSERT_EQ(incidents.size(), 2u);
  EXPECT_EQ(incidents[0].at, 1500_ms);
  EXPECT_EQ(incidents[0].kind, "fire");
  EXPECT_EQ(incidents[1].id, "x");
  EXPECT_THROW(incidents_from_json(json::parse(R"([{"zone": "z2"}])")), ScenarioError);
}

}  // namespace
