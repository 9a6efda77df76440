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

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "../application.hpp"
#include "../io.hpp"
#include "../simulation.hpp"
#include "road_network.hpp"

namespace graphfog::emergency {

struct IncidentSpec {
  SimTime at;
  std::string zone;
  std::string kind = "fire";
  std::string id;  ///< assigned in script order when empty
};

/// `[{atMs, zone, kind, id?}]`
inline std::vector<IncidentSpec> incidents_from_json(const nlohmann::json& j) {
  try {
    std::vector<IncidentSpec> out;
    for (const auto& e : j) {
      IncidentSpec s;
      s.at = SimTime::from_millis(e.at("atMs").get<double>());
      s.zone = e.at("zone").get<std::string>();
      s.kind = e.value("kind", std::string("fire"));
      s.id = e.value("id", std::string());
      out.push_back(std::move(s));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("incident script: ") + e.what());
  }
}

/// State shared across incidents of one run: the road network, the path
/// cache and the dispatch plans in coordinator arrival order.
struct Blackboard {
  RoadNetwork network;
  PathCache cache;
  std::vector<DispatchPlan> plans;

  explicit Blackboard(RoadNetwork net) : network(std::move(net)), cache(network.config.cold_mi, network.config.warm_mi, network.config.path_cache) {}
};

/// The coordinator module: classifies the incident, computes routes through
/// the cache and issues one dispatch tuple per selected unit.
class CoordinatorBehavior final : public ModuleBehavior {
 public:
  CoordinatorBehavior(std::shared_ptr<Blackboard> board, std::string dispatch_type)
      : board_(std::move(board)), dispatch_type_(std::move(dispatch_type)) {}

  ArrivalResult on_tuple_arrival(ModuleContext& ctx, const Tuple& t) override {
    Incident inc;
    auto get = [&t](const char* key) -> std::string {
      auto it = t.context.find(key);
      return it == t.context.end() ? std::string() : it->second;
    };
    inc.id = get("incident");
    inc.zone = get("zone");
    inc.kind = get("kind");
    if (inc.zone.empty())
      if (auto z = board_->network.zone_of_sensor(get("sensor"))) inc.zone = *z;
    if (inc.id.empty()) inc.id = "tuple-" + std::to_string(t.id);
    inc.raised_at = t.origin_created_at;

    DispatchPlan plan = dispatch(inc, board_->network, board_->cache, ctx.host);
    ctx.state["handled"] = ctx.state.value("handled", 0) + 1;

    ArrivalResult r;
    r.extra_phases.push_back({"dijkstra", plan.charged_mi});
    std::vector<Emission> orders;
    for (const auto& a : plan.assignments) orders.push_back({dispatch_type_, a.device, {{"unit", a.unit}}});
    r.emissions = std::move(orders);
    board_->plans.push_back(std::move(plan));
    return r;
  }

 private:
  std::shared_ptr<Blackboard> board_;
  std::string dispatch_type_;
};

struct ScenarioInputs {
  nlohmann::json topology;
  nlohmann::json application;
  nlohmann::json road;
};

struct ScenarioOptions {
  std::optional<int> coordinator_parallelism;
  std::optional<PlacementPolicy> placement;
  std::string coordinator_module = "esn-coordinator";
  std::string coordinator_device = "esn";
  std::string dispatch_tuple_type = "DISPATCH";
  bool enforce_canonical_shape = true;
};

struct ScenarioResult {
  RunSummary summary;
  MetricsLedger metrics;
  std::vector<DispatchPlan> plans;  ///< conflict-annotated, arrival order
  std::vector<double> conflict_rates;  ///< aligned with plans
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::string trace;
};

/// Wires the emergency application onto a fog simulation.
class EmergencyScenario {
 public:
  EmergencyScenario(const ScenarioInputs& in, SimulationOptions sim_options, ScenarioOptions options = {})
      : options_(std::move(options)) {
    auto shape = options_.enforce_canonical_shape ? std::optional<RoadShape>(RoadShape{}) : std::nullopt;
    board_ = std::make_shared<Blackboard>(load_road_network(in.road, shape));

    TopologySpec spec = io::topology_spec_from_json(in.topology);
    if (options_.coordinator_parallelism) {
      auto it = std::find_if(spec.devices.begin(), spec.devices.end(),
                             [&](const Device& d) { return d.id == options_.coordinator_device; });
      if (it == spec.devices.end()) throw ScenarioError("no device '" + options_.coordinator_device + "'");
      it->parallelism = *options_.coordinator_parallelism;
      spec.allow_cpu_parallelism = true;
    }
    PhysicalGraph graph = build_graph(std::move(spec));

    io::ApplicationFile app = io::application_from_json(in.application);
    if (!app.app.find_module(options_.coordinator_module))
      throw ScenarioError("application has no module '" + options_.coordinator_module + "'");
    app.app.behaviors[options_.coordinator_module] =
        std::make_shared<CoordinatorBehavior>(board_, options_.dispatch_tuple_type);
    for (const auto& [zone, sensor] : board_->network.zone_sensor)
      if (!app.app.find_sensor(sensor)) throw ScenarioError("zone " + zone + " bound to unknown sensor " + sensor);

    const PlacementPolicy policy = options_.placement.value_or(app.policy);
    Placement placement = place_modules(app.app, graph, policy, app.explicit_map);
    sim_ = std::make_unique<FogSimulation>(std::move(graph), std::move(app.app), std::move(placement),
                                           std::move(sim_options));
  }

  void add_incident(IncidentSpec inc) {
    auto it = board_->network.zone_sensor.find(inc.zone);
    if (it == board_->network.zone_sensor.end()) throw ScenarioError("zone '" + inc.zone + "' has no sensor");
    if (inc.id.empty()) inc.id = "inc" + std::to_string(++incident_count_);
    sim_->trigger_sensor(it->second, inc.at, {{"incident", inc.id}, {"zone", inc.zone}, {"kind", inc.kind}});
  }

  void add_fault(const TopologyEvent& ev) { sim_->schedule_topology_event(ev); }

  ScenarioResult run(SimTime horizon) {
    ScenarioResult r;
    r.summary = sim_->run_until(horizon);
    r.metrics = sim_->metrics();
    r.cache_hits = board_->cache.hits();
    r.cache_misses = board_->cache.misses();
    r.trace = sim_->engine().serialize_trace();

    std::vector<DispatchPlan> plans = board_->plans;
    for (auto& plan : plans) {
      for (const auto& s : r.metrics.loop_samples) {
        auto inc = s.context.find("incident");
        if (inc == s.context.end() || inc->second != plan.incident_id) continue;
        const double ms = s.latency_ms();
        if (!plan.coordination_latency_ms || ms < *plan.coordination_latency_ms) plan.coordination_latency_ms = ms;
        auto unit = s.context.find("unit");
        if (unit == s.context.end()) continue;
        for (auto& a : plan.assignments)
          if (a.unit == unit->second) a.confirmation_latency_ms = ms;
      }
    }

    // Incidents raised within the overlap window of a group's first incident compete for units.
    const SimTime window = SimTime::from_millis(board_->network.config.overlap_window_ms);
    std::size_t i = 0;
    while (i < plans.size()) {
      std::size_t j = i + 1;
      while (j < plans.size() && plans[j].raised_at <= plans[i].raised_at + window && plans[i].raised_at <= plans[j].raised_at + window) ++j;
      std::vector<DispatchPlan> group(plans.begin() + static_cast<std::ptrdiff_t>(i), plans.begin() + static_cast<std::ptrdiff_t>(j));
      auto res = resolve_conflicts(std::move(group), board_->network.config.conflict_penalty);
      for (std::size_t k = 0; k < res.plans.size(); ++k) {
        r.plans.push_back(std::move(res.plans[k]));
        r.conflict_rates.push_back(res.rates[k]);
      }
      i = j;
    }
    return r;
  }

  FogSimulation& simulation() { return *sim_; }
  const Blackboard& board() const { return *board_; }

 private:
  ScenarioOptions options_;
  std::shared_ptr<Blackboard> board_;
  std::unique_ptr<FogSimulation> sim_;
  std::size_t incident_count_ = 0;
};

}  // namespace graphfog::emergency
