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
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "../errors.hpp"
#include "../sim_time.hpp"
#include "../topology.hpp"

namespace graphfog::emergency {

enum class Role { Zone, Fire, Police, Medical, AntiTerror, Relay };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Zone: return "ZONE";
    case Role::Fire: return "FIRE";
    case Role::Police: return "POLICE";
    case Role::Medical: return "MEDICAL";
    case Role::AntiTerror: return "ANTITERROR";
    case Role::Relay: return "RELAY";
  }
  return "?";
}

inline Role role_from_string(std::string_view s) {
  if (s == "ZONE") return Role::Zone;
  if (s == "FIRE") return Role::Fire;
  if (s == "POLICE") return Role::Police;
  if (s == "MEDICAL") return Role::Medical;
  if (s == "ANTITERROR") return Role::AntiTerror;
  if (s == "RELAY") return Role::Relay;
  throw ScenarioError("unknown road node role '" + std::string(s) + "'");
}

inline bool is_unit(Role r) { return r != Role::Zone && r != Role::Relay; }

struct RoadConfig {
  double unit_speed_km_per_min = 1.0;
  double cold_mi = 0.03;        ///< charged on a cache miss (full traversal)
  double warm_mi = 0.00015;     ///< charged on a cache hit
  double conflict_penalty = 1.2;
  std::size_t units_per_incident = 8;
  double overlap_window_ms = 60000.0;  ///< incidents raised this close together compete for units
  bool path_cache = true;              ///< false: every lookup recomputes and is charged coldMI
  std::map<Role, std::size_t> quota;  ///< per-kind cap on selected units; empty disables
};

/// Expected node and edge counts of the city model.
struct RoadShape {
  std::size_t edges = 41;
  std::map<Role, std::size_t> roles{{Role::Zone, 5},    {Role::Fire, 3},       {Role::Police, 2},
                                    {Role::Medical, 3}, {Role::AntiTerror, 2}, {Role::Relay, 10}};
};

/// Road graph with km weights plus role tags and device bindings.
struct RoadNetwork {
  PhysicalGraph graph;
  std::map<std::string, Role> roles;
  std::map<std::string, std::string> zone_sensor;  ///< zone node -> sensor id
  std::map<std::string, std::string> unit_device;  ///< unit node -> IOPS device id
  RoadConfig config;

  std::vector<std::string> with_role(Role r) const {
    std::vector<std::string> out;
    for (const auto& [id, role] : roles)
      if (role == r) out.push_back(id);
    return out;
  }
  std::vector<std::string> units() const {
    std::vector<std::string> out;
    for (const auto& [id, role] : roles)
      if (is_unit(role)) out.push_back(id);
    return out;
  }
  std::vector<std::string> zones() const { return with_role(Role::Zone); }
  std::optional<std::string> zone_of_sensor(std::string_view sensor) const {
    for (const auto& [z, s] : zone_sensor)
      if (s == sensor) return z;
    return std::nullopt;
  }
};

/// Parses and validates a road network file:
/// `{nodes: [{id, role, sensor?, device?}], edges: [{a, b, km}], config: {...}}`.
/// Pass `shape = std::nullopt` to accept networks of any size.
inline RoadNetwork load_road_network(const nlohmann::json& j, std::optional<RoadShape> shape = RoadShape{}) {
  RoadNetwork net;
  try {
    TopologySpec spec;
    std::map<Role, std::size_t> counts;
    for (const auto& n : j.at("nodes")) {
      const auto id = n.at("id").get<std::string>();
      const Role role = role_from_string(n.at("role").get<std::string>());
      if (!net.roles.emplace(id, role).second) throw DuplicateId("duplicate road node '" + id + "'");
      ++counts[role];
      if (n.contains("sensor")) net.zone_sensor[id] = n.at("sensor").get<std::string>();
      if (n.contains("device")) net.unit_device[id] = n.at("device").get<std::string>();
      Device d;
      d.id = id;
      d.mips = 1.0;
      spec.devices.push_back(std::move(d));
    }
    for (const auto& e : j.at("edges")) {
      Link l;
      l.a = e.at("a").get<std::string>();
      l.b = e.at("b").get<std::string>();
      l.weight_km = e.at("km").get<double>();
      spec.links.push_back(std::move(l));
    }
    if (shape) {
      for (const auto& [role, want] : shape->roles) {
        const std::size_t have = counts.count(role) ? counts.at(role) : 0;
        if (have != want)
          throw RoleCountMismatch("role " + std::string(to_string(role)) + ": expected " + std::to_string(want) +
                                  " nodes, found " + std::to_string(have));
      }
      if (spec.links.size() != shape->edges)
        throw WrongEdgeCount("expected " + std::to_string(shape->edges) + " edges, found " +
                             std::to_string(spec.links.size()));
    }
    net.graph = build_graph(std::move(spec));

    const auto& c = j.value("config", nlohmann::json::object());
    net.config.unit_speed_km_per_min = c.value("unitSpeedKmPerMin", net.config.unit_speed_km_per_min);
    net.config.cold_mi = c.value("coldMI", net.config.cold_mi);
    net.config.warm_mi = c.value("warmMI", net.config.warm_mi);
    net.config.conflict_penalty = c.value("conflictPenalty", net.config.conflict_penalty);
    net.config.units_per_incident = c.value("unitsPerIncident", net.config.units_per_incident);
    net.config.overlap_window_ms = c.value("overlapWindowMs", net.config.overlap_window_ms);
    net.config.path_cache = c.value("pathCache", net.config.path_cache);
    const nlohmann::json quota = c.value("quota", nlohmann::json::object());
    for (const auto& [role, n] : quota.items())
      net.config.quota[role_from_string(role)] = n.get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("road network: ") + e.what());
  }
  if (!(net.config.unit_speed_km_per_min > 0)) throw ScenarioError("unitSpeedKmPerMin must be positive");
  if (net.config.cold_mi < 0 || net.config.warm_mi < 0) throw ScenarioError("cache MI must be non-negative");

  if (net.graph.device_count() > 0) {
    const auto tree = shortest_paths(net.graph, net.graph.device_at(0).id, WeightKind::DistanceKm);
    for (const auto& [id, d] : tree.distance)
      if (!std::isfinite(d)) throw NotConnected("road node '" + id + "' is unreachable");
  }
  return net;
}

struct Incident {
  std::string id;
  std::string zone;
  std::string kind = "fire";
  SimTime raised_at;
};

struct Assignment {
  std::string unit;
  std::string device;  ///< IOPS that receives the order
  double distance_km = 0.0;
  double base_travel_minutes = 0.0;
  double travel_minutes = 0.0;  ///< includes the conflict penalty when conflicted
  bool conflicted = false;
  std::optional<double> confirmation_latency_ms;
};

struct DispatchPlan {
  std::string incident_id;
  std::string zone;
  SimTime raised_at;
  std::vector<Assignment> assignments;
  std::optional<double> coordination_latency_ms;  ///< first confirmation of the alert chain
  bool cache_hit = false;
  double charged_mi = 0.0;
};

/// Zone-keyed store of distance maps, shared by every incident of a run.
class PathCache {
 public:
  using DistanceMap = std::map<std::string, double>;

  PathCache(double cold_mi, double warm_mi, bool enabled = true)
      : cold_mi_(cold_mi), warm_mi_(warm_mi), enabled_(enabled) {}

  struct Lookup {
    const DistanceMap& distances;
    bool hit;
    double charged_mi;
  };

  Lookup lookup(const std::string& zone, const std::function<DistanceMap()>& compute) {
    if (auto it = entries_.find(zone); it != entries_.end()) {
      ++hits_;
      return {it->second, true, warm_mi_};
    }
    ++misses_;
    if (!enabled_) {
      scratch_ = compute();
      return {scratch_, false, cold_mi_};
    }
    auto [it, _] = entries_.emplace(zone, compute());
    return {it->second, false, cold_mi_};
  }

  bool contains(const std::string& zone) const { return entries_.count(zone) > 0; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  double cold_mi() const { return cold_mi_; }
  double warm_mi() const { return warm_mi_; }

 private:
  std::map<std::string, DistanceMap> entries_;
  DistanceMap scratch_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  double cold_mi_;
  double warm_mi_;
  bool enabled_;
};

/// Picks the nearest units for an incident, going through the path cache.
inline DispatchPlan dispatch(const Incident& incident, const RoadNetwork& net, PathCache& cache, const Device& esn) {
  if (!esn.up()) throw EsnDown("coordinator device '" + esn.id + "' is down");
  auto role = net.roles.find(incident.zone);
  if (role == net.roles.end() || role->second != Role::Zone)
    throw ZoneUnreachable("'" + incident.zone + "' is not a zone of the road network");

  auto found = cache.lookup(incident.zone, [&] { return shortest_paths(net.graph, incident.zone, WeightKind::DistanceKm).distance; });

  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& u : net.units()) {
    const double d = found.distances.at(u);
    if (std::isfinite(d)) ranked.emplace_back(d, u);
  }
  std::sort(ranked.begin(), ranked.end());

  DispatchPlan plan;
  plan.incident_id = incident.id;
  plan.zone = incident.zone;
  plan.raised_at = incident.raised_at;
  plan.cache_hit = found.hit;
  plan.charged_mi = found.charged_mi;
  std::map<Role, std::size_t> taken;
  for (const auto& [d, u] : ranked) {
    if (plan.assignments.size() == net.config.units_per_incident) break;
    const Role r = net.roles.at(u);
    if (auto q = net.config.quota.find(r); q != net.config.quota.end() && taken[r] >= q->second) continue;
    ++taken[r];
    Assignment a;
    a.unit = u;
    a.device = net.unit_device.count(u) ? net.unit_device.at(u) : u;
    a.distance_km = d;
    a.base_travel_minutes = d / net.config.unit_speed_km_per_min;
    a.travel_minutes = a.base_travel_minutes;
    plan.assignments.push_back(std::move(a));
  }
  if (plan.assignments.size() < net.config.units_per_incident)
    throw ZoneUnreachable("only " + std::to_string(plan.assignments.size()) + " units reachable from " + incident.zone);
  return plan;
}

struct ConflictResolution {
  std::vector<DispatchPlan> plans;
  std::vector<double> rates;  ///< per plan; the first plan is always 0
  double conflict_rate = 0.0;  ///< rate of the last plan
};

/// Greedy resolution in arrival order: a unit already claimed by an earlier
/// plan stays assigned to the later one but travels with the penalty applied.
inline ConflictResolution resolve_conflicts(std::vector<DispatchPlan> plans, double penalty) {
  ConflictResolution out;
  std::set<std::string> claimed;
  for (auto& plan : plans) {
    std::size_t conflicted = 0;
    for (auto& a : plan.assignments) {
      a.conflicted = claimed.count(a.unit) > 0;
      a.travel_minutes = a.conflicted ? a.base_travel_minutes * penalty : a.base_travel_minutes;
      conflicted += a.conflicted;
    }
    const double rate =
        plan.assignments.empty() ? 0.0 : static_cast<double>(conflicted) / static_cast<double>(plan.assignments.size());
    out.rates.push_back(rate);
    for (const auto& a : plan.assignments) claimed.insert(a.unit);
  }
  out.conflict_rate = out.rates.empty() ? 0.0 : out.rates.back();
  out.plans = std::move(plans);
  return out;
}

/// Minutes from alert to the unit reaching the scene.
inline double intervention_time(const Assignment& a, const DispatchPlan& plan) {
  if (!plan.coordination_latency_ms) throw std::logic_error("plan '" + plan.incident_id + "' was never confirmed");
  return *plan.coordination_latency_ms / 60000.0 + a.travel_minutes;
}

inline double mean_intervention_time(const DispatchPlan& plan) {
  if (plan.assignments.empty()) return 0.0;
  double sum = 0;
  for (const auto& a : plan.assignments) sum += intervention_time(a, plan);
  return sum / static_cast<double>(plan.assignments.size());
}

}  // namespace graphfog::emergency
