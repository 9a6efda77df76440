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
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "rng.hpp"
#include "sim_time.hpp"
#include "topology.hpp"

namespace graphfog {

enum class Direction { Up, Down, Actuator };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "UP";
    case Direction::Down: return "DOWN";
    case Direction::Actuator: return "ACTUATOR";
  }
  return "?";
}

inline Direction direction_from_string(std::string_view s) {
  if (s == "UP") return Direction::Up;
  if (s == "DOWN") return Direction::Down;
  if (s == "ACTUATOR") return Direction::Actuator;
  throw InvalidApplication("unknown tuple direction '" + std::string(s) + "'");
}

/// Arrival of a tuple at a sensor (emission), device or actuator.
struct Hop {
  std::string node;
  SimTime arrival;
  friend bool operator==(const Hop&, const Hop&) = default;
};

/// Where the time of a tuple chain went. The four parts always sum to the
/// elapsed time since the originating sensor emission.
struct LatencyBreakdown {
  SimTime propagation;
  SimTime transmission;
  SimTime queueing;
  SimTime compute;

  SimTime network() const { return propagation + transmission; }
  SimTime total() const { return propagation + transmission + queueing + compute; }
  friend bool operator==(const LatencyBreakdown&, const LatencyBreakdown&) = default;
};

using Context = std::map<std::string, std::string>;

struct Tuple {
  std::uint64_t id = 0;
  std::string app_id;
  std::string type;
  Direction direction = Direction::Up;
  double mi = 0.0;
  std::uint64_t size_bits = 0;
  std::string src_module;
  std::string dst_module;  ///< module name, or actuator type for ACTUATOR tuples
  SimTime created_at;
  SimTime origin_created_at;  ///< emission time of the sensor tuple that started the chain
  std::set<std::string> loop_tags;
  std::vector<Hop> hop_trace;
  LatencyBreakdown breakdown;
  std::string target_device;  ///< optional routing hint, inherited by outputs
  Context context;
};

class TupleIdSource {
 public:
  std::uint64_t operator()() { return next_++; }
  std::uint64_t issued() const { return next_; }

 private:
  std::uint64_t next_ = 1;
};

struct Selectivity {
  enum class Kind { Always, Fractional };
  Kind kind = Kind::Always;
  double p = 1.0;

  static Selectivity always() { return {}; }
  static Selectivity fractional(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidApplication("selectivity must lie in [0,1]");
    return {Kind::Fractional, p};
  }

  bool emit(RngStream& rng) const { return kind == Kind::Always || rng.bernoulli(p); }
};

struct AppEdge {
  std::string src;         ///< module name or sensor type
  std::string dst;         ///< module name or actuator type
  std::string tuple_type;
  std::string input_type;  ///< fire only for this input tuple type; empty matches any
  Direction direction = Direction::Up;
  double mi = 0.0;         ///< charged at the destination module
  std::uint64_t size_bits = 0;
  Selectivity selectivity;
};

struct ModuleSpec {
  std::string name;
  double ram_mb = 0.0;
  std::vector<std::string> candidates;  ///< host constraint; trailing '*' is a prefix match
  bool per_device = false;              ///< one instance on every qualifying device

  bool admits(const Device& d) const {
    if (d.ram_mb < ram_mb) return false;
    if (candidates.empty()) return true;
    return std::any_of(candidates.begin(), candidates.end(), [&](const std::string& c) {
      if (!c.empty() && c.back() == '*') return d.id.compare(0, c.size() - 1, c, 0, c.size() - 1) == 0;
      return c == d.id;
    });
  }
};

// ---------------------------------------------------------------------------
// Stateful modules

struct ComputePhase {
  std::string label;
  double mi = 0.0;
};

/// An output a module hook asks for explicitly, bypassing selectivity.
struct Emission {
  std::string tuple_type;
  std::string target_device;
  Context context;
};

struct ArrivalResult {
  std::vector<ComputePhase> extra_phases;
  std::optional<std::vector<Emission>> emissions;
};

struct ModuleContext {
  const std::string& module;
  const Device& host;
  SimTime now;
  nlohmann::json& state;
  RngStream& rng;
};

/// Lifecycle hooks of a module. The per-instance state store is handed in
/// through the context; behaviours themselves may be shared between instances.
class ModuleBehavior {
 public:
  virtual ~ModuleBehavior() = default;
  virtual void on_init(ModuleContext&) {}
  virtual ArrivalResult on_tuple_arrival(ModuleContext&, const Tuple&) { return {}; }
  virtual nlohmann::json on_checkpoint(const nlohmann::json& state) const { return state; }
  virtual void on_restore(nlohmann::json& state, const nlohmann::json& snapshot) { state = snapshot; }
};

struct ModuleInstance {
  std::string module;
  std::string host;
  nlohmann::json state = nlohmann::json::object();
  std::shared_ptr<ModuleBehavior> behavior;

  nlohmann::json checkpoint() const { return behavior ? behavior->on_checkpoint(state) : state; }
  void restore(const nlohmann::json& snapshot) {
    if (behavior) behavior->on_restore(state, snapshot);
    else state = snapshot;
  }
};

// ---------------------------------------------------------------------------
// Sensors, actuators, loops

struct Sensor {
  std::string id;
  std::string type;
  std::string attached_device;
  std::string tuple_type;
  double nominal_interval_ms = 0.0;  ///< 0: emits only when triggered by a script
  double jitter_fraction = 0.02;
  double battery_capacity_mj = 1e12;
  double tx_energy_per_tuple_mj = 0.0;
  SimTime latency;                   ///< link delay to the attached device
  std::uint64_t emitted = 0;

  double consumed_mj() const { return static_cast<double>(emitted) * tx_energy_per_tuple_mj; }
  double remaining_mj() const { return battery_capacity_mj - consumed_mj(); }
  bool can_emit() const { return remaining_mj() >= tx_energy_per_tuple_mj; }
};

struct Actuator {
  std::string id;
  std::string type;
  std::string attached_device;
  SimTime latency;
};

struct AppLoop {
  std::string id;
  std::vector<std::string> modules;  ///< source sensor type ... sink actuator type

  bool has_step(std::string_view from, std::string_view to) const {
    for (std::size_t i = 0; i + 1 < modules.size(); ++i)
      if (modules[i] == from && modules[i + 1] == to) return true;
    return false;
  }
};

/// One end-to-end sample of an application loop.
struct LoopSample {
  std::string loop_id;
  std::uint64_t tuple_id = 0;
  SimTime origin;
  SimTime completed_at;
  SimTime latency;
  LatencyBreakdown breakdown;
  std::vector<Hop> hops;
  std::string sink;
  Context context;

  double latency_ms() const { return latency.millis(); }
};

class Application {
 public:
  std::string id = "app";
  std::vector<ModuleSpec> modules;
  std::vector<AppEdge> edges;
  std::vector<Sensor> sensors;
  std::vector<Actuator> actuators;
  std::vector<AppLoop> loops;
  std::map<std::string, std::shared_ptr<ModuleBehavior>> behaviors;

  const ModuleSpec* find_module(std::string_view name) const {
    for (const auto& m : modules)
      if (m.name == name) return &m;
    return nullptr;
  }
  bool is_sensor_type(std::string_view t) const {
    return std::any_of(sensors.begin(), sensors.end(), [&](const Sensor& s) { return s.type == t; });
  }
  bool is_actuator_type(std::string_view t) const {
    return std::any_of(actuators.begin(), actuators.end(), [&](const Actuator& a) { return a.type == t; });
  }

  std::vector<const AppEdge*> outgoing(std::string_view src) const {
    std::vector<const AppEdge*> out;
    for (const auto& e : edges)
      if (e.src == src) out.push_back(&e);
    return out;
  }

  const AppEdge* find_edge(std::string_view src, std::string_view tuple_type) const {
    for (const auto& e : edges)
      if (e.src == src && e.tuple_type == tuple_type) return &e;
    return nullptr;
  }

  Sensor* find_sensor(std::string_view sid) {
    for (auto& s : sensors)
      if (s.id == sid) return &s;
    return nullptr;
  }

  /// Structural checks: known endpoints, acyclic module graph, loops backed by edges.
  void validate() const {
    std::set<std::string> names;
    for (const auto& m : modules)
      if (!names.insert(m.name).second) throw InvalidApplication("duplicate module '" + m.name + "'");
    for (const auto& e : edges) {
      const bool src_ok = find_module(e.src) || is_sensor_type(e.src);
      const bool dst_ok = find_module(e.dst) || is_actuator_type(e.dst);
      if (!src_ok) throw InvalidApplication("edge source '" + e.src + "' is neither module nor sensor type");
      if (!dst_ok) throw InvalidApplication("edge destination '" + e.dst + "' is neither module nor actuator type");
      if (e.mi < 0) throw InvalidApplication("edge " + e.src + "->" + e.dst + ": negative MI");
      if (!(e.selectivity.p >= 0.0 && e.selectivity.p <= 1.0)) throw InvalidApplication("selectivity outside [0,1]");
    }
    // Kahn's algorithm over modules only.
    std::map<std::string, int> indeg;
    for (const auto& m : modules) indeg[m.name] = 0;
    for (const auto& e : edges)
      if (find_module(e.src) && find_module(e.dst)) ++indeg[e.dst];
    std::vector<std::string> ready;
    for (const auto& [n, d] : indeg)
      if (d == 0) ready.push_back(n);
    std::size_t seen = 0;
    while (!ready.empty()) {
      const std::string n = ready.back();
      ready.pop_back();
      ++seen;
      for (const auto& e : edges)
        if (e.src == n && find_module(e.dst) && --indeg[e.dst] == 0) ready.push_back(e.dst);
    }
    if (seen != modules.size()) throw InvalidApplication("application edges contain a cycle");

    for (const auto& l : loops) {
      if (l.modules.size() < 2) throw InvalidApplication("loop '" + l.id + "' needs at least two elements");
      for (std::size_t i = 0; i + 1 < l.modules.size(); ++i) {
        const bool linked = std::any_of(edges.begin(), edges.end(), [&](const AppEdge& e) {
          return e.src == l.modules[i] && e.dst == l.modules[i + 1];
        });
        if (!linked)
          throw InvalidApplication("loop '" + l.id + "': no edge " + l.modules[i] + " -> " + l.modules[i + 1]);
      }
    }
    for (const auto& s : sensors) {
      if (!is_sensor_type(s.type) || !find_edge(s.type, s.tuple_type))
        throw InvalidApplication("sensor '" + s.id + "' has no outgoing edge for tuple type " + s.tuple_type);
      if (s.battery_capacity_mj < 0 || s.tx_energy_per_tuple_mj < 0)
        throw InvalidApplication("sensor '" + s.id + "': negative energy");
    }
  }
};

// ---------------------------------------------------------------------------
// Placement

enum class PlacementPolicy { CloudOnly, Edgeward, Explicit };

/// module name -> hosting device ids (one instance per device).
using Placement = std::map<std::string, std::vector<std::string>>;

/// EDGEWARD puts a module on the edge-most level (largest Device::level)
/// among UP devices admitted by its host constraint; a non-replicated module
/// takes the lexicographically smallest id there.
inline Placement place_modules(const Application& app, const PhysicalGraph& graph, PlacementPolicy policy,
                               const Placement& explicit_map = {}) {
  Placement out;
  switch (policy) {
    case PlacementPolicy::CloudOnly: {
      const Device* cloud = nullptr;
      for (const auto& d : graph.devices())
        if (d.role == "cloud" && d.up() && (!cloud || d.id < cloud->id)) cloud = &d;
      if (!cloud) {
        if (app.modules.empty()) return out;
        throw UnplaceableModule(app.modules.front().name + ": no UP device tagged 'cloud'");
      }
      for (const auto& m : app.modules) out[m.name] = {cloud->id};
      return out;
    }
    case PlacementPolicy::Edgeward: {
      for (const auto& m : app.modules) {
        std::vector<const Device*> fit;
        for (const auto& d : graph.devices())
          if (d.up() && m.admits(d)) fit.push_back(&d);
        if (fit.empty()) throw UnplaceableModule(m.name);
        int level = fit.front()->level;
        for (auto* d : fit) level = std::max(level, d->level);
        std::vector<std::string> hosts;
        for (auto* d : fit)
          if (d->level == level) hosts.push_back(d->id);
        std::sort(hosts.begin(), hosts.end());
        if (!m.per_device) hosts.resize(1);
        out[m.name] = std::move(hosts);
      }
      return out;
    }
    case PlacementPolicy::Explicit: {
      for (const auto& [name, hosts] : explicit_map)
        if (!app.find_module(name)) throw UnplaceableModule(name + ": not a module of the application");
      for (const auto& m : app.modules) {
        auto it = explicit_map.find(m.name);
        if (it == explicit_map.end() || it->second.empty()) throw UnplaceableModule(m.name + ": missing from map");
        for (const auto& h : it->second) {
          if (!graph.contains(h)) throw UnplaceableModule(m.name + ": unknown device '" + h + "'");
          const Device& d = graph.device(h);
          if (!d.up()) throw UnplaceableModule(m.name + ": device '" + h + "' is down");
          if (d.ram_mb < m.ram_mb) throw UnplaceableModule(m.name + ": insufficient RAM on '" + h + "'");
        }
        out[m.name] = it->second;
      }
      return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tuple lifecycle

struct Halted {};

struct SensorEmission {
  Tuple tuple;
  std::optional<SimTime> next_emission;  ///< empty for script-driven sensors
};

/// Jittered emission interval: Normal(nominal, jitter*nominal) truncated at
/// +-3 sigma by resampling, floored at 1 ms.
inline SimTime next_sensor_interval(const Sensor& s, RngStream& rng) {
  const double nominal = s.nominal_interval_ms;
  const double sigma = s.jitter_fraction * nominal;
  double draw = nominal;
  if (sigma > 0) {
    do {
      draw = rng.normal(nominal, sigma);
    } while (std::abs(draw - nominal) > 3.0 * sigma);
  }
  return SimTime::from_millis(std::max(1.0, draw));
}

inline std::set<std::string> loops_for_step(const Application& app, std::string_view from, std::string_view to,
                                            const std::set<std::string>* carried) {
  std::set<std::string> tags;
  for (const auto& l : app.loops) {
    if (carried && !carried->count(l.id)) continue;
    if (!carried && (l.modules.empty() || l.modules.front() != from)) continue;
    if (l.has_step(from, to)) tags.insert(l.id);
  }
  return tags;
}

/// Emits one sensor tuple and charges its transmission energy.
inline std::variant<SensorEmission, Halted> emit_sensor_tuple(Sensor& sensor, SimTime now, RngStream& rng,
                                                              const Application& app, const Device& attached,
                                                              TupleIdSource& ids, Context context = {}) {
  if (!attached.up()) throw DeviceDown("sensor '" + sensor.id + "': attached device '" + attached.id + "' is down");
  if (!sensor.can_emit()) return Halted{};
  const AppEdge* edge = app.find_edge(sensor.type, sensor.tuple_type);
  if (!edge) throw InvalidApplication("sensor '" + sensor.id + "' has no outgoing edge");
  ++sensor.emitted;

  Tuple t;
  t.id = ids();
  t.app_id = app.id;
  t.type = sensor.tuple_type;
  t.direction = edge->direction;
  t.mi = edge->mi;
  t.size_bits = edge->size_bits;
  t.src_module = sensor.type;
  t.dst_module = edge->dst;
  t.created_at = now;
  t.origin_created_at = now;
  t.loop_tags = loops_for_step(app, sensor.type, edge->dst, nullptr);
  t.hop_trace.push_back({sensor.id, now});
  t.context = std::move(context);
  t.context.emplace("sensor", sensor.id);

  SensorEmission out{std::move(t), std::nullopt};
  if (sensor.nominal_interval_ms > 0) out.next_emission = now + next_sensor_interval(sensor, rng);
  return out;
}

struct ArrivalOutcome {
  std::vector<ComputePhase> phases;  ///< executed back to back on one service slot
  std::vector<Tuple> outputs;        ///< released when service completes
};

inline Tuple make_output(const Application& app, const AppEdge& edge, const Tuple& input, SimTime now,
                         TupleIdSource& ids) {
  Tuple t;
  t.id = ids();
  t.app_id = app.id;
  t.type = edge.tuple_type;
  t.direction = edge.direction;
  t.mi = edge.mi;
  t.size_bits = edge.size_bits;
  t.src_module = edge.src;
  t.dst_module = edge.dst;
  t.created_at = now;
  t.origin_created_at = input.origin_created_at;
  t.loop_tags = loops_for_step(app, edge.src, edge.dst, &input.loop_tags);
  t.hop_trace = input.hop_trace;
  t.breakdown = input.breakdown;
  t.target_device = input.target_device;
  t.context = input.context;
  return t;
}

/// Runs the module hook for an arriving tuple and derives the work to charge
/// and the outputs to release. Timing is left to the caller.
inline ArrivalOutcome process_tuple_arrival(ModuleInstance& module, const Tuple& tuple, const Application& app,
                                            const Device& host, SimTime now, RngStream& rng, TupleIdSource& ids) {
  if (module.host.empty()) throw ModuleNotPlaced("module '" + module.module + "' has no host");
  if (!host.up()) throw DeviceDown("device '" + host.id + "' is down");

  ArrivalResult hook;
  if (module.behavior) {
    ModuleContext ctx{module.module, host, now, module.state, rng};
    hook = module.behavior->on_tuple_arrival(ctx, tuple);
  }

  ArrivalOutcome out;
  out.phases.push_back({module.module, tuple.mi});
  for (auto& p : hook.extra_phases) out.phases.push_back(std::move(p));

  if (hook.emissions) {
    for (auto& em : *hook.emissions) {
      const AppEdge* edge = app.find_edge(module.module, em.tuple_type);
      if (!edge) throw InvalidApplication("module '" + module.module + "' has no edge for " + em.tuple_type);
      Tuple t = make_output(app, *edge, tuple, now, ids);
      if (!em.target_device.empty()) t.target_device = em.target_device;
      for (auto& [k, v] : em.context) t.context[k] = v;
      out.outputs.push_back(std::move(t));
    }
  } else {
    for (const AppEdge* e : app.outgoing(module.module)) {
      if (!e->input_type.empty() && e->input_type != tuple.type) continue;
      if (e->selectivity.emit(rng)) out.outputs.push_back(make_output(app, *e, tuple, now, ids));
    }
  }
  return out;
}

/// Appends the end-to-end sample of `tuple` for `loop` and returns it in ms.
inline double record_loop_sample(const AppLoop& loop, const Tuple& tuple, SimTime completed_at,
                                 std::vector<LoopSample>& samples, const std::string& sink = {}) {
  if (!tuple.loop_tags.count(loop.id)) throw std::logic_error("tuple does not carry loop '" + loop.id + "'");
  LoopSample s;
  s.loop_id = loop.id;
  s.tuple_id = tuple.id;
  s.origin = tuple.origin_created_at;
  s.completed_at = completed_at;
  s.latency = completed_at - tuple.origin_created_at;
  s.breakdown = tuple.breakdown;
  s.hops = tuple.hop_trace;
  s.sink = sink;
  s.context = tuple.context;
  samples.push_back(std::move(s));
  return samples.back().latency_ms();
}

}  // namespace graphfog
