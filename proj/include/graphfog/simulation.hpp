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
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "application.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace graphfog {

enum class FogEventKind : std::uint32_t {
  SensorEmit = 1,
  TupleArrival = 2,
  ActuatorArrival = 3,
  ServiceComplete = 4,
  TopologyChange = 5,
};

struct SensorFire {
  std::size_t sensor = 0;
  Context context;
  bool scripted = false;
};
struct TupleAt {
  Tuple tuple;
};
struct ActuatorDelivery {
  Tuple tuple;
  std::size_t actuator = 0;
};
struct ServiceDone {
  std::uint64_t job = 0;
};
struct TopologyChange {
  TopologyEvent event;
};

using FogPayload = std::variant<std::monostate, SensorFire, TupleAt, ActuatorDelivery, ServiceDone, TopologyChange>;
using FogEngine = Engine<FogEventKind, FogPayload>;

struct SimulationOptions {
  std::uint64_t master_seed = 1;
  std::string stream_prefix;             ///< namespaces every RNG stream, e.g. per replication
  bool link_serialization = false;       ///< per-direction FIFO on link transmission
  bool record_trace = true;
  std::optional<RoutingStrategy> routing;  ///< empty: cached latency shortest path
};

/// Tuple-level fog simulation over an arbitrary device graph.
///
/// Devices serve up to `parallelism` tuples at once and queue the rest FIFO.
/// Tuples are routed hop by hop over UP links; a transmission already under
/// way keeps the link parameters it started with.
class FogSimulation {
 public:
  FogSimulation(PhysicalGraph graph, Application app, Placement placement, SimulationOptions options = {})
      : graph_(std::move(graph)), app_(std::move(app)), placement_(std::move(placement)), options_(std::move(options)) {
    app_.validate();
    engine_.set_trace(options_.record_trace);

    for (const auto& [module, hosts] : placement_) {
      if (!app_.find_module(module)) throw UnplaceableModule(module + ": not a module of the application");
      for (const auto& h : hosts) {
        if (!graph_.contains(h)) throw UnplaceableModule(module + ": unknown device '" + h + "'");
        ModuleInstance inst{module, h, nlohmann::json::object(), nullptr};
        if (auto it = app_.behaviors.find(module); it != app_.behaviors.end()) inst.behavior = it->second;
        instances_.emplace(std::make_pair(module, h), std::move(inst));
      }
    }

    for (std::size_t i = 0; i < graph_.device_count(); ++i) {
      const Device& d = graph_.device_at(i);
      DeviceRuntime rt;
      rt.entity = engine_.register_entity("dev:" + d.id, [this, id = d.id](FogEngine&, FogEngine::event_type& ev) {
        on_device_event(id, ev);
      });
      runtime_.emplace(d.id, std::move(rt));
      ledger_.energy[d.id] = EnergyAccount{d.id, SimTime{}, 0.0, 0.0};
      ledger_.cost[d.id] = CostAccount{d.id, SimTime{}, 0.0};
      ledger_.telemetry[d.id] = QueueTelemetry(d.id);
      ledger_.telemetry[d.id].record(SimTime{}, 0, 0);
    }
    for (std::size_t i = 0; i < app_.sensors.size(); ++i) {
      const auto& s = app_.sensors[i];
      if (!graph_.contains(s.attached_device)) throw InvalidApplication("sensor '" + s.id + "' attached to unknown device");
      sensor_rngs_.emplace_back(options_.master_seed, options_.stream_prefix + "sensor." + s.id);
      sensor_entities_.push_back(engine_.register_entity("sensor:" + s.id, [this](FogEngine&, FogEngine::event_type& ev) {
        on_sensor(std::get<SensorFire>(ev.payload));
      }));
    }
    for (const auto& a : app_.actuators) {
      if (!graph_.contains(a.attached_device)) throw InvalidApplication("actuator '" + a.id + "' attached to unknown device");
      actuator_entities_.push_back(engine_.register_entity("actuator:" + a.id, [this](FogEngine&, FogEngine::event_type& ev) {
        on_actuator(std::get<ActuatorDelivery>(ev.payload));
      }));
    }
    topology_entity_ = engine_.register_entity("topology", [this](FogEngine&, FogEngine::event_type& ev) {
      on_topology(std::get<TopologyChange>(ev.payload).event);
    });

    for (auto& [key, inst] : instances_) {
      if (!inst.behavior) continue;
      ModuleContext ctx{inst.module, graph_.device(inst.host), SimTime{}, inst.state, rng_for(inst)};
      inst.behavior->on_init(ctx);
    }
    for (std::size_t i = 0; i < app_.sensors.size(); ++i)
      if (app_.sensors[i].nominal_interval_ms > 0)
        engine_.schedule(SimTime{}, sensor_entities_[i], FogEventKind::SensorEmit, SensorFire{i, {}, false});
  }

  FogSimulation(const FogSimulation&) = delete;
  FogSimulation& operator=(const FogSimulation&) = delete;

  /// Makes a script-driven sensor emit one tuple at `at`.
  void trigger_sensor(const std::string& sensor_id, SimTime at, Context context = {}) {
    for (std::size_t i = 0; i < app_.sensors.size(); ++i)
      if (app_.sensors[i].id == sensor_id) {
        engine_.schedule(at, sensor_entities_[i], FogEventKind::SensorEmit, SensorFire{i, std::move(context), true});
        return;
      }
    throw UnknownTarget("unknown sensor '" + sensor_id + "'");
  }

  void schedule_topology_event(const TopologyEvent& ev) {
    std::visit(
        [this](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, FailDevice> || std::is_same_v<T, RecoverDevice>) {
            if (!graph_.contains(x.id)) throw UnknownTarget("unknown device '" + x.id + "'");
          } else {
            if (!graph_.find_link(x.src, x.dst)) throw UnknownTarget("no link " + x.src + "-" + x.dst);
          }
        },
        ev.action);
    engine_.schedule(ev.at, topology_entity_, FogEventKind::TopologyChange, TopologyChange{ev});
  }

  RunSummary run_until(SimTime horizon) { return engine_.run_until(horizon); }

  SimTime now() const { return engine_.now(); }
  const PhysicalGraph& graph() const { return graph_; }
  const Application& application() const { return app_; }
  const Placement& placement() const { return placement_; }
  const FogEngine& engine() const { return engine_; }
  const SimulationOptions& options() const { return options_; }

  const ModuleInstance& instance(const std::string& module, const std::string& host) const {
    return instances_.at({module, host});
  }
  ModuleInstance& instance(const std::string& module, const std::string& host) { return instances_.at({module, host}); }

  std::size_t queue_length(const std::string& device) const { return runtime_.at(device).queue.size(); }
  int in_service(const std::string& device) const { return runtime_.at(device).in_service; }

  /// Snapshot of every ledger with energy and cost integrated up to now().
  MetricsLedger metrics() const {
    MetricsLedger out = ledger_;
    const SimTime t = engine_.now();
    for (auto& [id, acc] : out.energy) {
      const Device& d = graph_.device(id);
      update_energy(acc, t, acc.last_utilization, d);
      update_cost(out.cost[id], t, utilization(id), d);
    }
    for (auto& [id, tel] : out.telemetry) tel.close(t);
    for (const auto& s : app_.sensors)
      out.sensors.push_back({s.id, s.battery_capacity_mj, s.emitted, s.consumed_mj(), s.remaining_mj(), !s.can_emit()});
    out.tuples.in_flight = live_.size();
    return out;
  }

 private:
  struct Job {
    Tuple tuple;
    ModuleInstance* instance;
    SimTime enqueued;
  };
  struct ActiveJob {
    std::string device;
    ModuleInstance* instance;
    std::uint64_t input_id;
    std::vector<Tuple> outputs;
    SimTime duration;
  };
  struct DeviceRuntime {
    EntityId entity = 0;
    int in_service = 0;
    std::deque<Job> queue;
  };

  RngStream& rng_for(const ModuleInstance& inst) {
    const std::string key = inst.module + "@" + inst.host;
    auto it = module_rngs_.find(key);
    if (it == module_rngs_.end())
      it = module_rngs_.emplace(key, RngStream(options_.master_seed, options_.stream_prefix + "selectivity." + key)).first;
    return it->second;
  }

  double utilization(const std::string& device) const {
    const Device& d = graph_.device(device);
    return static_cast<double>(runtime_.at(device).in_service) / static_cast<double>(d.parallelism);
  }

  void set_in_service(const std::string& device, int count) {
    const Device& d = graph_.device(device);
    const double before = utilization(device);
    runtime_[device].in_service = count;
    update_cost(ledger_.cost[device], now(), before, d);
    update_energy(ledger_.energy[device], now(), utilization(device), d);
  }

  void telemetry(const std::string& device) {
    const auto& rt = runtime_.at(device);
    ledger_.telemetry[device].record(now(), rt.queue.size(), rt.in_service);
  }

  void created(const Tuple& t) {
    ++ledger_.tuples.created;
    live_.insert(t.id);
  }
  void consumed(const Tuple& t) {
    ++ledger_.tuples.consumed;
    live_.erase(t.id);
  }
  void drop(const Tuple& t, const std::string& reason) {
    ++ledger_.tuples.dropped;
    ++ledger_.tuples.drops_by_reason[reason];
    live_.erase(t.id);
  }

  const ShortestPathTree& latency_tree(const std::string& from) {
    if (tree_version_ != graph_.version()) {
      trees_.clear();
      tree_version_ = graph_.version();
    }
    auto it = trees_.find(from);
    if (it == trees_.end()) it = trees_.emplace(from, shortest_paths(graph_, from, WeightKind::LatencyMs)).first;
    return it->second;
  }

  std::string next_hop(const std::string& from, const std::string& to) {
    if (options_.routing) return route_next_hop(graph_, from, to, *options_.routing);
    if (from == to) return to;
    const auto& tree = latency_tree(from);
    if (!tree.reachable(to)) throw Unreachable("no UP path from " + from + " to " + to);
    std::string hop = to;
    for (;;) {
      const auto& p = tree.predecessor.at(hop);
      if (p == from) return hop;
      hop = p;
    }
  }

  /// Closest reachable candidate by latency; ties by id.
  std::optional<std::string> nearest(const std::string& from, const std::vector<std::string>& candidates) {
    const auto& tree = latency_tree(from);
    std::optional<std::string> best;
    double best_d = 0;
    for (const auto& c : candidates) {
      if (!graph_.device(c).up()) continue;
      const double d = tree.distance.at(c);
      if (!std::isfinite(d)) continue;
      if (!best || d < best_d || (d == best_d && c < *best)) {
        best = c;
        best_d = d;
      }
    }
    return best;
  }

  void on_device_event(const std::string& device, FogEngine::event_type& ev) {
    switch (ev.kind) {
      case FogEventKind::TupleArrival: {
        Tuple t = std::move(std::get<TupleAt>(ev.payload).tuple);
        t.hop_trace.push_back({device, now()});
        if (!graph_.device(device).up()) return drop(t, "device-down");
        forward(device, std::move(t));
        break;
      }
      case FogEventKind::ServiceComplete: complete(std::get<ServiceDone>(ev.payload).job); break;
      default: break;
    }
  }

  void on_sensor(const SensorFire& fire) {
    Sensor& s = app_.sensors[fire.sensor];
    RngStream& rng = sensor_rngs_[fire.sensor];
    const Device& dev = graph_.device(s.attached_device);
    std::optional<SimTime> next;
    try {
      auto res = emit_sensor_tuple(s, now(), rng, app_, dev, ids_, fire.context);
      if (auto* em = std::get_if<SensorEmission>(&res)) {
        Tuple t = std::move(em->tuple);
        created(t);
        t.breakdown.propagation += s.latency;
        engine_.schedule(now() + s.latency, runtime_.at(s.attached_device).entity, FogEventKind::TupleArrival,
                         TupleAt{std::move(t)});
        next = em->next_emission;
      }
    } catch (const DeviceDown&) {
      ++ledger_.skipped_emissions;
      if (s.nominal_interval_ms > 0) next = now() + next_sensor_interval(s, rng);
    }
    if (next && !fire.scripted)
      engine_.schedule(*next, sensor_entities_[fire.sensor], FogEventKind::SensorEmit, SensorFire{fire.sensor, {}, false});
  }

  void forward(const std::string& at, Tuple t) {
    if (t.direction == Direction::Actuator || app_.is_actuator_type(t.dst_module)) return forward_to_actuator(at, std::move(t));

    auto pit = placement_.find(t.dst_module);
    if (pit == placement_.end()) return drop(t, "module-not-placed");
    const auto& hosts = pit->second;
    auto hosted_up = [&](const std::string& h) {
      return std::find(hosts.begin(), hosts.end(), h) != hosts.end() && graph_.device(h).up();
    };
    std::optional<std::string> dest;
    if (!t.target_device.empty() && hosted_up(t.target_device)) dest = t.target_device;
    else if (hosted_up(at)) dest = at;
    else dest = nearest(at, hosts);
    if (!dest) return drop(t, "no-reachable-instance");
    if (*dest == at) return enqueue(at, std::move(t));
    send_toward(at, *dest, std::move(t));
  }

  void forward_to_actuator(const std::string& at, Tuple t) {
    std::optional<std::size_t> pick;
    auto first_attached = [&](const std::string& dev) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < app_.actuators.size(); ++i)
        if (app_.actuators[i].type == t.dst_module && app_.actuators[i].attached_device == dev) return i;
      return std::nullopt;
    };
    pick = first_attached(at);
    if (!pick && !t.target_device.empty()) pick = first_attached(t.target_device);
    if (!pick) {
      std::vector<std::string> devs;
      for (const auto& a : app_.actuators)
        if (a.type == t.dst_module) devs.push_back(a.attached_device);
      if (auto d = nearest(at, devs)) pick = first_attached(*d);
    }
    if (!pick) return drop(t, "no-actuator");
    const Actuator& act = app_.actuators[*pick];
    if (act.attached_device != at) return send_toward(at, act.attached_device, std::move(t));
    t.breakdown.propagation += act.latency;
    engine_.schedule(now() + act.latency, actuator_entities_[*pick], FogEventKind::ActuatorArrival,
                     ActuatorDelivery{std::move(t), *pick});
  }

  void send_toward(const std::string& at, const std::string& dest, Tuple t) {
    std::string hop;
    try {
      hop = next_hop(at, dest);
    } catch (const Unreachable&) {
      return drop(t, "unreachable");
    }
    const Link* link = graph_.find_link(at, hop);
    if (!link || !graph_.usable(*link)) return drop(t, "link-down");
    const SimTime tx = transmission_time(t.size_bits, link->bandwidth_bps);
    SimTime start = now();
    if (options_.link_serialization) {
      SimTime& busy = link_busy_[{at, hop}];
      start = std::max(start, busy);
      busy = start + tx;
      t.breakdown.queueing += start - now();
    }
    t.breakdown.transmission += tx;
    t.breakdown.propagation += link->latency;
    engine_.schedule(start + tx + link->latency, runtime_.at(hop).entity, FogEventKind::TupleArrival, TupleAt{std::move(t)});
  }

  void enqueue(const std::string& device, Tuple t) {
    ModuleInstance* inst = &instances_.at({t.dst_module, device});
    runtime_[device].queue.push_back(Job{std::move(t), inst, now()});
    start_ready(device);
    telemetry(device);
  }

  void start_ready(const std::string& device) {
    auto& rt = runtime_[device];
    const Device& dev = graph_.device(device);
    while (dev.up() && rt.in_service < dev.parallelism && !rt.queue.empty()) {
      Job job = std::move(rt.queue.front());
      rt.queue.pop_front();
      start(device, std::move(job));
    }
  }

  void start(const std::string& device, Job job) {
    const Device& dev = graph_.device(device);
    job.tuple.breakdown.queueing += now() - job.enqueued;
    ArrivalOutcome outcome;
    SimTime duration;
    try {
      outcome = process_tuple_arrival(*job.instance, job.tuple, app_, dev, now(), rng_for(*job.instance), ids_);
      SimTime offset;
      for (const auto& ph : outcome.phases) {
        const SimTime d = compute_service_time(ph.mi, dev, runtime_[device].in_service).duration;
        ledger_.phases.push_back({device, job.instance->module, ph.label, job.tuple.id, ph.mi, now() + offset, d,
                                  job.tuple.context});
        offset += d;
      }
      duration = offset;
    } catch (const SimulationError&) {
      return drop(job.tuple, "module-error");
    }
    const std::uint64_t id = next_job_++;
    active_.emplace(id, ActiveJob{device, job.instance, job.tuple.id, std::move(outcome.outputs), duration});
    set_in_service(device, runtime_[device].in_service + 1);
    engine_.schedule(now() + duration, runtime_.at(device).entity, FogEventKind::ServiceComplete, ServiceDone{id});
  }

  void complete(std::uint64_t job_id) {
    auto it = active_.find(job_id);
    if (it == active_.end()) return;  // dropped by a device failure
    ActiveJob job = std::move(it->second);
    active_.erase(it);
    set_in_service(job.device, runtime_[job.device].in_service - 1);
    ledger_.telemetry[job.device].record_completion(job.duration);
    ++ledger_.tuples.consumed;
    live_.erase(job.input_id);
    for (auto& out : job.outputs) {
      out.created_at = now();
      out.breakdown.compute += job.duration;
      created(out);
      forward(job.device, std::move(out));
    }
    start_ready(job.device);
    telemetry(job.device);
  }

  void on_actuator(ActuatorDelivery& d) {
    const Actuator& act = app_.actuators[d.actuator];
    Tuple& t = d.tuple;
    t.hop_trace.push_back({act.id, now()});
    consumed(t);
    for (const auto& loop : app_.loops)
      if (t.loop_tags.count(loop.id) && loop.modules.back() == act.type)
        record_loop_sample(loop, t, now(), ledger_.loop_samples, act.id);
  }

  void on_topology(const TopologyEvent& ev) {
    const bool failing = std::holds_alternative<FailDevice>(ev.action);
    const bool recovering = std::holds_alternative<RecoverDevice>(ev.action);
    std::string id;
    if (failing) id = std::get<FailDevice>(ev.action).id;
    if (recovering) id = std::get<RecoverDevice>(ev.action).id;
    apply_topology_event(ev, graph_);
    if (failing) {
      auto& rt = runtime_[id];
      for (auto it = active_.begin(); it != active_.end();) {
        if (it->second.device == id) {
          ++ledger_.tuples.dropped;
          ++ledger_.tuples.drops_by_reason["device-failed"];
          live_.erase(it->second.input_id);
          it = active_.erase(it);
        } else {
          ++it;
        }
      }
      for (auto& job : rt.queue) drop(job.tuple, "device-failed");
      rt.queue.clear();
      set_in_service(id, 0);
      telemetry(id);
    }
  }

  PhysicalGraph graph_;
  Application app_;
  Placement placement_;
  SimulationOptions options_;
  FogEngine engine_;
  MetricsLedger ledger_;
  TupleIdSource ids_;

  std::map<std::pair<std::string, std::string>, ModuleInstance> instances_;
  std::map<std::string, DeviceRuntime> runtime_;
  std::vector<EntityId> sensor_entities_;
  std::vector<EntityId> actuator_entities_;
  EntityId topology_entity_ = 0;
  std::vector<RngStream> sensor_rngs_;
  std::map<std::string, RngStream> module_rngs_;
  std::map<std::uint64_t, ActiveJob> active_;
  std::uint64_t next_job_ = 0;
  std::set<std::uint64_t> live_;
  std::map<std::pair<std::string, std::string>, SimTime> link_busy_;
  std::map<std::string, ShortestPathTree> trees_;
  std::uint64_t tree_version_ = ~std::uint64_t{0};
};

}  // namespace graphfog
