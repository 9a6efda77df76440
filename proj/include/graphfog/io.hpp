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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "application.hpp"
#include "errors.hpp"
#include "topology.hpp"

namespace graphfog::io {

using nlohmann::json;

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError("'" + path.string() + "': " + e.what());
  }
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError(e.what());
  }
}

namespace detail {

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ScenarioError(std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline TopologySpec topology_spec_from_json(const json& j) {
  return detail::guarded("topology", [&] {
    TopologySpec spec;
    spec.allow_cpu_parallelism = j.value("allowCpuParallelism", false);
    for (const auto& d : j.at("devices")) {
      Device dev;
      dev.id = d.at("id").get<std::string>();
      dev.mips = d.at("mips").get<double>();
      dev.ram_mb = d.value("ramMb", 0.0);
      dev.architecture = architecture_from_string(d.value("architecture", std::string("CPU")));
      dev.parallelism = d.value("parallelismDegree", 1);
      dev.rate_per_mips = d.value("ratePerMips", 0.0);
      dev.power_idle_w = d.value("powerIdleW", 0.0);
      dev.power_busy_w = d.value("powerBusyW", dev.power_idle_w);
      dev.level = d.value("level", 0);
      dev.role = d.value("role", std::string());
      spec.devices.push_back(std::move(dev));
    }
    for (const auto& l : j.at("links")) {
      Link link;
      link.a = l.at("a").get<std::string>();
      link.b = l.at("b").get<std::string>();
      const double ms = l.value("latencyMs", 0.0);
      if (ms < 0) throw InvalidTopology("link " + link.a + "-" + link.b + ": negative latency");
      link.latency = SimTime::from_millis(ms);
      link.bandwidth_bps = l.value("bandwidthBps", 1e9);
      if (l.contains("weightKm")) link.weight_km = l.at("weightKm").get<double>();
      spec.links.push_back(std::move(link));
    }
    return spec;
  });
}

inline PhysicalGraph graph_from_json(const json& j) { return build_graph(topology_spec_from_json(j)); }

/// `[{atMs, action, id}]` for device actions, `[{atMs, action, src, dst, newMs|newBps}]` for links.
inline std::vector<TopologyEvent> fault_script_from_json(const json& j) {
  return detail::guarded("fault script", [&] {
    std::vector<TopologyEvent> out;
    const json& list = j.is_object() ? j.at("events") : j;
    for (const auto& e : list) {
      TopologyEvent ev;
      ev.at = SimTime::from_millis(e.at("atMs").get<double>());
      const auto action = e.at("action").get<std::string>();
      if (action == "FAIL_DEVICE") ev.action = FailDevice{e.at("id").get<std::string>()};
      else if (action == "RECOVER_DEVICE") ev.action = RecoverDevice{e.at("id").get<std::string>()};
      else if (action == "SET_LINK_LATENCY")
        ev.action = SetLinkLatency{e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                                   SimTime::from_millis(e.at("newMs").get<double>())};
      else if (action == "SET_LINK_BANDWIDTH")
        ev.action = SetLinkBandwidth{e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                                     e.at("newBps").get<double>()};
      else throw ScenarioError("fault script: unknown action '" + action + "'");
      out.push_back(std::move(ev));
    }
    return out;
  });
}

struct ApplicationFile {
  Application app;
  PlacementPolicy policy = PlacementPolicy::Edgeward;
  Placement explicit_map;
};

inline PlacementPolicy placement_policy_from_string(std::string_view s) {
  if (s == "EXPLICIT") return PlacementPolicy::Explicit;
  if (s == "EDGEWARD") return PlacementPolicy::Edgeward;
  if (s == "CLOUD_ONLY") return PlacementPolicy::CloudOnly;
  throw ScenarioError("unknown placement policy '" + std::string(s) + "'");
}

inline Selectivity selectivity_from_json(const json& j) {
  if (j.is_null()) return Selectivity::always();
  if (j.is_string()) {
    if (j.get<std::string>() == "ALWAYS") return Selectivity::always();
    throw InvalidApplication("unknown selectivity '" + j.get<std::string>() + "'");
  }
  if (j.is_number()) return Selectivity::fractional(j.get<double>());
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ALWAYS") return Selectivity::always();
  if (kind == "FRACTIONAL") return Selectivity::fractional(j.at("p").get<double>());
  throw InvalidApplication("unknown selectivity kind '" + kind + "'");
}

inline ApplicationFile application_from_json(const json& j) {
  return detail::guarded("application", [&] {
    ApplicationFile f;
    Application& app = f.app;
    app.id = j.value("id", std::string("app"));
    for (const auto& m : j.at("modules")) {
      ModuleSpec spec;
      spec.name = m.at("name").get<std::string>();
      spec.ram_mb = m.value("ramMb", 0.0);
      spec.candidates = m.value("candidates", std::vector<std::string>{});
      spec.per_device = m.value("perDevice", false);
      app.modules.push_back(std::move(spec));
    }
    for (const auto& e : j.at("edges")) {
      AppEdge edge;
      edge.src = e.at("src").get<std::string>();
      edge.dst = e.at("dst").get<std::string>();
      edge.tuple_type = e.at("type").get<std::string>();
      edge.input_type = e.value("inputType", std::string());
      edge.direction = direction_from_string(e.value("direction", std::string("UP")));
      edge.mi = e.value("tupleMI", 0.0);
      edge.size_bits = e.value("tupleSizeBits", std::uint64_t{0});
      edge.selectivity = selectivity_from_json(e.value("selectivity", json()));
      app.edges.push_back(std::move(edge));
    }
    for (const auto& s : j.value("sensors", json::array())) {
      Sensor sensor;
      sensor.id = s.at("id").get<std::string>();
      sensor.type = s.at("type").get<std::string>();
      sensor.attached_device = s.at("device").get<std::string>();
      sensor.tuple_type = s.at("tupleType").get<std::string>();
      sensor.nominal_interval_ms = s.value("intervalMs", 0.0);
      sensor.jitter_fraction = s.value("jitterFraction", 0.02);
      sensor.battery_capacity_mj = s.value("batteryCapacityMilliJ", 1e12);
      sensor.tx_energy_per_tuple_mj = s.value("txEnergyPerTupleMilliJ", 0.0);
      sensor.latency = SimTime::from_millis(s.value("latencyMs", 0.0));
      app.sensors.push_back(std::move(sensor));
    }
    for (const auto& a : j.value("actuators", json::array())) {
      app.actuators.push_back({a.at("id").get<std::string>(), a.at("type").get<std::string>(),
                               a.at("device").get<std::string>(), SimTime::from_millis(a.value("latencyMs", 0.0))});
    }
    for (const auto& l : j.value("loops", json::array()))
      app.loops.push_back({l.at("id").get<std::string>(), l.at("modules").get<std::vector<std::string>>()});
    if (j.contains("placement")) {
      const auto& p = j.at("placement");
      f.policy = placement_policy_from_string(p.value("policy", std::string("EDGEWARD")));
      const json map = p.value("map", json::object());
      for (const auto& [module, hosts] : map.items())
        f.explicit_map[module] = hosts.is_string() ? std::vector<std::string>{hosts.get<std::string>()}
                                                   : hosts.get<std::vector<std::string>>();
    }
    app.validate();
    return f;
  });
}

}  // namespace graphfog::io
