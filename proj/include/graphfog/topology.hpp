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

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "sim_time.hpp"

namespace graphfog {

enum class Architecture { CPU, FPGA, GPU };
enum class Status { Up, Down };

inline std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::CPU: return "CPU";
    case Architecture::FPGA: return "FPGA";
    case Architecture::GPU: return "GPU";
  }
  return "?";
}

inline Architecture architecture_from_string(std::string_view s) {
  if (s == "CPU") return Architecture::CPU;
  if (s == "FPGA") return Architecture::FPGA;
  if (s == "GPU") return Architecture::GPU;
  throw InvalidTopology("unknown architecture '" + std::string(s) + "'");
}

/// A compute node. GPU carries no semantics beyond its parallelism degree.
struct Device {
  std::string id;
  double mips = 1000.0;
  double ram_mb = 0.0;
  Architecture architecture = Architecture::CPU;
  int parallelism = 1;  ///< tuples in service concurrently, each at full MIPS
  double rate_per_mips = 0.0;
  double power_idle_w = 0.0;
  double power_busy_w = 0.0;
  Status status = Status::Up;
  int level = 0;     ///< tier tag; 0 is the cloud, larger values sit closer to the edge
  std::string role;  ///< free-form tag, e.g. "cloud"

  bool up() const { return status == Status::Up; }
  friend bool operator==(const Device&, const Device&) = default;
};

/// Bidirectional link; delay is identical in both directions.
struct Link {
  std::string a;
  std::string b;
  SimTime latency;
  double bandwidth_bps = 1e9;
  std::optional<double> weight_km;
  Status status = Status::Up;

  bool up() const { return status == Status::Up; }
  bool joins(std::string_view x, std::string_view y) const { return (a == x && b == y) || (a == y && b == x); }
  const std::string& other(std::string_view end) const { return a == end ? b : a; }
  friend bool operator==(const Link&, const Link&) = default;
};

struct TopologySpec {
  std::vector<Device> devices;
  std::vector<Link> links;
  bool allow_cpu_parallelism = false;  ///< CPU devices must have parallelism 1 unless set
};

/// Arbitrary-graph device topology stored as adjacency lists.
class PhysicalGraph {
 public:
  PhysicalGraph() = default;

  std::size_t device_count() const { return devices_.size(); }
  std::size_t link_count() const { return links_.size(); }
  const std::vector<Device>& devices() const { return devices_; }
  const std::vector<Link>& links() const { return links_; }

  bool contains(std::string_view id) const { return index_.find(std::string(id)) != index_.end(); }

  std::size_t index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw UnknownTarget("unknown device '" + std::string(id) + "'");
    return it->second;
  }

  const Device& device(std::string_view id) const { return devices_[index_of(id)]; }
  Device& device(std::string_view id) { return devices_[index_of(id)]; }
  const Device& device_at(std::size_t i) const { return devices_[i]; }

  /// Indices into links() of the links incident to a device.
  const std::vector<std::size_t>& incident(std::size_t device_index) const { return adjacency_[device_index]; }

  const Link* find_link(std::string_view x, std::string_view y) const {
    if (!contains(x)) return nullptr;
    for (std::size_t li : adjacency_[index_of(x)])
      if (links_[li].joins(x, y)) return &links_[li];
    return nullptr;
  }
  Link* find_link(std::string_view x, std::string_view y) {
    return const_cast<Link*>(std::as_const(*this).find_link(x, y));
  }

  /// A link carries traffic only if it and both endpoints are UP.
  bool usable(const Link& l) const { return l.up() && device(l.a).up() && device(l.b).up(); }

  /// Bumped on every mutation; lets callers invalidate routing caches.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  friend bool operator==(const PhysicalGraph& x, const PhysicalGraph& y) {
    return x.devices_ == y.devices_ && x.links_ == y.links_;
  }

 private:
  friend PhysicalGraph build_graph(TopologySpec spec);

  std::vector<Device> devices_;
  std::vector<Link> links_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::uint64_t version_ = 0;
};

inline PhysicalGraph build_graph(TopologySpec spec) {
  PhysicalGraph g;
  for (auto& d : spec.devices) {
    if (d.id.empty()) throw InvalidTopology("device with empty id");
    if (!(d.mips > 0)) throw InvalidTopology("device '" + d.id + "': mips must be positive");
    if (d.parallelism < 1) throw InvalidTopology("device '" + d.id + "': parallelismDegree must be >= 1");
    if (d.power_idle_w < 0 || d.power_busy_w < d.power_idle_w)
      throw InvalidTopology("device '" + d.id + "': need powerBusyW >= powerIdleW >= 0");
    if (d.architecture == Architecture::CPU && d.parallelism != 1 && !spec.allow_cpu_parallelism)
      throw InvalidTopology("device '" + d.id + "': CPU devices have parallelismDegree 1");
    if (!g.index_.emplace(d.id, g.devices_.size()).second) throw DuplicateId("duplicate device id '" + d.id + "'");
    g.devices_.push_back(std::move(d));
  }
  g.adjacency_.resize(g.devices_.size());
  for (auto& l : spec.links) {
    if (!g.contains(l.a)) throw DanglingLink("link references unknown device '" + l.a + "'");
    if (!g.contains(l.b)) throw DanglingLink("link references unknown device '" + l.b + "'");
    if (l.a == l.b) throw InvalidTopology("self-loop on '" + l.a + "'");
    if (!(l.bandwidth_bps > 0)) throw NonPositiveBandwidth("link " + l.a + "-" + l.b + ": bandwidth must be positive");
    if (l.weight_km && *l.weight_km < 0) throw InvalidTopology("link " + l.a + "-" + l.b + ": negative weight");
    if (g.find_link(l.a, l.b)) throw DuplicateId("duplicate link " + l.a + "-" + l.b);
    const std::size_t li = g.links_.size();
    g.adjacency_[g.index_.at(l.a)].push_back(li);
    g.adjacency_[g.index_.at(l.b)].push_back(li);
    g.links_.push_back(std::move(l));
  }
  return g;
}

/// fileSize / bandwidth, rounded to the nearest nanosecond.
inline SimTime transmission_time(std::uint64_t file_size_bits, double bandwidth_bps) {
  return SimTime::from_seconds(static_cast<double>(file_size_bits) / bandwidth_bps);
}

/// d = fileSize / bandwidth + latency.
inline SimTime link_delay(std::uint64_t file_size_bits, const Link& link) {
  if (!link.up()) throw LinkDown("link " + link.a + "-" + link.b + " is down");
  return transmission_time(file_size_bits, link.bandwidth_bps) + link.latency;
}

/// Pure execution time t = MI / MIPS, in nanoseconds.
inline SimTime execution_time(double mi, double mips) {
  return SimTime::from_nanos(static_cast<SimTime::rep>(std::llround(mi * 1e9 / mips)));
}

struct ServiceDecision {
  bool starts_now;    ///< false: the tuple waits FIFO for a free slot
  SimTime duration;   ///< service time once started; queueing is excluded
};

inline ServiceDecision compute_service_time(double tuple_mi, const Device& device, int in_service) {
  if (!device.up()) throw DeviceDown("device '" + device.id + "' is down");
  if (tuple_mi < 0) throw std::invalid_argument("negative MI");
  return {in_service < device.parallelism, execution_time(tuple_mi, device.mips)};
}

// ---------------------------------------------------------------------------
// Shortest paths and routing

enum class WeightKind { DistanceKm, LatencyMs };

struct ShortestPathTree {
  std::string source;
  std::map<std::string, double> distance;                ///< +inf when unreachable
  std::map<std::string, std::string> predecessor;        ///< absent for source and unreachable nodes

  bool reachable(const std::string& id) const { return std::isfinite(distance.at(id)); }
};

inline double link_weight(const Link& l, WeightKind kind) {
  if (kind == WeightKind::LatencyMs) return static_cast<double>(l.latency.nanos());
  if (!l.weight_km) throw InvalidTopology("link " + l.a + "-" + l.b + " has no km weight");
  return *l.weight_km;
}

/// Dijkstra over the UP subgraph. Equal-distance ties keep the
/// lexicographically smallest predecessor so paths are deterministic.
inline ShortestPathTree shortest_paths(const PhysicalGraph& g, std::string_view source, WeightKind kind) {
  if (!g.contains(source)) throw UnknownSource("unknown source '" + std::string(source) + "'");
  const std::size_t n = g.device_count();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<std::size_t> pred(n, n);
  std::vector<bool> done(n, false);
  const std::size_t s = g.index_of(source);
  dist[s] = 0.0;

  using Entry = std::tuple<double, const std::string*, std::size_t>;
  auto cmp = [](const Entry& x, const Entry& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return *std::get<1>(x) > *std::get<1>(y);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
  pq.emplace(0.0, &g.device_at(s).id, s);
  while (!pq.empty()) {
    auto [d, name, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = true;
    if (!g.device_at(u).up()) continue;
    for (std::size_t li : g.incident(u)) {
      const Link& l = g.links()[li];
      if (!g.usable(l)) continue;
      const std::size_t v = g.index_of(l.other(g.device_at(u).id));
      if (done[v]) continue;
      const double nd = d + link_weight(l, kind);
      if (nd < dist[v]) {
        dist[v] = nd;
        pred[v] = u;
        pq.emplace(nd, &g.device_at(v).id, v);
      } else if (nd == dist[v] && g.device_at(u).id < g.device_at(pred[v]).id) {
        pred[v] = u;
      }
    }
  }

  ShortestPathTree tree;
  tree.source = std::string(source);
  const double scale = kind == WeightKind::LatencyMs ? 1e-6 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = g.device_at(i).id;
    tree.distance[id] = std::isfinite(dist[i]) ? dist[i] * scale : inf;
    if (pred[i] < n) tree.predecessor[id] = g.device_at(pred[i]).id;
  }
  return tree;
}

using RoutingStrategy =
    std::function<std::string(const PhysicalGraph&, const std::string& current, const std::string& destination)>;

/// Default strategy: first hop of the latency-weighted shortest path.
inline std::string latency_shortest_path_hop(const PhysicalGraph& g, const std::string& current,
                                             const std::string& destination) {
  if (current == destination) return destination;
  const auto tree = shortest_paths(g, current, WeightKind::LatencyMs);
  if (!tree.reachable(destination)) throw Unreachable("no UP path from " + current + " to " + destination);
  std::string hop = destination;
  for (;;) {
    const auto& p = tree.predecessor.at(hop);
    if (p == current) return hop;
    hop = p;
  }
}

inline std::string route_next_hop(const PhysicalGraph& g, const std::string& current, const std::string& destination,
                                  const RoutingStrategy& strategy = latency_shortest_path_hop) {
  if (!g.contains(current)) throw UnknownTarget("unknown device '" + current + "'");
  if (!g.contains(destination)) throw UnknownTarget("unknown device '" + destination + "'");
  return strategy(g, current, destination);
}

// ---------------------------------------------------------------------------
// Runtime topology events

struct FailDevice {
  std::string id;
};
struct RecoverDevice {
  std::string id;
};
struct SetLinkLatency {
  std::string src, dst;
  SimTime latency;
};
struct SetLinkBandwidth {
  std::string src, dst;
  double bandwidth_bps;
};

using TopologyAction = std::variant<FailDevice, RecoverDevice, SetLinkLatency, SetLinkBandwidth>;

struct TopologyEvent {
  SimTime at;
  TopologyAction action;
};

inline std::string describe(const TopologyAction& a) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, FailDevice>) return "FAIL_DEVICE(" + x.id + ")";
        else if constexpr (std::is_same_v<T, RecoverDevice>) return "RECOVER_DEVICE(" + x.id + ")";
        else if constexpr (std::is_same_v<T, SetLinkLatency>) return "SET_LINK_LATENCY(" + x.src + "," + x.dst + ")";
        else return "SET_LINK_BANDWIDTH(" + x.src + "," + x.dst + ")";
      },
      a);
}

/// Applies a topology mutation. Failing a device leaves its links untouched;
/// they are merely unusable while an endpoint is DOWN, so fail+recover
/// restores the exact prior state.
inline void apply_topology_event(const TopologyEvent& ev, PhysicalGraph& g) {
  auto link_of = [&g](const std::string& s, const std::string& d) -> Link& {
    Link* l = g.find_link(s, d);
    if (!l) throw UnknownTarget("no link " + s + "-" + d);
    return *l;
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, FailDevice>) {
          if (!g.contains(x.id)) throw UnknownTarget("unknown device '" + x.id + "'");
          g.device(x.id).status = Status::Down;
        } else if constexpr (std::is_same_v<T, RecoverDevice>) {
          if (!g.contains(x.id)) throw UnknownTarget("unknown device '" + x.id + "'");
          g.device(x.id).status = Status::Up;
        } else if constexpr (std::is_same_v<T, SetLinkLatency>) {
          link_of(x.src, x.dst).latency = x.latency;
        } else {
          if (!(x.bandwidth_bps > 0)) throw NonPositiveBandwidth("bandwidth must be positive");
          link_of(x.src, x.dst).bandwidth_bps = x.bandwidth_bps;
        }
      },
      ev.action);
  g.touch();
}

}  // namespace graphfog
