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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "application.hpp"
#include "errors.hpp"
#include "sim_time.hpp"
#include "topology.hpp"

namespace graphfog {

/// Linear power model: p(u) = idle + (busy - idle) * u.
inline double linear_power(const Device& d, double utilization) {
  return d.power_idle_w + (d.power_busy_w - d.power_idle_w) * utilization;
}

struct EnergyAccount {
  std::string device_id;
  SimTime last_update;
  double last_utilization = 0.0;
  double total_joules = 0.0;
};

/// Integrates p(u) over [last_update, now] with the utilization that was in
/// force, then switches to `new_utilization`.
inline void update_energy(EnergyAccount& acc, SimTime now, double new_utilization, const Device& device) {
  if (now < acc.last_update) throw ClockRegression("energy update for '" + acc.device_id + "' goes back in time");
  acc.total_joules += linear_power(device, acc.last_utilization) * (now - acc.last_update).seconds();
  acc.last_utilization = new_utilization;
  acc.last_update = now;
}

struct CostAccount {
  std::string device_id;
  SimTime last_update;
  double total_cost = 0.0;  ///< dimensionless rate units
};

/// Charges r * u * MIPS over [last_update, now]; `utilization` is the value in force over that span.
inline void update_cost(CostAccount& acc, SimTime now, double utilization, const Device& device) {
  if (now < acc.last_update) throw ClockRegression("cost update for '" + acc.device_id + "' goes back in time");
  acc.total_cost += device.rate_per_mips * utilization * device.mips * (now - acc.last_update).seconds();
  acc.last_update = now;
}

struct LatencyStats {
  std::string loop_id;
  std::vector<double> samples_ms;
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;                       ///< unbiased (n - 1)
  std::optional<std::pair<double, double>> ci95;  ///< normal approximation; empty when n < 2
};

inline LatencyStats loop_stats(std::vector<double> samples_ms, std::string loop_id = {}) {
  LatencyStats s;
  s.loop_id = std::move(loop_id);
  s.n = samples_ms.size();
  // Deviations are taken from the first sample so identical samples give
  // an exact mean and a variance of exactly zero.
  double shift = 0.0, mean_dev = 0.0;
  if (s.n > 0) {
    shift = samples_ms.front();
    for (double x : samples_ms) mean_dev += x - shift;
    mean_dev /= static_cast<double>(s.n);
    s.mean = shift + mean_dev;
  }
  if (s.n >= 2) {
    double ss = 0.0;
    for (double x : samples_ms) ss += (x - shift - mean_dev) * (x - shift - mean_dev);
    s.variance = ss / static_cast<double>(s.n - 1);
    const double half = 1.96 * std::sqrt(s.variance / static_cast<double>(s.n));
    s.ci95 = std::make_pair(s.mean - half, s.mean + half);
  }
  s.samples_ms = std::move(samples_ms);
  return s;
}

struct QueueSample {
  SimTime at;
  std::size_t queue_length;
  int in_service;
};

/// Per-device queue lengths and service statistics, for checking against
/// external queueing models.
class QueueTelemetry {
 public:
  QueueTelemetry() = default;
  explicit QueueTelemetry(std::string device_id) : device_id_(std::move(device_id)) {}

  const std::string& device_id() const { return device_id_; }
  const std::vector<QueueSample>& samples() const { return samples_; }

  void record(SimTime at, std::size_t queue_length, int in_service) {
    if (!samples_.empty()) {
      const auto& last = samples_.back();
      in_service_area_ += static_cast<double>(last.in_service) * (at - last.at).seconds();
      queue_area_ += static_cast<double>(last.queue_length) * (at - last.at).seconds();
    }
    samples_.push_back({at, queue_length, in_service});
  }

  void record_completion(SimTime service_time) {
    ++completions_;
    service_seconds_ += service_time.seconds();
  }

  /// Closes the time-weighted integrals at `end` without adding a sample.
  void close(SimTime end) {
    if (samples_.empty()) return;
    record(end, samples_.back().queue_length, samples_.back().in_service);
  }

  std::uint64_t completions() const { return completions_; }
  double mean_service_time_s() const { return completions_ ? service_seconds_ / static_cast<double>(completions_) : 0.0; }
  /// Per-slot service rate in tuples/second.
  double mean_service_rate() const { return completions_ ? 1.0 / mean_service_time_s() : 0.0; }

  double time_weighted_in_service(SimTime horizon) const {
    return horizon.nanos() ? in_service_area_ / horizon.seconds() : 0.0;
  }
  double time_weighted_queue_length(SimTime horizon) const {
    return horizon.nanos() ? queue_area_ / horizon.seconds() : 0.0;
  }
  double throughput(SimTime horizon) const {
    return horizon.nanos() ? static_cast<double>(completions_) / horizon.seconds() : 0.0;
  }

 private:
  std::string device_id_;
  std::vector<QueueSample> samples_;
  std::uint64_t completions_ = 0;
  double service_seconds_ = 0.0;
  double in_service_area_ = 0.0;
  double queue_area_ = 0.0;
};

struct SensorEnergyReport {
  std::string sensor_id;
  double capacity_mj = 0.0;
  std::uint64_t emissions = 0;
  double consumed_mj = 0.0;
  double remaining_mj = 0.0;
  bool halted = false;
};

/// Execution record of one compute phase on a device.
struct PhaseRecord {
  std::string device;
  std::string module;
  std::string label;
  std::uint64_t tuple_id = 0;
  double mi = 0.0;
  SimTime started;
  SimTime duration;
  Context context;
};

struct TupleCounters {
  std::uint64_t created = 0;
  std::uint64_t consumed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  std::map<std::string, std::uint64_t> drops_by_reason;

  bool conserved() const { return created == consumed + dropped + in_flight; }
};

/// Every accumulator of one run. A pure function of the event trace.
struct MetricsLedger {
  std::map<std::string, EnergyAccount> energy;
  std::map<std::string, CostAccount> cost;
  std::map<std::string, QueueTelemetry> telemetry;
  std::vector<LoopSample> loop_samples;
  std::vector<PhaseRecord> phases;
  std::vector<SensorEnergyReport> sensors;
  TupleCounters tuples;
  std::uint64_t skipped_emissions = 0;

  std::vector<double> loop_latencies_ms(const std::string& loop_id) const {
    std::vector<double> out;
    for (const auto& s : loop_samples)
      if (s.loop_id == loop_id) out.push_back(s.latency_ms());
    return out;
  }

  double total_energy_j() const {
    double e = 0;
    for (const auto& [_, a] : energy) e += a.total_joules;
    return e;
  }
  double total_cost() const {
    double c = 0;
    for (const auto& [_, a] : cost) c += a.total_cost;
    return c;
  }
};

}  // namespace graphfog
