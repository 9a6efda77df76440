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
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "sim_time.hpp"

namespace graphfog {

using EntityId = std::uint32_t;

template <typename Kind, typename Payload>
struct Event {
  SimTime fire_at;
  std::uint64_t seq = 0;
  EntityId target = 0;
  Kind kind{};
  Payload payload{};
};

/// One processed event, without its payload.
struct TraceRecord {
  SimTime at;
  std::uint64_t seq;
  EntityId target;
  std::uint32_t kind;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct RunSummary {
  std::uint64_t events_processed = 0;
  SimTime final_clock;
};

/// Sequential discrete-event engine.
///
/// Events are delivered in strict (fire_at, seq) order, where seq is assigned
/// at scheduling time, so simultaneous events fire FIFO. One instance must
/// only be driven from one thread at a time.
template <typename Kind, typename Payload>
class Engine {
  static_assert(std::is_enum_v<Kind>, "event kind must be an enumeration");

 public:
  using event_type = Event<Kind, Payload>;
  using Handler = std::function<void(Engine&, event_type&)>;

  Engine() = default;
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  Engine(Engine&&) noexcept = default;
  Engine& operator=(Engine&&) noexcept = default;

  EntityId register_entity(std::string name, Handler handler) {
    entities_.push_back({std::move(name), std::move(handler)});
    return static_cast<EntityId>(entities_.size() - 1);
  }

  const std::string& entity_name(EntityId id) const { return entities_.at(id).name; }
  std::size_t entity_count() const { return entities_.size(); }

  /// Enqueues an event; returns its sequence number.
  std::uint64_t schedule(SimTime at, EntityId target, Kind kind, Payload payload = {}) {
    if (at < now_) {
      std::ostringstream os;
      os << "event at " << at << " scheduled when clock is " << now_;
      throw SchedulingInPast(os.str());
    }
    if (target >= entities_.size()) throw UnknownTarget("event target is not a registered entity");
    const std::uint64_t seq = next_seq_++;
    queue_.push_back(event_type{at, seq, target, kind, std::move(payload)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
    return seq;
  }

  std::uint64_t schedule_after(SimTime delay, EntityId target, Kind kind, Payload payload = {}) {
    return schedule(now_ + delay, target, kind, std::move(payload));
  }

  /// Processes every event with fire_at <= horizon; the clock then rests at horizon.
  RunSummary run_until(SimTime horizon) {
    if (horizon < now_) throw SchedulingInPast("horizon is earlier than the current clock");
    std::uint64_t processed = 0;
    while (!queue_.empty() && queue_.front().fire_at <= horizon) {
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      event_type ev = std::move(queue_.back());
      queue_.pop_back();
      now_ = ev.fire_at;
      if (record_trace_) trace_.push_back({ev.fire_at, ev.seq, ev.target, static_cast<std::uint32_t>(ev.kind)});
      ++processed;
      ++total_processed_;
      entities_[ev.target].handler(*this, ev);
    }
    now_ = horizon;
    return {processed, now_};
  }

  SimTime now() const { return now_; }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t total_processed() const { return total_processed_; }

  void set_trace(bool on) { record_trace_ = on; }
  const std::vector<TraceRecord>& trace() const { return trace_; }

  /// Text rendering of the trace, one event per line: "<ns> <seq> <entity> <kind>".
  std::string serialize_trace() const {
    std::ostringstream os;
    for (const auto& r : trace_) os << r.at.nanos() << ' ' << r.seq << ' ' << entities_[r.target].name << ' ' << r.kind << '\n';
    return os.str();
  }

 private:
  struct Entity {
    std::string name;
    Handler handler;
  };

  struct Later {
    bool operator()(const event_type& a, const event_type& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  std::vector<Entity> entities_;
  std::vector<event_type> queue_;
  SimTime now_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t total_processed_ = 0;
  bool record_trace_ = false;
  std::vector<TraceRecord> trace_;
};

}  // namespace graphfog
