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
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emergency/canonical.hpp"
#include "emergency/scenario.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "version.hpp"

namespace graphfog {

enum class ExperimentId { Exp1, Exp2, Exp3, Exp4, Custom };

inline std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Exp1: return "exp1";
    case ExperimentId::Exp2: return "exp2";
    case ExperimentId::Exp3: return "exp3";
    case ExperimentId::Exp4: return "exp4";
    case ExperimentId::Custom: return "custom";
  }
  return "?";
}

inline ExperimentId experiment_from_string(std::string_view s) {
  for (auto id : {ExperimentId::Exp1, ExperimentId::Exp2, ExperimentId::Exp3, ExperimentId::Exp4, ExperimentId::Custom})
    if (to_string(id) == s) return id;
  throw UsageError("unknown experiment '" + std::string(s) + "'");
}

enum class ReportFormat { Csv, Json };

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Alert time of every preset incident, and spacing of the Exp4 sequence.
inline constexpr double kFirstIncidentMs = 1000.0;
inline constexpr double kSequenceSpacingMs = 600000.0;

inline SimTime default_horizon(ExperimentId id) {
  return id == ExperimentId::Exp4 ? SimTime::from_millis(kFirstIncidentMs + 5 * kSequenceSpacingMs)
                                  : SimTime::from_millis(60000.0);
}

struct ExperimentConfig {
  ExperimentId id = ExperimentId::Custom;
  std::optional<std::filesystem::path> scenario;  ///< road network
  std::optional<std::filesystem::path> app;
  std::optional<std::filesystem::path> topology;
  std::optional<std::filesystem::path> faults;
  std::optional<std::filesystem::path> incidents;
  std::uint64_t master_seed = kDefaultSeed;
  int replications = 1;
  SimTime horizon = default_horizon(ExperimentId::Custom);
  std::filesystem::path output_dir = "graphfog-out";
  std::set<ReportFormat> formats{ReportFormat::Csv, ReportFormat::Json};
  bool stamp = false;

  void validate() const {
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (horizon <= SimTime{}) throw ConfigError("horizon must be positive");
    if (formats.empty()) throw ConfigError("no report format selected");
  }
};

/// Parses `graphfog <exp1|exp2|exp3|exp4|custom> [options]`. Returns empty
/// after printing help to `out`. `env_seed` is the GRAPHFOG_SEED fallback.
inline std::optional<ExperimentConfig> parse_cli(const std::vector<std::string>& args, std::ostream& out,
                                                 std::optional<std::string> env_seed = std::nullopt) {
  CLI::App cli{"Discrete-event fog simulator with an emergency-response case study", "graphfog"};
  std::string experiment;
  std::string scenario, app, topology, faults, incidents, out_dir, formats;
  std::optional<std::uint64_t> seed;
  std::optional<long long> reps;
  std::optional<double> horizon_ms;
  bool stamp = false;
  cli.add_option("experiment", experiment, "exp1, exp2, exp3, exp4 or custom")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "exp3", "exp4", "custom"}));
  cli.add_option("--scenario", scenario, "road network JSON");
  cli.add_option("--app", app, "application JSON");
  cli.add_option("--topology", topology, "device topology JSON");
  cli.add_option("--faults", faults, "fault script JSON");
  cli.add_option("--incidents", incidents, "incident script JSON (custom only)");
  cli.add_option("--seed", seed, "master seed (falls back to GRAPHFOG_SEED)");
  cli.add_option("--reps", reps, "replications");
  cli.add_option("--horizon", horizon_ms, "simulated horizon in ms");
  cli.add_option("--out", out_dir, "output directory");
  cli.add_option("--format", formats, "comma-separated subset of csv,json");
  cli.add_flag("--stamp", stamp, "add a wall-clock timestamp to the JSON report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << cli.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + cli.help());
  }

  ExperimentConfig c;
  c.id = experiment_from_string(experiment);
  auto path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s); };
  c.scenario = path(scenario);
  c.app = path(app);
  c.topology = path(topology);
  c.faults = path(faults);
  c.incidents = path(incidents);
  if (c.incidents && c.id != ExperimentId::Custom) throw UsageError("--incidents only applies to custom");

  if (seed) {
    c.master_seed = *seed;
  } else if (env_seed && !env_seed->empty()) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(env_seed->data(), env_seed->data() + env_seed->size(), v);
    if (ec != std::errc{} || p != env_seed->data() + env_seed->size())
      throw UsageError("GRAPHFOG_SEED is not an unsigned integer: '" + *env_seed + "'");
    c.master_seed = v;
  }

  c.replications = c.id == ExperimentId::Exp1 ? 5 : 1;
  if (reps) {
    if (*reps < 1) throw UsageError("--reps must be at least 1");
    c.replications = static_cast<int>(*reps);
  }
  c.horizon = default_horizon(c.id);
  if (horizon_ms) {
    if (!(*horizon_ms > 0)) throw UsageError("--horizon must be positive");
    c.horizon = SimTime::from_millis(*horizon_ms);
  }
  if (!out_dir.empty()) c.output_dir = out_dir;
  if (!formats.empty()) {
    c.formats.clear();
    std::stringstream ss(formats);
    for (std::string f; std::getline(ss, f, ',');) {
      if (f == "csv") c.formats.insert(ReportFormat::Csv);
      else if (f == "json") c.formats.insert(ReportFormat::Json);
      else throw UsageError("unknown report format '" + f + "'");
    }
    if (c.formats.empty()) throw UsageError("--format selects nothing");
  }
  c.stamp = stamp;
  return c;
}

inline std::optional<ExperimentConfig> parse_cli(int argc, const char* const* argv, std::ostream& out) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const char* env = std::getenv("GRAPHFOG_SEED");
  return parse_cli(args, out, env ? std::optional<std::string>(env) : std::nullopt);
}

/// One simulated run inside a replication.
struct RunRecord {
  std::string label;
  emergency::ScenarioResult result;
};

struct Replication {
  int index = 0;
  std::vector<RunRecord> runs;
  nlohmann::json summary;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<Replication> replications;
  std::vector<LatencyStats> latency;  ///< pooled over replications, keyed "<run>/<loop>"
  nlohmann::json aggregate;
  std::optional<std::string> generated_at;
};

namespace detail {

struct Loaded {
  emergency::ScenarioInputs inputs;
  std::vector<TopologyEvent> faults;
  std::vector<emergency::IncidentSpec> incidents;
  bool canonical_road = true;
};

inline Loaded load_inputs(const ExperimentConfig& c) {
  Loaded l{emergency::canonical_inputs(), {}, {}, !c.scenario};
  if (c.topology) l.inputs.topology = io::load_json_file(*c.topology);
  if (c.app) l.inputs.application = io::load_json_file(*c.app);
  if (c.scenario) l.inputs.road = io::load_json_file(*c.scenario);
  if (c.faults) l.faults = io::fault_script_from_json(io::load_json_file(*c.faults));
  if (c.incidents) l.incidents = emergency::incidents_from_json(io::load_json_file(*c.incidents));
  return l;
}

inline emergency::IncidentSpec fire(const std::string& zone, double at_ms, std::string id = {}) {
  return {SimTime::from_millis(at_ms), zone, "fire", std::move(id)};
}

inline RunRecord simulate(const Loaded& l, const ExperimentConfig& c, int rep, std::string label,
                          const std::vector<emergency::IncidentSpec>& incidents,
                          emergency::ScenarioOptions options = {}) {
  SimulationOptions so;
  so.master_seed = c.master_seed;
  so.stream_prefix = "rep" + std::to_string(rep) + "." + label + ".";
  so.record_trace = false;
  options.enforce_canonical_shape = l.canonical_road;
  emergency::EmergencyScenario sc(l.inputs, std::move(so), std::move(options));
  for (const auto& f : l.faults) sc.add_fault(f);
  for (const auto& i : incidents) sc.add_incident(i);
  return {std::move(label), sc.run(c.horizon)};
}

inline double sample_stdev(const std::vector<double>& xs) { return std::sqrt(loop_stats(xs).variance); }

inline double mean_of(const std::vector<double>& xs) { return loop_stats(xs).mean; }

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline const emergency::DispatchPlan* plan_for_zone(const emergency::ScenarioResult& r, const std::string& zone) {
  for (const auto& p : r.plans)
    if (p.zone == zone) return &p;
  return nullptr;
}

inline const emergency::DispatchPlan& require_plan(const emergency::ScenarioResult& r, const std::string& zone) {
  const auto* p = plan_for_zone(r, zone);
  if (!p) throw SimulationError("no dispatch plan was produced for zone " + zone);
  if (!p->coordination_latency_ms) throw SimulationError("dispatch for zone " + zone + " was never confirmed");
  return *p;
}

inline const PhaseRecord* dijkstra_phase(const emergency::ScenarioResult& r, const std::string& incident) {
  for (const auto& ph : r.metrics.phases) {
    auto it = ph.context.find("incident");
    if (ph.label == "dijkstra" && it != ph.context.end() && it->second == incident) return &ph;
  }
  return nullptr;
}

/// Fastest loop sample of an incident: the one that defines its coordination latency.
inline const LoopSample* coordinating_sample(const emergency::ScenarioResult& r, const std::string& incident) {
  const LoopSample* best = nullptr;
  for (const auto& s : r.metrics.loop_samples) {
    auto it = s.context.find("incident");
    if (it == s.context.end() || it->second != incident) continue;
    if (!best || s.latency < best->latency) best = &s;
  }
  return best;
}

/// A 1000 MIPS general-purpose core, the reference for the FPGA speedup.
inline Device reference_cpu() {
  Device d;
  d.id = "reference-cpu";
  d.mips = 1000;
  d.architecture = Architecture::CPU;
  return d;
}

inline Replication run_replication(const Loaded& l, const ExperimentConfig& c, int rep) {
  using nlohmann::json;
  Replication out;
  out.index = rep;
  switch (c.id) {
    case ExperimentId::Exp1: {
      out.runs.push_back(simulate(l, c, rep, "z1", {fire("z1", kFirstIncidentMs)}));
      const auto& r = out.runs.back().result;
      const auto& plan = require_plan(r, "z1");
      json s{{"coordinationLatencyMs", *plan.coordination_latency_ms},
             {"meanInterventionMin", emergency::mean_intervention_time(plan)}};
      if (const auto* sample = coordinating_sample(r, plan.incident_id)) {
        SimTime hop_sum;
        for (std::size_t i = 1; i < sample->hops.size(); ++i) hop_sum += sample->hops[i].arrival - sample->hops[i - 1].arrival;
        s["decomposition"] = {{"propagationMs", sample->breakdown.propagation.millis()},
                              {"transmissionMs", sample->breakdown.transmission.millis()},
                              {"queueingMs", sample->breakdown.queueing.millis()},
                              {"computeMs", sample->breakdown.compute.millis()},
                              {"networkNs", sample->breakdown.network().nanos()},
                              {"propagationNs", sample->breakdown.propagation.nanos()},
                              {"hopTraceNs", hop_sum.nanos()},
                              {"totalNs", sample->latency.nanos()}};
      }
      if (const auto* ph = dijkstra_phase(r, plan.incident_id)) {
        const SimTime cpu = compute_service_time(ph->mi, reference_cpu(), 0).duration;
        s["dijkstra"] = {{"device", ph->device},
                         {"mi", ph->mi},
                         {"serviceNs", ph->duration.nanos()},
                         {"referenceCpuServiceNs", cpu.nanos()},
                         {"speedup", static_cast<double>(cpu.nanos()) / static_cast<double>(ph->duration.nanos())}};
      }
      out.summary = std::move(s);
      break;
    }
    case ExperimentId::Exp2: {
      json zones = json::object();
      for (const char* z : {"z1", "z2", "z3", "z4", "z5"}) {
        out.runs.push_back(simulate(l, c, rep, z, {fire(z, kFirstIncidentMs)}));
        const auto& plan = require_plan(out.runs.back().result, z);
        int near = 0;
        for (const auto& a : plan.assignments) near += a.base_travel_minutes <= 1.5;
        zones[z] = {{"coordinationLatencyMs", *plan.coordination_latency_ms},
                    {"meanInterventionMin", emergency::mean_intervention_time(plan)},
                    {"unitsWithin1_5Min", near}};
      }
      out.summary = {{"zones", std::move(zones)}};
      break;
    }
    case ExperimentId::Exp3: {
      const std::vector<emergency::IncidentSpec> dual{fire("z1", kFirstIncidentMs), fire("z2", kFirstIncidentMs)};
      out.runs.push_back(simulate(l, c, rep, "baseline-z1", {fire("z1", kFirstIncidentMs)}));
      out.runs.push_back(simulate(l, c, rep, "baseline-z2", {fire("z2", kFirstIncidentMs)}));
      emergency::ScenarioOptions p1, p2;
      p1.coordinator_parallelism = 1;
      p2.coordinator_parallelism = 2;
      out.runs.push_back(simulate(l, c, rep, "dual-p1", dual, p1));
      out.runs.push_back(simulate(l, c, rep, "dual-p2", dual, p2));
      const double base = *require_plan(out.runs[1].result, "z2").coordination_latency_ms;
      json s{{"baselineSecondMs", base}};
      for (std::size_t k : {std::size_t{2}, std::size_t{3}}) {
        const auto& r = out.runs[k].result;
        const auto& second = require_plan(r, "z2");
        std::size_t idx = 0;
        while (&r.plans[idx] != &second) ++idx;
        json units = json::array();
        for (const auto& a : second.assignments)
          units.push_back({{"unit", a.unit}, {"conflicted", a.conflicted}, {"penaltyFactor", a.travel_minutes / a.base_travel_minutes}});
        s[out.runs[k].label] = {{"conflictRate", r.conflict_rates[idx]},
                                {"firstCoordinationMs", *require_plan(r, "z1").coordination_latency_ms},
                                {"secondCoordinationMs", *second.coordination_latency_ms},
                                {"secondMinusBaselineMs", *second.coordination_latency_ms - base},
                                {"secondUnits", std::move(units)}};
      }
      out.summary = std::move(s);
      break;
    }
    case ExperimentId::Exp4: {
      std::vector<emergency::IncidentSpec> seq;
      for (int k = 0; k < 5; ++k) seq.push_back(fire("z1", kFirstIncidentMs + k * kSequenceSpacingMs));
      out.runs.push_back(simulate(l, c, rep, "z1-sequence", seq));
      const auto& r = out.runs.back().result;
      json incidents = json::array();
      std::optional<std::int64_t> miss, hit;
      for (const auto& plan : r.plans) {
        const auto* ph = dijkstra_phase(r, plan.incident_id);
        if (!ph) throw SimulationError("incident " + plan.incident_id + " has no route computation");
        incidents.push_back({{"incident", plan.incident_id},
                             {"cacheHit", plan.cache_hit},
                             {"dijkstraServiceNs", ph->duration.nanos()},
                             {"coordinationLatencyMs", opt(plan.coordination_latency_ms)}});
        auto& slot = plan.cache_hit ? hit : miss;
        if (!slot) slot = ph->duration.nanos();
      }
      out.summary = {{"cacheHits", r.cache_hits}, {"cacheMisses", r.cache_misses}, {"incidents", std::move(incidents)}};
      if (miss && hit && *hit > 0) out.summary["missHitRatio"] = static_cast<double>(*miss) / static_cast<double>(*hit);
      break;
    }
    case ExperimentId::Custom: {
      auto incidents = l.incidents;
      if (incidents.empty()) incidents.push_back(fire("z1", kFirstIncidentMs));
      out.runs.push_back(simulate(l, c, rep, "custom", incidents));
      const auto& r = out.runs.back().result;
      out.summary = {{"cacheHits", r.cache_hits}, {"cacheMisses", r.cache_misses}};
      break;
    }
  }
  return out;
}

inline nlohmann::json aggregate(const ExperimentConfig& c, const std::vector<Replication>& reps) {
  using nlohmann::json;
  json a = json::object();
  auto collect = [&](auto&& get) {
    std::vector<double> xs;
    for (const auto& r : reps) xs.push_back(get(r.summary));
    return json{{"mean", mean_of(xs)}, {"stdev", sample_stdev(xs)}, {"values", xs}};
  };
  switch (c.id) {
    case ExperimentId::Exp1:
      a["meanInterventionMin"] = collect([](const json& s) { return s.at("meanInterventionMin").get<double>(); });
      a["coordinationLatencyMs"] = collect([](const json& s) { return s.at("coordinationLatencyMs").get<double>(); });
      break;
    case ExperimentId::Exp2: {
      std::vector<std::pair<double, std::string>> order;
      json zones = json::object();
      for (const auto& [z, _] : reps.front().summary.at("zones").items()) {
        zones[z] = collect([&z = z](const json& s) { return s.at("zones").at(z).at("meanInterventionMin").get<double>(); });
        order.emplace_back(zones[z]["mean"].get<double>(), z);
      }
      std::sort(order.begin(), order.end());
      json ranking = json::array();
      for (const auto& [_, z] : order) ranking.push_back(z);
      a["zones"] = std::move(zones);
      a["ranking"] = std::move(ranking);
      break;
    }
    case ExperimentId::Exp3:
      a["conflictRate"] = collect([](const json& s) { return s.at("dual-p2").at("conflictRate").get<double>(); });
      a["contentionP1Ms"] = collect([](const json& s) { return s.at("dual-p1").at("secondMinusBaselineMs").get<double>(); });
      a["contentionP2Ms"] = collect([](const json& s) { return s.at("dual-p2").at("secondMinusBaselineMs").get<double>(); });
      break;
    case ExperimentId::Exp4:
      a["missHitRatio"] = collect([](const json& s) { return s.value("missHitRatio", 0.0); });
      break;
    case ExperimentId::Custom:
      break;
  }
  return a;
}

}  // namespace detail

/// Runs every replication (concurrently, one simulation per task) and
/// reduces them in replication order.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const detail::Loaded loaded = detail::load_inputs(config);

  ExperimentReport report;
  report.config = config;
  const int width = std::max(1u, std::thread::hardware_concurrency());
  for (int start = 0; start < config.replications; start += width) {
    std::vector<std::future<Replication>> batch;
    for (int k = start; k < std::min(config.replications, start + width); ++k)
      batch.push_back(std::async(std::launch::async, [&loaded, &config, k] { return detail::run_replication(loaded, config, k); }));
    for (auto& f : batch) report.replications.push_back(f.get());
  }

  std::map<std::string, std::vector<double>> pooled;
  for (const auto& rep : report.replications)
    for (const auto& run : rep.runs)
      for (const auto& s : run.result.metrics.loop_samples) pooled[run.label + "/" + s.loop_id].push_back(s.latency_ms());
  for (auto& [key, xs] : pooled) report.latency.push_back(loop_stats(std::move(xs), key));

  report.aggregate = detail::aggregate(config, report.replications);
  if (config.stamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream ts;
    ts << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    report.generated_at = ts.str();
  }
  return report;
}

/// Shortest round-trip decimal form, independent of locale and stream state.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, p) : std::string("nan");
}

inline nlohmann::json to_json(const LatencyStats& s) {
  return {{"loopId", s.loop_id},
          {"n", s.n},
          {"meanMs", s.mean},
          {"varianceMs2", s.variance},
          {"ci95Ms", s.ci95 ? nlohmann::json{s.ci95->first, s.ci95->second} : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const emergency::DispatchPlan& p, double conflict_rate) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& a : p.assignments)
    units.push_back({{"unit", a.unit},
                     {"device", a.device},
                     {"distanceKm", a.distance_km},
                     {"baseTravelMin", a.base_travel_minutes},
                     {"travelMin", a.travel_minutes},
                     {"conflicted", a.conflicted},
                     {"confirmationLatencyMs", detail::opt(a.confirmation_latency_ms)}});
  nlohmann::json j{{"incident", p.incident_id},
                   {"zone", p.zone},
                   {"raisedAtNs", p.raised_at.nanos()},
                   {"cacheHit", p.cache_hit},
                   {"chargedMi", p.charged_mi},
                   {"conflictRate", conflict_rate},
                   {"coordinationLatencyMs", detail::opt(p.coordination_latency_ms)},
                   {"assignments", std::move(units)}};
  if (p.coordination_latency_ms) j["meanInterventionMin"] = emergency::mean_intervention_time(p);
  return j;
}

inline nlohmann::json to_json(const RunRecord& run, SimTime horizon) {
  using nlohmann::json;
  const auto& r = run.result;
  const auto& m = r.metrics;
  json devices = json::array();
  for (const auto& [id, e] : m.energy) {
    const auto& tel = m.telemetry.at(id);
    devices.push_back({{"id", id},
                       {"energyJ", e.total_joules},
                       {"cost", m.cost.at(id).total_cost},
                       {"completions", tel.completions()},
                       {"meanServiceTimeS", tel.mean_service_time_s()},
                       {"timeWeightedInService", tel.time_weighted_in_service(horizon)},
                       {"timeWeightedQueueLength", tel.time_weighted_queue_length(horizon)}});
  }
  json loops = json::array();
  std::set<std::string> ids;
  for (const auto& s : m.loop_samples) ids.insert(s.loop_id);
  for (const auto& id : ids) loops.push_back(to_json(loop_stats(m.loop_latencies_ms(id), id)));
  json sensors = json::array();
  for (const auto& s : m.sensors)
    if (s.emissions > 0)
      sensors.push_back({{"id", s.sensor_id}, {"emissions", s.emissions}, {"consumedMilliJ", s.consumed_mj},
                         {"remainingMilliJ", s.remaining_mj}, {"halted", s.halted}});
  json plans = json::array();
  for (std::size_t i = 0; i < r.plans.size(); ++i) plans.push_back(to_json(r.plans[i], r.conflict_rates[i]));
  return {{"label", run.label},
          {"metadata", {{"eventCount", r.summary.events_processed}, {"finalClockNs", r.summary.final_clock.nanos()}}},
          {"tuples",
           {{"created", m.tuples.created},
            {"consumed", m.tuples.consumed},
            {"dropped", m.tuples.dropped},
            {"inFlight", m.tuples.in_flight},
            {"dropsByReason", m.tuples.drops_by_reason}}},
          {"cache", {{"hits", r.cache_hits}, {"misses", r.cache_misses}}},
          {"plans", std::move(plans)},
          {"loops", std::move(loops)},
          {"devices", std::move(devices)},
          {"sensors", std::move(sensors)}};
}

inline nlohmann::json to_json(const ExperimentReport& report) {
  using nlohmann::json;
  std::uint64_t events = 0;
  SimTime final_clock;
  json reps = json::array();
  for (const auto& rep : report.replications) {
    json runs = json::array();
    for (const auto& run : rep.runs) {
      events += run.result.summary.events_processed;
      final_clock = std::max(final_clock, run.result.summary.final_clock);
      runs.push_back(to_json(run, report.config.horizon));
    }
    reps.push_back({{"index", rep.index}, {"summary", rep.summary}, {"runs", std::move(runs)}});
  }
  json meta{{"experiment", to_string(report.config.id)},
            {"masterSeed", report.config.master_seed},
            {"generator", RngStream::kGeneratorIdentity},
            {"engineVersion", kEngineVersion},
            {"replications", report.config.replications},
            {"horizonNs", report.config.horizon.nanos()},
            {"eventCount", events},
            {"finalClockNs", final_clock.nanos()}};
  if (report.generated_at) meta["generatedAt"] = *report.generated_at;
  json latency = json::array();
  for (const auto& s : report.latency) latency.push_back(to_json(s));
  json agg = report.aggregate;
  agg["latency"] = std::move(latency);
  return {{"metadata", std::move(meta)}, {"replications", std::move(reps)}, {"aggregate", std::move(agg)}};
}

namespace detail {

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, std::string_view header) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << header << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  template <typename T>
  static std::enable_if_t<std::is_integral_v<T>, std::string> cell(T v) {
    return std::to_string(v);
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_csv(const ExperimentReport& report, const std::filesystem::path& dir,
                      std::vector<std::filesystem::path>& written) {
  {
    CsvFile f(dir / "latency.csv", "loop_id,n,mean_ms,variance_ms2,ci95_low_ms,ci95_high_ms");
    for (const auto& s : report.latency) {
      const std::string lo = s.ci95 ? format_number(s.ci95->first) : "";
      const std::string hi = s.ci95 ? format_number(s.ci95->second) : "";
      f.row(s.loop_id, s.n, s.mean, s.variance, lo, hi);
    }
    f.finish();
    written.push_back(dir / "latency.csv");
  }
  CsvFile dev(dir / "devices.csv", "replication,run,device_id,energy_j,cost,completions,mean_service_time_s");
  CsvFile tel(dir / "telemetry.csv", "replication,run,device_id,time_ns,queue_length,in_service");
  CsvFile tup(dir / "tuples.csv", "replication,run,created,consumed,dropped,in_flight");
  CsvFile dis(dir / "dispatch.csv",
              "replication,run,incident,zone,unit,distance_km,travel_min,conflicted,coordination_ms,intervention_min");
  for (const auto& rep : report.replications)
    for (const auto& run : rep.runs) {
      const auto& m = run.result.metrics;
      for (const auto& [id, e] : m.energy) {
        const auto& t = m.telemetry.at(id);
        dev.row(rep.index, run.label, id, e.total_joules, m.cost.at(id).total_cost, t.completions(), t.mean_service_time_s());
        for (const auto& s : t.samples()) tel.row(rep.index, run.label, id, s.at.nanos(), s.queue_length, s.in_service);
      }
      tup.row(rep.index, run.label, m.tuples.created, m.tuples.consumed, m.tuples.dropped, m.tuples.in_flight);
      for (const auto& p : run.result.plans)
        for (const auto& a : p.assignments) {
          const std::string coord = p.coordination_latency_ms ? format_number(*p.coordination_latency_ms) : "";
          const std::string total = p.coordination_latency_ms ? format_number(emergency::intervention_time(a, p)) : "";
          dis.row(rep.index, run.label, p.incident_id, p.zone, a.unit, a.distance_km, a.travel_minutes,
                  a.conflicted ? 1 : 0, coord, total);
        }
    }
  for (auto* f : {&dev, &tel, &tup, &dis}) f->finish();
  for (const char* name : {"devices.csv", "telemetry.csv", "tuples.csv", "dispatch.csv"}) written.push_back(dir / name);
}

}  // namespace detail

/// Writes the selected formats into `dir` and returns the files written.
inline std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::set<ReportFormat>& formats,
                                                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  if (formats.count(ReportFormat::Json)) {
    const auto path = dir / "report.json";
    std::ofstream out(path, std::ios::binary);
    out << to_json(report).dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
    written.push_back(path);
  }
  if (formats.count(ReportFormat::Csv)) detail::write_csv(report, dir, written);
  return written;
}

}  // namespace graphfog
