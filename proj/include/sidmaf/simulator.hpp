#pragma once

// Trace-replay evaluation of market-formation policies.
//
// Completed orders are replayed in timestamp order. For each one the policy
// picks a set of drivers from the currently available pool, one of them is
// drawn uniformly as the customer's choice, and that driver is busy for
// ride_km / avg_speed. Availability otherwise comes from the recorded GPS
// trails, so a released driver reappears wherever the trail puts them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sidmaf/dataset.hpp"
#include "sidmaf/features.hpp"
#include "sidmaf/forest.hpp"
#include "sidmaf/selection.hpp"

namespace sidmaf {

struct SimulationConfig {
  Timestamp staleness_s = 60;
  double fallback_speed_kmh = 24.0;
  std::uint64_t seed = 0;
  TimeZone tz = TimeZone::europe_prague();
};

struct SidmafPolicy {
  const Forest* model = nullptr;
  std::size_t k = 1;
  double p_target = 0.999;
};

/// Reproduces the recorded requests: p = 1 for accepts, 0 otherwise.
struct ReplayBaselinePolicy {};

/// Addresses the m nearest available drivers; the model only scores them.
struct DistanceBaselinePolicy {
  std::size_t m = 8;
  const Forest* model = nullptr;
};

using MarketFormationPolicy = std::variant<SidmafPolicy, ReplayBaselinePolicy, DistanceBaselinePolicy>;

std::string policy_name(const MarketFormationPolicy& policy);

struct PolicyDecision {
  std::string order_id;
  Timestamp timestamp = 0;
  std::vector<DriverId> selected_driver_ids;
  std::vector<double> per_driver_accept_prob;
  std::optional<DriverId> chosen_offer;
  // The chosen driver is marked busy over [timestamp, busy_until). Replayed
  // choices of a driver who is still busy in the simulation stay unassigned.
  bool assigned = false;
  Timestamp busy_until = 0;
  std::size_t pool_size = 0;
  std::optional<double> achieved;  // SIDMAF only
  std::optional<bool> satisfied;   // SIDMAF only

  friend bool operator==(const PolicyDecision&, const PolicyDecision&) = default;
};

struct TraceConfig {
  std::string policy;  // sidmaf | replay | distance
  std::size_t k = 0;
  double p_target = 0.0;
  std::size_t m = 0;
  Timestamp staleness_s = 60;
  double fallback_speed_kmh = 24.0;
  std::string timezone;

  friend bool operator==(const TraceConfig&, const TraceConfig&) = default;
};

struct SimulationTrace {
  std::string policy_name;
  TraceConfig config;
  std::uint64_t seed = 0;
  double avg_speed_kmh = 0.0;
  bool avg_speed_fallback = false;
  std::size_t rides_measured = 0;
  std::vector<PolicyDecision> decisions;

  friend bool operator==(const SimulationTrace&, const SimulationTrace&) = default;
};

struct SpeedEstimate {
  double kmh = 0.0;
  std::size_t rides_used = 0;
  bool fallback = false;
};

/// Ride duration read off the selected driver's trail: the driver must have a
/// fresh sample at order time and then drop out of the trail for longer than
/// the staleness window. Returns seconds from the order to reappearance.
std::optional<double> measured_ride_duration(const RideOrder& order, const DriverTrail& trail,
                                             Timestamp staleness_s);

SpeedEstimate estimate_avg_speed(const Dataset& d, Timestamp staleness_s = 60, double fallback_kmh = 24.0);

/// Latest sample at or before t, if no older than the staleness window.
std::optional<GeoPoint> driver_position_at(const DriverTrail& trail, Timestamp t, Timestamp staleness_s = 60);

PolicyDecision replay_baseline_decision(const RideOrder& order);

SimulationTrace run_simulation(const Dataset& d, const MarketFormationPolicy& policy, const SimulationConfig& config);

/// Busy intervals of each driver are pairwise disjoint.
bool busy_intervals_disjoint(const SimulationTrace& trace);

std::size_t completed_order_count(const Dataset& d);

/// JSONL: one header record, then one record per decision. `provenance_json`
/// (a JSON object) is embedded in the header when non-empty.
void write_trace(const SimulationTrace& trace, const std::filesystem::path& path,
                 const std::string& provenance_json = {});
SimulationTrace read_trace(const std::filesystem::path& path);

}  // namespace sidmaf
