#pragma once

// Synthetic city generator with a known acceptance law, used in place of the
// proprietary transaction data.
//
// Drivers random-walk around the city and emit a GPS sample every cadence
// tick while free. Each order addresses the `requests_per_order` nearest free
// drivers; every addressed driver accepts with probability
//
//     sigmoid(offset_driver - distance_decay * pickup_distance_km)
//
// An order is completed when at least one driver accepted; the passenger then
// picks one accepting driver uniformly. That driver disappears from the trail
// for the ride (ride_km / avg_speed) and reappears at the drop-off. Pickups
// and drop-offs are drawn from the same isotropic Gaussian around the center.

#include <cstdint>
#include <vector>

#include "sidmaf/dataset.hpp"

namespace sidmaf {

struct SyntheticConfig {
  std::size_t n_drivers = 100;
  std::size_t n_orders = 1000;
  GeoPoint center{50.0 + 5.284 / 60.0, 14.0 + 25.246 / 60.0};
  double spread_km = 2.5;  // per-axis std-dev of pickups, drop-offs and drivers
  Timestamp start_ts = 1433109600;  // 2015-06-01 00:00 Europe/Prague
  double mean_interarrival_s = 20.0;
  Timestamp trail_cadence_s = 20;

  double base_accept_rate = 0.7;  // sigmoid(mean driver offset)
  double propensity_sd = 1.0;     // std-dev of driver offsets (logit scale)
  std::vector<double> driver_offsets;  // overrides base/sd when non-empty
  double distance_decay = 1.5;    // per km

  std::size_t requests_per_order = 8;
  double timeout_share = 0.5;  // share of non-accepts recorded as timeouts
  double dropoff_prob = 0.9;
  double avg_speed_kmh = 24.0;
  // Per-tick random-walk std-dev. Drivers also drift toward the center just
  // enough that their stationary spread equals spread_km.
  double driver_step_km = 0.05;
  bool emit_trails = true;
};

/// Ground-truth acceptance probability of the generator.
double synthetic_accept_probability(double driver_offset, double pickup_km, double distance_decay);

/// Driver ids are "d000".."dNNN"; the i-th offset belongs to the i-th id.
struct SyntheticWorld {
  Dataset data;
  std::vector<DriverId> driver_ids;
  std::vector<double> driver_offsets;
};

SyntheticWorld generate_synthetic_world(const SyntheticConfig& config, std::uint64_t seed);
Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace sidmaf
