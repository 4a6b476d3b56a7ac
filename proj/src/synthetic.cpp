#include "sidmaf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "sidmaf/features.hpp"

namespace sidmaf {

double synthetic_accept_probability(double driver_offset, double pickup_km, double distance_decay) {
  return 1.0 / (1.0 + std::exp(-(driver_offset - distance_decay * pickup_km)));
}

namespace {

struct Planar {
  double x = 0.0;  // km east of center
  double y = 0.0;  // km north of center
};

struct DriverState {
  Planar pos;
  GeoPoint geo;
  bool busy = false;
  Timestamp busy_until = 0;
  Planar release_pos;
  bool sampled = false;
};

std::string padded_id(char prefix, std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(n > 0 ? n - 1 : 0).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

}  // namespace

SyntheticWorld generate_synthetic_world(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.n_drivers == 0) throw std::invalid_argument("generate_synthetic: zero drivers requested");
  if (cfg.n_orders == 0) throw std::invalid_argument("generate_synthetic: zero orders requested");
  if (cfg.requests_per_order == 0) throw std::invalid_argument("generate_synthetic: requests_per_order must be >= 1");
  if (cfg.trail_cadence_s <= 0) throw std::invalid_argument("generate_synthetic: trail cadence must be positive");
  if (!(cfg.avg_speed_kmh > 0.0)) throw std::invalid_argument("generate_synthetic: avg speed must be positive");
  if (!(cfg.base_accept_rate > 0.0 && cfg.base_accept_rate < 1.0))
    throw std::invalid_argument("generate_synthetic: base accept rate must be in (0, 1)");
  if (!cfg.driver_offsets.empty() && cfg.driver_offsets.size() != cfg.n_drivers)
    throw std::invalid_argument("generate_synthetic: driver_offsets size must equal n_drivers");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const double lon_scale = std::cos(cfg.center.lat * std::numbers::pi / 180.0) * kKmPerDegreeLonEquator;
  const auto to_geo = [&](const Planar& p) {
    return GeoPoint{cfg.center.lat + p.y / kKmPerDegreeLat, cfg.center.lon + p.x / lon_scale};
  };

  SyntheticWorld world;
  const double base_logit = std::log(cfg.base_accept_rate / (1.0 - cfg.base_accept_rate));
  std::vector<DriverState> drivers(cfg.n_drivers);
  for (std::size_t i = 0; i < cfg.n_drivers; ++i) {
    world.driver_ids.push_back(padded_id('d', i, cfg.n_drivers));
    world.driver_offsets.push_back(cfg.driver_offsets.empty() ? base_logit + cfg.propensity_sd * gauss(rng)
                                                              : cfg.driver_offsets[i]);
    drivers[i].pos = {cfg.spread_km * gauss(rng), cfg.spread_km * gauss(rng)};
  }

  std::vector<DriverTrail> trails(cfg.n_drivers);
  for (std::size_t i = 0; i < cfg.n_drivers; ++i) trails[i].driver_id = world.driver_ids[i];

  const double pull = cfg.spread_km > 0.0
                           ? std::min(1.0, cfg.driver_step_km * cfg.driver_step_km / (2.0 * cfg.spread_km * cfg.spread_km))
                           : 1.0;
  Timestamp next_tick = cfg.start_ts;
  const auto run_tick = [&](Timestamp tick) {
    for (std::size_t i = 0; i < cfg.n_drivers; ++i) {
      auto& d = drivers[i];
      if (d.busy) {
        if (d.busy_until > tick) continue;
        d.busy = false;
        d.pos = d.release_pos;
      } else if (d.sampled) {
        d.pos.x += cfg.driver_step_km * gauss(rng) - pull * d.pos.x;
        d.pos.y += cfg.driver_step_km * gauss(rng) - pull * d.pos.y;
      }
      d.geo = to_geo(d.pos);
      d.sampled = true;
      if (cfg.emit_trails) trails[i].samples.push_back({tick, d.geo});
    }
  };

  std::exponential_distribution<double> interarrival(1.0 / std::max(cfg.mean_interarrival_s, 1e-9));
  double clock = static_cast<double>(cfg.start_ts);
  Timestamp last_ts = cfg.start_ts;
  std::vector<std::size_t> free_idx;
  std::vector<std::pair<double, std::size_t>> by_distance;
  const std::size_t max_attempts = cfg.n_orders * 100 + 1000;
  std::size_t attempts = 0;

  auto& orders = world.data.orders;
  while (orders.size() < cfg.n_orders) {
    if (++attempts > max_attempts)
      throw std::runtime_error("generate_synthetic: could not place orders (no free drivers)");
    clock += interarrival(rng);
    const Timestamp ts = std::max(last_ts + 1, static_cast<Timestamp>(std::ceil(clock)));
    last_ts = ts;
    while (next_tick <= ts) {
      run_tick(next_tick);
      next_tick += cfg.trail_cadence_s;
    }

    RideOrder o;
    o.timestamp = ts;
    const Planar pickup{cfg.spread_km * gauss(rng), cfg.spread_km * gauss(rng)};
    o.pickup = to_geo(pickup);
    const bool has_dropoff = unif(rng) < cfg.dropoff_prob;
    const Planar dest{cfg.spread_km * gauss(rng), cfg.spread_km * gauss(rng)};
    if (has_dropoff) o.dropoff = to_geo(dest);

    free_idx.clear();
    for (std::size_t i = 0; i < cfg.n_drivers; ++i)
      if (!drivers[i].busy && drivers[i].sampled) free_idx.push_back(i);
    if (free_idx.empty()) continue;

    by_distance.clear();
    for (auto i : free_idx) by_distance.emplace_back(geo_distance_km(drivers[i].geo, o.pickup), i);
    const std::size_t m = std::min(cfg.requests_per_order, by_distance.size());
    std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(m), by_distance.end());

    std::vector<std::size_t> accepters;
    for (std::size_t j = 0; j < m; ++j) {
      const auto [dist, i] = by_distance[j];
      DriverRequest r;
      r.driver_id = world.driver_ids[i];
      r.driver_position = drivers[i].geo;
      const double p = synthetic_accept_probability(world.driver_offsets[i], dist, cfg.distance_decay);
      if (unif(rng) < p) {
        r.response = DriverResponse::Accepted;
        accepters.push_back(i);
      } else {
        r.response = unif(rng) < cfg.timeout_share ? DriverResponse::TimedOut : DriverResponse::Declined;
      }
      o.requests.push_back(std::move(r));
    }

    if (!accepters.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, accepters.size() - 1);
      const std::size_t chosen = accepters[pick(rng)];
      o.completed = true;
      o.selected_driver = world.driver_ids[chosen];
      const double ride_km = geo_distance_km(o.pickup, to_geo(dest));
      auto& d = drivers[chosen];
      d.busy = true;
      d.busy_until = ts + static_cast<Timestamp>(std::ceil(ride_km / cfg.avg_speed_kmh * 3600.0));
      d.release_pos = dest;
    }
    o.order_id = padded_id('o', orders.size(), cfg.n_orders);
    orders.push_back(std::move(o));
  }

  // Keep sampling until every ride has ended so the last rides are measurable.
  Timestamp horizon = next_tick;
  for (const auto& d : drivers)
    if (d.busy) horizon = std::max(horizon, d.busy_until);
  while (next_tick <= horizon) {
    run_tick(next_tick);
    next_tick += cfg.trail_cadence_s;
  }

  if (cfg.emit_trails) {
    for (auto& t : trails) {
      if (!t.samples.empty()) world.data.trails.emplace(t.driver_id, std::move(t));
    }
  }
  return world;
}

Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  return generate_synthetic_world(config, seed).data;
}

}  // namespace sidmaf
