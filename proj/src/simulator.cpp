#include "sidmaf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace sidmaf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// First sample with timestamp > t.
auto upper(const DriverTrail& trail, Timestamp t) {
  return std::upper_bound(trail.samples.begin(), trail.samples.end(), t,
                          [](Timestamp v, const TrailSample& s) { return v < s.timestamp; });
}

}  // namespace

std::string policy_name(const MarketFormationPolicy& policy) {
  return std::visit(overloaded{
                        [](const SidmafPolicy& p) {
                          return "sidmaf(k=" + std::to_string(p.k) + ",p_T=" + format_double(p.p_target) + ")";
                        },
                        [](const ReplayBaselinePolicy&) { return std::string("replay"); },
                        [](const DistanceBaselinePolicy& p) { return "distance(m=" + std::to_string(p.m) + ")"; },
                    },
                    policy);
}

std::optional<GeoPoint> driver_position_at(const DriverTrail& trail, Timestamp t, Timestamp staleness_s) {
  auto it = upper(trail, t);
  if (it == trail.samples.begin()) return std::nullopt;
  --it;
  if (t - it->timestamp > staleness_s) return std::nullopt;
  return it->position;
}

std::optional<double> measured_ride_duration(const RideOrder& order, const DriverTrail& trail,
                                             Timestamp staleness_s) {
  auto next = upper(trail, order.timestamp);
  if (next == trail.samples.begin() || next == trail.samples.end()) return std::nullopt;
  const auto& prev = *(next - 1);
  if (order.timestamp - prev.timestamp > staleness_s) return std::nullopt;
  if (next->timestamp - prev.timestamp <= staleness_s) return std::nullopt;
  return static_cast<double>(next->timestamp - order.timestamp);
}

SpeedEstimate estimate_avg_speed(const Dataset& d, Timestamp staleness_s, double fallback_kmh) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : d.orders) {
    if (!o.completed || !o.dropoff || !o.selected_driver) continue;
    auto it = d.trails.find(*o.selected_driver);
    if (it == d.trails.end()) continue;
    const auto secs = measured_ride_duration(o, it->second, staleness_s);
    if (!secs || *secs <= 0.0) continue;
    sum += geo_distance_km(o.pickup, *o.dropoff) / (*secs / 3600.0);
    ++n;
  }
  if (n == 0) return {fallback_kmh, 0, true};
  return {sum / static_cast<double>(n), n, false};
}

PolicyDecision replay_baseline_decision(const RideOrder& order) {
  PolicyDecision d;
  d.order_id = order.order_id;
  d.timestamp = order.timestamp;
  for (const auto& r : order.requests) {
    d.selected_driver_ids.push_back(r.driver_id);
    d.per_driver_accept_prob.push_back(r.response == DriverResponse::Accepted ? 1.0 : 0.0);
  }
  d.chosen_offer = order.selected_driver;
  d.pool_size = order.requests.size();
  return d;
}

std::size_t completed_order_count(const Dataset& d) {
  return static_cast<std::size_t>(
      std::count_if(d.orders.begin(), d.orders.end(), [](const RideOrder& o) { return o.completed; }));
}

bool busy_intervals_disjoint(const SimulationTrace& trace) {
  std::map<DriverId, std::vector<std::pair<Timestamp, Timestamp>>> intervals;
  for (const auto& dec : trace.decisions)
    if (dec.assigned && dec.chosen_offer) intervals[*dec.chosen_offer].emplace_back(dec.timestamp, dec.busy_until);
  for (auto& [id, iv] : intervals) {
    std::sort(iv.begin(), iv.end());
    for (std::size_t i = 1; i < iv.size(); ++i)
      if (iv[i].first < iv[i - 1].second) return false;
  }
  return true;
}

SimulationTrace run_simulation(const Dataset& d, const MarketFormationPolicy& policy, const SimulationConfig& cfg) {
  if (cfg.staleness_s < 0) throw std::invalid_argument("staleness window must be >= 0");
  if (!(cfg.fallback_speed_kmh > 0.0)) throw std::invalid_argument("fallback speed must be > 0");

  SimulationTrace trace;
  trace.policy_name = policy_name(policy);
  trace.seed = cfg.seed;
  trace.config.staleness_s = cfg.staleness_s;
  trace.config.fallback_speed_kmh = cfg.fallback_speed_kmh;
  trace.config.timezone = cfg.tz.name();
  std::visit(overloaded{
                 [&](const SidmafPolicy& p) {
                   if (p.model == nullptr) throw std::invalid_argument("sidmaf policy needs a model");
                   if (p.model->n_features() != kNumFeatures)
                     throw std::invalid_argument("model/feature mismatch: model has " +
                                                 std::to_string(p.model->n_features()) + " features");
                   if (p.k < 1) throw std::invalid_argument("k must be >= 1");
                   if (!(p.p_target > 0.0 && p.p_target < 1.0))
                     throw std::invalid_argument("p_target must be in (0, 1)");
                   trace.config.policy = "sidmaf";
                   trace.config.k = p.k;
                   trace.config.p_target = p.p_target;
                 },
                 [&](const ReplayBaselinePolicy&) { trace.config.policy = "replay"; },
                 [&](const DistanceBaselinePolicy& p) {
                   if (p.model == nullptr) throw std::invalid_argument("distance policy needs a model for scoring");
                   if (p.model->n_features() != kNumFeatures)
                     throw std::invalid_argument("model/feature mismatch: model has " +
                                                 std::to_string(p.model->n_features()) + " features");
                   if (p.m < 1) throw std::invalid_argument("m must be >= 1");
                   trace.config.policy = "distance";
                   trace.config.m = p.m;
                 },
             },
             policy);

  const auto speed = estimate_avg_speed(d, cfg.staleness_s, cfg.fallback_speed_kmh);
  trace.avg_speed_kmh = speed.kmh;
  trace.avg_speed_fallback = speed.fallback;
  trace.rides_measured = speed.rides_used;

  // Orders without a drop-off ride the mean observed distance.
  double ride_sum = 0.0;
  std::size_t ride_n = 0;
  for (const auto& o : d.orders) {
    if (o.completed && o.dropoff) {
      ride_sum += geo_distance_km(o.pickup, *o.dropoff);
      ++ride_n;
    }
  }
  const double default_ride_km = ride_n ? ride_sum / static_cast<double>(ride_n) : 0.0;

  const Histories histories = build_histories(d);
  std::vector<const DriverTrail*> trails;
  std::map<DriverId, std::size_t> index;
  for (const auto& [id, t] : d.trails) {
    index.emplace(id, trails.size());
    trails.push_back(&t);
  }
  std::map<DriverId, Timestamp> busy_until;
  const auto is_busy = [&](const DriverId& id, Timestamp now) {
    auto it = busy_until.find(id);
    return it != busy_until.end() && it->second > now;
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<PoolEntry> pool;

  for (const auto& order : d.orders) {
    if (!order.completed) continue;
    PolicyDecision dec;
    const bool replay = std::holds_alternative<ReplayBaselinePolicy>(policy);

    if (replay) {
      dec = replay_baseline_decision(order);
    } else {
      dec.order_id = order.order_id;
      dec.timestamp = order.timestamp;
      pool.clear();
      for (const auto* t : trails) {
        if (is_busy(t->driver_id, order.timestamp)) continue;
        if (auto pos = driver_position_at(*t, order.timestamp, cfg.staleness_s)) pool.push_back({t->driver_id, *pos});
      }
      dec.pool_size = pool.size();

      if (const auto* sp = std::get_if<SidmafPolicy>(&policy)) {
        auto candidates = score_candidates(*sp->model, order, pool, histories, cfg.tz);
        auto sel = select_drivers(std::move(candidates), sp->k, sp->p_target);
        for (const auto& c : sel.selected) {
          dec.selected_driver_ids.push_back(c.driver_id);
          dec.per_driver_accept_prob.push_back(c.accept_prob);
        }
        dec.achieved = sel.achieved;
        dec.satisfied = sel.satisfied;
      } else {
        const auto& dp = std::get<DistanceBaselinePolicy>(policy);
        std::vector<std::pair<double, std::size_t>> by_distance;
        for (std::size_t i = 0; i < pool.size(); ++i)
          by_distance.emplace_back(geo_distance_km(pool[i].position, order.pickup), i);
        // Pool is in driver-id order, so the index tie-break is by id.
        std::sort(by_distance.begin(), by_distance.end());
        std::vector<PoolEntry> nearest;
        for (std::size_t j = 0; j < std::min(dp.m, by_distance.size()); ++j) nearest.push_back(pool[by_distance[j].second]);
        const auto scored = score_candidates(*dp.model, order, nearest, histories, cfg.tz);
        for (const auto& c : scored) {
          dec.selected_driver_ids.push_back(c.driver_id);
          dec.per_driver_accept_prob.push_back(c.accept_prob);
        }
      }

      if (!dec.selected_driver_ids.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, dec.selected_driver_ids.size() - 1);
        dec.chosen_offer = dec.selected_driver_ids[pick(rng)];
      }
    }

    if (dec.chosen_offer && !is_busy(*dec.chosen_offer, order.timestamp)) {
      const double ride_km = order.dropoff ? geo_distance_km(order.pickup, *order.dropoff) : default_ride_km;
      const auto secs = static_cast<Timestamp>(std::ceil(ride_km / trace.avg_speed_kmh * 3600.0));
      dec.assigned = true;
      dec.busy_until = order.timestamp + secs;
      busy_until[*dec.chosen_offer] = dec.busy_until;
    }
    trace.decisions.push_back(std::move(dec));
  }

  if (trace.decisions.size() != completed_order_count(d))
    throw std::logic_error("simulation: decision count differs from completed-order count");
  if (!busy_intervals_disjoint(trace)) throw std::logic_error("simulation: overlapping busy intervals");
  return trace;
}

// ---------------------------------------------------------------------------
// Trace files

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json header_json(const SimulationTrace& t) {
  ordered_json cfg;
  cfg["policy"] = t.config.policy;
  if (t.config.policy == "sidmaf") {
    cfg["k"] = t.config.k;
    cfg["p_target"] = t.config.p_target;
  }
  if (t.config.policy == "distance") cfg["m"] = t.config.m;
  cfg["staleness_s"] = t.config.staleness_s;
  cfg["fallback_speed_kmh"] = t.config.fallback_speed_kmh;
  cfg["timezone"] = t.config.timezone;
  cfg["history_scope"] = "full";

  ordered_json h;
  h["record"] = "header";
  h["policy_name"] = t.policy_name;
  h["config"] = std::move(cfg);
  h["seed"] = t.seed;
  h["avg_speed_kmh"] = t.avg_speed_kmh;
  h["avg_speed_fallback"] = t.avg_speed_fallback;
  h["rides_measured"] = t.rides_measured;
  h["n_decisions"] = t.decisions.size();
  return h;
}

ordered_json decision_json(const PolicyDecision& d) {
  ordered_json j;
  j["record"] = "decision";
  j["order_id"] = d.order_id;
  j["ts"] = d.timestamp;
  j["selected"] = d.selected_driver_ids;
  j["probs"] = d.per_driver_accept_prob;
  j["chosen"] = d.chosen_offer ? ordered_json(*d.chosen_offer) : ordered_json(nullptr);
  j["assigned"] = d.assigned;
  j["busy_until"] = d.assigned ? ordered_json(d.busy_until) : ordered_json(nullptr);
  j["pool_size"] = d.pool_size;
  j["achieved"] = d.achieved ? ordered_json(*d.achieved) : ordered_json(nullptr);
  j["satisfied"] = d.satisfied ? ordered_json(*d.satisfied) : ordered_json(nullptr);
  return j;
}

}  // namespace

void write_trace(const SimulationTrace& trace, const std::filesystem::path& path, const std::string& provenance_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  auto header = header_json(trace);
  if (!provenance_json.empty()) header["provenance"] = ordered_json::parse(provenance_json);
  out << header.dump() << '\n';
  for (const auto& d : trace.decisions) out << decision_json(d).dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

SimulationTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  SimulationTrace t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = ordered_json::parse(line);
      const auto rec = j.at("record").get<std::string>();
      if (rec == "header") {
        if (have_header) throw DataError(where + ": duplicate header");
        have_header = true;
        t.policy_name = j.at("policy_name").get<std::string>();
        const auto& c = j.at("config");
        t.config.policy = c.at("policy").get<std::string>();
        t.config.k = c.value("k", std::size_t{0});
        t.config.p_target = c.value("p_target", 0.0);
        t.config.m = c.value("m", std::size_t{0});
        t.config.staleness_s = c.at("staleness_s").get<Timestamp>();
        t.config.fallback_speed_kmh = c.at("fallback_speed_kmh").get<double>();
        t.config.timezone = c.at("timezone").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.avg_speed_kmh = j.at("avg_speed_kmh").get<double>();
        t.avg_speed_fallback = j.at("avg_speed_fallback").get<bool>();
        t.rides_measured = j.at("rides_measured").get<std::size_t>();
      } else if (rec == "decision") {
        if (!have_header) throw DataError(where + ": decision before header");
        PolicyDecision d;
        d.order_id = j.at("order_id").get<std::string>();
        d.timestamp = j.at("ts").get<Timestamp>();
        d.selected_driver_ids = j.at("selected").get<std::vector<DriverId>>();
        d.per_driver_accept_prob = j.at("probs").get<std::vector<double>>();
        if (d.selected_driver_ids.size() != d.per_driver_accept_prob.size())
          throw DataError(where + ": selected/probs length mismatch");
        for (double p : d.per_driver_accept_prob)
          if (!(p >= 0.0 && p <= 1.0)) throw DataError(where + ": probability outside [0, 1]");
        if (!j.at("chosen").is_null()) d.chosen_offer = j.at("chosen").get<DriverId>();
        d.assigned = j.at("assigned").get<bool>();
        if (!j.at("busy_until").is_null()) d.busy_until = j.at("busy_until").get<Timestamp>();
        d.pool_size = j.at("pool_size").get<std::size_t>();
        if (!j.at("achieved").is_null()) d.achieved = j.at("achieved").get<double>();
        if (!j.at("satisfied").is_null()) d.satisfied = j.at("satisfied").get<bool>();
        t.decisions.push_back(std::move(d));
      } else {
        throw DataError(where + ": unknown record type '" + rec + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (!have_header) throw DataError(path.string() + ": missing trace header");
  return t;
}

}  // namespace sidmaf
