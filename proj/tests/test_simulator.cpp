#include <gtest/gtest.h>

#include <cmath>

#include "sidmaf/kpi.hpp"
#include "sidmaf/simulator.hpp"
#include "sidmaf/synthetic.hpp"
#include "test_util.hpp"

using namespace sidmaf;

namespace {

const std::filesystem::path kMicro = std::filesystem::path(SIDMAF_FIXTURES) / "micro";

DriverTrail steady_trail(const DriverId& id, GeoPoint pos, Timestamp from, Timestamp to, Timestamp step = 20) {
  DriverTrail t{id, {}};
  for (Timestamp ts = from; ts <= to; ts += step) t.samples.push_back({ts, pos});
  return t;
}

// Every driver accepts with 0.9 when within 1 km, else 0.2.
Forest near_far_model() {
  Forest f;
  f.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  f.feature_importances.assign(kNumFeatures, 0.0);
  f.feature_importances[0] = 1.0;
  Tree t;
  t.nodes = {TreeNode{0, 1.0, 1, 2, 0, 0}, TreeNode{-1, 0, -1, -1, 1, 9}, TreeNode{-1, 0, -1, -1, 8, 2}};
  f.trees.push_back(t);
  return f;
}

RideOrder completed_order(const std::string& id, Timestamp ts, GeoPoint pickup, GeoPoint dropoff, const DriverId& who) {
  RideOrder o;
  o.order_id = id;
  o.timestamp = ts;
  o.pickup = pickup;
  o.dropoff = dropoff;
  o.requests = {{who, pickup, DriverResponse::Accepted}};
  o.completed = true;
  o.selected_driver = who;
  return o;
}

}  // namespace

TEST(DriverPosition, LastObservationCarriedForward) {
  const auto t = steady_trail("A", {50, 14}, 1000, 1100);
  EXPECT_EQ(driver_position_at(t, 1020), (GeoPoint{50, 14}));
  EXPECT_EQ(driver_position_at(t, 1030), (GeoPoint{50, 14}));
  EXPECT_FALSE(driver_position_at(t, 999).has_value());
  EXPECT_FALSE(driver_position_at(t, 1100 + 600).has_value());
  EXPECT_TRUE(driver_position_at(t, 1160).has_value());
  EXPECT_FALSE(driver_position_at(t, 1161).has_value());
}

TEST(DriverPosition, ExactSampleWins) {
  DriverTrail t{"A", {{100, {50, 14}}, {120, {50.1, 14.1}}}};
  EXPECT_EQ(driver_position_at(t, 120), (GeoPoint{50.1, 14.1}));
  EXPECT_EQ(driver_position_at(t, 119), (GeoPoint{50, 14}));
}

TEST(AvgSpeed, SingleRideFromTrailGap) {
  Dataset d;
  // 5 km due north.
  const double dlat = 5.0 / kKmPerDegreeLat;
  d.orders.push_back(completed_order("r", 1000, {50, 14}, {50 + dlat, 14}, "A"));
  d.trails["A"] = DriverTrail{"A", {{990, {50, 14}}, {1000 + 900, {50 + dlat, 14}}}};
  const auto s = estimate_avg_speed(d);
  EXPECT_FALSE(s.fallback);
  EXPECT_EQ(s.rides_used, 1u);
  EXPECT_NEAR(s.kmh, 20.0, 1e-9);
}

TEST(AvgSpeed, MeanOfRides) {
  Dataset d;
  const double dlat = 5.0 / kKmPerDegreeLat;
  d.orders.push_back(completed_order("r1", 1000, {50, 14}, {50 + dlat, 14}, "A"));
  d.orders.push_back(completed_order("r2", 5000, {50, 14}, {50 + dlat, 14}, "B"));
  d.trails["A"] = DriverTrail{"A", {{1000, {50, 14}}, {1900, {50 + dlat, 14}}}};
  d.trails["B"] = DriverTrail{"B", {{4980, {50, 14}}, {5450, {50 + dlat, 14}}}};
  const auto s = estimate_avg_speed(d);
  EXPECT_EQ(s.rides_used, 2u);
  EXPECT_NEAR(s.kmh, 30.0, 1e-9);
}

TEST(AvgSpeed, FallbackWhenNothingMeasurable) {
  Dataset d;
  d.orders.push_back(completed_order("r", 1000, {50, 14}, {50.01, 14}, "A"));
  d.trails["A"] = steady_trail("A", {50, 14}, 0, 5000);
  const auto s = estimate_avg_speed(d, 60, 24.0);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.kmh, 24.0);
}

TEST(ReplayDecision, DirectMapping) {
  RideOrder o;
  o.order_id = "x";
  const DriverResponse pattern[7] = {DriverResponse::Declined, DriverResponse::Accepted, DriverResponse::TimedOut,
                                     DriverResponse::Accepted, DriverResponse::Declined, DriverResponse::Accepted,
                                     DriverResponse::TimedOut};
  for (int i = 0; i < 7; ++i) o.requests.push_back({"d" + std::to_string(i), {}, pattern[i]});
  o.completed = true;
  o.selected_driver = "d3";
  const auto d = replay_baseline_decision(o);
  EXPECT_EQ(d.selected_driver_ids.size(), 7u);
  EXPECT_EQ(d.per_driver_accept_prob, (std::vector<double>{0, 1, 0, 1, 0, 1, 0}));
  EXPECT_EQ(d.chosen_offer, "d3");
}

TEST(RunSimulation, OneOrderOneDriver) {
  Dataset d;
  d.orders.push_back(completed_order("o", 1000, {50, 14}, {50.05, 14}, "A"));
  d.trails["A"] = steady_trail("A", {50, 14}, 900, 2000);
  const auto f = near_far_model();
  const auto t = run_simulation(d, SidmafPolicy{&f, 1, 0.8}, SimulationConfig{});
  ASSERT_EQ(t.decisions.size(), 1u);
  const auto& dec = t.decisions[0];
  EXPECT_EQ(dec.selected_driver_ids, std::vector<DriverId>{"A"});
  EXPECT_EQ(dec.chosen_offer, "A");
  EXPECT_TRUE(dec.assigned);
  const double km = geo_distance_km({50, 14}, {50.05, 14});
  EXPECT_EQ(dec.busy_until, 1000 + static_cast<Timestamp>(std::ceil(km / 24.0 * 3600.0)));
  EXPECT_EQ(dec.pool_size, 1u);
}

TEST(RunSimulation, BusyDriverLeavesPool) {
  Dataset d;
  d.orders.push_back(completed_order("o1", 1000, {50, 14}, {50.05, 14}, "A"));
  d.orders.push_back(completed_order("o2", 1060, {50, 14}, {50.05, 14}, "A"));
  d.trails["A"] = steady_trail("A", {50, 14}, 900, 3000);
  const auto f = near_far_model();
  for (const MarketFormationPolicy& p : {MarketFormationPolicy{SidmafPolicy{&f, 1, 0.8}},
                                         MarketFormationPolicy{DistanceBaselinePolicy{8, &f}}}) {
    const auto t = run_simulation(d, p, SimulationConfig{});
    ASSERT_EQ(t.decisions.size(), 2u);
    EXPECT_TRUE(t.decisions[0].assigned);
    EXPECT_TRUE(t.decisions[1].selected_driver_ids.empty());
    EXPECT_EQ(t.decisions[1].pool_size, 0u);
    EXPECT_FALSE(t.decisions[1].chosen_offer.has_value());
    EXPECT_TRUE(busy_intervals_disjoint(t));
  }
}

TEST(RunSimulation, ReplayChoiceOfBusyDriverStaysUnassigned) {
  Dataset d;
  d.orders.push_back(completed_order("o1", 1000, {50, 14}, {50.05, 14}, "A"));
  d.orders.push_back(completed_order("o2", 1060, {50, 14}, {50.05, 14}, "A"));
  d.trails["A"] = steady_trail("A", {50, 14}, 900, 3000);
  const auto t = run_simulation(d, ReplayBaselinePolicy{}, SimulationConfig{});
  EXPECT_TRUE(t.decisions[0].assigned);
  EXPECT_FALSE(t.decisions[1].assigned);
  EXPECT_EQ(t.decisions[1].chosen_offer, "A");
  EXPECT_TRUE(busy_intervals_disjoint(t));
}

TEST(RunSimulation, SkipsIncompleteOrders) {
  Dataset d;
  d.orders.push_back(completed_order("o1", 1000, {50, 14}, {50.05, 14}, "A"));
  RideOrder lost = completed_order("o2", 1100, {50, 14}, {50.05, 14}, "A");
  lost.completed = false;
  lost.selected_driver.reset();
  lost.requests[0].response = DriverResponse::Declined;
  d.orders.push_back(lost);
  d.trails["A"] = steady_trail("A", {50, 14}, 900, 3000);
  const auto t = run_simulation(d, ReplayBaselinePolicy{}, SimulationConfig{});
  EXPECT_EQ(t.decisions.size(), completed_order_count(d));
  EXPECT_EQ(t.decisions.size(), 1u);
}

TEST(RunSimulation, StaleDriversExcluded) {
  Dataset d;
  d.orders.push_back(completed_order("o", 1000, {50, 14}, {50.05, 14}, "A"));
  d.trails["A"] = steady_trail("A", {50, 14}, 0, 900);  // last seen 100 s earlier
  d.trails["B"] = steady_trail("B", {50.1, 14}, 0, 2000);
  const auto f = near_far_model();
  const auto t = run_simulation(d, SidmafPolicy{&f, 1, 0.5}, SimulationConfig{});
  EXPECT_EQ(t.decisions[0].selected_driver_ids, std::vector<DriverId>{"B"});
  SimulationConfig loose;
  loose.staleness_s = 120;
  EXPECT_EQ(run_simulation(d, SidmafPolicy{&f, 1, 0.5}, loose).decisions[0].selected_driver_ids.front(), "A");
}

TEST(RunSimulation, DistancePolicyTakesNearestM) {
  Dataset d;
  d.orders.push_back(completed_order("o", 1000, {50, 14}, {50.05, 14}, "A"));
  for (int i = 0; i < 5; ++i) {
    const std::string id = "d" + std::to_string(i);
    d.trails[id] = steady_trail(id, {50 + 0.01 * (5 - i), 14}, 900, 1100);
  }
  d.trails["A"] = steady_trail("A", {50, 14}, 900, 1100);
  const auto f = near_far_model();
  const auto t = run_simulation(d, DistanceBaselinePolicy{3, &f}, SimulationConfig{});
  EXPECT_EQ(t.decisions[0].selected_driver_ids, (std::vector<DriverId>{"A", "d4", "d3"}));
  EXPECT_EQ(t.decisions[0].per_driver_accept_prob, (std::vector<double>{0.9, 0.2, 0.2}));
  EXPECT_EQ(t.decisions[0].pool_size, 6u);
}

TEST(RunSimulation, RejectsBadPolicies) {
  Dataset d;
  Forest wrong = near_far_model();
  wrong.feature_names.pop_back();
  EXPECT_THROW(run_simulation(d, SidmafPolicy{nullptr, 1, 0.9}, SimulationConfig{}), std::invalid_argument);
  EXPECT_THROW(run_simulation(d, SidmafPolicy{&wrong, 1, 0.9}, SimulationConfig{}), std::invalid_argument);
  EXPECT_THROW(run_simulation(d, DistanceBaselinePolicy{8, &wrong}, SimulationConfig{}), std::invalid_argument);
}

TEST(RunSimulation, DeterministicAndSafeOnSynthetic) {
  SyntheticConfig cfg;
  cfg.n_drivers = 30;
  cfg.n_orders = 400;
  const auto d = generate_synthetic(cfg, 3);
  const auto f = near_far_model();
  SimulationConfig sc;
  sc.seed = 17;
  TempDir dir;
  const auto a = run_simulation(d, SidmafPolicy{&f, 2, 0.9}, sc);
  const auto b = run_simulation(d, SidmafPolicy{&f, 2, 0.9}, sc);
  EXPECT_EQ(a, b);
  write_trace(a, dir / "a.jsonl");
  write_trace(b, dir / "b.jsonl");
  EXPECT_EQ(read_text(dir / "a.jsonl"), read_text(dir / "b.jsonl"));
  EXPECT_EQ(a.decisions.size(), completed_order_count(d));
  EXPECT_TRUE(busy_intervals_disjoint(a));
  for (const auto& dec : a.decisions) {
    EXPECT_EQ(dec.selected_driver_ids.size(), dec.per_driver_accept_prob.size());
    if (!dec.selected_driver_ids.empty()) {
      ASSERT_TRUE(dec.chosen_offer.has_value());
      EXPECT_NE(std::find(dec.selected_driver_ids.begin(), dec.selected_driver_ids.end(), *dec.chosen_offer),
                dec.selected_driver_ids.end());
    }
  }
}

TEST(RunSimulation, PoolDriversFreshAndFree) {
  SyntheticConfig cfg;
  cfg.n_drivers = 25;
  cfg.n_orders = 300;
  const auto d = generate_synthetic(cfg, 8);
  const auto f = near_far_model();
  const auto t = run_simulation(d, SidmafPolicy{&f, 1, 0.95}, SimulationConfig{});
  std::map<DriverId, Timestamp> busy;
  for (const auto& dec : t.decisions) {
    for (const auto& id : dec.selected_driver_ids) {
      EXPECT_TRUE(driver_position_at(d.trails.at(id), dec.timestamp, 60).has_value());
      EXPECT_FALSE(busy.contains(id) && busy[id] > dec.timestamp) << id << " at " << dec.timestamp;
    }
    if (dec.assigned) busy[*dec.chosen_offer] = dec.busy_until;
  }
}

TEST(Trace, RoundTripWithProvenance) {
  SyntheticConfig cfg;
  cfg.n_drivers = 10;
  cfg.n_orders = 50;
  const auto d = generate_synthetic(cfg, 1);
  const auto f = near_far_model();
  const auto t = run_simulation(d, SidmafPolicy{&f, 3, 0.9}, SimulationConfig{});
  TempDir dir;
  write_trace(t, dir / "t.jsonl", R"({"tool":"x"})");
  const auto back = read_trace(dir / "t.jsonl");
  EXPECT_EQ(back, t);
  EXPECT_EQ(back.config.k, 3u);
  EXPECT_EQ(back.config.p_target, 0.9);
}

TEST(Trace, RejectsMalformed) {
  TempDir dir;
  write_text(dir / "t.jsonl", R"({"record":"decision"})" "\n");
  EXPECT_THROW(read_trace(dir / "t.jsonl"), DataError);
  write_text(dir / "e.jsonl", "");
  EXPECT_THROW(read_trace(dir / "e.jsonl"), DataError);
}

TEST(MicroFixture, LoadsAndReplaysWithoutSpeedMeasurement) {
  const auto d = load_dataset(kMicro / "orders.jsonl", kMicro / "trails.csv");
  ASSERT_EQ(d.orders.size(), 4u);
  const auto s = estimate_avg_speed(d);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.kmh, 24.0);
  const auto model = load_forest(kMicro / "model.json");
  const auto t = run_simulation(d, SidmafPolicy{&model, 1, 0.9}, SimulationConfig{});
  EXPECT_EQ(t.decisions[3].selected_driver_ids, (std::vector<DriverId>{"B", "C"}));
  EXPECT_EQ(t.decisions[2].busy_until, 1433152800 + 1000 + 1784);
}
