#pragma once

// Per-(order, driver) feature extraction: distances, local time, and the
// driver's historical accept rate.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sidmaf/dataset.hpp"

namespace sidmaf {

inline constexpr double kKmPerDegreeLat = 110.574;
inline constexpr double kKmPerDegreeLonEquator = 111.320;

/// Equirectangular planar distance in km.
double geo_distance_km(const GeoPoint& a, const GeoPoint& b);

/// N50°5.284' E14°25.246'.
GeoPoint prague_center();

/// Local civil time rule used for the hour/day features.
class TimeZone {
 public:
  enum class Rule { Fixed, CentralEuropean };

  static TimeZone utc() { return TimeZone(Rule::Fixed, 0); }
  static TimeZone fixed(int offset_seconds) { return TimeZone(Rule::Fixed, offset_seconds); }
  /// CET/CEST with EU daylight-saving switches (last Sunday of March and
  /// October, 01:00 UTC).
  static TimeZone europe_prague() { return TimeZone(Rule::CentralEuropean, 3600); }

  /// Accepts "Europe/Prague", "UTC" or a fixed offset "+HH:MM" / "-HH:MM".
  static TimeZone parse(std::string_view name);

  int offset_at(Timestamp utc) const;
  std::string name() const;

 private:
  TimeZone(Rule rule, int base_offset) : rule_(rule), base_offset_(base_offset) {}

  Rule rule_;
  int base_offset_;
};

struct LocalTime {
  int hour = 0;  // [0, 23]
  int day = 0;   // Monday = 0 ... Sunday = 6
};

LocalTime local_time(Timestamp utc, const TimeZone& tz);

inline constexpr std::size_t kNumFeatures = 7;
inline constexpr double kMissingDistance = -1.0;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "pickup_distance", "ride_distance", "pickup_center", "ride_center", "hour", "day", "mean_accept_rate"};

struct FeatureVector {
  double pickup_distance = 0.0;
  double ride_distance = kMissingDistance;
  double pickup_center = 0.0;
  double ride_center = kMissingDistance;
  int hour = 0;
  int day = 0;
  double mean_accept_rate = 0.0;

  std::array<double, kNumFeatures> to_array() const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct DriverHistory {
  DriverId driver_id;
  std::size_t accepts = 0;
  std::size_t total = 0;

  double rate() const { return total == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(total); }
};

/// Per-driver accept counts plus the pooled rate over the same scope, which
/// stands in for drivers absent from the scope.
struct Histories {
  std::unordered_map<DriverId, DriverHistory> by_driver;
  std::size_t accepts = 0;
  std::size_t total = 0;

  double global_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(total);
  }
  double rate_for(const DriverId& id) const;
  void add(const DriverId& id, DriverResponse response);
};

enum class HistoryScope { Full, TrainOnly };

HistoryScope parse_history_scope(std::string_view s);
std::string_view to_string(HistoryScope s);

/// Identifies one request instance: orders[order].requests[request].
struct InstanceRef {
  std::size_t order = 0;
  std::size_t request = 0;
};

/// Every request instance of the dataset, in order/request order.
std::vector<InstanceRef> all_instances(const Dataset& d);

Histories build_histories(const Dataset& d);
Histories build_histories(const Dataset& d, std::span<const InstanceRef> scope);

FeatureVector extract(const RideOrder& order, const DriverRequest& req, const Histories& histories,
                      const TimeZone& tz = TimeZone::europe_prague());

/// Row-major dense matrix of features with binary labels (1 = accepted).
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<double> values;  // rows * names.size()
  std::vector<int> labels;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return names.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  void append(std::span<const double> x, int label);
};

FeatureTable feature_table(const Dataset& d, std::span<const InstanceRef> instances, const Histories& histories,
                           const TimeZone& tz = TimeZone::europe_prague());

/// CSV with header `pickup_distance,...,mean_accept_rate,label`.
void write_feature_csv(const FeatureTable& t, const std::filesystem::path& path);
/// Reads any CSV whose last column is `label`; other columns become features.
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace sidmaf
