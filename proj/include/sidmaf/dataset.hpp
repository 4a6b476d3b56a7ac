#pragma once

// Canonical ride-order data model, file I/O and summary statistics.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sidmaf {

/// Raised for malformed input files and violated data invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using DriverId = std::string;
using Timestamp = std::int64_t;  // UTC epoch seconds

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p);

enum class DriverResponse { Accepted, Declined, TimedOut };

std::string_view to_string(DriverResponse r);
/// Parses "accept" | "decline" | "timeout"; anything else yields nullopt.
std::optional<DriverResponse> parse_response(std::string_view s);

struct DriverRequest {
  DriverId driver_id;
  GeoPoint driver_position;
  DriverResponse response = DriverResponse::Declined;

  friend bool operator==(const DriverRequest&, const DriverRequest&) = default;
};

struct RideOrder {
  std::string order_id;
  Timestamp timestamp = 0;
  GeoPoint pickup;
  std::optional<GeoPoint> dropoff;
  std::vector<DriverRequest> requests;
  bool completed = false;
  std::optional<DriverId> selected_driver;
  std::optional<std::string> customer_id;

  friend bool operator==(const RideOrder&, const RideOrder&) = default;
};

struct TrailSample {
  Timestamp timestamp = 0;
  GeoPoint position;

  friend bool operator==(const TrailSample&, const TrailSample&) = default;
};

struct DriverTrail {
  DriverId driver_id;
  std::vector<TrailSample> samples;  // strictly increasing timestamps

  friend bool operator==(const DriverTrail&, const DriverTrail&) = default;
};

struct Dataset {
  std::vector<RideOrder> orders;           // ascending by timestamp
  std::map<DriverId, DriverTrail> trails;  // empty when no trail file given

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks every per-order invariant. Throws DataError naming the order.
void validate_order(const RideOrder& order);

/// Checks the whole-dataset invariants (ordering, trail monotonicity,
/// dangling selected drivers when trails exist).
void validate_dataset(const Dataset& d);

/// Stable sort by timestamp, ties keep file order.
void sort_orders(std::vector<RideOrder>& orders);

// JSONL record <-> RideOrder. `where` is used as the error location prefix.
RideOrder parse_order_json(std::string_view line, const std::string& where, bool require_requests = true);
std::string order_to_json(const RideOrder& order);

Dataset load_dataset(const std::filesystem::path& orders_path,
                     const std::optional<std::filesystem::path>& trails_path = std::nullopt);

std::vector<RideOrder> load_orders(const std::filesystem::path& orders_path);
std::map<DriverId, DriverTrail> load_trails(const std::filesystem::path& trails_path);

void write_orders(const std::vector<RideOrder>& orders, const std::filesystem::path& path);
void write_trails(const std::map<DriverId, DriverTrail>& trails, const std::filesystem::path& path);
void write_dataset(const Dataset& d, const std::filesystem::path& orders_path,
                   const std::optional<std::filesystem::path>& trails_path = std::nullopt);

/// Converts a flat per-request CSV export (one row per order/driver pair) to
/// canonical orders. Columns, by header name:
///   order_id, ts, pickup_lat, pickup_lon, dropoff_lat, dropoff_lon,
///   driver_id, driver_lat, driver_lon, response, completed, selected_driver
/// plus an optional customer_id. Empty dropoff/selected cells mean absent.
/// `response` accepts accept|accepted|decline|declined|reject|rejected|
/// timeout|timedout|timed_out (case-insensitive). `completed` accepts
/// 1/0/true/false.
std::vector<RideOrder> import_flat_requests(const std::filesystem::path& csv_path);

struct SummaryStats {
  std::size_t orders = 0;
  std::size_t instances = 0;
  std::size_t accepts = 0;
  std::size_t declines = 0;
  std::size_t timeouts = 0;
  std::size_t rejects_timeouts = 0;
  std::size_t distinct_drivers = 0;
  std::optional<std::size_t> distinct_customers;  // only when ids are present
  std::size_t completed_orders = 0;
  double completed_fraction = 0.0;
  double accept_fraction = 0.0;          // accepts / instances
  double accept_to_reject_ratio = 0.0;   // accepts / (declines + timeouts)
  std::size_t trail_drivers = 0;
  std::size_t trail_samples = 0;
};

SummaryStats dataset_summary(const Dataset& d);

// CSV helpers shared by the text formats.
std::vector<std::string> split_csv_line(std::string_view line);
std::string format_double(double v);

}  // namespace sidmaf
