#include "sidmaf/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace sidmaf {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

std::string_view to_string(DriverResponse r) {
  switch (r) {
    case DriverResponse::Accepted:
      return "accept";
    case DriverResponse::Declined:
      return "decline";
    case DriverResponse::TimedOut:
      return "timeout";
  }
  return "decline";
}

std::optional<DriverResponse> parse_response(std::string_view s) {
  if (s == "accept") return DriverResponse::Accepted;
  if (s == "decline") return DriverResponse::Declined;
  if (s == "timeout") return DriverResponse::TimedOut;
  return std::nullopt;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& field, const std::string& what) {
  throw DataError(where + ": field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& where, const std::string& prefix) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, prefix + key, "missing");
  return *it;
}

double parse_coord(const json& v, const std::string& where, const std::string& field, double lo, double hi) {
  if (!v.is_number()) fail(where, field, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x) || x < lo || x > hi) {
    std::ostringstream os;
    os << "value " << format_double(x) << " outside [" << lo << ", " << hi << "]";
    fail(where, field, os.str());
  }
  return x;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where,
                const std::string& prefix) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      fail(where, prefix + it.key(), "unknown field");
  }
}

GeoPoint parse_point(const json& v, const std::string& where, const std::string& field) {
  if (!v.is_object()) fail(where, field, "expected an object {lat, lon}");
  check_keys(v, {"lat", "lon"}, where, field + ".");
  GeoPoint p;
  p.lat = parse_coord(require(v, "lat", where, field + "."), where, field + ".lat", -90.0, 90.0);
  p.lon = parse_coord(require(v, "lon", where, field + "."), where, field + ".lon", -180.0, 180.0);
  return p;
}

std::string parse_id(const json& v, const std::string& where, const std::string& field) {
  if (!v.is_string()) fail(where, field, "expected a string");
  auto s = v.get<std::string>();
  if (s.empty()) fail(where, field, "must be non-empty");
  return s;
}

ordered_json point_json(const GeoPoint& p) {
  ordered_json j;
  j["lat"] = p.lat;
  j["lon"] = p.lon;
  return j;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

void validate_order(const RideOrder& o) {
  const std::string where = "order '" + o.order_id + "'";
  if (o.order_id.empty()) throw DataError("order with empty order_id");
  if (!is_valid(o.pickup)) fail(where, "pickup", "invalid coordinates");
  if (o.dropoff && !is_valid(*o.dropoff)) fail(where, "dropoff", "invalid coordinates");
  if (o.requests.empty()) fail(where, "requests", "must be non-empty");
  for (const auto& r : o.requests) {
    if (r.driver_id.empty()) fail(where, "requests.driver_id", "must be non-empty");
    if (!is_valid(r.driver_position)) fail(where, "requests.pos", "invalid coordinates");
  }
  if (o.completed) {
    if (!o.selected_driver) fail(where, "selected_driver", "completed order needs a selected driver");
    bool found = std::any_of(o.requests.begin(), o.requests.end(), [&](const DriverRequest& r) {
      return r.driver_id == *o.selected_driver && r.response == DriverResponse::Accepted;
    });
    if (!found) fail(where, "selected_driver", "'" + *o.selected_driver + "' has no accepted request");
  }
}

RideOrder parse_order_json(std::string_view line, const std::string& where, bool require_requests) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError(where + ": expected a JSON object");
  check_keys(j, {"order_id", "ts", "pickup", "dropoff", "completed", "selected_driver", "requests", "customer_id"},
             where, "");

  RideOrder o;
  o.order_id = parse_id(require(j, "order_id", where, ""), where, "order_id");
  const auto& ts = require(j, "ts", where, "");
  if (!ts.is_number_integer()) fail(where, "ts", "expected integer seconds");
  o.timestamp = ts.get<Timestamp>();
  o.pickup = parse_point(require(j, "pickup", where, ""), where, "pickup");

  if (auto it = j.find("dropoff"); it != j.end() && !it->is_null()) o.dropoff = parse_point(*it, where, "dropoff");

  if (auto it = j.find("completed"); it != j.end()) {
    if (!it->is_boolean()) fail(where, "completed", "expected a boolean");
    o.completed = it->get<bool>();
  } else if (require_requests) {
    fail(where, "completed", "missing");
  }

  if (auto it = j.find("selected_driver"); it != j.end() && !it->is_null())
    o.selected_driver = parse_id(*it, where, "selected_driver");
  if (auto it = j.find("customer_id"); it != j.end() && !it->is_null())
    o.customer_id = parse_id(*it, where, "customer_id");

  auto rit = j.find("requests");
  if (rit == j.end()) {
    if (require_requests) fail(where, "requests", "missing");
  } else {
    if (!rit->is_array()) fail(where, "requests", "expected an array");
    std::size_t idx = 0;
    for (const auto& rj : *rit) {
      const std::string field = "requests[" + std::to_string(idx++) + "]";
      if (!rj.is_object()) fail(where, field, "expected an object");
      check_keys(rj, {"driver_id", "pos", "response"}, where, field + ".");
      DriverRequest r;
      r.driver_id = parse_id(require(rj, "driver_id", where, field + "."), where, field + ".driver_id");
      r.driver_position = parse_point(require(rj, "pos", where, field + "."), where, field + ".pos");
      const auto& resp = require(rj, "response", where, field + ".");
      if (!resp.is_string()) fail(where, field + ".response", "expected a string");
      auto parsed = parse_response(resp.get<std::string>());
      if (!parsed) fail(where, field + ".response", "unknown response '" + resp.get<std::string>() + "'");
      r.response = *parsed;
      o.requests.push_back(std::move(r));
    }
  }

  if (require_requests) {
    try {
      validate_order(o);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return o;
}

std::string order_to_json(const RideOrder& o) {
  ordered_json j;
  j["order_id"] = o.order_id;
  j["ts"] = o.timestamp;
  j["pickup"] = point_json(o.pickup);
  j["dropoff"] = o.dropoff ? point_json(*o.dropoff) : ordered_json(nullptr);
  j["completed"] = o.completed;
  j["selected_driver"] = o.selected_driver ? ordered_json(*o.selected_driver) : ordered_json(nullptr);
  if (o.customer_id) j["customer_id"] = *o.customer_id;
  auto reqs = ordered_json::array();
  for (const auto& r : o.requests) {
    ordered_json rj;
    rj["driver_id"] = r.driver_id;
    rj["pos"] = point_json(r.driver_position);
    rj["response"] = std::string(to_string(r.response));
    reqs.push_back(std::move(rj));
  }
  j["requests"] = std::move(reqs);
  return j.dump();
}

void sort_orders(std::vector<RideOrder>& orders) {
  std::stable_sort(orders.begin(), orders.end(),
                   [](const RideOrder& a, const RideOrder& b) { return a.timestamp < b.timestamp; });
}

std::vector<RideOrder> load_orders(const std::filesystem::path& orders_path) {
  auto in = open_in(orders_path);
  std::vector<RideOrder> orders;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    orders.push_back(parse_order_json(line, orders_path.string() + ":" + std::to_string(lineno)));
  }
  sort_orders(orders);
  return orders;
}

std::map<DriverId, DriverTrail> load_trails(const std::filesystem::path& trails_path) {
  auto in = open_in(trails_path);
  std::map<DriverId, DriverTrail> trails;
  std::string line;
  std::size_t lineno = 0;
  const auto where = [&] { return trails_path.string() + ":" + std::to_string(lineno); };

  if (!std::getline(in, line)) throw DataError(trails_path.string() + ": empty trails file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "driver_id,ts,lat,lon") throw DataError(where() + ": expected header 'driver_id,ts,lat,lon'");

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 4) throw DataError(where() + ": expected 4 columns, got " + std::to_string(cells.size()));
    if (cells[0].empty()) fail(where(), "driver_id", "must be non-empty");

    TrailSample s;
    {
      const auto& c = cells[1];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), s.timestamp);
      if (ec != std::errc{} || p != c.data() + c.size()) fail(where(), "ts", "expected integer seconds");
    }
    const auto parse_num = [&](const std::string& c, const char* field, double lo, double hi) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || p != c.data() + c.size()) fail(where(), field, "expected a number");
      if (!std::isfinite(v) || v < lo || v > hi) fail(where(), field, "value " + c + " out of range");
      return v;
    };
    s.position.lat = parse_num(cells[2], "lat", -90.0, 90.0);
    s.position.lon = parse_num(cells[3], "lon", -180.0, 180.0);

    auto& trail = trails[cells[0]];
    trail.driver_id = cells[0];
    if (!trail.samples.empty() && s.timestamp <= trail.samples.back().timestamp)
      fail(where(), "ts", "non-monotone trail timestamps for driver '" + cells[0] + "'");
    trail.samples.push_back(s);
  }
  return trails;
}

void validate_dataset(const Dataset& d) {
  for (std::size_t i = 0; i < d.orders.size(); ++i) {
    validate_order(d.orders[i]);
    if (i > 0 && d.orders[i].timestamp < d.orders[i - 1].timestamp)
      throw DataError("orders not sorted by timestamp at order '" + d.orders[i].order_id + "'");
  }
  for (const auto& [id, trail] : d.trails) {
    for (std::size_t i = 1; i < trail.samples.size(); ++i) {
      if (trail.samples[i].timestamp <= trail.samples[i - 1].timestamp)
        throw DataError("non-monotone trail timestamps for driver '" + id + "'");
    }
  }
  if (!d.trails.empty()) {
    for (const auto& o : d.orders) {
      if (o.selected_driver && !d.trails.contains(*o.selected_driver))
        throw DataError("order '" + o.order_id + "': selected driver '" + *o.selected_driver +
                        "' has no trail (dangling driver reference)");
    }
  }
}

Dataset load_dataset(const std::filesystem::path& orders_path, const std::optional<std::filesystem::path>& trails_path) {
  Dataset d;
  d.orders = load_orders(orders_path);
  if (trails_path) d.trails = load_trails(*trails_path);
  validate_dataset(d);
  return d;
}

void write_orders(const std::vector<RideOrder>& orders, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& o : orders) out << order_to_json(o) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

void write_trails(const std::map<DriverId, DriverTrail>& trails, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "driver_id,ts,lat,lon\n";
  for (const auto& [id, trail] : trails) {
    for (const auto& s : trail.samples) {
      out << id << ',' << s.timestamp << ',' << format_double(s.position.lat) << ','
          << format_double(s.position.lon) << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_dataset(const Dataset& d, const std::filesystem::path& orders_path,
                   const std::optional<std::filesystem::path>& trails_path) {
  write_orders(d.orders, orders_path);
  if (trails_path) write_trails(d.trails, *trails_path);
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<DriverResponse> parse_loose_response(const std::string& raw) {
  const auto s = lower(raw);
  if (s == "accept" || s == "accepted") return DriverResponse::Accepted;
  if (s == "decline" || s == "declined" || s == "reject" || s == "rejected") return DriverResponse::Declined;
  if (s == "timeout" || s == "timedout" || s == "timed_out") return DriverResponse::TimedOut;
  return std::nullopt;
}

}  // namespace

std::vector<RideOrder> import_flat_requests(const std::filesystem::path& csv_path) {
  auto in = open_in(csv_path);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw DataError(csv_path.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : {"order_id", "ts", "pickup_lat", "pickup_lon", "dropoff_lat", "dropoff_lon", "driver_id",
                           "driver_lat", "driver_lon", "response", "completed", "selected_driver"}) {
    if (!col.contains(name)) throw DataError(csv_path.string() + ":1: missing column '" + std::string(name) + "'");
  }
  const bool has_customer = col.contains("customer_id");

  std::vector<RideOrder> orders;
  std::unordered_map<std::string, std::size_t> index;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = csv_path.string() + ":" + std::to_string(lineno);
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DataError(where + ": column count mismatch");
    const auto cell = [&](const char* name) -> const std::string& { return cells[col.at(name)]; };
    const auto num = [&](const char* name) {
      const auto& c = cell(name);
      double v = 0.0;
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || p != c.data() + c.size()) fail(where, name, "expected a number");
      return v;
    };

    const auto& oid = cell("order_id");
    if (oid.empty()) fail(where, "order_id", "must be non-empty");
    auto [it, inserted] = index.try_emplace(oid, orders.size());
    if (inserted) {
      RideOrder o;
      o.order_id = oid;
      const auto& ts = cell("ts");
      auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), o.timestamp);
      if (ec != std::errc{} || p != ts.data() + ts.size()) fail(where, "ts", "expected integer epoch seconds");
      o.pickup = {num("pickup_lat"), num("pickup_lon")};
      if (!cell("dropoff_lat").empty() && !cell("dropoff_lon").empty())
        o.dropoff = GeoPoint{num("dropoff_lat"), num("dropoff_lon")};
      const auto c = lower(cell("completed"));
      if (c == "1" || c == "true") {
        o.completed = true;
      } else if (c == "0" || c == "false" || c.empty()) {
        o.completed = false;
      } else {
        fail(where, "completed", "expected 1/0/true/false");
      }
      if (!cell("selected_driver").empty()) o.selected_driver = cell("selected_driver");
      if (has_customer && !cell("customer_id").empty()) o.customer_id = cell("customer_id");
      orders.push_back(std::move(o));
    }
    DriverRequest r;
    r.driver_id = cell("driver_id");
    r.driver_position = {num("driver_lat"), num("driver_lon")};
    auto resp = parse_loose_response(cell("response"));
    if (!resp) fail(where, "response", "unknown response '" + cell("response") + "'");
    r.response = *resp;
    orders[it->second].requests.push_back(std::move(r));
  }

  for (const auto& o : orders) validate_order(o);
  sort_orders(orders);
  return orders;
}

SummaryStats dataset_summary(const Dataset& d) {
  SummaryStats s;
  s.orders = d.orders.size();
  std::set<std::string_view> drivers;
  std::set<std::string_view> customers;
  for (const auto& o : d.orders) {
    if (o.completed) ++s.completed_orders;
    if (o.customer_id) customers.insert(*o.customer_id);
    for (const auto& r : o.requests) {
      ++s.instances;
      drivers.insert(r.driver_id);
      switch (r.response) {
        case DriverResponse::Accepted:
          ++s.accepts;
          break;
        case DriverResponse::Declined:
          ++s.declines;
          break;
        case DriverResponse::TimedOut:
          ++s.timeouts;
          break;
      }
    }
  }
  s.rejects_timeouts = s.declines + s.timeouts;
  s.distinct_drivers = drivers.size();
  if (!customers.empty()) s.distinct_customers = customers.size();
  if (s.orders > 0) s.completed_fraction = static_cast<double>(s.completed_orders) / static_cast<double>(s.orders);
  if (s.instances > 0) s.accept_fraction = static_cast<double>(s.accepts) / static_cast<double>(s.instances);
  if (s.rejects_timeouts > 0)
    s.accept_to_reject_ratio = static_cast<double>(s.accepts) / static_cast<double>(s.rejects_timeouts);
  s.trail_drivers = d.trails.size();
  for (const auto& [id, t] : d.trails) s.trail_samples += t.samples.size();
  return s;
}

}  // namespace sidmaf
