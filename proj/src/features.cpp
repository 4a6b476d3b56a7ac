#include "sidmaf/features.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace sidmaf {

double geo_distance_km(const GeoPoint& a, const GeoPoint& b) {
  const double mean_lat = 0.5 * (a.lat + b.lat) * std::numbers::pi / 180.0;
  const double dx = (b.lon - a.lon) * std::cos(mean_lat) * kKmPerDegreeLonEquator;
  const double dy = (b.lat - a.lat) * kKmPerDegreeLat;
  return std::sqrt(dx * dx + dy * dy);
}

GeoPoint prague_center() { return {50.0 + 5.284 / 60.0, 14.0 + 25.246 / 60.0}; }

// ---------------------------------------------------------------------------
// Time zones

TimeZone TimeZone::parse(std::string_view name) {
  if (name == "Europe/Prague") return europe_prague();
  if (name == "UTC" || name == "Z") return utc();
  if (name.size() == 6 && (name[0] == '+' || name[0] == '-') && name[3] == ':') {
    int hh = 0;
    int mm = 0;
    auto r1 = std::from_chars(name.data() + 1, name.data() + 3, hh);
    auto r2 = std::from_chars(name.data() + 4, name.data() + 6, mm);
    if (r1.ec == std::errc{} && r2.ec == std::errc{} && hh <= 14 && mm < 60) {
      const int sign = name[0] == '-' ? -1 : 1;
      return fixed(sign * (hh * 3600 + mm * 60));
    }
  }
  throw std::invalid_argument("unknown time zone '" + std::string(name) + "'");
}

int TimeZone::offset_at(Timestamp utc) const {
  if (rule_ == Rule::Fixed) return base_offset_;
  using namespace std::chrono;
  const sys_seconds t{seconds{utc}};
  const year y = year_month_day{floor<days>(t)}.year();
  const auto switch_at = [&](month m) {
    return sys_seconds{sys_days{year_month_weekday_last{y, m, weekday_last{Sunday}}}} + hours{1};
  };
  const bool summer = t >= switch_at(March) && t < switch_at(October);
  return base_offset_ + (summer ? 3600 : 0);
}

std::string TimeZone::name() const {
  if (rule_ == Rule::CentralEuropean) return "Europe/Prague";
  if (base_offset_ == 0) return "UTC";
  const int a = std::abs(base_offset_);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", base_offset_ < 0 ? '-' : '+', a / 3600, (a % 3600) / 60);
  return buf;
}

LocalTime local_time(Timestamp utc, const TimeZone& tz) {
  using namespace std::chrono;
  const sys_seconds local{seconds{utc + tz.offset_at(utc)}};
  const auto day = floor<days>(local);
  const auto tod = hh_mm_ss{local - day};
  LocalTime lt;
  lt.hour = static_cast<int>(tod.hours().count());
  lt.day = static_cast<int>((weekday{day}.c_encoding() + 6) % 7);
  return lt;
}

// ---------------------------------------------------------------------------
// Histories

double Histories::rate_for(const DriverId& id) const {
  auto it = by_driver.find(id);
  if (it == by_driver.end() || it->second.total == 0) return global_rate();
  return it->second.rate();
}

void Histories::add(const DriverId& id, DriverResponse response) {
  auto& h = by_driver[id];
  h.driver_id = id;
  ++h.total;
  ++total;
  if (response == DriverResponse::Accepted) {
    ++h.accepts;
    ++accepts;
  }
}

HistoryScope parse_history_scope(std::string_view s) {
  if (s == "full") return HistoryScope::Full;
  if (s == "train-only") return HistoryScope::TrainOnly;
  throw std::invalid_argument("unknown history scope '" + std::string(s) + "' (expected full|train-only)");
}

std::string_view to_string(HistoryScope s) { return s == HistoryScope::Full ? "full" : "train-only"; }

std::vector<InstanceRef> all_instances(const Dataset& d) {
  std::vector<InstanceRef> out;
  for (std::size_t i = 0; i < d.orders.size(); ++i)
    for (std::size_t j = 0; j < d.orders[i].requests.size(); ++j) out.push_back({i, j});
  return out;
}

Histories build_histories(const Dataset& d) {
  Histories h;
  for (const auto& o : d.orders)
    for (const auto& r : o.requests) h.add(r.driver_id, r.response);
  return h;
}

Histories build_histories(const Dataset& d, std::span<const InstanceRef> scope) {
  Histories h;
  for (const auto& ref : scope) {
    const auto& r = d.orders.at(ref.order).requests.at(ref.request);
    h.add(r.driver_id, r.response);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Extraction

std::array<double, kNumFeatures> FeatureVector::to_array() const {
  return {pickup_distance, ride_distance,          pickup_center,   ride_center,
          static_cast<double>(hour), static_cast<double>(day), mean_accept_rate};
}

FeatureVector extract(const RideOrder& order, const DriverRequest& req, const Histories& histories,
                      const TimeZone& tz) {
  const GeoPoint center = prague_center();
  FeatureVector f;
  f.pickup_distance = geo_distance_km(req.driver_position, order.pickup);
  f.pickup_center = geo_distance_km(order.pickup, center);
  if (order.dropoff) {
    f.ride_distance = geo_distance_km(order.pickup, *order.dropoff);
    f.ride_center = geo_distance_km(*order.dropoff, center);
  }
  const auto lt = local_time(order.timestamp, tz);
  f.hour = lt.hour;
  f.day = lt.day;
  f.mean_accept_rate = histories.rate_for(req.driver_id);
  return f;
}

void FeatureTable::append(std::span<const double> x, int label) {
  if (x.size() != cols()) throw std::invalid_argument("FeatureTable::append: column count mismatch");
  values.insert(values.end(), x.begin(), x.end());
  labels.push_back(label);
}

FeatureTable feature_table(const Dataset& d, std::span<const InstanceRef> instances, const Histories& histories,
                           const TimeZone& tz) {
  FeatureTable t;
  t.names.assign(kFeatureNames.begin(), kFeatureNames.end());
  t.values.reserve(instances.size() * kNumFeatures);
  t.labels.reserve(instances.size());
  for (const auto& ref : instances) {
    const auto& o = d.orders.at(ref.order);
    const auto& r = o.requests.at(ref.request);
    const auto x = extract(o, r, histories, tz).to_array();
    t.append(x, r.response == DriverResponse::Accepted ? 1 : 0);
  }
  return t;
}

void write_feature_csv(const FeatureTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& n : t.names) out << n << ',';
  out << "label\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (double v : t.row(i)) out << format_double(v) << ',';
    out << t.labels[i] << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty feature file");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label")
    throw DataError(path.string() + ":1: last column must be 'label'");
  FeatureTable t;
  t.names.assign(header.begin(), header.end() - 1);

  std::size_t lineno = 1;
  std::vector<double> row(t.cols());
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DataError(where + ": column count mismatch");
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const auto& s = cells[c];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), row[c]);
      if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(row[c]))
        throw DataError(where + ": field '" + t.names[c] + "': expected a finite number");
    }
    const auto& lab = cells.back();
    if (lab != "0" && lab != "1") throw DataError(where + ": field 'label': expected 0 or 1");
    t.append(row, lab == "1" ? 1 : 0);
  }
  return t;
}

}  // namespace sidmaf
