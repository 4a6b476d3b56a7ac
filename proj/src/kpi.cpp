#include "sidmaf/kpi.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace sidmaf {

double kpi1(const SimulationTrace& trace) {
  if (trace.decisions.empty()) throw std::domain_error("kpi1: empty trace");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& d : trace.decisions) {
    const auto& p = d.per_driver_accept_prob;
    if (p.empty()) continue;
    sum += std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    ++n;
  }
  if (n == 0) throw std::domain_error("kpi1: every order has an empty selection");
  return sum / static_cast<double>(n);
}

double kpi2(const SimulationTrace& trace) {
  if (trace.decisions.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& d : trace.decisions) total += d.selected_driver_ids.size();
  return static_cast<double>(total) / static_cast<double>(trace.decisions.size());
}

KpiReport kpi_report(const SimulationTrace& trace) {
  KpiReport r;
  r.policy_name = trace.policy_name;
  r.n_orders = trace.decisions.size();
  r.orders_with_empty_selection = static_cast<std::size_t>(std::count_if(
      trace.decisions.begin(), trace.decisions.end(), [](const PolicyDecision& d) { return d.selected_driver_ids.empty(); }));
  if (r.orders_with_empty_selection < r.n_orders) r.kpi1 = kpi1(trace);
  r.kpi2 = kpi2(trace);
  return r;
}

ComparisonTable compare(const std::vector<SimulationTrace>& traces) {
  ComparisonTable t;
  for (const auto& tr : traces) t.rows.push_back(kpi_report(tr));
  return t;
}

namespace {

constexpr const char* kKpiNote =
    "kpi1 = mean over orders with a non-empty selection of the per-order mean accept probability; "
    "kpi2 = mean selection size over all orders (empty selections count as 0)";

}  // namespace

std::string comparison_to_json(const ComparisonTable& table, const std::string& provenance_json) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["policy"] = r.policy_name;
    row["kpi1"] = r.kpi1 ? nlohmann::ordered_json(*r.kpi1) : nlohmann::ordered_json(nullptr);
    row["kpi2"] = r.kpi2;
    row["n_orders"] = r.n_orders;
    row["orders_with_empty_selection"] = r.orders_with_empty_selection;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["note"] = kKpiNote;
  if (!provenance_json.empty()) j["provenance"] = nlohmann::ordered_json::parse(provenance_json);
  return j.dump(2);
}

std::string comparison_to_text(const ComparisonTable& table) {
  std::size_t width = std::string("Market formation").size();
  for (const auto& r : table.rows) width = std::max(width, r.policy_name.size());

  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s  %8s\n", static_cast<int>(width), "Market formation", "KPI1",
                "KPI2", "orders", "empty");
  os << buf;
  os << std::string(width + 2 + 4 * 10 - 2, '-') << '\n';
  for (const auto& r : table.rows) {
    char k1[32];
    if (r.kpi1) {
      std::snprintf(k1, sizeof k1, "%.3f", *r.kpi1);
    } else {
      std::snprintf(k1, sizeof k1, "n/a");
    }
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8.2f  %8zu  %8zu\n", static_cast<int>(width), r.policy_name.c_str(), k1,
                  r.kpi2, r.n_orders, r.orders_with_empty_selection);
    os << buf;
  }
  os << "note: " << kKpiNote << '\n';
  return os.str();
}

}  // namespace sidmaf
