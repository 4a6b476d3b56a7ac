#pragma once

// Policy KPIs over a simulation trace.
//
//   KPI1: mean over orders of the mean accept probability of the drivers
//         addressed for that order. Orders with no addressed driver have no
//         ratio and are left out (and counted separately).
//   KPI2: mean number of addressed drivers per order, empty orders included.

#include <optional>
#include <string>
#include <vector>

#include "sidmaf/simulator.hpp"

namespace sidmaf {

struct KpiReport {
  std::string policy_name;
  std::optional<double> kpi1;  // absent when every order is empty
  double kpi2 = 0.0;
  std::size_t n_orders = 0;
  std::size_t orders_with_empty_selection = 0;

  friend bool operator==(const KpiReport&, const KpiReport&) = default;
};

/// Throws std::domain_error for an empty trace or one where every order is empty.
double kpi1(const SimulationTrace& trace);
/// Zero for an empty trace.
double kpi2(const SimulationTrace& trace);

KpiReport kpi_report(const SimulationTrace& trace);

struct ComparisonTable {
  std::vector<KpiReport> rows;
};

ComparisonTable compare(const std::vector<SimulationTrace>& traces);

/// `provenance_json` (a JSON object) is embedded when non-empty.
std::string comparison_to_json(const ComparisonTable& table, const std::string& provenance_json = {});
std::string comparison_to_text(const ComparisonTable& table);

}  // namespace sidmaf
