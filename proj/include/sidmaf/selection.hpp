#pragma once

// Market formation by minimal probability-ranked driver prefix.
//
// Candidates are ranked by predicted accept probability; the selection is the
// shortest prefix whose probability of receiving at least k accepts exceeds
// the target. Accept events are treated as independent, so the accept count
// over a prefix is Poisson-binomial.

#include <cstddef>
#include <span>
#include <vector>

#include "sidmaf/dataset.hpp"
#include "sidmaf/features.hpp"
#include "sidmaf/forest.hpp"

namespace sidmaf {

struct CandidateDriver {
  DriverId driver_id;
  double accept_prob = 0.0;
  GeoPoint position;

  friend bool operator==(const CandidateDriver&, const CandidateDriver&) = default;
};

struct SelectionResult {
  std::vector<CandidateDriver> selected;  // accept_prob descending
  std::size_t l = 0;
  std::size_t k = 1;
  double p_target = 0.0;
  double achieved = 0.0;  // P(at least k accepts among selected)
  bool satisfied = false;  // achieved > p_target
};

/// prod (1 - p_i); 1 for an empty list.
double prob_none_accept(std::span<const double> probs);

/// q[j] = P(exactly j accepts), j = 0..n. Unclamped.
std::vector<double> exact_count_distribution(std::span<const double> probs);

/// P(at least k accepts), clamped to [0, 1]. Zero when k > n.
double prob_at_least_k(std::span<const double> probs, std::size_t k);

/// Incremental tail over a growing prefix: keeps P(exactly j) for j < k only,
/// so each added driver costs O(k).
class PrefixTail {
 public:
  explicit PrefixTail(std::size_t k);

  void add(double p);
  /// P(at least k accepts) over the drivers added so far, clamped to [0, 1].
  double tail() const;
  std::size_t size() const { return n_; }

 private:
  std::vector<double> below_;  // P(exactly j), j < k
  std::size_t n_ = 0;
};

/// Sorts by accept_prob descending, ties by driver_id ascending.
void rank_candidates(std::vector<CandidateDriver>& candidates);

SelectionResult select_drivers(std::vector<CandidateDriver> candidates, std::size_t k, double p_target);

struct PoolEntry {
  DriverId driver_id;
  GeoPoint position;
};

/// Scores each pool driver with the forest for this order. Output keeps pool
/// order.
std::vector<CandidateDriver> score_candidates(const Forest& forest, const RideOrder& order,
                                              std::span<const PoolEntry> pool, const Histories& histories,
                                              const TimeZone& tz = TimeZone::europe_prague());

}  // namespace sidmaf
