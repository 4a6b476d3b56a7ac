#include "sidmaf/selection.hpp"

#include <algorithm>
#include <stdexcept>

namespace sidmaf {

namespace {

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("accept probability outside [0, 1]");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double prob_none_accept(std::span<const double> probs) {
  double none = 1.0;
  for (double p : probs) {
    check_prob(p);
    none *= 1.0 - p;
  }
  return none;
}

std::vector<double> exact_count_distribution(std::span<const double> probs) {
  std::vector<double> q(probs.size() + 1, 0.0);
  q[0] = 1.0;
  std::size_t n = 0;
  for (double p : probs) {
    check_prob(p);
    ++n;
    for (std::size_t j = n; j > 0; --j) q[j] = q[j] * (1.0 - p) + q[j - 1] * p;
    q[0] *= 1.0 - p;
  }
  return q;
}

PrefixTail::PrefixTail(std::size_t k) : below_(k, 0.0) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  below_[0] = 1.0;
}

void PrefixTail::add(double p) {
  check_prob(p);
  ++n_;
  // Same recurrence as exact_count_distribution, truncated at k - 1.
  for (std::size_t j = below_.size() - 1; j > 0; --j) below_[j] = below_[j] * (1.0 - p) + below_[j - 1] * p;
  below_[0] *= 1.0 - p;
}

double PrefixTail::tail() const {
  if (n_ < below_.size()) return 0.0;
  double s = 0.0;
  for (double q : below_) s += q;
  return clamp01(1.0 - s);
}

double prob_at_least_k(std::span<const double> probs, std::size_t k) {
  PrefixTail tail(k);
  for (double p : probs) tail.add(p);
  return tail.tail();
}

void rank_candidates(std::vector<CandidateDriver>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const CandidateDriver& a, const CandidateDriver& b) {
    if (a.accept_prob != b.accept_prob) return a.accept_prob > b.accept_prob;
    return a.driver_id < b.driver_id;
  });
}

SelectionResult select_drivers(std::vector<CandidateDriver> candidates, std::size_t k, double p_target) {
  if (!(p_target > 0.0 && p_target < 1.0)) throw std::invalid_argument("p_target must be in (0, 1)");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  for (const auto& c : candidates) check_prob(c.accept_prob);

  SelectionResult result;
  result.k = k;
  result.p_target = p_target;
  if (candidates.empty()) return result;

  rank_candidates(candidates);
  PrefixTail tail(k);
  std::size_t l = 0;
  for (const auto& c : candidates) {
    tail.add(c.accept_prob);
    ++l;
    if (tail.tail() > p_target) {
      result.satisfied = true;
      break;
    }
  }
  result.l = l;
  result.achieved = tail.tail();
  candidates.resize(l);
  result.selected = std::move(candidates);
  return result;
}

std::vector<CandidateDriver> score_candidates(const Forest& forest, const RideOrder& order,
                                              std::span<const PoolEntry> pool, const Histories& histories,
                                              const TimeZone& tz) {
  if (forest.n_features() != kNumFeatures)
    throw std::invalid_argument("score_candidates: model has " + std::to_string(forest.n_features()) +
                                " features, expected " + std::to_string(kNumFeatures));
  std::vector<double> rows;
  rows.reserve(pool.size() * kNumFeatures);
  DriverRequest probe;
  for (const auto& entry : pool) {
    probe.driver_id = entry.driver_id;
    probe.driver_position = entry.position;
    const auto x = extract(order, probe, histories, tz).to_array();
    rows.insert(rows.end(), x.begin(), x.end());
  }
  const auto probs = pool.empty() ? std::vector<double>{} : predict_proba_batch(forest, rows);
  std::vector<CandidateDriver> out;
  out.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) out.push_back({pool[i].driver_id, probs[i], pool[i].position});
  return out;
}

}  // namespace sidmaf
