#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "sidmaf/selection.hpp"

using namespace sidmaf;

namespace {

std::vector<CandidateDriver> candidates_from(const std::vector<double>& probs) {
  std::vector<CandidateDriver> out;
  for (std::size_t i = 0; i < probs.size(); ++i) out.push_back({"d" + std::to_string(i), probs[i], {}});
  return out;
}

std::vector<double> random_probs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  for (auto& v : p) v = u(rng);
  return p;
}

}  // namespace

TEST(ProbNoneAccept, EmptyProductIsOne) { EXPECT_EQ(prob_none_accept({}), 1.0); }

TEST(ProbNoneAccept, Examples) {
  const std::vector<double> a{0.5, 0.5};
  EXPECT_DOUBLE_EQ(prob_none_accept(a), 0.25);
  const std::vector<double> b{0.9, 0.8, 0.1};
  EXPECT_NEAR(prob_none_accept(b), 0.018, 1e-15);
}

TEST(ProbNoneAccept, RejectsOutOfRange) {
  const std::vector<double> p{0.5, 1.2};
  EXPECT_THROW(prob_none_accept(p), std::invalid_argument);
}

TEST(ProbAtLeastK, Examples) {
  const std::vector<double> one{1.0};
  EXPECT_EQ(prob_at_least_k(one, 1), 1.0);
  const std::vector<double> halves{0.5, 0.5};
  EXPECT_DOUBLE_EQ(prob_at_least_k(halves, 1), 0.75);

  // Enumerated: exactly-2 = 0.38, exactly-3 = 0.12.
  const std::vector<double> p{0.6, 0.5, 0.4};
  EXPECT_NEAR(oracle::tail_by_enumeration(p, 2), 0.5, 1e-15);
  EXPECT_NEAR(prob_at_least_k(p, 2), 0.5, 1e-15);
  const auto q = exact_count_distribution(p);
  EXPECT_NEAR(q[2], 0.38, 1e-15);
  EXPECT_NEAR(q[3], 0.12, 1e-15);
  EXPECT_EQ(prob_at_least_k(p, 4), 0.0);
}

TEST(ProbAtLeastK, RejectsZeroK) {
  const std::vector<double> p{0.5};
  EXPECT_THROW(prob_at_least_k(p, 0), std::invalid_argument);
}

TEST(ProbAtLeastK, MatchesEnumeration) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const auto p = random_probs(rng, n);
    for (std::size_t k = 1; k <= n; ++k) EXPECT_NEAR(prob_at_least_k(p, k), oracle::tail_by_enumeration(p, k), 1e-12);
  }
}

TEST(ProbAtLeastK, ExactCountsSumToOne) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_probs(rng, 1 + rng() % 40);
    double s = 0.0;
    for (double q : exact_count_distribution(p)) s += q;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(ProbAtLeastK, MonotoneInKAndPrefixLength) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_probs(rng, 1 + rng() % 15);
    std::sort(p.rbegin(), p.rend());
    for (std::size_t k = 1; k < p.size(); ++k) EXPECT_LE(prob_at_least_k(p, k + 1), prob_at_least_k(p, k));
    const std::size_t k = 1 + rng() % 3;
    double prev = 0.0;
    for (std::size_t l = 1; l <= p.size(); ++l) {
      const double t = prob_at_least_k(std::span(p).first(l), k);
      EXPECT_GE(t, prev);
      prev = t;
    }
    EXPECT_NEAR(prob_at_least_k(p, 1), 1.0 - prob_none_accept(p), 1e-12);
  }
}

TEST(SelectDrivers, SingleConfidentDriverSuffices) {
  const auto r = select_drivers(candidates_from({0.999, 0.1}), 1, 0.99);
  EXPECT_EQ(r.l, 1u);
  EXPECT_TRUE(r.satisfied);
  EXPECT_DOUBLE_EQ(r.achieved, 0.999);
  EXPECT_EQ(r.selected.front().driver_id, "d0");
}

TEST(SelectDrivers, FallsBackToAllWhenUnreachable) {
  const auto r = select_drivers(candidates_from({0.9, 0.8, 0.1}), 1, 0.999);
  EXPECT_EQ(r.l, 3u);
  EXPECT_FALSE(r.satisfied);
  EXPECT_NEAR(r.achieved, 1.0 - 0.1 * 0.2 * 0.9, 1e-15);
}

TEST(SelectDrivers, BinomialTailForKThree) {
  // Oracle: smallest l with Binomial(l, 1/2) tail P(X >= 3) > 0.9.
  std::size_t expected = 0;
  for (std::size_t l = 3; l <= 10; ++l) {
    if (oracle::binomial_half_tail(l, 3) > 0.9) {
      expected = l;
      break;
    }
  }
  ASSERT_EQ(expected, 9u);
  const auto r = select_drivers(candidates_from(std::vector<double>(10, 0.5)), 3, 0.9);
  EXPECT_EQ(r.l, expected);
  EXPECT_TRUE(r.satisfied);
  EXPECT_NEAR(r.achieved, 466.0 / 512.0, 1e-12);
}

TEST(SelectDrivers, EmptyCandidates) {
  const auto r = select_drivers({}, 1, 0.9);
  EXPECT_EQ(r.l, 0u);
  EXPECT_FALSE(r.satisfied);
  EXPECT_EQ(r.achieved, 0.0);
  EXPECT_TRUE(r.selected.empty());
}

TEST(SelectDrivers, StrictThresholdKeepsScanning) {
  // 0.5 == p_target exactly, so one driver is not enough.
  const auto r = select_drivers(candidates_from({0.5, 0.5}), 1, 0.5);
  EXPECT_EQ(r.l, 2u);
  EXPECT_DOUBLE_EQ(r.achieved, 0.75);
}

TEST(SelectDrivers, TiesBrokenByDriverId) {
  std::vector<CandidateDriver> c{{"c", 0.7, {}}, {"a", 0.7, {}}, {"b", 0.9, {}}};
  const auto r = select_drivers(c, 1, 0.99);
  ASSERT_EQ(r.selected.size(), 3u);
  EXPECT_EQ(r.selected[0].driver_id, "b");
  EXPECT_EQ(r.selected[1].driver_id, "a");
  EXPECT_EQ(r.selected[2].driver_id, "c");
}

TEST(SelectDrivers, RejectsBadArguments) {
  EXPECT_THROW(select_drivers(candidates_from({0.5}), 1, 0.0), std::invalid_argument);
  EXPECT_THROW(select_drivers(candidates_from({0.5}), 1, 1.0), std::invalid_argument);
  EXPECT_THROW(select_drivers(candidates_from({0.5}), 0, 0.5), std::invalid_argument);
  EXPECT_THROW(select_drivers(candidates_from({1.5}), 1, 0.5), std::invalid_argument);
}

TEST(SelectDrivers, MinimalAndSorted) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto probs = random_probs(rng, rng() % 20);
    const std::size_t k = 1 + rng() % 4;
    const double target = u(rng);
    const auto r = select_drivers(candidates_from(probs), k, target);
    ASSERT_EQ(r.l, r.selected.size());
    for (std::size_t i = 1; i < r.selected.size(); ++i)
      EXPECT_GE(r.selected[i - 1].accept_prob, r.selected[i].accept_prob);
    std::vector<double> chosen;
    for (const auto& c : r.selected) chosen.push_back(c.accept_prob);
    if (r.satisfied) {
      EXPECT_GT(prob_at_least_k(chosen, k), target);
      if (r.l >= 2) EXPECT_LE(prob_at_least_k(std::span(chosen).first(r.l - 1), k), target);
    } else {
      EXPECT_EQ(r.l, probs.size());
    }
  }
}

namespace {

// One split on pickup_distance: near drivers land in an accept-heavy leaf.
Forest distance_stump(double threshold, double near_accept, double far_accept) {
  Forest f;
  f.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  f.feature_importances.assign(kNumFeatures, 0.0);
  f.feature_importances[0] = 1.0;
  Tree t;
  t.nodes = {TreeNode{0, threshold, 1, 2, 0, 0}, TreeNode{-1, 0, -1, -1, 20 - near_accept, near_accept},
             TreeNode{-1, 0, -1, -1, 20 - far_accept, far_accept}};
  f.trees.push_back(t);
  return f;
}

}  // namespace

TEST(ScoreCandidates, EmptyPool) {
  const auto f = distance_stump(1.0, 19, 2);
  RideOrder o;
  o.pickup = prague_center();
  EXPECT_TRUE(score_candidates(f, o, {}, Histories{}).empty());
}

TEST(ScoreCandidates, DriverAtPickupScoresHigh) {
  const auto f = distance_stump(1.0, 19, 2);
  RideOrder o;
  o.order_id = "o";
  o.pickup = prague_center();
  Histories h;
  for (int i = 0; i < 9; ++i) h.add("near", DriverResponse::Accepted);
  h.add("near", DriverResponse::Declined);
  const std::vector<PoolEntry> pool{{"near", o.pickup}};
  const auto c = score_candidates(f, o, pool, h);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_GE(c[0].accept_prob, 0.9);
}

TEST(ScoreCandidates, NearerDriverScoresAtLeastAsHigh) {
  const auto f = distance_stump(1.0, 19, 2);
  RideOrder o;
  o.order_id = "o";
  o.pickup = {50.0, 14.4};
  const std::vector<PoolEntry> pool{{"far", {50.05, 14.4}}, {"near", {50.001, 14.4}}};
  const auto c = score_candidates(f, o, pool, Histories{});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].driver_id, "far");  // input order kept
  EXPECT_GE(c[1].accept_prob, c[0].accept_prob);
}

TEST(ScoreCandidates, RejectsWrongFeatureCount) {
  Forest f = distance_stump(1.0, 19, 2);
  f.feature_names.pop_back();
  RideOrder o;
  EXPECT_THROW(score_candidates(f, o, {}, Histories{}), std::invalid_argument);
}
