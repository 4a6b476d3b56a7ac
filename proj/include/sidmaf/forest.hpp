#pragma once

// Random decision forest for binary classification: bootstrap aggregation of
// unpruned CART trees with Gini splits, soft-vote probabilities and
// impurity-based feature importances.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sidmaf/features.hpp"

namespace sidmaf {

/// 1 - sum_i (c_i / n)^2. Throws std::invalid_argument for an empty node.
double gini(double count_reject, double count_accept);

struct Hyperparams {
  std::size_t n_trees = 200;
  std::size_t max_features = 0;  // 0: ceil(sqrt(n_features))
  bool bootstrap = true;
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t n_threads = 1;  // 0: hardware concurrency; never affects results

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Flattened tree node. Leaves carry feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double count_reject = 0.0;
  double count_accept = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double leaf_accept_fraction(std::span<const double> x) const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TrainMeta {
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::size_t n_accept = 0;
  bool degenerate = false;  // single-class training set

  friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::string> feature_names;
  std::vector<double> feature_importances;
  Hyperparams hyperparams;
  TrainMeta train_meta;

  std::size_t n_trees() const { return trees.size(); }
  std::size_t n_features() const { return feature_names.size(); }
  friend bool operator==(const Forest&, const Forest&) = default;
};

Forest train(const FeatureTable& data, const Hyperparams& hp, std::uint64_t seed);

/// Same as train() but with an explicit row order in place of the seeded
/// shuffle. Bootstrap draw j uses row row_order[j]; passing a permutation of
/// rows together with the matching permuted order reproduces the same forest.
Forest train_with_row_order(const FeatureTable& data, const Hyperparams& hp, std::uint64_t seed,
                            std::span<const std::size_t> row_order);

/// The seeded shuffle train() uses.
std::vector<std::size_t> seeded_row_order(std::size_t n, std::uint64_t seed);

/// Mean over trees of the accept fraction in the reached leaf.
double predict_proba(const Forest& f, std::span<const double> x);
double predict_proba(const Forest& f, const FeatureVector& x);
/// predict_proba for each row of a row-major matrix with n_features columns.
std::vector<double> predict_proba_batch(const Forest& f, std::span<const double> rows);

/// Features sorted by importance, descending; ties keep feature order.
std::vector<std::pair<std::string, double>> feature_ranking(const Forest& f);

struct FoldMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct CvReport {
  std::size_t folds = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::vector<FoldMetrics> per_fold;
};

/// Stratified fold id per row, deterministic per seed.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

/// Accuracy at the 0.5 threshold and F1 of the accept class.
FoldMetrics binary_metrics(std::span<const int> truth, std::span<const int> predicted);

CvReport cross_validate(const FeatureTable& data, std::size_t folds, const Hyperparams& hp, std::uint64_t seed);

/// Cross-validation straight from orders. Folds match cross_validate on the
/// full feature table for the same seed. With TrainOnly the driver histories
/// of each fold come from its training instances only.
CvReport cross_validate_dataset(const Dataset& d, std::size_t folds, const Hyperparams& hp, std::uint64_t seed,
                                HistoryScope scope, const TimeZone& tz = TimeZone::europe_prague());

inline constexpr int kModelSchemaVersion = 1;

/// `provenance_json` (a JSON object) is embedded when non-empty; loading ignores it.
std::string forest_to_json(const Forest& f, const std::string& provenance_json = {});
Forest forest_from_json(std::string_view text);
void save_forest(const Forest& f, const std::filesystem::path& path, const std::string& provenance_json = {});
Forest load_forest(const std::filesystem::path& path);

}  // namespace sidmaf
