#include "sidmaf/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace sidmaf {

double gini(double count_reject, double count_accept) {
  if (count_reject < 0.0 || count_accept < 0.0) throw std::invalid_argument("gini: negative count");
  const double n = count_reject + count_accept;
  if (n <= 0.0) throw std::invalid_argument("gini: empty node");
  const double pr = count_reject / n;
  const double pa = count_accept / n;
  return 1.0 - (pr * pr + pa * pa);
}

double Tree::leaf_accept_fraction(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  const auto& leaf = nodes[i];
  return leaf.count_accept / (leaf.count_accept + leaf.count_reject);
}

namespace {

std::uint64_t tree_seed(std::uint64_t master, std::size_t tree) { return master ^ static_cast<std::uint64_t>(tree); }

struct SortEntry {
  double value;
  double weight;
  double accept;  // weight if label == 1 else 0
};

struct SplitCandidate {
  bool found = false;
  double score = 0.0;  // sum over children of (sum_c w_c^2) / w_child; larger is purer
  std::size_t feature = 0;
  double threshold = 0.0;
  double left_weight = 0.0;
  double left_accept = 0.0;

  bool better_than(const SplitCandidate& o) const {
    if (!o.found) return true;
    if (score != o.score) return score > o.score;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureTable& data, const Hyperparams& hp, std::size_t max_features, std::uint64_t seed)
      : data_(data), hp_(hp), max_features_(max_features), rng_(seed), importance_(data.cols(), 0.0) {}

  Tree build(std::span<const double> weights) {
    weights_ = weights;
    rows_.clear();
    for (std::size_t r = 0; r < weights.size(); ++r)
      if (weights[r] > 0.0) rows_.push_back(r);
    buffer_.resize(rows_.size());
    features_.resize(data_.cols());
    root_weight_ = 0.0;
    for (auto r : rows_) root_weight_ += weights_[r];
    tree_.nodes.clear();
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

  const std::vector<double>& importance() const { return importance_; }

 private:
  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    double w = 0.0;
    double a = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = rows_[i];
      w += weights_[r];
      if (data_.labels[r] == 1) a += weights_[r];
    }
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, w - a, a});

    const bool pure = a == 0.0 || a == w;
    const bool depth_capped = hp_.max_depth != 0 && depth >= hp_.max_depth;
    if (pure || depth_capped || w < static_cast<double>(hp_.min_samples_split) ||
        w < 2.0 * static_cast<double>(hp_.min_samples_leaf))
      return id;

    const auto split = find_split(begin, end, w, a);
    if (!split.found) return id;

    const auto mid = static_cast<std::size_t>(
        std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                              rows_.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t r) { return value(r, split.feature) <= split.threshold; }) -
        rows_.begin());

    const double lw = split.left_weight;
    const double la = split.left_accept;
    const double rw = w - lw;
    const double ra = a - la;
    importance_[split.feature] += (w * gini(w - a, a) - lw * gini(lw - la, la) - rw * gini(rw - ra, ra)) / root_weight_;

    const auto left = grow(begin, mid, depth + 1);
    const auto right = grow(mid, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  double value(std::size_t row, std::size_t feature) const { return data_.values[row * data_.cols() + feature]; }

  SplitCandidate find_split(std::size_t begin, std::size_t end, double w, double a) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    SplitCandidate best;
    std::size_t visited = 0;
    const double min_leaf = static_cast<double>(hp_.min_samples_leaf);
    // Draw features without replacement; constant features do not count
    // toward max_features.
    for (std::size_t k = 0; k < features_.size() && visited < max_features_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, features_.size() - 1);
      std::swap(features_[k], features_[pick(rng_)]);
      const std::size_t f = features_[k];

      const std::size_t m = end - begin;
      for (std::size_t i = 0; i < m; ++i) {
        const auto r = rows_[begin + i];
        const double wr = weights_[r];
        buffer_[i] = {value(r, f), wr, data_.labels[r] == 1 ? wr : 0.0};
      }
      std::sort(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(m),
                [](const SortEntry& x, const SortEntry& y) { return x.value < y.value; });
      if (buffer_[0].value == buffer_[m - 1].value) continue;
      ++visited;

      double lw = 0.0;
      double la = 0.0;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        lw += buffer_[i].weight;
        la += buffer_[i].accept;
        if (buffer_[i].value == buffer_[i + 1].value) continue;
        const double rw = w - lw;
        if (lw < min_leaf || rw < min_leaf) continue;
        const double ra = a - la;
        const double lr = lw - la;
        const double rr = rw - ra;
        const double score = (la * la + lr * lr) / lw + (ra * ra + rr * rr) / rw;
        double thr = 0.5 * (buffer_[i].value + buffer_[i + 1].value);
        if (!(thr < buffer_[i + 1].value)) thr = buffer_[i].value;
        SplitCandidate c{true, score, f, thr, lw, la};
        if (c.better_than(best)) best = c;
      }
    }
    return best;
  }

  const FeatureTable& data_;
  const Hyperparams& hp_;
  std::size_t max_features_;
  std::mt19937_64 rng_;
  std::span<const double> weights_;
  std::vector<std::size_t> rows_;
  std::vector<SortEntry> buffer_;
  std::vector<std::size_t> features_;
  std::vector<double> importance_;
  double root_weight_ = 0.0;
  Tree tree_;
};

void check_training_input(const FeatureTable& data, const Hyperparams& hp) {
  if (data.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (data.cols() == 0) throw std::invalid_argument("train: no features");
  if (data.values.size() != data.rows() * data.cols()) throw std::invalid_argument("train: ragged feature table");
  if (hp.n_trees == 0) throw std::invalid_argument("train: n_trees must be >= 1");
  if (hp.min_samples_split < 2) throw std::invalid_argument("train: min_samples_split must be >= 2");
  if (hp.min_samples_leaf < 1) throw std::invalid_argument("train: min_samples_leaf must be >= 1");
  for (int y : data.labels)
    if (y != 0 && y != 1) throw std::invalid_argument("train: labels must be 0 or 1");
  for (double v : data.values)
    if (!std::isfinite(v)) throw std::invalid_argument("train: non-finite feature value");
}

}  // namespace

std::vector<std::size_t> seeded_row_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Forest train_with_row_order(const FeatureTable& data, const Hyperparams& hp, std::uint64_t seed,
                            std::span<const std::size_t> row_order) {
  check_training_input(data, hp);
  const std::size_t n = data.rows();
  if (row_order.size() != n) throw std::invalid_argument("train: row order size mismatch");

  const std::size_t p = data.cols();
  const std::size_t max_features =
      hp.max_features == 0 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))))
                           : std::min(hp.max_features, p);

  Forest forest;
  forest.feature_names = data.names;
  forest.hyperparams = hp;
  forest.train_meta.seed = seed;
  forest.train_meta.n_samples = n;
  forest.train_meta.n_accept = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), 1));
  forest.train_meta.degenerate = forest.train_meta.n_accept == 0 || forest.train_meta.n_accept == n;
  forest.trees.resize(hp.n_trees);
  std::vector<std::vector<double>> tree_importance(hp.n_trees);

  const auto build_one = [&](std::size_t t) {
    std::vector<double> weights(n, 0.0);
    std::mt19937_64 rng(tree_seed(seed, t));
    if (hp.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (std::size_t j = 0; j < n; ++j) weights[row_order[draw(rng)]] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    TreeBuilder builder(data, hp, max_features, rng());
    forest.trees[t] = builder.build(weights);
    tree_importance[t] = builder.importance();
  };

  std::size_t threads = hp.n_threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : hp.n_threads;
  threads = std::min(threads, hp.n_trees);
  if (threads <= 1) {
    for (std::size_t t = 0; t < hp.n_trees; ++t) build_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < hp.n_trees; t = next++) build_one(t);
      });
    }
  }

  forest.feature_importances.assign(p, 0.0);
  for (auto& imp : tree_importance) {
    const double s = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (s <= 0.0) continue;
    for (std::size_t f = 0; f < p; ++f) forest.feature_importances[f] += imp[f] / s;
  }
  const double total = std::accumulate(forest.feature_importances.begin(), forest.feature_importances.end(), 0.0);
  if (total > 0.0)
    for (auto& v : forest.feature_importances) v /= total;
  return forest;
}

Forest train(const FeatureTable& data, const Hyperparams& hp, std::uint64_t seed) {
  const auto order = seeded_row_order(data.rows(), seed);
  return train_with_row_order(data, hp, seed, order);
}

double predict_proba(const Forest& f, std::span<const double> x) {
  if (f.trees.empty()) throw std::invalid_argument("predict_proba: untrained forest");
  if (x.size() != f.n_features()) throw std::invalid_argument("predict_proba: feature count mismatch");
  double sum = 0.0;
  for (const auto& t : f.trees) sum += t.leaf_accept_fraction(x);
  return sum / static_cast<double>(f.trees.size());
}

double predict_proba(const Forest& f, const FeatureVector& x) {
  const auto arr = x.to_array();
  return predict_proba(f, arr);
}

std::vector<double> predict_proba_batch(const Forest& f, std::span<const double> rows) {
  if (f.trees.empty()) throw std::invalid_argument("predict_proba: untrained forest");
  const std::size_t p = f.n_features();
  if (p == 0 || rows.size() % p != 0) throw std::invalid_argument("predict_proba: feature count mismatch");
  const std::size_t n = rows.size() / p;
  std::vector<double> out(n, 0.0);
  // Tree-major so each tree's nodes stay in cache across rows; the per-row
  // summation order matches predict_proba.
  for (const auto& t : f.trees)
    for (std::size_t i = 0; i < n; ++i) out[i] += t.leaf_accept_fraction(rows.subspan(i * p, p));
  for (auto& v : out) v /= static_cast<double>(f.trees.size());
  return out;
}

std::vector<std::pair<std::string, double>> feature_ranking(const Forest& f) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < f.n_features(); ++i)
    out.emplace_back(f.feature_names[i], i < f.feature_importances.size() ? f.feature_importances[i] : 0.0);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross_validate: folds must be >= 2");
  if (labels.size() < folds) throw std::invalid_argument("cross_validate: fewer samples than folds");
  std::vector<std::size_t> assignment(labels.size());
  std::mt19937_64 rng(seed);
  std::size_t counter = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) assignment[i] = counter++ % folds;
  }
  return assignment;
}

FoldMetrics binary_metrics(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("binary_metrics: size mismatch");
  std::size_t correct = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) ++correct;
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    if (predicted[i] == 1 && truth[i] == 0) ++fp;
    if (predicted[i] == 0 && truth[i] == 1) ++fn;
  }
  FoldMetrics m;
  if (!truth.empty()) m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  const std::size_t denom = 2 * tp + fp + fn;
  m.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return m;
}

namespace {

struct FoldData {
  FeatureTable train;
  FeatureTable test;
};

CvReport run_folds(std::size_t folds, const Hyperparams& hp, std::uint64_t seed,
                   const std::function<FoldData(std::size_t)>& fold_data) {
  CvReport report;
  report.folds = folds;
  for (std::size_t k = 0; k < folds; ++k) {
    const auto data = fold_data(k);
    const auto forest = train(data.train, hp, seed + k);
    std::vector<int> pred;
    for (std::size_t i = 0; i < data.test.rows(); ++i)
      pred.push_back(predict_proba(forest, data.test.row(i)) > 0.5 ? 1 : 0);
    report.per_fold.push_back(binary_metrics(data.test.labels, pred));
  }
  for (const auto& m : report.per_fold) {
    report.accuracy += m.accuracy;
    report.f1 += m.f1;
  }
  report.accuracy /= static_cast<double>(folds);
  report.f1 /= static_cast<double>(folds);
  return report;
}

}  // namespace

CvReport cross_validate(const FeatureTable& data, std::size_t folds, const Hyperparams& hp, std::uint64_t seed) {
  const auto assignment = stratified_folds(data.labels, folds, seed);
  return run_folds(folds, hp, seed, [&](std::size_t k) {
    FoldData f;
    f.train.names = data.names;
    f.test.names = data.names;
    for (std::size_t i = 0; i < data.rows(); ++i) (assignment[i] == k ? f.test : f.train).append(data.row(i), data.labels[i]);
    return f;
  });
}

CvReport cross_validate_dataset(const Dataset& d, std::size_t folds, const Hyperparams& hp, std::uint64_t seed,
                                HistoryScope scope, const TimeZone& tz) {
  const auto instances = all_instances(d);
  std::vector<int> labels;
  labels.reserve(instances.size());
  for (const auto& ref : instances)
    labels.push_back(d.orders[ref.order].requests[ref.request].response == DriverResponse::Accepted ? 1 : 0);
  const auto assignment = stratified_folds(labels, folds, seed);
  const Histories full = scope == HistoryScope::Full ? build_histories(d) : Histories{};
  return run_folds(folds, hp, seed, [&](std::size_t k) {
    std::vector<InstanceRef> train_refs;
    std::vector<InstanceRef> test_refs;
    for (std::size_t i = 0; i < instances.size(); ++i) (assignment[i] == k ? test_refs : train_refs).push_back(instances[i]);
    const Histories h = scope == HistoryScope::Full ? full : build_histories(d, train_refs);
    return FoldData{feature_table(d, train_refs, h, tz), feature_table(d, test_refs, h, tz)};
  });
}

}  // namespace sidmaf
