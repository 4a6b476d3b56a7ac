#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sidmaf/forest.hpp"

namespace sidmaf {

using ordered_json = nlohmann::ordered_json;

std::string forest_to_json(const Forest& f, const std::string& provenance_json) {
  ordered_json j;
  j["schema_version"] = kModelSchemaVersion;
  j["hyperparameters"] = {
      {"n_trees", f.hyperparams.n_trees},
      {"max_features", f.hyperparams.max_features},
      {"bootstrap", f.hyperparams.bootstrap},
      {"max_depth", f.hyperparams.max_depth},
      {"min_samples_split", f.hyperparams.min_samples_split},
      {"min_samples_leaf", f.hyperparams.min_samples_leaf},
      {"criterion", "gini"},
  };
  j["feature_names"] = f.feature_names;
  j["feature_importances"] = f.feature_importances;
  j["train_meta"] = {
      {"seed", f.train_meta.seed},
      {"n_samples", f.train_meta.n_samples},
      {"n_accept", f.train_meta.n_accept},
      {"degenerate", f.train_meta.degenerate},
  };
  auto trees = ordered_json::array();
  for (const auto& t : f.trees) {
    auto feature = ordered_json::array();
    auto threshold = ordered_json::array();
    auto left = ordered_json::array();
    auto right = ordered_json::array();
    auto reject = ordered_json::array();
    auto accept = ordered_json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      reject.push_back(n.count_reject);
      accept.push_back(n.count_accept);
    }
    ordered_json tj;
    tj["feature"] = std::move(feature);
    tj["threshold"] = std::move(threshold);
    tj["left"] = std::move(left);
    tj["right"] = std::move(right);
    tj["count_reject"] = std::move(reject);
    tj["count_accept"] = std::move(accept);
    trees.push_back(std::move(tj));
  }
  j["trees"] = std::move(trees);
  if (!provenance_json.empty()) j["provenance"] = ordered_json::parse(provenance_json);
  return j.dump();
}

namespace {

[[noreturn]] void bad_model(const std::string& what) { throw DataError("model: " + what); }

template <typename T>
std::vector<T> array_of(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) bad_model(std::string("missing array '") + key + "'");
  try {
    return it->get<std::vector<T>>();
  } catch (const nlohmann::json::exception&) {
    bad_model(std::string("bad element type in '") + key + "'");
  }
}

}  // namespace

Forest forest_from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    bad_model(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_model("expected an object");
  if (j.value("schema_version", -1) != kModelSchemaVersion)
    bad_model("unsupported schema_version (expected " + std::to_string(kModelSchemaVersion) + ")");

  Forest f;
  try {
    const auto& hp = j.at("hyperparameters");
    f.hyperparams.n_trees = hp.at("n_trees").get<std::size_t>();
    f.hyperparams.max_features = hp.at("max_features").get<std::size_t>();
    f.hyperparams.bootstrap = hp.at("bootstrap").get<bool>();
    f.hyperparams.max_depth = hp.at("max_depth").get<std::size_t>();
    f.hyperparams.min_samples_split = hp.at("min_samples_split").get<std::size_t>();
    f.hyperparams.min_samples_leaf = hp.at("min_samples_leaf").get<std::size_t>();
    const auto& meta = j.at("train_meta");
    f.train_meta.seed = meta.at("seed").get<std::uint64_t>();
    f.train_meta.n_samples = meta.at("n_samples").get<std::size_t>();
    f.train_meta.n_accept = meta.at("n_accept").get<std::size_t>();
    f.train_meta.degenerate = meta.at("degenerate").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    bad_model(std::string("bad header: ") + e.what());
  }
  f.feature_names = array_of<std::string>(j, "feature_names");
  f.feature_importances = array_of<double>(j, "feature_importances");
  if (f.feature_importances.size() != f.feature_names.size()) bad_model("importances/feature_names size mismatch");

  auto it = j.find("trees");
  if (it == j.end() || !it->is_array() || it->empty()) bad_model("missing or empty 'trees'");
  const auto p = static_cast<std::int32_t>(f.feature_names.size());
  for (const auto& tj : *it) {
    const auto feature = array_of<std::int32_t>(tj, "feature");
    const auto threshold = array_of<double>(tj, "threshold");
    const auto left = array_of<std::int32_t>(tj, "left");
    const auto right = array_of<std::int32_t>(tj, "right");
    const auto reject = array_of<double>(tj, "count_reject");
    const auto accept = array_of<double>(tj, "count_accept");
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || reject.size() != n ||
        accept.size() != n)
      bad_model("tree arrays have inconsistent lengths");
    Tree t;
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& node = t.nodes[i];
      node = {feature[i], threshold[i], left[i], right[i], reject[i], accept[i]};
      if (node.is_leaf()) {
        if (!(node.count_reject >= 0.0 && node.count_accept >= 0.0 && node.count_reject + node.count_accept >= 1.0))
          bad_model("leaf counts must be non-negative and sum to >= 1");
      } else {
        const auto self = static_cast<std::int32_t>(i);
        if (node.feature >= p) bad_model("split feature index out of range");
        if (!std::isfinite(node.threshold)) bad_model("split threshold not finite");
        if (node.left <= self || node.right <= self || node.left >= static_cast<std::int32_t>(n) ||
            node.right >= static_cast<std::int32_t>(n))
          bad_model("child index out of range");
      }
    }
    f.trees.push_back(std::move(t));
  }
  f.hyperparams.n_trees = f.trees.size();
  return f;
}

void save_forest(const Forest& f, const std::filesystem::path& path, const std::string& provenance_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << forest_to_json(f, provenance_json) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return forest_from_json(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace sidmaf
