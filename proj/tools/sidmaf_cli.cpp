// sidmaf: command-line entry point for the market-formation pipeline.
//
// Exit codes: 0 success, 1 usage or parameter error, 2 data error.

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sidmaf/dataset.hpp"
#include "sidmaf/features.hpp"
#include "sidmaf/forest.hpp"
#include "sidmaf/kpi.hpp"
#include "sidmaf/selection.hpp"
#include "sidmaf/simulator.hpp"
#include "sidmaf/synthetic.hpp"

using namespace sidmaf;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = SIDMAF_VERSION;

// Bad parameter values found after parsing; reported like a usage error.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

// Tool version, the effective configuration and digests of every input file.
std::string provenance(const std::string& command, const ordered_json& config, const std::vector<fs::path>& inputs) {
  ordered_json p;
  p["tool"] = "sidmaf";
  p["version"] = kVersion;
  p["command"] = command;
  p["config"] = config;
  auto files = ordered_json::array();
  for (const auto& f : inputs) files.push_back({{"path", f.string()}, {"sha256", sha256_file(f)}});
  p["inputs"] = std::move(files);
  return p.dump();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

TimeZone parse_tz(const std::string& name) {
  try {
    return TimeZone::parse(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void require_open_unit(double p, const char* flag) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError(std::string(flag) + " must be in (0, 1)");
}

Dataset load(const std::string& data, const std::string& trails) {
  if (trails.empty()) return load_dataset(data);
  return load_dataset(data, fs::path(trails));
}

std::vector<fs::path> inputs_of(std::initializer_list<std::string> paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths)
    if (!p.empty()) out.emplace_back(p);
  return out;
}

struct ForestFlags {
  std::size_t trees = 200;
  std::size_t max_features = 0;
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
  std::size_t threads = 1;

  void add(CLI::App* app) {
    app->add_option("--trees", trees, "number of trees")->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
    app->add_option("--max-features", max_features, "candidate features per split (0 = ceil(sqrt(p)))");
    app->add_option("--max-depth", max_depth, "depth limit (0 = unlimited)");
    app->add_option("--min-samples-leaf", min_samples_leaf, "minimum samples per leaf")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    app->add_option("--threads", threads, "training threads (0 = all cores); never changes the model");
  }
  Hyperparams hp() const {
    Hyperparams h;
    h.n_trees = trees;
    h.max_features = max_features;
    h.max_depth = max_depth;
    h.min_samples_leaf = min_samples_leaf;
    h.n_threads = threads;
    return h;
  }
  ordered_json json() const {
    return {{"trees", trees}, {"max_features", max_features}, {"max_depth", max_depth},
            {"min_samples_leaf", min_samples_leaf}};
  }
};

void print_summary(const SummaryStats& s, bool as_json) {
  if (as_json) {
    ordered_json j;
    j["orders"] = s.orders;
    j["instances"] = s.instances;
    j["accepts"] = s.accepts;
    j["declines"] = s.declines;
    j["timeouts"] = s.timeouts;
    j["rejects_timeouts"] = s.rejects_timeouts;
    j["distinct_drivers"] = s.distinct_drivers;
    j["distinct_customers"] = s.distinct_customers ? ordered_json(*s.distinct_customers) : ordered_json(nullptr);
    j["completed_orders"] = s.completed_orders;
    j["completed_fraction"] = s.completed_fraction;
    j["accept_fraction"] = s.accept_fraction;
    j["accept_to_reject_ratio"] = s.accept_to_reject_ratio;
    j["trail_drivers"] = s.trail_drivers;
    j["trail_samples"] = s.trail_samples;
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::printf("orders                 %zu\n", s.orders);
  std::printf("instances              %zu\n", s.instances);
  std::printf("accepts                %zu\n", s.accepts);
  std::printf("rejects+timeouts       %zu (declines %zu, timeouts %zu)\n", s.rejects_timeouts, s.declines, s.timeouts);
  std::printf("distinct drivers       %zu\n", s.distinct_drivers);
  if (s.distinct_customers) std::printf("distinct customers     %zu\n", *s.distinct_customers);
  std::printf("completed orders       %zu (%.4f)\n", s.completed_orders, s.completed_fraction);
  std::printf("accepts / instances    %.4f\n", s.accept_fraction);
  std::printf("accepts / rejects      %.4f\n", s.accept_to_reject_ratio);
  std::printf("trail drivers          %zu\n", s.trail_drivers);
  std::printf("trail samples          %zu\n", s.trail_samples);
}

ordered_json cv_json(const CvReport& r) {
  ordered_json j;
  j["folds"] = r.folds;
  j["accuracy"] = r.accuracy;
  j["f1"] = r.f1;
  auto folds = ordered_json::array();
  for (const auto& m : r.per_fold) folds.push_back({{"accuracy", m.accuracy}, {"f1", m.f1}});
  j["per_fold"] = std::move(folds);
  return j;
}

void print_cv(const std::string& label, const CvReport& r) {
  if (!label.empty()) std::printf("%s\n", label.c_str());
  for (std::size_t k = 0; k < r.per_fold.size(); ++k)
    std::printf("fold %zu  accuracy %.4f  f1 %.4f\n", k + 1, r.per_fold[k].accuracy, r.per_fold[k].f1);
  std::printf("mean    accuracy %.4f  f1 %.4f\n", r.accuracy, r.f1);
}

// {"driver_id": ..., "pos": {"lat", "lon"}, "accepts"?: n, "total"?: n}
std::vector<PoolEntry> read_pool(const fs::path& path, Histories& histories) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw DataError(path.string() + ": expected an array of drivers");
  std::vector<PoolEntry> pool;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = path.string() + ": entry " + std::to_string(i);
    try {
      const auto& e = j[i];
      PoolEntry p{e.at("driver_id").get<std::string>(),
                  {e.at("pos").at("lat").get<double>(), e.at("pos").at("lon").get<double>()}};
      if (!is_valid(p.position)) throw DataError(where + ": position out of range");
      if (e.contains("accepts") || e.contains("total")) {
        const auto a = e.at("accepts").get<std::size_t>();
        const auto t = e.at("total").get<std::size_t>();
        if (a > t) throw DataError(where + ": accepts > total");
        auto& h = histories.by_driver[p.driver_id];
        h.driver_id = p.driver_id;
        h.accepts += a;
        h.total += t;
        histories.accepts += a;
        histories.total += t;
      }
      pool.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return pool;
}

RideOrder read_single_order(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ordered_json j;
  try {
    j = ordered_json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  // Accept pretty-printed files; requests and outcome fields are optional here.
  if (j.is_object()) {
    if (!j.contains("requests")) j["requests"] = ordered_json::array();
    if (!j.contains("completed")) j["completed"] = false;
    if (!j.contains("selected_driver")) j["selected_driver"] = nullptr;
    if (!j.contains("dropoff")) j["dropoff"] = nullptr;
  }
  return parse_order_json(j.dump(), path.string(), false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driver-selection market formation: data, acceptance model, selection and replay simulation", "sidmaf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // import
  std::string import_in, import_out;
  auto* import_cmd = app.add_subcommand("import", "convert a flat per-request CSV export to canonical orders JSONL");
  import_cmd->add_option("--in", import_in, "flat CSV")->required();
  import_cmd->add_option("--out", import_out, "orders JSONL")->required();

  // gen-synthetic
  SyntheticConfig syn;
  std::string syn_out, syn_trails;
  std::uint64_t syn_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "generate a synthetic city with a known acceptance law");
  gen_cmd->add_option("--out", syn_out, "orders JSONL")->required();
  gen_cmd->add_option("--trails-out", syn_trails, "trails CSV");
  gen_cmd->add_option("--seed", syn_seed, "random seed");
  gen_cmd->add_option("--drivers", syn.n_drivers, "number of drivers")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
  gen_cmd->add_option("--orders", syn.n_orders, "number of orders")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
  gen_cmd->add_option("--decay", syn.distance_decay, "acceptance distance decay per km")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--base-rate", syn.base_accept_rate, "accept probability at zero distance for a mean driver")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--propensity-sd", syn.propensity_sd, "std-dev of driver offsets (logit)")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--spread-km", syn.spread_km, "spatial spread of the city")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--requests-per-order", syn.requests_per_order, "drivers addressed per order")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  gen_cmd->add_option("--speed", syn.avg_speed_kmh, "ride speed, km/h")->check(CLI::PositiveNumber);

  // summary
  std::string sum_data, sum_trails;
  bool sum_json = false;
  auto* summary_cmd = app.add_subcommand("summary", "dataset counts and ratios");
  summary_cmd->add_option("--data", sum_data, "orders JSONL")->required();
  summary_cmd->add_option("--trails", sum_trails, "trails CSV");
  summary_cmd->add_flag("--json", sum_json, "print JSON");

  // features
  std::string feat_data, feat_out, feat_tz = "Europe/Prague";
  auto* features_cmd = app.add_subcommand("features", "export the feature matrix (full-scope driver histories)");
  features_cmd->add_option("--data", feat_data, "orders JSONL")->required();
  features_cmd->add_option("--out", feat_out, "features CSV")->required();
  features_cmd->add_option("--tz", feat_tz, "Europe/Prague, UTC or +HH:MM");

  // train
  std::string train_in, train_out;
  std::uint64_t train_seed = 0;
  ForestFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train the acceptance model");
  train_cmd->add_option("--in", train_in, "features CSV")->required();
  train_cmd->add_option("--out", train_out, "model JSON")->required();
  train_cmd->add_option("--seed", train_seed, "random seed");
  train_flags.add(train_cmd);

  // cv
  std::string cv_in, cv_data, cv_out, cv_scope = "both", cv_tz = "Europe/Prague";
  std::size_t cv_folds = 5;
  std::uint64_t cv_seed = 0;
  ForestFlags cv_flags;
  auto* cv_cmd = app.add_subcommand("cv", "stratified k-fold cross-validation");
  auto* cv_in_opt = cv_cmd->add_option("--in", cv_in, "features CSV");
  auto* cv_data_opt = cv_cmd->add_option("--data", cv_data, "orders JSONL (features built per fold)");
  cv_in_opt->excludes(cv_data_opt);
  cv_cmd->add_option("--folds", cv_folds, "number of folds")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  cv_cmd->add_option("--seed", cv_seed, "random seed");
  cv_cmd->add_option("--history-scope", cv_scope, "full, train-only or both (with --data)")
      ->check(CLI::IsMember({"full", "train-only", "both"}));
  cv_cmd->add_option("--tz", cv_tz, "Europe/Prague, UTC or +HH:MM");
  cv_cmd->add_option("--out", cv_out, "report JSON");
  cv_flags.add(cv_cmd);

  // rank-features
  std::string rank_model;
  bool rank_json = false;
  auto* rank_cmd = app.add_subcommand("rank-features", "feature importances of a model, descending");
  rank_cmd->add_option("--model", rank_model, "model JSON")->required();
  rank_cmd->add_flag("--json", rank_json, "print JSON");

  // select
  std::string sel_model, sel_order, sel_pool, sel_data, sel_tz = "Europe/Prague";
  std::size_t sel_k = 1;
  double sel_pt = 0.999;
  auto* select_cmd = app.add_subcommand("select", "score a driver pool for one order and select drivers");
  select_cmd->add_option("--model", sel_model, "model JSON")->required();
  select_cmd->add_option("--order", sel_order, "order JSON")->required();
  select_cmd->add_option("--pool", sel_pool, "pool JSON array")->required();
  select_cmd->add_option("--data", sel_data, "orders JSONL for driver histories");
  select_cmd->add_option("--k", sel_k, "required accepts")->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  select_cmd->add_option("--p-target", sel_pt, "target probability, in (0, 1)");
  select_cmd->add_option("--tz", sel_tz, "Europe/Prague, UTC or +HH:MM");

  // simulate
  std::string sim_data, sim_trails, sim_policy, sim_model, sim_out, sim_tz = "Europe/Prague";
  std::size_t sim_k = 1, sim_m = 8;
  double sim_pt = 0.999, sim_fallback = 24.0;
  std::int64_t sim_staleness = 60;
  std::uint64_t sim_seed = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "replay completed orders under a market-formation policy");
  sim_cmd->add_option("--data", sim_data, "orders JSONL")->required();
  sim_cmd->add_option("--trails", sim_trails, "trails CSV");
  sim_cmd->add_option("--policy", sim_policy, "sidmaf, replay or distance")
      ->required()
      ->check(CLI::IsMember({"sidmaf", "replay", "distance"}));
  sim_cmd->add_option("--model", sim_model, "model JSON");
  sim_cmd->add_option("--k", sim_k, "required accepts")->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  sim_cmd->add_option("--p-target", sim_pt, "target probability, in (0, 1)");
  sim_cmd->add_option("--m", sim_m, "drivers addressed by the distance policy")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
  sim_cmd->add_option("--seed", sim_seed, "random seed");
  sim_cmd->add_option("--staleness", sim_staleness, "seconds a trail sample stays fresh")
      ->check(CLI::Range(std::int64_t{0}, std::int64_t{86400}));
  sim_cmd->add_option("--fallback-speed", sim_fallback, "km/h when no ride speed is measurable")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--tz", sim_tz, "Europe/Prague, UTC or +HH:MM");
  sim_cmd->add_option("--out", sim_out, "trace JSONL")->required();

  // compare
  std::vector<std::string> cmp_traces;
  std::string cmp_out;
  auto* compare_cmd = app.add_subcommand("compare", "KPI table over simulation traces");
  compare_cmd->add_option("--traces", cmp_traces, "trace JSONL files")->required()->expected(1, -1);
  compare_cmd->add_option("--out", cmp_out, "report JSON");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*import_cmd) {
      const auto orders = import_flat_requests(import_in);
      write_orders(orders, import_out);
      std::printf("imported %zu orders\n", orders.size());
    } else if (*gen_cmd) {
      const auto d = generate_synthetic(syn, syn_seed);
      write_orders(d.orders, syn_out);
      if (!syn_trails.empty()) write_trails(d.trails, syn_trails);
      std::printf("generated %zu orders, %zu drivers\n", d.orders.size(), syn.n_drivers);
    } else if (*summary_cmd) {
      print_summary(dataset_summary(load(sum_data, sum_trails)), sum_json);
    } else if (*features_cmd) {
      const auto tz = parse_tz(feat_tz);
      const auto d = load_dataset(feat_data);
      const auto inst = all_instances(d);
      const auto t = feature_table(d, inst, build_histories(d), tz);
      write_feature_csv(t, feat_out);
      std::printf("wrote %zu rows\n", t.rows());
    } else if (*train_cmd) {
      const auto table = read_feature_csv(train_in);
      const auto f = train(table, train_flags.hp(), train_seed);
      ordered_json cfg = train_flags.json();
      cfg["seed"] = train_seed;
      save_forest(f, train_out, provenance("train", cfg, inputs_of({train_in})));
      if (f.train_meta.degenerate) std::fprintf(stderr, "warning: single-class training set; model is constant\n");
      std::printf("trained %zu trees on %zu rows\n", f.n_trees(), table.rows());
    } else if (*cv_cmd) {
      if (cv_in.empty() == cv_data.empty()) throw UsageError("cv needs exactly one of --in or --data");
      ordered_json out;
      ordered_json cfg = cv_flags.json();
      cfg["folds"] = cv_folds;
      cfg["seed"] = cv_seed;
      if (!cv_in.empty()) {
        if (cv_scope != "both") throw UsageError("--history-scope applies to --data only");
        const auto r = cross_validate(read_feature_csv(cv_in), cv_folds, cv_flags.hp(), cv_seed);
        print_cv("", r);
        out["cv"] = cv_json(r);
      } else {
        const auto tz = parse_tz(cv_tz);
        cfg["history_scope"] = cv_scope;
        cfg["timezone"] = tz.name();
        const auto d = load_dataset(cv_data);
        for (const auto scope : {HistoryScope::Full, HistoryScope::TrainOnly}) {
          const std::string name(to_string(scope));
          if (cv_scope != "both" && cv_scope != name) continue;
          const auto r = cross_validate_dataset(d, cv_folds, cv_flags.hp(), cv_seed, scope, tz);
          print_cv("history scope: " + name, r);
          out[name] = cv_json(r);
        }
      }
      if (!cv_out.empty()) {
        out["provenance"] = ordered_json::parse(provenance("cv", cfg, inputs_of({cv_in, cv_data})));
        write_file(cv_out, out.dump(2) + "\n");
      }
    } else if (*rank_cmd) {
      const auto ranking = feature_ranking(load_forest(rank_model));
      if (rank_json) {
        auto j = ordered_json::array();
        for (const auto& [name, imp] : ranking) j.push_back({{"feature", name}, {"importance", imp}});
        std::cout << j.dump(2) << '\n';
      } else {
        for (std::size_t i = 0; i < ranking.size(); ++i)
          std::printf("%zu  %-18s %.6f\n", i + 1, ranking[i].first.c_str(), ranking[i].second);
      }
    } else if (*select_cmd) {
      require_open_unit(sel_pt, "--p-target");
      const auto tz = parse_tz(sel_tz);
      const auto model = load_forest(sel_model);
      const auto order = read_single_order(sel_order);
      Histories h = sel_data.empty() ? Histories{} : build_histories(load_dataset(sel_data));
      const auto pool = read_pool(sel_pool, h);
      const auto scored = score_candidates(model, order, pool, h, tz);
      const auto r = select_drivers(scored, sel_k, sel_pt);
      ordered_json j;
      j["order_id"] = order.order_id;
      j["k"] = r.k;
      j["p_target"] = r.p_target;
      j["l"] = r.l;
      j["achieved"] = r.achieved;
      j["satisfied"] = r.satisfied;
      auto sel = ordered_json::array();
      for (const auto& c : r.selected) sel.push_back({{"driver_id", c.driver_id}, {"accept_prob", c.accept_prob}});
      j["selected"] = std::move(sel);
      auto all = ordered_json::array();
      for (const auto& c : scored) all.push_back({{"driver_id", c.driver_id}, {"accept_prob", c.accept_prob}});
      j["candidates"] = std::move(all);
      std::cout << j.dump(2) << '\n';
    } else if (*sim_cmd) {
      const auto tz = parse_tz(sim_tz);
      if (sim_policy == "sidmaf") require_open_unit(sim_pt, "--p-target");
      if (sim_policy != "replay") {
        if (sim_model.empty()) throw UsageError("--policy " + sim_policy + " needs --model");
        if (sim_trails.empty()) throw UsageError("--policy " + sim_policy + " needs --trails");
      }
      const auto d = load(sim_data, sim_trails);
      std::optional<Forest> model;
      if (!sim_model.empty()) model = load_forest(sim_model);
      MarketFormationPolicy policy = ReplayBaselinePolicy{};
      if (sim_policy == "sidmaf") policy = SidmafPolicy{&*model, sim_k, sim_pt};
      if (sim_policy == "distance") policy = DistanceBaselinePolicy{sim_m, &*model};
      SimulationConfig sc;
      sc.seed = sim_seed;
      sc.staleness_s = sim_staleness;
      sc.fallback_speed_kmh = sim_fallback;
      sc.tz = tz;
      const auto trace = run_simulation(d, policy, sc);
      ordered_json cfg;
      cfg["policy"] = sim_policy;
      if (sim_policy == "sidmaf") {
        cfg["k"] = sim_k;
        cfg["p_target"] = sim_pt;
      }
      if (sim_policy == "distance") cfg["m"] = sim_m;
      cfg["seed"] = sim_seed;
      cfg["staleness_s"] = sim_staleness;
      cfg["fallback_speed_kmh"] = sim_fallback;
      cfg["timezone"] = tz.name();
      write_trace(trace, sim_out, provenance("simulate", cfg, inputs_of({sim_data, sim_trails, sim_model})));
      if (trace.avg_speed_fallback)
        std::fprintf(stderr, "warning: no measurable ride durations; using %.1f km/h\n", trace.avg_speed_kmh);
      std::printf("simulated %zu orders with %s\n", trace.decisions.size(), trace.policy_name.c_str());
    } else if (*compare_cmd) {
      std::vector<SimulationTrace> traces;
      std::vector<fs::path> inputs;
      for (const auto& p : cmp_traces) {
        traces.push_back(read_trace(p));
        inputs.emplace_back(p);
      }
      const auto table = compare(traces);
      std::cout << comparison_to_text(table);
      if (!cmp_out.empty()) {
        ordered_json cfg;
        cfg["traces"] = cmp_traces;
        write_file(cmp_out, comparison_to_json(table, provenance("compare", cfg, inputs)) + "\n");
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
