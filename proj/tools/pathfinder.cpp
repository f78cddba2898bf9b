#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathfinder/attribute_index.hpp"
#include "pathfinder/bench.hpp"
#include "pathfinder/catalog_io.hpp"
#include "pathfinder/dataset_io.hpp"
#include "pathfinder/error.hpp"
#include "pathfinder/executor.hpp"
#include "pathfinder/filter_parser.hpp"
#include "pathfinder/optimizer.hpp"

namespace fs = std::filesystem;
using namespace pathfinder;

namespace {

struct PlannerFlags {
  double alpha = 0.4;
  bool no_borrowing = false;
  double threshold = 0.3;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Penalty exponent on the number of graphs")->capture_default_str();
    cmd->add_flag("--no-borrowing", no_borrowing, "Disable index borrowing");
    cmd->add_option("--threshold", threshold, "Minimum correlation for borrowing")->capture_default_str();
  }
  PlannerConfig config() const {
    PlannerConfig c;
    c.alpha = alpha;
    c.borrowing_enabled = !no_borrowing;
    c.correlation_threshold = threshold;
    c.validate();
    return c;
  }
};

std::string k_suffix(double k) {
  std::string s = format_double(k);
  return "attrs_k" + s + ".csv";
}

// file:idx, split at the last colon.
std::vector<float> read_query_vec(const std::string& spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon + 1 == spec.size()) {
    throw std::invalid_argument("--query-vec expects <file>:<index>");
  }
  std::size_t idx = 0;
  try {
    idx = std::stoul(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad query vector index in '" + spec + "'");
  }
  return read_fvecs_row(spec.substr(0, colon), idx);
}

IndexCatalog build_catalog(const fs::path& data, const fs::path& attrs, const std::vector<std::string>& specs,
                           const BuildParams& params, std::uint64_t seed, int threads) {
  auto rel = std::make_shared<const Relation>(load_relation(data, attrs));
  CatalogBuilder builder(rel, params, seed);
  for (const auto& spec : specs) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() == 4 && parts[0] == "tree") {
      builder.add_tree_index(parts[1], static_cast<std::uint32_t>(std::stoul(parts[2])),
                             static_cast<std::uint32_t>(std::stoul(parts[3])));
    } else if (parts.size() == 2 && parts[0] == "hash") {
      builder.add_hash_index(parts[1]);
    } else {
      throw std::invalid_argument("bad --index '" + spec + "', expected tree:<attr>:<fanout>:<height> or hash:<attr>");
    }
  }
  return builder.build(threads);
}

std::string node_label(const IndexCatalog& catalog, const PlanEntry& e) {
  if (!e.index) return "root";
  const auto& idx = catalog.index(*e.index);
  return std::string(to_string(idx.kind)) + ":" + catalog.relation().schema().at(idx.column).name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtered approximate nearest neighbor search over attribute index catalogs"};
  app.require_subcommand(1);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Synthesize the desk dataset");
  bench::DeskDatasetSpec desk;
  std::vector<double> corr_ks;
  fs::path data_out;
  gen_data->add_option("--out", data_out, "Output directory")->required();
  gen_data->add_option("--n", desk.n, "Number of base vectors")->capture_default_str();
  gen_data->add_option("--dim", desk.dim, "Vector dimension")->capture_default_str();
  gen_data->add_option("--queries", desk.n_queries, "Number of held-out query vectors")->capture_default_str();
  gen_data->add_option("--categories", desk.categories, "Distinct values of cat")->capture_default_str();
  gen_data->add_option("--corr-k", corr_ks,
                       "Noise scale of b = a + k*norm; several values write one attrs_k<k>.csv each");
  gen_data->add_option("--seed", desk.seed)->capture_default_str();

  // gen-workload
  auto* gen_wl = app.add_subcommand("gen-workload", "Sample filtered queries by shape and selectivity band");
  fs::path wl_data, wl_attrs, wl_queries, wl_out;
  std::string wl_shape = "conjunctive-2", wl_band = "medium";
  bench::WorkloadSpec wl_spec;
  bool wl_inline = false;
  gen_wl->add_option("--data", wl_data, "Base vectors (fvecs)")->required()->check(CLI::ExistingFile);
  gen_wl->add_option("--attrs", wl_attrs, "Attribute CSV")->required()->check(CLI::ExistingFile);
  gen_wl->add_option("--queries", wl_queries, "Query vectors (fvecs)")->required()->check(CLI::ExistingFile);
  gen_wl->add_option("--out", wl_out, "Workload file (JSON lines)")->required();
  gen_wl->add_option("--shape", wl_shape, "conjunctive-2 | conjunctive-3 | single-attr | disjunctive-mixed | in-set")
      ->capture_default_str();
  gen_wl->add_option("--band", wl_band, "low | medium | high | any")->capture_default_str();
  gen_wl->add_option("--n", wl_spec.n_queries, "Number of queries")->capture_default_str();
  gen_wl->add_option("--seed", wl_spec.seed)->capture_default_str();
  gen_wl->add_option("--attributes", wl_spec.attributes, "Attributes atoms may use")->delimiter(',');
  gen_wl->add_option("--in-min", wl_spec.in_set_min, "Smallest IN-set (in-set shape)")->capture_default_str();
  gen_wl->add_option("--in-max", wl_spec.in_set_max, "Largest IN-set (in-set shape)")->capture_default_str();
  gen_wl->add_option("--max-attempts", wl_spec.max_attempts)->capture_default_str();
  gen_wl->add_flag("--inline-vectors", wl_inline, "Embed query vectors instead of file references");

  // ground-truth
  auto* gt = app.add_subcommand("ground-truth", "Exact filtered top-K by linear scan");
  fs::path gt_data, gt_attrs, gt_workload, gt_out, gt_cache;
  std::size_t gt_k = 10;
  gt->add_option("--data", gt_data)->required()->check(CLI::ExistingFile);
  gt->add_option("--attrs", gt_attrs)->required()->check(CLI::ExistingFile);
  gt->add_option("--workload", gt_workload)->required()->check(CLI::ExistingFile);
  gt->add_option("--out", gt_out, "Ground truth file (JSON lines)")->required();
  gt->add_option("--k", gt_k)->capture_default_str();
  gt->add_option("--cache-dir", gt_cache, "Reuse or fill a binary cache keyed by content hash");

  // build
  auto* build = app.add_subcommand("build", "Build an index catalog");
  fs::path b_data, b_attrs, b_out;
  std::vector<std::string> b_indexes;
  BuildParams b_params;
  std::uint64_t b_seed = 42;
  int b_threads = 0;
  build->add_option("--data", b_data)->required()->check(CLI::ExistingFile);
  build->add_option("--attrs", b_attrs)->required()->check(CLI::ExistingFile);
  build->add_option("--index", b_indexes, "tree:<attr>:<fanout>:<height> or hash:<attr>");
  build->add_option("--out", b_out, "Catalog directory")->required();
  build->add_option("--seed", b_seed)->capture_default_str();
  build->add_option("--threads", b_threads, "0 uses every core")->capture_default_str();
  build->add_option("--max-degree", b_params.max_degree)->capture_default_str();
  build->add_option("--build-queue", b_params.build_queue)->capture_default_str();
  build->add_option("--prune-alpha", b_params.prune_alpha)->capture_default_str();

  // query
  auto* query = app.add_subcommand("query", "Answer one filtered query");
  fs::path q_catalog;
  std::string q_filter, q_vec;
  std::uint32_t q_k = 10, q_l = 200;
  bool q_json = false;
  PlannerFlags q_planner;
  query->add_option("--catalog", q_catalog)->required()->check(CLI::ExistingDirectory);
  query->add_option("--filter", q_filter, "Filter expression; empty matches everything");
  query->add_option("--query-vec", q_vec, "<fvecs file>:<row>")->required();
  query->add_option("--k", q_k)->capture_default_str();
  query->add_option("--l", q_l, "Search queue length")->capture_default_str();
  query->add_flag("--json", q_json, "Print JSON");
  q_planner.attach(query);

  // explain
  auto* explain = app.add_subcommand("explain", "Show how a filter is planned");
  fs::path e_catalog;
  std::string e_filter;
  PlannerFlags e_planner;
  explain->add_option("--catalog", e_catalog)->required()->check(CLI::ExistingDirectory);
  explain->add_option("--filter", e_filter)->required();
  e_planner.attach(explain);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Recall and QPS over a sweep of queue lengths");
  fs::path bn_catalog, bn_workload, bn_truth, bn_out, bn_cache;
  bench::BenchConfig bn_config;
  PlannerFlags bn_planner;
  bool bn_no_warmup = false;
  bench_cmd->add_option("--catalog", bn_catalog)->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--workload", bn_workload)->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--truth", bn_truth, "Ground truth file");
  bench_cmd->add_option("--cache-dir", bn_cache, "Ground truth cache used when --truth is absent");
  bench_cmd->add_option("--out", bn_out, "CSV output; stdout when absent");
  bench_cmd->add_option("--L", bn_config.queue_lengths, "Queue lengths")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--k", bn_config.k)->capture_default_str();
  bench_cmd->add_option("--threads", bn_config.threads)->capture_default_str();
  bench_cmd->add_flag("--no-warmup", bn_no_warmup);
  bn_planner.attach(bench_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_data->parsed()) {
      if (corr_ks.empty()) corr_ks.push_back(desk.correlation_k);
      fs::create_directories(data_out);
      bench::DeskDataset d;
      for (std::size_t i = 0; i < corr_ks.size(); ++i) {
        desk.correlation_k = corr_ks[i];
        d = bench::gen_desk_dataset(desk);
        write_attribute_csv(data_out / (corr_ks.size() == 1 ? std::string("attrs.csv") : k_suffix(corr_ks[i])),
                            d.attrs);
      }
      write_fvecs(data_out / "base.fvecs", d.base);
      write_fvecs(data_out / "queries.fvecs", d.queries);
      std::cout << "wrote " << d.base.size() << " base and " << d.queries.size() << " query vectors to "
                << data_out.string() << "\n";
    } else if (gen_wl->parsed()) {
      wl_spec.shape = bench::parse_shape(wl_shape);
      wl_spec.band = bench::parse_band(wl_band);
      const Relation rel = load_relation(wl_data, wl_attrs);
      const VectorSet queries = read_fvecs(wl_queries);
      std::optional<std::string> ref;
      if (!wl_inline) {
        const fs::path base = fs::absolute(wl_out).parent_path();
        ref = fs::absolute(wl_queries).lexically_relative(base).string();
      }
      const auto w = bench::gen_workload(rel, wl_spec, queries, ref);
      bench::write_workload(wl_out, w);
      for (auto qid : w.unreachable) {
        std::cerr << "query " << qid << ": band " << wl_band << " not reached after " << wl_spec.max_attempts
                  << " attempts\n";
      }
      std::cout << "wrote " << w.queries.size() << " queries to " << wl_out.string() << "\n";
      if (w.queries.empty()) return 2;
    } else if (gt->parsed()) {
      const Relation rel = load_relation(gt_data, gt_attrs);
      const auto w = bench::read_workload(gt_workload);
      const auto truth = gt_cache.empty() ? bench::compute_ground_truth(rel, w, gt_k)
                                          : bench::load_or_compute_ground_truth(rel, w, gt_k, gt_cache);
      bench::write_ground_truth(gt_out, truth);
      std::cout << "wrote ground truth for " << truth.qids.size() << " queries to " << gt_out.string() << "\n";
    } else if (build->parsed()) {
      const auto catalog = build_catalog(b_data, b_attrs, b_indexes, b_params, b_seed, b_threads);
      save_catalog(catalog, b_out);
      std::cout << "built " << catalog.nodes().size() << " graphs over " << catalog.relation().size()
                << " tuples into " << b_out.string() << "\n";
    } else if (query->parsed()) {
      const auto catalog = load_catalog(q_catalog);
      const auto config = q_planner.config();
      QueryRequest req;
      req.query = read_query_vec(q_vec);
      req.k = q_k;
      req.queue_length = q_l;
      QueryResult result;
      GraphSearchPlan plan;
      try {
        req.filter = parse_dnf(q_filter, catalog.relation().schema());
        plan = plan_query(req.filter, catalog, config);
        result = answer(catalog, req, config);
      } catch (const UnsatisfiableFilter&) {
        plan.proven_empty = true;
      }
      if (q_json) {
        nlohmann::json j;
        j["found"] = result.found;
        j["hits"] = nlohmann::json::array();
        for (const auto& h : result.hits) j["hits"].push_back({{"pk", h.pk}, {"distance", h.distance}});
        j["plan"] = nlohmann::json::array();
        for (const auto& e : plan.entries) {
          j["plan"].push_back({{"index", node_label(catalog, e)}, {"node", e.node}, {"card", e.card}});
        }
        nlohmann::json graphs = nlohmann::json::array();
        for (const auto& g : result.stats.graphs) graphs.push_back({{"node", g.node}, {"visited", g.visited}});
        j["stats"] = {{"graphs", graphs},
                      {"visited", result.stats.total_visited()},
                      {"plan_seconds", result.stats.plan_seconds},
                      {"search_seconds", result.stats.search_seconds}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "found " << result.found << "\n";
        for (const auto& h : result.hits) std::cout << h.pk << " " << format_double(h.distance) << "\n";
        for (const auto& g : result.stats.graphs) std::cout << "# g" << g.node << " visited " << g.visited << "\n";
        std::cout << "# plan " << result.stats.plan_seconds * 1e3 << " ms, search "
                  << result.stats.search_seconds * 1e3 << " ms\n";
      }
    } else if (explain->parsed()) {
      const auto catalog = load_catalog(e_catalog);
      const auto config = e_planner.config();
      DnfPredicate dnf = DnfPredicate::always_true();
      try {
        dnf = parse_dnf(e_filter, catalog.relation().schema());
      } catch (const UnsatisfiableFilter&) {
        std::cout << "dnf: FALSE\nplan: empty (no tuple can match)\n";
        return 0;
      }
      PlanExplanation ex;
      const auto plan = plan_query(dnf, catalog, config, &ex);
      std::cout << format_explanation(catalog, dnf, plan, ex, config);
    } else if (bench_cmd->parsed()) {
      bn_config.planner = bn_planner.config();
      bn_config.warmup = !bn_no_warmup;
      const auto catalog = load_catalog(bn_catalog);
      const auto w = bench::read_workload(bn_workload);
      bench::GroundTruth truth;
      if (!bn_truth.empty()) {
        truth = bench::read_ground_truth(bn_truth);
      } else if (!bn_cache.empty()) {
        truth = bench::load_or_compute_ground_truth(catalog.relation(), w, bn_config.k, bn_cache);
      } else {
        throw Error("bench needs --truth or --cache-dir");
      }
      const auto rows = bench::run_bench(catalog, w, truth, bn_config);
      if (bn_out.empty()) {
        bench::write_bench_csv(std::cout, rows);
      } else {
        std::ofstream out(bn_out, std::ios::trunc);
        if (!out) throw DataError("cannot write '" + bn_out.string() + "'");
        bench::write_bench_csv(out, rows);
      }
    }
  } catch (const FilterError& e) {
    std::cerr << "filter error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
