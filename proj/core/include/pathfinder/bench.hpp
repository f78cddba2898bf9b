#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pathfinder/attribute_index.hpp"
#include "pathfinder/optimizer.hpp"
#include "pathfinder/relation.hpp"

namespace pathfinder::bench {

// ---------------------------------------------------------------------------
// Data synthesis
// ---------------------------------------------------------------------------

struct CorrelatedColumns {
  std::vector<double> a;
  std::vector<double> b;
};

/// a ~ N(0, 1), b = a + k * N(0, 1) with an independent noise draw.
CorrelatedColumns gen_correlated_attrs(std::size_t n, double k, std::uint64_t seed);

/// Desk-scale stand-in for the SIFT setting: low-rank clustered vectors,
/// two correlated numeric attributes (a, b), one independent uniform numeric
/// attribute (c, in [0, 1000]) and one categorical attribute (cat).
struct DeskDatasetSpec {
  std::size_t n = 10'000;
  std::size_t dim = 128;
  std::size_t n_queries = 1'000;
  double correlation_k = 0.5;
  std::size_t categories = 20;
  std::size_t latent_dim = 16;
  std::size_t clusters = 32;
  std::uint64_t seed = 42;
};

struct DeskDataset {
  VectorSet base;
  VectorSet queries;  // held out: never part of the relation
  AttributeTable attrs;
};

DeskDataset gen_desk_dataset(const DeskDatasetSpec& spec);

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

enum class PredicateShape { kConjunctive2, kConjunctive3, kSingleAttr, kDisjunctiveMixed, kInSet };
enum class SelectivityBand { kLow, kMedium, kHigh, kAny };

std::string_view to_string(PredicateShape shape);
std::string_view to_string(SelectivityBand band);
PredicateShape parse_shape(std::string_view text);
SelectivityBand parse_band(std::string_view text);

/// low [0.001, 0.01], medium (0.01, 0.1], high (0.1, 1.0]; kAny accepts (0, 1].
bool in_band(double selectivity, SelectivityBand band);

struct WorkloadSpec {
  std::size_t n_queries = 100;
  PredicateShape shape = PredicateShape::kConjunctive2;
  SelectivityBand band = SelectivityBand::kMedium;
  std::uint64_t seed = 1;
  /// Attributes atoms may use; empty means all.
  std::vector<std::string> attributes;
  /// kInSet: inclusive range of the IN-set size.
  std::size_t in_set_min = 1;
  std::size_t in_set_max = 30;
  std::size_t max_attempts = 2'000;
};

struct QueryVectorRef {
  std::string file;
  std::size_t idx = 0;
};

struct WorkloadQuery {
  std::uint64_t qid = 0;
  std::string filter;
  std::vector<float> qvec;
  std::optional<QueryVectorRef> ref;  // written instead of the inline vector when set
  PredicateShape shape = PredicateShape::kConjunctive2;
  SelectivityBand band = SelectivityBand::kMedium;
  double selectivity = 0.0;  // exact, measured by a scan
};

struct Workload {
  std::string name;
  std::vector<WorkloadQuery> queries;
  std::vector<std::uint64_t> unreachable;  // qids whose band was not hit within max_attempts
};

/// Rejection-samples filters of the requested shape until the exact
/// selectivity falls in the band. Query i uses row i (mod size) of queries.
Workload gen_workload(const Relation& relation, const WorkloadSpec& spec, const VectorSet& queries,
                      std::optional<std::string> query_file = std::nullopt);

/// JSON lines: {"qid", "filter", "qvec": [...] | {"file", "idx"}, "shape", "band", "selectivity"}.
void write_workload(std::ostream& out, const Workload& workload);
void write_workload(const std::filesystem::path& path, const Workload& workload);
/// Relative query-vector files resolve against the workload's directory.
Workload read_workload(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct GroundTruth {
  std::size_t k = 10;
  std::vector<std::uint64_t> qids;
  std::vector<std::vector<Neighbor>> topk;
};

GroundTruth compute_ground_truth(const Relation& relation, const Workload& workload, std::size_t k);

/// JSON lines: {"qid", "topk": [[pk, distance], ...]}.
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path);

/// FNV-1a 64 of the serialized workload, K, the relation shape and its contents.
std::uint64_t ground_truth_key(const Relation& relation, const Workload& workload, std::size_t k);
/// Binary cache file <cache_dir>/gt_<key hex>.bin; computed and written on a miss.
GroundTruth load_or_compute_ground_truth(const Relation& relation, const Workload& workload, std::size_t k,
                                         const std::filesystem::path& cache_dir);

// ---------------------------------------------------------------------------
// Benchmark runs
// ---------------------------------------------------------------------------

struct BenchConfig {
  std::vector<std::uint32_t> queue_lengths{10, 20, 50, 100, 200, 400, 800, 1600, 3000};
  std::uint32_t k = 10;
  int threads = 1;
  PlannerConfig planner;
  bool warmup = true;
};

struct BenchRow {
  std::string workload;
  std::string shape;
  std::string band;
  std::uint32_t queue_length = 0;
  std::size_t queries = 0;
  double recall = 0.0;
  double qps = 0.0;
  double plan_fraction = 0.0;
  double mean_visited = 0.0;
};

/// One row per (L, shape, band) present in the workload. QPS counts completed
/// queries per wall second with the worker pool saturated; plan time is included.
/// Throws Error when the ground truth does not match the workload.
std::vector<BenchRow> run_bench(const IndexCatalog& catalog, const Workload& workload, const GroundTruth& truth,
                                const BenchConfig& config);

inline constexpr std::string_view kBenchCsvHeader = "workload,shape,band,L,recall@10,qps,plan_frac";
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool header = true);

}  // namespace pathfinder::bench
