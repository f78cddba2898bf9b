#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "pathfinder/bench.hpp"
#include "pathfinder/executor.hpp"
#include "pathfinder/filter_parser.hpp"

using namespace pathfinder;

namespace {

struct Fixture {
  bench::DeskDataset data;
  std::shared_ptr<const Relation> rel;
  IndexCatalog catalog;
};

// Built once; 5,000 x 64 keeps setup to a few seconds.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    bench::DeskDatasetSpec spec;
    spec.n = 5000;
    spec.dim = 64;
    spec.n_queries = 200;
    out.data = bench::gen_desk_dataset(spec);
    out.rel = std::make_shared<const Relation>(ingest_relation(out.data.attrs, out.data.base));
    BuildParams p;
    p.max_degree = 32;
    p.build_queue = 64;
    CatalogBuilder b(out.rel, p, 3);
    b.add_tree_index("a", 2, 4);
    b.add_tree_index("c", 2, 4);
    b.add_hash_index("cat");
    out.catalog = b.build();
    return out;
  }();
  return f;
}

void BM_Distance(benchmark::State& state) {
  const auto& f = fixture();
  const auto q = f.data.queries.row(0);
  Key pk = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.rel->distance_to(q, pk));
    pk = (pk + 1) % f.rel->size();
  }
}
BENCHMARK(BM_Distance);

void BM_RootSearch(benchmark::State& state) {
  const auto& f = fixture();
  const SearchParams params{static_cast<std::uint32_t>(state.range(0)), 10};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(best_first_search(*f.catalog.root().graph, *f.rel, f.data.queries.row(i), params));
    i = (i + 1) % f.data.queries.size();
  }
}
BENCHMARK(BM_RootSearch)->Arg(50)->Arg(200)->Arg(800);

void BM_FilteredQuery(benchmark::State& state) {
  const auto& f = fixture();
  QueryRequest req;
  req.filter = parse_dnf("(a <= -0.5 AND c > 500) OR cat IN (\"k01\", \"k02\")", f.rel->schema());
  req.queue_length = static_cast<std::uint32_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    const auto row = f.data.queries.row(i);
    req.query.assign(row.begin(), row.end());
    benchmark::DoNotOptimize(answer(f.catalog, req));
    i = (i + 1) % f.data.queries.size();
  }
}
BENCHMARK(BM_FilteredQuery)->Arg(50)->Arg(200);

void BM_Plan(benchmark::State& state) {
  const auto& f = fixture();
  const auto dnf = parse_dnf("(a <= -0.5 AND c > 500) OR (b > 1 AND cat = \"k03\") OR c <= 10", f.rel->schema());
  for (auto _ : state) benchmark::DoNotOptimize(plan_query(dnf, f.catalog, PlannerConfig{}));
}
BENCHMARK(BM_Plan);

void BM_ParseFilter(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        parse_dnf("(a <= -0.5 AND c > 500) OR (b > 1 AND cat IN (\"k03\", \"k04\"))", f.rel->schema()));
  }
}
BENCHMARK(BM_ParseFilter);

}  // namespace

BENCHMARK_MAIN();
