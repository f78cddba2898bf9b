#include "pathfinder/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pathfinder/dataset_io.hpp"
#include "pathfinder/error.hpp"
#include "pathfinder/executor.hpp"
#include "pathfinder/filter_parser.hpp"
#include "pathfinder/oracle.hpp"

namespace pathfinder::bench {

using nlohmann::json;

CorrelatedColumns gen_correlated_attrs(std::size_t n, double k, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (!(k >= 0.0)) throw std::invalid_argument("k must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CorrelatedColumns out;
  out.a.resize(n);
  out.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.a[i] = normal(rng);
  for (std::size_t i = 0; i < n; ++i) out.b[i] = out.a[i] + k * normal(rng);
  return out;
}

DeskDataset gen_desk_dataset(const DeskDatasetSpec& spec) {
  if (spec.n == 0 || spec.dim == 0 || spec.latent_dim == 0 || spec.clusters == 0 || spec.categories == 0) {
    throw std::invalid_argument("desk dataset sizes must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> centers(spec.clusters * spec.latent_dim);
  for (auto& v : centers) v = 2.0 * normal(rng);
  std::vector<double> proj(spec.latent_dim * spec.dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
  for (auto& v : proj) v = scale * normal(rng);

  auto sample = [&](std::size_t count) {
    VectorSet vs;
    vs.dim = spec.dim;
    vs.data.resize(count * spec.dim);
    std::uniform_int_distribution<std::size_t> pick(0, spec.clusters - 1);
    std::vector<double> z(spec.latent_dim);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t c = pick(rng);
      for (std::size_t l = 0; l < spec.latent_dim; ++l) z[l] = centers[c * spec.latent_dim + l] + normal(rng);
      for (std::size_t d = 0; d < spec.dim; ++d) {
        double x = 0.1 * normal(rng);
        for (std::size_t l = 0; l < spec.latent_dim; ++l) x += z[l] * proj[l * spec.dim + d];
        vs.data[i * spec.dim + d] = static_cast<float>(x);
      }
    }
    return vs;
  };

  DeskDataset out;
  out.base = sample(spec.n);
  out.queries = sample(spec.n_queries);

  const auto ab = gen_correlated_attrs(spec.n, spec.correlation_k, spec.seed ^ 0xA5A5A5A5ull);
  std::mt19937_64 attr_rng(spec.seed ^ 0x5A5A5A5Aull);
  std::uniform_real_distribution<double> uniform(0.0, 1000.0);
  std::uniform_int_distribution<std::size_t> cat(0, spec.categories - 1);
  const int width = spec.categories > 100 ? 3 : 2;
  out.attrs.schema = Schema({{"a", AttributeKind::kNumeric},
                             {"b", AttributeKind::kNumeric},
                             {"c", AttributeKind::kNumeric},
                             {"cat", AttributeKind::kCategorical}});
  out.attrs.rows.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::ostringstream name;
    name << "k";
    name.width(width);
    name.fill('0');
    name << cat(attr_rng);
    const double c = uniform(attr_rng);
    out.attrs.rows.push_back({ab.a[i], ab.b[i], c, name.str()});
  }
  return out;
}

std::string_view to_string(PredicateShape shape) {
  switch (shape) {
    case PredicateShape::kConjunctive2:
      return "conjunctive-2";
    case PredicateShape::kConjunctive3:
      return "conjunctive-3";
    case PredicateShape::kSingleAttr:
      return "single-attr";
    case PredicateShape::kDisjunctiveMixed:
      return "disjunctive-mixed";
    case PredicateShape::kInSet:
      return "in-set";
  }
  return "?";
}

std::string_view to_string(SelectivityBand band) {
  switch (band) {
    case SelectivityBand::kLow:
      return "low";
    case SelectivityBand::kMedium:
      return "medium";
    case SelectivityBand::kHigh:
      return "high";
    case SelectivityBand::kAny:
      return "any";
  }
  return "?";
}

PredicateShape parse_shape(std::string_view text) {
  for (auto s : {PredicateShape::kConjunctive2, PredicateShape::kConjunctive3, PredicateShape::kSingleAttr,
                 PredicateShape::kDisjunctiveMixed, PredicateShape::kInSet}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown predicate shape '" + std::string(text) + "'");
}

SelectivityBand parse_band(std::string_view text) {
  for (auto b : {SelectivityBand::kLow, SelectivityBand::kMedium, SelectivityBand::kHigh, SelectivityBand::kAny}) {
    if (to_string(b) == text) return b;
  }
  throw std::invalid_argument("unknown selectivity band '" + std::string(text) + "'");
}

bool in_band(double s, SelectivityBand band) {
  switch (band) {
    case SelectivityBand::kLow:
      return s >= 0.001 && s <= 0.01;
    case SelectivityBand::kMedium:
      return s > 0.01 && s <= 0.1;
    case SelectivityBand::kHigh:
      return s > 0.1 && s <= 1.0;
    case SelectivityBand::kAny:
      return s > 0.0 && s <= 1.0;
  }
  return false;
}

namespace {

std::pair<double, double> band_limits(SelectivityBand band) {
  switch (band) {
    case SelectivityBand::kLow:
      return {0.001, 0.01};
    case SelectivityBand::kMedium:
      return {0.01, 0.1};
    case SelectivityBand::kHigh:
      return {0.1, 1.0};
    case SelectivityBand::kAny:
      break;
  }
  return {0.001, 1.0};
}

class AtomSampler {
 public:
  AtomSampler(const Relation& relation, std::vector<std::size_t> columns)
      : relation_(relation), columns_(std::move(columns)) {
    sorted_.resize(relation.schema().size());
    freq_.resize(relation.schema().size());
    for (std::size_t c : columns_) {
      if (relation.schema().at(c).kind == AttributeKind::kNumeric) {
        auto col = relation.numeric_column(c);
        sorted_[c].assign(col.begin(), col.end());
        std::sort(sorted_[c].begin(), sorted_[c].end());
      } else {
        freq_[c].assign(relation.dictionary(c).size(), 0);
        for (std::uint32_t code : relation.category_codes(c)) ++freq_[c][code];
      }
    }
  }

  const std::vector<std::size_t>& columns() const { return columns_; }

  // An atom on column with selectivity near target on its own.
  AtomicPredicate atom(std::size_t column, double target, std::mt19937_64& rng) const {
    target = std::clamp(target, 0.0, 1.0);
    if (relation_.schema().at(column).kind == AttributeKind::kNumeric) {
      const auto& v = sorted_[column];
      const std::size_t n = v.size();
      const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(target * static_cast<double>(n))));
      std::uniform_int_distribution<std::size_t> start(0, n - std::min(width, n));
      const std::size_t s = start(rng);
      const std::size_t e = std::min(n - 1, s + width - 1);
      return AtomicPredicate::between(column, v[s], v[e]);
    }
    const auto& f = freq_[column];
    std::vector<std::uint32_t> order(f.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<std::string> values;
    std::size_t covered = 0;
    const double want = target * static_cast<double>(relation_.size());
    for (std::uint32_t code : order) {
      values.insert(relation_.dictionary(column)[code]);
      covered += f[code];
      if (static_cast<double>(covered) >= want) break;
    }
    return AtomicPredicate::in_set(column, std::move(values));
  }

  AtomicPredicate in_set_of_size(std::size_t column, std::size_t size, std::mt19937_64& rng) const {
    const auto& dict = relation_.dictionary(column);
    std::vector<std::uint32_t> order(dict.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<std::string> values;
    for (std::size_t i = 0; i < std::min(size, order.size()); ++i) values.insert(dict[order[i]]);
    return AtomicPredicate::in_set(column, std::move(values));
  }

  std::vector<std::size_t> pick_columns(std::size_t count, std::mt19937_64& rng) const {
    std::vector<std::size_t> cols = columns_;
    std::shuffle(cols.begin(), cols.end(), rng);
    cols.resize(std::min(count, cols.size()));
    std::sort(cols.begin(), cols.end());
    return cols;
  }

 private:
  const Relation& relation_;
  std::vector<std::size_t> columns_;
  std::vector<std::vector<double>> sorted_;
  std::vector<std::vector<std::size_t>> freq_;
};

BoolExpr conjunction(const AtomSampler& sampler, std::size_t arity, double target, std::mt19937_64& rng) {
  const auto cols = sampler.pick_columns(arity, rng);
  const double each = std::pow(target, 1.0 / static_cast<double>(cols.size()));
  std::vector<BoolExpr> atoms;
  for (std::size_t c : cols) atoms.push_back(BoolExpr::atom(sampler.atom(c, each, rng)));
  return BoolExpr::all_of(std::move(atoms));
}

double measure(const Relation& relation, const BoolExpr& expr) {
  DnfPredicate dnf = to_dnf(expr);
  RowMatcher m(dnf, relation);
  std::size_t hits = 0;
  for (Key pk = 0; pk < relation.size(); ++pk) hits += m(pk) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(relation.size());
}

std::string query_line(const WorkloadQuery& q) {
  json j;
  j["qid"] = q.qid;
  j["filter"] = q.filter;
  if (q.ref) {
    j["qvec"] = {{"file", q.ref->file}, {"idx", q.ref->idx}};
  } else {
    j["qvec"] = q.qvec;
  }
  j["shape"] = std::string(to_string(q.shape));
  j["band"] = std::string(to_string(q.band));
  j["selectivity"] = q.selectivity;
  return j.dump();
}

void fnv(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
}

}  // namespace

Workload gen_workload(const Relation& relation, const WorkloadSpec& spec, const VectorSet& queries,
                      std::optional<std::string> query_file) {
  if (queries.size() == 0) throw std::invalid_argument("workload needs at least one query vector");
  if (queries.dim != relation.dim()) throw DataError("query vectors do not match the relation dimension");
  std::vector<std::size_t> columns;
  if (spec.attributes.empty()) {
    for (std::size_t c = 0; c < relation.schema().size(); ++c) columns.push_back(c);
  } else {
    for (const auto& name : spec.attributes) columns.push_back(relation.schema().require(name));
  }
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
  const std::size_t needed = spec.shape == PredicateShape::kConjunctive3   ? 3
                             : spec.shape == PredicateShape::kConjunctive2 ? 2
                                                                           : 1;
  if (columns.size() < needed) throw std::invalid_argument("not enough attributes for the requested shape");
  std::vector<std::size_t> categorical;
  for (std::size_t c : columns) {
    if (relation.schema().at(c).kind == AttributeKind::kCategorical) categorical.push_back(c);
  }
  if (spec.shape == PredicateShape::kInSet && categorical.empty()) {
    throw std::invalid_argument("in-set workloads need a categorical attribute");
  }

  AtomSampler sampler(relation, columns);
  std::mt19937_64 rng(spec.seed);
  const auto [lo, hi] = band_limits(spec.band);
  std::uniform_real_distribution<double> log_target(std::log(lo), std::log(hi));

  Workload w;
  w.name = std::string(to_string(spec.shape)) + "-" + std::string(to_string(spec.band));
  for (std::size_t i = 0; i < spec.n_queries; ++i) {
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < spec.max_attempts && !accepted; ++attempt) {
      const double target = std::exp(log_target(rng));
      std::optional<BoolExpr> expr;
      switch (spec.shape) {
        case PredicateShape::kSingleAttr:
          expr = conjunction(sampler, 1, target, rng);
          break;
        case PredicateShape::kConjunctive2:
          expr = conjunction(sampler, 2, target, rng);
          break;
        case PredicateShape::kConjunctive3:
          expr = conjunction(sampler, 3, target, rng);
          break;
        case PredicateShape::kDisjunctiveMixed: {
          std::bernoulli_distribution conj(0.5);
          const std::size_t wide = std::min<std::size_t>(2, columns.size());
          auto left = conjunction(sampler, conj(rng) ? wide : 1, target / 2.0, rng);
          auto right = conjunction(sampler, conj(rng) ? wide : 1, target / 2.0, rng);
          expr = BoolExpr::any_of({std::move(left), std::move(right)});
          break;
        }
        case PredicateShape::kInSet: {
          std::uniform_int_distribution<std::size_t> which(0, categorical.size() - 1);
          const std::size_t col = categorical[which(rng)];
          const std::size_t max_size = std::min(spec.in_set_max, relation.dictionary(col).size());
          const std::size_t min_size = std::min(std::max<std::size_t>(1, spec.in_set_min), max_size);
          std::uniform_int_distribution<std::size_t> size(min_size, max_size);
          expr = BoolExpr::atom(sampler.in_set_of_size(col, size(rng), rng));
          break;
        }
      }
      double sel = 0.0;
      try {
        sel = measure(relation, *expr);
      } catch (const UnsatisfiableFilter&) {
        continue;
      }
      if (!in_band(sel, spec.band)) continue;
      WorkloadQuery q;
      q.qid = i;
      q.filter = to_string(*expr, relation.schema());
      const std::size_t row = i % queries.size();
      auto v = queries.row(row);
      q.qvec.assign(v.begin(), v.end());
      if (query_file) q.ref = QueryVectorRef{*query_file, row};
      q.shape = spec.shape;
      q.band = spec.band;
      q.selectivity = sel;
      w.queries.push_back(std::move(q));
      accepted = true;
    }
    if (!accepted) w.unreachable.push_back(i);
  }
  return w;
}

void write_workload(std::ostream& out, const Workload& workload) {
  for (const auto& q : workload.queries) out << query_line(q) << '\n';
}

void write_workload(const std::filesystem::path& path, const Workload& workload) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write workload '" + path.string() + "'");
  write_workload(out, workload);
  if (!out) throw DataError("failed to write workload '" + path.string() + "'");
}

Workload read_workload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open workload '" + path.string() + "'");
  Workload w;
  w.name = path.stem().string();
  std::map<std::filesystem::path, VectorSet> files;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      WorkloadQuery q;
      q.qid = j.at("qid").get<std::uint64_t>();
      q.filter = j.at("filter").get<std::string>();
      const json& v = j.at("qvec");
      if (v.is_array()) {
        q.qvec = v.get<std::vector<float>>();
      } else {
        QueryVectorRef ref{v.at("file").get<std::string>(), v.at("idx").get<std::size_t>()};
        std::filesystem::path file = ref.file;
        if (file.is_relative()) file = path.parent_path() / file;
        auto it = files.find(file);
        if (it == files.end()) it = files.emplace(file, read_fvecs(file)).first;
        if (ref.idx >= it->second.size()) {
          throw DataError("query vector index " + std::to_string(ref.idx) + " out of range in '" + file.string() + "'");
        }
        auto row = it->second.row(ref.idx);
        q.qvec.assign(row.begin(), row.end());
        q.ref = std::move(ref);
      }
      if (j.contains("shape")) q.shape = parse_shape(j.at("shape").get<std::string>());
      if (j.contains("band")) q.band = parse_band(j.at("band").get<std::string>());
      if (j.contains("selectivity")) q.selectivity = j.at("selectivity").get<double>();
      w.queries.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw DataError("workload line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError("workload line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return w;
}

GroundTruth compute_ground_truth(const Relation& relation, const Workload& workload, std::size_t k) {
  if (k == 0) throw std::invalid_argument("ground truth needs K >= 1");
  GroundTruth gt;
  gt.k = k;
  gt.qids.resize(workload.queries.size());
  gt.topk.resize(workload.queries.size());
  const auto n = static_cast<std::ptrdiff_t>(workload.queries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& q = workload.queries[static_cast<std::size_t>(i)];
    gt.qids[static_cast<std::size_t>(i)] = q.qid;
    try {
      gt.topk[static_cast<std::size_t>(i)] =
          brute_force_topk(relation, q.qvec, k, parse_dnf(q.filter, relation.schema()));
    } catch (const UnsatisfiableFilter&) {
      gt.topk[static_cast<std::size_t>(i)].clear();
    }
  }
  return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write ground truth '" + path.string() + "'");
  for (std::size_t i = 0; i < truth.qids.size(); ++i) {
    json topk = json::array();
    for (const auto& n : truth.topk[i]) topk.push_back({n.pk, n.distance});
    out << json{{"qid", truth.qids[i]}, {"k", truth.k}, {"topk", topk}}.dump() << '\n';
  }
  if (!out) throw DataError("failed to write ground truth '" + path.string() + "'");
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth '" + path.string() + "'");
  GroundTruth gt;
  gt.k = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      gt.qids.push_back(j.at("qid").get<std::uint64_t>());
      std::vector<Neighbor> topk;
      for (const auto& e : j.at("topk")) topk.push_back({e.at(0).get<Key>(), e.at(1).get<float>()});
      if (j.contains("k")) {
        gt.k = std::max(gt.k, j.at("k").get<std::size_t>());
      } else {
        gt.k = std::max(gt.k, topk.size());
      }
      gt.topk.push_back(std::move(topk));
    } catch (const json::exception& e) {
      throw DataError("ground truth line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (gt.k == 0) gt.k = 10;
  return gt;
}

std::uint64_t ground_truth_key(const Relation& relation, const Workload& workload, std::size_t k) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::ostringstream os;
  write_workload(os, workload);
  const std::string text = os.str();
  fnv(h, text.data(), text.size());
  const std::uint64_t shape[3] = {k, relation.size(), relation.dim()};
  fnv(h, shape, sizeof(shape));
  fnv(h, relation.raw_vectors().data(), relation.raw_vectors().size() * sizeof(float));
  for (std::size_t c = 0; c < relation.schema().size(); ++c) {
    if (relation.schema().at(c).kind == AttributeKind::kNumeric) {
      auto col = relation.numeric_column(c);
      fnv(h, col.data(), col.size() * sizeof(double));
    } else {
      for (const auto& name : relation.dictionary(c)) fnv(h, name.data(), name.size() + 1);
      auto codes = relation.category_codes(c);
      fnv(h, codes.data(), codes.size() * sizeof(std::uint32_t));
    }
  }
  return h;
}

GroundTruth load_or_compute_ground_truth(const Relation& relation, const Workload& workload, std::size_t k,
                                         const std::filesystem::path& cache_dir) {
  char name[40];
  std::snprintf(name, sizeof(name), "gt_%016llx.bin",
                static_cast<unsigned long long>(ground_truth_key(relation, workload, k)));
  const auto path = cache_dir / name;
  constexpr char kMagic[4] = {'P', 'F', 'G', 'T'};
  {
    std::ifstream in(path, std::ios::binary);
    if (in) {
      char magic[4];
      std::uint64_t kk = 0;
      std::uint64_t count = 0;
      in.read(magic, 4);
      in.read(reinterpret_cast<char*>(&kk), 8);
      in.read(reinterpret_cast<char*>(&count), 8);
      if (in && std::memcmp(magic, kMagic, 4) == 0 && kk == k && count == workload.queries.size()) {
        GroundTruth gt;
        gt.k = k;
        bool ok = true;
        for (std::uint64_t i = 0; i < count && ok; ++i) {
          std::uint64_t qid = 0;
          std::uint32_t len = 0;
          in.read(reinterpret_cast<char*>(&qid), 8);
          in.read(reinterpret_cast<char*>(&len), 4);
          if (!in || len > k) {
            ok = false;
            break;
          }
          std::vector<Neighbor> topk(len);
          for (auto& nb : topk) {
            in.read(reinterpret_cast<char*>(&nb.pk), 4);
            in.read(reinterpret_cast<char*>(&nb.distance), 4);
          }
          ok = static_cast<bool>(in);
          gt.qids.push_back(qid);
          gt.topk.push_back(std::move(topk));
        }
        if (ok) return gt;
      }
    }
  }
  GroundTruth gt = compute_ground_truth(relation, workload, k);
  std::filesystem::create_directories(cache_dir);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (out) {
    const std::uint64_t kk = k;
    const std::uint64_t count = gt.qids.size();
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kk), 8);
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (std::size_t i = 0; i < gt.qids.size(); ++i) {
      const auto len = static_cast<std::uint32_t>(gt.topk[i].size());
      out.write(reinterpret_cast<const char*>(&gt.qids[i]), 8);
      out.write(reinterpret_cast<const char*>(&len), 4);
      for (const auto& nb : gt.topk[i]) {
        out.write(reinterpret_cast<const char*>(&nb.pk), 4);
        out.write(reinterpret_cast<const char*>(&nb.distance), 4);
      }
    }
  }
  return gt;
}

std::vector<BenchRow> run_bench(const IndexCatalog& catalog, const Workload& workload, const GroundTruth& truth,
                                const BenchConfig& config) {
  if (truth.qids.size() != workload.queries.size()) {
    throw Error("ground truth has " + std::to_string(truth.qids.size()) + " queries, workload has " +
                std::to_string(workload.queries.size()));
  }
  for (std::size_t i = 0; i < truth.qids.size(); ++i) {
    if (truth.qids[i] != workload.queries[i].qid) throw Error("ground truth qids do not match the workload");
  }
  if (config.k == 0) throw std::invalid_argument("K must be at least 1");
  if (truth.k < config.k) throw Error("ground truth was computed for a smaller K");

  const Schema& schema = catalog.relation().schema();
  std::vector<std::optional<DnfPredicate>> filters;
  for (const auto& q : workload.queries) {
    try {
      filters.emplace_back(parse_dnf(q.filter, schema));
    } catch (const UnsatisfiableFilter&) {
      filters.emplace_back(std::nullopt);
    }
  }

  // Groups in first-appearance order of (shape, band).
  std::vector<std::pair<PredicateShape, SelectivityBand>> keys;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < workload.queries.size(); ++i) {
    const auto key = std::make_pair(workload.queries[i].shape, workload.queries[i].band);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      members.emplace_back();
      it = keys.end() - 1;
    }
    members[static_cast<std::size_t>(it - keys.begin())].push_back(i);
  }

  struct Acc {
    double recall = 0.0;
    double plan = 0.0;
    double search = 0.0;
    double visited = 0.0;
  };
  auto run_one = [&](std::size_t i, std::uint32_t L, Acc& acc) {
    const auto& q = workload.queries[i];
    const std::size_t want = std::min<std::size_t>(config.k, truth.topk[i].size());
    if (!filters[i]) {
      acc.recall += 1.0;
      return;
    }
    QueryRequest req;
    req.query = q.qvec;
    req.k = config.k;
    req.queue_length = std::max(L, config.k);
    req.filter = *filters[i];
    const QueryResult r = answer(catalog, req, config.planner);
    acc.plan += r.stats.plan_seconds;
    acc.search += r.stats.search_seconds;
    acc.visited += static_cast<double>(r.stats.total_visited());
    if (want == 0) {
      acc.recall += r.hits.empty() ? 1.0 : 0.0;
    } else {
      std::vector<Neighbor> t(truth.topk[i].begin(), truth.topk[i].begin() + static_cast<std::ptrdiff_t>(want));
      acc.recall += recall_at_k(r.hits, t, want);
    }
  };

  const int threads = std::max(1, config.threads);
  std::vector<BenchRow> rows;
  for (std::size_t g = 0; g < keys.size(); ++g) {
    const auto& ids = members[g];
    const auto n = static_cast<std::ptrdiff_t>(ids.size());
    if (config.warmup && !config.queue_lengths.empty()) {
      Acc ignored;
      for (std::size_t i : ids) run_one(i, config.queue_lengths.front(), ignored);
    }
    for (std::uint32_t L : config.queue_lengths) {
      std::vector<Acc> per_thread(static_cast<std::size_t>(threads));
      const auto start = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (std::ptrdiff_t j = 0; j < n; ++j) {
        int t = 0;
#ifdef _OPENMP
        t = omp_get_thread_num();
#endif
        run_one(ids[static_cast<std::size_t>(j)], L, per_thread[static_cast<std::size_t>(t)]);
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      Acc total;
      for (const auto& a : per_thread) {
        total.recall += a.recall;
        total.plan += a.plan;
        total.search += a.search;
        total.visited += a.visited;
      }
      BenchRow row;
      row.workload = workload.name;
      row.shape = std::string(to_string(keys[g].first));
      row.band = std::string(to_string(keys[g].second));
      row.queue_length = L;
      row.queries = ids.size();
      row.recall = ids.empty() ? 0.0 : total.recall / static_cast<double>(ids.size());
      row.qps = wall > 0.0 ? static_cast<double>(ids.size()) / wall : 0.0;
      row.plan_fraction = total.plan + total.search > 0.0 ? total.plan / (total.plan + total.search) : 0.0;
      row.mean_visited = ids.empty() ? 0.0 : total.visited / static_cast<double>(ids.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool header) {
  if (header) out << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.workload << ',' << r.shape << ',' << r.band << ',' << r.queue_length << ',' << format_double(r.recall)
        << ',' << format_double(r.qps) << ',' << format_double(r.plan_fraction) << '\n';
  }
}

}  // namespace pathfinder::bench
