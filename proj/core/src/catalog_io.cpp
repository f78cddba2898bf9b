#include "pathfinder/catalog_io.hpp"

#include <fstream>

#include <json.hpp>

#include "pathfinder/dataset_io.hpp"
#include "pathfinder/error.hpp"

namespace pathfinder {

using nlohmann::json;

namespace {

json bound_json(const std::optional<Bound>& b) {
  if (!b) return nullptr;
  return json{{"value", b->value}, {"inclusive", b->inclusive}};
}

std::optional<Bound> bound_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Bound{j.at("value").get<double>(), j.at("inclusive").get<bool>()};
}

json predicate_json(const NodePredicate& p, const Schema& schema) {
  if (p.is_all()) return nullptr;
  const AtomicPredicate& a = p.atom();
  json j{{"column", a.column()}, {"text", to_string(a, schema)}};
  if (a.is_range()) {
    j["lower"] = bound_json(a.as_range().lower);
    j["upper"] = bound_json(a.as_range().upper);
  } else {
    j["in"] = a.as_in_set().values;
  }
  return j;
}

NodePredicate predicate_from(const json& j) {
  if (j.is_null()) return NodePredicate::all();
  const auto column = j.at("column").get<std::size_t>();
  if (j.contains("in")) return NodePredicate(AtomicPredicate::in_set(column, j.at("in").get<std::set<std::string>>()));
  return NodePredicate(AtomicPredicate::range(column, bound_from(j.at("lower")), bound_from(j.at("upper"))));
}

json range_json(const AttributeRange& r) {
  if (r.kind == AttributeKind::kNumeric) return json{{"min", r.min}, {"max", r.max}};
  return json{{"categories", r.categories}};
}

AttributeRange range_from(const json& j, AttributeKind kind) {
  AttributeRange r;
  r.kind = kind;
  if (kind == AttributeKind::kNumeric) {
    r.min = j.at("min").get<double>();
    r.max = j.at("max").get<double>();
  } else {
    r.categories = j.at("categories").get<std::set<std::string>>();
  }
  return r;
}

std::filesystem::path graph_path(const std::filesystem::path& dir, NodeId id) {
  return dir / "graphs" / ("node_" + std::to_string(id) + ".pfg");
}

}  // namespace

void save_catalog(const IndexCatalog& catalog, const std::filesystem::path& dir) {
  const Relation& rel = catalog.relation();
  const Schema& schema = rel.schema();
  std::filesystem::create_directories(dir / "graphs");

  VectorSet vs{rel.dim(), rel.raw_vectors()};
  write_fvecs(dir / "data.fvecs", vs);
  AttributeTable table{schema, {}};
  table.rows.reserve(rel.size());
  for (Key pk = 0; pk < rel.size(); ++pk) {
    std::vector<AttributeValue> row;
    for (std::size_t c = 0; c < schema.size(); ++c) row.push_back(rel.value(c, pk));
    table.rows.push_back(std::move(row));
  }
  write_attribute_csv(dir / "attrs.csv", table);

  json m;
  m["version"] = kManifestVersion;
  m["metric"] = std::string(to_string(rel.metric()));
  m["dim"] = rel.dim();
  m["size"] = rel.size();
  m["seed"] = catalog.seed();
  const BuildParams& bp = catalog.build_params();
  m["build"] = {{"max_degree", bp.max_degree},
                {"build_queue", bp.build_queue},
                {"prune_alpha", bp.prune_alpha},
                {"batch_size", bp.batch_size}};
  json attrs = json::array();
  for (const auto& a : schema.attributes()) attrs.push_back({{"name", a.name}, {"kind", std::string(to_string(a.kind))}});
  m["schema"] = attrs;

  json indexes = json::array();
  for (const auto& idx : catalog.indexes()) {
    indexes.push_back({{"kind", std::string(to_string(idx.kind))},
                       {"attribute", schema.at(idx.column).name},
                       {"column", idx.column},
                       {"fanout", idx.fanout},
                       {"height", idx.height},
                       {"top", idx.top},
                       {"leaves", idx.leaves},
                       {"nodes", idx.nodes}});
  }
  m["indexes"] = indexes;

  json nodes = json::array();
  for (const auto& n : catalog.nodes()) {
    json ranges = json::array();
    for (const auto& r : n.attr_ranges) ranges.push_back(range_json(r));
    nodes.push_back({{"id", n.id},
                     {"index", n.index ? json(*n.index) : json(nullptr)},
                     {"predicate", predicate_json(n.predicate, schema)},
                     {"card", n.card},
                     {"parent", n.parent == kNoParent ? json(nullptr) : json(n.parent)},
                     {"depth", n.depth},
                     {"children", n.children},
                     {"attr_ranges", ranges}});
    std::ofstream g(graph_path(dir, n.id), std::ios::binary | std::ios::trunc);
    if (!g) throw DataError("cannot write graph for node " + std::to_string(n.id));
    write_graph(g, *n.graph);
  }
  m["nodes"] = nodes;
  m["correlations"] = catalog.correlations();

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write manifest in '" + dir.string() + "'");
  out << m.dump(1) << '\n';
  if (!out) throw DataError("failed to write manifest");
}

IndexCatalog load_catalog(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no manifest.json in '" + dir.string() + "'");
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }

  try {
    const int version = m.at("version").get<int>();
    if (version != kManifestVersion) throw DataError("unsupported manifest version " + std::to_string(version));

    std::vector<AttributeSpec> specs;
    for (const auto& a : m.at("schema")) {
      const auto kind = a.at("kind").get<std::string>();
      if (kind != "numeric" && kind != "categorical") throw DataError("unknown attribute kind '" + kind + "'");
      specs.push_back({a.at("name").get<std::string>(),
                       kind == "numeric" ? AttributeKind::kNumeric : AttributeKind::kCategorical});
    }
    Schema schema(std::move(specs));
    auto rel = std::make_shared<Relation>(ingest_relation(read_attribute_csv(dir / "attrs.csv", schema),
                                                          read_fvecs(dir / "data.fvecs"),
                                                          parse_metric(m.at("metric").get<std::string>())));
    if (rel->size() != m.at("size").get<std::size_t>() || rel->dim() != m.at("dim").get<std::size_t>()) {
      throw DataError("relation files do not match the manifest");
    }

    IndexCatalog catalog;
    catalog.relation_ = rel;
    catalog.seed_ = m.at("seed").get<std::uint64_t>();
    const auto& b = m.at("build");
    catalog.params_.max_degree = b.at("max_degree").get<std::uint32_t>();
    catalog.params_.build_queue = b.at("build_queue").get<std::uint32_t>();
    catalog.params_.prune_alpha = b.at("prune_alpha").get<float>();
    catalog.params_.batch_size = b.at("batch_size").get<std::uint32_t>();

    for (const auto& j : m.at("indexes")) {
      AttributeIndex idx;
      idx.kind = j.at("kind").get<std::string>() == "tree" ? IndexKind::kTree : IndexKind::kHash;
      idx.column = j.at("column").get<std::size_t>();
      idx.fanout = j.at("fanout").get<std::uint32_t>();
      idx.height = j.at("height").get<std::uint32_t>();
      idx.top = j.at("top").get<std::vector<NodeId>>();
      idx.leaves = j.at("leaves").get<std::vector<NodeId>>();
      idx.nodes = j.at("nodes").get<std::vector<NodeId>>();
      catalog.indexes_.push_back(std::move(idx));
    }

    for (const auto& j : m.at("nodes")) {
      IndexNode n;
      n.id = j.at("id").get<NodeId>();
      if (n.id != catalog.nodes_.size()) throw DataError("manifest node ids are not dense");
      if (!j.at("index").is_null()) n.index = j.at("index").get<std::size_t>();
      n.predicate = predicate_from(j.at("predicate"));
      n.card = j.at("card").get<std::size_t>();
      n.parent = j.at("parent").is_null() ? kNoParent : j.at("parent").get<NodeId>();
      n.depth = j.at("depth").get<std::uint32_t>();
      n.children = j.at("children").get<std::vector<NodeId>>();
      const auto& ranges = j.at("attr_ranges");
      if (ranges.size() != schema.size()) throw DataError("attribute range count does not match the schema");
      for (std::size_t c = 0; c < schema.size(); ++c) n.attr_ranges.push_back(range_from(ranges[c], schema.at(c).kind));
      std::ifstream g(graph_path(dir, n.id), std::ios::binary);
      if (!g) throw DataError("missing graph file for node " + std::to_string(n.id));
      n.graph = std::make_shared<const VamanaGraph>(read_graph(g));
      if (n.graph->card() != n.card) throw DataError("graph of node " + std::to_string(n.id) + " has the wrong size");
      catalog.nodes_.push_back(std::move(n));
    }
    if (catalog.nodes_.empty()) throw DataError("manifest has no root node");
    catalog.correlations_ = m.at("correlations").get<CorrelationTable>();
    return catalog;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  } catch (const FilterError& e) {
    throw DataError(std::string("malformed manifest predicate: ") + e.what());
  }
}

}  // namespace pathfinder
