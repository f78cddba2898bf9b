#include "fixtures.hpp"

#include <memory>
#include <random>

#include "reference.hpp"

namespace pftest {

using namespace pathfinder;

namespace {

BuildParams tiny_params() {
  BuildParams p;
  p.max_degree = 8;
  p.build_queue = 24;
  return p;
}

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> normal;
  std::vector<float> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

const TreeSplit kLeaf;

}  // namespace

IndexCatalog citation_topic_catalog() {
  std::mt19937_64 rng(3);
  AttributeTable t;
  t.schema = Schema({{"citations", AttributeKind::kNumeric},
                     {"topic", AttributeKind::kCategorical},
                     {"year", AttributeKind::kNumeric}});
  VectorSet vs{4, {}};
  const char* topics[] = {"DB", "ML", "CV"};
  std::size_t row = 0;
  for (int rep = 0; rep < 10; ++rep) {
    for (int c = 0; c <= 20; ++c, ++row) {
      const std::size_t topic = row % 3;
      t.rows.push_back({double(c), std::string(topics[topic]), 2000.0 + 5.0 * double(topic) + double(row % 5)});
      const auto v = random_vector(rng, 4);
      vs.data.insert(vs.data.end(), v.begin(), v.end());
    }
  }
  auto rel = std::make_shared<const Relation>(ingest_relation(std::move(t), std::move(vs)));
  CatalogBuilder b(rel, tiny_params(), 17);
  b.add_tree_index("citations", TreeSplit{{4, 10}, {TreeSplit{{1}, {kLeaf, kLeaf}}, TreeSplit{{7}, {kLeaf, kLeaf}},
                                                    TreeSplit{{15}, {kLeaf, kLeaf}}}});
  b.add_hash_index("topic");
  return b.build(1);
}

IndexCatalog borrowing_catalog() {
  std::mt19937_64 rng(5);
  std::vector<std::vector<float>> vecs;
  std::vector<double> a, bcol;
  for (int rep = 0; rep < 10; ++rep) {
    for (int x = 1; x <= 16; ++x) {
      const double shift = x <= 4 ? 2 : x <= 8 ? 0 : x <= 12 ? -2 : -3;
      a.push_back(x);
      bcol.push_back(x + shift);
      vecs.push_back(random_vector(rng, 4));
    }
  }
  auto rel = relation_from(vecs, {{"a", a}, {"b", bcol}});
  CatalogBuilder b(rel, tiny_params(), 9);
  b.add_tree_index("a", TreeSplit{{8}, {TreeSplit{{4}, {kLeaf, kLeaf}}, TreeSplit{{12}, {kLeaf, kLeaf}}}});
  return b.build(1);
}

IndexCatalog merge_catalog() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uniform(0.0, 100.0);
  std::vector<std::vector<float>> vecs;
  std::vector<double> a, bcol;
  for (int i = 0; i < 400; ++i) {
    a.push_back(uniform(rng));
    bcol.push_back(uniform(rng));
    vecs.push_back(random_vector(rng, 4));
  }
  auto rel = relation_from(vecs, {{"a", a}, {"b", bcol}});
  CatalogBuilder b(rel, tiny_params(), 4);
  b.add_tree_index("a", TreeSplit{{50}, {kLeaf, kLeaf}});
  b.add_tree_index("b", TreeSplit{{50}, {kLeaf, kLeaf}});
  return b.build(1);
}

}  // namespace pftest
