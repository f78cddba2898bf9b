#include "pathfinder/vamana.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pathfinder/error.hpp"

namespace pathfinder {

void BuildParams::validate() const {
  if (max_degree < 2) throw IndexBuildError("max degree R must be at least 2");
  if (build_queue < max_degree) throw IndexBuildError("build queue length must be at least R");
  if (!(prune_alpha >= 1.0f)) throw IndexBuildError("prune alpha must be at least 1");
  if (batch_size < 1) throw IndexBuildError("batch size must be at least 1");
}

void SearchParams::validate() const {
  if (k < 1) throw std::invalid_argument("K must be at least 1");
  if (queue_length < k) throw std::invalid_argument("queue length L must be at least K");
}

std::vector<Key> VamanaGraph::neighbors(Key pk) const {
  auto local = local_of(pk);
  if (!local) throw std::out_of_range("pk " + std::to_string(pk) + " is not a member of the graph");
  std::vector<Key> out;
  for (std::uint32_t n : neighbors_local(*local)) out.push_back(members_[n]);
  return out;
}

std::optional<std::uint32_t> VamanaGraph::local_of(Key pk) const {
  auto it = std::lower_bound(members_.begin(), members_.end(), pk);
  if (it == members_.end() || *it != pk) return std::nullopt;
  return static_cast<std::uint32_t>(it - members_.begin());
}

class GraphAssembler {
 public:
  static VamanaGraph make(std::vector<Key> members, const std::vector<std::vector<std::uint32_t>>& adjacency,
                          std::uint32_t entry_local, std::uint32_t max_degree) {
    VamanaGraph g;
    g.max_degree_ = max_degree;
    g.entry_ = entry_local;
    g.degree_.resize(members.size());
    g.slots_.assign(members.size() * max_degree, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& adj = adjacency[i];
      g.degree_[i] = static_cast<std::uint32_t>(adj.size());
      std::copy(adj.begin(), adj.end(), g.slots_.begin() + static_cast<std::ptrdiff_t>(i * max_degree));
    }
    g.members_ = std::move(members);
    return g;
  }
};

VamanaGraph VamanaGraph::from_adjacency(std::vector<Key> members, const std::vector<std::vector<Key>>& adjacency,
                                        Key entry, std::uint32_t max_degree) {
  if (members.empty()) throw IndexBuildError("graph needs at least one member");
  if (max_degree == 0) throw IndexBuildError("max degree must be positive");
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (members[i - 1] >= members[i]) throw IndexBuildError("graph members must be strictly increasing");
  }
  if (adjacency.size() != members.size()) throw IndexBuildError("adjacency list count differs from member count");
  auto local = [&](Key pk) -> std::uint32_t {
    auto it = std::lower_bound(members.begin(), members.end(), pk);
    if (it == members.end() || *it != pk) throw IndexBuildError("neighbor " + std::to_string(pk) + " is not a member");
    return static_cast<std::uint32_t>(it - members.begin());
  };
  std::vector<std::vector<std::uint32_t>> adj(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (adjacency[i].size() > max_degree) {
      throw IndexBuildError("member " + std::to_string(members[i]) + " exceeds the degree bound");
    }
    for (Key pk : adjacency[i]) {
      const std::uint32_t l = local(pk);
      if (l == i) throw IndexBuildError("self loop on " + std::to_string(pk));
      if (std::find(adj[i].begin(), adj[i].end(), l) != adj[i].end()) {
        throw IndexBuildError("duplicate edge " + std::to_string(members[i]) + " -> " + std::to_string(pk));
      }
      adj[i].push_back(l);
    }
  }
  const std::uint32_t entry_local = local(entry);
  return GraphAssembler::make(std::move(members), adj, entry_local, max_degree);
}

namespace {

struct QueueEntry {
  float distance;
  Key pk;
  std::uint32_t local;
  bool expanded;
};

bool closer(const QueueEntry& a, const QueueEntry& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.pk < b.pk);
}

// Per-thread visited marks, reset in O(1) by bumping the epoch.
class VisitedSet {
 public:
  void reset(std::size_t n) {
    if (marks_.size() < n) marks_.resize(n, 0);
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  bool insert(std::uint32_t i) {
    if (marks_[i] == epoch_) return false;
    marks_[i] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> marks_;
  std::uint32_t epoch_ = 0;
};

VisitedSet& thread_visited() {
  thread_local VisitedSet set;
  return set;
}

// Bounded best-first traversal shared by build and query. on_visit sees every
// vertex whose distance is computed, in visit order.
template <typename Neighbors, typename Distance, typename OnVisit>
void navigate(std::size_t card, std::uint32_t entry, std::uint32_t queue_length, Neighbors&& neighbors_of,
              Distance&& distance_of, OnVisit&& on_visit, std::vector<QueueEntry>& queue, SearchStats* stats,
              SearchTrace* trace) {
  VisitedSet& visited = thread_visited();
  visited.reset(card);
  queue.clear();
  queue.reserve(queue_length + 1);

  auto [entry_pk, entry_d] = distance_of(entry);
  visited.insert(entry);
  queue.push_back({entry_d, entry_pk, entry, false});
  on_visit(entry, entry_pk, entry_d);
  std::size_t visits = 1;
  std::size_t expansions = 0;

  std::size_t cursor = 0;  // position of the closest unexpanded entry
  while (cursor < queue.size()) {
    QueueEntry& cur = queue[cursor];
    cur.expanded = true;
    ++expansions;
    if (trace) trace->expanded.push_back(cur.pk);
    const std::uint32_t cur_local = cur.local;
    std::size_t next_cursor = queue.size();
    for (std::uint32_t nb : neighbors_of(cur_local)) {
      if (!visited.insert(nb)) continue;
      auto [pk, d] = distance_of(nb);
      ++visits;
      on_visit(nb, pk, d);
      QueueEntry cand{d, pk, nb, false};
      if (queue.size() >= queue_length && !closer(cand, queue.back())) {
        if (trace) trace->rejected.push_back(pk);
        continue;
      }
      auto pos = std::upper_bound(queue.begin(), queue.end(), cand, closer);
      const auto idx = static_cast<std::size_t>(pos - queue.begin());
      queue.insert(pos, cand);
      if (queue.size() > queue_length) {
        if (trace) trace->evicted.push_back(queue.back().pk);
        queue.pop_back();
      }
      if (idx < next_cursor) next_cursor = idx;
    }
    // Advance to the closest unexpanded entry.
    std::size_t scan = std::min(next_cursor, cursor + 1);
    while (scan < queue.size() && queue[scan].expanded) ++scan;
    cursor = scan;
  }
  if (stats) {
    stats->distance_computations += visits;
    stats->expansions += expansions;
  }
}

std::vector<Neighbor> top_k(const std::vector<QueueEntry>& queue, std::size_t k) {
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < queue.size() && i < k; ++i) out.push_back({queue[i].pk, queue[i].distance});
  return out;
}

int resolve_threads(int threads) {
#ifdef _OPENMP
  return threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
  return 1;
#endif
}

// Local-id prune used during construction.
std::vector<std::uint32_t> prune_local(const Relation& relation, const std::vector<Key>& members, std::uint32_t v,
                                       std::vector<QueueEntry>& cands, std::uint32_t max_degree, float alpha) {
  std::sort(cands.begin(), cands.end(), closer);
  cands.erase(std::unique(cands.begin(), cands.end(),
                          [](const QueueEntry& a, const QueueEntry& b) { return a.local == b.local; }),
              cands.end());
  std::vector<std::uint32_t> kept;
  std::vector<char> dropped(cands.size(), 0);
  for (std::size_t i = 0; i < cands.size() && kept.size() < max_degree; ++i) {
    if (dropped[i] || cands[i].local == v) continue;
    kept.push_back(cands[i].local);
    const Key star = members[cands[i].local];
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      if (dropped[j]) continue;
      if (alpha * relation.distance_between(star, members[cands[j].local]) <= cands[j].distance) dropped[j] = 1;
    }
  }
  return kept;
}

}  // namespace

std::vector<Key> robust_prune(const Relation& relation, Key v, std::vector<Neighbor> candidates,
                              std::uint32_t max_degree, float alpha) {
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Neighbor& a, const Neighbor& b) { return a.pk == b.pk; }),
                   candidates.end());
  std::vector<Key> kept;
  std::vector<char> dropped(candidates.size(), 0);
  for (std::size_t i = 0; i < candidates.size() && kept.size() < max_degree; ++i) {
    if (dropped[i] || candidates[i].pk == v) continue;
    kept.push_back(candidates[i].pk);
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      if (dropped[j]) continue;
      if (alpha * relation.distance_between(candidates[i].pk, candidates[j].pk) <= candidates[j].distance) {
        dropped[j] = 1;
      }
    }
  }
  return kept;
}

Key find_medoid(const Relation& relation, std::span<const Key> members, std::uint64_t seed, std::size_t sample_size) {
  if (members.empty()) throw IndexBuildError("medoid of an empty member set");
  std::vector<Key> sample(members.begin(), members.end());
  if (sample.size() > sample_size) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, sample.size() - 1);
      std::swap(sample[i], sample[pick(rng)]);
    }
    sample.resize(sample_size);
  }
  Key best = members[0];
  double best_sum = std::numeric_limits<double>::infinity();
  for (Key m : members) {
    double sum = 0.0;
    for (Key s : sample) sum += relation.distance_between(m, s);
    if (sum < best_sum || (sum == best_sum && m < best)) {
      best_sum = sum;
      best = m;
    }
  }
  return best;
}

VamanaGraph build_vamana(const Relation& relation, std::span<const Key> members_in, const BuildParams& params,
                         std::uint64_t seed, int threads) {
  params.validate();
  if (members_in.empty()) throw IndexBuildError("cannot build a graph over an empty member set");
  std::vector<Key> members(members_in.begin(), members_in.end());
  std::sort(members.begin(), members.end());
  if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
    throw IndexBuildError("duplicate member pk");
  }
  for (Key pk : members) {
    if (pk >= relation.size()) throw IndexBuildError("member pk " + std::to_string(pk) + " not in relation");
  }
  const std::size_t n = members.size();
  const std::uint32_t R = params.max_degree;

  std::mt19937_64 rng(seed);
  const Key medoid = find_medoid(relation, members, rng());
  const auto entry = static_cast<std::uint32_t>(std::lower_bound(members.begin(), members.end(), medoid) - members.begin());

  std::vector<std::vector<std::uint32_t>> adj(n);
  if (n <= std::size_t{R} + 1) {
    for (std::uint32_t i = 0; i < n; ++i) {
      std::vector<QueueEntry> all;
      for (std::uint32_t j = 0; j < n; ++j) {
        if (j != i) all.push_back({relation.distance_between(members[i], members[j]), members[j], j, false});
      }
      std::sort(all.begin(), all.end(), closer);
      for (const auto& e : all) adj[i].push_back(e.local);
    }
    return GraphAssembler::make(std::move(members), adj, entry, R);
  }

  // Random R-regular start.
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    while (adj[i].size() < R) {
      const std::uint32_t j = pick(rng);
      if (j != i && std::find(adj[i].begin(), adj[i].end(), j) == adj[i].end()) adj[i].push_back(j);
    }
  }

  const int nthreads = resolve_threads(threads);
  std::vector<std::uint32_t> order(n);
  const float alphas[2] = {1.0f, params.prune_alpha};
  for (float alpha : alphas) {
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t stop = std::min(n, start + params.batch_size);
      const auto batch = static_cast<std::ptrdiff_t>(stop - start);
      std::vector<std::vector<std::uint32_t>> fresh(static_cast<std::size_t>(batch));

      // Search and prune against a frozen graph.
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
      for (std::ptrdiff_t b = 0; b < batch; ++b) {
        const std::uint32_t v = order[start + static_cast<std::size_t>(b)];
        const auto query = relation.vector(members[v]);
        std::vector<QueueEntry> queue;
        std::vector<QueueEntry> expanded;
        navigate(
            n, entry, params.build_queue, [&](std::uint32_t l) -> const std::vector<std::uint32_t>& { return adj[l]; },
            [&](std::uint32_t l) { return std::pair<Key, float>{members[l], relation.distance_to(query, members[l])}; },
            [](std::uint32_t, Key, float) {}, queue, nullptr, nullptr);
        for (const auto& e : queue) {
          if (e.expanded) expanded.push_back(e);
        }
        for (std::uint32_t nb : adj[v]) {
          expanded.push_back({relation.distance_between(members[v], members[nb]), members[nb], nb, false});
        }
        fresh[static_cast<std::size_t>(b)] = prune_local(relation, members, v, expanded, R, alpha);
      }

      // Apply out-edges, then group reverse edges by target in batch order.
      std::vector<std::pair<std::uint32_t, std::uint32_t>> reverse;  // (target, source)
      for (std::ptrdiff_t b = 0; b < batch; ++b) {
        const std::uint32_t v = order[start + static_cast<std::size_t>(b)];
        adj[v] = std::move(fresh[static_cast<std::size_t>(b)]);
        for (std::uint32_t t : adj[v]) reverse.emplace_back(t, v);
      }
      std::stable_sort(reverse.begin(), reverse.end(),
                       [](const auto& x, const auto& y) { return x.first < y.first; });
      std::vector<std::size_t> group_begin;
      for (std::size_t i = 0; i < reverse.size(); ++i) {
        if (i == 0 || reverse[i].first != reverse[i - 1].first) group_begin.push_back(i);
      }
      group_begin.push_back(reverse.size());
      const auto groups = static_cast<std::ptrdiff_t>(group_begin.size() - 1);

#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
      for (std::ptrdiff_t gi = 0; gi < groups; ++gi) {
        const std::uint32_t t = reverse[group_begin[static_cast<std::size_t>(gi)]].first;
        auto& list = adj[t];
        bool changed = false;
        for (std::size_t i = group_begin[static_cast<std::size_t>(gi)]; i < group_begin[static_cast<std::size_t>(gi) + 1]; ++i) {
          const std::uint32_t s = reverse[i].second;
          if (s != t && std::find(list.begin(), list.end(), s) == list.end()) {
            list.push_back(s);
            changed = true;
          }
        }
        if (changed && list.size() > R) {
          std::vector<QueueEntry> cands;
          cands.reserve(list.size());
          for (std::uint32_t nb : list) {
            cands.push_back({relation.distance_between(members[t], members[nb]), members[nb], nb, false});
          }
          list = prune_local(relation, members, t, cands, R, alpha);
        }
      }
    }
  }
  return GraphAssembler::make(std::move(members), adj, entry, R);
}

std::vector<Neighbor> best_first_search(const VamanaGraph& graph, const Relation& relation,
                                        std::span<const float> query, const SearchParams& params, SearchStats* stats,
                                        SearchTrace* trace) {
  params.validate();
  if (graph.empty()) throw std::invalid_argument("search on an empty graph");
  if (query.size() != relation.dim()) throw DataError("query dimension does not match the relation");
  std::vector<QueueEntry> queue;
  navigate(
      graph.card(), graph.entry_local(), params.queue_length,
      [&](std::uint32_t l) { return graph.neighbors_local(l); },
      [&](std::uint32_t l) {
        const Key pk = graph.member(l);
        return std::pair<Key, float>{pk, relation.distance_to(query, pk)};
      },
      [](std::uint32_t, Key, float) {}, queue, stats, trace);
  return top_k(queue, params.k);
}

std::vector<Neighbor> oor_search(const VamanaGraph& graph, const Relation& relation, std::span<const float> query,
                                 const SearchParams& params, const RowMatcher& filter, SearchStats* stats,
                                 SearchTrace* trace) {
  params.validate();
  if (graph.empty()) throw std::invalid_argument("search on an empty graph");
  if (query.size() != relation.dim()) throw DataError("query dimension does not match the relation");
  std::vector<QueueEntry> queue;
  std::vector<Neighbor> results;  // max-heap of the best K passing vertices
  const std::size_t k = params.k;
  navigate(
      graph.card(), graph.entry_local(), params.queue_length,
      [&](std::uint32_t l) { return graph.neighbors_local(l); },
      [&](std::uint32_t l) {
        const Key pk = graph.member(l);
        return std::pair<Key, float>{pk, relation.distance_to(query, pk)};
      },
      [&](std::uint32_t, Key pk, float d) {
        if (!filter(pk)) return;
        Neighbor cand{pk, d};
        if (results.size() < k) {
          results.push_back(cand);
          std::push_heap(results.begin(), results.end());
        } else if (cand < results.front()) {
          std::pop_heap(results.begin(), results.end());
          results.back() = cand;
          std::push_heap(results.begin(), results.end());
        }
      },
      queue, stats, trace);
  std::sort_heap(results.begin(), results.end());
  return results;
}

std::vector<Neighbor> oor_search(const VamanaGraph& graph, const Relation& relation, std::span<const float> query,
                                 const SearchParams& params, const DnfPredicate& filter, SearchStats* stats) {
  return oor_search(graph, relation, query, params, RowMatcher(filter, relation), stats, nullptr);
}

namespace {

constexpr char kMagic[4] = {'P', 'F', 'V', 'G'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw DataError("truncated graph file");
  return std::uint32_t{buf[0]} | (std::uint32_t{buf[1]} << 8) | (std::uint32_t{buf[2]} << 16) |
         (std::uint32_t{buf[3]} << 24);
}

}  // namespace

void write_graph(std::ostream& out, const VamanaGraph& graph) {
  out.write(kMagic, 4);
  put_u32(out, kGraphFormatVersion);
  put_u32(out, graph.max_degree());
  put_u32(out, static_cast<std::uint32_t>(graph.card()));
  put_u32(out, graph.empty() ? 0 : graph.entry());
  for (Key pk : graph.members()) put_u32(out, pk);
  for (std::uint32_t l = 0; l < graph.card(); ++l) {
    auto nbs = graph.neighbors_local(l);
    put_u32(out, static_cast<std::uint32_t>(nbs.size()));
    for (std::uint32_t nb : nbs) put_u32(out, graph.member(nb));
  }
  if (!out) throw DataError("failed to write graph");
}

VamanaGraph read_graph(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a graph file (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kGraphFormatVersion) throw DataError("unsupported graph format version " + std::to_string(version));
  const std::uint32_t max_degree = get_u32(in);
  const std::uint32_t card = get_u32(in);
  const Key entry = get_u32(in);
  if (card == 0) throw DataError("graph file has no members");
  std::vector<Key> members(card);
  for (auto& m : members) m = get_u32(in);
  std::vector<std::vector<Key>> adjacency(card);
  for (auto& list : adjacency) {
    const std::uint32_t degree = get_u32(in);
    if (degree > max_degree) throw DataError("graph file degree exceeds R");
    list.resize(degree);
    for (auto& pk : list) pk = get_u32(in);
  }
  try {
    return VamanaGraph::from_adjacency(std::move(members), adjacency, entry, max_degree);
  } catch (const IndexBuildError& e) {
    throw DataError(std::string("corrupt graph file: ") + e.what());
  }
}

}  // namespace pathfinder
