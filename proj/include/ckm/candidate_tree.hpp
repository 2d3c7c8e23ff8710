#pragma once

#include <atomic>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "ckm/geometry.hpp"
#include "ckm/parallel.hpp"
#include "ckm/rng.hpp"
#include "ckm/sampling.hpp"
#include "ckm/subsets.hpp"

namespace ckm {

/// Shape of the depth-k sampling tree shared by the k-means and k-median
/// list algorithms.
struct TreeShape {
  std::size_t k = 1;
  std::size_t sample_size = 1;  // N: points drawn per node
  std::size_t subset_size = 1;  // M: subset size, also copies per center
  std::size_t repeats = 1;
  std::optional<std::uint64_t> subset_budget;  // nullopt: enumerate all
  SamplingMode sampling = SamplingMode::squared;
};

struct TreeStats {
  std::uint64_t nodes_visited = 0;
  std::uint64_t subsets_enumerated = 0;
  std::uint64_t leaves = 0;

  TreeStats& operator+=(const TreeStats& o) {
    nodes_visited += o.nodes_visited;
    subsets_enumerated += o.subsets_enumerated;
    leaves += o.leaves;
    return *this;
  }
};

/// Identifies the root-level subtree a leaf came from. Leaves ordered by
/// (repeat, task) and then by emission order within a task reproduce the
/// sequential depth-first order.
struct LeafId {
  std::uint64_t repeat = 0;
  std::uint64_t task = 0;
};

/// Maps a subset T (as a point block) to candidate centers, appended
/// row-major to `out`. Must be callable concurrently.
template <class G>
concept CandidateGenerator = requires(const G& g, const PointBlock& t, std::vector<double>& out) {
  { g(t, out) };
};

/// The k-means choice: the centroid of T.
struct CentroidCandidate {
  void operator()(const PointBlock& t, std::vector<double>& out) const {
    const Point c = centroid(t);
    out.insert(out.end(), c.begin(), c.end());
  }
};

namespace detail {

struct TreeNode {
  CenterSet centers;
  SamplerState state;
  std::vector<std::uint64_t> path;
  std::vector<double> pool;  // S': the N samples then M copies of each center
};

// Draw S w.r.t. the node's centers and append the center copies.
inline void fill_pool(TreeNode& node, const Dataset& data, const TreeShape& shape, RngStream& rng) {
  const std::size_t d = data.dim();
  const auto picks = sample(node.state, shape.sample_size, rng);
  node.pool.clear();
  node.pool.reserve((picks.size() + node.centers.size() * shape.subset_size) * d);
  for (auto i : picks) {
    const auto r = data.row(i);
    node.pool.insert(node.pool.end(), r.begin(), r.end());
  }
  for (std::size_t c = 0; c < node.centers.size(); ++c) {
    const auto r = node.centers.row(c);
    for (std::size_t rep = 0; rep < shape.subset_size; ++rep) {
      node.pool.insert(node.pool.end(), r.begin(), r.end());
    }
  }
}

struct Frame {
  std::unique_ptr<TreeNode> owned;
  const TreeNode* node = nullptr;
  std::optional<SubsetSource> source;
  std::optional<Combination> single;  // task roots carry one preassigned subset
  std::uint64_t subset_ordinal = 0;
  std::uint64_t current_subset = 0;
  std::vector<double> candidates;
  std::size_t candidate_count = 0;
  std::size_t next_candidate = 0;
};

template <class Generator, class Visitor>
class TreeWalker {
 public:
  TreeWalker(const Dataset& data, const TreeShape& shape, const Generator& gen, std::uint64_t seed,
             Visitor& visit, std::atomic<bool>& stop)
      : data_(data), shape_(shape), gen_(gen), seed_(seed), visit_(visit), stop_(stop) {}

  std::unique_ptr<TreeNode> expand(CenterSet centers, SamplerState state, std::vector<std::uint64_t> path,
                                   std::optional<SubsetSource>& source) {
    auto node = std::make_unique<TreeNode>();
    node->centers = std::move(centers);
    node->state = std::move(state);
    node->path = std::move(path);
    RngStream rng(seed_, node->path);
    fill_pool(*node, data_, shape_, rng);
    source.emplace(node->pool.size() / data_.dim(), shape_.subset_size, shape_.subset_budget, rng);
    ++stats.nodes_visited;
    return node;
  }

  // Explores every child generated from one subset of `parent` and their
  // subtrees, depth first.
  void run_task(const TreeNode& parent, const Combination& subset, std::uint64_t subset_ordinal, LeafId id) {
    std::vector<Frame> stack;
    Frame root;
    root.node = &parent;
    root.single = subset;
    root.subset_ordinal = subset_ordinal;
    stack.push_back(std::move(root));
    Combination combo;
    const std::size_t d = data_.dim();
    while (!stack.empty() && !stop_.load(std::memory_order_relaxed)) {
      Frame& top = stack.back();
      if (top.next_candidate < top.candidate_count) {
        const std::size_t q = top.next_candidate++;
        std::span<const double> cand(&top.candidates[q * d], d);
        if (top.node->centers.size() + 1 == shape_.k) {
          leaf_ = top.node->centers;
          leaf_.push_back(cand);
          ++stats.nodes_visited;
          ++stats.leaves;
          if (!visit_(id, static_cast<const CenterSet&>(leaf_))) {
            stop_.store(true);
          }
          continue;
        }
        CenterSet child = top.node->centers;
        child.push_back(cand);
        std::vector<std::uint64_t> path = top.node->path;
        path.push_back(top.current_subset);
        path.push_back(q);
        SamplerState state = add_center(top.node->state, cand, data_);
        Frame next;
        next.owned = expand(std::move(child), std::move(state), std::move(path), next.source);
        next.node = next.owned.get();
        stack.push_back(std::move(next));
        continue;
      }
      bool have = false;
      if (top.single) {
        combo = std::move(*top.single);
        top.single.reset();
        top.current_subset = top.subset_ordinal;
        have = true;
      } else if (top.source && top.source->next(combo)) {
        top.current_subset = top.subset_ordinal++;
        ++stats.subsets_enumerated;
        have = true;
      }
      if (!have) {
        stack.pop_back();
        continue;
      }
      gather(*top.node, combo, block_);
      top.candidates.clear();
      gen_(PointBlock(block_, d), top.candidates);
      top.candidate_count = top.candidates.size() / d;
      top.next_candidate = 0;
    }
  }

  TreeStats stats;

 private:
  void gather(const TreeNode& node, const Combination& combo, std::vector<double>& out) const {
    const std::size_t d = data_.dim();
    out.resize(combo.size() * d);
    for (std::size_t i = 0; i < combo.size(); ++i) {
      std::copy_n(&node.pool[combo[i] * d], d, &out[i * d]);
    }
  }

  const Dataset& data_;
  const TreeShape& shape_;
  const Generator& gen_;
  std::uint64_t seed_;
  Visitor& visit_;
  std::atomic<bool>& stop_;
  std::vector<double> block_;
  CenterSet leaf_;
};

}  // namespace detail

inline void validate_shape(const TreeShape& shape) {
  if (shape.k == 0) {
    throw InvalidArgument("k must be at least 1");
  }
  if (shape.sample_size == 0 || shape.subset_size == 0 || shape.repeats == 0) {
    throw InvalidArgument("N, M and repeats must be positive");
  }
  if (shape.subset_budget && *shape.subset_budget == 0) {
    throw InvalidArgument("subset budget must be positive");
  }
  if (shape.sample_size < shape.subset_size) {
    throw InvalidArgument("N must be at least M so the root multiset can hold a subset");
  }
}

/// Walks the whole candidate tree. `visit(LeafId, const CenterSet&)` is
/// called once per leaf (a full set of k centers) and may run on several
/// threads at once, but never concurrently for the same LeafId task.
/// Returning false stops the walk early. Each node's randomness comes from
/// RngStream(seed, path), so the set of leaves does not depend on `threads`.
template <CandidateGenerator Generator, class Visitor>
TreeStats walk_candidate_tree(const Dataset& data, const TreeShape& shape, const Generator& gen,
                              std::uint64_t seed, unsigned threads, Visitor&& visit) {
  validate_shape(shape);
  threads = std::max(1u, threads);
  std::atomic<bool> stop{false};
  TreeStats total;
  std::mutex mutex;
  for (std::size_t r = 0; r < shape.repeats && !stop.load(); ++r) {
    std::optional<SubsetSource> source;
    detail::TreeWalker<Generator, Visitor> root_walker(data, shape, gen, seed, visit, stop);
    auto root = root_walker.expand(CenterSet(data.dim()), init_state(data, shape.sampling),
                                   {static_cast<std::uint64_t>(r)}, source);
    total += root_walker.stats;
    std::uint64_t issued = 0;
    parallel_for(threads, threads, [&](std::size_t) {
      detail::TreeWalker<Generator, Visitor> walker(data, shape, gen, seed, visit, stop);
      walker.stats.subsets_enumerated = 0;
      Combination combo;
      for (;;) {
        std::uint64_t ordinal = 0;
        {
          std::lock_guard lock(mutex);
          if (stop.load() || !source->next(combo)) {
            break;
          }
          ordinal = issued++;
        }
        ++walker.stats.subsets_enumerated;
        walker.run_task(*root, combo, ordinal, LeafId{r, ordinal});
      }
      std::lock_guard lock(mutex);
      total += walker.stats;
    });
  }
  return total;
}

/// Sequentially explores the subtree rooted at `centers` (depth =
/// centers.size()) whose node path is `path`, emitting each completed
/// k-center set to `sink(const CenterSet&)`.
template <CandidateGenerator Generator, class Sink>
TreeStats sample_subtree(const Dataset& data, const TreeShape& shape, const Generator& gen, std::uint64_t seed,
                         const CenterSet& centers, std::vector<std::uint64_t> path, Sink&& sink) {
  validate_shape(shape);
  if (centers.size() > shape.k) {
    throw InvalidArgument("center set is deeper than k");
  }
  TreeStats stats;
  if (centers.size() == shape.k) {
    sink(centers);
    stats.nodes_visited = stats.leaves = 1;
    return stats;
  }
  SamplerState state = init_state(data, shape.sampling);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    add_center_inplace(state, centers.row(c), data);
  }
  std::atomic<bool> stop{false};
  auto visit = [&](const LeafId&, const CenterSet& leaf) {
    sink(leaf);
    return true;
  };
  detail::TreeWalker<Generator, decltype(visit)> walker(data, shape, gen, seed, visit, stop);
  std::optional<SubsetSource> source;
  const std::uint64_t repeat = path.empty() ? 0 : path.front();
  auto node = walker.expand(centers, std::move(state), std::move(path), source);
  Combination combo;
  for (std::uint64_t ordinal = 0; source->next(combo); ++ordinal) {
    ++walker.stats.subsets_enumerated;
    walker.run_task(*node, combo, ordinal, LeafId{repeat, ordinal});
  }
  return walker.stats;
}

}  // namespace ckm
