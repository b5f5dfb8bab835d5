#include "kerf/forest.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "kerf/error.hpp"

namespace kerf {

namespace {

SplitNode draw_split(const CounterRng& rng, Variant variant, std::uint64_t heap_index, int d,
                     const std::vector<double>& lo, const std::vector<double>& hi) {
  SplitNode split;
  split.coordinate = static_cast<int>(rng.index(heap_index, CounterRng::coordinate, d));
  const double a = lo[split.coordinate];
  const double b = hi[split.coordinate];
  if (variant == Variant::centered) {
    split.position = 0.5 * (a + b);
  } else {
    split.position = a + rng.unit(heap_index, CounterRng::position) * (b - a);
  }
  return split;
}

void check_depth(const KernelParams& params, int limit, const char* what) {
  params.validate();
  if (params.k > limit) {
    throw GuardError(std::string(what) + " supports depth k <= " + std::to_string(limit) +
                     ", got " + std::to_string(params.k));
  }
}

void grow(const CounterRng& rng, Variant variant, int d, std::uint64_t heap_index, int levels_left,
          std::vector<double>& lo, std::vector<double>& hi, std::vector<SplitNode>& nodes) {
  if (levels_left == 0) return;
  const SplitNode split = draw_split(rng, variant, heap_index, d, lo, hi);
  nodes[heap_index - 1] = split;
  const int c = split.coordinate;
  const double saved_lo = lo[c];
  const double saved_hi = hi[c];
  hi[c] = split.position;
  grow(rng, variant, d, 2 * heap_index, levels_left - 1, lo, hi, nodes);
  hi[c] = saved_hi;
  lo[c] = split.position;
  grow(rng, variant, d, 2 * heap_index + 1, levels_left - 1, lo, hi, nodes);
  lo[c] = saved_lo;
}

std::vector<SplitNode> sample_nodes(Variant variant, const KernelParams& params, std::uint64_t seed,
                                    std::uint64_t tree_index) {
  const CounterRng rng(seed, tree_index);
  std::vector<SplitNode> nodes((std::size_t{1} << params.k) - 1);
  std::vector<double> lo(params.d, 0.0), hi(params.d, 1.0);
  grow(rng, variant, params.d, 1, params.k, lo, hi, nodes);
  return nodes;
}

}  // namespace

bool Box::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < lo.size(); ++j) {
    const bool inside = (x[j] > lo[j] || (x[j] == 0.0 && lo[j] == 0.0)) && x[j] <= hi[j];
    if (!inside) return false;
  }
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
  return v;
}

TreeDescription::TreeDescription(KernelParams params, std::vector<SplitNode> nodes)
    : params_(params), nodes_(std::move(nodes)) {
  check_depth(params_, kMaxMaterializedDepth, "materialised trees");
  if (nodes_.size() != (std::size_t{1} << params_.k) - 1) {
    throw UsageError("a depth-k tree needs exactly 2^k - 1 internal nodes");
  }
  for (const auto& n : nodes_) {
    if (n.coordinate < 0 || n.coordinate >= params_.d) throw UsageError("split coordinate out of range");
  }
}

std::size_t TreeDescription::leaf_index(std::span<const double> x) const {
  std::size_t i = 1;
  for (int level = 0; level < params_.k; ++level) {
    const SplitNode& n = nodes_[i - 1];
    i = 2 * i + (x[n.coordinate] > n.position ? 1 : 0);
  }
  return i - leaf_count();
}

bool TreeDescription::same_cell(std::span<const double> x, std::span<const double> z) const {
  std::size_t i = 1;
  for (int level = 0; level < params_.k; ++level) {
    const SplitNode& n = nodes_[i - 1];
    const bool up_x = x[n.coordinate] > n.position;
    if (up_x != (z[n.coordinate] > n.position)) return false;
    i = 2 * i + (up_x ? 1 : 0);
  }
  return true;
}

std::vector<Box> TreeDescription::leaf_boxes() const {
  std::vector<Box> boxes;
  boxes.reserve(leaf_count());
  Box root{std::vector<double>(params_.d, 0.0), std::vector<double>(params_.d, 1.0)};
  // Explicit stack; pushing the upper child first keeps leaves in left-to-right order.
  std::vector<std::pair<std::size_t, Box>> stack;
  stack.emplace_back(1, std::move(root));
  while (!stack.empty()) {
    auto [i, box] = std::move(stack.back());
    stack.pop_back();
    if (i >= leaf_count()) {
      boxes.push_back(std::move(box));
      continue;
    }
    const SplitNode& n = nodes_[i - 1];
    Box upper = box;
    upper.lo[n.coordinate] = n.position;
    box.hi[n.coordinate] = n.position;
    stack.emplace_back(2 * i + 1, std::move(upper));
    stack.emplace_back(2 * i, std::move(box));
  }
  return boxes;
}

TreeDescription sample_tree(Variant variant, const KernelParams& params, std::uint64_t seed,
                            std::uint64_t tree_index) {
  check_depth(params, kMaxMaterializedDepth, "materialised trees");
  return TreeDescription(params, sample_nodes(variant, params, seed, tree_index));
}

bool implicit_same_cell(Variant variant, const KernelParams& params, std::uint64_t seed,
                        std::uint64_t tree_index, std::span<const double> x,
                        std::span<const double> z) {
  check_depth(params, kMaxImplicitDepth, "implicit tree walks");
  const CounterRng rng(seed, tree_index);
  std::vector<double> lo(params.d, 0.0), hi(params.d, 1.0);
  std::uint64_t i = 1;
  for (int level = 0; level < params.k; ++level) {
    const SplitNode n = draw_split(rng, variant, i, params.d, lo, hi);
    const bool up_x = x[n.coordinate] > n.position;
    if (up_x != (z[n.coordinate] > n.position)) return false;
    if (up_x) {
      lo[n.coordinate] = n.position;
    } else {
      hi[n.coordinate] = n.position;
    }
    i = 2 * i + (up_x ? 1 : 0);
  }
  return true;
}

double implicit_proximity(Variant variant, const KernelParams& params, std::size_t trees,
                          std::uint64_t seed, std::span<const double> x, std::span<const double> z) {
  check_depth(params, kMaxImplicitDepth, "implicit tree walks");
  check_point(x, params.d);
  check_point(z, params.d);
  if (trees == 0) throw UsageError("proximity needs at least one tree");
  std::size_t together = 0;
  for (std::size_t t = 0; t < trees; ++t) {
    together += implicit_same_cell(variant, params, seed, t, x, z) ? 1 : 0;
  }
  return static_cast<double>(together) / static_cast<double>(trees);
}

ForestModel::ForestModel(Variant variant, KernelParams params, std::uint64_t seed,
                         std::vector<TreeDescription> trees)
    : variant_(variant), params_(params), seed_(seed), trees_(std::move(trees)) {}

ForestModel ForestModel::sample(Variant variant, const KernelParams& params, std::size_t trees,
                                std::uint64_t seed, unsigned threads) {
  check_depth(params, kMaxMaterializedDepth, "materialised trees");
  if (trees == 0) throw UsageError("a forest needs at least one tree");
  std::vector<std::vector<SplitNode>> nodes(trees);
  const unsigned workers = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::min<std::size_t>(trees, 64)));
  auto work = [&](unsigned w) {
    for (std::size_t t = w; t < trees; t += workers) nodes[t] = sample_nodes(variant, params, seed, t);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  std::vector<TreeDescription> built;
  built.reserve(trees);
  for (auto& n : nodes) built.emplace_back(params, std::move(n));
  return ForestModel(variant, params, seed, std::move(built));
}

double ForestModel::proximity(std::span<const double> x, std::span<const double> z) const {
  check_point(x, params_.d);
  check_point(z, params_.d);
  std::size_t together = 0;
  for (const auto& t : trees_) together += t.same_cell(x, z) ? 1 : 0;
  return static_cast<double>(together) / static_cast<double>(trees_.size());
}

LeafStatistics::LeafStatistics(const ForestModel& forest, std::span<const SamplePoint> train)
    : forest_(&forest) {
  check_samples(train, forest.params().d);
  const std::size_t leaves = std::size_t{1} << forest.params().k;
  sums_.assign(forest.size() * leaves, 0.0);
  counts_.assign(forest.size() * leaves, 0);
  double total = 0.0;
  for (const auto& s : train) total += s.y;
  global_mean_ = total / static_cast<double>(train.size());
  for (std::size_t t = 0; t < forest.size(); ++t) {
    const auto& tree = forest.tree(t);
    for (const auto& s : train) {
      const std::size_t cell = t * leaves + tree.leaf_index(s.x);
      sums_[cell] += s.y;
      counts_[cell] += 1;
    }
  }
}

double LeafStatistics::forest_predict(std::span<const double> x) const {
  check_point(x, forest_->params().d);
  const std::size_t leaves = std::size_t{1} << forest_->params().k;
  double total = 0.0;
  for (std::size_t t = 0; t < forest_->size(); ++t) {
    const std::size_t cell = t * leaves + forest_->tree(t).leaf_index(x);
    if (counts_[cell] > 0) total += sums_[cell] / counts_[cell];
  }
  return total / static_cast<double>(forest_->size());
}

double LeafStatistics::kerf_predict(std::span<const double> x) const {
  check_point(x, forest_->params().d);
  const std::size_t leaves = std::size_t{1} << forest_->params().k;
  double numerator = 0.0;
  std::size_t denominator = 0;
  for (std::size_t t = 0; t < forest_->size(); ++t) {
    const std::size_t cell = t * leaves + forest_->tree(t).leaf_index(x);
    numerator += sums_[cell];
    denominator += counts_[cell];
  }
  if (denominator == 0) return global_mean_;
  return numerator / static_cast<double>(denominator);
}

double forest_predict(const ForestModel& forest, std::span<const SamplePoint> train,
                      std::span<const double> x) {
  return LeafStatistics(forest, train).forest_predict(x);
}

}  // namespace kerf
