#pragma once

// Centered and uniform random trees on [0,1]^d, and forests of them.
//
// Node layout is the implicit heap: root 1, children 2i and 2i+1, leaves
// 2^k .. 2^{k+1}-1. A point goes to the upper child iff its coordinate is
// strictly greater than the split position, so the cells are half-open boxes
// (lo, hi] with the origin attached to the lowest cell, matching the ceiling
// convention of the closed-form centered kernel.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kerf/rng.hpp"
#include "kerf/types.hpp"

namespace kerf {

struct SplitNode {
  int coordinate = 0;
  double position = 0.0;
};

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(std::span<const double> x) const;
  double volume() const;
};

/// Largest depth for which trees are materialised (2^k - 1 stored nodes).
inline constexpr int kMaxMaterializedDepth = 24;
/// Largest depth supported by the implicit walk (heap index fits in 64 bits).
inline constexpr int kMaxImplicitDepth = 62;

class TreeDescription {
 public:
  TreeDescription(KernelParams params, std::vector<SplitNode> nodes);

  const KernelParams& params() const { return params_; }
  /// Internal node at heap index i, 1 <= i < 2^k.
  const SplitNode& node(std::size_t heap_index) const { return nodes_[heap_index - 1]; }
  std::size_t internal_nodes() const { return nodes_.size(); }
  std::size_t leaf_count() const { return std::size_t{1} << params_.k; }

  /// Leaf of x, numbered 0 .. 2^k - 1 from left to right.
  std::size_t leaf_index(std::span<const double> x) const;
  bool same_cell(std::span<const double> x, std::span<const double> z) const;
  /// Cells in leaf order.
  std::vector<Box> leaf_boxes() const;

 private:
  KernelParams params_;
  std::vector<SplitNode> nodes_;
};

/// Tree number tree_index of the stream keyed by seed.
TreeDescription sample_tree(Variant variant, const KernelParams& params, std::uint64_t seed,
                            std::uint64_t tree_index);

/// Same-leaf test for tree (seed, tree_index) without building it: both
/// points are walked down together and only the visited nodes are drawn.
bool implicit_same_cell(Variant variant, const KernelParams& params, std::uint64_t seed,
                        std::uint64_t tree_index, std::span<const double> x,
                        std::span<const double> z);

/// Fraction of the first M implicit trees in which x and z share a leaf.
double implicit_proximity(Variant variant, const KernelParams& params, std::size_t trees,
                          std::uint64_t seed, std::span<const double> x, std::span<const double> z);

class ForestModel {
 public:
  /// Samples M trees; tree i uses stream (seed, i). Sampling is spread across
  /// `threads` workers with identical results for any thread count.
  static ForestModel sample(Variant variant, const KernelParams& params, std::size_t trees,
                            std::uint64_t seed, unsigned threads = 1);

  Variant variant() const { return variant_; }
  const KernelParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return trees_.size(); }
  const TreeDescription& tree(std::size_t i) const { return trees_[i]; }
  const std::vector<TreeDescription>& trees() const { return trees_; }

  /// K_M(x, z): fraction of trees where x and z share a leaf.
  double proximity(std::span<const double> x, std::span<const double> z) const;

 private:
  ForestModel(Variant variant, KernelParams params, std::uint64_t seed,
              std::vector<TreeDescription> trees);

  Variant variant_;
  KernelParams params_;
  std::uint64_t seed_;
  std::vector<TreeDescription> trees_;
};

/// Per-tree leaf sums and counts of a training set, shared by the classical
/// forest estimate and the finite-M KeRF estimate.
class LeafStatistics {
 public:
  LeafStatistics(const ForestModel& forest, std::span<const SamplePoint> train);

  const ForestModel& forest() const { return *forest_; }
  double global_mean() const { return global_mean_; }

  /// Classical forest: mean over trees of the leaf mean at x; empty leaves contribute 0.
  double forest_predict(std::span<const double> x) const;
  /// Finite-M KeRF: sum of in-leaf responses over all trees divided by the total
  /// in-leaf count; falls back to the global mean when that count is 0.
  double kerf_predict(std::span<const double> x) const;

 private:
  const ForestModel* forest_;
  double global_mean_ = 0.0;
  // Row-major trees x leaves.
  std::vector<double> sums_;
  std::vector<std::uint32_t> counts_;
};

double forest_predict(const ForestModel& forest, std::span<const SamplePoint> train,
                      std::span<const double> x);

}  // namespace kerf
