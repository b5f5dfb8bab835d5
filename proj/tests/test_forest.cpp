#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kerf/error.hpp"
#include "kerf/forest.hpp"
#include "kerf/kernels.hpp"
#include "kerf/rng.hpp"
#include "oracles.hpp"

using namespace kerf;

TEST_CASE("counter rng is a pure function of its key") {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  CHECK(a.bits(5, CounterRng::Lane::position) == b.bits(5, CounterRng::Lane::position));
  CHECK(a.bits(5, CounterRng::Lane::position) != c.bits(5, CounterRng::Lane::position));
  CHECK(a.bits(5, CounterRng::Lane::position) != a.bits(5, CounterRng::Lane::coordinate));
  for (std::uint64_t i = 1; i < 2000; ++i) {
    const double u = a.unit(i, CounterRng::Lane::position);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(a.index(i, CounterRng::Lane::coordinate, 3) < 3);
  }
}

TEST_CASE("depth 0 tree is one cell covering the cube") {
  for (Variant v : {Variant::centered, Variant::uniform}) {
    const auto tree = sample_tree(v, KernelParams{0, 3}, 1, 0);
    CHECK(tree.internal_nodes() == 0);
    CHECK(tree.leaf_count() == 1);
    const auto boxes = tree.leaf_boxes();
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].volume() == 1.0);
    CHECK(tree.leaf_index(std::vector{0.0, 1.0, 0.4}) == 0);
  }
}

TEST_CASE("depth 1 centered split picks each coordinate about half the time") {
  const KernelParams p{1, 2};
  int first = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto tree = sample_tree(Variant::centered, p, 2024, i);
    CHECK(tree.node(1).position == 0.5);
    first += tree.node(1).coordinate == 0;
  }
  CHECK(std::abs(first / double(draws) - 0.5) <= 0.02);
}

TEST_CASE("coordinate split on a centered depth-1 tree separates 0.2 and 0.8") {
  const KernelParams p{1, 1};
  const auto tree = sample_tree(Variant::centered, p, 3, 0);
  CHECK_FALSE(tree.same_cell(std::vector{0.2}, std::vector{0.8}));
  CHECK(tree.same_cell(std::vector{0.2}, std::vector{0.2}));
}

TEST_CASE("uniform depth-2 leaf widths sum to 1") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto tree = sample_tree(Variant::uniform, KernelParams{2, 1}, 8, i);
    double total = 0.0;
    for (const auto& b : tree.leaf_boxes()) total += b.hi[0] - b.lo[0];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("leaves partition the cube on a probe grid") {
  for (Variant v : {Variant::centered, Variant::uniform}) {
    for (std::uint64_t t = 0; t < 10; ++t) {
      const KernelParams p{4, 2};
      const auto tree = sample_tree(v, p, 99, t);
      const auto boxes = tree.leaf_boxes();
      double volume = 0.0;
      for (const auto& b : boxes) volume += b.volume();
      CHECK(volume == doctest::Approx(1.0).epsilon(1e-12));
      for (int i = 0; i <= 16; ++i) {
        for (int j = 0; j <= 16; ++j) {
          const std::vector x{i / 16.0, j / 16.0};
          int hits = 0;
          std::size_t hit = 0;
          for (std::size_t b = 0; b < boxes.size(); ++b) {
            if (boxes[b].contains(x)) {
              ++hits;
              hit = b;
            }
          }
          CHECK(hits == 1);
          CHECK(hit == tree.leaf_index(x));
        }
      }
    }
  }
}

TEST_CASE("implicit walk agrees with the stored tree") {
  std::mt19937_64 rng(1);
  for (Variant v : {Variant::centered, Variant::uniform}) {
    for (int trial = 0; trial < 200; ++trial) {
      const KernelParams p{1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 3)};
      const auto x = oracle::random_point(rng, p.d, p.k);
      const auto z = oracle::nearby_point(rng, x, p.k);
      const auto tree = sample_tree(v, p, 77, trial);
      CHECK(tree.same_cell(x, z) == implicit_same_cell(v, p, 77, trial, x, z));
    }
  }
}

TEST_CASE("forest sampling is deterministic and thread-count independent") {
  const KernelParams p{3, 2};
  const auto a = ForestModel::sample(Variant::uniform, p, 64, 5, 1);
  const auto b = ForestModel::sample(Variant::uniform, p, 64, 5, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 1; i < 8; ++i) {
      CHECK(a.tree(t).node(i).coordinate == b.tree(t).node(i).coordinate);
      CHECK(a.tree(t).node(i).position == b.tree(t).node(i).position);
    }
  }
}

TEST_CASE("proximity basics") {
  const KernelParams p{3, 2};
  const auto forest = ForestModel::sample(Variant::centered, p, 50, 1);
  const std::vector x{0.3, 0.6};
  CHECK(forest.proximity(x, x) == 1.0);
  const auto single = ForestModel::sample(Variant::uniform, p, 1, 1);
  const double v = single.proximity(x, std::vector{0.35, 0.62});
  CHECK((v == 0.0 || v == 1.0));
  CHECK_THROWS_AS(ForestModel::sample(Variant::centered, p, 0, 1), UsageError);
}

TEST_CASE("centered proximity at profile (1,1) converges to one half") {
  const KernelParams p{2, 2};
  const std::vector x{0.3, 0.3};
  const std::vector z{0.1, 0.1};
  REQUIRE(match_profile(x, z, p) == MatchProfile{1, 1});
  CHECK(std::abs(implicit_proximity(Variant::centered, p, 200000, 6, x, z) - 0.5) <= 0.01);
}

TEST_CASE("uniform proximity to the origin converges to the kernel") {
  const KernelParams p{3, 2};
  const std::vector o{0.0, 0.0};
  const std::vector x{0.3, 0.55};
  CHECK(std::abs(implicit_proximity(Variant::uniform, p, 200000, 6, o, x) - uniform_kernel(x, p)) <= 0.01);
}

TEST_CASE("too deep for a stored tree") {
  CHECK_THROWS_AS(sample_tree(Variant::centered, KernelParams{kMaxMaterializedDepth + 1, 1}, 1, 0), GuardError);
  const std::vector x{0.5};
  CHECK_NOTHROW(implicit_same_cell(Variant::centered, KernelParams{40, 1}, 1, 0, x, x));
  CHECK_THROWS_AS(implicit_same_cell(Variant::centered, KernelParams{kMaxImplicitDepth + 1, 1}, 1, 0, x, x),
                  GuardError);
}

TEST_CASE("classical forest estimate") {
  const KernelParams p{2, 1};
  std::vector<SamplePoint> train{{{0.1}, 2.0}, {{0.2}, 2.0}, {{0.7}, 2.0}, {{0.9}, 2.0}};
  const auto forest = ForestModel::sample(Variant::centered, p, 10, 1);
  const LeafStatistics stats(forest, train);
  // Centered depth-2 trees on d = 1 are the quarter grid; every query leaf is occupied here.
  CHECK(stats.forest_predict(std::vector{0.15}) == doctest::Approx(2.0));
  // The leaf (0.25, 0.5] is empty in every tree.
  CHECK(stats.forest_predict(std::vector{0.3}) == 0.0);
  CHECK(stats.kerf_predict(std::vector{0.3}) == doctest::Approx(2.0));

  const auto stump = ForestModel::sample(Variant::uniform, KernelParams{0, 1}, 1, 1);
  std::vector<SamplePoint> mixed{{{0.1}, 1.0}, {{0.5}, 2.0}, {{0.9}, 6.0}};
  CHECK(forest_predict(stump, mixed, std::vector{0.3}) == doctest::Approx(3.0));

  std::vector<SamplePoint> one{{{0.61}, 4.5}};
  const auto deep = ForestModel::sample(Variant::centered, KernelParams{3, 1}, 5, 2);
  CHECK(forest_predict(deep, one, std::vector{0.62}) == doctest::Approx(4.5));
  CHECK_THROWS_AS(LeafStatistics(deep, std::vector<SamplePoint>{}), UsageError);
}
