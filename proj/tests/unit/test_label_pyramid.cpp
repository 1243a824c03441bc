#include <doctest.h>

#include <random>

#include "bfseg/errors.hpp"
#include "bfseg/label_pyramid.hpp"
#include "oracles.hpp"

using namespace bfseg;

namespace {

LabelRaster raster(int h, int w, std::initializer_list<std::pair<int, int>> ones) {
  LabelRaster y(h, w);
  for (auto [r, c] : ones) y(r, c) = 1;
  return y;
}

std::size_t pure_count(const PurityMask& m) {
  std::size_t n = 0;
  for (auto v : m.values) n += v;
  return n;
}

}  // namespace

TEST_CASE("downsample_label on the basic cases") {
  SUBCASE("all zero") {
    const auto d = downsample_label(LabelRaster(4, 4, 0), 2);
    CHECK(d.height == 2);
    CHECK(d.width == 2);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.value(i) == 0.0);
  }
  SUBCASE("all one") {
    const auto d = downsample_label(LabelRaster(4, 4, 1), 2);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.value(i) == 1.0);
  }
  SUBCASE("top-left 2x2 block") {
    const auto y = raster(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const auto d = downsample_label(y, 2);
    // oracle: brute-force block averaging
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) CHECK(d.value(r, c) == oracle::block_mean(y, 2, r, c));
    }
    CHECK(d.value(0, 0) == 1.0);
    CHECK(d.value(0, 1) == 0.0);
    CHECK(d.value(1, 0) == 0.0);
    CHECK(d.value(1, 1) == 0.0);
  }
}

TEST_CASE("downsample_label rejects bad input") {
  CHECK_THROWS_AS(downsample_label(LabelRaster(6, 4), 4), DimensionError);
  CHECK_THROWS_AS(downsample_label(LabelRaster(4, 4), 3), DimensionError);
  LabelRaster bad(4, 4);
  bad(1, 1) = 2;
  CHECK_THROWS_AS(downsample_label(bad, 2), DomainError);
}

TEST_CASE("purity_mask") {
  SUBCASE("pure building and pure background are both valid") {
    const auto y = raster(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const auto m = purity_mask(downsample_label(y, 2));
    CHECK(m == PurityMask(2, 2, 1));
  }
  SUBCASE("quarter-filled blocks are hybrid") {
    const auto y = raster(4, 4, {{0, 0}, {0, 2}, {2, 0}, {2, 2}});
    const auto d = downsample_label(y, 2);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.value(i) == 0.25);
    CHECK(purity_mask(d) == PurityMask(2, 2, 0));
  }
  SUBCASE("real-valued input") {
    Grid<double> g(1, 3);
    g.values = {0.0, 0.5, 1.0};
    const auto m = purity_mask(g);
    CHECK(m.values == std::vector<std::uint8_t>{1, 0, 1});
    g.values[1] = 1.5;
    CHECK_THROWS_AS(purity_mask(g), DomainError);
  }
  SUBCASE("factor 1 is all pure") {
    std::mt19937_64 rng(3);
    const auto y = oracle::random_raster(rng, 8, 8, 0.5);
    CHECK(pure_count(purity_mask(downsample_label(y, 1))) == 64);
  }
}

TEST_CASE("build_mask_pyramid examples") {
  SUBCASE("all-one raster") {
    const auto p = build_mask_pyramid(LabelRaster(64, 64, 1));
    for (std::size_t i = 0; i < kStrides.size(); ++i) {
      const auto& level = p.levels[i];
      CHECK(level.stride == kStrides[i]);
      CHECK(level.soft.height == 64 / kStrides[i]);
      for (std::size_t k = 0; k < level.soft.size(); ++k) CHECK(level.soft.value(k) == 1.0);
      CHECK(pure_count(level.mask) == level.mask.size());
    }
  }
  SUBCASE("aligned 32x32 building stays pure at every stride") {
    LabelRaster y(64, 64);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) y(r, c) = 1;
    }
    for (const auto& level : build_mask_pyramid(y).levels) CHECK(pure_count(level.mask) == level.mask.size());
  }
  SUBCASE("single pixel gives one hybrid cell per level") {
    const auto y = raster(64, 64, {{17, 40}});
    for (const auto& level : build_mask_pyramid(y).levels) {
      CHECK(pure_count(level.mask) == level.mask.size() - 1);
      CHECK(level.mask(17 / level.stride, 40 / level.stride) == 0);
    }
  }
  CHECK_THROWS_AS(build_mask_pyramid(LabelRaster(48, 64)), DimensionError);
}

TEST_CASE("purity mask matches the all-same-block oracle on random rasters") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> side(1, 2);
  for (int trial = 0; trial < 60; ++trial) {
    const int h = 32 * side(rng);
    const int w = 32 * side(rng);
    const auto y = trial % 2 ? oracle::random_raster(rng, h, w, 0.02 + 0.01 * trial)
                             : oracle::random_blocky_raster(rng, h, w, 1 + trial % 5);
    for (int f : {2, 4, 8, 16, 32}) {
      const auto d = downsample_label(y, f);
      const auto m = purity_mask(d);
      for (int r = 0; r < d.height; ++r) {
        for (int c = 0; c < d.width; ++c) {
          REQUIRE(m(r, c) == oracle::block_all_same(y, f, r, c));
          if (m(r, c)) REQUIRE(d.value(r, c) == y(r * f, c * f));
        }
      }
    }
  }
}

TEST_CASE("downsampling composes exactly") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = oracle::random_raster(rng, 64, 64, 0.3);
    CHECK(downsample_label(y, 4) == downsample_label(downsample_label(y, 2), 2));
    CHECK(downsample_label(y, 32) == downsample_label(downsample_label(y, 4), 8));
    const auto p = build_mask_pyramid(y);
    CHECK(p.levels[2].soft == downsample_label(y, 16));
  }
}

TEST_CASE("constant rasters are idempotent") {
  for (std::uint8_t v : {0, 1}) {
    const auto p = build_mask_pyramid(LabelRaster(32, 32, v));
    for (const auto& level : p.levels) {
      for (std::size_t k = 0; k < level.soft.size(); ++k) CHECK(level.soft.value(k) == v);
      CHECK(pure_count(level.mask) == level.mask.size());
    }
  }
}
