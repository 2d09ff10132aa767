#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "polyiso/convexifier.hpp"

using namespace polyiso;

namespace {

template <class F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

VertexPolygon dented_square() { return from_vertices({{0, 0}, {0.5, 0.2}, {1, 0}, {1, 1}, {0, 1}}); }

double side_variance(const VertexPolygon& p) {
  const auto l = p.side_lengths();
  double mean = 0.0;
  for (double v : l) mean += v;
  mean /= static_cast<double>(l.size());
  double var = 0.0;
  for (double v : l) var += (v - mean) * (v - mean);
  return var / static_cast<double>(l.size());
}

std::vector<double> sorted_sides(const VertexPolygon& p) {
  auto l = p.side_lengths();
  std::sort(l.begin(), l.end());
  return l;
}

}  // namespace

TEST(IsSimple, Examples) {
  EXPECT_TRUE(is_simple(dented_square()));
  EXPECT_TRUE(is_simple(from_vertices({{0, 0}, {1, 0}, {0, 1}})));
  // Pentagram: vertices of a regular pentagon visited with step 2.
  std::vector<Point> star;
  for (int k = 0; k < 5; ++k) {
    const double t = 2.0 * std::numbers::pi * ((2 * k) % 5) / 5.0;
    star.push_back({std::cos(t), std::sin(t)});
  }
  EXPECT_FALSE(is_simple(from_vertices(star)));
  // Self-crossing pentagon with nonzero signed area.
  EXPECT_FALSE(is_simple(from_vertices({{0, 0}, {3, 0}, {1, 1}, {2, -1}, {1.5, 2}})));
}

TEST(Pockets, ConvexHasNone) {
  EXPECT_TRUE(pockets(from_vertices({{0, 0}, {2, 0}, {2, 1}, {0, 1}})).empty());
  // Collinear boundary vertex is on the hull edge, not in a pocket.
  EXPECT_TRUE(pockets(from_vertices({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {0, 1}})).empty());
}

TEST(Pockets, SingleDent) {
  const auto ps = pockets(dented_square());
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].lid_start, 0u);
  EXPECT_EQ(ps[0].lid_end, 2u);
  EXPECT_EQ(ps[0].vertices, (std::vector<std::size_t>{1}));
}

TEST(Pockets, TwoReflexChains) {
  const VertexPolygon hex = from_vertices({{0, 0}, {1, 0.4}, {2, 0}, {2, 2}, {1, 1.6}, {0, 2}});
  const auto ps = pockets(hex);
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps[0].vertices, (std::vector<std::size_t>{1}));
  EXPECT_EQ(ps[1].vertices, (std::vector<std::size_t>{4}));
  EXPECT_EQ(ps[1].lid_start, 3u);
  EXPECT_EQ(ps[1].lid_end, 5u);
}

TEST(Pockets, NotSimple) {
  expect_error(ErrorCode::NotSimple, [] { pockets(from_vertices({{0, 0}, {3, 0}, {1, 1}, {2, -1}, {1.5, 2}})); });
}

TEST(Flip, DentReflectsAcrossBottomEdge) {
  const VertexPolygon p = dented_square();
  const VertexPolygon q = flip(p, pockets(p).front());
  // Reflection of (0.5, 0.2) across y = 0.
  EXPECT_NEAR(q.vertices()[1].x, 0.5, 1e-15);
  EXPECT_NEAR(q.vertices()[1].y, -0.2, 1e-15);
  EXPECT_NEAR(q.perimeter(), p.perimeter(), 1e-12 * p.perimeter());
  EXPECT_NEAR(q.area(), 1.1, 1e-15);
  EXPECT_GT(q.area(), p.area());
  EXPECT_TRUE(q.convex());
}

TEST(Flip, ObliqueLidMatchesExplicitReflection) {
  // Lid from (0,0) to (4,2); reflect (2, 1.5) across y = x/2.
  const VertexPolygon p = from_vertices({{0, 0}, {2, 1.5}, {4, 2}, {0, 3}});
  const auto ps = pockets(p);
  ASSERT_EQ(ps.size(), 1u);
  const VertexPolygon q = flip(p, ps[0]);
  // Foot = (11/20) (4, 2) = (2.2, 1.1); image = 2 foot - p.
  EXPECT_NEAR(q.vertices()[1].x, 2.4, 1e-14);
  EXPECT_NEAR(q.vertices()[1].y, 0.7, 1e-14);
  EXPECT_NEAR(q.perimeter(), p.perimeter(), 1e-12 * p.perimeter());
  EXPECT_GT(q.area(), p.area());
}

TEST(Convexify, ConvexInputUnchanged) {
  const VertexPolygon sq = from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const FlipTrace t = convexify(sq);
  EXPECT_EQ(t.flips(), 0u);
  ASSERT_EQ(t.polygons.size(), 1u);
  EXPECT_EQ(t.polygons[0].vertices()[2].x, 1.0);
}

TEST(Convexify, SingleDentOneFlip) {
  const FlipTrace t = convexify(dented_square());
  EXPECT_EQ(t.flips(), 1u);
  EXPECT_TRUE(t.polygons.back().convex());
  EXPECT_NEAR(t.steps[0].area, 1.1, 1e-15);
}

TEST(Convexify, BudgetExhausted) {
  std::mt19937_64 rng(31);
  for (;;) {
    const VertexPolygon p = random_simple_polygon(10, rng);
    if (convexify(p).flips() >= 2) {
      expect_error(ErrorCode::FlipBudgetExhausted, [&] { convexify(p, 1); });
      break;
    }
  }
}

TEST(Convexify, NotSimple) {
  expect_error(ErrorCode::NotSimple, [] { convexify(from_vertices({{0, 0}, {3, 0}, {1, 1}, {2, -1}, {1.5, 2}})); });
}

class RandomPolygons : public ::testing::TestWithParam<int> {};

TEST_P(RandomPolygons, TraceInvariants) {
  const auto n = static_cast<std::size_t>(GetParam());
  std::mt19937_64 rng(500 + n);
  for (int k = 0; k < 60; ++k) {
    const VertexPolygon p = k % 2 == 0 ? random_simple_polygon(n, rng) : random_star_polygon(n, rng);
    ASSERT_TRUE(is_simple(p));
    const FlipTrace t = convexify(p, 1000);
    const double l0 = p.perimeter();
    const auto sides0 = sorted_sides(p);
    const double var0 = side_variance(p);
    for (std::size_t s = 1; s < t.polygons.size(); ++s) {
      const VertexPolygon& prev = t.polygons[s - 1];
      const VertexPolygon& cur = t.polygons[s];
      EXPECT_TRUE(is_simple(cur));
      EXPECT_LE(std::abs(cur.perimeter() - l0), 1e-9 * l0);
      EXPECT_GT(cur.area(), prev.area());
      EXPECT_LT(t.steps[s - 1].deficit, s >= 2 ? t.steps[s - 2].deficit : describe(p, {}).deficit);
      EXPECT_NEAR(side_variance(cur), var0, 1e-12);
    }
    const VertexPolygon& last = t.polygons.back();
    EXPECT_TRUE(last.convex());
    EXPECT_TRUE(pockets(last).empty());
    const auto sides1 = sorted_sides(last);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(sides1[i], sides0[i], 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Sizes, RandomPolygons, ::testing::Values(5, 8, 12));

TEST(RandomGenerators, ProduceSimpleNonconvexPolygons) {
  std::mt19937_64 rng(32);
  int nonconvex = 0;
  for (int k = 0; k < 50; ++k) {
    const VertexPolygon a = random_simple_polygon(8, rng);
    const VertexPolygon b = random_star_polygon(8, rng);
    EXPECT_TRUE(is_simple(a));
    EXPECT_TRUE(is_simple(b));
    nonconvex += a.convex() ? 0 : 1;
  }
  EXPECT_GT(nonconvex, 40);
}
