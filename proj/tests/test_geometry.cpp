#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ctxrace/geometry.hpp"

using namespace ctxrace;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Geometry, WrapAngleRange) {
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-12);
    EXPECT_NEAR(wrap_angle(2 * kPi + 0.25), 0.25, 1e-12);
    EXPECT_NEAR(wrap_angle(-2 * kPi - 0.25), -0.25, 1e-12);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-50.0, 50.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = d(rng);
        const double w = wrap_angle(a);
        ASSERT_GT(w, -kPi);
        ASSERT_LE(w, kPi);
        ASSERT_NEAR(std::remainder(a - w, 2 * kPi), 0.0, 1e-9);
    }
}

TEST(Geometry, ClosestPointOnSegment) {
    const auto mid = closest_point_on_segment({1, 1}, {0, 0}, {2, 0});
    EXPECT_DOUBLE_EQ(mid.t, 0.5);
    EXPECT_DOUBLE_EQ(mid.distance, 1.0);
    const auto before = closest_point_on_segment({-3, 4}, {0, 0}, {2, 0});
    EXPECT_DOUBLE_EQ(before.t, 0.0);
    EXPECT_DOUBLE_EQ(before.distance, 5.0);
    const auto degenerate = closest_point_on_segment({3, 4}, {0, 0}, {0, 0});
    EXPECT_DOUBLE_EQ(degenerate.distance, 5.0);
}

TEST(Geometry, RayPerpendicularWall) {
    const Segment wall{{2, -5}, {2, 5}};
    const auto hit = ray_segment_intersection({0, 0}, {1, 0}, wall);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(*hit, 2.0, 1e-12);
}

TEST(Geometry, RayAt45DegreesIsDistanceTimesSqrt2) {
    // Independent oracle: the hit point lies on both the ray and the line x = d.
    for (double d : {0.5, 1.0, 2.5, 7.0}) {
        const Segment wall{{d, -100}, {d, 100}};
        const Vec2 dir = from_angle(kPi / 4);
        const auto hit = ray_segment_intersection({0, 0}, dir, wall);
        ASSERT_TRUE(hit);
        EXPECT_NEAR(*hit, d * std::sqrt(2.0), 1e-9);
    }
}

TEST(Geometry, RayMissesParallelAndBehind) {
    const Segment wall{{2, -1}, {2, 1}};
    EXPECT_FALSE(ray_segment_intersection({0, 0}, {-1, 0}, wall));
    EXPECT_FALSE(ray_segment_intersection({0, 0}, {0, 1}, wall));
    EXPECT_FALSE(ray_segment_intersection({0, 5}, {1, 0}, wall));
}

TEST(Geometry, SegmentsIntersectClosed) {
    EXPECT_TRUE(segments_intersect({{0, 0}, {2, 2}}, {{0, 2}, {2, 0}}));
    EXPECT_TRUE(segments_intersect({{0, 0}, {1, 0}}, {{1, 0}, {2, 5}}));  // shared endpoint
    EXPECT_TRUE(segments_intersect({{0, 0}, {2, 0}}, {{1, 0}, {3, 0}}));  // collinear overlap
    EXPECT_FALSE(segments_intersect({{0, 0}, {1, 0}}, {{2, 0}, {3, 0}}));
    EXPECT_FALSE(segments_intersect({{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}));
}

TEST(Geometry, PointInPolygon) {
    const std::vector<Vec2> square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    EXPECT_TRUE(point_in_polygon({2, 2}, square));
    EXPECT_FALSE(point_in_polygon({5, 2}, square));
    EXPECT_FALSE(point_in_polygon({-0.1, 2}, square));
}

TEST(Geometry, BoxCornersCounterClockwise) {
    const OrientedBox b{{1, 2}, kPi / 2, 4.0, 2.0};
    const auto c = b.corners();
    // Front-left of a box pointing +y sits at (-width/2, +length/2) from the centre.
    EXPECT_NEAR(c[0].x, 0.0, 1e-12);
    EXPECT_NEAR(c[0].y, 4.0, 1e-12);
    double area = 0.0;
    for (int i = 0; i < 4; ++i) area += cross(c[i], c[(i + 1) % 4]);
    EXPECT_NEAR(area / 2.0, 8.0, 1e-9);
}

TEST(Geometry, BoxesOverlapCases) {
    const OrientedBox a{{0, 0}, 0.0, 0.5, 0.3};
    EXPECT_FALSE(boxes_overlap(a, {{1.5, 0}, 0.0, 0.5, 0.3}));  // 1 m gap
    EXPECT_TRUE(boxes_overlap(a, a));                          // co-located
    // Corner to corner at exact contact: closed-set convention.
    EXPECT_TRUE(boxes_overlap(a, {{0.5, 0.3}, 0.0, 0.5, 0.3}));
    EXPECT_TRUE(boxes_overlap(a, {{0.5, 0}, 0.0, 0.5, 0.3}));  // edge contact
    EXPECT_FALSE(boxes_overlap(a, {{0.5 + 1e-9, 0}, 0.0, 0.5, 0.3}));
    // A rotated box whose corner pokes into a's side.
    EXPECT_TRUE(boxes_overlap(a, {{0, 0.3}, kPi / 4, 0.3, 0.3}));
    EXPECT_FALSE(boxes_overlap(a, {{0, 0.5}, kPi / 4, 0.3, 0.3}));
}

TEST(Geometry, MengerCurvatureOnCircle) {
    for (double r : {0.5, 3.0, 10.0}) {
        const Vec2 a = from_angle(0.0) * r, b = from_angle(0.3) * r, c = from_angle(0.7) * r;
        EXPECT_NEAR(menger_curvature(a, b, c), 1.0 / r, 1e-9);   // counter-clockwise: left turn
        EXPECT_NEAR(menger_curvature(c, b, a), -1.0 / r, 1e-9);  // clockwise
    }
    EXPECT_EQ(menger_curvature({0, 0}, {1, 0}, {2, 0}), 0.0);
    EXPECT_EQ(menger_curvature({0, 0}, {0, 0}, {2, 0}), 0.0);
}
