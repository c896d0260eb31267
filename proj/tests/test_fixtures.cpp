#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "udf/fixtures.hpp"

using namespace udf;
using fixtures::AnalyticShape;

namespace {

// FD check of the analytic gradient away from surface and cut locus.
void check_gradient(const AnalyticShape& shape, const Vec3& q, double tol = 1e-8) {
    const auto e = shape.exact_udf(q);
    REQUIRE_FALSE(e.on_cut_locus);
    const double step = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vec3 hi = q, lo = q;
        hi[k] += step;
        lo[k] -= step;
        const double fd = (shape.eval(hi) - shape.eval(lo)) / (2 * step);
        CHECK(std::abs(fd - e.gradient[k]) < tol * std::max(1.0, std::abs(fd)) + 1e-7);
    }
}

}  // namespace

TEST_CASE("sphere closed forms") {
    const auto s = AnalyticShape::sphere(0.4);
    const auto outside = s.exact_udf(Vec3(0.8, 0, 0));
    CHECK(outside.distance == doctest::Approx(0.4));
    CHECK((outside.gradient - Vec3(1, 0, 0)).norm() < 1e-15);
    const auto inside = s.exact_udf(Vec3(0.1, 0, 0));
    CHECK(inside.distance == doctest::Approx(0.3));
    CHECK((inside.gradient - Vec3(-1, 0, 0)).norm() < 1e-15);
    CHECK(s.exact_udf(Vec3::Zero()).on_cut_locus);
}

TEST_CASE("plane closed forms") {
    const auto p = AnalyticShape::plane();
    const auto e = p.exact_udf(Vec3(0.1, 0.2, -0.3));
    CHECK(e.distance == doctest::Approx(0.3));
    CHECK((e.gradient - Vec3(0, 0, -1)).norm() < 1e-15);
    CHECK(p.exact_udf(Vec3(0.1, 0.2, 0.3)).gradient.z() == 1.0);
}

TEST_CASE("two parallel planes and the midplane cut locus") {
    const auto t = AnalyticShape::two_planes(0.4);
    const auto mid = t.exact_udf(Vec3::Zero());
    CHECK(mid.distance == doctest::Approx(0.2));
    CHECK(mid.on_cut_locus);
    const auto above = t.exact_udf(Vec3(0, 0, 0.35));
    CHECK(above.distance == doctest::Approx(0.15));
    CHECK(above.gradient.z() == 1.0);
    const auto between = t.exact_udf(Vec3(0, 0, 0.1));
    CHECK(between.distance == doctest::Approx(0.1));
    CHECK(between.gradient.z() == -1.0);
}

TEST_CASE("half sphere keeps the upper shell and flags its axis locus") {
    const auto h = AnalyticShape::half_sphere(0.4);
    CHECK(h.exact_udf(Vec3(0, 0, 0.8)).distance == doctest::Approx(0.4));
    // below the equator the closest feature is the rim
    const Vec3 below(0.3, 0, -0.3);
    const double rim_dist = (below - Vec3(0.4, 0, 0)).norm();
    CHECK(h.exact_udf(below).distance == doctest::Approx(rim_dist));
    CHECK(h.exact_udf(Vec3(0, 0, -0.2)).on_cut_locus);
}

TEST_CASE("torus closed forms") {
    const auto t = AnalyticShape::torus(0.3, 0.12);
    CHECK(t.exact_udf(Vec3(0.3, 0, 0.12)).distance == doctest::Approx(0.0));
    CHECK(t.exact_udf(Vec3(0.5, 0, 0)).distance == doctest::Approx(0.08));
    CHECK(t.exact_udf(Vec3(0, 0, 0.5)).on_cut_locus);  // the axis
}

TEST_CASE("exact gradients match finite differences off the cut locus") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-0.55, 0.55);
    const char* names[] = {"plane", "sphere", "half_sphere", "two_planes", "torus"};
    for (const char* name : names) {
        const auto shape = AnalyticShape::from_name(name);
        int checked = 0;
        while (checked < 40) {
            const Vec3 q(uni(rng), uni(rng), uni(rng));
            const auto e = shape.exact_udf(q);
            // stay away from the surface itself and the cut locus so the
            // field is smooth within the FD stencil
            if (e.on_cut_locus || e.distance < 1e-3) continue;
            check_gradient(shape, q);
            CHECK(std::abs(e.gradient.norm() - 1.0) < 1e-9);
            ++checked;
        }
    }
}

TEST_CASE("surface sampling lands on each surface exactly") {
    const auto sphere = AnalyticShape::sphere(0.4);
    for (const Vec3& p : sphere.sample_surface(2000, 9).points())
        CHECK(std::abs(p.norm() - 0.4) < 1e-12);

    const auto half = AnalyticShape::half_sphere(0.4);
    for (const Vec3& p : half.sample_surface(2000, 9).points()) {
        CHECK(p.z() >= 0.0);
        CHECK(std::abs(p.norm() - 0.4) < 1e-12);
    }

    const auto plane = AnalyticShape::plane();
    for (const Vec3& p : plane.sample_surface(500, 9).points()) {
        CHECK(p.z() == 0.0);
        CHECK(std::abs(p.x()) <= 0.5);
    }

    const auto torus = AnalyticShape::torus(0.3, 0.12);
    for (const Vec3& p : torus.sample_surface(2000, 9).points())
        CHECK(torus.eval(p) < 1e-12);

    const auto planes = AnalyticShape::two_planes(0.4);
    for (const Vec3& p : planes.sample_surface(2000, 9).points())
        CHECK(std::abs(std::abs(p.z()) - 0.2) < 1e-12);
}

TEST_CASE("sampling is deterministic per seed") {
    const auto s = AnalyticShape::sphere(0.4);
    const auto a = s.sample_surface(500, 77);
    const auto b = s.sample_surface(500, 77);
    const auto c = s.sample_surface(500, 78);
    REQUIRE(a.size() == b.size());
    bool all_equal = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_equal &= a.point(i) == b.point(i);
        differs |= a.point(i) != c.point(i);
    }
    CHECK(all_equal);
    CHECK(differs);
}

TEST_CASE("add_noise perturbs deterministically") {
    const auto s = AnalyticShape::sphere(0.4);
    const auto clean = s.sample_surface(200, 1);
    const auto n1 = fixtures::add_noise(clean, 0.01, 5);
    const auto n2 = fixtures::add_noise(clean, 0.01, 5);
    double max_shift = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(n1.point(i) == n2.point(i));
        max_shift = std::max(max_shift, (n1.point(i) - clean.point(i)).norm());
    }
    CHECK(max_shift > 0.0);
    CHECK(max_shift < 0.1);
}
