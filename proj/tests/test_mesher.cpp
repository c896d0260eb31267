#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "udf/errors.hpp"
#include "udf/fixtures.hpp"
#include "udf/mesher.hpp"
#include "udf/metrics.hpp"

using namespace udf;
using fixtures::AnalyticShape;

TEST_CASE("side classifier on the canonical cases") {
    using mesher::Side;
    CHECK(mesher::side_classifier(Vec3(0, 0, 1), Vec3(0, 0, 1)) == Side::Same);
    CHECK(mesher::side_classifier(Vec3(0, 0, 1), Vec3(0, 0, -1)) == Side::Opposite);
    CHECK(mesher::side_classifier(Vec3(1, 0, 0), Vec3(0, 1, 0)) == Side::Ambiguous);
    // tau_amb widens the ambiguous band
    CHECK(mesher::side_classifier(Vec3(1, 0.1, 0), Vec3(0.1, 1, 0), 0.5) == Side::Ambiguous);
    CHECK(mesher::side_classifier(Vec3(1, 0.1, 0), Vec3(0.1, 1, 0), 0.0) == Side::Same);
}

TEST_CASE("plane field meshes to a flat connected sheet") {
    const auto plane = AnalyticShape::plane();
    mesher::MeshOptions opts;
    opts.resolution = 64;
    opts.lo = Vec3(-0.5, -0.5, -0.5);
    opts.hi = Vec3(0.5, 0.5, 0.5);
    const TriangleMesh mesh = mesher::extract_mesh(plane, opts);
    REQUIRE_FALSE(mesh.empty());
    const double spacing = 1.0 / 64.0;
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(v.z()) < spacing * 1e-3);
    CHECK(mesh.connected_component_count() == 1);
    CHECK(mesh.boundary_edge_count() > 0);  // open sheet
}

TEST_CASE("sphere field meshes to a closed surface at the right radius") {
    const auto sphere = AnalyticShape::sphere(0.4);
    const TriangleMesh mesh = mesher::extract_mesh(sphere, 64, -1.0);
    REQUIRE_FALSE(mesh.empty());
    CHECK(mesh.boundary_edge_count() == 0);
    CHECK(mesh.connected_component_count() == 1);
    const double spacing = 1.1 / 64.0;
    double mean_err = 0.0;
    for (const Vec3& v : mesh.vertices) mean_err += std::abs(v.norm() - 0.4);
    CHECK(mean_err / static_cast<double>(mesh.vertices.size()) < spacing / 2.0);
}

TEST_CASE("half-sphere field meshes to an open surface") {
    const auto half = AnalyticShape::half_sphere(0.4);
    const TriangleMesh mesh = mesher::extract_mesh(half, 64, -1.0);
    REQUIRE_FALSE(mesh.empty());
    CHECK(mesh.boundary_edge_count() > 0);
}

TEST_CASE("two parallel planes mesh to two components") {
    const auto planes = AnalyticShape::two_planes(0.4);
    const TriangleMesh mesh = mesher::extract_mesh(planes, 64, -1.0);
    REQUIRE_FALSE(mesh.empty());
    CHECK(mesh.connected_component_count() == 2);
}

TEST_CASE("torus field meshes to a closed genus-1 surface") {
    const auto torus = AnalyticShape::torus(0.3, 0.12);
    const TriangleMesh mesh = mesher::extract_mesh(torus, 64, -1.0);
    REQUIRE_FALSE(mesh.empty());
    CHECK(mesh.boundary_edge_count() == 0);
    CHECK(mesh.connected_component_count() == 1);
    // V - E + F = 0 for a torus
    const long long v = static_cast<long long>(mesh.vertices.size());
    const long long f = static_cast<long long>(mesh.triangles.size());
    const long long e = (3 * f) / 2;  // closed: each edge shared by two faces
    CHECK(v - e + f == 0);
}

TEST_CASE("pseudo-signs are invariant to a global gradient flip") {
    const auto sphere = AnalyticShape::sphere(0.4);
    mesher::MeshOptions opts;
    opts.resolution = 32;
    mesher::LatticeGrid grid = mesher::build_lattice(sphere, opts);
    const TriangleMesh a = mesher::extract_from_lattice(grid, -1.0, 0.0);
    grid.gradients = -grid.gradients;
    const TriangleMesh b = mesher::extract_from_lattice(grid, -1.0, 0.0);
    REQUIRE(a.vertices.size() == b.vertices.size());
    REQUIRE(a.triangles.size() == b.triangles.size());
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        CHECK((a.vertices[i] - b.vertices[i]).norm() == 0.0);
}

TEST_CASE("vertices stay inside the lattice and near active cells") {
    const auto torus = AnalyticShape::torus(0.3, 0.12);
    mesher::MeshOptions opts;
    opts.resolution = 48;
    const TriangleMesh mesh = mesher::extract_mesh(torus, opts);
    for (const Vec3& v : mesh.vertices) {
        CHECK(v.cwiseAbs().maxCoeff() <= 0.55 + 1e-12);
        // every vertex interpolates an edge of a near-surface cell
        CHECK(torus.eval(v) < 2.0 * (1.1 / 48.0) * std::sqrt(3.0));
    }
}

TEST_CASE("chamfer to the analytic surface decreases with resolution") {
    const auto sphere = AnalyticShape::sphere(0.4);
    const auto reference = sphere.sample_surface(20000, 31).points();
    double prev = 1e9;
    for (int res : {32, 64, 128}) {
        const TriangleMesh mesh = mesher::extract_mesh(sphere, res, -1.0);
        const auto samples = metrics::sample_mesh(mesh, 20000, 32);
        const double cd = metrics::chamfer_l1(samples.points, reference);
        CHECK(cd < prev);
        prev = cd;
    }
}

TEST_CASE("an empty lattice region yields an empty mesh, not an error") {
    const auto sphere = AnalyticShape::sphere(0.4);
    mesher::MeshOptions opts;
    opts.resolution = 8;
    opts.lo = Vec3(0.05, 0.05, 0.05);
    opts.hi = Vec3(0.15, 0.15, 0.15);  // strictly inside the sphere, no crossing
    const TriangleMesh mesh = mesher::extract_mesh(sphere, opts);
    CHECK(mesh.empty());
}

TEST_CASE("degenerate resolutions behave") {
    const auto sphere = AnalyticShape::sphere(0.4);
    CHECK_NOTHROW(mesher::extract_mesh(sphere, 2, -1.0));
    CHECK_THROWS_AS(mesher::extract_mesh(sphere, 1, -1.0), ConfigError);
}

TEST_CASE("multithreaded lattice construction matches single-threaded") {
    const auto torus = AnalyticShape::torus(0.3, 0.12);
    mesher::MeshOptions opts;
    opts.resolution = 24;
    const auto single = mesher::build_lattice(torus, opts);
    opts.threads = 4;
    const auto multi = mesher::build_lattice(torus, opts);
    CHECK((single.distances - multi.distances).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(single.gradients.cols() == multi.gradients.cols());
    CHECK((single.gradients - multi.gradients).cwiseAbs().maxCoeff() == 0.0);
}
