#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "udf/errors.hpp"
#include "udf/fixtures.hpp"
#include "udf/geometry.hpp"

using namespace udf;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/udf_geo_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
    void write(const std::string& content) {
        std::ofstream out(path);
        out << content;
    }
};

std::vector<Vec3> random_points(int n, unsigned long long seed, double extent = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-extent, extent);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) pts.emplace_back(uni(rng), uni(rng), uni(rng));
    return pts;
}

}  // namespace

TEST_CASE("xyz loader reads points in file order") {
    TempFile f("basic.xyz");
    f.write("0 0 0\n1 0 0\n0 1 0\n");
    const PointCloud cloud = load_point_cloud(f.path, CloudFormat::Xyz);
    REQUIRE(cloud.size() == 3);
    CHECK(cloud.point(0) == Vec3(0, 0, 0));
    CHECK(cloud.point(1) == Vec3(1, 0, 0));
    CHECK(cloud.point(2) == Vec3(0, 1, 0));
}

TEST_CASE("xyz loader ignores extra columns, comments, and blank lines") {
    TempFile f("extra.xyz");
    f.write("# header comment\n0.5 1.5 2.5 255 0 0\n\n1 2 3\n");
    const PointCloud cloud = load_point_cloud(f.path, CloudFormat::Xyz);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.point(0) == Vec3(0.5, 1.5, 2.5));
}

TEST_CASE("xyz loader names the offending line on a parse failure") {
    TempFile f("bad.xyz");
    f.write("0 0 0\n1 abc 0\n");
    try {
        load_point_cloud(f.path, CloudFormat::Xyz);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("empty and missing files are rejected") {
    TempFile f("empty.xyz");
    f.write("# nothing\n");
    CHECK_THROWS_AS(load_point_cloud(f.path, CloudFormat::Xyz), DegenerateInputError);
    CHECK_THROWS_AS(load_point_cloud("/tmp/udf_geo_no_such_file.xyz", CloudFormat::Xyz), IoError);
}

TEST_CASE("10k-point sphere sample survives a file round trip") {
    const auto shape = fixtures::AnalyticShape::sphere(0.4);
    const PointCloud cloud = shape.sample_surface(10000, 11);
    TempFile f("sphere.xyz");
    save_point_cloud(f.path, cloud, CloudFormat::Xyz);
    const PointCloud back = load_point_cloud(f.path, CloudFormat::Xyz);
    REQUIRE(back.size() == 10000);
    for (std::size_t i = 0; i < back.size(); i += 997)
        CHECK((back.point(i) - cloud.point(i)).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ply round trip, ascii and binary reads") {
    const std::vector<Vec3> pts = {{0.25, -0.5, 1.0}, {1e-9, 2.0, -3.0}};
    TempFile f("pts.ply");
    save_point_cloud(f.path, PointCloud(pts), CloudFormat::Ply);
    const PointCloud back = load_point_cloud(f.path, CloudFormat::Ply);
    REQUIRE(back.size() == 2);
    CHECK((back.point(0) - pts[0]).norm() < 1e-15);
    CHECK((back.point(1) - pts[1]).norm() < 1e-15);

    // binary little-endian with float coordinates and an extra property
    TempFile b("pts_bin.ply");
    {
        std::ofstream out(b.path, std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float confidence\nend_header\n";
        const float rows[2][4] = {{1.0f, 2.0f, 3.0f, 0.9f}, {-1.5f, 0.25f, 4.0f, 0.1f}};
        out.write(reinterpret_cast<const char*>(rows), sizeof(rows));
    }
    const PointCloud bin = load_point_cloud(b.path, CloudFormat::Ply);
    REQUIRE(bin.size() == 2);
    CHECK(bin.point(0) == Vec3(1.0, 2.0, 3.0));
    CHECK(bin.point(1) == Vec3(-1.5, 0.25, 4.0));
}

TEST_CASE("normalize maps the bounding box to the unit cube") {
    const PointCloud cloud({{0, 0, 0}, {2, 0, 0}});
    const PointCloud n = normalize(cloud);
    CHECK(n.point(0) == Vec3(-0.5, 0, 0));
    CHECK(n.point(1) == Vec3(0.5, 0, 0));
    CHECK(n.normalization().center == Vec3(1, 0, 0));
    CHECK(n.normalization().scale == 2.0);
    CHECK(n.normalization().to_original(n.point(0)) == cloud.point(0));
}

TEST_CASE("normalize is idempotent and composes the recorded transform") {
    const PointCloud cloud(random_points(100, 5, 3.0));
    const PointCloud once = normalize(cloud);
    const PointCloud twice = normalize(once);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK((once.point(i) - twice.point(i)).norm() < 1e-12);
        CHECK(once.point(i).cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
        // composed transform still inverts to the raw coordinates
        CHECK((twice.normalization().to_original(twice.point(i)) - cloud.point(i)).norm() < 1e-12);
    }
    CHECK(twice.normalization().scale == doctest::Approx(once.normalization().scale));
}

TEST_CASE("normalize rejects zero-extent input") {
    const PointCloud cloud(std::vector<Vec3>(5, Vec3(1, 2, 3)));
    CHECK_THROWS_AS(normalize(cloud), DegenerateInputError);
}

TEST_CASE("point cloud rejects empty and non-finite input") {
    CHECK_THROWS_AS(PointCloud(std::vector<Vec3>{}), DegenerateInputError);
    std::vector<Vec3> pts = {{0, 0, 0}, {1, std::nan(""), 0}};
    CHECK_THROWS_AS(PointCloud(pts), DegenerateInputError);
}

TEST_CASE("nearest on the two-point example") {
    const PointCloud cloud({{0, 0, 0}, {1, 0, 0}});
    const auto hit = cloud.nearest(Vec3(0.9, 0, 0));
    CHECK(hit.point == Vec3(1, 0, 0));
    CHECK(hit.index == 1);
    CHECK(hit.distance == doctest::Approx(0.1));

    const auto self = cloud.nearest(Vec3(1, 0, 0));
    CHECK(self.index == 1);
    CHECK(self.distance == 0.0);
}

TEST_CASE("nearest matches an exhaustive scan with lowest-index ties") {
    const auto pts = random_points(1000, 17);
    const PointCloud cloud(pts);
    const auto queries = random_points(100, 18);
    for (const Vec3& q : queries) {
        int best = 0;
        double best_d = (pts[0] - q).squaredNorm();
        for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
            const double d = (pts[i] - q).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const auto hit = cloud.nearest(q);
        CHECK(hit.index == best);
        CHECK(hit.distance == doctest::Approx(std::sqrt(best_d)).epsilon(1e-12));
    }

    // exact duplicate points: the lower index must win
    std::vector<Vec3> dup = {{0, 0, 0}, {1, 1, 1}, {1, 1, 1}};
    const PointCloud dcloud(dup);
    CHECK(dcloud.nearest(Vec3(1.1, 1, 1)).index == 1);
}

TEST_CASE("knn_distance is the distance to the k-th neighbor") {
    const PointCloud cloud({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {6, 0, 0}});
    CHECK(cloud.knn_distance(0, 1) == doctest::Approx(1.0));
    CHECK(cloud.knn_distance(0, 2) == doctest::Approx(3.0));
    CHECK(cloud.knn_distance(0, 3) == doctest::Approx(6.0));
    // k clamped to N-1
    CHECK(cloud.knn_distance(0, 50) == doctest::Approx(6.0));
}

TEST_CASE("chamfer examples from the training-form definition") {
    CHECK(chamfer_l2({{0, 0, 0}}, {{0, 0, 0}}) == 0.0);
    CHECK(chamfer_l2({{1, 0, 0}}, {{0, 0, 0}}) == doctest::Approx(2.0));
    CHECK(chamfer_l2({{0, 0, 0}, {2, 0, 0}}, {{0, 0, 0}}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(chamfer_l2({}, {{0, 0, 0}}), DegenerateInputError);
}

TEST_CASE("chamfer is symmetric, non-negative, and zero on identity") {
    const auto a = random_points(80, 3);
    const auto b = random_points(60, 4);
    CHECK(chamfer_l2(a, b) == doctest::Approx(chamfer_l2(b, a)));
    CHECK(chamfer_l2(a, a) == 0.0);
    CHECK(chamfer_l2(a, b) >= 0.0);
}

TEST_CASE("triangle mesh boundary edges, components, area") {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    mesh.triangles = {{0, 1, 2}};
    CHECK(mesh.boundary_edge_count() == 3);
    CHECK(mesh.connected_component_count() == 1);
    CHECK(mesh.area() == doctest::Approx(0.5));

    mesh.triangles.push_back({1, 3, 2});  // shared edge 1-2
    CHECK(mesh.boundary_edge_count() == 4);
    CHECK(mesh.connected_component_count() == 1);
    CHECK(mesh.area() == doctest::Approx(1.0));

    // second, disjoint component
    mesh.vertices.push_back({5, 0, 0});
    mesh.vertices.push_back({6, 0, 0});
    mesh.vertices.push_back({5, 1, 0});
    mesh.triangles.push_back({4, 5, 6});
    CHECK(mesh.connected_component_count() == 2);

    CHECK(TriangleMesh{}.empty());
    CHECK(TriangleMesh{}.boundary_edge_count() == 0);
    CHECK(TriangleMesh{}.connected_component_count() == 0);
}

TEST_CASE("obj and ply mesh round trips") {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 1}};
    mesh.triangles = {{0, 1, 2}, {0, 1, 3}};

    TempFile obj("mesh.obj");
    save_mesh_obj(obj.path, mesh);
    const TriangleMesh back = load_mesh(obj.path);
    REQUIRE(back.vertices.size() == 4);
    REQUIRE(back.triangles.size() == 2);
    CHECK(back.triangles[1] == std::array<int, 3>{0, 1, 3});
    CHECK((back.vertices[3] - mesh.vertices[3]).norm() < 1e-9);

    TempFile ply("mesh.ply");
    save_mesh_ply(ply.path, mesh);
    const TriangleMesh pback = load_mesh(ply.path);
    REQUIRE(pback.vertices.size() == 4);
    REQUIRE(pback.triangles.size() == 2);
    CHECK(pback.triangles[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("obj loader triangulates polygon faces and accepts slash forms") {
    TempFile f("quad.obj");
    f.write("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n");
    const TriangleMesh mesh = load_mesh(f.path);
    REQUIRE(mesh.triangles.size() == 2);
    CHECK(mesh.triangles[0] == std::array<int, 3>{0, 1, 2});
    CHECK(mesh.triangles[1] == std::array<int, 3>{0, 2, 3});
}
