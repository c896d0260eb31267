#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "udf/kdtree.hpp"

namespace udf {

struct Normalization {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;

    Vec3 to_normalized(const Vec3& p) const { return (p - center) / scale; }
    Vec3 to_original(const Vec3& p) const { return p * scale + center; }
};

// Immutable after construction; concurrent queries are safe.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }
    const Vec3& point(std::size_t i) const { return points_[i]; }
    const Normalization& normalization() const { return norm_; }

    struct NearestHit {
        Vec3 point;
        int index;
        double distance;
    };
    NearestHit nearest(const Vec3& q) const;

    // Distance from p_i to its k-th nearest neighbor (excluding itself).
    double knn_distance(std::size_t i, int k) const;

    const KdTree3& index() const { return tree_; }

private:
    friend PointCloud normalize(const PointCloud&);
    std::vector<Vec3> points_;
    KdTree3 tree_;
    Normalization norm_;
};

// Center at the bounding-box midpoint and scale the longest edge to 1.
// Records the applied (center, scale) for inverse mapping.
PointCloud normalize(const PointCloud& cloud);

// Training-form chamfer (unsquared L2, sum of both directed means).
double chamfer_l2(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    // Edges belonging to exactly one triangle.
    std::size_t boundary_edge_count() const;
    // Connected components by shared vertices (isolated vertices ignored).
    int connected_component_count() const;
    double area() const;
};

enum class CloudFormat { Xyz, Ply };

PointCloud load_point_cloud(const std::string& path, CloudFormat format);
PointCloud load_point_cloud(const std::string& path);  // format from extension
void save_point_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format);

TriangleMesh load_mesh(const std::string& path);  // .obj or .ply (ascii)
void save_mesh_obj(const std::string& path, const TriangleMesh& mesh);
void save_mesh_ply(const std::string& path, const TriangleMesh& mesh);

}  // namespace udf
