#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "udf/geometry.hpp"

namespace udf::metrics {

// Area-weighted surface samples with the normal of the source face.
struct SampledSurface {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
};

SampledSurface sample_mesh(const TriangleMesh& mesh, int count, unsigned long long seed);

// Mean unsquared nearest-neighbor distance, both directions averaged.
double chamfer_l1(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
// Mean squared nearest-neighbor distance, both directions averaged.
double chamfer_l2_eval(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// F1 of precision/recall at distance tau, scaled to [0, 100].
double fscore(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt, double tau);

// Bidirectional mean |cos| between each normal and its nearest neighbor's
// normal, scaled to [0, 100].
double normal_consistency(const SampledSurface& pred, const SampledSurface& gt);

// Index-aligned unoriented angle RMSE in degrees (angles folded to [0, 90]).
double rmse_unoriented(const std::vector<Vec3>& pred_normals,
                       const std::vector<Vec3>& gt_normals);

// Exact closest point on a triangle.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

double point_to_mesh_distance(const Vec3& p, const TriangleMesh& mesh);

// Mean point-to-triangle distance from each point to the mesh.
double p2f(const std::vector<Vec3>& pred, const TriangleMesh& gt_mesh);

// Max over both directed max-min point distances.
double hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

struct EvalReport {
    std::optional<double> cd_l1;
    std::optional<double> cd_l2;             // reported x 1e4 in text output
    std::map<double, double> fscore_at;      // threshold -> score
    std::optional<double> normal_consistency;
    std::optional<double> rmse_deg;
    std::optional<double> p2f;
    std::optional<double> hausdorff;

    std::string to_text() const;       // delimited table with conventions header
    std::string to_key_values() const; // key=value lines
};

struct EvalOptions {
    int sample_count = 100000;
    unsigned long long seed = 0;
    std::vector<double> fscore_thresholds = {0.005, 0.01};
};

// Cloud-vs-cloud evaluation (no normals, no p2f).
EvalReport evaluate_clouds(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                           const EvalOptions& opts = {});

// Mesh-vs-mesh: both sampled, includes normal consistency and p2f/hausdorff.
EvalReport evaluate_meshes(const TriangleMesh& pred, const TriangleMesh& gt,
                           const EvalOptions& opts = {});

}  // namespace udf::metrics
