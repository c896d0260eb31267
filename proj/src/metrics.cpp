#include "udf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "udf/errors.hpp"
#include "udf/kdtree.hpp"

namespace udf::metrics {

namespace {

void require_nonempty(const std::vector<Vec3>& pts, const char* who) {
    if (pts.empty()) throw DegenerateInputError(std::string(who) + ": empty point set");
}

}  // namespace

SampledSurface sample_mesh(const TriangleMesh& mesh, int count, unsigned long long seed) {
    if (mesh.triangles.empty()) throw DegenerateInputError("sample_mesh: empty mesh");
    if (count < 1) throw ConfigError("sample_mesh: count must be >= 1");

    std::vector<double> cumulative(mesh.triangles.size());
    std::vector<Vec3> face_normal(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        const Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        const Vec3 cross = e1.cross(e2);
        total += 0.5 * cross.norm();
        cumulative[t] = total;
        face_normal[t] = cross.norm() > 0 ? Vec3(cross / cross.norm()) : Vec3(0, 0, 1);
    }
    if (total <= 0.0) throw DegenerateInputError("sample_mesh: zero-area mesh");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SampledSurface out;
    out.points.reserve(count);
    out.normals.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double pick = uni(rng) * total;
        const std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        const std::size_t ti = std::min(t, mesh.triangles.size() - 1);
        const auto& tri = mesh.triangles[ti];
        // sqrt trick gives a uniform barycentric sample
        const double r1 = std::sqrt(uni(rng));
        const double r2 = uni(rng);
        const Vec3 p = (1.0 - r1) * mesh.vertices[tri[0]] +
                       r1 * (1.0 - r2) * mesh.vertices[tri[1]] + r1 * r2 * mesh.vertices[tri[2]];
        out.points.push_back(p);
        out.normals.push_back(face_normal[ti]);
    }
    return out;
}

double chamfer_l1(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    require_nonempty(a, "chamfer_l1");
    require_nonempty(b, "chamfer_l1");
    KdTree3 ta(a), tb(b);
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const Vec3& p : a) sum_ab += tb.nearest(p).distance;
    for (const Vec3& p : b) sum_ba += ta.nearest(p).distance;
    return 0.5 * (sum_ab / a.size() + sum_ba / b.size());
}

double chamfer_l2_eval(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    require_nonempty(a, "chamfer_l2_eval");
    require_nonempty(b, "chamfer_l2_eval");
    KdTree3 ta(a), tb(b);
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const Vec3& p : a) {
        const double d = tb.nearest(p).distance;
        sum_ab += d * d;
    }
    for (const Vec3& p : b) {
        const double d = ta.nearest(p).distance;
        sum_ba += d * d;
    }
    return 0.5 * (sum_ab / a.size() + sum_ba / b.size());
}

double fscore(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt, double tau) {
    require_nonempty(pred, "fscore");
    require_nonempty(gt, "fscore");
    KdTree3 tp(pred), tg(gt);
    std::size_t hit_p = 0, hit_g = 0;
    for (const Vec3& p : pred)
        if (tg.nearest(p).distance <= tau) ++hit_p;
    for (const Vec3& p : gt)
        if (tp.nearest(p).distance <= tau) ++hit_g;
    const double precision = static_cast<double>(hit_p) / pred.size();
    const double recall = static_cast<double>(hit_g) / gt.size();
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double normal_consistency(const SampledSurface& pred, const SampledSurface& gt) {
    if (pred.points.size() != pred.normals.size() || gt.points.size() != gt.normals.size())
        throw DegenerateInputError("normal_consistency: point/normal count mismatch");
    require_nonempty(pred.points, "normal_consistency");
    require_nonempty(gt.points, "normal_consistency");
    KdTree3 tp(pred.points), tg(gt.points);
    auto directed = [](const SampledSurface& from, const SampledSurface& to,
                       const KdTree3& to_tree) {
        double sum = 0.0;
        for (std::size_t i = 0; i < from.points.size(); ++i) {
            const int j = to_tree.nearest(from.points[i]).index;
            const double na = from.normals[i].norm(), nb = to.normals[j].norm();
            if (na < 1e-12 || nb < 1e-12) continue;
            sum += std::abs(from.normals[i].dot(to.normals[j])) / (na * nb);
        }
        return sum / static_cast<double>(from.points.size());
    };
    return 100.0 * 0.5 * (directed(pred, gt, tg) + directed(gt, pred, tp));
}

double rmse_unoriented(const std::vector<Vec3>& pred_normals,
                       const std::vector<Vec3>& gt_normals) {
    if (pred_normals.size() != gt_normals.size())
        throw DegenerateInputError("rmse_unoriented: count mismatch");
    require_nonempty(pred_normals, "rmse_unoriented");
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < pred_normals.size(); ++i) {
        const double na = pred_normals[i].norm(), nb = gt_normals[i].norm();
        if (na < 1e-12 || nb < 1e-12)
            throw DegenerateInputError("rmse_unoriented: zero-length normal");
        const double c = std::clamp(std::abs(pred_normals[i].dot(gt_normals[i])) / (na * nb),
                                    0.0, 1.0);
        const double deg = std::acos(c) * 180.0 / std::numbers::pi;
        sum_sq += deg * deg;
    }
    return std::sqrt(sum_sq / static_cast<double>(pred_normals.size()));
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection, 5.1.5
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_to_mesh_distance(const Vec3& p, const TriangleMesh& mesh) {
    if (mesh.triangles.empty())
        throw DegenerateInputError("point_to_mesh_distance: empty mesh");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tri : mesh.triangles) {
        const Vec3 q = closest_point_on_triangle(p, mesh.vertices[tri[0]],
                                                 mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        best = std::min(best, (p - q).norm());
    }
    return best;
}

double p2f(const std::vector<Vec3>& pred, const TriangleMesh& gt_mesh) {
    require_nonempty(pred, "p2f");
    if (gt_mesh.triangles.empty()) throw DegenerateInputError("p2f: empty mesh");
    double sum = 0.0;
    for (const Vec3& p : pred) sum += point_to_mesh_distance(p, gt_mesh);
    return sum / static_cast<double>(pred.size());
}

double hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    require_nonempty(a, "hausdorff");
    require_nonempty(b, "hausdorff");
    KdTree3 ta(a), tb(b);
    double max_ab = 0.0, max_ba = 0.0;
    for (const Vec3& p : a) max_ab = std::max(max_ab, tb.nearest(p).distance);
    for (const Vec3& p : b) max_ba = std::max(max_ba, ta.nearest(p).distance);
    return std::max(max_ab, max_ba);
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "# chamfer-l1: mean unsquared distance, both directions averaged\n";
    out << "# chamfer-l2: mean squared distance, both directions averaged, shown x 1e4\n";
    out << "metric\tvalue\n";
    if (cd_l1) out << "cd_l1\t" << *cd_l1 << "\n";
    if (cd_l2) out << "cd_l2_x1e4\t" << *cd_l2 * 1e4 << "\n";
    for (const auto& [tau, score] : fscore_at) out << "fscore@" << tau << "\t" << score << "\n";
    if (normal_consistency) out << "normal_consistency\t" << *normal_consistency << "\n";
    if (rmse_deg) out << "rmse_deg\t" << *rmse_deg << "\n";
    if (p2f) out << "p2f\t" << *p2f << "\n";
    if (hausdorff) out << "hausdorff\t" << *hausdorff << "\n";
    return out.str();
}

std::string EvalReport::to_key_values() const {
    std::ostringstream out;
    if (cd_l1) out << "cd_l1=" << *cd_l1 << "\n";
    if (cd_l2) out << "cd_l2=" << *cd_l2 << "\n";
    for (const auto& [tau, score] : fscore_at) out << "fscore_" << tau << "=" << score << "\n";
    if (normal_consistency) out << "normal_consistency=" << *normal_consistency << "\n";
    if (rmse_deg) out << "rmse_deg=" << *rmse_deg << "\n";
    if (p2f) out << "p2f=" << *p2f << "\n";
    if (hausdorff) out << "hausdorff=" << *hausdorff << "\n";
    return out.str();
}

EvalReport evaluate_clouds(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                           const EvalOptions& opts) {
    EvalReport r;
    r.cd_l1 = chamfer_l1(pred, gt);
    r.cd_l2 = chamfer_l2_eval(pred, gt);
    for (double tau : opts.fscore_thresholds) r.fscore_at[tau] = fscore(pred, gt, tau);
    r.hausdorff = hausdorff(pred, gt);
    return r;
}

EvalReport evaluate_meshes(const TriangleMesh& pred, const TriangleMesh& gt,
                           const EvalOptions& opts) {
    const SampledSurface sp = sample_mesh(pred, opts.sample_count, opts.seed);
    const SampledSurface sg = sample_mesh(gt, opts.sample_count, opts.seed + 1);
    EvalReport r = evaluate_clouds(sp.points, sg.points, opts);
    r.normal_consistency = normal_consistency(sp, sg);
    r.p2f = p2f(sp.points, gt);
    return r;
}

}  // namespace udf::metrics
