#include "udf/applications.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "udf/errors.hpp"

namespace udf::applications {

EstimatedNormals estimate_normals(const ScalarField& field, const PointCloud& cloud) {
    EstimatedNormals out;
    out.normals.resize(cloud.size(), Vec3::Zero());
    out.degenerate.assign(cloud.size(), 0);
    Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(cloud.size()));
    for (std::size_t i = 0; i < cloud.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = cloud.point(i);
    Eigen::VectorXd vals;
    Eigen::Matrix3Xd grads;
    field.eval_with_gradient_batch(pts, vals, grads);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 g = grads.col(static_cast<Eigen::Index>(i));
        const double norm = g.norm();
        if (norm < 1e-12) {
            out.degenerate[i] = 1;
            ++out.degenerate_count;
        } else {
            out.normals[i] = g / norm;
        }
    }
    return out;
}

void save_normals(const std::string& path, const PointCloud& cloud,
                  const EstimatedNormals& normals) {
    if (normals.normals.size() != cloud.size())
        throw DegenerateInputError("save_normals: normal count does not match the cloud");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.point(i);
        const Vec3& n = normals.normals[i];
        out << p.x() << " " << p.y() << " " << p.z() << " " << n.x() << " " << n.y() << " "
            << n.z() << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

PointCloud upsample(const ScalarField& field, const PointCloud& cloud,
                    const UpsampleConfig& cfg, unsigned long long seed) {
    if (cfg.factor < 1) throw ConfigError("upsample: factor must be >= 1");
    if (cfg.beta <= 0.0) throw ConfigError("upsample: beta must be > 0");
    if (cfg.pull_steps < 1) throw ConfigError("upsample: pull_steps must be >= 1");
    if (cloud.size() == 0) throw DegenerateInputError("upsample: empty cloud");

    const std::size_t target = cloud.size() * static_cast<std::size_t>(cfg.factor);
    std::vector<Vec3> kept;
    kept.reserve(target);
    for (int round = 0; round < cfg.max_rounds && kept.size() < target; ++round) {
        const auto batch = sampler::sample_queries(cloud, cfg.factor,
                                                   seed + 0x75a301u + round, cfg.sampler_opts);
        Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(batch.size()));
        for (std::size_t i = 0; i < batch.size(); ++i)
            pts.col(static_cast<Eigen::Index>(i)) = batch.queries[i];
        for (int step = 0; step < cfg.pull_steps; ++step) {
            Eigen::VectorXd vals;
            Eigen::Matrix3Xd grads;
            field.eval_with_gradient_batch(pts, vals, grads);
            for (Eigen::Index j = 0; j < pts.cols(); ++j) {
                const double norm = grads.col(j).norm();
                // only the first step filters; later steps refine survivors
                if (step == 0 && (vals(j) >= cfg.beta || norm < 1e-12)) {
                    vals(j) = std::numeric_limits<double>::quiet_NaN();
                    continue;
                }
                if (std::isnan(vals(j)) || norm < 1e-12) continue;
                pts.col(j) -= vals(j) * grads.col(j) / norm;
            }
            if (step == 0) {
                // compact survivors to the front so later steps skip rejects
                Eigen::Index w = 0;
                for (Eigen::Index j = 0; j < pts.cols(); ++j) {
                    if (std::isnan(vals(j))) continue;
                    pts.col(w++) = pts.col(j);
                }
                pts.conservativeResize(3, w);
            }
        }
        for (Eigen::Index j = 0; j < pts.cols() && kept.size() < target; ++j)
            kept.push_back(pts.col(j));
    }
    if (kept.size() < target)
        throw UpsamplePartialError("upsample: retry cap exhausted with " +
                                       std::to_string(kept.size()) + " of " +
                                       std::to_string(target) + " points (beta too tight?)",
                                   std::move(kept));
    return PointCloud(std::move(kept));
}

}  // namespace udf::applications
