#include "udf/losses.hpp"

#include <cmath>

#include "udf/errors.hpp"

namespace udf::losses {

std::optional<Vec3> pull_to_surface(const ScalarField& field, const Vec3& q, double eps_grad) {
    const auto [d, g] = field.eval_with_gradient(q);
    const double norm = g.norm();
    if (norm < eps_grad) return std::nullopt;
    return Vec3(q - d * g / norm);
}

double adaptive_weight(const ScalarField& field, const Vec3& q, double lambda) {
    return std::exp(-lambda * std::abs(field.eval(q)));
}

LossBreakdown evaluate_losses(const ScalarField& field, const std::vector<Vec3>& queries,
                              const std::vector<Vec3>& nearest_points, const PointCloud& cloud,
                              const LossWeights& weights, const LossFlags& flags,
                              SkipCounts* skips) {
    if (queries.empty()) throw DegenerateInputError("evaluate_losses: empty query batch");
    SkipCounts local;
    SkipCounts& count = skips ? *skips : local;

    std::vector<Vec3> moved;
    std::vector<std::size_t> moved_src;
    std::vector<Vec3> grads(queries.size());
    std::vector<double> dists(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto [d, g] = field.eval_with_gradient(queries[i]);
        dists[i] = d;
        grads[i] = g;
        if (g.norm() < flags.eps_grad) {
            ++count.degenerate_gradient;
            continue;
        }
        moved.push_back(queries[i] - d * g / g.norm());
        moved_src.push_back(i);
    }
    if (moved.empty())
        throw DegenerateInputError("all queries skipped (degenerate gradients)");

    LossBreakdown out;
    out.cd = chamfer_l2(moved, cloud.points());

    // projection: gradient at q vs gradient at the pulled location
    double proj_sum = 0.0;
    int proj_count = 0;
    for (std::size_t k = 0; k < moved.size(); ++k) {
        const std::size_t i = moved_src[k];
        const auto [d2, g2] = field.eval_with_gradient(moved[k]);
        (void)d2;
        if (g2.norm() < flags.eps_grad) {
            ++count.degenerate_gradient;
            continue;
        }
        const double cosine = grads[i].dot(g2) / (grads[i].norm() * g2.norm());
        const double gamma =
            flags.adaptive_weight ? std::exp(-weights.lambda * dists[i]) : 1.0;
        proj_sum += gamma * (1.0 - std::abs(cosine));
        ++proj_count;
    }
    out.proj = proj_count > 0 ? proj_sum / proj_count : 0.0;

    double dist_sum = 0.0;
    for (const Vec3& p : cloud.points()) dist_sum += std::abs(field.eval(p));
    out.dist = dist_sum / static_cast<double>(cloud.size());

    double orth_sum = 0.0;
    int orth_count = 0;
    for (std::size_t k = 0; k < moved.size(); ++k) {
        const std::size_t i = moved_src[k];
        const Vec3 dir = nearest_points[i] - queries[i];
        if (dir.norm() < flags.eps_grad) {
            ++count.coincident;
            continue;
        }
        const double cosine = grads[i].dot(dir) / (grads[i].norm() * dir.norm());
        orth_sum += 1.0 - std::abs(cosine);
        ++orth_count;
    }
    out.orth = orth_count > 0 ? orth_sum / orth_count : 0.0;

    out.total = out.cd + weights.alpha1 * out.proj + weights.alpha2 * out.dist +
                weights.alpha3 * out.orth;
    return out;
}

}  // namespace udf::losses
