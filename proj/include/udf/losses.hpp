#pragma once

#include <optional>
#include <random>
#include <vector>

#include "udf/field.hpp"
#include "udf/geometry.hpp"
#include "udf/kdtree.hpp"
#include "udf/tape.hpp"

namespace udf::losses {

struct LossWeights {
    double alpha1 = 0.002;  // level-set projection
    double alpha2 = 0.1;    // surface unsigned distance
    double alpha3 = 0.01;   // gradient-surface orthogonality
    double lambda = 10.0;   // adaptive-weight rate
};

struct LossFlags {
    double eps_grad = 1e-12;
    bool detach_pull_location = true;  // re-evaluate grad at a detached q-hat
    bool detach_gamma = true;          // adaptive weight treated as a constant
    bool adaptive_weight = true;       // gamma = 1 everywhere when false
};

struct LossBreakdown {
    double cd = 0, proj = 0, dist = 0, orth = 0, total = 0;
};

struct SkipCounts {
    int degenerate_gradient = 0;  // |grad| below eps at q or q-hat
    int coincident = 0;           // query equals its nearest surface point
};

// Single pull step, q-hat = q - f(q) * grad / |grad|. Empty when the
// gradient is degenerate.
std::optional<Vec3> pull_to_surface(const ScalarField& field, const Vec3& q,
                                    double eps_grad = 1e-12);

double adaptive_weight(const ScalarField& field, const Vec3& q, double lambda);

// Value-level evaluation of all four terms over explicit query/nearest
// arrays. Used by the analytic-oracle tests and as an independent check of
// the recorded training graph.
LossBreakdown evaluate_losses(const ScalarField& field, const std::vector<Vec3>& queries,
                              const std::vector<Vec3>& nearest_points, const PointCloud& cloud,
                              const LossWeights& weights, const LossFlags& flags = {},
                              SkipCounts* skips = nullptr);

struct StepOptions {
    LossWeights weights;
    LossFlags flags;
    int dist_subsample = 5000;
    int cd_subsample = 5000;
    bool build_all_terms = false;  // build zero-weighted terms anyway
};

struct StepNodes {
    int cd = -1, proj = -1, dist = -1, orth = -1, total = -1;
    LossBreakdown breakdown;
    SkipCounts skips;
};

// Records the full training objective on the tape and returns its node
// handles plus the evaluated breakdown. rng drives the per-step cloud
// subsampling for the cd second direction and the dist term.
template <typename Scalar>
StepNodes build_step(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                     const UdfField& field, const Eigen::Matrix3Xd& queries,
                     const Eigen::Matrix3Xd& nearest_points, const PointCloud& cloud,
                     const StepOptions& opts, std::mt19937_64& rng);

// ---- template implementation ----

template <typename Scalar>
StepNodes build_step(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                     const UdfField& field, const Eigen::Matrix3Xd& queries,
                     const Eigen::Matrix3Xd& nearest_points, const PointCloud& cloud,
                     const StepOptions& opts, std::mt19937_64& rng) {
    using Mat = typename Tape<Scalar>::Mat;
    const Eigen::Index batch = queries.cols();
    if (batch < 1) throw DegenerateInputError("build_step: empty query batch");
    StepNodes out;

    const FieldGraphNodes net = field.emit(tape, params, queries, true);
    const int gnorm = tape.col_norm(net.gradient);

    // Degenerate-gradient skip mask; masked columns get a unit norm so the
    // reciprocal stays finite, and are excluded from every mean.
    std::vector<char> mask(static_cast<std::size_t>(batch), 1);
    Mat norm_fix = Mat::Zero(1, batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
        if (static_cast<double>(tape.value(gnorm)(0, j)) < opts.flags.eps_grad) {
            mask[static_cast<std::size_t>(j)] = 0;
            norm_fix(0, j) = Scalar(1);
            ++out.skips.degenerate_gradient;
        }
    }
    const int gnorm_safe = tape.add(gnorm, tape.constant(norm_fix));
    const int inv_gnorm = tape.cinv(gnorm_safe);

    bool any_active = false;
    for (char m : mask) any_active |= m != 0;
    if (!any_active) throw DegenerateInputError("all queries skipped (degenerate gradients)");

    // pull: q-hat = q - f * grad / |grad|
    const int q_const = tape.constant(queries.template cast<Scalar>());
    const int pull_scale = tape.hadamard(tape.affine_const(net.distance, Scalar(-1), Scalar(0)),
                                         inv_gnorm);
    const int q_hat = tape.add(q_const, tape.col_scale(net.gradient, pull_scale));

    Eigen::Matrix3Xd q_hat_vals(3, batch);
    for (Eigen::Index j = 0; j < batch; ++j)
        q_hat_vals.col(j) = tape.value(q_hat).col(j).template cast<double>();

    // L_CD, first direction: moved queries to their nearest cloud point.
    Mat nearest_to_qhat = Mat::Zero(3, batch);
    std::vector<Vec3> moved;
    std::vector<int> moved_col;
    for (Eigen::Index j = 0; j < batch; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) continue;
        const Vec3 qh = q_hat_vals.col(j);
        nearest_to_qhat.col(j) = cloud.nearest(qh).point.template cast<Scalar>();
        moved.push_back(qh);
        moved_col.push_back(static_cast<int>(j));
    }
    const int cd_fwd = tape.masked_mean(
        tape.col_norm(tape.sub(q_hat, tape.constant(nearest_to_qhat))), mask);

    // Second direction: sampled cloud points to their nearest moved query.
    const int n_sub = std::min<int>(opts.cd_subsample, static_cast<int>(cloud.size()));
    KdTree3 moved_tree(moved);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(cloud.size()) - 1);
    std::vector<int> gather_cols(n_sub);
    Mat cd_targets(3, n_sub);
    for (int s = 0; s < n_sub; ++s) {
        const int idx = static_cast<int>(cloud.size()) == n_sub ? s : pick(rng);
        const Vec3& p = cloud.point(idx);
        gather_cols[s] = moved_col[moved_tree.nearest(p).index];
        cd_targets.col(s) = p.template cast<Scalar>();
    }
    const int cd_bwd =
        tape.mean(tape.col_norm(tape.sub(tape.gather(q_hat, gather_cols),
                                         tape.constant(cd_targets))));
    out.cd = tape.add(cd_fwd, cd_bwd);
    int total = out.cd;

    const auto& w = opts.weights;

    // L_proj: gradient parallelism between q and its detached projection.
    if (w.alpha1 > 0.0 || opts.build_all_terms) {
        FieldGraphNodes net2;
        if (opts.flags.detach_pull_location) {
            net2 = field.emit(tape, params, q_hat_vals, true);
        } else {
            net2 = field.emit_from_node(tape, params, q_hat, true);
        }
        const int g2norm = tape.col_norm(net2.gradient);
        std::vector<char> mask2 = mask;
        Mat fix2 = Mat::Zero(1, batch);
        for (Eigen::Index j = 0; j < batch; ++j) {
            if (mask2[static_cast<std::size_t>(j)] &&
                static_cast<double>(tape.value(g2norm)(0, j)) < opts.flags.eps_grad) {
                mask2[static_cast<std::size_t>(j)] = 0;
                fix2(0, j) = Scalar(1);
                ++out.skips.degenerate_gradient;
            }
        }
        bool any2 = false;
        for (char m : mask2) any2 |= m != 0;
        if (any2) {
            const int inv_g2 = tape.cinv(tape.add(g2norm, tape.constant(fix2)));
            const int cosine = tape.hadamard(tape.col_dot(net.gradient, net2.gradient),
                                             tape.hadamard(inv_gnorm, inv_g2));
            int term = tape.affine_const(tape.abs(cosine), Scalar(-1), Scalar(1));
            if (opts.flags.adaptive_weight) {
                if (opts.flags.detach_gamma) {
                    Mat gamma(1, batch);
                    for (Eigen::Index j = 0; j < batch; ++j)
                        gamma(0, j) = std::exp(Scalar(-w.lambda) * tape.value(net.distance)(0, j));
                    term = tape.hadamard(term, tape.constant(gamma));
                } else {
                    term = tape.hadamard(
                        term, tape.exp(tape.affine_const(net.distance, Scalar(-w.lambda),
                                                         Scalar(0))));
                }
            }
            out.proj = tape.masked_mean(term, mask2);
            total = tape.add(total, tape.scale(out.proj, Scalar(w.alpha1)));
        }
    }

    // L_dist: |f| on a sampled subset of the raw points.
    if (w.alpha2 > 0.0 || opts.build_all_terms) {
        const int n_dist = std::min<int>(opts.dist_subsample, static_cast<int>(cloud.size()));
        Eigen::Matrix3Xd surf(3, n_dist);
        for (int s = 0; s < n_dist; ++s) {
            const int idx = static_cast<int>(cloud.size()) == n_dist ? s : pick(rng);
            surf.col(s) = cloud.point(idx);
        }
        const FieldGraphNodes net_surf = field.emit(tape, params, surf, false);
        out.dist = tape.mean(net_surf.distance);
        total = tape.add(total, tape.scale(out.dist, Scalar(w.alpha2)));
    }

    // L_orth: gradient vs the direction to the cached nearest surface point.
    if (w.alpha3 > 0.0 || opts.build_all_terms) {
        Eigen::Matrix3Xd dir = nearest_points - queries;
        std::vector<char> mask3 = mask;
        Mat inv_dir_norm = Mat::Zero(1, batch);
        for (Eigen::Index j = 0; j < batch; ++j) {
            const double len = dir.col(j).norm();
            if (len < opts.flags.eps_grad) {
                if (mask3[static_cast<std::size_t>(j)]) {
                    mask3[static_cast<std::size_t>(j)] = 0;
                    ++out.skips.coincident;
                }
            } else {
                inv_dir_norm(0, j) = Scalar(1.0 / len);
            }
        }
        bool any3 = false;
        for (char m : mask3) any3 |= m != 0;
        if (any3) {
            const int cosine = tape.hadamard(
                tape.col_dot(net.gradient, tape.constant(dir.template cast<Scalar>())),
                tape.hadamard(inv_gnorm, tape.constant(inv_dir_norm)));
            const int term = tape.affine_const(tape.abs(cosine), Scalar(-1), Scalar(1));
            out.orth = tape.masked_mean(term, mask3);
            total = tape.add(total, tape.scale(out.orth, Scalar(w.alpha3)));
        }
    }

    out.total = total;
    out.breakdown.cd = static_cast<double>(tape.scalar(out.cd));
    out.breakdown.proj = out.proj >= 0 ? static_cast<double>(tape.scalar(out.proj)) : 0.0;
    out.breakdown.dist = out.dist >= 0 ? static_cast<double>(tape.scalar(out.dist)) : 0.0;
    out.breakdown.orth = out.orth >= 0 ? static_cast<double>(tape.scalar(out.orth)) : 0.0;
    out.breakdown.total = static_cast<double>(tape.scalar(out.total));
    return out;
}

}  // namespace udf::losses
