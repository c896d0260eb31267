#include "udf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace udf::trainer {

namespace {

void check_normalized(const PointCloud& cloud) {
    for (const Vec3& p : cloud.points()) {
        if (p.cwiseAbs().maxCoeff() > 0.5 + 1e-9)
            throw ConfigError("fit requires a normalized cloud (points within [-0.5, 0.5]^3)");
    }
}

template <typename Scalar>
losses::StepNodes run_step(const UdfField& field, const Eigen::Matrix3Xd& queries,
                           const Eigen::Matrix3Xd& nearest, const PointCloud& cloud,
                           const losses::StepOptions& opts, std::mt19937_64& rng,
                           std::vector<double>& grad_out) {
    Tape<Scalar> tape;
    const auto params = field.register_params(tape);
    const auto step = losses::build_step(tape, params, field, queries, nearest, cloud, opts, rng);
    tape.backward(step.total);
    const auto grads = tape.parameter_gradients();
    grad_out.assign(grads.begin(), grads.end());
    return step;
}

struct AdamState {
    std::vector<double> m, v;
    long long t = 0;
};

void apply_update(std::vector<double>& params, const std::vector<double>& grad,
                  const TrainConfig& cfg, AdamState& adam) {
    if (cfg.optimizer == Optimizer::PlainSgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.step_size * grad[i];
        return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (adam.m.empty()) {
        adam.m.assign(params.size(), 0.0);
        adam.v.assign(params.size(), 0.0);
    }
    ++adam.t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam.m[i] = beta1 * adam.m[i] + (1.0 - beta1) * grad[i];
        adam.v[i] = beta2 * adam.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= cfg.step_size * (adam.m[i] / c1) / (std::sqrt(adam.v[i] / c2) + eps);
    }
}

}  // namespace

FitResult fit(const PointCloud& cloud, const TrainConfig& cfg) {
    if (cfg.iterations < 1 || cfg.step_size <= 0.0)
        throw ConfigError("fit requires iterations >= 1 and step_size > 0");
    check_normalized(cloud);

    UdfField field(cfg.arch(), cfg.seed);
    std::vector<double> params = field.flat_params();
    std::vector<double> snapshot = params;
    int snapshot_iter = 0;
    AdamState adam;

    std::mt19937_64 step_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    TrainTrace trace;
    trace.trace_every = cfg.trace_every;

    losses::StepOptions opts;
    opts.weights = cfg.weights;
    opts.flags = cfg.flags;
    opts.dist_subsample = cfg.dist_subsample;
    opts.cd_subsample = cfg.cd_subsample;

    sampler::QueryBatch batch;
    const auto t_start = std::chrono::steady_clock::now();
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (iter % cfg.resample_every == 0) {
            const unsigned long long epoch = static_cast<unsigned long long>(iter / cfg.resample_every);
            batch = sampler::sample_queries(cloud, cfg.queries_per_point,
                                            cfg.seed + 0x51ed2700ull + epoch, cfg.sampler_opts);
        }
        const int m = static_cast<int>(batch.size());
        const int b = std::min(cfg.batch_queries, m);
        Eigen::Matrix3Xd queries(3, b), nearest(3, b);
        if (b == m) {
            for (int j = 0; j < b; ++j) {
                queries.col(j) = batch.queries[j];
                nearest.col(j) = batch.nearest_point[j];
            }
        } else {
            std::uniform_int_distribution<int> pick(0, m - 1);
            for (int j = 0; j < b; ++j) {
                const int idx = pick(step_rng);
                queries.col(j) = batch.queries[idx];
                nearest.col(j) = batch.nearest_point[idx];
            }
        }

        std::vector<double> grad;
        losses::StepNodes step;
        try {
            step = cfg.precision == Precision::Single
                       ? run_step<float>(field, queries, nearest, cloud, opts, step_rng, grad)
                       : run_step<double>(field, queries, nearest, cloud, opts, step_rng, grad);
        } catch (const NumericError& err) {
            trace.wall_clock_sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            throw TrainingFailure(std::string("training aborted at iteration ") +
                                      std::to_string(iter) + ": " + err.what() +
                                      " (last good snapshot from iteration " +
                                      std::to_string(snapshot_iter) + ")",
                                  cfg.arch(), snapshot, trace, iter);
        }
        trace.skips.degenerate_gradient += step.skips.degenerate_gradient;
        trace.skips.coincident += step.skips.coincident;
        if (iter % cfg.trace_every == 0 || iter == cfg.iterations - 1)
            trace.entries.push_back({iter, step.breakdown});

        apply_update(params, grad, cfg, adam);
        field.set_flat_params(params);
        if (iter % cfg.snapshot_every == 0) {
            snapshot = params;
            snapshot_iter = iter;
        }
    }
    trace.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(field), std::move(trace)};
}

DiagnosticsReport training_diagnostics(const UdfField& field, const PointCloud& cloud,
                                       const TrainTrace& trace, unsigned long long seed,
                                       double near_band, double cos_threshold) {
    DiagnosticsReport report;
    report.skips = trace.skips;
    report.curve = trace.entries;

    const auto batch = sampler::sample_queries(cloud, 1, seed);
    int parallel = 0;
    for (const Vec3& q : batch.queries) {
        const auto [d, g] = field.eval_with_gradient(q);
        if (d >= near_band || g.norm() < 1e-12) continue;
        const Vec3 pulled = q - d * g / g.norm();
        const auto [d2, g2] = field.eval_with_gradient(pulled);
        (void)d2;
        if (g2.norm() < 1e-12) continue;
        ++report.near_surface_count;
        if (std::abs(g.dot(g2)) / (g.norm() * g2.norm()) > cos_threshold) ++parallel;
    }
    report.parallel_fraction =
        report.near_surface_count > 0
            ? static_cast<double>(parallel) / report.near_surface_count
            : 0.0;
    return report;
}

std::string DiagnosticsReport::to_text() const {
    std::ostringstream out;
    out << "near_surface_queries\t" << near_surface_count << "\n";
    out << "gradient_parallel_fraction\t" << parallel_fraction << "\n";
    out << "skipped_degenerate_gradient\t" << skips.degenerate_gradient << "\n";
    out << "skipped_coincident\t" << skips.coincident << "\n";
    out << "iteration\tcd\tproj\tdist\torth\ttotal\n";
    for (const TraceEntry& e : curve) {
        out << e.iteration << "\t" << e.breakdown.cd << "\t" << e.breakdown.proj << "\t"
            << e.breakdown.dist << "\t" << e.breakdown.orth << "\t" << e.breakdown.total << "\n";
    }
    return out.str();
}

void save_trace_tsv(const std::string& path, const TrainTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "iteration\tcd\tproj\tdist\torth\ttotal\n";
    for (const TraceEntry& e : trace.entries) {
        out << e.iteration << "\t" << e.breakdown.cd << "\t" << e.breakdown.proj << "\t"
            << e.breakdown.dist << "\t" << e.breakdown.orth << "\t" << e.breakdown.total << "\n";
    }
    out << "# wall_clock_sec\t" << trace.wall_clock_sec << "\n";
    out << "# skipped_degenerate_gradient\t" << trace.skips.degenerate_gradient << "\n";
    out << "# skipped_coincident\t" << trace.skips.coincident << "\n";
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace udf::trainer
