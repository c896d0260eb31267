#pragma once

#include <string>
#include <vector>

#include "udf/field.hpp"
#include "udf/geometry.hpp"
#include "udf/losses.hpp"
#include "udf/sampler.hpp"

namespace udf::trainer {

enum class Optimizer { PlainSgd, AdaptiveMoment };
enum class Precision { Double, Single };

struct TrainConfig {
    int iterations = 40000;
    double step_size = 1e-3;
    Optimizer optimizer = Optimizer::AdaptiveMoment;
    losses::LossWeights weights;
    losses::LossFlags flags;
    int queries_per_point = 1;
    int resample_every = 1000;
    unsigned long long seed = 0;
    Precision precision = Precision::Double;

    int width = 256;
    int depth = 8;
    int skip_at = 4;
    int enc_freqs = 0;

    int batch_queries = 5000;
    int dist_subsample = 5000;
    int cd_subsample = 5000;
    sampler::SamplerOptions sampler_opts;

    int trace_every = 10;
    int snapshot_every = 500;

    FieldArch arch() const { return FieldArch{width, depth, skip_at, enc_freqs}; }
};

struct TraceEntry {
    int iteration = 0;
    losses::LossBreakdown breakdown;
};

struct TrainTrace {
    std::vector<TraceEntry> entries;
    losses::SkipCounts skips;
    double wall_clock_sec = 0.0;
    int trace_every = 1;
};

struct FitResult {
    UdfField field;
    TrainTrace trace;
};

// Thrown when the loss goes non-finite; carries the last snapshot so long
// runs stay salvageable.
struct TrainingFailure : NumericError {
    TrainingFailure(const std::string& what, FieldArch arch, std::vector<double> params,
                    TrainTrace trace, int iteration)
        : NumericError(what),
          arch(arch),
          last_good_params(std::move(params)),
          trace(std::move(trace)),
          failed_iteration(iteration) {}
    FieldArch arch;
    std::vector<double> last_good_params;
    TrainTrace trace;
    int failed_iteration;
};

// Fit one field to one normalized cloud by minimizing the combined loss.
// Deterministic given (cloud, cfg) on a single-threaded run.
FitResult fit(const PointCloud& cloud, const TrainConfig& cfg);

struct DiagnosticsReport {
    double parallel_fraction = 0.0;  // |cos(grad(q), grad(q-hat))| > 0.95 near surface
    int near_surface_count = 0;
    losses::SkipCounts skips;
    std::vector<TraceEntry> curve;

    std::string to_text() const;
};

DiagnosticsReport training_diagnostics(const UdfField& field, const PointCloud& cloud,
                                       const TrainTrace& trace, unsigned long long seed,
                                       double near_band = 0.02, double cos_threshold = 0.95);

void save_trace_tsv(const std::string& path, const TrainTrace& trace);

}  // namespace udf::trainer
