#pragma once

#include <string>
#include <vector>

#include "udf/field.hpp"
#include "udf/geometry.hpp"
#include "udf/sampler.hpp"

namespace udf::applications {

// Per-point field gradients, normalized. Orientation is undefined up to
// sign; degenerate gradients are flagged and left as zero vectors.
struct EstimatedNormals {
    std::vector<Vec3> normals;         // index-aligned with the cloud
    std::vector<char> degenerate;      // 1 where |grad| < 1e-12
    int degenerate_count = 0;
};

EstimatedNormals estimate_normals(const ScalarField& field, const PointCloud& cloud);

// 6-column ASCII: x y z nx ny nz. Degenerate rows get a zero normal.
void save_normals(const std::string& path, const PointCloud& cloud,
                  const EstimatedNormals& normals);

struct UpsampleConfig {
    int factor = 4;            // G >= 1; output has size() * G points
    double beta = 0.05;        // keep a pull only when f(query) < beta
    int max_rounds = 10;       // fresh sampling rounds before giving up
    int pull_steps = 1;        // iterated pulling, off (1) by default
    sampler::SamplerOptions sampler_opts;
};

// Thrown when the retry cap runs out; carries the points gathered so far.
struct UpsamplePartialError : NumericError {
    UpsamplePartialError(const std::string& what, std::vector<Vec3> points)
        : NumericError(what), partial(std::move(points)) {}
    std::vector<Vec3> partial;
};

PointCloud upsample(const ScalarField& field, const PointCloud& cloud,
                    const UpsampleConfig& cfg, unsigned long long seed);

}  // namespace udf::applications
