#pragma once

#include <vector>

#include "udf/geometry.hpp"

namespace udf::sampler {

struct SamplerOptions {
    int sigma_knn = 50;          // per-point scale = distance to k-th neighbor
    double uniform_frac = 0.1;   // extra far-field queries in [-0.55, 0.55]^3
    double uniform_box = 0.55;
};

// Off-surface training queries with cached nearest-surface answers.
struct QueryBatch {
    std::vector<Vec3> queries;
    std::vector<int> anchor_index;       // surface point the query was sampled around
    std::vector<Vec3> nearest_point;     // geometry nearest for each query
    std::vector<int> nearest_index;
    std::vector<double> nearest_distance;
    std::vector<double> sigma;           // Gaussian scale used for the query

    std::size_t size() const { return queries.size(); }
};

QueryBatch sample_queries(const PointCloud& cloud, int per_point, unsigned long long seed,
                          const SamplerOptions& opts = {});

}  // namespace udf::sampler
