#include "udf/sampler.hpp"

#include <random>

#include "udf/errors.hpp"

namespace udf::sampler {

QueryBatch sample_queries(const PointCloud& cloud, int per_point, unsigned long long seed,
                          const SamplerOptions& opts) {
    if (per_point < 1) throw ConfigError("sample_queries: per_point must be >= 1");
    const std::size_t n = cloud.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-opts.uniform_box, opts.uniform_box);

    QueryBatch batch;
    const std::size_t gauss_count = n * static_cast<std::size_t>(per_point);
    const std::size_t uniform_count =
        static_cast<std::size_t>(opts.uniform_frac * static_cast<double>(gauss_count));
    batch.queries.reserve(gauss_count + uniform_count);

    for (std::size_t i = 0; i < n; ++i) {
        const double sigma = cloud.knn_distance(i, opts.sigma_knn);
        for (int j = 0; j < per_point; ++j) {
            const Vec3 q = cloud.point(i) + sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
            batch.queries.push_back(q);
            batch.anchor_index.push_back(static_cast<int>(i));
            batch.sigma.push_back(sigma);
        }
    }
    for (std::size_t j = 0; j < uniform_count; ++j) {
        const Vec3 q(uni(rng), uni(rng), uni(rng));
        batch.queries.push_back(q);
        batch.anchor_index.push_back(-1);  // assigned from the nearest query below
        batch.sigma.push_back(0.0);
    }

    batch.nearest_point.resize(batch.queries.size());
    batch.nearest_index.resize(batch.queries.size());
    batch.nearest_distance.resize(batch.queries.size());
    for (std::size_t j = 0; j < batch.queries.size(); ++j) {
        const auto hit = cloud.nearest(batch.queries[j]);
        batch.nearest_point[j] = hit.point;
        batch.nearest_index[j] = hit.index;
        batch.nearest_distance[j] = hit.distance;
        if (batch.anchor_index[j] < 0) batch.anchor_index[j] = hit.index;
    }
    return batch;
}

}  // namespace udf::sampler
