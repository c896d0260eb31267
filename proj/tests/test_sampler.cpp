#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "udf/errors.hpp"
#include "udf/fixtures.hpp"
#include "udf/sampler.hpp"

using namespace udf;

TEST_CASE("per_point=1 without a uniform fraction anchors each query") {
    const PointCloud cloud({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
    sampler::SamplerOptions opts;
    opts.uniform_frac = 0.0;
    const auto batch = sampler::sample_queries(cloud, 1, 3, opts);
    REQUIRE(batch.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(batch.anchor_index[i] == i);
}

TEST_CASE("batch size is N*per_point plus the uniform fraction") {
    const auto cloud = fixtures::AnalyticShape::sphere(0.4).sample_surface(200, 1);
    sampler::SamplerOptions opts;
    opts.uniform_frac = 0.1;
    const auto batch = sampler::sample_queries(cloud, 2, 5, opts);
    CHECK(batch.size() == 200 * 2 + 40);
    // uniform tail stays inside the configured box and picks up a real anchor
    for (std::size_t j = 400; j < batch.size(); ++j) {
        CHECK(batch.queries[j].cwiseAbs().maxCoeff() <= opts.uniform_box);
        CHECK(batch.anchor_index[j] >= 0);
        CHECK(batch.anchor_index[j] < 200);
    }
}

TEST_CASE("cached nearest answers match fresh queries") {
    const auto cloud = fixtures::AnalyticShape::sphere(0.4).sample_surface(500, 2);
    const auto batch = sampler::sample_queries(cloud, 1, 7);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const auto hit = cloud.nearest(batch.queries[j]);
        CHECK(batch.nearest_index[j] == hit.index);
        CHECK(batch.nearest_point[j] == hit.point);
        CHECK(batch.nearest_distance[j] == hit.distance);
    }
}

TEST_CASE("gaussian scale concentrates queries around their anchors") {
    const auto cloud = fixtures::AnalyticShape::sphere(0.4).sample_surface(1000, 3);
    sampler::SamplerOptions opts;
    opts.uniform_frac = 0.0;
    const auto batch = sampler::sample_queries(cloud, 10, 11, opts);
    REQUIRE(batch.size() == 10000);
    int within = 0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const Vec3 anchor = cloud.point(static_cast<std::size_t>(batch.anchor_index[j]));
        // 3D Gaussian with isotropic per-axis sigma: P(r <= 2 sigma) ~ 0.739,
        // but the criterion counts the looser per-axis 2-sigma ball in r
        if ((batch.queries[j] - anchor).norm() <= 2.0 * batch.sigma[j]) ++within;
    }
    // chi distribution with 3 dof: P(r <= 2 sigma) = 0.7385; use that bound
    CHECK(static_cast<double>(within) / batch.size() > 0.70);
    CHECK(static_cast<double>(within) / batch.size() < 0.78);
}

TEST_CASE("sampled query distances concentrate near the surface") {
    const auto shape = fixtures::AnalyticShape::sphere(0.4);
    const auto cloud = shape.sample_surface(2000, 4);
    sampler::SamplerOptions opts;
    opts.uniform_frac = 0.0;
    const auto batch = sampler::sample_queries(cloud, 1, 13, opts);
    std::vector<double> dist, sig;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        dist.push_back(shape.eval(batch.queries[j]));
        sig.push_back(batch.sigma[j]);
    }
    std::sort(dist.begin(), dist.end());
    std::sort(sig.begin(), sig.end());
    CHECK(dist[dist.size() / 2] < 2.0 * sig[sig.size() / 2]);
}

TEST_CASE("same seed gives identical batches, different seed differs") {
    const auto cloud = fixtures::AnalyticShape::sphere(0.4).sample_surface(100, 6);
    const auto a = sampler::sample_queries(cloud, 2, 42);
    const auto b = sampler::sample_queries(cloud, 2, 42);
    const auto c = sampler::sample_queries(cloud, 2, 43);
    REQUIRE(a.size() == b.size());
    bool equal = true, differs = false;
    for (std::size_t j = 0; j < a.size(); ++j) {
        equal &= a.queries[j] == b.queries[j];
        differs |= a.queries[j] != c.queries[j];
    }
    CHECK(equal);
    CHECK(differs);
}

TEST_CASE("invalid per_point is rejected") {
    const PointCloud cloud({{0, 0, 0}, {1, 0, 0}});
    CHECK_THROWS_AS(sampler::sample_queries(cloud, 0, 1), ConfigError);
}
