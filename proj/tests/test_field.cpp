#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "udf/errors.hpp"
#include "udf/field.hpp"

using namespace udf;

namespace {

Eigen::Matrix3Xd random_queries(int n, unsigned long long seed, double extent = 0.6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-extent, extent);
    Eigen::Matrix3Xd q(3, n);
    for (int j = 0; j < n; ++j) q.col(j) = Vec3(uni(rng), uni(rng), uni(rng));
    return q;
}

// FD over parameters of a scalar built on a fresh tape per evaluation.
template <typename Builder>
void check_param_fd(UdfField& field, const Builder& build, double tol, double step = 1e-5) {
    TapeD tape;
    const auto params = field.register_params(tape);
    const int obj = build(tape, params);
    tape.backward(obj);
    const auto analytic = tape.parameter_gradients();

    std::vector<double> flat = field.flat_params();
    for (std::size_t i = 0; i < flat.size(); ++i) {
        auto eval_at = [&](double delta) {
            std::vector<double> shifted = flat;
            shifted[i] += delta;
            field.set_flat_params(shifted);
            TapeD t;
            const auto p = field.register_params(t);
            return static_cast<double>(t.scalar(build(t, p)));
        };
        const double fd = (eval_at(step) - eval_at(-step)) / (2 * step);
        const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
        CHECK(std::abs(fd - analytic[i]) / scale < tol);
    }
    field.set_flat_params(flat);
}

}  // namespace

TEST_CASE("seeded initialization is reproducible and counts parameters") {
    const FieldArch arch{16, 4, 2, 0};
    UdfField a(arch, 123), b(arch, 123), c(arch, 124);
    CHECK(a.flat_params() == b.flat_params());
    CHECK(a.flat_params() != c.flat_params());
    CHECK(static_cast<std::int64_t>(a.flat_params().size()) == arch.param_count());

    // closed-form count for the default architecture with one skip layer
    const FieldArch big{256, 8, 4, 0};
    std::int64_t expect = 0;
    for (int l = 0; l < big.depth; ++l) {
        const int in = (l == 0 ? 3 : 256) + (l == big.skip_at ? 3 : 0);
        const int out = l == big.depth - 1 ? 1 : 256;
        expect += static_cast<std::int64_t>(out) * in + out;
    }
    CHECK(big.param_count() == expect);
}

TEST_CASE("field output is non-negative everywhere") {
    UdfField field(FieldArch{32, 4, 2, 0}, 7);
    const auto q = random_queries(1000, 3, 2.0);
    for (int j = 0; j < q.cols(); ++j) CHECK(field.eval(q.col(j)) >= 0.0);
}

TEST_CASE("batch evaluation equals pointwise evaluation") {
    UdfField field(FieldArch{16, 3, 1, 0}, 5);
    const auto q = random_queries(64, 8);
    Eigen::VectorXd batch;
    field.eval_batch(q, batch);
    Eigen::VectorXd d;
    Eigen::Matrix3Xd g;
    field.eval_with_gradient_batch(q, d, g);
    for (int j = 0; j < q.cols(); ++j) {
        const auto [dj, gj] = field.eval_with_gradient(q.col(j));
        CHECK(batch[j] == doctest::Approx(field.eval(q.col(j))).epsilon(1e-15));
        CHECK(d[j] == doctest::Approx(dj).epsilon(1e-15));
        CHECK((g.col(j) - gj).norm() < 1e-14);
    }
}

TEST_CASE("input gradient matches finite differences of eval") {
    UdfField field(FieldArch{16, 3, 1, 0}, 21);
    const auto qs = random_queries(20, 22);
    const double step = 1e-5;
    for (int j = 0; j < qs.cols(); ++j) {
        const Vec3 q = qs.col(j);
        const auto [d, g] = field.eval_with_gradient(q);
        (void)d;
        for (int k = 0; k < 3; ++k) {
            Vec3 hi = q, lo = q;
            hi[k] += step;
            lo[k] -= step;
            const double fd = (field.eval(hi) - field.eval(lo)) / (2 * step);
            const double scale = std::max({1.0, std::abs(fd), std::abs(g[k])});
            CHECK(std::abs(fd - g[k]) / scale < 1e-6);
        }
    }
}

TEST_CASE("positional encoding still matches finite differences") {
    UdfField field(FieldArch{16, 3, 1, 2}, 31);
    const Vec3 q(0.21, -0.37, 0.11);
    const auto [d, g] = field.eval_with_gradient(q);
    CHECK(d >= 0.0);
    const double step = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vec3 hi = q, lo = q;
        hi[k] += step;
        lo[k] -= step;
        const double fd = (field.eval(hi) - field.eval(lo)) / (2 * step);
        CHECK(std::abs(fd - g[k]) / std::max(1.0, std::abs(fd)) < 1e-5);
    }
}

TEST_CASE("emitted graph reproduces plain evaluation") {
    UdfField field(FieldArch{16, 4, 2, 0}, 13);
    const auto q = random_queries(10, 14);
    TapeD tape;
    const auto params = field.register_params(tape);
    const auto net = field.emit(tape, params, q, true);
    Eigen::VectorXd d;
    Eigen::Matrix3Xd g;
    field.eval_with_gradient_batch(q, d, g);
    for (int j = 0; j < q.cols(); ++j) {
        CHECK(tape.value(net.distance)(0, j) == doctest::Approx(d[j]).epsilon(1e-14));
        CHECK((tape.value(net.gradient).col(j) - g.col(j)).norm() < 1e-12);
    }
}

TEST_CASE("emit_from_node agrees with emit and carries input derivatives") {
    UdfField field(FieldArch{8, 3, 0, 0}, 17);
    const auto q = random_queries(4, 15);
    TapeD tape;
    const auto params = field.register_params(tape);
    const int qn = tape.constant(q);
    const auto a = field.emit_from_node(tape, params, qn, true);
    const auto b = field.emit(tape, params, q, true);
    CHECK((tape.value(a.distance) - tape.value(b.distance)).norm() < 1e-14);
    CHECK((tape.value(a.gradient) - tape.value(b.gradient)).norm() < 1e-14);
}

TEST_CASE("parameter gradients of gradient-dependent objectives match finite differences") {
    // objective = mean ||grad f(q)||^2 exercises the second-order path
    const auto q = random_queries(6, 44);
    for (const auto [width, depth] : {std::pair{4, 2}, {8, 2}, {16, 3}, {4, 3}}) {
        UdfField field(FieldArch{width, depth, 0, 0}, 50 + width + depth);
        check_param_fd(
            field,
            [&](TapeD& t, const FieldParamNodes<double>& p) {
                const auto net = field.emit(t, p, q, true);
                return t.mean(t.hadamard(t.col_norm(net.gradient), t.col_norm(net.gradient)));
            },
            1e-4);
    }
}

TEST_CASE("mixed objective of value, gradient, exp, abs matches finite differences") {
    UdfField field(FieldArch{8, 3, 1, 0}, 77);
    const auto q = random_queries(5, 78);
    check_param_fd(
        field,
        [&](TapeD& t, const FieldParamNodes<double>& p) {
            const auto net = field.emit(t, p, q, true);
            const int weighted =
                t.hadamard(t.exp(t.affine_const(net.distance, -2.0, 0.0)), t.col_norm(net.gradient));
            return t.mean(t.add(weighted, t.abs(net.head)));
        },
        1e-4);
}

TEST_CASE("checkpoint round trip is exact") {
    UdfField field(FieldArch{16, 4, 2, 0}, 99);
    Normalization norm;
    norm.center = Vec3(0.1, -0.2, 0.3);
    norm.scale = 2.5;
    CheckpointMeta meta;
    meta.iterations = 1234;
    meta.alpha1 = 0.002;
    meta.alpha2 = 0.1;
    meta.alpha3 = 0.01;
    meta.lambda = 10.0;

    const std::string path = "/tmp/udf_field_test.udfckpt";
    save_checkpoint(path, checkpoint_from(field, norm, meta));
    const FieldCheckpoint back = load_checkpoint(path);
    CHECK(back.arch.width == 16);
    CHECK(back.arch.depth == 4);
    CHECK(back.normalization.center == norm.center);
    CHECK(back.normalization.scale == norm.scale);
    CHECK(back.meta.iterations == 1234);
    CHECK(back.meta.lambda == 10.0);
    CHECK(back.params == field.flat_params());

    const UdfField restored = back.make_field();
    const auto q = random_queries(100, 100);
    for (int j = 0; j < q.cols(); ++j)
        CHECK(restored.eval(q.col(j)) == field.eval(q.col(j)));
    std::remove(path.c_str());
}

TEST_CASE("truncated or corrupted checkpoints are rejected") {
    UdfField field(FieldArch{8, 3, 1, 0}, 1);
    const std::string path = "/tmp/udf_field_trunc.udfckpt";
    save_checkpoint(path, checkpoint_from(field, {}, {}));
    // truncate
    {
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPT garbage";
    }
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointFormatError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
