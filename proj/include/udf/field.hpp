#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "udf/geometry.hpp"
#include "udf/tape.hpp"

namespace udf {

// Read-only view of a distance-like scalar field f: R^3 -> R>=0.
// Implemented by the learned network and by the analytic test shapes.
class ScalarField {
public:
    virtual ~ScalarField() = default;
    virtual double eval(const Vec3& q) const = 0;
    virtual std::pair<double, Vec3> eval_with_gradient(const Vec3& q) const = 0;

    virtual void eval_batch(const Eigen::Matrix3Xd& q, Eigen::VectorXd& out) const {
        out.resize(q.cols());
        for (Eigen::Index j = 0; j < q.cols(); ++j) out[j] = eval(q.col(j));
    }
    virtual void eval_with_gradient_batch(const Eigen::Matrix3Xd& q, Eigen::VectorXd& d,
                                          Eigen::Matrix3Xd& g) const {
        d.resize(q.cols());
        g.resize(3, q.cols());
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            auto [dj, gj] = eval_with_gradient(q.col(j));
            d[j] = dj;
            g.col(j) = gj;
        }
    }
};

struct FieldArch {
    int width = 256;
    int depth = 8;    // affine layers including the scalar head
    int skip_at = 4;  // layer whose input gets the raw input concatenated
    int enc_freqs = 0;  // positional encoding frequencies, 0 = raw coordinates

    int input_dim() const { return 3 + 6 * enc_freqs; }
    bool has_skip(int layer) const { return layer == skip_at && skip_at > 0 && skip_at < depth; }
    int layer_in(int layer) const;
    int layer_out(int layer) const { return layer == depth - 1 ? 1 : width; }
    std::int64_t param_count() const;
};

// Node handles of one network evaluation recorded on a tape.
struct FieldGraphNodes {
    int distance = -1;  // 1 x B, f(q) = |head|
    int gradient = -1;  // 3 x B, d f / d q, -1 unless requested
    int head = -1;      // 1 x B, pre-abs output
};

// Per-tape registration of the network parameters; reuse across multiple
// emissions on the same tape so all of them share gradient accumulation.
template <typename Scalar>
struct FieldParamNodes {
    std::vector<int> weights;
    std::vector<int> biases;
};

class UdfField : public ScalarField {
public:
    UdfField() = default;
    UdfField(const FieldArch& arch, unsigned long long seed);

    const FieldArch& arch() const { return arch_; }
    std::int64_t param_count() const { return arch_.param_count(); }

    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& flat);

    double eval(const Vec3& q) const override;
    std::pair<double, Vec3> eval_with_gradient(const Vec3& q) const override;
    void eval_batch(const Eigen::Matrix3Xd& q, Eigen::VectorXd& out) const override;
    void eval_with_gradient_batch(const Eigen::Matrix3Xd& q, Eigen::VectorXd& d,
                                  Eigen::Matrix3Xd& g) const override;

    template <typename Scalar>
    FieldParamNodes<Scalar> register_params(Tape<Scalar>& tape) const;

    // Record one batched evaluation. q is 3 x B in normalized coordinates.
    // The input-gradient, when requested, is built from forward-mode tangent
    // nodes so downstream objectives stay differentiable in the parameters.
    template <typename Scalar>
    FieldGraphNodes emit(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                         const Eigen::Matrix3Xd& q, bool with_gradient) const;

    // Same, but the input is an existing (differentiable) 3 x B node, so
    // derivative flow through the query location is preserved. Requires raw
    // coordinates (enc_freqs == 0).
    template <typename Scalar>
    FieldGraphNodes emit_from_node(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                                   int input_node, bool with_gradient) const;

    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

private:
    void encode(const Eigen::Matrix3Xd& q, Eigen::MatrixXd& enc,
                std::array<Eigen::MatrixXd, 3>* tangents) const;

    template <typename Scalar>
    FieldGraphNodes emit_core(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                              int q_node, const std::array<int, 3>& tan_node,
                              bool with_gradient) const;

    FieldArch arch_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;

    friend struct CheckpointCodec;
};

struct CheckpointMeta {
    std::uint64_t iterations = 0;
    double alpha1 = 0, alpha2 = 0, alpha3 = 0, lambda = 0;
};

struct FieldCheckpoint {
    FieldArch arch;
    std::vector<double> params;
    Normalization normalization;
    CheckpointMeta meta;

    UdfField make_field() const;
};

FieldCheckpoint checkpoint_from(const UdfField& field, const Normalization& norm,
                                const CheckpointMeta& meta);
void save_checkpoint(const std::string& path, const FieldCheckpoint& ckpt);
FieldCheckpoint load_checkpoint(const std::string& path);

// ---- template implementations ----

template <typename Scalar>
FieldParamNodes<Scalar> UdfField::register_params(Tape<Scalar>& tape) const {
    FieldParamNodes<Scalar> out;
    for (int l = 0; l < arch_.depth; ++l) {
        out.weights.push_back(tape.parameter(weights_[l].template cast<Scalar>()));
        out.biases.push_back(tape.parameter(biases_[l].template cast<Scalar>()));
    }
    return out;
}

template <typename Scalar>
FieldGraphNodes UdfField::emit(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                               const Eigen::Matrix3Xd& q, bool with_gradient) const {
    Eigen::MatrixXd enc;
    std::array<Eigen::MatrixXd, 3> enc_tan;
    encode(q, enc, with_gradient ? &enc_tan : nullptr);

    const int q_node = tape.constant(enc.template cast<Scalar>());
    std::array<int, 3> tan_node = {-1, -1, -1};
    if (with_gradient)
        for (int k = 0; k < 3; ++k)
            tan_node[k] = tape.constant(enc_tan[k].template cast<Scalar>());
    return emit_core(tape, params, q_node, tan_node, with_gradient);
}

template <typename Scalar>
FieldGraphNodes UdfField::emit_from_node(Tape<Scalar>& tape,
                                         const FieldParamNodes<Scalar>& params, int input_node,
                                         bool with_gradient) const {
    if (arch_.enc_freqs != 0)
        throw ConfigError("emit_from_node requires raw coordinates (enc_freqs == 0)");
    const Eigen::Index cols = tape.value(input_node).cols();
    using Mat = typename Tape<Scalar>::Mat;
    std::array<int, 3> tan_node = {-1, -1, -1};
    if (with_gradient) {
        for (int k = 0; k < 3; ++k) {
            Mat t = Mat::Zero(3, cols);
            t.row(k).setOnes();
            tan_node[k] = tape.constant(std::move(t));
        }
    }
    return emit_core(tape, params, input_node, tan_node, with_gradient);
}

template <typename Scalar>
FieldGraphNodes UdfField::emit_core(Tape<Scalar>& tape, const FieldParamNodes<Scalar>& params,
                                    int q_node, const std::array<int, 3>& tan_node,
                                    bool with_gradient) const {
    int h = q_node;
    std::array<int, 3> t = tan_node;
    FieldGraphNodes out;
    for (int l = 0; l < arch_.depth; ++l) {
        if (arch_.has_skip(l)) {
            h = tape.vcat(h, q_node);
            if (with_gradient)
                for (int k = 0; k < 3; ++k) t[k] = tape.vcat(t[k], tan_node[k]);
        }
        const int z = tape.add_bias(tape.matmul(params.weights[l], h), params.biases[l]);
        std::array<int, 3> zt = {-1, -1, -1};
        if (with_gradient)
            for (int k = 0; k < 3; ++k) zt[k] = tape.matmul(params.weights[l], t[k]);
        if (l < arch_.depth - 1) {
            h = tape.relu(z);
            if (with_gradient) {
                const int m = tape.relu_mask(z);
                for (int k = 0; k < 3; ++k) t[k] = tape.hadamard(m, zt[k]);
            }
        } else {
            out.head = z;
            out.distance = tape.abs(z);
            if (with_gradient) {
                const int s = tape.sign(z);
                std::array<int, 3> g;
                for (int k = 0; k < 3; ++k) g[k] = tape.hadamard(s, zt[k]);
                out.gradient = tape.vcat(tape.vcat(g[0], g[1]), g[2]);
            }
        }
    }
    return out;
}

}  // namespace udf
