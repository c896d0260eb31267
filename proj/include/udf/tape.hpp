#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "udf/errors.hpp"

namespace udf {

// Reverse-mode tape over matrix-valued nodes. A column is one batch item;
// scalars are 1x1. Objectives that contain input-gradients of a network are
// supported by recording the gradient computation itself (forward-mode
// tangent propagation) as ordinary nodes, so a single reverse pass yields
// exact parameter gradients of gradient-of-gradient objectives.
//
// Piecewise-linear kinks (relu, abs, sign at 0) use the 0-subgradient
// convention. Evaluation order is creation order; repeated runs over an
// identical graph produce bit-identical results.
template <typename Scalar>
class Tape {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    enum class Op : std::uint8_t {
        Constant,
        Parameter,
        Add,
        Sub,
        Hadamard,
        Cinv,         // elementwise reciprocal
        AffineConst,  // a*x + b elementwise, a/b fixed scalars
        MatMul,       // A * B
        AddBias,      // X + b * ones^T
        Relu,
        ReluMask,  // 1[x > 0], derivative defined as zero
        Sign,      // sign(x), sign(0) = 0, derivative defined as zero
        Abs,
        Exp,
        ColNorm,   // (r x B) -> (1 x B) column L2 norms
        ColDot,    // column-wise dot of equal-shape matrices -> (1 x B)
        ColScale,  // scale column j of X by r(j)
        Gather,    // select columns of X by index list
        VCat,      // stack A on top of B
        MaskedMean,  // mean of row entries where mask != 0 -> scalar
        StopGrad,
    };

    struct Node {
        Op op;
        int a = -1, b = -1;
        Mat val;
        Mat adj;
        bool needs_grad = false;
        Scalar ca = 0, cb = 0;        // AffineConst coefficients
        std::vector<int> indices;     // Gather
        std::vector<char> mask;       // MaskedMean
        int param_id = -1;
    };

    int size() const { return static_cast<int>(nodes_.size()); }
    const Mat& value(int id) const { return nodes_[id].val; }
    Scalar scalar(int id) const { return nodes_[id].val(0, 0); }
    const Mat& adjoint(int id) const { return nodes_[id].adj; }
    bool needs_grad(int id) const { return nodes_[id].needs_grad; }

    int constant(Mat v) { return push(Op::Constant, std::move(v), -1, -1, false); }

    int constant_scalar(Scalar v) {
        Mat m(1, 1);
        m(0, 0) = v;
        return constant(std::move(m));
    }

    int parameter(Mat v) {
        const int id = push(Op::Parameter, std::move(v), -1, -1, true);
        nodes_[id].param_id = static_cast<int>(param_ids_.size());
        param_ids_.push_back(id);
        return id;
    }

    const std::vector<int>& parameters() const { return param_ids_; }

    int add(int x, int y) { return push(Op::Add, nodes_[x].val + nodes_[y].val, x, y); }
    int sub(int x, int y) { return push(Op::Sub, nodes_[x].val - nodes_[y].val, x, y); }

    int hadamard(int x, int y) {
        return push(Op::Hadamard, nodes_[x].val.cwiseProduct(nodes_[y].val), x, y);
    }

    int cinv(int x) { return push(Op::Cinv, nodes_[x].val.cwiseInverse(), x, -1); }

    int affine_const(int x, Scalar a, Scalar b) {
        Mat v = (nodes_[x].val.array() * a + b).matrix();
        const int id = push(Op::AffineConst, std::move(v), x, -1);
        nodes_[id].ca = a;
        nodes_[id].cb = b;
        return id;
    }

    int scale(int x, Scalar a) { return affine_const(x, a, Scalar(0)); }

    int matmul(int A, int B) { return push(Op::MatMul, nodes_[A].val * nodes_[B].val, A, B); }

    int add_bias(int X, int b) {
        Mat v = nodes_[X].val.colwise() + nodes_[b].val.col(0);
        return push(Op::AddBias, std::move(v), X, b);
    }

    int relu(int x) { return push(Op::Relu, nodes_[x].val.cwiseMax(Scalar(0)), x, -1); }

    int relu_mask(int x) {
        Mat v = (nodes_[x].val.array() > Scalar(0)).template cast<Scalar>().matrix();
        return push(Op::ReluMask, std::move(v), x, -1, false);
    }

    int sign(int x) {
        Mat v = nodes_[x].val.array().sign().matrix();
        return push(Op::Sign, std::move(v), x, -1, false);
    }

    int abs(int x) { return push(Op::Abs, nodes_[x].val.cwiseAbs(), x, -1); }
    int exp(int x) { return push(Op::Exp, nodes_[x].val.array().exp().matrix(), x, -1); }

    int col_norm(int x) {
        return push(Op::ColNorm, nodes_[x].val.colwise().norm(), x, -1);
    }

    int col_dot(int x, int y) {
        Mat v = nodes_[x].val.cwiseProduct(nodes_[y].val).colwise().sum();
        return push(Op::ColDot, std::move(v), x, y);
    }

    int col_scale(int X, int r) {
        Mat v = nodes_[X].val * nodes_[r].val.row(0).asDiagonal();
        return push(Op::ColScale, std::move(v), X, r);
    }

    int gather(int X, std::vector<int> idx) {
        Mat v(nodes_[X].val.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) v.col(j) = nodes_[X].val.col(idx[j]);
        const int id = push(Op::Gather, std::move(v), X, -1);
        nodes_[id].indices = std::move(idx);
        return id;
    }

    int vcat(int A, int B) {
        Mat v(nodes_[A].val.rows() + nodes_[B].val.rows(), nodes_[A].val.cols());
        v.topRows(nodes_[A].val.rows()) = nodes_[A].val;
        v.bottomRows(nodes_[B].val.rows()) = nodes_[B].val;
        return push(Op::VCat, std::move(v), A, B);
    }

    // Mean over entries of a 1xB row where mask[j] != 0. Count must be > 0.
    int masked_mean(int r, std::vector<char> m) {
        Scalar sum = 0;
        int count = 0;
        for (Eigen::Index j = 0; j < nodes_[r].val.cols(); ++j) {
            if (m[static_cast<std::size_t>(j)]) {
                sum += nodes_[r].val(0, j);
                ++count;
            }
        }
        if (count == 0) throw DegenerateInputError("masked_mean over an empty mask");
        Mat v(1, 1);
        v(0, 0) = sum / static_cast<Scalar>(count);
        const int id = push(Op::MaskedMean, std::move(v), r, -1);
        nodes_[id].mask = std::move(m);
        return id;
    }

    int mean(int r) {
        return masked_mean(r, std::vector<char>(static_cast<std::size_t>(nodes_[r].val.cols()), 1));
    }

    int stop_gradient(int x) { return push(Op::StopGrad, nodes_[x].val, x, -1, false); }

    // Reverse accumulation from a scalar objective node.
    void backward(int objective) {
        Node& obj = nodes_[objective];
        if (obj.val.rows() != 1 || obj.val.cols() != 1)
            throw NumericError("backward requires a scalar objective node");
        if (!std::isfinite(static_cast<double>(obj.val(0, 0))))
            throw NumericError("non-finite objective value at node " + std::to_string(objective));
        for (Node& n : nodes_) {
            if (n.needs_grad) n.adj = Mat::Zero(n.val.rows(), n.val.cols());
        }
        if (!obj.needs_grad) return;
        obj.adj(0, 0) = Scalar(1);
        for (int id = objective; id >= 0; --id) propagate(id);
    }

    // Flat parameter gradient in registration order; row-major within each
    // parameter block. Throws NumericError on non-finite entries.
    std::vector<Scalar> parameter_gradients() const {
        std::vector<Scalar> out;
        for (int pid : param_ids_) {
            const Mat& g = nodes_[pid].adj;
            for (Eigen::Index i = 0; i < g.rows(); ++i)
                for (Eigen::Index j = 0; j < g.cols(); ++j) {
                    if (!std::isfinite(static_cast<double>(g(i, j))))
                        throw NumericError("non-finite gradient at parameter node " +
                                           std::to_string(pid));
                    out.push_back(g(i, j));
                }
        }
        return out;
    }

private:
    int push(Op op, Mat val, int a, int b, bool differentiable = true) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.val = std::move(val);
        n.needs_grad = op == Op::Parameter ||
                       (differentiable && ((a >= 0 && nodes_[a].needs_grad) ||
                                           (b >= 0 && nodes_[b].needs_grad)));
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    void accum(int id, const Mat& g) {
        if (id >= 0 && nodes_[id].needs_grad) nodes_[id].adj += g;
    }

    void propagate(int id) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.adj.size() == 0) return;
        const Mat& g = n.adj;
        switch (n.op) {
            case Op::Constant:
            case Op::Parameter:
            case Op::ReluMask:
            case Op::Sign:
            case Op::StopGrad:
                break;
            case Op::Add:
                accum(n.a, g);
                accum(n.b, g);
                break;
            case Op::Sub:
                accum(n.a, g);
                accum(n.b, -g);
                break;
            case Op::Hadamard:
                accum(n.a, g.cwiseProduct(nodes_[n.b].val));
                accum(n.b, g.cwiseProduct(nodes_[n.a].val));
                break;
            case Op::Cinv:
                accum(n.a, (-g.array() * n.val.array().square()).matrix());
                break;
            case Op::AffineConst:
                accum(n.a, g * n.ca);
                break;
            case Op::MatMul:
                if (nodes_[n.a].needs_grad) accum(n.a, g * nodes_[n.b].val.transpose());
                if (nodes_[n.b].needs_grad) accum(n.b, nodes_[n.a].val.transpose() * g);
                break;
            case Op::AddBias:
                accum(n.a, g);
                if (nodes_[n.b].needs_grad) accum(n.b, g.rowwise().sum());
                break;
            case Op::Relu:
                accum(n.a, (g.array() * (nodes_[n.a].val.array() > Scalar(0)).template cast<Scalar>())
                               .matrix());
                break;
            case Op::Abs:
                accum(n.a, g.cwiseProduct(nodes_[n.a].val.array().sign().matrix()));
                break;
            case Op::Exp:
                accum(n.a, g.cwiseProduct(n.val));
                break;
            case Op::ColNorm: {
                if (!nodes_[n.a].needs_grad) break;
                const Mat& x = nodes_[n.a].val;
                Mat gx = Mat::Zero(x.rows(), x.cols());
                for (Eigen::Index j = 0; j < x.cols(); ++j) {
                    const Scalar norm = n.val(0, j);
                    if (norm > Scalar(0)) gx.col(j) = x.col(j) * (g(0, j) / norm);
                }
                accum(n.a, gx);
                break;
            }
            case Op::ColDot:
                accum(n.a, nodes_[n.b].val * g.row(0).asDiagonal());
                accum(n.b, nodes_[n.a].val * g.row(0).asDiagonal());
                break;
            case Op::ColScale: {
                if (nodes_[n.a].needs_grad)
                    accum(n.a, g * nodes_[n.b].val.row(0).asDiagonal());
                if (nodes_[n.b].needs_grad) {
                    Mat gr = nodes_[n.a].val.cwiseProduct(g).colwise().sum();
                    accum(n.b, gr);
                }
                break;
            }
            case Op::Gather: {
                if (!nodes_[n.a].needs_grad) break;
                Mat gx = Mat::Zero(nodes_[n.a].val.rows(), nodes_[n.a].val.cols());
                for (std::size_t j = 0; j < n.indices.size(); ++j)
                    gx.col(n.indices[j]) += g.col(static_cast<Eigen::Index>(j));
                accum(n.a, gx);
                break;
            }
            case Op::VCat:
                accum(n.a, g.topRows(nodes_[n.a].val.rows()));
                accum(n.b, g.bottomRows(nodes_[n.b].val.rows()));
                break;
            case Op::MaskedMean: {
                if (!nodes_[n.a].needs_grad) break;
                int count = 0;
                for (char m : n.mask) count += m ? 1 : 0;
                Mat gr = Mat::Zero(1, static_cast<Eigen::Index>(n.mask.size()));
                const Scalar w = g(0, 0) / static_cast<Scalar>(count);
                for (std::size_t j = 0; j < n.mask.size(); ++j)
                    if (n.mask[j]) gr(0, static_cast<Eigen::Index>(j)) = w;
                accum(n.a, gr);
                break;
            }
        }
    }

    std::vector<Node> nodes_;
    std::vector<int> param_ids_;
};

using TapeD = Tape<double>;
using TapeF = Tape<float>;

}  // namespace udf
