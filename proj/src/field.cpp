#include "udf/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "udf/errors.hpp"

namespace udf {

int FieldArch::layer_in(int layer) const {
    if (layer == 0) return input_dim();
    if (has_skip(layer)) return width + input_dim();
    return width;
}

std::int64_t FieldArch::param_count() const {
    std::int64_t count = 0;
    for (int l = 0; l < depth; ++l)
        count += static_cast<std::int64_t>(layer_out(l)) * layer_in(l) + layer_out(l);
    return count;
}

UdfField::UdfField(const FieldArch& arch, unsigned long long seed) : arch_(arch) {
    if (arch.width < 1 || arch.depth < 2)
        throw ConfigError("field architecture requires width >= 1 and depth >= 2");
    std::mt19937_64 rng(seed);
    weights_.resize(arch.depth);
    biases_.resize(arch.depth);
    for (int l = 0; l < arch.depth; ++l) {
        const int rows = arch.layer_out(l), cols = arch.layer_in(l);
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        weights_[l].resize(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) weights_[l](i, j) = dist(rng);
        biases_[l].resize(rows);
        for (int i = 0; i < rows; ++i) biases_[l][i] = dist(rng);
    }
}

std::vector<double> UdfField::flat_params() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(param_count()));
    for (int l = 0; l < arch_.depth; ++l) {
        for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) out.push_back(weights_[l](i, j));
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) out.push_back(biases_[l][i]);
    }
    return out;
}

void UdfField::set_flat_params(const std::vector<double>& flat) {
    if (static_cast<std::int64_t>(flat.size()) != param_count())
        throw ConfigError("parameter vector length does not match the architecture");
    std::size_t k = 0;
    for (int l = 0; l < arch_.depth; ++l) {
        for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = flat[k++];
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l][i] = flat[k++];
    }
}

void UdfField::encode(const Eigen::Matrix3Xd& q, Eigen::MatrixXd& enc,
                      std::array<Eigen::MatrixXd, 3>* tangents) const {
    const Eigen::Index cols = q.cols();
    const int dim = arch_.input_dim();
    enc.resize(dim, cols);
    enc.topRows(3) = q;
    if (tangents) {
        for (int k = 0; k < 3; ++k) {
            (*tangents)[k] = Eigen::MatrixXd::Zero(dim, cols);
            (*tangents)[k].row(k).setOnes();
        }
    }
    for (int f = 0; f < arch_.enc_freqs; ++f) {
        const double freq = std::pow(2.0, f) * M_PI;
        const int row = 3 + 6 * f;
        enc.middleRows(row, 3) = (q.array() * freq).sin();
        enc.middleRows(row + 3, 3) = (q.array() * freq).cos();
        if (tangents) {
            for (int k = 0; k < 3; ++k) {
                (*tangents)[k].row(row + k) = freq * (q.row(k).array() * freq).cos();
                (*tangents)[k].row(row + 3 + k) = -freq * (q.row(k).array() * freq).sin();
            }
        }
    }
}

void UdfField::eval_batch(const Eigen::Matrix3Xd& q, Eigen::VectorXd& out) const {
    Eigen::MatrixXd enc;
    encode(q, enc, nullptr);
    Eigen::MatrixXd h = enc;
    for (int l = 0; l < arch_.depth; ++l) {
        if (arch_.has_skip(l)) {
            Eigen::MatrixXd joined(h.rows() + enc.rows(), h.cols());
            joined.topRows(h.rows()) = h;
            joined.bottomRows(enc.rows()) = enc;
            h = std::move(joined);
        }
        Eigen::MatrixXd z = (weights_[l] * h).colwise() + biases_[l];
        if (l < arch_.depth - 1)
            h = z.cwiseMax(0.0);
        else
            h = std::move(z);
    }
    out = h.row(0).cwiseAbs().transpose();
}

void UdfField::eval_with_gradient_batch(const Eigen::Matrix3Xd& q, Eigen::VectorXd& d,
                                        Eigen::Matrix3Xd& g) const {
    Eigen::MatrixXd enc;
    std::array<Eigen::MatrixXd, 3> enc_tan;
    encode(q, enc, &enc_tan);
    Eigen::MatrixXd h = enc;
    std::array<Eigen::MatrixXd, 3> t = enc_tan;
    for (int l = 0; l < arch_.depth; ++l) {
        if (arch_.has_skip(l)) {
            Eigen::MatrixXd joined(h.rows() + enc.rows(), h.cols());
            joined.topRows(h.rows()) = h;
            joined.bottomRows(enc.rows()) = enc;
            h = std::move(joined);
            for (int k = 0; k < 3; ++k) {
                Eigen::MatrixXd jt(t[k].rows() + enc_tan[k].rows(), t[k].cols());
                jt.topRows(t[k].rows()) = t[k];
                jt.bottomRows(enc_tan[k].rows()) = enc_tan[k];
                t[k] = std::move(jt);
            }
        }
        Eigen::MatrixXd z = (weights_[l] * h).colwise() + biases_[l];
        for (int k = 0; k < 3; ++k) t[k] = weights_[l] * t[k];
        if (l < arch_.depth - 1) {
            const Eigen::ArrayXXd mask = (z.array() > 0.0).cast<double>();
            h = z.cwiseMax(0.0);
            for (int k = 0; k < 3; ++k) t[k] = (t[k].array() * mask).matrix();
        } else {
            h = std::move(z);
        }
    }
    const Eigen::RowVectorXd head = h.row(0);
    d = head.cwiseAbs().transpose();
    g.resize(3, q.cols());
    const Eigen::RowVectorXd sign = head.array().sign().matrix();
    for (int k = 0; k < 3; ++k) g.row(k) = t[k].row(0).cwiseProduct(sign);
}

double UdfField::eval(const Vec3& q) const {
    Eigen::VectorXd out;
    eval_batch(q, out);
    return out[0];
}

std::pair<double, Vec3> UdfField::eval_with_gradient(const Vec3& q) const {
    Eigen::VectorXd d;
    Eigen::Matrix3Xd g;
    eval_with_gradient_batch(q, d, g);
    return {d[0], Vec3(g.col(0))};
}

// ---- checkpoint serialization ----

namespace {

constexpr char kMagic[8] = {'U', 'D', 'F', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v, const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw CheckpointFormatError(path + ": truncated checkpoint");
}

}  // namespace

UdfField FieldCheckpoint::make_field() const {
    UdfField field(arch, 0);
    field.set_flat_params(params);
    return field;
}

FieldCheckpoint checkpoint_from(const UdfField& field, const Normalization& norm,
                                const CheckpointMeta& meta) {
    FieldCheckpoint ckpt;
    ckpt.arch = field.arch();
    ckpt.params = field.flat_params();
    ckpt.normalization = norm;
    ckpt.meta = meta;
    return ckpt;
}

void save_checkpoint(const std::string& path, const FieldCheckpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(ckpt.arch.width));
    write_pod(out, static_cast<std::uint32_t>(ckpt.arch.depth));
    write_pod(out, static_cast<std::uint32_t>(ckpt.arch.skip_at));
    write_pod(out, static_cast<std::uint32_t>(ckpt.arch.enc_freqs));
    write_pod(out, static_cast<std::uint64_t>(ckpt.params.size()));
    out.write(reinterpret_cast<const char*>(ckpt.params.data()),
              static_cast<std::streamsize>(ckpt.params.size() * sizeof(double)));
    write_pod(out, ckpt.normalization.center.x());
    write_pod(out, ckpt.normalization.center.y());
    write_pod(out, ckpt.normalization.center.z());
    write_pod(out, ckpt.normalization.scale);
    write_pod(out, ckpt.meta.iterations);
    write_pod(out, ckpt.meta.alpha1);
    write_pod(out, ckpt.meta.alpha2);
    write_pod(out, ckpt.meta.alpha3);
    write_pod(out, ckpt.meta.lambda);
    if (!out) throw IoError("write failed for " + path);
}

FieldCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointFormatError(path + ": not a checkpoint file");
    std::uint32_t version;
    read_pod(in, version, path);
    if (version != kVersion)
        throw CheckpointFormatError(path + ": unsupported checkpoint version " +
                                    std::to_string(version));
    FieldCheckpoint ckpt;
    std::uint32_t width, depth, skip_at, enc_freqs;
    read_pod(in, width, path);
    read_pod(in, depth, path);
    read_pod(in, skip_at, path);
    read_pod(in, enc_freqs, path);
    ckpt.arch.width = static_cast<int>(width);
    ckpt.arch.depth = static_cast<int>(depth);
    ckpt.arch.skip_at = static_cast<int>(skip_at);
    ckpt.arch.enc_freqs = static_cast<int>(enc_freqs);
    std::uint64_t count;
    read_pod(in, count, path);
    if (count != static_cast<std::uint64_t>(ckpt.arch.param_count()))
        throw CheckpointFormatError(path + ": parameter count does not match architecture");
    ckpt.params.resize(count);
    if (!in.read(reinterpret_cast<char*>(ckpt.params.data()),
                 static_cast<std::streamsize>(count * sizeof(double))))
        throw CheckpointFormatError(path + ": truncated parameter block");
    read_pod(in, ckpt.normalization.center.x(), path);
    read_pod(in, ckpt.normalization.center.y(), path);
    read_pod(in, ckpt.normalization.center.z(), path);
    read_pod(in, ckpt.normalization.scale, path);
    read_pod(in, ckpt.meta.iterations, path);
    read_pod(in, ckpt.meta.alpha1, path);
    read_pod(in, ckpt.meta.alpha2, path);
    read_pod(in, ckpt.meta.alpha3, path);
    read_pod(in, ckpt.meta.lambda, path);
    return ckpt;
}

}  // namespace udf
