#include "roommem/nn.hpp"

#include <cmath>

#include "roommem/serialize.hpp"

namespace roommem::nn {

namespace {

constexpr std::string_view kCheckpointMagic = "RMCKPT";
constexpr std::uint32_t kCheckpointVersion = 1;

Matrix sigmoid(const Matrix& z) {
    return (Real(1) / (Real(1) + (-z.array()).exp())).matrix();
}

}  // namespace

void ParamTensor::init_uniform(Rng& rng, Real bound) {
    // Column-major fill order keeps init stable for a given seed.
    for (Eigen::Index i = 0; i < value.size(); ++i) {
        value.data()[i] = static_cast<Real>((2.0 * rng.uniform() - 1.0) * bound);
    }
    grad.setZero();
}

Embedding::Embedding(std::string name, int vocab, int dim) : table_(std::move(name), dim, vocab) {}

void Embedding::check(int index) const {
    if (index < 0 || index >= vocab()) {
        throw Error("embedding index " + std::to_string(index) + " out of range [0, " +
                    std::to_string(vocab()) + ")");
    }
}

Vector Embedding::lookup(int index) const {
    check(index);
    return table_.value.col(index);
}

void Embedding::backward(int index, const Eigen::Ref<const Vector>& upstream) {
    check(index);
    if (upstream.size() != dim()) throw Error("embedding backward: width mismatch");
    table_.grad.col(index) += upstream;
}

Linear::Linear(std::string name, int in, int out)
    : weight_(name + ".weight", out, in), bias_(name + ".bias", out, 1) {}

void Linear::init(Rng& rng) {
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(in()));
    weight_.init_uniform(rng, bound);
    bias_.init_uniform(rng, bound);
}

Matrix Linear::forward(const Matrix& x) const {
    if (x.rows() != in()) {
        throw Error("linear " + weight_.name + ": input width " + std::to_string(x.rows()) +
                    " != " + std::to_string(in()));
    }
    Matrix y = weight_.value * x;
    y.colwise() += bias_.value.col(0);
    return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
    if (x.rows() != in() || dy.rows() != out() || x.cols() != dy.cols()) {
        throw Error("linear " + weight_.name + ": backward shape mismatch");
    }
    weight_.grad.noalias() += dy * x.transpose();
    bias_.grad.col(0) += dy.rowwise().sum();
    return weight_.value.transpose() * dy;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(Real(0)); }

Matrix relu_backward(const Matrix& x, const Matrix& dy) {
    return (x.array() > Real(0)).select(dy, Matrix::Zero(dy.rows(), dy.cols()));
}

Real huber_loss(Real pred, Real target) {
    const Real e = pred - target;
    const Real a = std::abs(e);
    return a <= Real(1) ? Real(0.5) * e * e : a - Real(0.5);
}

Real huber_grad(Real pred, Real target) {
    const Real e = pred - target;
    return std::clamp(e, Real(-1), Real(1));
}

Lstm::Lstm(std::string name, int input_dim, int hidden_dim, int layers)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
    if (layers < 1) throw Error("lstm needs at least one layer");
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? input_dim : hidden_dim;
        const auto prefix = name + ".l" + std::to_string(l);
        w_ih_.emplace_back(prefix + ".w_ih", 4 * hidden_dim, in);
        w_hh_.emplace_back(prefix + ".w_hh", 4 * hidden_dim, hidden_dim);
        bias_.emplace_back(prefix + ".bias", 4 * hidden_dim, 1);
    }
}

void Lstm::init(Rng& rng) {
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(hidden_dim_));
    for (std::size_t l = 0; l < w_ih_.size(); ++l) {
        w_ih_[l].init_uniform(rng, bound);
        w_hh_[l].init_uniform(rng, bound);
        bias_[l].init_uniform(rng, bound);
    }
}

ParamRefs Lstm::parameters() {
    ParamRefs out;
    for (std::size_t l = 0; l < w_ih_.size(); ++l) {
        out.push_back(&w_ih_[l]);
        out.push_back(&w_hh_[l]);
        out.push_back(&bias_[l]);
    }
    return out;
}

ConstParamRefs Lstm::parameters() const {
    ConstParamRefs out;
    for (std::size_t l = 0; l < w_ih_.size(); ++l) {
        out.push_back(&w_ih_[l]);
        out.push_back(&w_hh_[l]);
        out.push_back(&bias_[l]);
    }
    return out;
}

Matrix Lstm::forward(const Matrix& inputs, std::span<const int> lengths, Cache* cache) const {
    const auto batch = static_cast<Eigen::Index>(lengths.size());
    const Eigen::Index h = hidden_dim_;
    if (batch == 0) throw Error("lstm: empty batch");
    if (inputs.rows() != input_dim_) {
        throw Error("lstm: input width " + std::to_string(inputs.rows()) + " != " +
                    std::to_string(input_dim_));
    }
    if (inputs.cols() % batch != 0) throw Error("lstm: input columns not a multiple of batch");
    const Eigen::Index steps = inputs.cols() / batch;
    for (const int len : lengths) {
        if (len < 0 || len > steps) throw Error("lstm: sequence length out of range");
    }
    if (cache) {
        cache->steps = static_cast<int>(steps);
        cache->batch = static_cast<int>(batch);
        cache->lengths.assign(lengths.begin(), lengths.end());
        cache->layers.clear();
    }
    if (steps == 0) return Matrix::Zero(h, batch);

    Matrix layer_input = inputs;
    Matrix h_prev, c_prev;
    for (std::size_t l = 0; l < w_ih_.size(); ++l) {
        Matrix pre = w_ih_[l].value * layer_input;
        pre.colwise() += bias_[l].value.col(0);

        LayerCache lc;
        lc.gates.resize(4 * h, steps * batch);
        lc.cell.resize(h, steps * batch);
        lc.cell_tanh.resize(h, steps * batch);
        lc.hidden.resize(h, steps * batch);
        h_prev = Matrix::Zero(h, batch);
        c_prev = Matrix::Zero(h, batch);

        for (Eigen::Index t = 0; t < steps; ++t) {
            Matrix z = pre.middleCols(t * batch, batch);
            z.noalias() += w_hh_[l].value * h_prev;
            Matrix gates(4 * h, batch);
            gates.topRows(2 * h) = sigmoid(z.topRows(2 * h));
            gates.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
            gates.bottomRows(h) = sigmoid(z.bottomRows(h));

            const auto i = gates.topRows(h).array();
            const auto f = gates.middleRows(h, h).array();
            const auto g = gates.middleRows(2 * h, h).array();
            const auto o = gates.bottomRows(h).array();
            const Matrix c_new = (f * c_prev.array() + i * g).matrix();
            const Matrix c_tanh = c_new.array().tanh().matrix();
            const Matrix h_new = (o * c_tanh.array()).matrix();
            for (Eigen::Index b = 0; b < batch; ++b) {
                if (t < lengths[static_cast<std::size_t>(b)]) {
                    h_prev.col(b) = h_new.col(b);
                    c_prev.col(b) = c_new.col(b);
                }
            }
            lc.gates.middleCols(t * batch, batch) = gates;
            lc.cell_tanh.middleCols(t * batch, batch) = c_tanh;
            lc.cell.middleCols(t * batch, batch) = c_prev;
            lc.hidden.middleCols(t * batch, batch) = h_prev;
        }
        if (cache) {
            lc.input = std::move(layer_input);
            layer_input = lc.hidden;
            cache->layers.push_back(std::move(lc));
        } else {
            layer_input = std::move(lc.hidden);
        }
    }
    return h_prev;
}

Matrix Lstm::backward(const Cache& cache, const Matrix& d_last_hidden) {
    const Eigen::Index batch = cache.batch;
    const Eigen::Index steps = cache.steps;
    const Eigen::Index h = hidden_dim_;
    if (d_last_hidden.rows() != h || d_last_hidden.cols() != batch) {
        throw Error("lstm backward: gradient shape mismatch");
    }
    if (steps == 0) return Matrix::Zero(input_dim_, 0);
    if (cache.layers.size() != w_ih_.size()) throw Error("lstm backward: cache/layer mismatch");

    Matrix d_above;  // gradient flowing into this layer's hidden outputs
    for (std::size_t li = w_ih_.size(); li-- > 0;) {
        const auto& lc = cache.layers[li];
        const bool top = li + 1 == w_ih_.size();
        Matrix dh_carry = top ? d_last_hidden : Matrix::Zero(h, batch);
        Matrix dc_carry = Matrix::Zero(h, batch);
        Matrix dz_all = Matrix::Zero(4 * h, steps * batch);

        for (Eigen::Index t = steps; t-- > 0;) {
            Matrix dh = dh_carry;
            if (!top) dh += d_above.middleCols(t * batch, batch);
            const Matrix& dc = dc_carry;

            const auto gates = lc.gates.middleCols(t * batch, batch);
            const auto i = gates.topRows(h).array();
            const auto f = gates.middleRows(h, h).array();
            const auto g = gates.middleRows(2 * h, h).array();
            const auto o = gates.bottomRows(h).array();
            const auto c_tanh = lc.cell_tanh.middleCols(t * batch, batch).array();
            const Matrix c_prev =
                t > 0 ? Matrix(lc.cell.middleCols((t - 1) * batch, batch)) : Matrix::Zero(h, batch);

            const Matrix dct =
                (dc.array() + dh.array() * o * (Real(1) - c_tanh.square())).matrix();
            auto dz = dz_all.middleCols(t * batch, batch);
            dz.topRows(h) = (dct.array() * g * i * (Real(1) - i)).matrix();
            dz.middleRows(h, h) = (dct.array() * c_prev.array() * f * (Real(1) - f)).matrix();
            dz.middleRows(2 * h, h) = (dct.array() * i * (Real(1) - g.square())).matrix();
            dz.bottomRows(h) = (dh.array() * c_tanh * o * (Real(1) - o)).matrix();

            Matrix dc_next = (dct.array() * f).matrix();
            for (Eigen::Index b = 0; b < batch; ++b) {
                if (t >= cache.lengths[static_cast<std::size_t>(b)]) {
                    dz.col(b).setZero();
                    dc_next.col(b) = dc.col(b);
                }
            }
            Matrix dh_next = w_hh_[li].value.transpose() * dz;
            for (Eigen::Index b = 0; b < batch; ++b) {
                if (t >= cache.lengths[static_cast<std::size_t>(b)]) dh_next.col(b) = dh.col(b);
            }
            dh_carry = std::move(dh_next);
            dc_carry = std::move(dc_next);
        }

        Matrix h_shift = Matrix::Zero(h, steps * batch);
        if (steps > 1) h_shift.rightCols((steps - 1) * batch) = lc.hidden.leftCols((steps - 1) * batch);
        w_ih_[li].grad.noalias() += dz_all * lc.input.transpose();
        w_hh_[li].grad.noalias() += dz_all * h_shift.transpose();
        bias_[li].grad.col(0) += dz_all.rowwise().sum();
        d_above = w_ih_[li].value.transpose() * dz_all;
    }
    return d_above;
}

Adam::Adam(ParamRefs params, AdamOptions options) : params_(std::move(params)), options_(options) {
    for (const auto* p : params_) {
        first_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        second_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    for (const auto* p : params_) {
        if (!p->grad.allFinite()) throw Error("adam: non-finite gradient in " + p->name);
    }
    ++steps_;
    const Real b1 = options_.beta1, b2 = options_.beta2;
    const Real c1 = Real(1) - std::pow(b1, static_cast<Real>(steps_));
    const Real c2 = Real(1) - std::pow(b2, static_cast<Real>(steps_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        first_[k] = b1 * first_[k] + (Real(1) - b1) * p.grad;
        second_[k] = b2 * second_[k] + (Real(1) - b2) * p.grad.cwiseAbs2();
        p.value.array() -= options_.learning_rate * (first_[k].array() / c1) /
                           ((second_[k].array() / c2).sqrt() + options_.epsilon);
        p.zero_grad();
    }
}

std::size_t count_parameters(const ConstParamRefs& params) {
    std::size_t n = 0;
    for (const auto* p : params) n += static_cast<std::size_t>(p->size());
    return n;
}

std::string encode_checkpoint(const ConstParamRefs& params, const std::string& extra) {
    ByteWriter body;
    body.u64(params.size());
    for (const auto* p : params) {
        body.str(p->name);
        body.u64(static_cast<std::uint64_t>(p->value.rows()));
        body.u64(static_cast<std::uint64_t>(p->value.cols()));
    }
    for (const auto* p : params) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            body.f64(static_cast<double>(p->value.data()[i]));
        }
    }
    body.str(extra);

    ByteWriter out;
    out.raw(kCheckpointMagic);
    out.u32(kCheckpointVersion);
    out.u64(fnv1a(body.bytes()));
    out.raw(body.bytes());
    return out.take();
}

namespace {

std::string_view checked_body(const std::string& blob) {
    ByteReader header(blob);
    if (blob.size() < kCheckpointMagic.size() ||
        header.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
        throw Error("checkpoint: bad magic");
    }
    if (header.u32() != kCheckpointVersion) throw Error("checkpoint: unsupported version");
    const auto checksum = header.u64();
    const auto body_bytes = std::string_view(blob).substr(kCheckpointMagic.size() + 4 + 8);
    if (fnv1a(body_bytes) != checksum) throw Error("checkpoint: checksum mismatch");
    return body_bytes;
}

}  // namespace

std::string checkpoint_extra(const std::string& blob) {
    ByteReader r(checked_body(blob));
    const auto n = r.count(1 << 16);
    std::uint64_t values = 0;
    for (std::size_t k = 0; k < n; ++k) {
        r.str();
        const auto rows = r.u64();
        const auto cols = r.u64();
        if (rows > (1u << 30) || cols > (1u << 30)) throw Error("checkpoint: corrupt manifest");
        values += rows * cols;
    }
    if (values > (std::uint64_t{1} << 32)) throw Error("checkpoint: corrupt manifest");
    r.raw(static_cast<std::size_t>(values * 8));
    auto extra = r.str();
    r.expect_end();
    return extra;
}

std::string decode_checkpoint(const std::string& blob, const ParamRefs& params) {
    ByteReader r(checked_body(blob));
    const auto n = r.count(1 << 16);
    if (n != params.size()) {
        throw Error("checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
                    std::to_string(n));
    }
    for (const auto* p : params) {
        const auto name = r.str();
        const auto rows = r.u64();
        const auto cols = r.u64();
        if (name != p->name || rows != static_cast<std::uint64_t>(p->value.rows()) ||
            cols != static_cast<std::uint64_t>(p->value.cols())) {
            throw Error("checkpoint: manifest mismatch at tensor '" + name + "' (expected '" +
                        p->name + "')");
        }
    }
    for (auto* p : params) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            p->value.data()[i] = static_cast<Real>(r.f64());
        }
        p->zero_grad();
    }
    auto extra = r.str();
    r.expect_end();
    return extra;
}

}  // namespace roommem::nn
