#pragma once

// Differentiable building blocks with hand-written reverse passes. Batches
// are column-major: one sample per column.

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "roommem/common.hpp"

namespace roommem::nn {

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Parameter values with a same-shaped gradient accumulator. Vectors are
// stored as n x 1 matrices.
struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;

    ParamTensor() = default;
    ParamTensor(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

    Eigen::Index size() const { return value.size(); }
    void zero_grad() { grad.setZero(); }
    void init_uniform(Rng& rng, Real bound);
};

using ParamRefs = std::vector<ParamTensor*>;
using ConstParamRefs = std::vector<const ParamTensor*>;

// Token vectors stored one per column (dim x vocab).
class Embedding {
public:
    Embedding() = default;
    Embedding(std::string name, int vocab, int dim);

    int vocab() const { return static_cast<int>(table_.value.cols()); }
    int dim() const { return static_cast<int>(table_.value.rows()); }

    Vector lookup(int index) const;
    auto column(int index) const { return table_.value.col(index); }
    // Adds `upstream` into the gradient of row `index`.
    void backward(int index, const Eigen::Ref<const Vector>& upstream);

    ParamTensor& table() { return table_; }
    const ParamTensor& table() const { return table_; }

private:
    void check(int index) const;
    ParamTensor table_;
};

class Linear {
public:
    Linear() = default;
    Linear(std::string name, int in, int out);

    int in() const { return static_cast<int>(weight_.value.cols()); }
    int out() const { return static_cast<int>(weight_.value.rows()); }

    Matrix forward(const Matrix& x) const;
    // Accumulates weight/bias gradients; returns d loss / d x.
    Matrix backward(const Matrix& x, const Matrix& dy);

    ParamTensor& weight() { return weight_; }
    ParamTensor& bias() { return bias_; }
    const ParamTensor& weight() const { return weight_; }
    const ParamTensor& bias() const { return bias_; }
    void init(Rng& rng);

private:
    ParamTensor weight_;
    ParamTensor bias_;
};

Matrix relu(const Matrix& x);
// Gradient of relu at the pre-activation `x`.
Matrix relu_backward(const Matrix& x, const Matrix& dy);

// Huber loss with delta = 1 on e = pred - target.
Real huber_loss(Real pred, Real target);
Real huber_grad(Real pred, Real target);

// Stacked LSTM over a batch of variable-length sequences, returning the last
// hidden state of the top layer for each sequence. Initial hidden and cell
// states are zero; an empty sequence yields the zero vector. Gate order in
// the packed weights is input, forget, cell candidate, output.
class Lstm {
public:
    struct LayerCache {
        Matrix input;       // in x (T*B)
        Matrix gates;       // 4H x (T*B), post-activation
        Matrix cell;        // H x (T*B), cell state after step t
        Matrix cell_tanh;   // H x (T*B), tanh of the candidate cell
        Matrix hidden;      // H x (T*B), hidden state after step t
    };
    struct Cache {
        int steps = 0;
        int batch = 0;
        std::vector<int> lengths;
        std::vector<LayerCache> layers;
    };

    Lstm() = default;
    Lstm(std::string name, int input_dim, int hidden_dim, int layers);

    int input_dim() const { return input_dim_; }
    int hidden_dim() const { return hidden_dim_; }
    int layers() const { return static_cast<int>(w_ih_.size()); }

    // `inputs` is input_dim x (T*B) with step t of sample b in column t*B + b.
    // lengths[b] <= T; positions at or past a sample's length are ignored.
    Matrix forward(const Matrix& inputs, std::span<const int> lengths, Cache* cache) const;
    // Accumulates parameter gradients given d loss / d (final hidden state);
    // returns d loss / d inputs in the input layout.
    Matrix backward(const Cache& cache, const Matrix& d_last_hidden);

    ParamRefs parameters();
    ConstParamRefs parameters() const;
    void init(Rng& rng);

private:
    int input_dim_ = 0;
    int hidden_dim_ = 0;
    std::vector<ParamTensor> w_ih_;
    std::vector<ParamTensor> w_hh_;
    std::vector<ParamTensor> bias_;
};

struct AdamOptions {
    Real learning_rate = 0.001;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
public:
    Adam() = default;
    Adam(ParamRefs params, AdamOptions options);

    // Applies one update from the accumulated gradients, then zeroes them.
    // Throws on a non-finite gradient before touching any parameter.
    void step();

    std::int64_t step_count() const { return steps_; }
    const AdamOptions& options() const { return options_; }

private:
    ParamRefs params_;
    std::vector<Matrix> first_;
    std::vector<Matrix> second_;
    AdamOptions options_;
    std::int64_t steps_ = 0;
};

std::size_t count_parameters(const ConstParamRefs& params);

// Versioned little-endian checkpoint: magic, version, a shape manifest and
// the raw values, closed by a checksum. `extra` carries caller metadata.
std::string encode_checkpoint(const ConstParamRefs& params, const std::string& extra);
// Loads values into `params`, which must match the stored manifest exactly.
// Returns the `extra` payload.
std::string decode_checkpoint(const std::string& blob, const ParamRefs& params);
// Reads only the `extra` payload (after verifying the checksum).
std::string checkpoint_extra(const std::string& blob);

}  // namespace roommem::nn
