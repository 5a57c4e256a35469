#pragma once

#include "deepgb/rng.hpp"
#include "deepgb/series.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deepgb {

/// Dense row-major matrix. Deliberately minimal; every shape in this engine
/// is small (embedding tables and 32-wide dense layers).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const { return data.empty(); }
    std::size_t size() const { return data.size(); }
};

/// Lookup table mapping a categorical code to a dense vector.
///
/// Holds cardinality + 1 rows so code == cardinality is addressable (the
/// conventional spare row for out-of-vocabulary input). A frozen table is
/// skipped by training entirely; its weights stay bit-identical.
struct EmbeddingTable {
    std::string feature_name;
    int cardinality = 0;
    int dim = 0;
    Matrix weights;  // (cardinality + 1) x dim
    bool frozen = false;

    int rows() const { return cardinality + 1; }
};

enum class Activation { relu, identity };

struct DenseLayer {
    Matrix weights;  // out x in
    std::vector<double> bias;
    Activation activation = Activation::relu;

    std::size_t out_size() const { return weights.rows; }
    std::size_t in_size() const { return weights.cols; }
};

/// Learned time encoding: component 0 is linear in tau, components 1..k-1
/// are sinusoidal. Off by default; when enabled its output is concatenated
/// after the embedding vectors.
struct Time2VecLayer {
    int k = 0;
    std::vector<double> omega;
    std::vector<double> phi;
};

/// out[0] = omega[0]*tau + phi[0]; out[i] = sin(omega[i]*tau + phi[i]).
std::vector<double> time2vec(double tau, const Time2VecLayer& layer);

/// How many columns an embedding gets for a given category count.
enum class SizeRule { half, fourth_root };

/// half: min(50, floor((c+1)/2)); fourth_root: round((c+1)^0.25),
/// half-to-even. Both clamped to >= 1.
int embedding_size(int cardinality, SizeRule rule);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 42;
    double dropout_rate = 0.1;
    std::vector<int> hidden_sizes = {32, 32, 32, 32};
    double learning_rate = 0.0002;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
    // Accepted for config compatibility; each embedding consumes only the
    // current timestep's code, so values > 1 change nothing.
    int window_size = 1;
};

enum class RunMode { train, infer };

/// Per-parameter-block gradients, shapes mirroring the model. Frozen tables
/// get an empty block (no gradient entries at all).
struct Gradients {
    std::vector<Matrix> tables;
    std::vector<Matrix> layer_weights;
    std::vector<std::vector<double>> layer_bias;
    std::vector<double> t2v_omega;
    std::vector<double> t2v_phi;
};

/// Squared-gradient running averages for every trainable block, in the
/// model's block order (non-frozen tables, then layer weights/biases, then
/// the time encoding).
struct RmsPropState {
    double learning_rate = 0.0002;
    double decay = 0.9;
    double epsilon = 1e-8;
    std::vector<std::vector<double>> accumulators;
};

/// One RMSProp update on a flat parameter block:
///   acc <- decay*acc + (1-decay)*g^2
///   p   <- p - lr * g / (sqrt(acc) + epsilon)
void rmsprop_step(std::span<double> params, std::span<const double> grads,
                  std::span<double> acc, double learning_rate, double decay,
                  double epsilon);

struct FitResult {
    std::vector<double> loss_history;  // mean squared error, one entry per epoch
};

class CompositeEmbeddingModel;

/// Activations captured by a train-mode forward pass, consumed by backward().
struct ForwardCache {
    std::vector<std::size_t> batch_rows;
    std::vector<std::vector<int>> codes;  // [table][sample]
    std::vector<double> taus;             // per sample, when time encoding is on
    Matrix input;                         // concatenated embedding outputs
    std::vector<Matrix> pre;              // per layer, pre-activation
    std::vector<Matrix> post;             // per layer, after activation (and dropout)
    Matrix dropout_mask;                  // empty when no dropout was applied
    std::vector<double> predictions;
};

/// Embedding tables feeding a dense head: lookups are concatenated (plus the
/// optional time encoding) and passed through hidden ReLU layers with
/// inverted dropout after the first one, ending in a single linear unit.
///
/// Construction zero-fills every parameter; call init_trainable() to draw
/// the usual random initialization for the non-frozen blocks. Frozen tables
/// are never touched by init or training.
class CompositeEmbeddingModel {
public:
    CompositeEmbeddingModel() = default;

    /// Builds the head for the given table list: one hidden ReLU layer per
    /// entry of hidden_sizes and a final linear unit of width 1.
    CompositeEmbeddingModel(std::vector<EmbeddingTable> tables,
                            const std::vector<int>& hidden_sizes, double dropout_rate,
                            std::optional<int> time2vec_k = std::nullopt);

    /// Uniform(-0.05, 0.05) for embeddings and the time encoding,
    /// Xavier-uniform for dense weights, zero biases. Frozen tables skipped.
    void init_trainable(Rng& rng);

    /// Runs the batch identified by `rows` through the model. Train mode
    /// draws a dropout mask from `rng` and records everything backward()
    /// needs; infer mode is a pure function of (model, input).
    ForwardCache forward(const FeatureMatrix& fm, std::span<const std::size_t> rows,
                         RunMode mode, Rng* rng = nullptr) const;

    /// Mean-squared-error gradients for every trainable parameter.
    Gradients backward(const ForwardCache& cache, std::span<const double> targets) const;

    /// Convenience full-data inference.
    std::vector<double> predict(const FeatureMatrix& fm) const;

    void freeze_table(std::size_t index);

    std::vector<EmbeddingTable>& tables() { return tables_; }
    const std::vector<EmbeddingTable>& tables() const { return tables_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::optional<Time2VecLayer>& time_encoding() { return time2vec_; }
    const std::optional<Time2VecLayer>& time_encoding() const { return time2vec_; }
    double dropout_rate() const { return dropout_rate_; }
    void set_dropout_rate(double r) { dropout_rate_ = r; }

    /// Width of the concatenated input to the dense head.
    std::size_t input_width() const;

    /// Total number of trainable scalars (for the gradient-check harness).
    std::size_t trainable_parameter_count() const;

private:
    std::vector<EmbeddingTable> tables_;
    std::vector<DenseLayer> layers_;
    std::optional<Time2VecLayer> time2vec_;
    double dropout_rate_ = 0.0;
};

/// Mini-batch RMSProp on mean squared error. The target must already be on
/// the standardized scale. Shuffling and dropout draw from a fresh RNG
/// seeded with config.seed, so identical (model, data, config) runs are
/// bit-reproducible. Throws TrainError if the loss goes non-finite.
FitResult fit(CompositeEmbeddingModel& model, const FeatureMatrix& fm,
              const std::vector<double>& target, const TrainConfig& config);

} // namespace deepgb
