#include "deepgb/nn.hpp"

#include "deepgb/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepgb {

std::vector<double> time2vec(double tau, const Time2VecLayer& layer) {
    std::vector<double> out(static_cast<std::size_t>(layer.k));
    if (layer.k < 1) return out;
    out[0] = layer.omega[0] * tau + layer.phi[0];
    for (int i = 1; i < layer.k; ++i) {
        out[static_cast<std::size_t>(i)] = std::sin(layer.omega[i] * tau + layer.phi[i]);
    }
    return out;
}

int embedding_size(int cardinality, SizeRule rule) {
    if (cardinality < 1) {
        throw ConfigError("embedding_size: cardinality must be >= 1");
    }
    int size = 0;
    if (rule == SizeRule::half) {
        size = std::min(50, (cardinality + 1) / 2);
    } else {
        // round half to even via the default FP rounding mode
        size = static_cast<int>(std::nearbyint(std::pow(cardinality + 1.0, 0.25)));
    }
    return std::max(1, size);
}

void rmsprop_step(std::span<double> params, std::span<const double> grads,
                  std::span<double> acc, double learning_rate, double decay,
                  double epsilon) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        acc[i] = decay * acc[i] + (1.0 - decay) * g * g;
        params[i] -= learning_rate * g / (std::sqrt(acc[i]) + epsilon);
    }
}

CompositeEmbeddingModel::CompositeEmbeddingModel(std::vector<EmbeddingTable> tables,
                                                 const std::vector<int>& hidden_sizes,
                                                 double dropout_rate,
                                                 std::optional<int> time2vec_k)
    : tables_(std::move(tables)), dropout_rate_(dropout_rate) {
    for (auto& t : tables_) {
        if (t.weights.empty()) {
            t.weights = Matrix(static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.dim));
        }
    }
    if (time2vec_k) {
        Time2VecLayer t2v;
        t2v.k = *time2vec_k;
        t2v.omega.assign(static_cast<std::size_t>(t2v.k), 0.0);
        t2v.phi.assign(static_cast<std::size_t>(t2v.k), 0.0);
        time2vec_ = std::move(t2v);
    }
    std::size_t in = input_width();
    for (const int h : hidden_sizes) {
        DenseLayer layer;
        layer.weights = Matrix(static_cast<std::size_t>(h), in);
        layer.bias.assign(static_cast<std::size_t>(h), 0.0);
        layer.activation = Activation::relu;
        layers_.push_back(std::move(layer));
        in = static_cast<std::size_t>(h);
    }
    DenseLayer out;
    out.weights = Matrix(1, in);
    out.bias.assign(1, 0.0);
    out.activation = Activation::identity;
    layers_.push_back(std::move(out));
}

std::size_t CompositeEmbeddingModel::input_width() const {
    std::size_t w = 0;
    for (const auto& t : tables_) w += static_cast<std::size_t>(t.dim);
    if (time2vec_) w += static_cast<std::size_t>(time2vec_->k);
    return w;
}

std::size_t CompositeEmbeddingModel::trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tables_) {
        if (!t.frozen) n += t.weights.size();
    }
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    if (time2vec_) n += 2 * static_cast<std::size_t>(time2vec_->k);
    return n;
}

void CompositeEmbeddingModel::init_trainable(Rng& rng) {
    for (auto& t : tables_) {
        if (t.frozen) continue;
        for (auto& w : t.weights.data) w = rng.uniform(-0.05, 0.05);
    }
    for (auto& l : layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in_size() + l.out_size()));
        for (auto& w : l.weights.data) w = rng.uniform(-limit, limit);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    if (time2vec_) {
        for (auto& w : time2vec_->omega) w = rng.uniform(-1.0, 1.0);
        for (auto& w : time2vec_->phi) w = rng.uniform(-1.0, 1.0);
    }
}

void CompositeEmbeddingModel::freeze_table(std::size_t index) {
    if (index >= tables_.size()) {
        throw ConfigError("freeze_table: index " + std::to_string(index) + " out of range (" +
                          std::to_string(tables_.size()) + " tables)");
    }
    tables_[index].frozen = true;
}

ForwardCache CompositeEmbeddingModel::forward(const FeatureMatrix& fm,
                                              std::span<const std::size_t> rows, RunMode mode,
                                              Rng* rng) const {
    const std::size_t batch = rows.size();
    const std::size_t width = input_width();
    ForwardCache cache;
    cache.batch_rows.assign(rows.begin(), rows.end());
    cache.input = Matrix(batch, width);
    cache.codes.resize(tables_.size());

    // bind each table to its feature column by name
    std::vector<const CalendarFeature*> bound(tables_.size());
    for (std::size_t t = 0; t < tables_.size(); ++t) {
        const CalendarFeature* f = fm.find(tables_[t].feature_name);
        if (f == nullptr) {
            throw ShapeError("forward: feature '" + tables_[t].feature_name +
                             "' missing from input");
        }
        if (f->cardinality != tables_[t].cardinality) {
            throw ShapeError("forward: feature '" + tables_[t].feature_name + "' has cardinality " +
                             std::to_string(f->cardinality) + ", table expects " +
                             std::to_string(tables_[t].cardinality));
        }
        bound[t] = f;
        cache.codes[t].resize(batch);
    }
    if (time2vec_) cache.taus.resize(batch);

    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t r = rows[b];
        std::size_t offset = 0;
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            const int code = bound[t]->codes[r];
            if (code < 0 || code >= tables_[t].rows()) {
                throw ShapeError("forward: feature '" + tables_[t].feature_name + "' code " +
                                 std::to_string(code) + " out of range [0, " +
                                 std::to_string(tables_[t].rows()) + ") at row " +
                                 std::to_string(r));
            }
            cache.codes[t][b] = code;
            const auto vec = tables_[t].weights.row(static_cast<std::size_t>(code));
            std::copy(vec.begin(), vec.end(), cache.input.row(b).begin() + offset);
            offset += static_cast<std::size_t>(tables_[t].dim);
        }
        if (time2vec_) {
            const double tau = fm.time_index[r];
            cache.taus[b] = tau;
            const auto enc = time2vec(tau, *time2vec_);
            std::copy(enc.begin(), enc.end(), cache.input.row(b).begin() + offset);
        }
    }

    const bool use_dropout = mode == RunMode::train && dropout_rate_ > 0.0 && !layers_.empty();
    if (use_dropout && rng == nullptr) {
        throw TrainError("forward: train mode with dropout needs an RNG");
    }

    const Matrix* current = &cache.input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        Matrix pre(batch, layer.out_size());
        for (std::size_t b = 0; b < batch; ++b) {
            const auto in_row = current->row(b);
            for (std::size_t o = 0; o < layer.out_size(); ++o) {
                const auto w = layer.weights.row(o);
                double acc = layer.bias[o];
                for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * in_row[i];
                pre(b, o) = acc;
            }
        }
        Matrix post = pre;
        if (layer.activation == Activation::relu) {
            for (auto& v : post.data) v = v > 0.0 ? v : 0.0;
        }
        // inverted dropout after the first hidden layer only
        if (use_dropout && l == 0) {
            const double keep = 1.0 - dropout_rate_;
            cache.dropout_mask = Matrix(batch, layer.out_size());
            for (std::size_t i = 0; i < post.data.size(); ++i) {
                const double m = rng->uniform() < keep ? 1.0 / keep : 0.0;
                cache.dropout_mask.data[i] = m;
                post.data[i] *= m;
            }
        }
        cache.pre.push_back(std::move(pre));
        cache.post.push_back(std::move(post));
        current = &cache.post.back();
    }

    cache.predictions.resize(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        cache.predictions[b] = cache.post.back()(b, 0);
    }
    return cache;
}

Gradients CompositeEmbeddingModel::backward(const ForwardCache& cache,
                                            std::span<const double> targets) const {
    const std::size_t batch = cache.batch_rows.size();
    if (targets.size() != batch) {
        throw ShapeError("backward: " + std::to_string(targets.size()) + " targets for a batch of " +
                         std::to_string(batch));
    }
    Gradients g;
    g.tables.resize(tables_.size());
    g.layer_weights.resize(layers_.size());
    g.layer_bias.resize(layers_.size());

    // dL/d(pre) of the output layer; MSE over the batch
    Matrix delta(batch, 1);
    for (std::size_t b = 0; b < batch; ++b) {
        delta(b, 0) = 2.0 * (cache.predictions[b] - targets[b]) / static_cast<double>(batch);
    }

    Matrix input_grad;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const DenseLayer& layer = layers_[li];
        const Matrix& below = li == 0 ? cache.input : cache.post[li - 1];

        Matrix dw(layer.out_size(), layer.in_size());
        std::vector<double> db(layer.out_size(), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto in_row = below.row(b);
            for (std::size_t o = 0; o < layer.out_size(); ++o) {
                const double d = delta(b, o);
                db[o] += d;
                auto dw_row = dw.row(o);
                for (std::size_t i = 0; i < in_row.size(); ++i) dw_row[i] += d * in_row[i];
            }
        }
        g.layer_weights[li] = std::move(dw);
        g.layer_bias[li] = std::move(db);

        // propagate to the layer below (or to the concatenated input)
        Matrix down(batch, layer.in_size());
        for (std::size_t b = 0; b < batch; ++b) {
            auto down_row = down.row(b);
            for (std::size_t o = 0; o < layer.out_size(); ++o) {
                const double d = delta(b, o);
                const auto w = layer.weights.row(o);
                for (std::size_t i = 0; i < w.size(); ++i) down_row[i] += d * w[i];
            }
        }
        if (li == 0) {
            input_grad = std::move(down);
            break;
        }
        const std::size_t prev = li - 1;
        if (prev == 0 && !cache.dropout_mask.empty()) {
            for (std::size_t i = 0; i < down.data.size(); ++i) {
                down.data[i] *= cache.dropout_mask.data[i];
            }
        }
        if (layers_[prev].activation == Activation::relu) {
            for (std::size_t i = 0; i < down.data.size(); ++i) {
                if (cache.pre[prev].data[i] <= 0.0) down.data[i] = 0.0;
            }
        }
        delta = std::move(down);
    }

    // scatter the input gradient into the trainable tables
    std::size_t offset = 0;
    for (std::size_t t = 0; t < tables_.size(); ++t) {
        const std::size_t dim = static_cast<std::size_t>(tables_[t].dim);
        if (!tables_[t].frozen) {
            Matrix tg(static_cast<std::size_t>(tables_[t].rows()), dim);
            for (std::size_t b = 0; b < batch; ++b) {
                const auto src = input_grad.row(b);
                auto dst = tg.row(static_cast<std::size_t>(cache.codes[t][b]));
                for (std::size_t i = 0; i < dim; ++i) dst[i] += src[offset + i];
            }
            g.tables[t] = std::move(tg);
        }
        offset += dim;
    }
    if (time2vec_) {
        const auto& t2v = *time2vec_;
        g.t2v_omega.assign(static_cast<std::size_t>(t2v.k), 0.0);
        g.t2v_phi.assign(static_cast<std::size_t>(t2v.k), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const double tau = cache.taus[b];
            const auto src = input_grad.row(b);
            g.t2v_omega[0] += src[offset] * tau;
            g.t2v_phi[0] += src[offset];
            for (int i = 1; i < t2v.k; ++i) {
                const double c = std::cos(t2v.omega[i] * tau + t2v.phi[i]);
                g.t2v_omega[static_cast<std::size_t>(i)] += src[offset + i] * c * tau;
                g.t2v_phi[static_cast<std::size_t>(i)] += src[offset + i] * c;
            }
        }
    }
    return g;
}

std::vector<double> CompositeEmbeddingModel::predict(const FeatureMatrix& fm) const {
    std::vector<std::size_t> rows(fm.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return forward(fm, rows, RunMode::infer).predictions;
}

namespace {

/// Trainable (parameter, gradient) block pairs in a fixed order. The same
/// order defines RmsPropState::accumulators.
struct BlockPair {
    std::span<double> params;
    std::span<const double> grads;
};

std::vector<BlockPair> trainable_blocks(CompositeEmbeddingModel& model, const Gradients& g) {
    std::vector<BlockPair> blocks;
    auto& tables = model.tables();
    for (std::size_t t = 0; t < tables.size(); ++t) {
        if (tables[t].frozen) continue;
        blocks.push_back({tables[t].weights.data, g.tables[t].data});
    }
    auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        blocks.push_back({layers[l].weights.data, g.layer_weights[l].data});
        blocks.push_back({layers[l].bias, g.layer_bias[l]});
    }
    if (auto& t2v = model.time_encoding()) {
        blocks.push_back({t2v->omega, g.t2v_omega});
        blocks.push_back({t2v->phi, g.t2v_phi});
    }
    return blocks;
}

} // namespace

FitResult fit(CompositeEmbeddingModel& model, const FeatureMatrix& fm,
              const std::vector<double>& target, const TrainConfig& config) {
    const std::size_t n = fm.rows();
    if (n == 0 || target.size() != n) {
        throw TrainError("fit: target length " + std::to_string(target.size()) +
                         " does not match " + std::to_string(n) + " feature rows");
    }
    if (config.epochs < 1 || config.batch_size < 1) {
        throw ConfigError("fit: epochs and batch_size must be >= 1");
    }

    Rng rng(config.seed);
    RmsPropState state;
    state.learning_rate = config.learning_rate;
    state.decay = config.rms_decay;
    state.epsilon = config.rms_epsilon;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

    FitResult result;
    result.loss_history.reserve(static_cast<std::size_t>(config.epochs));
    std::vector<double> batch_target;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double sse = 0.0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t count = std::min(batch_size, n - start);
            const std::span<const std::size_t> rows{order.data() + start, count};
            batch_target.resize(count);
            for (std::size_t i = 0; i < count; ++i) batch_target[i] = target[rows[i]];

            const ForwardCache cache = model.forward(fm, rows, RunMode::train, &rng);
            const Gradients grads = model.backward(cache, batch_target);
            for (std::size_t i = 0; i < count; ++i) {
                const double e = cache.predictions[i] - batch_target[i];
                sse += e * e;
            }

            auto blocks = trainable_blocks(model, grads);
            if (state.accumulators.empty()) {
                state.accumulators.resize(blocks.size());
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    state.accumulators[i].assign(blocks[i].params.size(), 0.0);
                }
            }
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                rmsprop_step(blocks[i].params, blocks[i].grads, state.accumulators[i],
                             state.learning_rate, state.decay, state.epsilon);
            }
        }
        const double loss = sse / static_cast<double>(n);
        if (!std::isfinite(loss)) {
            throw TrainError("fit: loss diverged at epoch " + std::to_string(epoch) +
                             "; try a smaller learning_rate");
        }
        result.loss_history.push_back(loss);
    }
    return result;
}

} // namespace deepgb
