#include "deepgb/boosting.hpp"

#include "deepgb/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace deepgb {

namespace {

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

} // namespace

GradientBoostResult gradient_boost(const FeatureMatrix& x, const std::vector<double>& y,
                                   std::vector<std::shared_ptr<WeakLearner>> models,
                                   const BoostConfig& config) {
    if (models.empty()) {
        throw ConfigError("gradient_boost: empty model list");
    }
    if (config.epsilon <= 0.0 || config.rho <= 0.0) {
        throw ConfigError("gradient_boost: epsilon and rho must be > 0");
    }
    GradientBoostResult result;
    std::vector<double> residual = y;  // F_0
    for (auto& model : models) {
        model->fit(x, residual);
        const std::vector<double> pred = model->predict(x);
        std::vector<double> next = residual;
        for (std::size_t i = 0; i < next.size(); ++i) next[i] -= config.rho * pred[i];
        const double delta = mean_abs_diff(next, residual);
        result.deltas.push_back(delta);
        residual = std::move(next);
        // the fitted model is part of the ensemble even when it triggers
        // termination; F_m always equals y minus the members' contributions
        result.fitted.push_back(model);
        if (delta < config.epsilon) {
            result.stopped_early = true;
            break;
        }
    }
    result.final_residual = std::move(residual);
    return result;
}

std::vector<double> predict_ensemble(const std::vector<std::shared_ptr<WeakLearner>>& fitted,
                                     const FeatureMatrix& x, double rho) {
    std::vector<double> out(x.rows(), 0.0);
    for (const auto& model : fitted) {
        const std::vector<double> p = model->predict(x);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += rho * p[i];
    }
    return out;
}

DeepGbModel deepgb_fit(const TimeSeries& train_ts, const FeatureMatrix& train_fm,
                       const BoostConfig& config, const GbdtConfig& residual_spec) {
    if (train_fm.features.empty()) {
        throw ConfigError("deepgb_fit: feature list is empty");
    }
    if (train_fm.rows() != train_ts.size()) {
        throw ShapeError("deepgb_fit: feature matrix rows != series length");
    }
    if (config.epsilon <= 0.0) {
        throw ConfigError("deepgb_fit: epsilon must be > 0");
    }
    const int n_features = static_cast<int>(train_fm.features.size());
    int max_stages = config.max_stages == 0 ? n_features : config.max_stages;
    if (max_stages < 1) {
        throw ConfigError("deepgb_fit: max_stages must be >= 1 (or 0 for one per feature)");
    }
    max_stages = std::min(max_stages, n_features);

    DeepGbModel model;
    model.series_name = train_ts.name;
    for (const auto& f : train_fm.features) {
        model.feature_names.push_back(f.name);
        model.feature_cardinalities.push_back(f.cardinality);
    }
    model.train_timestamps = train_ts.timestamps;

    auto [scaler, y_std] = standardize(train_ts.values);
    model.scaler = scaler;

    std::vector<double> working = y_std;  // F_{m-1}, starting at F_0 = y
    std::vector<EmbeddingTable> frozen;
    CompositeEmbeddingModel stage_model;

    for (int m = 1; m <= max_stages; ++m) {
        const CalendarFeature& feat = train_fm.features[static_cast<std::size_t>(m - 1)];

        EmbeddingTable table;
        table.feature_name = feat.name;
        table.cardinality = feat.cardinality;
        table.dim = embedding_size(feat.cardinality, config.size_rule);

        std::vector<EmbeddingTable> tables = frozen;
        tables.push_back(std::move(table));
        stage_model = CompositeEmbeddingModel(
            std::move(tables), config.train.hidden_sizes, config.train.dropout_rate,
            config.time2vec_k > 0 ? std::optional<int>(config.time2vec_k) : std::nullopt);

        // fresh head and fresh trainable table every stage; one derived seed
        // stream for init, another for shuffling/dropout
        Rng init_rng(mix_seed(config.train.seed, static_cast<std::uint64_t>(2 * m)));
        stage_model.init_trainable(init_rng);
        TrainConfig stage_train = config.train;
        stage_train.seed = mix_seed(config.train.seed, static_cast<std::uint64_t>(2 * m + 1));
        fit(stage_model, train_fm, y_std, stage_train);

        stage_model.freeze_table(stage_model.tables().size() - 1);

        StageRecord record;
        record.index = m;
        record.feature = feat.name;
        record.prediction = stage_model.predict(train_fm);
        record.residual.resize(y_std.size());
        for (std::size_t i = 0; i < y_std.size(); ++i) {
            record.residual[i] = y_std[i] - record.prediction[i];
        }
        record.delta = mean_abs_diff(record.residual, working);
        working = record.residual;
        model.stages.push_back(std::move(record));

        if (model.stages.back().delta < config.epsilon) {
            model.stopped_early = true;
            break;
        }
        frozen = stage_model.tables();  // all frozen by now
    }

    model.composite = std::move(stage_model);
    model.residual_model = gbdt_fit(gbdt_input(model, train_fm), working, residual_spec);
    return model;
}

CodeColumns gbdt_input(const DeepGbModel& model, const FeatureMatrix& fm) {
    CodeColumns columns;
    columns.reserve(model.feature_names.size());
    for (std::size_t f = 0; f < model.feature_names.size(); ++f) {
        const CalendarFeature* feat = fm.find(model.feature_names[f]);
        if (feat == nullptr) {
            throw ShapeError("predict: feature '" + model.feature_names[f] +
                             "' missing from input");
        }
        if (feat->cardinality != model.feature_cardinalities[f]) {
            throw ShapeError("predict: feature '" + model.feature_names[f] +
                             "' has cardinality " + std::to_string(feat->cardinality) +
                             ", model was trained with " +
                             std::to_string(model.feature_cardinalities[f]));
        }
        columns.push_back(feat->codes);
    }
    return columns;
}

std::vector<double> deepgb_predict(const DeepGbModel& model, const FeatureMatrix& fm) {
    const std::vector<double> composite = model.composite.predict(fm);
    const std::vector<double> trees = gbdt_predict(model.residual_model, gbdt_input(model, fm));
    std::vector<double> out(composite.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = model.scaler.invert(composite[i] + trees[i]);
    }
    return out;
}

} // namespace deepgb
