#pragma once

#include "deepgb/gbdt.hpp"
#include "deepgb/nn.hpp"
#include "deepgb/series.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace deepgb {

struct BoostConfig {
    /// Termination threshold on the mean absolute residual change,
    /// evaluated on the standardized scale.
    double epsilon = 1e-3;
    /// Upper bound on boosting stages; clamped to the number of features.
    /// 0 means "one stage per feature".
    int max_stages = 0;
    /// Step size of the generic driver's residual update. The staged
    /// embedding path follows the pseudocode literally and does not scale
    /// its predictions.
    double rho = 1.0;
    TrainConfig train;
    SizeRule size_rule = SizeRule::half;
    /// Width of the optional periodic time encoding; 0 disables it.
    int time2vec_k = 0;
};

/// Anything the generic boosting driver can stack: fit to a working
/// residual, then predict it.
class WeakLearner {
public:
    virtual ~WeakLearner() = default;
    virtual void fit(const FeatureMatrix& x, const std::vector<double>& target) = 0;
    virtual std::vector<double> predict(const FeatureMatrix& x) const = 0;
    virtual std::string name() const = 0;
};

struct GradientBoostResult {
    std::vector<std::shared_ptr<WeakLearner>> fitted;
    std::vector<double> final_residual;
    /// mean|F_m - F_{m-1}| per executed stage
    std::vector<double> deltas;
    bool stopped_early = false;
};

/// Generic residual boosting over an ordered model list: F_0 = y, each
/// stage fits the next model to F_{m-1} and updates
/// F_m = F_{m-1} - rho * predict(x). Stops when mean|F_m - F_{m-1}| drops
/// below epsilon (the terminating model is dropped, having added nothing)
/// or when the list is exhausted.
GradientBoostResult gradient_boost(const FeatureMatrix& x, const std::vector<double>& y,
                                   std::vector<std::shared_ptr<WeakLearner>> models,
                                   const BoostConfig& config);

/// rho-weighted sum of member predictions.
std::vector<double> predict_ensemble(const std::vector<std::shared_ptr<WeakLearner>>& fitted,
                                     const FeatureMatrix& x, double rho);

/// One staged-embedding iteration: which feature was added, what the
/// composite predicted, and the working residual it left behind. All
/// sequences are on the standardized scale.
struct StageRecord {
    int index = 0;  // 1-based stage number
    std::string feature;
    std::vector<double> prediction;
    std::vector<double> residual;
    double delta = 0.0;  // mean|F_m - F_{m-1}|
};

/// Final forecaster: the last staged composite (all tables frozen) plus a
/// boosted-tree model fitted on its remaining residual. Prediction is the
/// de-standardized sum of the two parts.
struct DeepGbModel {
    CompositeEmbeddingModel composite;
    GbdtModel residual_model;
    Scaler scaler;
    std::vector<StageRecord> stages;
    /// Feature order seen at training time; also the tree model's input
    /// column order.
    std::vector<std::string> feature_names;
    std::vector<int> feature_cardinalities;
    std::vector<std::int64_t> train_timestamps;
    std::string series_name;
    bool stopped_early = false;
};

/// Staged embedding training with freezing. Stage m builds a fresh dense
/// head over the frozen tables of stages 1..m-1 plus a new trainable table
/// for feature m, fits it to the standardized target, computes the working
/// residual F_m = y - composite.predict(x), freezes the new table, and
/// stops early once mean|F_m - F_{m-1}| < epsilon. The tree model is then
/// fitted on (x, F_m). Bit-reproducible for fixed seed and config.
DeepGbModel deepgb_fit(const TimeSeries& train_ts, const FeatureMatrix& train_fm,
                       const BoostConfig& config, const GbdtConfig& residual_spec);

/// composite.predict + residual_model.predict, de-standardized. Throws
/// ShapeError if the features disagree with the training-time tables.
std::vector<double> deepgb_predict(const DeepGbModel& model, const FeatureMatrix& fm);

/// Integer code columns for the tree model, in training feature order.
CodeColumns gbdt_input(const DeepGbModel& model, const FeatureMatrix& fm);

} // namespace deepgb
