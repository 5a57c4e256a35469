#include "deepgb/error.hpp"
#include "deepgb/nn.hpp"
#include "deepgb/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace deepgb;

namespace {

/// Hand-built feature matrix with arbitrary codes (bypasses the calendar).
FeatureMatrix custom_features(const std::vector<std::pair<std::string, int>>& spec,
                              std::size_t rows, Rng& rng) {
    FeatureMatrix fm;
    for (const auto& [name, cardinality] : spec) {
        CalendarFeature f;
        f.name = name;
        f.cardinality = cardinality;
        for (std::size_t i = 0; i < rows; ++i) {
            f.codes.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(cardinality))));
        }
        fm.features.push_back(std::move(f));
    }
    for (std::size_t i = 0; i < rows; ++i) {
        fm.time_index.push_back(rows > 1 ? static_cast<double>(i) / (static_cast<double>(rows) - 1)
                                         : 0.0);
    }
    return fm;
}

std::vector<std::size_t> all_rows(const FeatureMatrix& fm) {
    std::vector<std::size_t> rows(fm.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

double mse_loss(const CompositeEmbeddingModel& model, const FeatureMatrix& fm,
                const std::vector<double>& y) {
    const auto rows = all_rows(fm);
    const auto cache = model.forward(fm, rows, RunMode::infer);
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = cache.predictions[i] - y[i];
        sse += e * e;
    }
    return sse / static_cast<double>(y.size());
}

/// Pointers to every trainable scalar, in the Gradients block order.
struct FlatView {
    std::vector<double*> params;
    std::vector<double> grads;
};

FlatView flatten(CompositeEmbeddingModel& model, const Gradients& g) {
    FlatView view;
    auto add = [&view](std::vector<double>& p, const std::vector<double>& gr) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            view.params.push_back(&p[i]);
            view.grads.push_back(gr[i]);
        }
    };
    for (std::size_t t = 0; t < model.tables().size(); ++t) {
        if (model.tables()[t].frozen) continue;
        add(model.tables()[t].weights.data, g.tables[t].data);
    }
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
        add(model.layers()[l].weights.data, g.layer_weights[l].data);
        add(model.layers()[l].bias, g.layer_bias[l]);
    }
    if (model.time_encoding()) {
        add(model.time_encoding()->omega, g.t2v_omega);
        add(model.time_encoding()->phi, g.t2v_phi);
    }
    return view;
}

/// Max relative disagreement between analytic and central-difference
/// gradients, h = 1e-5.
double gradient_check(CompositeEmbeddingModel& model, const FeatureMatrix& fm,
                      const std::vector<double>& y) {
    const auto rows = all_rows(fm);
    const auto cache = model.forward(fm, rows, RunMode::train);
    const Gradients analytic = model.backward(cache, y);
    FlatView view = flatten(model, analytic);

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < view.params.size(); ++i) {
        double* p = view.params[i];
        const double saved = *p;
        *p = saved + h;
        const double up = mse_loss(model, fm, y);
        *p = saved - h;
        const double down = mse_loss(model, fm, y);
        *p = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(view.grads[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - view.grads[i]) / denom);
    }
    return worst;
}

} // namespace

TEST_CASE("embedding_size half rule") {
    CHECK(embedding_size(7, SizeRule::half) == 4);
    CHECK(embedding_size(24, SizeRule::half) == 12);
    CHECK(embedding_size(200, SizeRule::half) == 50);  // clamp branch
    CHECK(embedding_size(1, SizeRule::half) == 1);
}

TEST_CASE("embedding_size fourth-root rule") {
    // 8^0.25 = 1.68... rounds to 2
    CHECK(embedding_size(7, SizeRule::fourth_root) == 2);
    CHECK(embedding_size(1, SizeRule::fourth_root) == 1);
    CHECK(embedding_size(624, SizeRule::fourth_root) == 5);
}

TEST_CASE("embedding_size half never exceeds 50 and never hits 0") {
    for (int c = 1; c < 4000; ++c) {
        const int s = embedding_size(c, SizeRule::half);
        CHECK(s >= 1);
        CHECK(s <= 50);
    }
}

TEST_CASE("time2vec zero parameters give the zero vector") {
    Time2VecLayer layer{3, {0, 0, 0}, {0, 0, 0}};
    CHECK(time2vec(0.7, layer) == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("time2vec hand evaluation") {
    Time2VecLayer layer{2, {1.0, 3.14159265358979323846}, {0.0, 0.0}};
    const auto out = time2vec(1.0, layer);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("time2vec at the origin") {
    Time2VecLayer layer{3, {0.3, 0.5, 0.9}, {0.25, 0.5, 1.0}};
    const auto out = time2vec(0.0, layer);
    CHECK(out[0] == doctest::Approx(0.25));
    CHECK(out[1] == doctest::Approx(std::sin(0.5)));
    CHECK(out[2] == doctest::Approx(std::sin(1.0)));
}

TEST_CASE("forward with all-zero weights predicts zero") {
    Rng rng(1);
    const auto fm = custom_features({{"a", 4}, {"b", 9}}, 6, rng);
    EmbeddingTable ta{"a", 4, 2, {}, false};
    EmbeddingTable tb{"b", 9, 3, {}, false};
    CompositeEmbeddingModel model({ta, tb}, {8, 8}, 0.0);
    for (const double p : model.predict(fm)) CHECK(p == 0.0);
}

TEST_CASE("forward hand trace through a single embedding") {
    CalendarFeature f;
    f.name = "cat";
    f.cardinality = 3;
    f.codes = {2, 0};
    FeatureMatrix fm;
    fm.features = {f};
    fm.time_index = {0.0, 1.0};

    EmbeddingTable table{"cat", 3, 1, {}, false};
    CompositeEmbeddingModel model({table}, {}, 0.0);  // just Dense(1) on top
    const double w = 0.75, b = 0.125;
    model.tables()[0].weights(2, 0) = w;
    model.layers()[0].weights(0, 0) = 1.0;
    model.layers()[0].bias[0] = b;

    const auto pred = model.predict(fm);
    CHECK(pred[0] == w + b);  // looked-up weight passes straight through
    CHECK(pred[1] == b);      // row 0 is still zero
}

TEST_CASE("inference is a pure function of model and input") {
    Rng rng(5);
    const auto fm = custom_features({{"a", 7}, {"b", 24}}, 16, rng);
    EmbeddingTable ta{"a", 7, 4, {}, false};
    EmbeddingTable tb{"b", 24, 5, {}, false};
    CompositeEmbeddingModel model({ta, tb}, {16, 8}, 0.5, 3);
    Rng init(99);
    model.init_trainable(init);
    const auto once = model.predict(fm);
    const auto twice = model.predict(fm);
    CHECK(once == twice);  // no dropout at inference, bitwise equal
}

TEST_CASE("forward rejects out-of-range codes naming the feature") {
    CalendarFeature f;
    f.name = "cat";
    f.cardinality = 3;
    f.codes = {5};
    FeatureMatrix fm;
    fm.features = {f};
    fm.time_index = {0.0};
    EmbeddingTable table{"cat", 3, 2, {}, false};
    // table rows = cardinality + 1, so code 4 would also pass; 5 must not
    CompositeEmbeddingModel model({table}, {4}, 0.0);
    const std::vector<std::size_t> rows{0};
    CHECK_THROWS_WITH_AS(static_cast<void>(model.forward(fm, rows, RunMode::infer)),
                         doctest::Contains("cat"), ShapeError);
}

TEST_CASE("the spare embedding row is addressable") {
    CalendarFeature f;
    f.name = "cat";
    f.cardinality = 3;
    f.codes = {3};  // == cardinality, the +1 row
    FeatureMatrix fm;
    fm.features = {f};
    fm.time_index = {0.0};
    EmbeddingTable table{"cat", 3, 1, {}, false};
    CompositeEmbeddingModel model({table}, {}, 0.0);
    model.tables()[0].weights(3, 0) = 2.5;
    model.layers()[0].weights(0, 0) = 1.0;
    CHECK(model.predict(fm)[0] == 2.5);
}

TEST_CASE("backward matches central finite differences") {
    for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        Rng rng(seed);
        const auto fm = custom_features({{"a", 4}, {"b", 6}}, 10, rng);
        EmbeddingTable ta{"a", 4, 2, {}, false};
        EmbeddingTable tb{"b", 6, 2, {}, false};
        CompositeEmbeddingModel model({ta, tb}, {5, 4}, 0.0, 2);
        model.init_trainable(rng);
        std::vector<double> y(fm.rows());
        for (auto& v : y) v = rng.normal();
        CHECK(gradient_check(model, fm, y) < 1e-4);
    }
}

TEST_CASE("frozen tables receive no gradient block") {
    Rng rng(13);
    const auto fm = custom_features({{"a", 4}, {"b", 6}}, 8, rng);
    EmbeddingTable ta{"a", 4, 2, {}, true};  // frozen
    EmbeddingTable tb{"b", 6, 2, {}, false};
    CompositeEmbeddingModel model({ta, tb}, {4}, 0.0);
    model.init_trainable(rng);
    std::vector<double> y(fm.rows(), 1.0);
    const auto rows = all_rows(fm);
    const auto cache = model.forward(fm, rows, RunMode::train);
    const Gradients g = model.backward(cache, y);
    CHECK(g.tables[0].empty());
    CHECK_FALSE(g.tables[1].empty());
}

TEST_CASE("zero residual gives zero gradients") {
    Rng rng(29);
    const auto fm = custom_features({{"a", 5}}, 12, rng);
    EmbeddingTable ta{"a", 5, 3, {}, false};
    CompositeEmbeddingModel model({ta}, {6, 4}, 0.0);
    model.init_trainable(rng);
    const auto rows = all_rows(fm);
    const auto cache = model.forward(fm, rows, RunMode::train);
    // target the model's own output: the optimum of the squared error
    const Gradients g = model.backward(cache, cache.predictions);
    for (const auto& t : g.tables) {
        for (const double v : t.data) CHECK(v == 0.0);
    }
    for (const auto& w : g.layer_weights) {
        for (const double v : w.data) CHECK(v == 0.0);
    }
    for (const auto& b : g.layer_bias) {
        for (const double v : b) CHECK(v == 0.0);
    }
}

TEST_CASE("rmsprop_step hand value") {
    std::vector<double> p{0.0};
    std::vector<double> g{1.0};
    std::vector<double> acc{0.0};
    rmsprop_step(p, g, acc, 0.0002, 0.9, 1e-8);
    CHECK(acc[0] == doctest::Approx(0.1));
    CHECK(p[0] == doctest::Approx(-6.3245553e-4).epsilon(1e-5));
}

TEST_CASE("rmsprop_step with zero gradient only decays the accumulator") {
    std::vector<double> p{1.5};
    std::vector<double> g{0.0};
    std::vector<double> acc{0.4};
    rmsprop_step(p, g, acc, 0.0002, 0.9, 1e-8);
    CHECK(p[0] == 1.5);
    CHECK(acc[0] == doctest::Approx(0.36));
}

TEST_CASE("rmsprop_step is deterministic") {
    std::vector<double> p1{0.3, -0.2}, p2{0.3, -0.2};
    std::vector<double> g{0.5, 1.25};
    std::vector<double> a1{0.01, 0.02}, a2{0.01, 0.02};
    rmsprop_step(p1, g, a1, 0.001, 0.9, 1e-8);
    rmsprop_step(p2, g, a2, 0.001, 0.9, 1e-8);
    CHECK(p1 == p2);
    CHECK(a1 == a2);
}

namespace {

/// Hourly series whose target depends on the weekday only.
std::pair<FeatureMatrix, std::vector<double>> dayofweek_pattern(int days) {
    const double by_dow[7] = {1.0, -0.5, 2.0, 0.25, -1.5, 3.0, -2.0};
    TimeSeries ts;
    ts.name = "dow";
    const std::int64_t start = 1609977600;  // Thursday
    for (int i = 0; i < days * 24; ++i) {
        ts.timestamps.push_back(start + static_cast<std::int64_t>(i) * 3600);
        ts.values.push_back(0.0);
    }
    auto fm = extract_calendar_features(ts, {"dayofweek"});
    std::vector<double> y(fm.rows());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = by_dow[fm.features[0].codes[i]];
    }
    return {std::move(fm), std::move(y)};
}

} // namespace

TEST_CASE("fit drives a zero model on a zero target to zero loss") {
    Rng rng(7);
    const auto fm = custom_features({{"a", 7}}, 64, rng);
    EmbeddingTable ta{"a", 7, 4, {}, false};
    CompositeEmbeddingModel model({ta}, {8, 8}, 0.0);
    // zero-initialized output bias and weights: already optimal
    TrainConfig config;
    config.epochs = 5;
    config.seed = 1;
    const auto result = fit(model, fm, std::vector<double>(fm.rows(), 0.0), config);
    REQUIRE(result.loss_history.size() == 5);
    for (const double loss : result.loss_history) CHECK(loss <= 1e-6);
}

TEST_CASE("fit learns a pure dayofweek pattern") {
    auto [fm, y_raw] = dayofweek_pattern(21);
    const auto [scaler, y] = standardize(y_raw);

    EmbeddingTable table{"dayofweek", 7, 4, {}, false};
    CompositeEmbeddingModel model({table}, {32, 32, 32, 32}, 0.1);
    Rng init(mix_seed(42, 0));
    model.init_trainable(init);
    TrainConfig config;  // 100 epochs, batch 32, RMSProp defaults
    config.seed = 42;
    const auto result = fit(model, fm, y, config);
    REQUIRE(result.loss_history.size() == 100);
    // standardized target variance is 1 by construction
    CHECK(result.loss_history.back() < 0.05);
}

TEST_CASE("fit is bit-reproducible for a fixed seed") {
    auto [fm, y_raw] = dayofweek_pattern(7);
    const auto [scaler, y] = standardize(y_raw);

    auto run = [&]() {
        EmbeddingTable table{"dayofweek", 7, 3, {}, false};
        CompositeEmbeddingModel model({table}, {8, 8}, 0.1);
        Rng init(123);
        model.init_trainable(init);
        TrainConfig config;
        config.epochs = 12;
        config.seed = 321;
        const auto result = fit(model, fm, y, config);
        return std::make_pair(result.loss_history, model.tables()[0].weights.data);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("fit reports divergence as a training error") {
    Rng rng(31);
    const auto fm = custom_features({{"a", 5}}, 48, rng);
    std::vector<double> y(fm.rows());
    for (auto& v : y) v = rng.normal();
    EmbeddingTable table{"a", 5, 2, {}, false};
    CompositeEmbeddingModel model({table}, {8}, 0.0);
    model.init_trainable(rng);
    TrainConfig config;
    config.epochs = 3;
    config.batch_size = 8;
    config.learning_rate = 1e200;  // guaranteed overflow
    CHECK_THROWS_AS(static_cast<void>(fit(model, fm, y, config)), TrainError);
}

TEST_CASE("freezing keeps a table bit-identical through training") {
    Rng rng(47);
    const auto fm = custom_features({{"a", 6}, {"b", 9}}, 40, rng);
    std::vector<double> y(fm.rows());
    for (auto& v : y) v = rng.normal();

    EmbeddingTable ta{"a", 6, 3, {}, false};
    EmbeddingTable tb{"b", 9, 3, {}, false};
    CompositeEmbeddingModel model({ta, tb}, {8, 8}, 0.1);
    model.init_trainable(rng);
    model.freeze_table(0);
    const std::vector<double> snapshot = model.tables()[0].weights.data;

    TrainConfig config;
    config.epochs = 10;
    config.seed = 9;
    fit(model, fm, y, config);
    CHECK(model.tables()[0].weights.data == snapshot);  // exact, not approximate

    SUBCASE("freezing is idempotent") {
        model.freeze_table(0);
        CHECK(model.tables()[0].frozen);
    }
}

TEST_CASE("freezing every table leaves only the head trainable") {
    Rng rng(53);
    const auto fm = custom_features({{"a", 4}}, 32, rng);
    std::vector<double> y(fm.rows());
    for (auto& v : y) v = rng.normal();

    EmbeddingTable ta{"a", 4, 2, {}, false};
    CompositeEmbeddingModel model({ta}, {6}, 0.0);
    model.init_trainable(rng);
    model.freeze_table(0);
    const auto table_before = model.tables()[0].weights.data;
    const auto head_before = model.layers()[0].weights.data;

    TrainConfig config;
    config.epochs = 5;
    config.seed = 77;
    fit(model, fm, y, config);
    CHECK(model.tables()[0].weights.data == table_before);
    CHECK(model.layers()[0].weights.data != head_before);
}

TEST_CASE("freeze_table rejects bad indices") {
    CompositeEmbeddingModel model({EmbeddingTable{"a", 3, 1, {}, false}}, {4}, 0.0);
    CHECK_THROWS_AS(model.freeze_table(5), ConfigError);
}

TEST_CASE("inverted dropout preserves the expected output on a linear head") {
    Rng rng(61);
    const auto fm = custom_features({{"a", 3}}, 1, rng);
    EmbeddingTable ta{"a", 3, 4, {}, false};
    CompositeEmbeddingModel model({ta}, {8}, 0.4);
    model.init_trainable(rng);
    model.layers()[0].activation = Activation::identity;  // make E[out] exact

    const double reference = model.predict(fm)[0];
    const std::vector<std::size_t> rows{0};
    Rng mask_rng(4242);
    double sum = 0.0;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        sum += model.forward(fm, rows, RunMode::train, &mask_rng).predictions[0];
    }
    const double mc = sum / draws;
    CHECK(mc == doctest::Approx(reference).epsilon(0.05));
}

TEST_CASE("trainable_parameter_count tracks freezing") {
    EmbeddingTable ta{"a", 3, 2, {}, false};  // 4x2 = 8
    CompositeEmbeddingModel model({ta}, {4}, 0.0);
    // head: 4x2 + 4 + 1x4 + 1 = 17
    CHECK(model.trainable_parameter_count() == 8 + 17);
    model.freeze_table(0);
    CHECK(model.trainable_parameter_count() == 17);
}
