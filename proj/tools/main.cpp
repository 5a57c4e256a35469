#include "deepgb/cli.hpp"
#include "deepgb/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string data_path;
    std::string out;
    long long seed = -1;
};

deepgb::cli::RunConfig resolve(const CommonArgs& args) {
    deepgb::cli::RunConfig config = deepgb::cli::load_config(args.config_path);
    if (!args.data_path.empty()) config.data = args.data_path;
    if (!args.out.empty()) config.out = args.out;
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    return config;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_data = true) {
    cmd->add_option("--config", args.config_path, "flat key = value config file");
    if (with_data) cmd->add_option("--data", args.data_path, "CSV file or directory of CSVs");
    cmd->add_option("--out", args.out, "output directory (fit, benchmark) or file");
    cmd->add_option("--seed", args.seed, "RNG seed override");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boosted calendar-embedding forecaster with a tree-ensemble residual stage"};
    app.require_subcommand(1);

    CommonArgs fit_args, forecast_args, bench_args, plot_args;
    std::string model_path;
    std::string plot_model_path;
    int horizon = 0;

    CLI::App* fit = app.add_subcommand("fit", "fit one model per input series");
    add_common(fit, fit_args);

    CLI::App* forecast =
        app.add_subcommand("forecast", "extend a fitted model past its series' end");
    add_common(forecast, forecast_args);
    forecast->add_option("--model", model_path, "fitted .dgb model file")->required();
    forecast->add_option("--horizon", horizon, "steps to forecast")->required();

    CLI::App* benchmark =
        app.add_subcommand("benchmark", "backtest against seasonal-naive and linear-AR");
    add_common(benchmark, bench_args);

    CLI::App* export_plot =
        app.add_subcommand("export-plot", "write the per-stage training decomposition CSV");
    add_common(export_plot, plot_args);
    export_plot->add_option("--model", plot_model_path, "fitted .dgb model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (fit->parsed()) {
            deepgb::cli::run_fit(resolve(fit_args));
        } else if (forecast->parsed()) {
            const auto config = resolve(forecast_args);
            const std::string out =
                forecast_args.out.empty() ? "forecast.csv" : forecast_args.out;
            deepgb::cli::run_forecast(model_path, config.data, horizon, out, config);
        } else if (benchmark->parsed()) {
            deepgb::cli::run_benchmark(resolve(bench_args));
        } else if (export_plot->parsed()) {
            const auto config = resolve(plot_args);
            const std::string out =
                plot_args.out.empty() ? "decomposition.csv" : plot_args.out;
            deepgb::cli::run_export_plot(plot_model_path, config.data, out, config);
        }
    } catch (const deepgb::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
