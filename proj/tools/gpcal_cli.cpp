// gpcal command-line tool: simulate, train, evaluate, metrics.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpcal/gpcal.h"

namespace {

int exit_code(gpcal_status s)
{
    switch (s) {
    case GPCAL_OK: return 0;
    case GPCAL_ERROR_VALIDATION: return 2;
    case GPCAL_ERROR_NUMERICAL: return 3;
    default: return 1;
    }
}

/// Thrown to unwind with the status of a failed C call.
struct Failure
{
    gpcal_status status;
};

void check(gpcal_status s, const char* what)
{
    if (s != GPCAL_OK) {
        std::cerr << "error: " << what << ": " << gpcal_last_error() << '\n';
        throw Failure{ s };
    }
}

template <typename T, void (*Free)(T*)>
struct Handle
{
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using Config = Handle<gpcal_config, gpcal_config_free>;
using Simulation = Handle<gpcal_simulation, gpcal_simulation_free>;
using DatasetH = Handle<gpcal_dataset, gpcal_dataset_free>;
using Model = Handle<gpcal_model, gpcal_model_free>;
using TrajectoryH = Handle<gpcal_trajectory, gpcal_trajectory_free>;
using Evaluation = Handle<gpcal_evaluation, gpcal_evaluation_free>;

struct Options
{
    std::string config;
    std::string dataset;
    std::string model;
    std::string out;
    std::string truth;
    std::string estimated;
    std::string reference;
    std::optional<std::uint64_t> seed;
    double tolerance = 0.0;
    bool verbose = false;
};

void load_config(const Options& opt, Config& cfg)
{
    check(gpcal_config_load(opt.config.c_str(), cfg.out()), "loading config");
    if (opt.seed)
        check(gpcal_config_set_seed(cfg.get(), *opt.seed), "applying seed");
}

void print_metrics(const gpcal_metrics& m)
{
    std::printf("poses: %zu\nATE: %.6f m\nRPE: %.4f mm\n", m.poses, m.ate_m, m.rpe_m * 1e3);
}

int run_simulate(const Options& opt)
{
    Config cfg;
    load_config(opt, cfg);
    std::string dir = opt.out;
    if (dir.empty()) {
        const char* configured = nullptr;
        check(gpcal_config_output_dir(cfg.get(), &configured), "reading output_dir");
        dir = configured;
    }
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);

    Simulation sim;
    check(gpcal_simulate(cfg.get(), sim.out()), "simulating");
    const auto truth = (base / "truth.csv").string();
    const auto odom = (base / "odometry.csv").string();
    const auto data = (base / "dataset.csv").string();
    check(gpcal_simulation_write(sim.get(), truth.c_str(), odom.c_str(), data.c_str()), "writing");
    std::size_t n_truth = 0, n_odom = 0, n_data = 0;
    check(gpcal_simulation_counts(sim.get(), &n_truth, &n_odom, &n_data), "counting rows");
    std::printf("%s: %zu rows\n%s: %zu rows\n%s: %zu rows\n", truth.c_str(), n_truth, odom.c_str(),
                n_odom, data.c_str(), n_data);
    return 0;
}

int run_train(const Options& opt)
{
    Config cfg;
    load_config(opt, cfg);
    DatasetH data;
    check(gpcal_dataset_load(opt.dataset.c_str(), data.out()), "loading dataset");
    if (opt.verbose) {
        std::size_t rows = 0, m = 0;
        check(gpcal_dataset_size(data.get(), &rows, &m), "dataset size");
        std::fprintf(stderr, "training on %zu edges, %zu ticks per edge\n", rows, m);
    }
    Model model;
    check(gpcal_model_train(cfg.get(), data.get(), model.out()), "training");
    check(gpcal_model_save(model.get(), opt.model.c_str()), "saving model");

    std::size_t needed = 0;
    check(gpcal_model_report(model.get(), data.get(), nullptr, 0, &needed), "building report");
    std::vector<char> buf(needed);
    check(gpcal_model_report(model.get(), data.get(), buf.data(), buf.size(), &needed),
          "building report");
    const std::string report_path = opt.model + ".report.txt";
    if (std::FILE* f = std::fopen(report_path.c_str(), "wb")) {
        std::fputs(buf.data(), f);
        std::fclose(f);
    } else {
        std::cerr << "error: cannot write " << report_path << '\n';
        return 1;
    }
    std::fputs(buf.data(), stdout);
    return 0;
}

int run_evaluate(const Options& opt)
{
    Model model;
    check(gpcal_model_load(opt.model.c_str(), model.out()), "loading model");
    DatasetH data;
    check(gpcal_dataset_load(opt.dataset.c_str(), data.out()), "loading test dataset");

    TrajectoryH truth;
    int status = 0;
    if (!opt.truth.empty()) {
        const gpcal_status s = gpcal_trajectory_load(opt.truth.c_str(), truth.out());
        if (s != GPCAL_OK) {
            std::cerr << "error: loading truth: " << gpcal_last_error()
                      << " (metrics skipped, trajectory still written)\n";
            status = exit_code(s);
        }
    }

    Evaluation eval;
    check(gpcal_evaluate(model.get(), data.get(), truth.get(), eval.out()), "evaluating");
    const std::string dir = opt.out.empty() ? "." : opt.out;
    check(gpcal_evaluation_write(eval.get(), dir.c_str()), "writing results");

    gpcal_metrics m{};
    int has = 0;
    check(gpcal_evaluation_metrics(eval.get(), &m, &has), "reading metrics");
    if (has)
        print_metrics(m);
    return status;
}

int run_metrics(const Options& opt)
{
    TrajectoryH est;
    TrajectoryH ref;
    check(gpcal_trajectory_load(opt.estimated.c_str(), est.out()), "loading estimated trajectory");
    check(gpcal_trajectory_load(opt.reference.c_str(), ref.out()), "loading reference trajectory");
    gpcal_metrics m{};
    check(gpcal_metrics_compute(est.get(), ref.get(), opt.tolerance, &m), "computing metrics");
    print_metrics(m);
    if (!opt.out.empty()) {
        std::filesystem::create_directories(opt.out);
        const std::filesystem::path base(opt.out);
        check(gpcal_metrics_write(&m, (base / "metrics.txt").string().c_str(),
                                  (base / "metrics.csv").string().c_str()),
              "writing metrics");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{ "Wheel-odometry sensor calibration with Gaussian processes" };
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_flag("--verbose,-v", opt.verbose, "Print progress to stderr");
    };

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic calibration dataset");
    sim->add_option("--config", opt.config, "INI configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", opt.out, "Output directory (default: [evaluation] output_dir)");
    auto* sim_seed = sim->add_option("--seed", seed, "Override the configured seed");
    add_common(sim);

    auto* tr = app.add_subcommand("train", "Fit a motion model to a dataset");
    tr->add_option("--config", opt.config, "INI configuration")->required()->check(CLI::ExistingFile);
    tr->add_option("--dataset", opt.dataset, "Training dataset CSV")->required();
    tr->add_option("--model", opt.model, "Model output path")->required();
    auto* tr_seed = tr->add_option("--seed", seed, "Override the configured seed");
    add_common(tr);

    auto* ev = app.add_subcommand("evaluate", "Predict a test trajectory and score it");
    ev->add_option("--model", opt.model, "Trained model file")->required();
    ev->add_option("--dataset", opt.dataset, "Test dataset CSV")->required();
    ev->add_option("--truth", opt.truth, "Reference trajectory or ground-truth CSV");
    ev->add_option("--out", opt.out, "Output directory");
    add_common(ev);

    auto* me = app.add_subcommand("metrics", "ATE/RPE between two trajectory CSVs");
    me->add_option("--estimated", opt.estimated, "Estimated trajectory CSV")->required();
    me->add_option("--reference", opt.reference, "Reference trajectory CSV")->required();
    me->add_option("--tolerance", opt.tolerance, "Timestamp matching tolerance in seconds");
    me->add_option("--out", opt.out, "Directory for metrics.txt / metrics.csv");
    add_common(me);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (sim_seed->count() > 0 || tr_seed->count() > 0)
        opt.seed = seed;

    try {
        if (sim->parsed())
            return run_simulate(opt);
        if (tr->parsed())
            return run_train(opt);
        if (ev->parsed())
            return run_evaluate(opt);
        if (me->parsed())
            return run_metrics(opt);
    } catch (const Failure& f) {
        return exit_code(f.status);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
