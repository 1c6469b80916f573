#include "gpcal/gpcal.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "gpcal/config.hpp"
#include "gpcal/csv_io.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/metrics.hpp"
#include "gpcal/model_store.hpp"
#include "gpcal/pipeline.hpp"
#include "gpcal/simulator.hpp"

struct gpcal_config
{
    gpcal::Config value;
};

struct gpcal_simulation
{
    gpcal::SimulationResult value;
};

struct gpcal_dataset
{
    gpcal::Dataset value;
};

struct gpcal_model
{
    gpcal::CalibrationRun value;
};

struct gpcal_trajectory
{
    gpcal::Trajectory value;
};

struct gpcal_evaluation
{
    gpcal::EvaluationResult value;
};

namespace {

thread_local std::string last_error;

template <typename F>
gpcal_status guarded(F&& body)
{
    try {
        body();
        last_error.clear();
        return GPCAL_OK;
    } catch (const gpcal::ValidationError& e) {
        last_error = e.what();
        return GPCAL_ERROR_VALIDATION;
    } catch (const gpcal::NumericalError& e) {
        last_error = e.what();
        return GPCAL_ERROR_NUMERICAL;
    } catch (const gpcal::IoError& e) {
        last_error = e.what();
        return GPCAL_ERROR_IO;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return GPCAL_ERROR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return GPCAL_ERROR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return GPCAL_ERROR_INTERNAL;
    }
}

template <typename T>
void require(const T* p, const char* name)
{
    if (p == nullptr)
        throw gpcal::ValidationError(std::string(name) + " must not be NULL");
}

gpcal_metrics to_c(const gpcal::MetricsReport& r)
{
    return { r.poses, r.ate_m, r.rpe_m, r.ate_rot_rad, r.rpe_rot_rad };
}

gpcal::MetricsReport from_c(const gpcal_metrics& m)
{
    gpcal::MetricsReport r;
    r.poses = m.poses;
    r.ate_m = m.ate_m;
    r.rpe_m = m.rpe_m;
    r.ate_rot_rad = m.ate_rot_rad;
    r.rpe_rot_rad = m.rpe_rot_rad;
    return r;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer)
{
    std::ostringstream os;
    writer(os);
    gpcal::save_text(path, os.str());
}

} // namespace

extern "C" {

const char* gpcal_version(void) { return "1.0.0"; }

const char* gpcal_last_error(void) { return last_error.c_str(); }

gpcal_status gpcal_config_load(const char* path, gpcal_config** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new gpcal_config{ gpcal::load_config(path) };
    });
}

gpcal_status gpcal_config_parse(const char* text, gpcal_config** out)
{
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = new gpcal_config{ gpcal::parse_config(text) };
    });
}

gpcal_status gpcal_config_set_seed(gpcal_config* config, uint64_t seed)
{
    return guarded([&] {
        require(config, "config");
        gpcal::override_seed(config->value, seed);
    });
}

gpcal_status gpcal_config_output_dir(const gpcal_config* config, const char** out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = config->value.output_dir.c_str();
    });
}

void gpcal_config_free(gpcal_config* config) { delete config; }

gpcal_status gpcal_simulate(const gpcal_config* config, gpcal_simulation** out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new gpcal_simulation{ gpcal::simulate(config->value.simulation) };
    });
}

gpcal_status gpcal_simulation_counts(const gpcal_simulation* sim, size_t* truth_rows,
                                     size_t* odometry_rows, size_t* dataset_rows)
{
    return guarded([&] {
        require(sim, "sim");
        if (truth_rows)
            *truth_rows = sim->value.event_times.size();
        if (odometry_rows)
            *odometry_rows = sim->value.odometry.size();
        if (dataset_rows)
            *dataset_rows = sim->value.dataset.size();
    });
}

gpcal_status gpcal_simulation_write(const gpcal_simulation* sim, const char* truth_path,
                                    const char* odometry_path, const char* dataset_path)
{
    return guarded([&] {
        require(sim, "sim");
        if (truth_path)
            write_file(truth_path, [&](std::ostream& os) { gpcal::write_truth(os, sim->value); });
        if (odometry_path)
            write_file(odometry_path,
                       [&](std::ostream& os) { gpcal::write_odometry(os, sim->value.odometry); });
        if (dataset_path)
            write_file(dataset_path,
                       [&](std::ostream& os) { gpcal::write_dataset(os, sim->value.dataset); });
    });
}

gpcal_status gpcal_simulation_dataset(const gpcal_simulation* sim, gpcal_dataset** out)
{
    return guarded([&] {
        require(sim, "sim");
        require(out, "out");
        *out = new gpcal_dataset{ sim->value.dataset };
    });
}

gpcal_status gpcal_simulation_truth(const gpcal_simulation* sim, gpcal_trajectory** out)
{
    return guarded([&] {
        require(sim, "sim");
        require(out, "out");
        gpcal::Trajectory t;
        for (std::size_t k = 0; k < sim->value.event_times.size(); ++k)
            t.push_back({ sim->value.event_times[k], sim->value.sensor_poses[k] });
        *out = new gpcal_trajectory{ std::move(t) };
    });
}

void gpcal_simulation_free(gpcal_simulation* sim) { delete sim; }

gpcal_status gpcal_dataset_load(const char* path, gpcal_dataset** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new gpcal_dataset{ gpcal::load_dataset(path) };
    });
}

gpcal_status gpcal_dataset_save(const gpcal_dataset* dataset, const char* path)
{
    return guarded([&] {
        require(dataset, "dataset");
        require(path, "path");
        write_file(path, [&](std::ostream& os) { gpcal::write_dataset(os, dataset->value); });
    });
}

gpcal_status gpcal_dataset_size(const gpcal_dataset* dataset, size_t* rows, size_t* tick_dim)
{
    return guarded([&] {
        require(dataset, "dataset");
        if (rows)
            *rows = dataset->value.size();
        if (tick_dim)
            *tick_dim = dataset->value.empty() ? 0 : static_cast<size_t>(dataset->value.front().ticks.size());
    });
}

void gpcal_dataset_free(gpcal_dataset* dataset) { delete dataset; }

gpcal_status gpcal_model_train(const gpcal_config* config, const gpcal_dataset* training,
                               gpcal_model** out)
{
    return guarded([&] {
        require(config, "config");
        require(training, "training");
        require(out, "out");
        *out = new gpcal_model{ gpcal::train(training->value, config->value.calibration) };
    });
}

gpcal_status gpcal_model_save(const gpcal_model* model, const char* path)
{
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        gpcal::save_model(path, model->value);
    });
}

gpcal_status gpcal_model_load(const char* path, gpcal_model** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new gpcal_model{ gpcal::load_model(path) };
    });
}

gpcal_status gpcal_model_kind(const gpcal_model* model, const char** out)
{
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = gpcal::to_string(model->value.kind()).data();
    });
}

gpcal_status gpcal_model_tick_dim(const gpcal_model* model, size_t* out)
{
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = static_cast<size_t>(model->value.tick_dim());
    });
}

gpcal_status gpcal_model_report(const gpcal_model* model, const gpcal_dataset* training, char* buf,
                                size_t capacity, size_t* needed)
{
    return guarded([&] {
        require(model, "model");
        require(training, "training");
        const std::string report = gpcal::fit_report(model->value, training->value);
        if (needed)
            *needed = report.size() + 1;
        if (buf && capacity > 0) {
            const size_t n = std::min(capacity - 1, report.size());
            std::memcpy(buf, report.data(), n);
            buf[n] = '\0';
        }
    });
}

gpcal_status gpcal_model_predict(const gpcal_model* model, const double* ticks, size_t tick_dim,
                                 double* mean, double* cov)
{
    return guarded([&] {
        require(model, "model");
        require(ticks, "ticks");
        require(mean, "mean");
        const gpcal::TickVector d =
            Eigen::Map<const Eigen::VectorXd>(ticks, static_cast<Eigen::Index>(tick_dim));
        const auto p = gpcal::predict_displacement(model->value, d, cov != nullptr);
        mean[0] = p.mean.x();
        mean[1] = p.mean.y();
        mean[2] = p.mean.theta();
        if (cov)
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    cov[3 * r + c] = p.cov(r, c);
    });
}

void gpcal_model_free(gpcal_model* model) { delete model; }

gpcal_status gpcal_trajectory_load(const char* path, gpcal_trajectory** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new gpcal_trajectory{ gpcal::load_trajectory(path) };
    });
}

gpcal_status gpcal_trajectory_size(const gpcal_trajectory* trajectory, size_t* out)
{
    return guarded([&] {
        require(trajectory, "trajectory");
        require(out, "out");
        *out = trajectory->value.size();
    });
}

void gpcal_trajectory_free(gpcal_trajectory* trajectory) { delete trajectory; }

gpcal_status gpcal_evaluate(const gpcal_model* model, const gpcal_dataset* test,
                            const gpcal_trajectory* truth, gpcal_evaluation** out)
{
    return guarded([&] {
        require(model, "model");
        require(test, "test");
        require(out, "out");
        *out = new gpcal_evaluation{ gpcal::evaluate_run(model->value, test->value,
                                                         truth ? &truth->value : nullptr) };
    });
}

gpcal_status gpcal_evaluation_write(const gpcal_evaluation* eval, const char* out_dir)
{
    return guarded([&] {
        require(eval, "eval");
        require(out_dir, "out_dir");
        const std::filesystem::path dir(out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw gpcal::IoError("cannot create directory " + dir.string());
        const auto& v = eval->value;
        write_file(dir / "predicted_trajectory.csv",
                   [&](std::ostream& os) { gpcal::write_trajectory(os, v.predicted); });
        if (!v.reference.empty())
            write_file(dir / "reference_trajectory.csv",
                       [&](std::ostream& os) { gpcal::write_trajectory(os, v.reference); });
        if (v.metrics) {
            write_file(dir / "metrics.txt",
                       [&](std::ostream& os) { gpcal::write_metrics_text(os, *v.metrics); });
            write_file(dir / "metrics.csv",
                       [&](std::ostream& os) { gpcal::write_metrics_csv(os, *v.metrics); });
        }
    });
}

gpcal_status gpcal_evaluation_metrics(const gpcal_evaluation* eval, gpcal_metrics* out,
                                      int* has_metrics)
{
    return guarded([&] {
        require(eval, "eval");
        require(has_metrics, "has_metrics");
        *has_metrics = eval->value.metrics.has_value() ? 1 : 0;
        if (out && eval->value.metrics)
            *out = to_c(*eval->value.metrics);
    });
}

void gpcal_evaluation_free(gpcal_evaluation* eval) { delete eval; }

gpcal_status gpcal_metrics_compute(const gpcal_trajectory* estimated,
                                   const gpcal_trajectory* reference, double tolerance,
                                   gpcal_metrics* out)
{
    return guarded([&] {
        require(estimated, "estimated");
        require(reference, "reference");
        require(out, "out");
        const auto& ref = reference->value;
        double tol = tolerance;
        if (!(tol > 0.0)) {
            if (ref.size() < 2)
                throw gpcal::InsufficientDataError("reference trajectory needs at least 2 poses");
            std::vector<double> gaps;
            for (std::size_t k = 1; k < ref.size(); ++k)
                gaps.push_back(ref[k].t - ref[k - 1].t);
            std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                             gaps.end());
            tol = 0.5 * gaps[gaps.size() / 2];
        }
        const auto pair = gpcal::align(estimated->value, ref, tol);
        *out = to_c(gpcal::compute_metrics(pair));
    });
}

gpcal_status gpcal_metrics_write(const gpcal_metrics* metrics, const char* text_path,
                                 const char* csv_path)
{
    return guarded([&] {
        require(metrics, "metrics");
        const auto r = from_c(*metrics);
        if (text_path)
            write_file(text_path, [&](std::ostream& os) { gpcal::write_metrics_text(os, r); });
        if (csv_path)
            write_file(csv_path, [&](std::ostream& os) { gpcal::write_metrics_csv(os, r); });
    });
}

} // extern "C"
