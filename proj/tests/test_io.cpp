#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gpcal/config.hpp"
#include "gpcal/csv_io.hpp"
#include "gpcal/errors.hpp"
#include "gpcal/model_store.hpp"
#include "gpcal/simulator.hpp"
#include "test_support.hpp"

using namespace gpcal;

namespace {

std::string dataset_text(const Dataset& d)
{
    std::ostringstream os;
    write_dataset(os, d);
    return os.str();
}

template <typename Fn>
std::string error_of(Fn&& fn)
{
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

Dataset small_sim(DriveKind kind = DriveKind::DiffDrive)
{
    SimConfig c = default_sim_config(kind);
    c.duration = kind == DriveKind::DiffDrive ? 15.0 : 30.0;
    c.noise_sigma = Eigen::Vector3d(0.002, 0.002, 0.0035);
    c.sensor_pose = Pose2D(0.1, 0.0, 0.3);
    return simulate(c).dataset;
}

} // namespace

TEST(FormatNumber, ShortestRoundTrip)
{
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(-3.0), "-3");
    EXPECT_EQ(format_number(1e-300), "1e-300");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(DatasetCsv, RoundTripByteIdentical)
{
    const Dataset d = small_sim();
    const std::string a = dataset_text(d);
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "t_j,t_k,tick_1,tick_2,sx,sy,stheta,cov_00,cov_01,cov_02,cov_10,cov_11,cov_12,cov_20,cov_21,cov_22");
    std::istringstream is(a);
    const Dataset back = read_dataset(is);
    ASSERT_EQ(back.size(), d.size());
    EXPECT_EQ(back[7].s_hat, d[7].s_hat);
    EXPECT_EQ(back[7].ticks, d[7].ticks);
    EXPECT_EQ(dataset_text(back), a);
}

TEST(DatasetCsv, Mecanum)
{
    const Dataset d = small_sim(DriveKind::Mecanum);
    std::istringstream is(dataset_text(d));
    EXPECT_EQ(read_dataset(is).front().ticks.size(), 4);
}

TEST(DatasetCsv, ErrorsNameTheRow)
{
    Dataset d = small_sim();
    std::string text = dataset_text(d);
    // third data row (line 4): negate cov_00
    std::vector<std::string> lines;
    std::istringstream split(text);
    for (std::string l; std::getline(split, l);)
        lines.push_back(l);
    const auto pos = lines[3].find(",4e-06,");
    ASSERT_NE(pos, std::string::npos);
    lines[3].replace(pos, 7, ",-4e-06,");
    std::string bad;
    for (const auto& l : lines)
        bad += l + "\n";
    std::istringstream is(bad);
    const std::string err = error_of([&] { read_dataset(is, "train.csv"); });
    EXPECT_NE(err.find("train.csv:4:"), std::string::npos) << err;
    EXPECT_NE(err.find("negative variance"), std::string::npos) << err;

    std::istringstream short_row("t_j,t_k,tick_1,tick_2,sx,sy,stheta,cov_00,cov_01,cov_02,cov_10,cov_11,cov_12,cov_20,cov_21,cov_22\n0,0.3,1\n");
    EXPECT_NE(error_of([&] { read_dataset(short_row); }).find(":2:"), std::string::npos);
    std::istringstream header("a,b,c\n");
    EXPECT_THROW(read_dataset(header), ValidationError);
    std::istringstream word("t_j,t_k,tick_1,sx,sy,stheta,cov_00,cov_01,cov_02,cov_10,cov_11,cov_12,cov_20,cov_21,cov_22\n0,0.3,x,0,0,0,1,0,0,0,1,0,0,0,1\n");
    EXPECT_THROW(read_dataset(word), ValidationError);
}

TEST(OdometryCsv, RoundTrip)
{
    const auto sim = simulate(default_sim_config(DriveKind::DiffDrive));
    std::ostringstream os;
    write_odometry(os, sim.odometry);
    std::istringstream is(os.str());
    const auto back = read_odometry(is);
    ASSERT_EQ(back.size(), sim.odometry.size());
    EXPECT_EQ(back[33].t, sim.odometry[33].t);
    EXPECT_EQ(back[33].counters, sim.odometry[33].counters);
    std::ostringstream again;
    write_odometry(again, back);
    EXPECT_EQ(again.str(), os.str());
}

TEST(TrajectoryCsv, TruthFileYieldsSensorTrajectory)
{
    SimConfig c = default_sim_config(DriveKind::DiffDrive);
    c.sensor_pose = Pose2D(0.1, 0.05, 0.3);
    const auto sim = simulate(c);
    std::ostringstream os;
    write_truth(os, sim);
    std::istringstream is(os.str());
    const Trajectory t = read_trajectory(is);
    ASSERT_EQ(t.size(), sim.sensor_poses.size());
    EXPECT_EQ(t[17].pose, sim.sensor_poses[17]);

    std::ostringstream plain;
    write_trajectory(plain, t);
    std::istringstream pis(plain.str());
    const Trajectory back = read_trajectory(pis);
    std::ostringstream again;
    write_trajectory(again, back);
    EXPECT_EQ(again.str(), plain.str());

    std::istringstream unsorted("t,x,y,theta\n1,0,0,0\n0.5,0,0,0\n");
    EXPECT_NE(error_of([&] { read_trajectory(unsorted); }).find("strictly increasing"), std::string::npos);
}

TEST(MetricsFiles, UnitsAndFields)
{
    MetricsReport r;
    r.poses = 200;
    r.ate_m = 0.05;
    r.rpe_m = 0.0025;
    std::ostringstream txt, csv;
    write_metrics_text(txt, r);
    write_metrics_csv(csv, r);
    EXPECT_NE(txt.str().find("ate_m = 0.05"), std::string::npos) << txt.str();
    const auto at = txt.str().find("rpe_mm = ");
    ASSERT_NE(at, std::string::npos);
    EXPECT_NEAR(std::stod(txt.str().substr(at + 9)), 2.5, 1e-12);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "poses,ate_m,rpe_mm,ate_rot_rad,rpe_rot_rad");
}

TEST(Config, ParsesAllSections)
{
    const Config c = parse_config(R"(# comment
[simulation]
drive = mecanum
wheel_radius = 0.03
half_length = 0.08
half_width = 0.1
ticks_per_rev = 4096
scale = 1.0, 1.0, 1.02, 1.0
tilt_deg = 0 0 10 0
ripple = 0.0
sensor_pose = 0.1 0.0 0.2
interval = 0.6
duration = 300
profile = scripted
script = 5 0.2 0 0; 3 0 0.1 0.2
noise_sigma = 0.002 0.002 0.0035
seed = 9

[calibration]
model = cgp_lin_sum
huber_c = 2.0
edge_stride = 2
seed = 4
restarts = 3
max_iterations = 40
max_fit_points = 200

[evaluation]
output_dir = out
)");
    EXPECT_EQ(c.simulation.drive.kind, DriveKind::Mecanum);
    EXPECT_EQ(c.simulation.drive.wheel_count(), 4);
    EXPECT_EQ(c.simulation.deform.tilt_deg(2), 10.0);
    EXPECT_EQ(c.simulation.deform.per_wheel_scale(2), 1.02);
    EXPECT_EQ(c.simulation.sensor_pose, Pose2D(0.1, 0.0, 0.2));
    EXPECT_EQ(c.simulation.profile, CommandProfile::Scripted);
    ASSERT_EQ(c.simulation.script.size(), 2u);
    EXPECT_EQ(c.simulation.script[1].omega, 0.2);
    EXPECT_EQ(c.simulation.seed, 9u);
    EXPECT_EQ(c.calibration.kind, ModelKind::CgpLinSum);
    EXPECT_EQ(c.calibration.edge_stride, 2);
    EXPECT_EQ(c.calibration.fit.seed, 4u);
    EXPECT_EQ(c.calibration.fit.max_points, 200);
    EXPECT_EQ(c.output_dir, "out");
}

TEST(Config, DefaultsAndSeedOverride)
{
    Config c = parse_config("");
    EXPECT_EQ(c.simulation.drive.kind, DriveKind::DiffDrive);
    EXPECT_EQ(c.calibration.kind, ModelKind::LinearHuber);
    override_seed(c, 77);
    EXPECT_EQ(c.simulation.seed, 77u);
    EXPECT_EQ(c.calibration.fit.seed, 77u);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    EXPECT_NE(error_of([] { parse_config("[simulation]\nfoo = 1\n", "a.ini"); }).find("a.ini:2: unknown key"),
              std::string::npos);
    EXPECT_NE(error_of([] { parse_config("[bogus]\n", "a.ini"); }).find("a.ini:1:"), std::string::npos);
    EXPECT_NE(error_of([] { parse_config("[simulation]\nduration = 0.1\n", "a.ini"); })
                  .find("a.ini:2: duration shorter than interval"),
              std::string::npos);
    EXPECT_NE(error_of([] { parse_config("[simulation]\nscale = 1 2 3\n"); }).find("expected 1 or 2 values"),
              std::string::npos);
    EXPECT_NE(error_of([] { parse_config("[calibration]\nmodel = gp\n"); }).find(":2:"), std::string::npos);
    EXPECT_NE(error_of([] { parse_config("[simulation]\nseed = 1\nseed = 2\n"); }).find("duplicate"),
              std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/x.ini"), IoError);
}

TEST(ModelStore, LinearRoundTrip)
{
    const Dataset d = small_sim();
    RunSpec spec;
    const CalibrationRun run = train(d, spec);
    const std::string text = serialize_model(run);
    EXPECT_NE(text.find("model_kind = linear_huber"), std::string::npos);
    EXPECT_NE(text.find("W.2 = "), std::string::npos);
    const CalibrationRun back = deserialize_model(text);
    EXPECT_EQ(serialize_model(back), text);
    EXPECT_EQ(predict_displacement(back, d[3].ticks).mean, predict_displacement(run, d[3].ticks).mean);
}

TEST(ModelStore, GpRoundTripAllKinds)
{
    const Dataset d = small_sim();
    for (auto kind : { ModelKind::CgpZeroRbf, ModelKind::CgpLinRbf, ModelKind::CgpZeroLin,
                       ModelKind::CgpZeroSum, ModelKind::CgpLinSum }) {
        RunSpec spec;
        spec.kind = kind;
        spec.fit.restarts = 1;
        spec.fit.max_iterations = 10;
        const CalibrationRun run = train(d, spec);
        const std::string text = serialize_model(run);
        const CalibrationRun back = deserialize_model(text);
        EXPECT_EQ(serialize_model(back), text) << to_string(kind);
        const auto a = predict_displacement(run, d[5].ticks);
        const auto b = predict_displacement(back, d[5].ticks);
        EXPECT_NEAR(a.mean.x(), b.mean.x(), 1e-12);
        EXPECT_NEAR(a.mean.theta(), b.mean.theta(), 1e-12);
        EXPECT_TRUE(a.cov.isApprox(b.cov, 1e-9)) << to_string(kind);
    }
}

TEST(ModelStore, ReportContents)
{
    const Dataset d = small_sim();
    RunSpec spec;
    spec.kind = ModelKind::CgpLinRbf;
    spec.fit.restarts = 1;
    spec.fit.max_iterations = 10;
    const std::string report = fit_report(train(d, spec), d);
    for (const char* key : { "sigma.0", "sigma.2", "B_diag.1", "log_marginal_likelihood", "wall_time_s" })
        EXPECT_NE(report.find(key), std::string::npos) << key;
    spec.kind = ModelKind::LinearHuber;
    const std::string lin = fit_report(train(d, spec), d);
    EXPECT_NE(lin.find("huber_objective"), std::string::npos);
}

TEST(ModelStore, RejectsCorruptFiles)
{
    EXPECT_THROW(deserialize_model("format = other\n"), ValidationError);
    const Dataset d = small_sim();
    std::string text = serialize_model(train(d, RunSpec{}));
    text.replace(text.find("format_version = 1"), 18, "format_version = 9");
    EXPECT_NE(error_of([&] { deserialize_model(text); }).find("format_version"), std::string::npos);
    EXPECT_THROW(load_model("/nonexistent/model.txt"), IoError);
}

TEST(Files, SaveAndLoad)
{
    const auto dir = std::filesystem::temp_directory_path() / "gpcal_io_test";
    std::filesystem::create_directories(dir);
    const Dataset d = small_sim();
    save_text(dir / "d.csv", dataset_text(d));
    EXPECT_EQ(dataset_text(load_dataset(dir / "d.csv")), dataset_text(d));
    save_model(dir / "m.txt", train(d, RunSpec{}));
    EXPECT_EQ(load_model(dir / "m.txt").kind(), ModelKind::LinearHuber);
    EXPECT_THROW(load_text(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
}
