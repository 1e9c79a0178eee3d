#include "dae/bench.hpp"
#include "dae/synthetic.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace dae;
using namespace dae::bench;

namespace
{
constexpr double kDegree = std::numbers::pi / 180;
namespace fs = std::filesystem;

std::vector<Mat3> gyro_only(const Recording& r)
{
        std::vector<Mat3> out{r.gt.front()};
        FilterState<double> s{r.gt.front(), r.samples.front().t};
        for (std::size_t k = 1; k < r.samples.size(); ++k)
        {
                s.attitude = propagate_gyro(s, r.samples[k]);
                s.t_prev = r.samples[k].t;
                out.push_back(s.attitude);
        }
        return out;
}

std::vector<Mat3> euler_sequence(const std::vector<EulerAngles<double>>& angles)
{
        std::vector<Mat3> out;
        for (const auto& a : angles)
        {
                out.push_back(from_euler(a));
        }
        return out;
}

std::string slurp(const fs::path& p)
{
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
}

fs::path scratch_dir(const std::string& name)
{
        const fs::path dir = fs::temp_directory_path() / ("dae_bench_test_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
}

int run(const std::string& args)
{
        const std::string cmd = std::string(DAE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}

TEST_CASE("load_recording")
{
        const std::string text = std::string(kCsvHeader) + "\n"
                                 "0.000,0.01,-0.02,0.03,0.1,0.2,-9.8,1,0,0,0\n"
                                 "0.005,0.0100000000000000002,-0.5,1e-3,0.3,-0.1,-9.79,1,0,0,0\n"
                                 "0.010,0.7,0.8,0.9,-0.2,0.25,-9.81,0.7071067811865476,0.7071067811865476,0,0\n";
        const Recording r = parse_recording(text, "fixture", Placement::pocket);
        REQUIRE(r.samples.size() == 3);
        CHECK(r.samples[0].t == 0.0);
        CHECK(r.samples[1].t == std::strtod("0.005", nullptr));
        CHECK(r.samples[1].gyro.x() == std::strtod("0.0100000000000000002", nullptr));
        CHECK(r.samples[1].gyro.z() == 1e-3);
        CHECK(r.samples[2].acc == Vec3(-0.2, 0.25, -9.81));
        CHECK(r.gt[0] == Mat3::Identity());
        CHECK((r.gt[2] - oracle::rot_x(std::numbers::pi / 2)).norm() < 1e-15);
        CHECK(r.placement == Placement::pocket);

        const std::string bad = std::string(kCsvHeader) + "\n"
                                "0.000,0,0,0,0,0,-9.8,1,0,0,0\n"
                                "0.005,0,0,0,0,0,-9.8,1,0,0,0\n"
                                "0.004,0,0,0,0,0,-9.8,1,0,0,0\n";
        try
        {
                (void)parse_recording(bad, "bad", Placement::pocket);
                FAIL("expected ParseError");
        }
        catch (const Error& e)
        {
                CHECK(e.kind() == ErrorKind::parse_error);
                CHECK(std::string(e.what()).find("bad:4:") != std::string::npos);
        }

        CHECK_THROWS_AS((void)parse_recording(std::string(kCsvHeader) + "\n0,1,2\n", "short", Placement::bag), Error);

        const fs::path dir = scratch_dir("load");
        const Recording walk = generate_synthetic(profile_by_name("walking"), 2, 200, 3);
        save_recording(walk, dir / "texting" / "w.csv");
        const Recording back = load_recording(dir / "texting" / "w.csv");
        CHECK(back.placement == Placement::texting);
        REQUIRE(back.samples.size() == walk.samples.size());
        for (std::size_t k = 0; k < walk.samples.size(); ++k)
        {
                REQUIRE(back.samples[k].t == walk.samples[k].t);
                REQUIRE(back.samples[k].gyro == walk.samples[k].gyro);
                REQUIRE(back.samples[k].acc == walk.samples[k].acc);
                REQUIRE((back.gt[k] - walk.gt[k]).norm() < 1e-14);
        }
        CHECK(load_recordings(dir).size() == 1);
        CHECK(load_recordings(dir, Placement::bag).empty());
}

TEST_CASE("generate_synthetic")
{
        const Recording clean = generate_synthetic(profile_by_name("clean"), 60, 200, 7);
        REQUIRE(clean.samples.size() == 12001);
        const std::vector<Mat3> integrated = gyro_only(clean);
        double worst = 0;
        for (std::size_t k = 0; k < integrated.size(); ++k)
        {
                worst = std::max(worst, rotation_angle(integrated[k], clean.gt[k]));
        }
        INFO("worst gyro-only drift ", worst / kDegree, " deg");
        CHECK(worst < 0.05 * kDegree);

        const Recording rest = generate_synthetic(profile_by_name("stationary"), 10, 200, 2);
        for (std::size_t k = 0; k < rest.samples.size(); ++k)
        {
                const Vec3 expected = -kStandardGravity * (rest.gt[k].transpose() * Vec3::UnitZ());
                REQUIRE((rest.samples[k].acc - expected).norm() < 1e-12);
                REQUIRE(rest.gt[k] == rest.gt.front());
        }

        const Recording a = generate_synthetic(profile_by_name("walking"), 10, 200, 4);
        const Recording b = generate_synthetic(profile_by_name("walking"), 10, 200, 4);
        const Recording c = generate_synthetic(profile_by_name("walking"), 10, 200, 5);
        bool same = true;
        for (std::size_t k = 0; k < a.samples.size(); ++k)
        {
                same = same && a.samples[k].gyro == b.samples[k].gyro && a.samples[k].acc == b.samples[k].acc
                       && a.gt[k] == b.gt[k];
        }
        CHECK(same);
        CHECK(a.samples[10].acc != c.samples[10].acc);

        const auto mean_residual = [](const Recording& r) {
                double sum = 0;
                for (std::size_t k = 0; k < r.samples.size(); ++k)
                {
                        const Vec3 predicted = predict_gravity(r.gt[k], gravity_ref<double>());
                        sum += compute_residual(gravity_direction(r.samples[k].acc), predicted).norm();
                }
                return sum / static_cast<double>(r.samples.size());
        };
        const double walking = mean_residual(generate_synthetic(profile_by_name("walking"), 30, 200, 6));
        const double stationary = mean_residual(generate_synthetic(profile_by_name("stationary"), 30, 200, 6));
        INFO("walking ", walking, " stationary ", stationary);
        CHECK(walking > 100 * stationary);

        CHECK_THROWS_AS((void)generate_synthetic(profile_by_name("walking"), 0, 200, 1), Error);
        CHECK_THROWS_AS((void)profile_by_name("running"), Error);
}

TEST_CASE("baselines reduce to gyro-only integration")
{
        const Recording r = generate_synthetic(profile_by_name("walking"), 20, 200, 9);
        const std::vector<Mat3> oracle = gyro_only(r);

        const std::vector<Mat3> cf = run_filter({Algorithm::fixed_gain_cf, 0.0, 0.0, nullptr}, r);
        REQUIRE(cf.size() == r.samples.size());
        bool identical = true;
        for (std::size_t k = 0; k < cf.size(); ++k)
        {
                identical = identical && cf[k] == oracle[k];
        }
        CHECK(identical);

        // the quaternion filters integrate the same rates on a different chart
        for (const Algorithm a : {Algorithm::madgwick, Algorithm::mahony})
        {
                const std::vector<Mat3> q = run_filter({a, 0.0, 0.0, nullptr}, r);
                double worst = 0;
                for (std::size_t k = 0; k < q.size(); ++k)
                {
                        worst = std::max(worst, rotation_angle(q[k], oracle[k]));
                }
                INFO(to_string(a), " worst ", worst / kDegree, " deg");
                CHECK(worst < 1e-3 * kDegree);
        }

        // Madgwick with beta = 0 against an independent quaternion loop
        Eigen::Quaterniond q(r.gt.front());
        const std::vector<Mat3> madgwick = run_filter({Algorithm::madgwick, 0.0, 0.0, nullptr}, r);
        double worst = 0;
        for (std::size_t k = 1; k < r.samples.size(); ++k)
        {
                const double dt = r.samples[k].t - r.samples[k - 1].t;
                const Vec3& w = r.samples[k].gyro;
                const Eigen::Quaterniond dq = q * Eigen::Quaterniond(0, w.x(), w.y(), w.z());
                q.coeffs() = (q.coeffs() + 0.5 * dq.coeffs() * dt).normalized();
                worst = std::max(worst, (q.toRotationMatrix() - madgwick[k]).norm());
        }
        CHECK(worst < 1e-12);
}

TEST_CASE("dae with constant gains equals the fixed-gain filter")
{
        const Recording r = generate_synthetic(profile_by_name("walking"), 10, 200, 10);
        auto params = std::make_shared<net::GainNetParams>(net::zero_params());
        for (net::AxisNet& axis : params->axes)
        {
                axis.layers[net::kLayers - 1].bias(0) = 0.3;
        }
        const double k = net::soft_threshold(0.3);
        const std::vector<Mat3> dae = run_filter({Algorithm::dae, 0.0, 0.0, params}, r);
        const std::vector<Mat3> cf = run_filter({Algorithm::fixed_gain_cf, k, 0.0, nullptr}, r);
        bool identical = true;
        for (std::size_t i = 0; i < dae.size(); ++i)
        {
                identical = identical && dae[i] == cf[i];
        }
        CHECK(identical);

        CHECK_THROWS_AS((void)run_filter({Algorithm::dae, 0.0, 0.0, nullptr}, r), Error);
        CHECK_THROWS_AS((void)run_filter({Algorithm::fixed_gain_cf, 1.5, 0.0, nullptr}, r), Error);
}

TEST_CASE("metrics")
{
        std::vector<EulerAngles<double>> truth;
        for (int k = 0; k < 50; ++k)
        {
                truth.push_back({0.01 * k, -0.005 * k, 0.02 * k});
        }
        const std::vector<Mat3> gt = euler_sequence(truth);

        const MetricsRow zero = compute_metrics(gt, gt);
        CHECK(zero.e_deg == 0);

        std::vector<EulerAngles<double>> shifted = truth;
        for (auto& a : shifted)
        {
                a.roll += 3 * kDegree;
                a.pitch += 4 * kDegree;
        }
        const MetricsRow m345 = compute_metrics(euler_sequence(shifted), gt);
        CHECK(m345.e_roll_deg == doctest::Approx(3).epsilon(1e-9));
        CHECK(m345.e_pitch_deg == doctest::Approx(4).epsilon(1e-9));
        CHECK(m345.e_deg == doctest::Approx(5).epsilon(1e-9));

        std::vector<EulerAngles<double>> alternating = truth;
        for (std::size_t k = 0; k < alternating.size(); ++k)
        {
                alternating[k].roll += (k % 2 == 0 ? 1 : -1) * kDegree;
        }
        const MetricsRow pm = compute_metrics(euler_sequence(alternating), gt);
        CHECK(pm.e_roll_deg == doctest::Approx(1).epsilon(1e-9));
        CHECK(pm.e_pitch_deg == doctest::Approx(0).epsilon(1e-9));
        CHECK(pm.e_deg == doctest::Approx(1).epsilon(1e-9));

        CHECK(wrap_degrees(359) == doctest::Approx(-1).epsilon(1e-12));
        CHECK(wrap_degrees(-1) == -1);
        CHECK(wrap_degrees(-180) == 180);
        CHECK(wrap_degrees(180) == 180);
        CHECK(wrap_degrees(540) == 180);

        // truth near +180 roll, estimate just past -180
        const std::vector<Mat3> across{from_euler<double>({179.5 * kDegree, 0, 0})};
        const std::vector<Mat3> near{from_euler<double>({-179.5 * kDegree, 0, 0})};
        CHECK(compute_metrics(near, across).e_roll_deg == doctest::Approx(1).epsilon(1e-9));

        ErrorTrace trace;
        trace.t = {0, 1};
        trace.roll_err_deg = {wrap_degrees(359), wrap_degrees(-1)};
        trace.pitch_err_deg = {0, 0};
        CHECK(compute_metrics(trace).e_roll_deg == doctest::Approx(1).epsilon(1e-12));

        CHECK_THROWS_AS((void)compute_metrics(gt, std::vector<Mat3>(3, Mat3::Identity())), Error);
}

TEST_CASE("tune_baseline")
{
        const std::vector<Recording> rest{generate_synthetic(profile_by_name("stationary"), 10, 200, 1),
                                          generate_synthetic(profile_by_name("stationary"), 10, 200, 2)};
        const TuneResult single = tune_baseline(Algorithm::fixed_gain_cf, {0.02}, rest);
        CHECK(single.config.gain == 0.02);

        const TuneResult three = tune_baseline(Algorithm::fixed_gain_cf, {0.5, 0, 0.01}, rest);
        CHECK(three.config.gain == 0.5);
        REQUIRE(three.grid == std::vector<double>{0, 0.01, 0.5});
        for (std::size_t i = 0; i < three.grid.size(); ++i)
        {
                double total = 0;
                for (const Recording& r : rest)
                {
                        total += attitude_loss(run_filter({Algorithm::fixed_gain_cf, three.grid[i], 0.0, nullptr}, r), r);
                }
                CHECK(three.losses[i] == total / 2);
                CHECK(three.losses[three.best_index] <= three.losses[i]);
        }

        // a level, noise-free recording scores every gain the same
        Recording flat;
        flat.id = "flat";
        for (int k = 0; k < 400; ++k)
        {
                flat.samples.push_back({k / 200.0, Vec3::Zero(), Vec3(0, 0, -kStandardGravity)});
                flat.gt.push_back(Mat3::Identity());
        }
        CHECK(tune_baseline(Algorithm::fixed_gain_cf, {0.3, 0.1, 0.2}, {flat}).config.gain == 0.1);
        CHECK(tune_baseline(Algorithm::madgwick, {0.3, 0.1}, {flat}).config.gain == 0.1);

        CHECK_THROWS_AS((void)tune_baseline(Algorithm::fixed_gain_cf, {}, rest), Error);
        CHECK_THROWS_AS((void)tune_baseline(Algorithm::dae, {0.1}, rest), Error);
        CHECK_THROWS_AS((void)tune_baseline(Algorithm::madgwick, {-1}, rest), Error);

        const std::vector<double> grid = log_grid(0.1, 10, 20);
        CHECK(grid.size() == 20);
        CHECK(grid.front() == 0.1);
        CHECK(grid.back() == 10);
        CHECK(default_grid(Algorithm::fixed_gain_cf).front() == 0);
}

TEST_CASE("compare report layout and test-set isolation")
{
        std::vector<Recording> train;
        std::vector<Recording> test;
        for (int s = 0; s < 2; ++s)
        {
                Recording a = generate_synthetic(profile_by_name("walking"), 4, 200, 20 + s);
                a.placement = Placement::pocket;
                train.push_back(a);
                Recording b = generate_synthetic(profile_by_name("walking"), 4, 200, 30 + s);
                b.placement = s == 0 ? Placement::pocket : Placement::bag;
                b.id = "test_" + std::to_string(s);
                test.push_back(b);
                Recording c = generate_synthetic(profile_by_name("walking"), 4, 200, 40 + s);
                c.placement = Placement::bag;
                train.push_back(c);
        }

        CompareOptions options;
        options.algorithms = {Algorithm::fixed_gain_cf, Algorithm::madgwick, Algorithm::mahony, Algorithm::dae};
        options.grids[Algorithm::madgwick] = {0.01, 0.1};
        options.grids[Algorithm::mahony] = {0.5, 1};
        options.dae_training.segment_length = 200;
        options.dae_training.epochs = 1;
        options.dae_training.learning_rate = 0.1;
        const CompareResult result = compare(options, train, test);

        // per algorithm: 2 recordings, 2 placements, 1 average
        REQUIRE(result.rows.size() == 4 * 5);
        CHECK(result.traces.size() == 4 * 2);
        CHECK(result.traces.count("madgwick/test_1") == 1);
        for (const ReportRow& row : result.rows)
        {
                CHECK(std::abs(row.metrics.e_deg - std::hypot(row.metrics.e_roll_deg, row.metrics.e_pitch_deg)) <= 1e-12);
        }
        CHECK(result.rows[4].placement == "average");
        CHECK(result.rows[4].recording == "all");

        std::ostringstream csv;
        write_report(result.rows, csv);
        CHECK(csv.str().rfind(std::string(kReportHeader) + "\n", 0) == 0);

        const CountedRecordings counted(test);
        CHECK(counted.reads(0) == 0);
        (void)counted.read(0);
        (void)counted.placement(1);
        CHECK(counted.reads(0) == 1);
        CHECK(counted.reads(1) == 0);
}

TEST_CASE("command line")
{
        const fs::path dir = scratch_dir("cli");
        for (const int seed : {1, 2})
        {
                REQUIRE(run("synth --profile walking --duration 4 --seed " + std::to_string(seed) + " --out "
                            + (dir / "train" / ("w" + std::to_string(seed) + ".csv")).string())
                        == 0);
        }
        REQUIRE(run("synth --profile walking --duration 4 --seed 3 --out " + (dir / "test" / "w3.csv").string()) == 0);

        const std::string compare_args = "compare --algorithms fixed-gain-cf,madgwick,dae --segment-length 200 --epochs 1 --train-dir "
                                         + (dir / "train").string() + " --test-dir " + (dir / "test").string();
        REQUIRE(run(compare_args + " --report " + (dir / "a.csv").string()) == 0);
        REQUIRE(run(compare_args + " --report " + (dir / "b.csv").string()) == 0);
        CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
        CHECK(slurp(dir / "a_traces" / "dae" / "w3.csv") == slurp(dir / "b_traces" / "dae" / "w3.csv"));

        REQUIRE(run("train --epochs 1 --segment-length 200 --data-dir " + (dir / "train").string() + " --out-params "
                    + (dir / "p.bin").string())
                == 0);
        CHECK(run("eval --params " + (dir / "p.bin").string() + " --data-dir " + (dir / "test").string()) == 0);
        CHECK(run("tune --algorithm mahony --grid 0.5,1,2 --data-dir " + (dir / "train").string()) == 0);

        CHECK(run("frobnicate") == 2);
        CHECK(run("train --data-dir " + (dir / "missing").string() + " --out-params x.bin") == 2);
        CHECK(run("tune --algorithm dae --data-dir " + (dir / "train").string()) == 2);
        CHECK(run("synth --profile running --out " + (dir / "r.csv").string()) == 2);

        net::GainNetParams broken = net::zero_params();
        broken.axes[0].layers[0].bias(0) = std::numeric_limits<double>::quiet_NaN();
        net::save_params(broken, dir / "nan.bin");
        CHECK(run("eval --params " + (dir / "nan.bin").string() + " --data-dir " + (dir / "test").string()) == 3);
}
