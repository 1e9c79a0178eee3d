// Command-line entry point: train, eval, compare, synth and tune.

#include "dae/bench.hpp"
#include "dae/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace
{
using namespace dae;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::optional<Placement> placement_option(const std::string& name)
{
        if (name.empty())
        {
                return std::nullopt;
        }
        if (const auto p = parse_placement(name))
        {
                return p;
        }
        throw Error(ErrorKind::invalid_argument, "unknown placement '" + name + "'");
}

std::vector<Recording> load_nonempty(const std::string& dir, const std::optional<Placement> placement)
{
        std::vector<Recording> r = load_recordings(dir, placement);
        if (r.empty())
        {
                throw Error(ErrorKind::invalid_argument, "no recordings in " + dir);
        }
        return r;
}

net::InputMode parse_mode(const std::string& s)
{
        if (s == "signed-powers")
        {
                return net::InputMode::signed_powers;
        }
        if (s == "absolute-powers")
        {
                return net::InputMode::absolute_powers;
        }
        if (s == "raw")
        {
                return net::InputMode::raw;
        }
        throw Error(ErrorKind::invalid_argument, "unknown residual mode '" + s + "'");
}

bench::Algorithm parse_algorithm_option(const std::string& s)
{
        if (const auto a = bench::parse_algorithm(s))
        {
                return *a;
        }
        throw Error(ErrorKind::invalid_argument, "unknown algorithm '" + s + "'");
}

struct TrainArgs
{
        std::string data_dir;
        std::string placement;
        std::string out_params;
        std::string residual_mode = "signed-powers";
        bool no_shuffle = false;
        bool no_ic_perturb = false;
        train::TrainConfig config;
};

int run_train(const TrainArgs& a)
{
        train::TrainConfig config = a.config;
        config.shuffle = !a.no_shuffle;
        config.ic_perturb = !a.no_ic_perturb;
        config.residual_mode = parse_mode(a.residual_mode);
        config.validate();

        const auto recordings = load_nonempty(a.data_dir, placement_option(a.placement));
        const std::filesystem::path out(a.out_params);
        std::ofstream history(out.string() + ".history", std::ios::trunc);
        train::write_history({}, history);

        const train::TrainResult result =
                train::train(recordings, config, [&](const train::EpochRecord& rec, const net::GainNetParams& p) {
                        train::write_history_line(rec, history);
                        history.flush();
                        net::save_params(p, out.string() + ".ckpt");
                        std::fprintf(stderr, "epoch %d train %.6f deg val %.6f deg\n", rec.epoch,
                                     rec.train_loss * 180 / std::numbers::pi,
                                     rec.validation_loss * 180 / std::numbers::pi);
                });
        net::save_params(result.params, out);
        std::printf("best epoch %d\n", result.best_epoch);
        return 0;
}

int main_impl(int argc, char** argv)
{
        CLI::App app{"Hybrid attitude estimator with learned accelerometer gains"};
        app.require_subcommand(1);

        TrainArgs ta;
        CLI::App* train_cmd = app.add_subcommand("train", "train the gain network");
        train_cmd->add_option("--data-dir", ta.data_dir, "directory of recording CSVs")->required();
        train_cmd->add_option("--placement", ta.placement, "only recordings of this placement");
        train_cmd->add_option("--segment-length", ta.config.segment_length, "samples per segment")->capture_default_str();
        train_cmd->add_option("--batch-size", ta.config.batch_size)->capture_default_str();
        train_cmd->add_option("--lr", ta.config.learning_rate)->capture_default_str();
        train_cmd->add_option("--ic-error-deg", ta.config.ic_error_max_deg)->capture_default_str();
        train_cmd->add_option("--epochs", ta.config.epochs)->capture_default_str();
        train_cmd->add_option("--seed", ta.config.seed)->capture_default_str();
        train_cmd->add_option("--out-params", ta.out_params)->required();
        train_cmd->add_option("--clip", ta.config.gradient_clip, "max batch gradient norm, 0 disables")->capture_default_str();
        train_cmd->add_flag("--no-shuffle", ta.no_shuffle);
        train_cmd->add_flag("--no-ic-perturb", ta.no_ic_perturb);
        train_cmd->add_option("--residual-mode", ta.residual_mode, "signed-powers, absolute-powers or raw")
                ->capture_default_str();

        std::string eval_params;
        std::string eval_dir;
        std::string eval_placement;
        std::string eval_report;
        CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate trained parameters");
        eval_cmd->add_option("--params", eval_params)->required();
        eval_cmd->add_option("--data-dir", eval_dir)->required();
        eval_cmd->add_option("--placement", eval_placement);
        eval_cmd->add_option("--report", eval_report);

        std::vector<std::string> cmp_algorithms{"fixed-gain-cf", "madgwick", "mahony", "dae"};
        std::string cmp_train;
        std::string cmp_test;
        std::string cmp_report;
        std::string cmp_params;
        train::TrainConfig cmp_training;
        CLI::App* cmp_cmd = app.add_subcommand("compare", "tune on train, score on test");
        cmp_cmd->add_option("--algorithms", cmp_algorithms)->delimiter(',')->capture_default_str();
        cmp_cmd->add_option("--train-dir", cmp_train)->required();
        cmp_cmd->add_option("--test-dir", cmp_test)->required();
        cmp_cmd->add_option("--report", cmp_report)->required();
        cmp_cmd->add_option("--dae-params", cmp_params, "use these parameters instead of training");
        cmp_cmd->add_option("--segment-length", cmp_training.segment_length)->capture_default_str();
        cmp_cmd->add_option("--batch-size", cmp_training.batch_size)->capture_default_str();
        cmp_cmd->add_option("--epochs", cmp_training.epochs)->capture_default_str();
        cmp_cmd->add_option("--lr", cmp_training.learning_rate)->capture_default_str();
        cmp_cmd->add_option("--ic-error-deg", cmp_training.ic_error_max_deg)->capture_default_str();
        cmp_cmd->add_option("--seed", cmp_training.seed)->capture_default_str();
        cmp_cmd->add_option("--clip", cmp_training.gradient_clip, "max batch gradient norm, 0 disables")->capture_default_str();
        bool cmp_no_shuffle = false;
        cmp_cmd->add_flag("--no-shuffle", cmp_no_shuffle);

        std::string synth_profile;
        double synth_duration = 60;
        double synth_rate = 200;
        std::uint64_t synth_seed = 0;
        std::string synth_out;
        CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic recording");
        synth_cmd->add_option("--profile", synth_profile, "stationary, clean, smooth or walking")->required();
        synth_cmd->add_option("--duration", synth_duration)->capture_default_str();
        synth_cmd->add_option("--rate", synth_rate)->capture_default_str();
        synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
        synth_cmd->add_option("--out", synth_out)->required();

        std::string tune_algorithm;
        std::vector<double> tune_grid;
        std::string tune_dir;
        std::string tune_placement;
        CLI::App* tune_cmd = app.add_subcommand("tune", "grid-search a baseline");
        tune_cmd->add_option("--algorithm", tune_algorithm)->required();
        tune_cmd->add_option("--grid", tune_grid, "comma-separated values")->delimiter(',');
        tune_cmd->add_option("--data-dir", tune_dir)->required();
        tune_cmd->add_option("--placement", tune_placement);

        try
        {
                app.parse(argc, argv);
        }
        catch (const CLI::ParseError& e)
        {
                const int code = app.exit(e);
                return code == 0 ? 0 : kExitValidation;
        }

        if (*train_cmd)
        {
                return run_train(ta);
        }
        if (*eval_cmd)
        {
                const auto recordings = load_nonempty(eval_dir, placement_option(eval_placement));
                bench::AlgorithmConfig config{bench::Algorithm::dae, 0.0, 0.0,
                                              std::make_shared<const net::GainNetParams>(net::load_params(eval_params))};
                const bench::CompareResult result = bench::evaluate_report(config, recordings);
                if (eval_report.empty())
                {
                        bench::write_report(result.rows, std::cout);
                }
                else
                {
                        bench::save_report(result, eval_report);
                }
                return 0;
        }
        if (*cmp_cmd)
        {
                bench::CompareOptions options;
                options.algorithms.clear();
                for (const std::string& s : cmp_algorithms)
                {
                        options.algorithms.push_back(parse_algorithm_option(s));
                }
                if (!cmp_params.empty())
                {
                        options.dae_params = net::load_params(cmp_params);
                }
                options.dae_training = cmp_training;
                options.dae_training.shuffle = !cmp_no_shuffle;
                const auto result =
                        bench::compare(options, load_nonempty(cmp_train, std::nullopt), load_nonempty(cmp_test, std::nullopt));
                bench::save_report(result, cmp_report);
                for (const std::string& line : result.tuned)
                {
                        std::fprintf(stderr, "%s\n", line.c_str());
                }
                return 0;
        }
        if (*synth_cmd)
        {
                const Recording r =
                        bench::generate_synthetic(bench::profile_by_name(synth_profile), synth_duration, synth_rate, synth_seed);
                save_recording(r, synth_out);
                return 0;
        }
        if (*tune_cmd)
        {
                const bench::Algorithm algorithm = parse_algorithm_option(tune_algorithm);
                const std::vector<double> grid = tune_grid.empty() ? bench::default_grid(algorithm) : tune_grid;
                const auto result =
                        bench::tune_baseline(algorithm, grid, load_nonempty(tune_dir, placement_option(tune_placement)));
                std::printf("parameter,loss_deg\n");
                for (std::size_t i = 0; i < result.grid.size(); ++i)
                {
                        std::printf("%.6g,%.6f\n", result.grid[i], result.losses[i] * 180 / std::numbers::pi);
                }
                std::printf("# best %.6g\n", result.config.gain);
                return 0;
        }
        return kExitValidation;
}
}

int main(int argc, char** argv)
{
        try
        {
                return main_impl(argc, argv);
        }
        catch (const dae::Error& e)
        {
                std::fprintf(stderr, "error: %s\n", e.what());
                return dae::is_numerical(e.kind()) ? kExitNumerical : kExitValidation;
        }
        catch (const std::exception& e)
        {
                std::fprintf(stderr, "error: %s\n", e.what());
                return kExitValidation;
        }
}
