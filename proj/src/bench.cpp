#include "dae/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>

namespace dae::bench
{
namespace
{
constexpr std::size_t kFixedGainPoints = 24;
constexpr std::size_t kBaselinePoints = 20;

std::string format_row(const ReportRow& row)
{
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", row.metrics.e_roll_deg, row.metrics.e_pitch_deg,
                      row.metrics.e_deg);
        return row.algorithm + "," + row.placement + "," + row.recording + "," + buf;
}

std::vector<Recording> of_placement(const std::vector<Recording>& set, const Placement p)
{
        std::vector<Recording> out;
        for (const Recording& r : set)
        {
                if (r.placement == p)
                {
                        out.push_back(r);
                }
        }
        return out;
}

std::string describe(const AlgorithmConfig& c)
{
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", c.gain);
        return buf;
}

struct PlacementRows
{
        std::vector<ReportRow> rows;
        MetricsRow pooled;
};

// Runs `config` once over every test recording of the placement.
PlacementRows run_placement(const AlgorithmConfig& config, const CountedRecordings& test, const Placement placement,
                            CompareResult& result)
{
        const std::string name(to_string(config.algorithm));
        PlacementRows out;
        MetricsAccumulator pooled;
        for (std::size_t i = 0; i < test.size(); ++i)
        {
                if (test.placement(i) != placement)
                {
                        continue;
                }
                const Recording& r = test.read(i);
                ErrorTrace trace = error_trace(run_filter(config, r), r);
                pooled.add(trace);
                out.rows.push_back({name, std::string(to_string(placement)), r.id, compute_metrics(trace)});
                result.traces[name + "/" + r.id] = std::move(trace);
        }
        out.pooled = pooled.row();
        out.rows.push_back({name, std::string(to_string(placement)), "all", out.pooled});
        return out;
}

std::vector<Placement> placements_of(const std::vector<Recording>& set)
{
        std::set<Placement> seen;
        for (const Recording& r : set)
        {
                seen.insert(r.placement);
        }
        return {seen.begin(), seen.end()};
}

ReportRow average_row(const std::string& algorithm, const std::vector<MetricsRow>& per_placement)
{
        double roll = 0;
        double pitch = 0;
        for (const MetricsRow& m : per_placement)
        {
                roll += m.e_roll_deg * m.e_roll_deg;
                pitch += m.e_pitch_deg * m.e_pitch_deg;
        }
        const auto n = static_cast<double>(std::max<std::size_t>(per_placement.size(), 1));
        MetricsRow avg;
        avg.e_roll_deg = std::sqrt(roll / n);
        avg.e_pitch_deg = std::sqrt(pitch / n);
        avg.e_deg = std::sqrt(avg.e_roll_deg * avg.e_roll_deg + avg.e_pitch_deg * avg.e_pitch_deg);
        return {algorithm, "average", "all", avg};
}
}

std::vector<double> log_grid(const double lo, const double hi, const std::size_t n)
{
        if (!(lo > 0) || !(hi >= lo) || n == 0)
        {
                throw Error(ErrorKind::invalid_argument, "log grid needs 0 < lo <= hi and n > 0");
        }
        std::vector<double> grid(n);
        if (n == 1)
        {
                grid[0] = lo;
                return grid;
        }
        const double step = std::log(hi / lo) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i)
        {
                grid[i] = lo * std::exp(step * static_cast<double>(i));
        }
        grid.back() = hi;
        return grid;
}

std::vector<double> default_grid(const Algorithm algorithm)
{
        switch (algorithm)
        {
        case Algorithm::fixed_gain_cf:
        {
                std::vector<double> grid{0.0};
                const std::vector<double> tail = log_grid(1e-4, 1, kFixedGainPoints);
                grid.insert(grid.end(), tail.begin(), tail.end());
                return grid;
        }
        case Algorithm::madgwick:
                return log_grid(0.001, 0.5, kBaselinePoints);
        case Algorithm::mahony:
                return log_grid(0.1, 10, kBaselinePoints);
        case Algorithm::dae:
                break;
        }
        throw Error(ErrorKind::invalid_argument, "dae is trained, not grid-tuned");
}

TuneResult tune_baseline(const Algorithm algorithm, const std::vector<double>& grid,
                         const std::vector<Recording>& train)
{
        if (algorithm == Algorithm::dae)
        {
                throw Error(ErrorKind::invalid_argument, "dae is trained, not grid-tuned");
        }
        if (grid.empty())
        {
                throw Error(ErrorKind::invalid_argument, "empty tuning grid");
        }
        if (train.empty())
        {
                throw Error(ErrorKind::invalid_argument, "no training recordings to tune on");
        }
        for (const double g : grid)
        {
                if (!std::isfinite(g) || g < 0)
                {
                        throw Error(ErrorKind::invalid_argument, "grid values must be finite and non-negative");
                }
        }

        TuneResult result;
        result.grid = grid;
        std::sort(result.grid.begin(), result.grid.end());
        result.grid.erase(std::unique(result.grid.begin(), result.grid.end()), result.grid.end());

        for (const double g : result.grid)
        {
                const AlgorithmConfig c{algorithm, g, 0.0, nullptr};
                double total = 0;
                for (const Recording& r : train)
                {
                        total += attitude_loss(run_filter(c, r), r);
                }
                result.losses.push_back(total / static_cast<double>(train.size()));
        }
        // Ascending grid and strict comparison: ties keep the smaller value.
        for (std::size_t i = 1; i < result.losses.size(); ++i)
        {
                if (result.losses[i] < result.losses[result.best_index])
                {
                        result.best_index = i;
                }
        }
        if (!std::isfinite(result.losses[result.best_index]))
        {
                throw Error(ErrorKind::non_finite_loss, "no grid point gave a finite loss");
        }
        result.config = {algorithm, result.grid[result.best_index], 0.0, nullptr};
        return result;
}

CompareResult compare(const CompareOptions& options, const std::vector<Recording>& train_set,
                      const std::vector<Recording>& test_set)
{
        if (options.algorithms.empty())
        {
                throw Error(ErrorKind::invalid_argument, "no algorithms to compare");
        }
        if (test_set.empty())
        {
                throw Error(ErrorKind::invalid_argument, "empty test set");
        }

        CompareResult result;
        const CountedRecordings test(test_set);
        const std::vector<Placement> placements = placements_of(test_set);
        std::shared_ptr<const net::GainNetParams> fixed_params;
        if (options.dae_params)
        {
                fixed_params = std::make_shared<const net::GainNetParams>(*options.dae_params);
        }

        for (const Algorithm algorithm : options.algorithms)
        {
                const std::string name(to_string(algorithm));
                std::vector<std::size_t> before(test.size());
                for (std::size_t i = 0; i < test.size(); ++i)
                {
                        before[i] = test.reads(i);
                }

                std::vector<MetricsRow> pooled;
                for (const Placement placement : placements)
                {
                        AlgorithmConfig config{algorithm, 0.0, 0.0, nullptr};
                        if (algorithm == Algorithm::dae)
                        {
                                config.params = fixed_params;
                                if (!config.params)
                                {
                                        const auto train = of_placement(train_set, placement);
                                        config.params = std::make_shared<const net::GainNetParams>(
                                                train::train(train, options.dae_training).params);
                                        result.tuned.push_back(name + " " + std::string(to_string(placement)) + " trained");
                                }
                        }
                        else
                        {
                                const auto it = options.grids.find(algorithm);
                                const std::vector<double> grid = it != options.grids.end() ? it->second
                                                                                           : default_grid(algorithm);
                                config = tune_baseline(algorithm, grid, of_placement(train_set, placement)).config;
                                result.tuned.push_back(name + " " + std::string(to_string(placement)) + " "
                                                       + describe(config));
                        }

                        PlacementRows rows = run_placement(config, test, placement, result);
                        pooled.push_back(rows.pooled);
                        result.rows.insert(result.rows.end(), rows.rows.begin(), rows.rows.end());
                }
                result.rows.push_back(average_row(name, pooled));

                for (std::size_t i = 0; i < test.size(); ++i)
                {
                        if (test.reads(i) != before[i] + 1)
                        {
                                throw Error(ErrorKind::invalid_argument,
                                            "test recording " + test_set[i].id + " was not read exactly once by " + name);
                        }
                }
        }
        return result;
}

CompareResult evaluate_report(const AlgorithmConfig& config, const std::vector<Recording>& test_set)
{
        if (test_set.empty())
        {
                throw Error(ErrorKind::invalid_argument, "empty test set");
        }
        CompareResult result;
        const CountedRecordings test(test_set);
        std::vector<MetricsRow> pooled;
        for (const Placement placement : placements_of(test_set))
        {
                PlacementRows rows = run_placement(config, test, placement, result);
                pooled.push_back(rows.pooled);
                result.rows.insert(result.rows.end(), rows.rows.begin(), rows.rows.end());
        }
        result.rows.push_back(average_row(std::string(to_string(config.algorithm)), pooled));
        return result;
}

void write_report(const std::vector<ReportRow>& rows, std::ostream& out)
{
        out << kReportHeader << '\n';
        for (const ReportRow& row : rows)
        {
                out << format_row(row) << '\n';
        }
}

void write_trace(const ErrorTrace& trace, std::ostream& out)
{
        out << "t,roll_err_deg,pitch_err_deg\n";
        char buf[96];
        for (std::size_t k = 0; k < trace.t.size(); ++k)
        {
                std::snprintf(buf, sizeof buf, "%.6f,%.9f,%.9f\n", trace.t[k], trace.roll_err_deg[k],
                              trace.pitch_err_deg[k]);
                out << buf;
        }
}

void save_report(const CompareResult& result, const std::filesystem::path& path)
{
        if (path.has_parent_path())
        {
                std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
        {
                throw Error(ErrorKind::parse_error, "cannot open " + path.string() + " for writing");
        }
        write_report(result.rows, out);

        const std::filesystem::path dir = path.parent_path() / (path.stem().string() + "_traces");
        for (const auto& [key, trace] : result.traces)
        {
                const std::filesystem::path file = dir / (key + ".csv");
                std::filesystem::create_directories(file.parent_path());
                std::ofstream t(file, std::ios::binary | std::ios::trunc);
                if (!t)
                {
                        throw Error(ErrorKind::parse_error, "cannot open " + file.string() + " for writing");
                }
                write_trace(trace, t);
        }
}
}
