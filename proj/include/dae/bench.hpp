#pragma once

#include "dae/baselines.hpp"
#include "dae/metrics.hpp"
#include "dae/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dae::bench
{
/// n points log-spaced from lo to hi inclusive.
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// fixed-gain-cf: 0 and 24 points in 1e-4..1; madgwick: beta, 20 points in
/// 0.001..0.5; mahony: K_p, 20 points in 0.1..10 with K_i = 0.
[[nodiscard]] std::vector<double> default_grid(Algorithm algorithm);

struct TuneResult
{
        AlgorithmConfig config;
        std::vector<double> grid;
        std::vector<double> losses; // mean attitude loss per grid point, radians
        std::size_t best_index = 0;
};

/// Exhaustive search for the grid point with the lowest mean attitude loss
/// over the recordings. Ties go to the smaller parameter.
[[nodiscard]] TuneResult tune_baseline(Algorithm algorithm, const std::vector<double>& grid,
                                       const std::vector<Recording>& train);

/// A read-only view of a recording set that counts every access.
class CountedRecordings
{
        const std::vector<Recording>* recordings_;
        mutable std::vector<std::size_t> reads_;

public:
        explicit CountedRecordings(const std::vector<Recording>& recordings)
            : recordings_(&recordings), reads_(recordings.size(), 0)
        {
        }

        [[nodiscard]] std::size_t size() const
        {
                return recordings_->size();
        }

        /// Placement and id only, not counted.
        [[nodiscard]] Placement placement(const std::size_t i) const
        {
                return (*recordings_)[i].placement;
        }

        [[nodiscard]] const Recording& read(const std::size_t i) const
        {
                ++reads_.at(i);
                return (*recordings_)[i];
        }

        [[nodiscard]] std::size_t reads(const std::size_t i) const
        {
                return reads_.at(i);
        }
};

struct CompareOptions
{
        std::vector<Algorithm> algorithms{Algorithm::fixed_gain_cf, Algorithm::madgwick, Algorithm::mahony,
                                          Algorithm::dae};
        std::map<Algorithm, std::vector<double>> grids; // defaults when absent
        std::optional<net::GainNetParams> dae_params;    // trained per placement when absent
        train::TrainConfig dae_training;
};

struct ReportRow
{
        std::string algorithm;
        std::string placement; // a placement name or "average"
        std::string recording; // a recording id or "all"
        MetricsRow metrics;
};

struct CompareResult
{
        std::vector<ReportRow> rows;
        std::map<std::string, ErrorTrace> traces; // "<algorithm>/<recording id>"
        std::vector<std::string> tuned;           // "<algorithm> <placement> <parameter>"
};

/// Tunes or trains each algorithm on the train recordings of every placement
/// present in the test set, then runs it once over each test recording of
/// that placement. Rows per recording, per placement (pooled samples) and an
/// average over placements whose e_roll and e_pitch are RMS over placements.
[[nodiscard]] CompareResult compare(const CompareOptions& options, const std::vector<Recording>& train_set,
                                    const std::vector<Recording>& test_set);

/// Evaluates fixed parameters, same table layout as compare.
[[nodiscard]] CompareResult evaluate_report(const AlgorithmConfig& config, const std::vector<Recording>& test_set);

inline constexpr std::string_view kReportHeader = "algorithm,placement,recording,e_roll_deg,e_pitch_deg,e_deg";

void write_report(const std::vector<ReportRow>& rows, std::ostream& out);
void write_trace(const ErrorTrace& trace, std::ostream& out);

/// Writes the report to `path` and one trace CSV per entry under
/// `<path stem>_traces/`.
void save_report(const CompareResult& result, const std::filesystem::path& path);
}
