#pragma once

#include "dae/recording.hpp"

#include <vector>

namespace dae::bench
{
/// Wraps an angle in degrees to (-180, 180].
[[nodiscard]] double wrap_degrees(double deg);

struct MetricsRow
{
        double e_roll_deg = 0;
        double e_pitch_deg = 0;
        double e_deg = 0;
};

/// Per-sample roll and pitch errors, estimate minus ground truth, in degrees.
struct ErrorTrace
{
        std::vector<double> t;
        std::vector<double> roll_err_deg;
        std::vector<double> pitch_err_deg;
};

[[nodiscard]] ErrorTrace error_trace(const std::vector<Mat3>& estimated, const Recording& recording);

/// RMS roll and pitch errors from z-y-x Euler angles; e = hypot(e_roll, e_pitch).
[[nodiscard]] MetricsRow compute_metrics(const std::vector<Mat3>& estimated, const std::vector<Mat3>& gt);
[[nodiscard]] MetricsRow compute_metrics(const ErrorTrace& trace);

/// Pools squared errors across recordings, so a placement row weighs every
/// sample equally.
class MetricsAccumulator
{
        double roll_sq_ = 0;
        double pitch_sq_ = 0;
        std::size_t count_ = 0;

public:
        void add(const ErrorTrace& trace);

        [[nodiscard]] std::size_t count() const
        {
                return count_;
        }

        [[nodiscard]] MetricsRow row() const;
};
}
