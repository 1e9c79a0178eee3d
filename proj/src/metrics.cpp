#include "dae/metrics.hpp"

#include <cmath>
#include <numbers>

namespace dae::bench
{
namespace
{
constexpr double kDegreesPerRadian = 180 / std::numbers::pi;

MetricsRow from_sums(const double roll_sq, const double pitch_sq, const std::size_t n)
{
        MetricsRow row;
        if (n == 0)
        {
                return row;
        }
        row.e_roll_deg = std::sqrt(roll_sq / static_cast<double>(n));
        row.e_pitch_deg = std::sqrt(pitch_sq / static_cast<double>(n));
        row.e_deg = std::sqrt(row.e_roll_deg * row.e_roll_deg + row.e_pitch_deg * row.e_pitch_deg);
        return row;
}
}

double wrap_degrees(const double deg)
{
        double w = std::remainder(deg, 360.0);
        if (w <= -180)
        {
                w += 360;
        }
        return w;
}

ErrorTrace error_trace(const std::vector<Mat3>& estimated, const Recording& recording)
{
        if (estimated.size() != recording.gt.size() || recording.samples.size() != recording.gt.size())
        {
                throw Error(ErrorKind::alignment_error, recording.id + ": estimate and ground truth lengths differ");
        }
        ErrorTrace trace;
        trace.t.reserve(estimated.size());
        trace.roll_err_deg.reserve(estimated.size());
        trace.pitch_err_deg.reserve(estimated.size());
        for (std::size_t k = 0; k < estimated.size(); ++k)
        {
                const EulerAngles<double> e = to_euler(estimated[k]);
                const EulerAngles<double> g = to_euler(recording.gt[k]);
                trace.t.push_back(recording.samples[k].t);
                trace.roll_err_deg.push_back(wrap_degrees((e.roll - g.roll) * kDegreesPerRadian));
                trace.pitch_err_deg.push_back(wrap_degrees((e.pitch - g.pitch) * kDegreesPerRadian));
        }
        return trace;
}

MetricsRow compute_metrics(const ErrorTrace& trace)
{
        MetricsAccumulator acc;
        acc.add(trace);
        return acc.row();
}

MetricsRow compute_metrics(const std::vector<Mat3>& estimated, const std::vector<Mat3>& gt)
{
        if (estimated.size() != gt.size())
        {
                throw Error(ErrorKind::alignment_error, "estimate and ground truth lengths differ");
        }
        double roll_sq = 0;
        double pitch_sq = 0;
        for (std::size_t k = 0; k < gt.size(); ++k)
        {
                const EulerAngles<double> e = to_euler(estimated[k]);
                const EulerAngles<double> g = to_euler(gt[k]);
                const double dr = wrap_degrees((e.roll - g.roll) * kDegreesPerRadian);
                const double dp = wrap_degrees((e.pitch - g.pitch) * kDegreesPerRadian);
                roll_sq += dr * dr;
                pitch_sq += dp * dp;
        }
        return from_sums(roll_sq, pitch_sq, gt.size());
}

void MetricsAccumulator::add(const ErrorTrace& trace)
{
        for (std::size_t k = 0; k < trace.t.size(); ++k)
        {
                roll_sq_ += trace.roll_err_deg[k] * trace.roll_err_deg[k];
                pitch_sq_ += trace.pitch_err_deg[k] * trace.pitch_err_deg[k];
        }
        count_ += trace.t.size();
}

MetricsRow MetricsAccumulator::row() const
{
        return from_sums(roll_sq_, pitch_sq_, count_);
}
}
