#pragma once

#include "dae/recording.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace dae::bench
{
/// Parameters of the synthetic IMU generator. Ground truth is exact by
/// construction: the attitude is a sum of random sinusoids per Euler angle,
/// the gyro is the analytic body rate of that trajectory, and the
/// accelerometer is the specific force of gravity plus optional linear
/// acceleration bursts in the body frame.
struct SyntheticProfile
{
        std::string name = "custom";

        double tilt_offset_deg = 20;        // initial roll/pitch drawn in +-offset
        double tilt_amplitude_deg = 0;      // roll/pitch oscillation amplitude
        double yaw_amplitude_deg = 0;
        double motion_min_hz = 0.05;
        double motion_max_hz = 0.5;

        double gyro_noise_sigma = 0;        // rad/s, white
        double gyro_bias_max = 0;           // rad/s, constant per axis in +-max
        double acc_noise_sigma = 0;         // m/s^2, white

        double burst_amplitude_max = 0;     // m/s^2 per axis, amplitude uniform in [0, max]
        double burst_duty = 0;              // fraction of time inside bursts
        double burst_mean_s = 1.5;          // mean burst length
        double burst_min_hz = 1.5;          // oscillation inside a burst, walking-step band
        double burst_max_hz = 2.5;
};

/// Named profiles: "stationary", "clean", "walking", "smooth".
[[nodiscard]] SyntheticProfile profile_by_name(std::string_view name);

/// Body rate of the z-y-x Euler trajectory with the given angle rates.
[[nodiscard]] Vec3 body_rate(const EulerAngles<double>& angles, const EulerAngles<double>& rates);

/// Sample k >= 1 carries the rate at the middle of (t_{k-1}, t_k], the
/// interval the propagator integrates over.
[[nodiscard]] Recording generate_synthetic(const SyntheticProfile& profile, double duration_s, double rate_hz,
                                           std::uint64_t seed);
}
