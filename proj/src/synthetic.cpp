#include "dae/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace dae::bench
{
namespace
{
constexpr double kDegree = std::numbers::pi / 180;
constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr int kHarmonics = 3;

struct Harmonic
{
        double amplitude;
        double omega;
        double phase;
};

struct AngleSignal
{
        double offset = 0;
        std::vector<Harmonic> harmonics;

        [[nodiscard]] double value(const double t) const
        {
                double v = offset;
                for (const Harmonic& h : harmonics)
                {
                        v += h.amplitude * std::sin(h.omega * t + h.phase);
                }
                return v;
        }

        [[nodiscard]] double rate(const double t) const
        {
                double v = 0;
                for (const Harmonic& h : harmonics)
                {
                        v += h.amplitude * h.omega * std::cos(h.omega * t + h.phase);
                }
                return v;
        }
};

struct Burst
{
        double start;
        double length;
        double amplitude;
        double omega;
};

// Bursts of one axis: sin^2 envelope around a step-band oscillation.
struct BurstTrain
{
        std::vector<Burst> bursts;

        [[nodiscard]] double value(const double t) const
        {
                for (const Burst& b : bursts)
                {
                        if (t >= b.start && t < b.start + b.length)
                        {
                                const double u = (t - b.start) / b.length;
                                const double envelope = std::sin(std::numbers::pi * u);
                                return b.amplitude * envelope * envelope * std::sin(b.omega * (t - b.start));
                        }
                }
                return 0;
        }
};

AngleSignal make_angle(const double offset, const double amplitude, const SyntheticProfile& p, std::mt19937_64& rng)
{
        AngleSignal s;
        s.offset = offset;
        if (amplitude <= 0)
        {
                return s;
        }
        std::uniform_real_distribution<double> share(0.5, 1.0);
        std::uniform_real_distribution<double> freq(p.motion_min_hz, p.motion_max_hz);
        std::uniform_real_distribution<double> phase(0, kTwoPi);
        for (int i = 0; i < kHarmonics; ++i)
        {
                s.harmonics.push_back({amplitude / kHarmonics * share(rng), kTwoPi * freq(rng), phase(rng)});
        }
        return s;
}

BurstTrain make_bursts(const SyntheticProfile& p, const double duration, std::mt19937_64& rng)
{
        BurstTrain train;
        if (p.burst_amplitude_max <= 0 || p.burst_duty <= 0)
        {
                return train;
        }
        const double mean_rest = p.burst_mean_s * (1 - p.burst_duty) / p.burst_duty;
        std::uniform_real_distribution<double> length(0.5 * p.burst_mean_s, 1.5 * p.burst_mean_s);
        std::uniform_real_distribution<double> rest(0.5 * mean_rest, 1.5 * mean_rest);
        std::uniform_real_distribution<double> amplitude(0, p.burst_amplitude_max);
        std::uniform_real_distribution<double> freq(p.burst_min_hz, p.burst_max_hz);

        double t = rest(rng);
        while (t < duration)
        {
                const Burst b{t, length(rng), amplitude(rng), kTwoPi * freq(rng)};
                train.bursts.push_back(b);
                t += b.length + rest(rng);
        }
        return train;
}
}

SyntheticProfile profile_by_name(const std::string_view name)
{
        SyntheticProfile p;
        p.name = std::string(name);
        if (name == "stationary")
        {
                p.gyro_noise_sigma = 0.01;
        }
        else if (name == "clean")
        {
                p.tilt_amplitude_deg = 15;
                p.yaw_amplitude_deg = 60;
        }
        else if (name == "smooth")
        {
                p.tilt_amplitude_deg = 15;
                p.yaw_amplitude_deg = 60;
                p.gyro_noise_sigma = 0.01;
                p.acc_noise_sigma = 0.02;
        }
        else if (name == "walking")
        {
                p.tilt_amplitude_deg = 15;
                p.yaw_amplitude_deg = 60;
                p.gyro_noise_sigma = 0.01;
                p.gyro_bias_max = 0.003;
                p.acc_noise_sigma = 0.02;
                p.burst_amplitude_max = 3;
                p.burst_duty = 0.5;
        }
        else
        {
                throw Error(ErrorKind::invalid_argument, "unknown synthetic profile '" + std::string(name) + "'");
        }
        return p;
}

Vec3 body_rate(const EulerAngles<double>& a, const EulerAngles<double>& d)
{
        const double sr = std::sin(a.roll);
        const double cr = std::cos(a.roll);
        const double sp = std::sin(a.pitch);
        const double cp = std::cos(a.pitch);
        return {d.roll - d.yaw * sp, //
                d.pitch * cr + d.yaw * sr * cp, //
                -d.pitch * sr + d.yaw * cr * cp};
}

Recording generate_synthetic(const SyntheticProfile& p, const double duration_s, const double rate_hz,
                             const std::uint64_t seed)
{
        if (!(duration_s > 0) || !(rate_hz > 0) || 1 / rate_hz > kMaxTimeStep)
        {
                throw Error(ErrorKind::invalid_argument, "duration must be positive and rate at least 10 Hz");
        }

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> tilt(-p.tilt_offset_deg * kDegree, p.tilt_offset_deg * kDegree);
        std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);

        const double roll0 = tilt(rng);
        const double pitch0 = tilt(rng);
        const double yaw0 = heading(rng);
        const AngleSignal roll = make_angle(roll0, p.tilt_amplitude_deg * kDegree, p, rng);
        const AngleSignal pitch = make_angle(pitch0, p.tilt_amplitude_deg * kDegree, p, rng);
        const AngleSignal yaw = make_angle(yaw0, p.yaw_amplitude_deg * kDegree, p, rng);

        Vec3 bias = Vec3::Zero();
        if (p.gyro_bias_max > 0)
        {
                std::uniform_real_distribution<double> b(-p.gyro_bias_max, p.gyro_bias_max);
                bias = Vec3(b(rng), b(rng), b(rng));
        }

        std::array<BurstTrain, 3> bursts;
        for (BurstTrain& b : bursts)
        {
                b = make_bursts(p, duration_s, rng);
        }

        std::normal_distribution<double> normal(0, 1);
        const auto angles_at = [&](const double t) { return EulerAngles<double>{roll.value(t), pitch.value(t), yaw.value(t)}; };
        const auto rates_at = [&](const double t) { return EulerAngles<double>{roll.rate(t), pitch.rate(t), yaw.rate(t)}; };

        Recording r;
        r.id = p.name + "_" + std::to_string(seed);
        r.placement = Placement::synthetic;
        r.rate_hz = rate_hz;

        const double dt = 1 / rate_hz;
        const auto count = static_cast<std::size_t>(std::floor(duration_s * rate_hz)) + 1;
        r.samples.reserve(count);
        r.gt.reserve(count);
        for (std::size_t k = 0; k < count; ++k)
        {
                const double t = static_cast<double>(k) * dt;
                const double t_rate = k == 0 ? t : t - dt / 2;
                const Mat3 attitude = from_euler(angles_at(t));

                ImuSample<double> s;
                s.t = t;
                s.gyro = body_rate(angles_at(t_rate), rates_at(t_rate)) + bias;

                const Vec3 linear(bursts[0].value(t), bursts[1].value(t), bursts[2].value(t));
                s.acc = -kStandardGravity * (attitude.transpose() * gravity_ref<double>()) + linear;

                if (p.gyro_noise_sigma > 0)
                {
                        s.gyro += p.gyro_noise_sigma * Vec3(normal(rng), normal(rng), normal(rng));
                }
                if (p.acc_noise_sigma > 0)
                {
                        s.acc += p.acc_noise_sigma * Vec3(normal(rng), normal(rng), normal(rng));
                }
                r.samples.push_back(s);
                r.gt.push_back(attitude);
        }
        return r;
}
}
