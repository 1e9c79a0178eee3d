#include "dae/baselines.hpp"

#include "dae/trainer.hpp"

#include <cmath>

namespace dae::bench
{
namespace
{
// q <- normalize(q + 0.5 q (0, w) dt - correction dt)
Eigen::Quaterniond integrate(const Eigen::Quaterniond& q, const Vec3& w, const Eigen::Vector4d& correction,
                             const double dt)
{
        const Eigen::Quaterniond dq = q * Eigen::Quaterniond(0, w.x(), w.y(), w.z());
        Eigen::Vector4d c = q.coeffs() + (0.5 * dq.coeffs() - correction) * dt;
        Eigen::Quaterniond next;
        next.coeffs() = c.normalized();
        return next;
}

bool usable(const Vec3& acc)
{
        return acc.norm() > 1e-9;
}

Eigen::Quaterniond to_quaternion(const Mat3& r)
{
        return Eigen::Quaterniond(r).normalized();
}
}

std::string_view to_string(const Algorithm algorithm)
{
        switch (algorithm)
        {
        case Algorithm::fixed_gain_cf:
                return "fixed-gain-cf";
        case Algorithm::madgwick:
                return "madgwick";
        case Algorithm::mahony:
                return "mahony";
        case Algorithm::dae:
                return "dae";
        }
        return "dae";
}

std::optional<Algorithm> parse_algorithm(const std::string_view name)
{
        for (const Algorithm a : {Algorithm::fixed_gain_cf, Algorithm::madgwick, Algorithm::mahony, Algorithm::dae})
        {
                if (to_string(a) == name)
                {
                        return a;
                }
        }
        return std::nullopt;
}

MadgwickImu::MadgwickImu(const Mat3& initial) : q_(to_quaternion(initial))
{
}

void MadgwickImu::update(const Vec3& gyro, const Vec3& acc, const double beta, const double dt)
{
        Eigen::Vector4d correction = Eigen::Vector4d::Zero();
        const Vec3 measured = gravity_direction(acc);
        if (beta > 0 && usable(measured))
        {
                const Vec3 a = measured.normalized();
                const double w = q_.w();
                const double x = q_.x();
                const double y = q_.y();
                const double z = q_.z();
                // R^T e3 - a, with R^T e3 the third row of R(q)
                const Vec3 f(2 * (x * z - w * y) - a.x(), 2 * (y * z + w * x) - a.y(), w * w - x * x - y * y + z * z - a.z());
                // Jacobian with respect to (w, x, y, z)
                Eigen::Matrix<double, 3, 4> j;
                j << -2 * y, 2 * z, -2 * w, 2 * x, //
                        2 * x, 2 * w, 2 * z, 2 * y, //
                        2 * w, -2 * x, -2 * y, 2 * z;
                const Eigen::Vector4d g = j.transpose() * f;
                const double norm = g.norm();
                if (norm > 0)
                {
                        // Eigen stores coefficients as (x, y, z, w)
                        correction = beta * Eigen::Vector4d(g(1), g(2), g(3), g(0)) / norm;
                }
        }
        q_ = integrate(q_, gyro, correction, dt);
}

MahonyImu::MahonyImu(const Mat3& initial) : q_(to_quaternion(initial))
{
}

void MahonyImu::update(const Vec3& gyro, const Vec3& acc, const double kp, const double ki, const double dt)
{
        Vec3 w = gyro;
        const Vec3 measured = gravity_direction(acc);
        if (usable(measured))
        {
                const Vec3 estimated = q_.toRotationMatrix().transpose() * gravity_ref<double>();
                const Vec3 e = measured.normalized().cross(estimated);
                if (ki > 0)
                {
                        integral_ += e * dt;
                }
                w += kp * e + ki * integral_;
        }
        q_ = integrate(q_, w, Eigen::Vector4d::Zero(), dt);
}

std::vector<Mat3> run_filter(const AlgorithmConfig& config, const Recording& recording)
{
        if (recording.samples.empty() || recording.samples.size() != recording.gt.size())
        {
                throw Error(ErrorKind::alignment_error, "recording '" + recording.id + "' is empty or misaligned");
        }

        std::vector<Mat3> out;
        out.reserve(recording.samples.size());
        out.push_back(recording.gt.front());
        const auto& samples = recording.samples;

        switch (config.algorithm)
        {
        case Algorithm::fixed_gain_cf:
        case Algorithm::dae:
        {
                if (config.algorithm == Algorithm::dae && !config.params)
                {
                        throw Error(ErrorKind::invalid_argument, "dae requires trained parameters");
                }
                const ConstantGains<double> constant{GainMatrix<double>::constant(config.gain)};
                if (!constant.gains.valid())
                {
                        throw Error(ErrorKind::invalid_argument, "fixed gain must lie in [0, 1]");
                }
                FilterState<double> state{recording.gt.front(), samples.front().t};
                for (std::size_t k = 1; k < samples.size(); ++k)
                {
                        if (config.algorithm == Algorithm::dae)
                        {
                                state = step(state, samples[k],
                                             [&](const Vec3& r) { return net::forward(*config.params, r); })
                                                .state;
                        }
                        else
                        {
                                state = step(state, samples[k], constant).state;
                        }
                        out.push_back(state.attitude);
                }
                break;
        }
        case Algorithm::madgwick:
        {
                MadgwickImu filter(recording.gt.front());
                for (std::size_t k = 1; k < samples.size(); ++k)
                {
                        filter.update(samples[k].gyro, samples[k].acc, config.gain, samples[k].t - samples[k - 1].t);
                        out.push_back(filter.attitude());
                }
                break;
        }
        case Algorithm::mahony:
        {
                MahonyImu filter(recording.gt.front());
                for (std::size_t k = 1; k < samples.size(); ++k)
                {
                        filter.update(samples[k].gyro, samples[k].acc, config.gain, config.integral_gain,
                                      samples[k].t - samples[k - 1].t);
                        out.push_back(filter.attitude());
                }
                break;
        }
        }
        return out;
}

double attitude_loss(const std::vector<Mat3>& estimated, const Recording& recording)
{
        if (estimated.size() != recording.gt.size())
        {
                throw Error(ErrorKind::alignment_error, "estimate and ground truth lengths differ");
        }
        const Vec3 g = gravity_ref<double>();
        std::vector<double> angles;
        angles.reserve(estimated.size());
        for (std::size_t k = 1; k < estimated.size(); ++k)
        {
                angles.push_back(train::gravity_angle(recording.gt[k].transpose() * g, estimated[k].transpose() * g));
        }
        return train::rms(angles);
}
}
