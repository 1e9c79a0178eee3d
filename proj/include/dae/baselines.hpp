#pragma once

#include "dae/gain_net.hpp"
#include "dae/recording.hpp"

#include <Eigen/Geometry>

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace dae::bench
{
enum class Algorithm
{
        fixed_gain_cf,
        madgwick,
        mahony,
        dae,
};

[[nodiscard]] std::string_view to_string(Algorithm algorithm);
[[nodiscard]] std::optional<Algorithm> parse_algorithm(std::string_view name);

/// fixed_gain_cf: `gain` is the scalar accelerometer weight of every axis.
/// madgwick: `gain` is beta. mahony: `gain` is K_p, `integral_gain` is K_i.
/// dae: `params` holds the trained gain network.
struct AlgorithmConfig
{
        Algorithm algorithm = Algorithm::fixed_gain_cf;
        double gain = 0;
        double integral_gain = 0;
        std::shared_ptr<const net::GainNetParams> params;
};

/// Madgwick's IMU-only gradient-descent filter, in the body -> NED
/// convention: the objective is |R(q)^T e3 - a|^2 with a the measured
/// gravity direction.
class MadgwickImu
{
        Eigen::Quaterniond q_;

public:
        explicit MadgwickImu(const Mat3& initial);

        void update(const Vec3& gyro, const Vec3& acc, double beta, double dt);

        [[nodiscard]] Mat3 attitude() const
        {
                return q_.toRotationMatrix();
        }
};

/// Mahony's explicit complementary filter, IMU-only. The correction is
/// K_p e + K_i integral(e) with e = a x (R^T e3).
class MahonyImu
{
        Eigen::Quaterniond q_;
        Vec3 integral_ = Vec3::Zero();

public:
        explicit MahonyImu(const Mat3& initial);

        void update(const Vec3& gyro, const Vec3& acc, double kp, double ki, double dt);

        [[nodiscard]] Mat3 attitude() const
        {
                return q_.toRotationMatrix();
        }
};

/// Attitude estimates, one per sample, starting from the ground truth at
/// the first sample.
[[nodiscard]] std::vector<Mat3> run_filter(const AlgorithmConfig& config, const Recording& recording);

/// RMS gravity angle between ground truth and estimates over samples 1..n-1,
/// the quantity the trainer minimizes.
[[nodiscard]] double attitude_loss(const std::vector<Mat3>& estimated, const Recording& recording);
}
