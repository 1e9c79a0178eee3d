#pragma once

// Gain network: three independent single-input MLPs, one per body axis,
// mapping a residual component to an accelerometer weight in (0, 1).
//
//   r -> powers (r/s)^-3 .. (r/s)^5 -> dense 9x16 -> tanh -> dense 16x32 -> tanh
//     -> dense 32x64 -> tanh -> dense 64x32 -> tanh -> dense 32x1 -> soft threshold

#include "dae/filter.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace dae::net
{
inline constexpr int kLowestPower = -3;
inline constexpr int kHighestPower = 5;
inline constexpr int kAugmentedSize = kHighestPower - kLowestPower + 1;
inline constexpr double kResidualFloor = 1e-4;
/// Residuals are divided by this before augmentation, so that the powers of
/// typical residuals stay near 1.
inline constexpr double kResidualScale = 0.01;
inline constexpr int kAxes = 3;
inline constexpr double kInitOutputScale = 0.1;
inline constexpr int kLayers = 5;
inline constexpr std::array<int, kLayers> kLayerWidths{16, 32, 64, 32, 1};

/// How a residual component is fed to its axis network.
enum class InputMode : std::uint8_t
{
        signed_powers = 0,   // sign-preserving clamp |r| >= 1e-4, then powers
        absolute_powers = 1, // max(|r|, 1e-4), then powers
        raw = 2,             // the scalar residual as a 1-element input
};

[[nodiscard]] int input_size(InputMode mode);

using AugmentedInput = Eigen::Matrix<double, kAugmentedSize, 1>;

/// r <- sign(r) * max(|r|, 1e-4); zero maps to +1e-4.
[[nodiscard]] double clamp_residual(double r);

/// [r^-3, r^-2, r^-1, 1, r, r^2, r^3, r^4, r^5] of the clamped argument.
[[nodiscard]] AugmentedInput augment(double r);

[[nodiscard]] double soft_threshold(double x);
[[nodiscard]] double soft_threshold_slope(double x);

struct DenseLayer
{
        Eigen::MatrixXd weight; // out x in, y = weight * x + bias
        Eigen::VectorXd bias;
};

struct AxisNet
{
        std::array<DenseLayer, kLayers> layers;
};

struct GainNetParams
{
        InputMode input_mode = InputMode::signed_powers;
        std::array<AxisNet, kAxes> axes;

        [[nodiscard]] Eigen::Index size() const;
        [[nodiscard]] bool all_finite() const;
};

[[nodiscard]] GainNetParams zero_params(InputMode mode = InputMode::signed_powers);

/// Fan-in uniform weights, zero biases, output bias 0.5 so the initial
/// policy sits near soft_threshold(0.5) = 0.5. The output layer weights are
/// shrunk by kInitOutputScale.
[[nodiscard]] GainNetParams init_params(std::uint64_t seed, InputMode mode = InputMode::signed_powers);

[[nodiscard]] GainMatrix<double> forward(const GainNetParams& params, const Vec3& residual);

struct BackwardResult
{
        GainNetParams param_gradients;
        Vec3 residual_gradient = Vec3::Zero();
};

[[nodiscard]] BackwardResult backward(const GainNetParams& params, const Vec3& residual, const Vec3& upstream);

/// dK/dr of one axis for every residual of a sequence.
[[nodiscard]] Eigen::VectorXd gain_slopes(const GainNetParams& params, int axis, const Eigen::VectorXd& residuals);

/// Adds sum_i upstream_i * dK(residual_i)/dparams of one axis to `gradients`.
void accumulate_gradients(const GainNetParams& params, int axis, const Eigen::VectorXd& residuals,
                          const Eigen::VectorXd& upstream, GainNetParams& gradients);

[[nodiscard]] Eigen::VectorXd flatten(const GainNetParams& params);
[[nodiscard]] GainNetParams unflatten(const Eigen::VectorXd& values, InputMode mode);

// y += alpha * x
void axpy(double alpha, const GainNetParams& x, GainNetParams& y);
[[nodiscard]] double squared_norm(const GainNetParams& params);

// Binary layout, all integers and doubles little-endian:
//   8 bytes  magic "DAEGAINS"
//   1 byte   format version (1)
//   1 byte   input mode
//   1 byte   axes (3)
//   1 byte   layers per axis (5)
//   per axis, per layer: uint32 inputs, uint32 outputs
//   per axis, per layer: weights (outputs x inputs, row-major), then biases, IEEE-754 binary64
inline constexpr std::array<char, 8> kParamsMagic{'D', 'A', 'E', 'G', 'A', 'I', 'N', 'S'};
inline constexpr std::uint8_t kParamsVersion = 1;

void save_params(const GainNetParams& params, std::ostream& out);
[[nodiscard]] GainNetParams load_params(std::istream& in);

void save_params(const GainNetParams& params, const std::filesystem::path& path);
[[nodiscard]] GainNetParams load_params(const std::filesystem::path& path);
}
