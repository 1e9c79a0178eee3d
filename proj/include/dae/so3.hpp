#pragma once

// Rotation-matrix algebra. R maps body-frame vectors to the reference
// frame (NED, z down): v_ref = R * v_body.

#include "dae/error.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dae
{
template <typename T>
using Vector3 = Eigen::Matrix<T, 3, 1>;

template <typename T>
using Matrix3 = Eigen::Matrix<T, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

/// Roll, pitch, yaw of the z-y-x (aerospace) sequence, radians.
/// R = R_z(yaw) * R_y(pitch) * R_x(roll).
template <typename T>
struct EulerAngles
{
        T roll{};
        T pitch{};
        T yaw{};
};

template <typename Derived>
[[nodiscard]] Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& w)
{
        EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
        using T = typename Derived::Scalar;
        Matrix3<T> s;
        s << T{0}, -w.z(), w.y(), //
                w.z(), T{0}, -w.x(), //
                -w.y(), w.x(), T{0};
        return s;
}

template <typename T>
[[nodiscard]] Matrix3<T> rotation_x(const T angle)
{
        const T c = std::cos(angle);
        const T s = std::sin(angle);
        Matrix3<T> r;
        r << 1, 0, 0, //
                0, c, -s, //
                0, s, c;
        return r;
}

template <typename T>
[[nodiscard]] Matrix3<T> rotation_y(const T angle)
{
        const T c = std::cos(angle);
        const T s = std::sin(angle);
        Matrix3<T> r;
        r << c, 0, s, //
                0, 1, 0, //
                -s, 0, c;
        return r;
}

template <typename T>
[[nodiscard]] Matrix3<T> rotation_z(const T angle)
{
        const T c = std::cos(angle);
        const T s = std::sin(angle);
        Matrix3<T> r;
        r << c, -s, 0, //
                s, c, 0, //
                0, 0, 1;
        return r;
}

inline constexpr double kSingularEigenvalue = 1e-12;

/// Pieces of the polar decomposition raw = R * (raw^T raw)^{1/2}, kept so the
/// reverse-mode pass can reuse the spectral factors of the Gram matrix.
template <typename T>
struct PolarFactors
{
        Matrix3<T> rotation;
        Matrix3<T> gram_eigenvectors;
        Vector3<T> gram_eigenvalues;
        Matrix3<T> inverse_sqrt;
};

template <typename T>
[[nodiscard]] PolarFactors<T> polar_factors(const Matrix3<T>& raw)
{
        const Matrix3<T> gram = raw.transpose() * raw;
        const Eigen::SelfAdjointEigenSolver<Matrix3<T>> eigen(gram);
        if (eigen.info() != Eigen::Success || !(eigen.eigenvalues().minCoeff() > T(kSingularEigenvalue)))
        {
                throw Error(ErrorKind::singular_input, "Gram matrix eigenvalue below 1e-12");
        }

        PolarFactors<T> f;
        f.gram_eigenvectors = eigen.eigenvectors();
        f.gram_eigenvalues = eigen.eigenvalues();
        f.inverse_sqrt = f.gram_eigenvectors * f.gram_eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal()
                         * f.gram_eigenvectors.transpose();
        f.rotation = raw * f.inverse_sqrt;
        return f;
}

/// Nearest orthogonal matrix, raw * (raw^T raw)^{-1/2}.
template <typename T>
[[nodiscard]] Matrix3<T> orthogonalize(const Matrix3<T>& raw)
{
        return polar_factors(raw).rotation;
}

inline constexpr double kGimbalLockCos = 1e-6;

template <typename T>
[[nodiscard]] T wrap_angle(const T a)
{
        // atan2 yields [-pi, pi]; fold -pi onto pi
        return a <= -std::numbers::pi_v<T> ? a + 2 * std::numbers::pi_v<T> : a;
}

/// z-y-x decomposition. At |cos(pitch)| < 1e-6 roll is set to zero and
/// `gimbal_lock`, when given, is raised.
template <typename T>
[[nodiscard]] EulerAngles<T> to_euler(const Matrix3<T>& r, bool* gimbal_lock = nullptr)
{
        EulerAngles<T> e;
        const T cos_pitch = std::hypot(r(0, 0), r(1, 0));
        e.pitch = std::atan2(-r(2, 0), cos_pitch);

        const bool locked = cos_pitch < T(kGimbalLockCos);
        if (gimbal_lock != nullptr)
        {
                *gimbal_lock = locked;
        }

        if (locked)
        {
                e.roll = 0;
                e.yaw = wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
                return e;
        }
        e.roll = wrap_angle(std::atan2(r(2, 1), r(2, 2)));
        e.yaw = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
        return e;
}

template <typename T>
[[nodiscard]] Matrix3<T> from_euler(const EulerAngles<T>& e)
{
        return rotation_z(e.yaw) * rotation_y(e.pitch) * rotation_x(e.roll);
}

/// Angle of the relative rotation a^T b, radians.
template <typename T>
[[nodiscard]] T rotation_angle(const Matrix3<T>& a, const Matrix3<T>& b)
{
        const T c = ((a.transpose() * b).trace() - 1) / 2;
        return std::acos(std::clamp(c, T(-1), T(1)));
}
}
