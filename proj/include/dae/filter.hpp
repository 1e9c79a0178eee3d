#pragma once

// Complementary attitude filter with a per-axis accelerometer weighting:
// gyro propagation, gravity prediction, component-wise update and a Triad
// reconstruction that rebuilds the attitude from the updated gravity
// direction using a pseudo-magnetic reference vector.
//
// Conventions:
//  * R is body -> reference. Gravity predicted in the body frame is
//    R^T * g_ref, the transpose of the usual printed form, so that the
//    mapping stays consistent with v_ref = R * v_body.
//  * g_ref = (0, 0, 1), the unit down direction of NED.
//  * Accelerometers read specific force; at rest that is -g. Samples are
//    converted once with gravity_direction(acc) = -acc / 9.80665 so that
//    at rest the converted sample equals the body-frame gravity direction.

#include "dae/error.hpp"
#include "dae/so3.hpp"

#include <cmath>
#include <concepts>
#include <string>

namespace dae
{
inline constexpr double kStandardGravity = 9.80665;
inline constexpr double kMaxTimeStep = 0.1;
inline constexpr double kDegenerateNorm = 1e-6;

template <typename T>
[[nodiscard]] Vector3<T> gravity_ref()
{
        return Vector3<T>::UnitZ();
}

template <typename T>
[[nodiscard]] Vector3<T> pseudo_north_ref()
{
        return Vector3<T>::UnitX();
}

template <typename T>
struct ImuSample
{
        T t{};
        Vector3<T> gyro = Vector3<T>::Zero();
        Vector3<T> acc = Vector3<T>::Zero();
};

template <typename T>
struct FilterState
{
        Matrix3<T> attitude = Matrix3<T>::Identity();
        T t_prev{};
};

/// Diagonal of the accelerometer weighting matrix, each entry in [0, 1].
template <typename T>
struct GainMatrix
{
        Vector3<T> diagonal = Vector3<T>::Zero();

        [[nodiscard]] static GainMatrix constant(const T k)
        {
                return {Vector3<T>::Constant(k)};
        }

        [[nodiscard]] bool valid() const
        {
                return (diagonal.array() >= T(0)).all() && (diagonal.array() <= T(1)).all();
        }
};

template <typename T>
struct StepTrace
{
        Matrix3<T> propagated;           // gyro-only attitude of this step
        Vector3<T> predicted_gravity;    // body frame
        Vector3<T> measured_gravity;     // gravity_direction(acc)
        Vector3<T> residual;             // measured - predicted
        GainMatrix<T> gains;
        Vector3<T> blended_gravity;      // before normalization
        Vector3<T> updated_gravity;      // unit
        Matrix3<T> updated;              // new attitude
        bool degenerate_triad = false;
};

template <typename T>
[[nodiscard]] Vector3<T> gravity_direction(const Vector3<T>& acc)
{
        return -acc / T(kStandardGravity);
}

template <typename T>
[[nodiscard]] Matrix3<T> propagate_gyro(const FilterState<T>& state, const ImuSample<T>& sample)
{
        const T dt = sample.t - state.t_prev;
        if (!(dt > 0))
        {
                throw Error(ErrorKind::non_monotonic_time, "sample time " + std::to_string(sample.t)
                                                                   + " does not follow " + std::to_string(state.t_prev));
        }
        if (dt > T(kMaxTimeStep))
        {
                throw Error(ErrorKind::dt_too_large, "time step " + std::to_string(dt) + " s exceeds 0.1 s");
        }
        const Matrix3<T>& r = state.attitude;
        return orthogonalize<T>(r + r * skew(sample.gyro) * dt);
}

template <typename T>
[[nodiscard]] Vector3<T> predict_gravity(const Matrix3<T>& propagated, const Vector3<T>& g_ref)
{
        return propagated.transpose() * g_ref;
}

template <typename T>
[[nodiscard]] Vector3<T> compute_residual(const Vector3<T>& measured, const Vector3<T>& predicted)
{
        return measured - predicted;
}

/// Component-wise blend predicted + K (measured - predicted). The result is
/// not normalized.
template <typename T>
[[nodiscard]] Vector3<T> update_gravity(const Vector3<T>& predicted, const Vector3<T>& measured,
                                        const GainMatrix<T>& gains)
{
        const Vector3<T> blended = predicted + gains.diagonal.cwiseProduct(measured - predicted);
        if (!(blended.norm() >= T(kDegenerateNorm)))
        {
                throw Error(ErrorKind::degenerate_gravity, "updated gravity norm below 1e-6");
        }
        return blended;
}

/// Rebuilds the attitude from a unit body-frame gravity direction. The
/// pseudo-magnetic vector (1, 0, 0) of the reference frame is carried into
/// the body frame with the propagated attitude, so the update only tilts
/// the estimate: the body direction that the propagated attitude mapped to
/// north stays in the north-down plane.
template <typename T>
[[nodiscard]] Matrix3<T> triad_reconstruct(const Vector3<T>& gravity_body, const Matrix3<T>& propagated,
                                           const Vector3<T>& g_ref)
{
        if (std::abs(g_ref.norm() - T(1)) > T(1e-9))
        {
                throw Error(ErrorKind::invalid_argument, "reference gravity must be a unit vector");
        }

        const Vector3<T> m_ref = pseudo_north_ref<T>();
        const Vector3<T> m_body = propagated.transpose() * m_ref;

        const Vector3<T> cross_ref = g_ref.cross(m_ref);
        const Vector3<T> cross_body = gravity_body.cross(m_body);
        if (cross_ref.norm() < T(kDegenerateNorm) || cross_body.norm() < T(kDegenerateNorm))
        {
                throw Error(ErrorKind::degenerate_triad, "gravity parallel to pseudo-magnetic direction");
        }

        Matrix3<T> ref_from_t;
        ref_from_t.col(0) = g_ref;
        ref_from_t.col(1) = cross_ref.normalized();
        ref_from_t.col(2) = ref_from_t.col(0).cross(ref_from_t.col(1)).normalized();

        Matrix3<T> body_from_t;
        body_from_t.col(0) = gravity_body;
        body_from_t.col(1) = cross_body.normalized();
        body_from_t.col(2) = body_from_t.col(0).cross(body_from_t.col(1)).normalized();

        return ref_from_t * body_from_t.transpose();
}

template <typename P, typename T>
concept GainProvider = requires(P& provider, const Vector3<T>& residual) {
        { provider(residual) } -> std::convertible_to<GainMatrix<T>>;
};

template <typename T>
struct ConstantGains
{
        GainMatrix<T> gains;

        GainMatrix<T> operator()(const Vector3<T>&) const
        {
                return gains;
        }
};

template <typename T>
struct StepResult
{
        FilterState<T> state;
        StepTrace<T> trace;
};

/// One filter iteration. A degenerate Triad falls back to the gyro-only
/// attitude and is flagged in the trace.
template <typename T, GainProvider<T> Provider>
[[nodiscard]] StepResult<T> step(const FilterState<T>& state, const ImuSample<T>& sample, Provider&& provider)
{
        const Vector3<T> g_ref = gravity_ref<T>();

        StepTrace<T> trace;
        trace.propagated = propagate_gyro(state, sample);
        trace.predicted_gravity = predict_gravity(trace.propagated, g_ref);
        trace.measured_gravity = gravity_direction(sample.acc);
        trace.residual = compute_residual(trace.measured_gravity, trace.predicted_gravity);
        trace.gains = provider(trace.residual);
        trace.blended_gravity = update_gravity(trace.predicted_gravity, trace.measured_gravity, trace.gains);
        trace.updated_gravity = trace.blended_gravity.normalized();
        if (trace.gains.diagonal.isZero(0))
        {
                // the Triad of an uncorrected gravity reproduces the propagated attitude
                trace.updated = trace.propagated;
                return {FilterState<T>{trace.updated, sample.t}, trace};
        }
        try
        {
                trace.updated = triad_reconstruct(trace.updated_gravity, trace.propagated, g_ref);
        }
        catch (const Error& e)
        {
                if (e.kind() != ErrorKind::degenerate_triad)
                {
                        throw;
                }
                trace.updated = trace.propagated;
                trace.degenerate_triad = true;
        }

        return {FilterState<T>{trace.updated, sample.t}, trace};
}
}
