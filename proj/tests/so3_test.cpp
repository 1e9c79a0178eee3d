#include "dae/so3.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace dae;

TEST_CASE("skew matches the cross product")
{
        CHECK(skew(Vec3::Zero()).isZero(0));

        Mat3 ez;
        ez << 0, -1, 0, 1, 0, 0, 0, 0, 0;
        CHECK(skew(Vec3(0, 0, 1)) == ez);

        Mat3 w;
        w << 0, -3, 2, 3, 0, -1, -2, 1, 0;
        CHECK(skew(Vec3(1, 2, 3)) == w);

        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-10, 10);
        for (int i = 0; i < 1000; ++i)
        {
                const Vec3 a(u(rng), u(rng), u(rng));
                const Vec3 b(u(rng), u(rng), u(rng));
                const Mat3 s = skew(a);
                REQUIRE((s.transpose() + s).isZero(0));
                REQUIRE((s * b - a.cross(b)).norm() <= 1e-12 * (1 + a.norm() * b.norm()));
        }
}

TEST_CASE("orthogonalize examples")
{
        CHECK((orthogonalize<double>(Mat3::Identity()) - Mat3::Identity()).norm() < 1e-15);
        CHECK((orthogonalize<double>(1.001 * Mat3::Identity()) - Mat3::Identity()).norm() < 1e-12);

        const Mat3 rz = oracle::rot_z(std::numbers::pi / 6);
        const Mat3 raw = rz + Mat3::Constant(1e-3);
        const Mat3 r = orthogonalize(raw);
        CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((r - rz).norm() < 3e-3);
        CHECK((r - oracle::nearest_orthogonal(raw)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("orthogonalize agrees with the SVD oracle and is well behaved")
{
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> noise(-0.05, 0.05);
        for (int i = 0; i < 500; ++i)
        {
                const Mat3 q = oracle::random_rotation(rng);
                Mat3 x = oracle::random_rotation(rng);
                for (int k = 0; k < 9; ++k)
                {
                        x(k) += noise(rng);
                }
                const Mat3 r = orthogonalize(x);
                REQUIRE((r - oracle::nearest_orthogonal(x)).cwiseAbs().maxCoeff() < 1e-12);
                REQUIRE(std::abs(r.determinant() - 1) < 1e-9);
                // idempotent
                REQUIRE((orthogonalize(r) - r).cwiseAbs().maxCoeff() < 1e-12);
                // left-equivariant
                REQUIRE((orthogonalize<double>(q * x) - q * r).cwiseAbs().maxCoeff() < 1e-12);
                // already orthogonal input comes back unchanged
                REQUIRE((orthogonalize<double>(q) - q).cwiseAbs().maxCoeff() < 1e-12);
        }
}

TEST_CASE("orthogonalize rejects singular input")
{
        Mat3 m = Mat3::Identity();
        m(2, 2) = 0;
        CHECK_THROWS_AS((void)orthogonalize(m), Error);
        try
        {
                (void)orthogonalize(m);
        }
        catch (const Error& e)
        {
                CHECK(e.kind() == ErrorKind::singular_input);
        }
}

TEST_CASE("euler conversions")
{
        const EulerAngles<double> zero = to_euler<double>(Mat3::Identity());
        CHECK(zero.roll == 0);
        CHECK(zero.pitch == 0);
        CHECK(zero.yaw == 0);

        const EulerAngles<double> x = to_euler(oracle::rot_x(0.3));
        CHECK(x.roll == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(std::abs(x.pitch) < 1e-15);
        CHECK(std::abs(x.yaw) < 1e-15);

        CHECK(from_euler(EulerAngles<double>{0, 0, 0}) == Mat3::Identity());
        const Mat3 half = from_euler(EulerAngles<double>{std::numbers::pi, 0, 0});
        CHECK((half - Eigen::Vector3d(1, -1, -1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-15);

        const Mat3 m = from_euler(EulerAngles<double>{0.1, 0.2, 0.3});
        CHECK((m - oracle::rot_z(0.3) * oracle::rot_y(0.2) * oracle::rot_x(0.1)).cwiseAbs().maxCoeff() < 1e-15);
        const EulerAngles<double> back = to_euler(m);
        CHECK(std::abs(back.roll - 0.1) < 1e-12);
        CHECK(std::abs(back.pitch - 0.2) < 1e-12);
        CHECK(std::abs(back.yaw - 0.3) < 1e-12);
}

TEST_CASE("euler round trip on the non-degenerate domain")
{
        std::mt19937_64 rng(3);
        for (int i = 0; i < 2000; ++i)
        {
                const Mat3 r = oracle::random_rotation(rng);
                bool lock = true;
                const EulerAngles<double> e = to_euler(r, &lock);
                if (std::abs(e.pitch) >= std::numbers::pi / 2 - 1e-3)
                {
                        continue;
                }
                REQUIRE_FALSE(lock);
                REQUIRE(e.pitch >= -std::numbers::pi / 2);
                REQUIRE(e.pitch <= std::numbers::pi / 2);
                REQUIRE(e.roll > -std::numbers::pi);
                REQUIRE(e.roll <= std::numbers::pi);
                REQUIRE(e.yaw > -std::numbers::pi);
                REQUIRE(e.yaw <= std::numbers::pi);
                REQUIRE((from_euler(e) - r).cwiseAbs().maxCoeff() < 1e-9);
        }
}

TEST_CASE("gimbal lock zeroes roll")
{
        const Mat3 r = oracle::rot_z(0.4) * oracle::rot_y(std::numbers::pi / 2) * oracle::rot_x(0.25);
        bool lock = false;
        const EulerAngles<double> e = to_euler(r, &lock);
        CHECK(lock);
        CHECK(e.roll == 0);
        CHECK((from_euler(e) - r).cwiseAbs().maxCoeff() < 1e-6);
}
