#include <doctest.h>

#include <cmath>
#include <random>

#include "calib/sphere.hpp"
#include "oracles.hpp"

using namespace calib;

TEST_CASE("dist agrees with arccos away from the poles and is exact near them")
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const SpherePoint a = oracle::random_point(5, rng);
        const SpherePoint b = oracle::random_point(5, rng);
        CHECK(dist(a, b) == doctest::Approx(std::acos(a.coords().dot(b.coords()))).epsilon(1e-10));
        CHECK(dist(a, b) == doctest::Approx(dist(b, a)));
    }
    const SpherePoint p = oracle::random_point(4, rng);
    CHECK(dist(p, p) == 0.0);
    CHECK(dist(p, p.antipode()) == doctest::Approx(kPi));
    const SpherePoint q = exp_map(p, 1e-9 * oracle::random_tangent(p, rng));
    CHECK(dist(p, q) == doctest::Approx(1e-9).epsilon(1e-6));
}

TEST_CASE("grad_dist matches a finite-difference derivative of the distance")
{
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const SpherePoint c = oracle::random_point(6, rng);
        const SpherePoint q = oracle::random_point(6, rng);
        const Vec v = oracle::random_tangent(q, rng);
        const double fd = oracle::directional_derivative([&](const SpherePoint& x) { return dist(c, x); }, q, v);
        const TangentVector g = grad_dist(c, q);
        CHECK(g.norm() == doctest::Approx(1.0));
        CHECK(std::abs(g.vec.dot(q.coords())) < 1e-14);
        CHECK(g.dot(v) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("grad_dist is undefined at the center and its antipode")
{
    const SpherePoint c(Vec::Unit(3, 0));
    CHECK_THROWS_AS(grad_dist(c, c), SingularPoint);
    CHECK_THROWS_AS(grad_dist(c, c.antipode()), SingularPoint);
}

TEST_CASE("exp_map moves by the length of the tangent vector")
{
    std::mt19937_64 rng(3);
    for (double t : {0.0, 1e-8, 0.3, 1.5, 3.0}) {
        const SpherePoint p = oracle::random_point(5, rng);
        const Vec v = oracle::random_tangent(p, rng);
        const SpherePoint q = exp_map(p, t * v);
        CHECK(dist(p, q) == doctest::Approx(t).epsilon(1e-12));
        if (t > 0.0) CHECK(grad_dist(p, q).vec.dot(GeodesicRay(p, v).velocity(t)) == doctest::Approx(1.0));
    }
}

TEST_CASE("tangent_basis is orthonormal and tangent")
{
    std::mt19937_64 rng(4);
    const SpherePoint p = oracle::random_point(7, rng);
    const Mat B = tangent_basis(p);
    REQUIRE(B.cols() == 6);
    CHECK((B.transpose() * B - Mat::Identity(6, 6)).norm() < 1e-13);
    CHECK((B.transpose() * p.coords()).norm() < 1e-13);
}

TEST_CASE("SpherePoint rejects non-unit coordinates")
{
    CHECK_THROWS_AS(SpherePoint(Vec::Constant(3, 1.0)), DomainError);
    CHECK_THROWS_AS(SpherePoint::normalized(Vec::Zero(3)), DomainError);
}

TEST_CASE("BallSpec validates the instance")
{
    CHECK_NOTHROW(BallSpec::canonical(4, 4, 1.0));
    CHECK_THROWS_AS(BallSpec::canonical(3, 4, 1.0), InvalidSpec);
    CHECK_THROWS_AS(BallSpec::canonical(4, 1, 1.0), InvalidSpec);
    CHECK_THROWS_AS(BallSpec::canonical(4, 4, 1.7), InvalidSpec);
    CHECK_THROWS_AS(BallSpec::canonical(4, 4, 0.0), InvalidSpec);
    const SpherePoint p(Vec::Unit(4, 0));
    const SpherePoint y(Vec::Unit(4, 1));
    CHECK_THROWS_AS(BallSpec(3, 2, 1.0, p, y), InvalidSpec);
    CHECK_NOTHROW(BallSpec(3, 2, kPi / 2, p, y));

    const BallSpec spec = BallSpec::canonical(5, 4, 0.8);
    CHECK(dist(spec.p, spec.y) == doctest::Approx(0.8));
    CHECK(spec.half_dim() == 2);
}

TEST_CASE("gamma runs from y at s = R to -p at s = pi")
{
    const BallSpec spec = BallSpec::canonical(4, 4, 0.7);
    const GeodesicRay g = gamma_of(spec);
    CHECK(dist(g.point(0.7), spec.y) < 1e-12);
    CHECK(dist(g.point(kPi), spec.p.antipode()) < 1e-12);
    CHECK(dist(g.point(2.0), spec.p) == doctest::Approx(2.0));
}

TEST_CASE("cos_radius is exactly zero at the hemisphere")
{
    CHECK(cos_radius(kPi / 2) == 0.0);
    CHECK(cos_radius(1.0) == doctest::Approx(std::cos(1.0)));
}

TEST_CASE("sine_power_integral matches quadrature on a grid")
{
    double worst = 0.0;
    for (int k = 2; k <= 10; ++k) {
        for (int i = 0; i < 50; ++i) {
            const double r = kPi * i / 49.0;
            worst = std::max(worst, std::abs(sine_power_integral(k, r) - oracle::sine_power_integral(k, r)));
        }
    }
    CHECK(worst <= 1e-10);
    CHECK(sine_power_integral(4, kPi / 3) == doctest::Approx(5.0 / 24.0).epsilon(1e-14));
    CHECK(sine_power_integral(2, 1.0) == doctest::Approx(1.0 - std::cos(1.0)));
    CHECK_THROWS_AS(sine_power_integral(1, 0.5), DomainError);
    CHECK_THROWS_AS(sine_power_integral(4, 3.5), DomainError);
}

TEST_CASE("sine_power_integral is accurate for very small r")
{
    for (int k : {2, 5, 8}) {
        const double r = 1e-4;
        CHECK(sine_power_integral(k, r) == doctest::Approx(std::pow(r, k) / k).epsilon(1e-7));
    }
}

TEST_CASE("reduction identity carries 1/(k-1) on the boundary term")
{
    for (int k = 4; k <= 10; ++k) {
        for (double R : {0.3, 0.9, 1.4}) {
            const double lhs = sine_power_integral(k, R);
            const double boundary = std::cos(R) * std::pow(std::sin(R), k - 2);
            const double lower = (k - 2.0) / (k - 1.0) * sine_power_integral(k - 2, R);
            CHECK(std::abs(lhs - (-boundary / (k - 1.0) + lower)) < 1e-13);
            // The 1/(k-2) variant leaves an O(1) discrepancy.
            CHECK(std::abs(lhs - (-boundary / (k - 2.0) + lower)) > 1e-8);
        }
    }
}

TEST_CASE("ball volume and sphere areas")
{
    CHECK(unit_sphere_area(0) == doctest::Approx(2.0));
    CHECK(unit_sphere_area(1) == doctest::Approx(2.0 * kPi));
    CHECK(unit_sphere_area(2) == doctest::Approx(4.0 * kPi));
    CHECK(vol_ball(2, 0.5) == doctest::Approx(2.0 * kPi * (1.0 - std::cos(0.5))));
    CHECK(vol_ball(3, kPi) == doctest::Approx(2.0 * kPi * kPi));
}

TEST_CASE("law of cosines identities hold along gamma")
{
    std::mt19937_64 rng(5);
    const BallSpec spec = BallSpec::canonical(5, 4, 0.9);
    const Mat B = tangent_basis(spec.p);
    for (int i = 0; i < 30; ++i) {
        std::normal_distribution<double> normal;
        Vec g(B.cols());
        for (auto& v : g) v = normal(rng);
        const SpherePoint x = exp_map(spec.p, 0.9 * B * g / g.norm());
        for (double s : {1.0, 2.0, 3.0}) {
            const auto res = law_of_cosines_residuals(spec, x, s);
            CHECK(std::abs(res.at_x) < 1e-12);
            CHECK(std::abs(res.at_gamma) < 1e-12);
            CHECK(std::abs(res.derivative) < 1e-12);
        }
    }
}
