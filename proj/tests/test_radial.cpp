#include <doctest.h>

#include <cmath>
#include <random>

#include "calib/radial.hpp"
#include "oracles.hpp"

using namespace calib;

namespace {

// sum_i <D_{e_i} X, e_i> by central differences along geodesics.
template <class Field>
double fd_divergence(const Field& X, const PlaneBasis& plane, double h = 1e-5)
{
    double total = 0.0;
    for (int i = 0; i < plane.k(); ++i) {
        const Vec e = plane.vectors.col(i);
        const Vec plus = X(exp_map(plane.base, h * e));
        const Vec minus = X(exp_map(plane.base, -h * e));
        total += (plus - minus).dot(e) / (2.0 * h);
    }
    return total;
}

PlaneBasis random_plane(const SpherePoint& q, int k, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    const Mat B = tangent_basis(q);
    Mat G(B.cols(), k);
    for (int i = 0; i < G.size(); ++i) G.data()[i] = normal(rng);
    const Eigen::HouseholderQR<Mat> qr(G);
    const Mat Q = qr.householderQ() * Mat::Identity(B.cols(), k);
    return PlaneBasis(q, B * Q);
}

}  // namespace

TEST_CASE("a-coefficients follow the recursion")
{
    const auto a2 = a_coeffs(2);
    REQUIRE(a2.size() == 2);
    CHECK(a2[0] == doctest::Approx(1.0 / 3.0));
    CHECK(a2[1] == doctest::Approx(1.0 / 3.0));
    const auto a3 = a_coeffs(3);
    REQUIRE(a3.size() == 3);
    CHECK(a3[0] == doctest::Approx(1.0 / 5.0));
    CHECK(a3[1] == doctest::Approx(1.0 / 5.0));
    CHECK(a3[2] == doctest::Approx(2.0 / 15.0));
}

TEST_CASE("phi value at a reference point")
{
    CHECK(phi_profile(4).value(kPi / 3) == doctest::Approx(0.32075).epsilon(1e-4));
    CHECK(phi_profile(4).value(kPi / 3) == doctest::Approx((5.0 / 24.0) / std::pow(std::sqrt(3.0) / 2, 3)));
}

TEST_CASE("even-k closed form of psi agrees with the reflected phi")
{
    for (int k = 2; k <= 12; k += 2) {
        for (int i = 1; i <= 60; ++i) {
            const double r = kPi * i / 60.0;
            const double general = psi_general(k, r);
            CHECK(psi_even_closed(k, r) == doctest::Approx(general).epsilon(1e-11));
        }
    }
}

TEST_CASE("odd-k psi matches the explicit k = 3 expression")
{
    for (double r : {0.2, 1.0, 2.0, 3.0}) {
        const double expected = (r - std::sin(r) * std::cos(r) - kPi) / (2.0 * std::sin(r) * std::sin(r));
        CHECK(psi_general(3, r) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("profiles solve f' = 1 - (k-1) f cot r")
{
    for (int k : {2, 3, 4, 6, 8}) {
        for (const RadialProfile& prof : {phi_profile(k), psi_profile(k)}) {
            for (double r : {0.3, 1.1, 2.0, 2.8}) {
                const double h = 1e-6;
                const double fd = (prof.value(r + h) - prof.value(r - h)) / (2.0 * h);
                CHECK(prof.deriv(r) == doctest::Approx(fd).epsilon(1e-7));
                CHECK(prof.deriv(r) ==
                      doctest::Approx(1.0 - (k - 1.0) * prof.value(r) / std::tan(r)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("regular-pole limits")
{
    for (int k : {2, 4, 6}) {
        CHECK(phi_profile(k).radial_term(0.0) == doctest::Approx(1.0 / k));
        CHECK(phi_profile(k).radial_term(1e-6) == doctest::Approx(1.0 / k).epsilon(1e-8));
        CHECK(psi_profile(k).radial_term(kPi) == doctest::Approx(1.0 / k));
        CHECK(std::abs(phi_profile(k).anisotropic_term(0.0)) < 1e-15);
    }
    CHECK_THROWS_AS(psi_profile(4).value(0.0), SingularPoint);
    CHECK_THROWS_AS(phi_profile(4).value(kPi), DomainError);
}

TEST_CASE("eval_atom: singular pole throws, regular pole vanishes")
{
    const SpherePoint c(Vec::Unit(4, 0));
    CHECK_THROWS_AS(eval_atom(RadialAtom{c, psi_profile(4), 1.0}, c), SingularPoint);
    CHECK_THROWS_AS(eval_atom(RadialAtom{c, phi_profile(4), 1.0}, c.antipode()), SingularPoint);
    CHECK(eval_atom(RadialAtom{c, phi_profile(4), 1.0}, c).norm() == 0.0);
    CHECK(eval_atom(RadialAtom{c, psi_profile(4), 1.0}, c.antipode()).norm() == 0.0);
}

TEST_CASE("divergence along a plane matches finite differences")
{
    std::mt19937_64 rng(11);
    for (int k : {2, 4, 6}) {
        for (int trial = 0; trial < 10; ++trial) {
            const SpherePoint c = oracle::random_point(k + 3, rng);
            const SpherePoint q = oracle::random_point(k + 3, rng);
            const PlaneBasis plane = random_plane(q, k, rng);
            for (const RadialAtom& atom : {RadialAtom{c, phi_profile(k), 0.7}, RadialAtom{c, psi_profile(k), -1.3}}) {
                auto X = [&](const SpherePoint& x) { return eval_atom(atom, x).vec; };
                CHECK(div_along_plane(atom, plane) == doctest::Approx(fd_divergence(X, plane)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("supremum over planes dominates random planes and is attained")
{
    std::mt19937_64 rng(12);
    for (int k : {2, 3}) {
        const SpherePoint q = oracle::random_point(5, rng);
        const std::vector<RadialAtom> atoms{
            {oracle::random_point(5, rng), phi_profile(k), 0.8},
            {oracle::random_point(5, rng), psi_profile(k), 0.5},
        };
        DivergenceDecomposition d(q, k);
        for (const auto& a : atoms) d.add_atom(a);
        const double sup = d.supremum();
        // Random search followed by randomized hill climbing over planes.
        const Mat B = tangent_basis(q);
        std::normal_distribution<double> normal;
        auto plane_of = [&](const Mat& G) {
            const Eigen::HouseholderQR<Mat> qr(G);
            return PlaneBasis(q, B * (qr.householderQ() * Mat::Identity(B.cols(), k)));
        };
        Mat best_G(B.cols(), k);
        double best = -1e300;
        for (int i = 0; i < 20000; ++i) {
            Mat G(B.cols(), k);
            for (int t = 0; t < G.size(); ++t) G.data()[t] = normal(rng);
            const double v = d.along_plane(plane_of(G));
            CHECK(v <= sup + 1e-12);
            if (v > best) {
                best = v;
                best_G = G;
            }
        }
        for (double step = 0.1; step > 1e-7; step *= 0.5) {
            for (int i = 0; i < 300; ++i) {
                Mat G = best_G;
                for (int t = 0; t < G.size(); ++t) G.data()[t] += step * normal(rng);
                const double v = d.along_plane(plane_of(G));
                if (v > best) {
                    best = v;
                    best_G = G;
                }
            }
        }
        CHECK(best <= sup + 1e-12);
        CHECK(best >= sup - 1e-8);
        CHECK(d.along_plane(d.maximizing_plane()) == doctest::Approx(sup).epsilon(1e-12));
        CHECK(sup_div(atoms, q, k) == doctest::Approx(sup));
    }
}

TEST_CASE("each unit atom has divergence at most one along every plane")
{
    std::mt19937_64 rng(13);
    for (int k : {2, 4, 6}) {
        for (int i = 0; i < 100; ++i) {
            const SpherePoint c = oracle::random_point(k + 2, rng);
            const SpherePoint q = oracle::random_point(k + 2, rng);
            for (const RadialAtom& atom : {RadialAtom{c, phi_profile(k), 1.0}, RadialAtom{c, psi_profile(k), 1.0}}) {
                CHECK(sup_div(std::span(&atom, 1), q, k) <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("boundary inner product of Psi_y with the normal")
{
    std::mt19937_64 rng(14);
    for (int k : {4, 6, 8}) {
        const BallSpec spec = BallSpec::canonical(k + 1, k, 0.9);
        const auto a = a_coeffs(k / 2);
        const Mat B = tangent_basis(spec.p);
        for (int i = 0; i < 20; ++i) {
            std::normal_distribution<double> normal;
            Vec g(B.cols());
            for (auto& v : g) v = normal(rng);
            const SpherePoint x = exp_map(spec.p, spec.R * B * g / g.norm());
            const double r = dist(x, spec.y);
            if (r < 0.05) continue;
            const double lhs = std::tan(spec.R) *
                               eval_atom(RadialAtom{spec.y, psi_profile(k), 1.0}, x).dot(grad_dist(spec.p, x).vec);
            double rhs = 0.0;
            for (int m = 0; m < k / 2; ++m) rhs -= a[m] * std::pow(1.0 - std::cos(r), -m);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("boundary inner product for k = 3")
{
    std::mt19937_64 rng(15);
    const BallSpec spec = BallSpec::canonical(4, 3, 1.1);
    const Mat B = tangent_basis(spec.p);
    for (int i = 0; i < 20; ++i) {
        std::normal_distribution<double> normal;
        Vec g(B.cols());
        for (auto& v : g) v = normal(rng);
        const SpherePoint x = exp_map(spec.p, spec.R * B * g / g.norm());
        const double r = dist(x, spec.y);
        if (r < 0.05) continue;
        const double lhs = std::tan(spec.R) *
                           eval_atom(RadialAtom{spec.y, psi_profile(3), 1.0}, x).dot(grad_dist(spec.p, x).vec);
        const double rhs = (r - std::sin(r) * std::cos(r) - kPi) / (2.0 * (1.0 + std::cos(r)) * std::sin(r));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("PlaneBasis validates its vectors")
{
    const SpherePoint q(Vec::Unit(4, 0));
    Mat V = Mat::Zero(4, 2);
    V(1, 0) = 1.0;
    V(2, 1) = 1.0;
    CHECK_NOTHROW(PlaneBasis(q, V));
    Mat bad = V;
    bad(0, 0) = 0.5;
    CHECK_THROWS_AS(PlaneBasis(q, bad), DomainError);
    Mat skew = V;
    skew(1, 1) = 0.3;
    CHECK_THROWS_AS(PlaneBasis(q, skew), DomainError);
}
