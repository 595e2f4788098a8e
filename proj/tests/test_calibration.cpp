#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "calib/calibration.hpp"
#include "oracles.hpp"

using namespace calib;

namespace {

double fd_divergence(const CompositeField& W, const PlaneBasis& plane, double h = 1e-5)
{
    double total = 0.0;
    for (int i = 0; i < plane.k(); ++i) {
        const Vec e = plane.vectors.col(i);
        const Vec plus = W.eval(exp_map(plane.base, h * e)).vec;
        const Vec minus = W.eval(exp_map(plane.base, -h * e)).vec;
        total += (plus - minus).dot(e) / (2.0 * h);
    }
    return total;
}

}  // namespace

TEST_CASE("weights: closed expressions for k = 4 and k = 6")
{
    for (double R : {0.2, 0.7, 1.1, 1.5}) {
        const FieldWeights w4 = field_weights(4, R);
        CHECK(w4.phi_weight == doctest::Approx(std::cos(R) * std::pow(std::cos(R / 2), 2)));
        CHECK(w4.z_weight == doctest::Approx(1.5 * sine_power_integral(4, R)));
        const FieldWeights w6 = field_weights(6, R);
        CHECK(w6.phi_weight == doctest::Approx(3.0 * std::pow(std::cos(R / 2), 4) * std::cos(R) / (2.0 + std::cos(R))));
        CHECK(w6.z_weight == doctest::Approx(15.0 / 8.0 * sine_power_integral(6, R)));
    }
}

TEST_CASE("weights: the two expressions for the Phi_p weight agree")
{
    for (int k : {4, 6, 8}) {
        for (int i = 0; i < 30; ++i) {
            const double R = 0.05 + 1.5 * i / 29.0;
            const FieldWeights w = field_weights(k, R);
            CHECK(std::abs(w.phi_weight - w.phi_weight_alt) <= 1e-12);
            CHECK(w.z_weight * sine_power_integral(k, kPi) == doctest::Approx(2.0 * sine_power_integral(k, R)));
        }
    }
    const FieldWeights w2 = field_weights(2, 0.6);
    CHECK(w2.phi_weight == doctest::Approx(std::cos(0.6)));
    CHECK(w2.z_weight == doctest::Approx(1.0 - std::cos(0.6)));
    CHECK_THROWS_AS(field_weights(5, 0.6), UnsupportedDimension);
}

TEST_CASE("hemisphere: the field is a multiple of Psi_y")
{
    const BallSpec spec = BallSpec::canonical(5, 4, kPi / 2);
    const CompositeField W = build_W(spec);
    CHECK(W.phi_weight() == 0.0);
    CHECK_FALSE(W.has_line_term());
    const auto pts = boundary_samples(spec, 32, 9);
    for (const auto& x : pts) {
        const Vec psi = eval_atom(RadialAtom{spec.y, psi_profile(4), 1.0}, x).vec;
        CHECK(std::abs(psi.dot(grad_dist(spec.p, x).vec)) < 1e-13);
    }
    CHECK(tangency_residual(W, pts).max_residual < 1e-13);
}

TEST_CASE("odd k is rejected")
{
    CHECK_THROWS_AS(build_W(BallSpec::canonical(5, 5, 0.8)), UnsupportedDimension);
}

TEST_CASE("tangency on the boundary sphere")
{
    for (int k : {4, 6}) {
        for (double R : {0.4, 1.0, kPi / 2 - 0.01}) {
            const BallSpec spec = BallSpec::canonical(k + 1, k, R);
            const CompositeField W = build_W(spec);
            const TangencyReport rep = tangency_residual(W, boundary_samples(spec, 64, 3));
            CHECK(rep.samples == 64);
            CHECK(rep.max_residual <= 1e-6);
            CHECK(rep.max_identity_residual <= 1e-6);
        }
    }
    const BallSpec spec = BallSpec::canonical(5, 4, kPi / 3);
    const TangencyReport rep = tangency_residual(build_W(spec), boundary_samples(spec, 4, 1));
    CHECK(rep.phi_component == doctest::Approx(0.32075).epsilon(1e-4));
}

TEST_CASE("boundary samples keep away from y and are seeded")
{
    const BallSpec spec = BallSpec::canonical(4, 4, 0.9);
    const auto a = boundary_samples(spec, 50, 17, 0.2);
    const auto b = boundary_samples(spec, 50, 17, 0.2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(dist(a[i], spec.y) >= 0.2);
        CHECK(dist(a[i], spec.p) == doctest::Approx(0.9));
        CHECK(a[i].coords() == b[i].coords());
    }
}

TEST_CASE("closed-form and ODE weights give the same field")
{
    std::mt19937_64 rng(21);
    for (int k : {4, 6}) {
        const BallSpec spec = BallSpec::canonical(k + 1, k, 0.8);
        BuildOptions closed;
        closed.h_source = HSource::ClosedForm;
        const CompositeField a = build_W(spec);
        const CompositeField b = build_W(spec, closed);
        CHECK(a.h_integral() == doctest::Approx(b.h_integral()).epsilon(1e-9));
        for (int i = 0; i < 10; ++i) {
            const SpherePoint q = exp_map(spec.p, 0.7 * oracle::random_tangent(spec.p, rng));
            CHECK((a.eval(q).vec - b.eval(q).vec).norm() < 1e-8);
        }
    }
}

TEST_CASE("evaluation is linear in the weights")
{
    const BallSpec spec = BallSpec::canonical(5, 4, 0.9);
    const CompositeField W = build_W(spec);
    std::mt19937_64 rng(22);
    const SpherePoint q = exp_map(spec.p, 0.5 * oracle::random_tangent(spec.p, rng));
    const Vec phi_only = W.with_weights(1.0, 0.0).eval(q).vec;
    const Vec z_only = W.with_weights(0.0, 1.0).eval(q).vec;
    const Vec combined = W.with_weights(0.3, -2.0).eval(q).vec;
    CHECK((combined - (0.3 * phi_only - 2.0 * z_only)).norm() < 1e-14 * (1.0 + combined.norm()));
    CHECK((z_only - W.eval_z(q).vec).norm() < 1e-15);
}

TEST_CASE("halving the quadrature tolerance changes W by less than twice the old tolerance")
{
    const BallSpec spec = BallSpec::canonical(7, 6, 0.9);
    const CompositeField W = build_W(spec);
    QuadratureSpec loose;
    loose.abs_tol = 1e-7;
    loose.rel_tol = 0.0;
    loose.max_subdiv = 400;
    QuadratureSpec tight = loose;
    tight.abs_tol = 0.5e-7;
    std::mt19937_64 rng(23);
    for (int i = 0; i < 10; ++i) {
        const SpherePoint q = exp_map(spec.p, 0.85 * oracle::random_tangent(spec.p, rng));
        const Vec a = W.with_quadrature(loose).eval(q).vec;
        const Vec b = W.with_quadrature(tight).eval(q).vec;
        CHECK((a - b).lpNorm<Eigen::Infinity>() < 2.0 * loose.abs_tol);
    }
}

TEST_CASE("fixed-node and adaptive line integrals agree")
{
    const BallSpec spec = BallSpec::canonical(5, 4, 1.0);
    const CompositeField W = build_W(spec);
    QuadratureSpec fixed;
    fixed.scheme = QuadratureSpec::Scheme::FixedNodes;
    fixed.fixed_nodes = 40;
    std::mt19937_64 rng(24);
    for (int i = 0; i < 10; ++i) {
        const SpherePoint q = exp_map(spec.p, 0.9 * oracle::random_tangent(spec.p, rng));
        CHECK((W.eval(q).vec - W.with_quadrature(fixed).eval(q).vec).norm() < 1e-8);
    }
}

TEST_CASE("line-integral breakpoints cluster at the closest point of gamma")
{
    const BallSpec spec = BallSpec::canonical(4, 4, 0.6);
    const CompositeField W = build_W(spec);
    const GeodesicRay g = gamma_of(spec);
    const SpherePoint q = exp_map(g.point(0.61), 1e-3 * Vec::Unit(5, 2));
    const auto cuts = W.breakpoints(q);
    REQUIRE_FALSE(cuts.empty());
    CHECK(std::any_of(cuts.begin(), cuts.end(), [](double c) { return std::abs(c - 0.61) < 1e-9; }));
    CHECK(cuts.size() > 5);
}

TEST_CASE("the antipode of p is singular unless the Phi_p weight and h vanish")
{
    // Near s = pi the atoms of the line integral sit next to -p, where
    // h(s) psi(pi - s) grows like (pi - s)^{2-k}.
    for (int k : {4, 6}) {
        const CompositeField W = build_W(BallSpec::canonical(k + 1, k, 0.9));
        const SpherePoint q = W.spec().p.antipode();
        CHECK_THROWS_AS(W.eval(q), SingularPoint);
        CHECK_THROWS_AS(W.eval_z(q), SingularPoint);
        const double h_near = W.h(kPi - 1e-3);
        const double psi_near = psi_profile(k).value(1e-3);
        CHECK(std::abs(h_near * psi_near) > 1.0);
    }
    const CompositeField half = build_W(BallSpec::canonical(5, 4, kPi / 2));
    CHECK(std::isfinite(half.eval(half.spec().p.antipode()).norm()));
}

TEST_CASE("points near y are rejected")
{
    const BallSpec spec = BallSpec::canonical(5, 4, 0.9);
    const CompositeField W = build_W(spec);
    std::mt19937_64 rng(1);
    const SpherePoint q = exp_map(spec.y, 1e-4 * oracle::random_tangent(spec.y, rng));
    CHECK_THROWS_AS(W.eval(q), SingularPoint);
}

TEST_CASE("divergence of W matches finite differences of the assembled field")
{
    std::mt19937_64 rng(25);
    for (int k : {4, 6}) {
        const BallSpec spec = BallSpec::canonical(k + 2, k, 0.9);
        const CompositeField W = build_W(spec);
        for (int i = 0; i < 5; ++i) {
            const SpherePoint q = exp_map(spec.p, 0.8 * oracle::random_tangent(spec.p, rng));
            const Mat B = tangent_basis(q);
            std::normal_distribution<double> normal;
            Mat G(B.cols(), k);
            for (int t = 0; t < G.size(); ++t) G.data()[t] = normal(rng);
            const Eigen::HouseholderQR<Mat> qr(G);
            const PlaneBasis plane(q, B * (qr.householderQ() * Mat::Identity(B.cols(), k)));
            CHECK(W.div_along_plane(plane) == doctest::Approx(fd_divergence(W, plane)).epsilon(1e-5));
        }
    }
}

TEST_CASE("singularity at y: leading coefficient and lower-order line term")
{
    const BallSpec spec = BallSpec::canonical(5, 4, kPi / 3);
    const CompositeField W = build_W(spec);
    const std::vector<double> radii{1e-1, 1e-2, 1e-3};
    const auto rows = singularity_scaling(W, radii);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].scaled_magnitude == doctest::Approx(5.0 / 12.0).epsilon(0.02));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].scaled_line_term < rows[i - 1].scaled_line_term);
        CHECK(rows[i].scaled_deviation < rows[i - 1].scaled_deviation);
    }
}

TEST_CASE("Euclidean limit field: reference values")
{
    const Vec y = Vec::Unit(3, 0);
    const Vec zero = Vec::Zero(3);
    CHECK((euclid_limit_field(2, zero, y) - y).norm() < 1e-14);
    CHECK((euclid_integral_term(4, zero, y) + y).norm() < 1e-12);
    CHECK((-(2.0 / 4.0) * euclid_integral_term(4, zero, y) - 0.5 * y).norm() < 1e-12);

    for (const Vec& x : euclid_samples(3, 10, 5)) {
        for (int k : {4, 6}) {
            CHECK((euclid_integral_term(k, x, y) - euclid_integral_term_inverted(k, x, y)).norm() <
                  1e-8 * (1.0 + euclid_integral_term(k, x, y).norm()));
        }
        CHECK(x.norm() <= 1.0);
        CHECK((x - y).norm() >= 0.05);
    }
}

TEST_CASE("Euclidean limit: the rescaled field converges to the limit field")
{
    const std::vector<double> R{1e-1, 1e-2, 1e-3};
    for (int k : {2, 4, 6}) {
        const auto pts = euclid_samples(k + 1, 16, 7);
        const EuclidReport rep = euclid_limit_compare(k, k + 1, R, pts);
        REQUIRE(rep.rows.size() == 3);
        CHECK(rep.decreasing);
        CHECK(rep.rows[1].max_error / rep.rows[0].max_error <= 0.3);
        CHECK(rep.rows[2].max_error < 1e-4);
    }
    CHECK_THROWS_AS(euclid_limit_compare(8, 9, R, euclid_samples(9, 2, 1)), UnsupportedDimension);
}
