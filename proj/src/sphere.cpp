#include "calib/sphere.hpp"

#include <cmath>
#include <string>

namespace calib {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kPoleTol = 1e-9;
constexpr double kSpecTol = 1e-10;

// sum_m c_m sin^{k+2m}(r)/(k+2m), c_m = (2m)!/(4^m m!^2); from t = sin s.
// All terms are positive, so there is no cancellation for small r.
double sine_power_integral_series(int k, double r)
{
    const double t = std::sin(r);
    const double t2 = t * t;
    double power = std::pow(t, k);
    double c = 1.0;
    double sum = 0.0;
    for (int m = 0; m < 2000; ++m) {
        const double term = c * power / (k + 2 * m);
        sum += term;
        if (term < 1e-18 * sum) break;
        c *= (2.0 * m + 1.0) / (2.0 * m + 2.0);
        power *= t2;
    }
    return sum;
}

}  // namespace

SpherePoint::SpherePoint(Vec coords) : coords_(std::move(coords))
{
    if (coords_.size() < 2 || std::abs(coords_.norm() - 1.0) > kUnitTol) {
        throw DomainError("SpherePoint: coordinates are not a unit vector");
    }
}

SpherePoint SpherePoint::normalized(const Vec& v)
{
    const double nv = v.norm();
    if (!(nv > 0.0) || !std::isfinite(nv)) {
        throw DomainError("SpherePoint::normalized: zero or non-finite vector");
    }
    return SpherePoint(v / nv);
}

double dist(const SpherePoint& a, const SpherePoint& b)
{
    // Equal to arccos(<a,b>) but accurate near 0 and pi.
    const double minus = (a.coords() - b.coords()).norm();
    const double plus = (a.coords() + b.coords()).norm();
    return 2.0 * std::atan2(minus, plus);
}

TangentVector grad_dist(const SpherePoint& center, const SpherePoint& q)
{
    const double d = dist(center, q);
    if (d < kPoleTol || d > kPi - kPoleTol) {
        throw SingularPoint("grad_dist: point coincides with the center or its antipode");
    }
    const Vec& c = center.coords();
    const Vec& x = q.coords();
    // <q,c> q - c, rearranged so the small difference is formed first.
    Vec v;
    if (x.dot(c) >= 0.0) {
        const Vec diff = x - c;
        v = diff - (0.5 * diff.squaredNorm()) * x;
    } else {
        const Vec sum = x + c;
        v = (0.5 * sum.squaredNorm()) * x - sum;
    }
    v -= v.dot(x) * x;
    return TangentVector{q, v / v.norm()};
}

Vec project_tangent(const SpherePoint& base, const Vec& v)
{
    return v - v.dot(base.coords()) * base.coords();
}

SpherePoint exp_map(const SpherePoint& base, const Vec& v)
{
    const double t = v.norm();
    if (t == 0.0) return base;
    return SpherePoint::normalized(std::cos(t) * base.coords() + (std::sin(t) / t) * v);
}

Mat tangent_basis(const SpherePoint& base)
{
    const int m = base.ambient_dim();
    // Householder-completed basis of R^m; the trailing m-1 columns span base^perp.
    Mat seed = Mat::Zero(m, 1);
    seed.col(0) = base.coords();
    Eigen::HouseholderQR<Mat> qr(seed);
    Mat q = qr.householderQ() * Mat::Identity(m, m);
    return q.rightCols(m - 1);
}

GeodesicRay::GeodesicRay(SpherePoint origin, Vec direction)
    : origin_(std::move(origin)), direction_(std::move(direction))
{
    if (std::abs(direction_.norm() - 1.0) > 1e-10 ||
        std::abs(direction_.dot(origin_.coords())) > 1e-10) {
        throw DomainError("GeodesicRay: direction must be a unit tangent vector at the origin");
    }
}

SpherePoint GeodesicRay::point(double s) const
{
    return SpherePoint::normalized(std::cos(s) * origin_.coords() + std::sin(s) * direction_);
}

Vec GeodesicRay::velocity(double s) const
{
    return -std::sin(s) * origin_.coords() + std::cos(s) * direction_;
}

BallSpec::BallSpec(int n_, int k_, double R_, SpherePoint p_, SpherePoint y_)
    : n(n_), k(k_), R(R_), p(std::move(p_)), y(std::move(y_))
{
    if (n < 2) throw InvalidSpec("BallSpec: ambient dimension n must be at least 2");
    if (k < 2 || k > n) throw InvalidSpec("BallSpec: need 2 <= k <= n");
    if (!(R > 0.0) || R > kPi / 2 + 1e-15) throw InvalidSpec("BallSpec: R must lie in (0, pi/2]");
    if (p.sphere_dim() != n || y.sphere_dim() != n) {
        throw InvalidSpec("BallSpec: points must live in R^{n+1}");
    }
    if (std::abs(dist(p, y) - R) > kSpecTol) {
        throw InvalidSpec("BallSpec: dist(p, y) differs from R");
    }
}

BallSpec BallSpec::canonical(int n, int k, double R)
{
    if (n < 2) throw InvalidSpec("BallSpec: ambient dimension n must be at least 2");
    Vec p = Vec::Zero(n + 1);
    p(0) = 1.0;
    Vec y = Vec::Zero(n + 1);
    y(0) = std::cos(R);
    y(1) = std::sin(R);
    return BallSpec(n, k, R, SpherePoint(p), SpherePoint::normalized(y));
}

GeodesicRay gamma_of(const BallSpec& spec)
{
    const Vec t = project_tangent(spec.p, spec.y.coords());
    if (t.norm() < 1e-14) throw InvalidSpec("gamma_of: y coincides with p");
    return GeodesicRay(spec.p, t / t.norm());
}

double cos_radius(double R)
{
    if (std::abs(R - kPi / 2) < 1e-14) return 0.0;
    return std::cos(R);
}

double sine_power_integral(int k, double r)
{
    if (k < 2) throw DomainError("sine_power_integral: k must be >= 2");
    if (!(r >= 0.0) || r > kPi + 1e-15) {
        throw DomainError("sine_power_integral: r outside [0, pi], got " + std::to_string(r));
    }
    if (r == 0.0) return 0.0;
    if (r < 1.0) return sine_power_integral_series(k, r);

    const double c = std::cos(r);
    const double s = std::sin(r);
    // Base cases, then I_m = -cos r sin^{m-2} r/(m-1) + (m-2)/(m-1) I_{m-2}.
    int m = (k % 2 == 0) ? 2 : 3;
    double value = (m == 2) ? 2.0 * std::pow(std::sin(0.5 * r), 2) : 0.5 * (r - s * c);
    while (m < k) {
        m += 2;
        value = -c * std::pow(s, m - 2) / (m - 1) + (m - 2.0) / (m - 1.0) * value;
    }
    return value;
}

double unit_sphere_area(int m)
{
    const double half = 0.5 * (m + 1);
    return 2.0 * std::pow(kPi, half) / std::tgamma(half);
}

double vol_ball(int k, double r)
{
    return unit_sphere_area(k - 1) * sine_power_integral(k, r);
}

LawOfCosinesResiduals law_of_cosines_residuals(const BallSpec& spec, const SpherePoint& x,
                                               double s)
{
    const GeodesicRay ray = gamma_of(spec);
    const SpherePoint g = ray.point(s);
    const double d = dist(x, g);
    if (d < kPoleTol) throw SingularPoint("law_of_cosines_residuals: x coincides with gamma(s)");

    const double cR = std::cos(spec.R);
    const double sR = std::sin(spec.R);
    const double cd = std::cos(d);
    const double sd = std::sin(d);

    LawOfCosinesResiduals out;
    const Vec grad_p_at_x = grad_dist(spec.p, x).vec;
    const Vec grad_g_at_x = grad_dist(g, x).vec;
    out.at_x = sR * sd * grad_g_at_x.dot(grad_p_at_x) - (std::cos(s) - cR * cd);

    const Vec grad_x_at_g = grad_dist(x, g).vec;
    // At s = pi the gradient of d_p is undefined but sin(s) kills the term.
    const double at_g_inner =
        (s < kPi - kPoleTol) ? grad_x_at_g.dot(grad_dist(spec.p, g).vec) : 0.0;
    out.at_gamma = std::sin(s) * sd * at_g_inner - (cR - std::cos(s) * cd);

    // d/ds (1 - cos d) = sin d <grad d_x, gamma'(s)>.
    const double derivative = sd * grad_x_at_g.dot(ray.velocity(s));
    out.derivative = std::sin(s) * derivative - (cR - std::cos(s) + std::cos(s) * (1.0 - cd));
    return out;
}

}  // namespace calib
