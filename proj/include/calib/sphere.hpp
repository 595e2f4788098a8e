#pragma once

// Exact-formula geometry of the round unit sphere S^n, realized in R^{n+1}.

#include <Eigen/Dense>

#include "calib/errors.hpp"

namespace calib {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// A point of S^n stored as a unit vector of R^{n+1}.
class SpherePoint {
public:
    /// Throws DomainError unless |coords| = 1 within 1e-12.
    explicit SpherePoint(Vec coords);

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    static SpherePoint normalized(const Vec& v);

    const Vec& coords() const noexcept { return coords_; }
    int ambient_dim() const noexcept { return static_cast<int>(coords_.size()); }
    int sphere_dim() const noexcept { return ambient_dim() - 1; }
    SpherePoint antipode() const { return SpherePoint(-coords_); }

private:
    Vec coords_;
};

/// A vector in the tangent space T_base S^n, i.e. orthogonal to base.coords().
struct TangentVector {
    SpherePoint base;
    Vec vec;

    double dot(const Vec& other) const { return vec.dot(other); }
    double norm() const { return vec.norm(); }
};

/// Geodesic distance, in [0, pi].
double dist(const SpherePoint& a, const SpherePoint& b);

/// Unit gradient of d_center at q, pointing away from center.
/// Throws SingularPoint when q is within 1e-9 of center or of its antipode.
TangentVector grad_dist(const SpherePoint& center, const SpherePoint& q);

/// exp_base(v) for v tangent at base.
SpherePoint exp_map(const SpherePoint& base, const Vec& v);

/// Removes the normal component of v at base.
Vec project_tangent(const SpherePoint& base, const Vec& v);

/// Orthonormal basis (as columns) of T_base S^n.
Mat tangent_basis(const SpherePoint& base);

/// Unit-speed great circle s -> cos(s) origin + sin(s) direction.
class GeodesicRay {
public:
    GeodesicRay(SpherePoint origin, Vec direction);

    const SpherePoint& origin() const noexcept { return origin_; }
    const Vec& direction() const noexcept { return direction_; }

    SpherePoint point(double s) const;
    Vec velocity(double s) const;

private:
    SpherePoint origin_;
    Vec direction_;
};

/// A geodesic ball B^n_R(p) together with a chosen boundary point y.
struct BallSpec {
    int n = 0;
    int k = 0;
    double R = 0.0;
    SpherePoint p;
    SpherePoint y;

    /// Validates the instance; throws InvalidSpec.
    BallSpec(int n, int k, double R, SpherePoint p, SpherePoint y);

    /// p = e_0, y = cos(R) e_0 + sin(R) e_1 in R^{n+1}.
    static BallSpec canonical(int n, int k, double R);

    int half_dim() const noexcept { return k / 2; }
    bool even() const noexcept { return k % 2 == 0; }
};

GeodesicRay gamma_of(const BallSpec& spec);

/// cos(R), snapped to exactly 0 at the hemisphere radius.
double cos_radius(double R);

/// I_k(r) = integral of sin^{k-1} over [0, r]; k >= 2, r in [0, pi].
double sine_power_integral(int k, double r);

/// Euclidean area of the unit m-sphere.
double unit_sphere_area(int m);

/// Volume of a geodesic k-ball of radius r in S^n.
double vol_ball(int k, double r);

struct LawOfCosinesResiduals {
    double at_x = 0.0;        ///< vertex x of the triangle p, x, gamma(s)
    double at_gamma = 0.0;    ///< vertex gamma(s)
    double derivative = 0.0;  ///< s-derivative form of the gamma(s) identity
};

/// Residuals of the spherical law of cosines in the triangle p, x, gamma(s)
/// for x on the boundary sphere and s in (R, pi].
LawOfCosinesResiduals law_of_cosines_residuals(const BallSpec& spec,
                                               const SpherePoint& x, double s);

}  // namespace calib
