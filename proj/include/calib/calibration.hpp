#pragma once

// The calibration field
//   W = phi_weight * Phi_p + z_weight * Z,   Z = Psi_y + int_R^pi h(s) Psi_{gamma(s)} ds
// and the checks on its boundary behavior, singularity and Euclidean limit.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "calib/h_system.hpp"
#include "calib/quadrature.hpp"
#include "calib/radial.hpp"
#include "calib/sphere.hpp"

namespace calib {

struct FieldWeights {
    double phi_weight = 0.0;      ///< cos R sin^{k-2} R / ((k-2) I_{k-2}(R))
    double phi_weight_alt = 0.0;  ///< 1 - ((k-1)/(k-2)) I_k(R) / I_{k-2}(R)
    double z_weight = 0.0;        ///< 2 I_k(R) / I_k(pi)
};

/// Weights of Phi_p and Z. For k = 2 the Phi_p weight is cos R.
FieldWeights field_weights(int k, double R);

/// Source of the weight function h of the line-integral term.
enum class HSource { Ode, ClosedForm };

struct BuildOptions {
    HSolveOptions ode;
    QuadratureSpec quad;
    HSource h_source = HSource::Ode;
    /// Evaluation points closer than this to y are rejected.
    double exclusion_radius = 1e-3;
};

class CompositeField : public LineIntegralTerm {
public:
    CompositeField(BallSpec spec, double phi_weight, double z_weight,
                   std::function<double(double)> h, double h_integral, BuildOptions options);

    const BallSpec& spec() const noexcept { return spec_; }
    int k() const noexcept { return spec_.k; }
    double phi_weight() const noexcept { return phi_weight_; }
    double z_weight() const noexcept { return z_weight_; }
    const GeodesicRay& gamma() const noexcept { return gamma_; }
    const BuildOptions& options() const noexcept { return options_; }
    bool has_line_term() const noexcept { return static_cast<bool>(h_); }
    /// integral of h over [R, pi] (0 without a line term).
    double h_integral() const noexcept { return h_integral_; }
    double h(double s) const { return h_ ? h_(s) : 0.0; }

    /// The two point-centered atoms: phi_weight Phi_p and z_weight Psi_y.
    std::vector<RadialAtom> atoms() const;

    TangentVector eval(const SpherePoint& q) const;
    /// Z = Psi_y + line integral, unweighted.
    TangentVector eval_z(const SpherePoint& q) const;
    /// int_R^pi h(s) Psi_{gamma(s)}(q) ds, unweighted.
    TangentVector eval_line_integral(const SpherePoint& q) const;

    DivergenceDecomposition divergence(const SpherePoint& q) const;
    double sup_div(const SpherePoint& q) const;
    double div_along_plane(const PlaneBasis& plane) const;

    void accumulate_divergence(DivergenceDecomposition& out) const override;

    CompositeField with_weights(double phi_weight, double z_weight) const;
    CompositeField with_quadrature(const QuadratureSpec& quad) const;

    /// Panel breakpoints for the line integral at q, clustered around the
    /// parameter s* where gamma(s) is closest to q.
    std::vector<double> breakpoints(const SpherePoint& q) const;

private:
    void check_point(const SpherePoint& q) const;
    template <class F>
    auto integrate_line(const SpherePoint& q, const F& integrand) const;

    BallSpec spec_;
    double phi_weight_;
    double z_weight_;
    std::function<double(double)> h_;
    double h_integral_;
    BuildOptions options_;
    GeodesicRay gamma_;
    RadialProfile phi_;
    RadialProfile psi_;
};

/// Builds W for even k >= 2. Throws UnsupportedDimension for odd k.
CompositeField build_W(const BallSpec& spec, const BuildOptions& options = {});

/// Seeded points on the boundary sphere keeping distance >= band from y.
std::vector<SpherePoint> boundary_samples(const BallSpec& spec, int count, std::uint64_t seed,
                                          double band = 0.05);

struct TangencyReport {
    int samples = 0;
    double max_residual = 0.0;           ///< max |<W, grad d_p>|
    double max_identity_residual = 0.0;  ///< max |(k-1) sin R <Z, grad d_p> + cos R (1 + int h)|
    double phi_component = 0.0;          ///< <Phi_p, grad d_p> on the boundary, = phi(R)
};

TangencyReport tangency_residual(const CompositeField& field,
                                 std::span<const SpherePoint> boundary_points);

struct SingularityRow {
    double r = 0.0;
    double scaled_deviation = 0.0;    ///< r^{k-1} |W + 2 I(R) r^{1-k} grad d_y|
    double scaled_magnitude = 0.0;    ///< r^{k-1} |W|
    double scaled_line_term = 0.0;    ///< r^{k-1} z_weight |line integral|
};

/// Approaches y along the geodesic leaving y in the given interior tangent
/// direction (default: toward p).
std::vector<SingularityRow> singularity_scaling(const CompositeField& field,
                                                std::span<const double> radii,
                                                std::optional<Vec> direction = std::nullopt);

// ---- Euclidean limit -------------------------------------------------------

/// int_0^1 (t x - y) / |t x - y|^k dt.
Vec euclid_integral_term(int k, const Vec& x, const Vec& y, const QuadratureSpec& quad = {});
/// The same integral written as int_1^inf u^{k-3} (x - u y) / |x - u y|^k du.
Vec euclid_integral_term_inverted(int k, const Vec& x, const Vec& y,
                                  const QuadratureSpec& quad = {});
/// W_0(x) = x/k - (2/k)(x-y)/|x-y|^k - ((k-2)/k) int_0^1 (tx-y)/|tx-y|^k dt.
Vec euclid_limit_field(int k, const Vec& x, const Vec& y, const QuadratureSpec& quad = {});

/// Seeded points of the unit ball of R^n at distance >= band from y = e_1.
std::vector<Vec> euclid_samples(int n, int count, std::uint64_t seed, double band = 0.05);

struct EuclidRow {
    double R = 0.0;
    double max_error = 0.0;
};

struct EuclidReport {
    int k = 0;
    std::vector<EuclidRow> rows;
    /// Least-squares slope of log(max_error) against log(R).
    double slope = 0.0;
    bool decreasing = false;
};

/// Pulls the spherical field back through exp_p o (scaling by R) and compares
/// it with W_0 at the given unit-ball samples.
EuclidReport euclid_limit_compare(int k, int n, std::span<const double> R_seq,
                                  std::span<const Vec> samples, const BuildOptions& options = {});

}  // namespace calib
