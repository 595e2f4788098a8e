#pragma once

// Global checks: the divergence bound of W over all k-planes, the
// equality case on the totally geodesic k-sphere through p and y, the
// divergence-theorem area balance, and the k = 8 sign scan of h.

#include <cstdint>
#include <span>
#include <vector>

#include "calib/calibration.hpp"

namespace calib {

struct DivergenceRecord {
    Vec point;
    double dist_p = 0.0;
    double dist_y = 0.0;
    double sup_div = 0.0;
    double margin = 0.0;  ///< 1 - sup_div
};

struct DivergenceReport {
    int n = 0;
    int k = 0;
    double R = 0.0;
    std::uint64_t seed = 0;
    int samples = 0;
    double exclusion_radius = 0.0;
    std::vector<DivergenceRecord> records;
    double min_margin = 0.0;

    bool pass(double margin_tol = 1e-6) const { return min_margin >= -margin_tol; }
};

struct ScanOptions {
    BuildOptions build;
    /// h values below -sign_tol make the bound inapplicable.
    double sign_tol = 1e-10;
};

/// Seeded interior points of B_R(p) with density proportional to sin^{n-1}(r),
/// keeping dist(., y) >= exclusion_radius.
std::vector<SpherePoint> interior_samples(const BallSpec& spec, int count, std::uint64_t seed,
                                          double exclusion_radius);

/// Throws SignViolation if h takes values below -sign_tol.
DivergenceReport div_bound_scan(const BallSpec& spec, int n_points, std::uint64_t seed,
                                const ScanOptions& options = {});

/// Orthonormal basis (columns) of the (k+1)-space spanned by p, the direction
/// of gamma and k-1 further coordinate directions.
Mat equality_sphere_basis(const BallSpec& spec);

struct EqualityReport {
    int samples = 0;
    double max_plane_deviation = 0.0;  ///< max |div along the tangent k-plane - 1|
    double max_sup_deviation = 0.0;    ///< max |sup_div - 1|
};

/// Samples interior points of the geodesic k-ball of radius R about p inside
/// the equality sphere and evaluates the divergence of W along its tangent planes.
EqualityReport equality_plane_check(const CompositeField& field, int count, std::uint64_t seed);

struct AreaBalanceOptions {
    /// Tolerance of the nested adaptive quadrature (0 nodes) ...
    double tol = 1e-10;
    /// ... or Gauss-Legendre nodes per panel in both directions.
    int fixed_nodes = 0;
};

struct AreaBalanceRow {
    double eps = 0.0;
    double lhs = 0.0;            ///< integral of div W over Sigma minus B_eps(y)
    double area_outside = 0.0;   ///< area of Sigma minus B_eps(y)
    double boundary_flux = 0.0;  ///< flux through the outer boundary
    double sphere_flux = 0.0;    ///< flux through Sigma intersected with the eps-sphere about y
    double rhs = 0.0;
    double residual = 0.0;       ///< |lhs - rhs|
    double deficit = 0.0;        ///< vol_ball(k, R) - rhs
    double coefficient = 0.0;    ///< sphere_flux / (omega_{k-1} / 2), tends to 2 I_k(R)
};

struct AreaBalanceReport {
    int k = 0;
    double R = 0.0;
    double volume = 0.0;  ///< vol_ball(k, R)
    std::vector<AreaBalanceRow> rows;
    /// Richardson extrapolation (order k) of the total flux from the two smallest eps.
    double extrapolated_flux = 0.0;
    double extrapolated_coefficient = 0.0;
    bool deficit_decreasing = false;
};

/// Sigma is the geodesic k-ball of radius R about p in the equality sphere.
AreaBalanceReport area_balance(const CompositeField& field, std::span<const double> eps_list,
                               const AreaBalanceOptions& options = {});

struct K8Row {
    double R = 0.0;
    double min_h = 0.0;
    double argmin = 0.0;
    bool flagged = false;
    /// Sub-interval of s where h < -flag_tol on the sampling grid (0, 0 if none).
    double negative_from = 0.0;
    double negative_to = 0.0;
};

struct RWindow {
    double from = 0.0;
    double to = 0.0;
};

struct K8Report {
    int k = 0;
    std::vector<K8Row> rows;
    std::vector<RWindow> windows;  ///< maximal runs of consecutive flagged R
    int flagged() const;
};

/// Per-R minimum of h; runs for any even k >= 4 (k = 8 is the case of interest).
K8Report k8_scan(std::span<const double> R_grid, const HSolveOptions& options = {}, int k = 8,
                 double flag_tol = 1e-10);

}  // namespace calib
