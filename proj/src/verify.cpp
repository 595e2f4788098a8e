#include "calib/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "calib/parallel.hpp"

namespace calib {

namespace {

// r in [0, R] with P(r' <= r) = I_m(r) / I_m(R).
double inverse_radial_cdf(int m, double R, double u)
{
    const double target = u * sine_power_integral(m, R);
    double lo = 0.0;
    double hi = R;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sine_power_integral(m, mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

Vec random_unit(const Mat& span_basis, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Vec g(span_basis.cols());
    for (auto& v : g) v = normal(rng);
    return span_basis * (g / g.norm());
}

// Polar frame of the equality k-sphere about p: point at (r, theta) along
// the great circle through p, e and the second in-sphere direction w.
struct PolarFrame {
    Vec p;
    Vec e;
    Vec w;
    Mat rest;  // remaining k-2 directions

    Vec point(double r, double theta) const
    {
        return std::cos(r) * p + std::sin(r) * (std::cos(theta) * e + std::sin(theta) * w);
    }
    Vec radial(double r, double theta) const
    {
        return -std::sin(r) * p + std::cos(r) * (std::cos(theta) * e + std::sin(theta) * w);
    }
    Vec angular(double theta) const { return -std::sin(theta) * e + std::cos(theta) * w; }
};

PolarFrame polar_frame(const BallSpec& spec)
{
    const Mat B = equality_sphere_basis(spec);
    PolarFrame f;
    f.p = B.col(0);
    f.e = B.col(1);
    f.w = B.col(2);
    f.rest = B.rightCols(B.cols() - 3);
    return f;
}

template <class F>
double integrate_1d(const F& f, double a, double b, const AreaBalanceOptions& options,
                    std::span<const double> breakpoints = {})
{
    if (!(b > a)) return 0.0;
    if (options.fixed_nodes > 0) {
        return integrate_fixed(f, a, b, gauss_legendre(options.fixed_nodes), breakpoints);
    }
    QuadratureSpec quad;
    quad.abs_tol = options.tol;
    quad.rel_tol = options.tol;
    quad.max_subdiv = 400;
    return integrate_adaptive(f, a, b, quad, breakpoints).value;
}

}  // namespace

std::vector<SpherePoint> interior_samples(const BallSpec& spec, int count, std::uint64_t seed,
                                          double exclusion_radius)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const Mat basis = tangent_basis(spec.p);
    std::vector<SpherePoint> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        const double r = inverse_radial_cdf(spec.n, spec.R, uniform(rng));
        const Vec dir = random_unit(basis, rng);
        SpherePoint q = exp_map(spec.p, r * dir);
        if (dist(q, spec.y) >= exclusion_radius) out.push_back(std::move(q));
    }
    return out;
}

DivergenceReport div_bound_scan(const BallSpec& spec, int n_points, std::uint64_t seed,
                                const ScanOptions& options)
{
    if (n_points < 1) throw InvalidSpec("div_bound_scan: n_points must be positive");
    if (spec.k >= 4 && spec.even()) {
        const HSolution h = solve_h(assemble_system(spec.k / 2, spec.R), options.build.ode);
        if (h.min_h < -options.sign_tol) {
            throw SignViolation("div_bound_scan: h has negative values (min " +
                                std::to_string(h.min_h) + " at s = " + std::to_string(h.argmin) +
                                "); the divergence bound does not apply");
        }
    }
    const CompositeField field = build_W(spec, options.build);

    DivergenceReport report;
    report.n = spec.n;
    report.k = spec.k;
    report.R = spec.R;
    report.seed = seed;
    report.samples = n_points;
    report.exclusion_radius = options.build.exclusion_radius;

    const auto points = interior_samples(spec, n_points, seed, options.build.exclusion_radius);
    report.records.resize(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const SpherePoint& q = points[i];
        DivergenceRecord rec;
        rec.point = q.coords();
        rec.dist_p = dist(q, spec.p);
        rec.dist_y = dist(q, spec.y);
        rec.sup_div = field.sup_div(q);
        rec.margin = 1.0 - rec.sup_div;
        report.records[i] = std::move(rec);
    });
    report.min_margin = report.records.front().margin;
    for (const auto& rec : report.records) report.min_margin = std::min(report.min_margin, rec.margin);
    return report;
}

Mat equality_sphere_basis(const BallSpec& spec)
{
    const int m = spec.n + 1;
    Mat B(m, spec.k + 1);
    B.col(0) = spec.p.coords();
    B.col(1) = gamma_of(spec).direction();
    int filled = 2;
    for (int i = 0; i < m && filled < spec.k + 1; ++i) {
        Vec v = Vec::Unit(m, i);
        for (int c = 0; c < filled; ++c) v -= B.col(c).dot(v) * B.col(c);
        for (int c = 0; c < filled; ++c) v -= B.col(c).dot(v) * B.col(c);
        if (v.norm() > 1e-6) B.col(filled++) = v / v.norm();
    }
    return B;
}

EqualityReport equality_plane_check(const CompositeField& field, int count, std::uint64_t seed)
{
    const BallSpec& spec = field.spec();
    const Mat B = equality_sphere_basis(spec);
    const Mat directions = B.rightCols(spec.k);
    const double exclusion = 2.0 * field.options().exclusion_radius;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<SpherePoint> points;
    while (static_cast<int>(points.size()) < count) {
        const double r = inverse_radial_cdf(spec.k, spec.R, uniform(rng));
        const Vec u = random_unit(directions, rng);
        SpherePoint q(std::cos(r) * spec.p.coords() + std::sin(r) * u);
        q = SpherePoint::normalized(q.coords());
        if (dist(q, spec.y) >= exclusion) points.push_back(std::move(q));
    }

    std::vector<std::pair<double, double>> deviations(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const SpherePoint& q = points[i];
        const Mat T = B - q.coords() * (q.coords().transpose() * B);
        Eigen::JacobiSVD<Mat> svd(T, Eigen::ComputeThinU);
        const PlaneBasis plane(q, svd.matrixU().leftCols(spec.k));
        const DivergenceDecomposition d = field.divergence(q);
        deviations[i] = {std::abs(d.along_plane(plane) - 1.0), std::abs(d.supremum() - 1.0)};
    });

    EqualityReport report;
    report.samples = count;
    for (const auto& [plane_dev, sup_dev] : deviations) {
        report.max_plane_deviation = std::max(report.max_plane_deviation, plane_dev);
        report.max_sup_deviation = std::max(report.max_sup_deviation, sup_dev);
    }
    return report;
}

AreaBalanceReport area_balance(const CompositeField& field, std::span<const double> eps_list,
                               const AreaBalanceOptions& options)
{
    const BallSpec& spec = field.spec();
    const int k = spec.k;
    const double R = spec.R;
    const PolarFrame frame = polar_frame(spec);
    const double omega = unit_sphere_area(k - 2);
    const double sR = std::sin(R);
    const double cR = cos_radius(R);

    auto tangent_plane = [&](double r, double theta) {
        Mat V(spec.n + 1, k);
        V.col(0) = frame.radial(r, theta);
        V.col(1) = frame.angular(theta);
        V.rightCols(k - 2) = frame.rest;
        return PlaneBasis(SpherePoint::normalized(frame.point(r, theta)), V);
    };

    std::vector<double> eps_sorted(eps_list.begin(), eps_list.end());
    std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());

    AreaBalanceReport report;
    report.k = k;
    report.R = R;
    report.volume = vol_ball(k, R);
    report.rows.resize(eps_sorted.size());

    parallel_for(eps_sorted.size(), [&](std::size_t idx) {
        const double eps = eps_sorted[idx];
        if (!(eps > 0.0 && eps < R)) throw DomainError("area_balance: eps must lie in (0, R)");
        // Lower angular limit at radius r: points with theta < theta_min lie within eps of y.
        auto theta_min = [&](double r) {
            if (r <= 0.0) return 0.0;
            const double kappa = (std::cos(eps) - std::cos(r) * cR) / (std::sin(r) * sR);
            if (kappa >= 1.0) return 0.0;
            return std::acos(std::max(kappa, -1.0));
        };
        const std::vector<double> outer_cuts{R - eps};

        auto area_integral = [&](auto&& density) {
            auto inner = [&](double r) {
                auto g = [&](double theta) {
                    return density(r, theta) * std::pow(std::sin(theta), k - 2);
                };
                return std::pow(std::sin(r), k - 1) * integrate_1d(g, theta_min(r), kPi, options);
            };
            return omega * integrate_1d(inner, 0.0, R, options, outer_cuts);
        };

        AreaBalanceRow row;
        row.eps = eps;
        row.lhs = area_integral(
            [&](double r, double theta) { return field.div_along_plane(tangent_plane(r, theta)); });
        row.area_outside = area_integral([](double, double) { return 1.0; });

        auto boundary = [&](double theta) {
            const SpherePoint x = SpherePoint::normalized(frame.point(R, theta));
            return field.eval(x).dot(frame.radial(R, theta)) * std::pow(std::sin(theta), k - 2);
        };
        row.boundary_flux =
            omega * std::pow(sR, k - 1) * integrate_1d(boundary, theta_min(R), kPi, options);

        // Polar coordinates about y; beta is measured from the direction toward p.
        const Vec& y = spec.y.coords();
        const Vec toward_p = (spec.p.coords() - cR * y) / sR;
        const double beta_max = std::acos(std::clamp(cR / sR * std::tan(0.5 * eps), -1.0, 1.0));
        auto small_sphere = [&](double beta) {
            const Vec dir = std::cos(beta) * toward_p + std::sin(beta) * frame.w;
            const SpherePoint q = SpherePoint::normalized(std::cos(eps) * y + std::sin(eps) * dir);
            const Vec outward = std::sin(eps) * y - std::cos(eps) * dir;
            return field.eval(q).dot(outward) * std::pow(std::sin(beta), k - 2);
        };
        row.sphere_flux =
            omega * std::pow(std::sin(eps), k - 1) * integrate_1d(small_sphere, 0.0, beta_max, options);

        row.rhs = row.boundary_flux + row.sphere_flux;
        row.residual = std::abs(row.lhs - row.rhs);
        row.deficit = report.volume - row.rhs;
        row.coefficient = row.sphere_flux / (0.5 * unit_sphere_area(k - 1));
        report.rows[idx] = row;
    });

    report.deficit_decreasing = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (!(std::abs(report.rows[i].deficit) < std::abs(report.rows[i - 1].deficit))) {
            report.deficit_decreasing = false;
        }
    }
    if (report.rows.size() >= 2) {
        const auto& a = report.rows[report.rows.size() - 2];
        const auto& b = report.rows.back();
        const double wa = std::pow(a.eps, k);
        const double wb = std::pow(b.eps, k);
        report.extrapolated_flux = (b.rhs * wa - a.rhs * wb) / (wa - wb);
    } else if (!report.rows.empty()) {
        report.extrapolated_flux = report.rows.back().rhs;
    }
    report.extrapolated_coefficient = report.extrapolated_flux / (0.5 * unit_sphere_area(k - 1));
    return report;
}

int K8Report::flagged() const
{
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const K8Row& r) { return r.flagged; }));
}

K8Report k8_scan(std::span<const double> R_grid, const HSolveOptions& options, int k,
                 double flag_tol)
{
    K8Report report;
    report.k = k;
    report.rows.resize(R_grid.size());
    parallel_for(R_grid.size(), [&](std::size_t i) {
        const double R = R_grid[i];
        const HSolution sol = solve_h(assemble_system_for_dimension(k, R), options);
        K8Row row;
        row.R = R;
        row.min_h = sol.min_h;
        row.argmin = sol.argmin;
        row.flagged = sol.min_h < -flag_tol;
        if (row.flagged) {
            bool open = false;
            for (std::size_t g = 0; g < sol.grid.size(); ++g) {
                if (sol.h_values[g] < -flag_tol) {
                    if (!open) row.negative_from = sol.grid[g];
                    row.negative_to = sol.grid[g];
                    open = true;
                }
            }
        }
        report.rows[i] = row;
    });
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        if (!report.rows[i].flagged) continue;
        if (i > 0 && report.rows[i - 1].flagged) {
            report.windows.back().to = report.rows[i].R;
        } else {
            report.windows.push_back(RWindow{report.rows[i].R, report.rows[i].R});
        }
    }
    return report;
}

}  // namespace calib
