#include "calib/h_system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/quadrature.hpp"
#include "calib/radial.hpp"

namespace calib {

namespace {

constexpr double kLocalTolFactor = 1e-2;

void check_radius(double R)
{
    if (!(R > 0.0) || R > kPi / 2 + 1e-15) throw DomainError("h system: R must lie in (0, pi/2]");
}

// Golden-section minimization of f on [a, b].
std::pair<double, double> golden_min(const std::function<double(double)>& f, double a, double b,
                                     double tol)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

}  // namespace

OdeSpec assemble_system(int j, double R)
{
    if (j < 2) throw DomainError("assemble_system: j must be >= 2");
    check_radius(R);
    const int k = 2 * j;
    const int m = j - 1;
    const auto a = a_coeffs(j);
    std::vector<double> c(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) c[i - 1] = 1.0 / (2.0 * j - i - 1.0);
    const double cR = cos_radius(R);

    OdeSpec spec;
    spec.j = j;
    spec.R = R;
    spec.f0 = Vec::Constant(m, cR / std::pow(std::sin(R), k - 2));
    spec.A = [=](double s) {
        const double cs = std::cos(s);
        const double ss = std::sin(s);
        Mat A = Mat::Zero(m, m);
        for (int i = 1; i <= m; ++i) {
            const double ai = a[i - 1];
            const double ai1 = a[i];
            const double denom = ai1 * ss;
            // (a_{i+1} sin s) f_i' = (j-1) a_i (cos s + (1-i) c_i cos R) f_{j-1}
            //                        + a_i (i-1) (cos R - cos s) f_{i-1}
            //                        - a_{i+1} (k-2-i) cos s f_i
            A(i - 1, m - 1) += (j - 1) * ai * (cs + (1 - i) * c[i - 1] * cR) / denom;
            if (i >= 2) A(i - 1, i - 2) += ai * (i - 1) * (cR - cs) / denom;
            A(i - 1, i - 1) -= ai1 * (k - 2 - i) * cs / denom;
        }
        return A;
    };
    return spec;
}

OdeSpec assemble_system_for_dimension(int k, double R)
{
    if (k % 2 != 0) {
        throw UnsupportedDimension("the line-integral weight h is only constructed for even k");
    }
    return assemble_system(k / 2, R);
}

double HSolution::h(double s) const
{
    if (s < R - 1e-12 || s > kPi) throw DomainError("HSolution::h: s outside [R, pi]");
    const double end = kPi - end_gap;
    if (s > end) return h_end_ * (kPi - s) / end_gap;
    const int m = j() - 1;
    return (j() - 1) * trajectory_->component(std::max(s, R), m - 1) * std::pow(std::sin(s), k - 3);
}

Vec HSolution::f(double s) const { return (*trajectory_)(s); }

Vec HSolution::f_prime(double s) const { return A_(s) * f(s); }

HSolution solve_h(const OdeSpec& spec, const HSolveOptions& options)
{
    if (spec.j < 2) throw DomainError("solve_h: j must be >= 2");
    if (!(options.tol >= 1e-12)) throw DomainError("solve_h: tolerance below 1e-12");
    check_radius(spec.R);
    const int k = spec.k();
    const int m = spec.j - 1;
    const double end = kPi - options.end_gap;

    OdeOptions ode;
    // Local error control is kept well below the requested global accuracy.
    ode.rel_tol = options.tol * kLocalTolFactor;
    ode.abs_tol = ode.rel_tol * 1e-6 * std::max(1.0, spec.f0.lpNorm<Eigen::Infinity>());
    ode.max_steps = options.max_steps;
    const auto A = spec.A;
    OdeRhs rhs = [A](double s, const Vec& f, Vec& out) { out.noalias() = A(s) * f; };

    HSolution sol;
    sol.k = k;
    sol.R = spec.R;
    sol.end_gap = options.end_gap;
    sol.A_ = spec.A;
    sol.trajectory_ =
        std::make_shared<DenseTrajectory>(integrate_dopri5(rhs, spec.R, end, spec.f0, ode));
    const DenseTrajectory& traj = *sol.trajectory_;

    auto h_inner = [&](double s) {
        return (spec.j - 1) * traj.component(s, m - 1) * std::pow(std::sin(s), k - 3);
    };
    sol.h_end_ = h_inner(end);

    const int n = std::max(options.grid_points, 3);
    sol.grid.resize(n);
    sol.h_values.resize(n);
    sol.f_values.resize(n, m);
    for (int i = 0; i < n; ++i) {
        const double s = spec.R + (end - spec.R) * i / (n - 1.0);
        sol.grid[i] = s;
        sol.f_values.row(i) = traj(s).transpose();
        sol.h_values[i] = h_inner(s);
    }

    // Integral: one Kronrod panel per integrator step, plus the tail.
    const auto mesh = traj.mesh();
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        integral += detail::kronrod_panel(h_inner, mesh[i], mesh[i + 1]).value;
    }
    sol.tail_estimate = 0.5 * sol.h_end_ * options.end_gap;
    sol.integral = integral + sol.tail_estimate;

    // Minimum: grid scan, then golden-section around the three lowest samples.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + 3, order.end(),
                      [&](int a, int b) { return sol.h_values[a] < sol.h_values[b]; });
    sol.min_h = sol.h_values[order[0]];
    sol.argmin = sol.grid[order[0]];
    const std::function<double(double)> hf = h_inner;
    for (int r = 0; r < 3; ++r) {
        const int i = order[r];
        const double lo = sol.grid[std::max(i - 1, 0)];
        const double hi = sol.grid[std::min(i + 1, n - 1)];
        const auto [x, fx] = golden_min(hf, lo, hi, 1e-10);
        if (fx < sol.min_h) {
            sol.min_h = fx;
            sol.argmin = x;
        }
    }

    for (int e = 2; e <= 6; ++e) {
        const double s = kPi - std::pow(10.0, -e);
        if (s < spec.R || s > end + 1e-15) continue;
        const double decay = traj(std::min(s, end)).lpNorm<Eigen::Infinity>() *
                             std::pow(std::sin(s), k - 2);
        sol.tail_decay.push_back(decay);
    }
    for (std::size_t i = 1; i < sol.tail_decay.size(); ++i) {
        if (sol.tail_decay[i] > sol.tail_decay[i - 1] && sol.tail_decay[i] > 0.0) {
            sol.tail_decays = false;
        }
    }
    return sol;
}

double k6_underline_c(double R)
{
    check_radius(R);
    const double sR2 = std::pow(std::sin(R), 2);
    return 3.0 * cos_radius(R) / sR2 / (3.0 + sR2);
}

double h_k6_closed(double R, double s)
{
    check_radius(R);
    if (s < R - 1e-12 || s > kPi) throw DomainError("h_k6_closed: s outside [R, pi]");
    const double cR = cos_radius(R);
    if (cR == 0.0) return 0.0;
    const double sR2 = std::pow(std::sin(R), 2);
    const double cs = std::cos(s);
    const double ss = std::sin(s);
    const double ratio = std::tan(0.5 * R) / std::tan(0.5 * s);
    return k6_underline_c(R) * ((1.0 + 2.0 / sR2) * ss * ss * ss +
                                (cs * cs - cR * cs - sR2 / 3.0) * ss * std::pow(ratio, cR));
}

Mat k6_system_matrix(double R, double s)
{
    const double cR = cos_radius(R);
    const double cs = std::cos(s);
    Mat A(2, 2);
    A << -3.0 * cs, 3.0 * cs, cR - cs, cs - cR;
    return A / std::sin(s);
}

Mat k6_fundamental_matrix(double R, double s)
{
    const double cR = cos_radius(R);
    const double sR2 = std::pow(std::sin(R), 2);
    const double cs = std::cos(s);
    const double csc2 = 1.0 / std::pow(std::sin(s), 2);
    const double power = std::pow(1.0 / std::tan(0.5 * s), cR);
    Mat phi(2, 2);
    phi << 1.0, (1.0 - cR * cs + cs * cs) * csc2 * power,
           1.0, (cs * cs - cR * cs - sR2 / 3.0) * csc2 * power;
    return phi;
}

Vec k6_closed_f(double R, double s)
{
    const double cR = cos_radius(R);
    const double sR2 = std::pow(std::sin(R), 2);
    Vec weights(2);
    weights << 1.0 + 2.0 / sR2, std::pow(std::tan(0.5 * R), cR);
    return k6_underline_c(R) * (k6_fundamental_matrix(R, s) * weights);
}

Vec to_k6_normalization(const Vec& f_general)
{
    if (f_general.size() != 2) throw DomainError("to_k6_normalization: expected two components");
    const auto a = a_coeffs(3);
    Vec out(2);
    out << 15.0 * a[1] * f_general(0), 15.0 * a[2] * f_general(1);
    return out;
}

double k6_closed_antiderivative(double R, double s)
{
    const double cR = cos_radius(R);
    const double ss = std::sin(s);
    return -(cR - std::cos(s)) * ss * ss * std::pow(1.0 / std::tan(0.5 * s), cR) / 3.0;
}

WronskianReport wronskian_check(double R, std::span<const double> s_grid)
{
    check_radius(R);
    const double cR = cos_radius(R);
    const double C = -1.0 - std::pow(std::sin(R), 2) / 3.0;
    auto liouville = [&](double s) {
        return C / std::pow(std::sin(s), 2) * std::pow(1.0 / std::tan(0.5 * s), cR);
    };
    WronskianReport report;
    for (double s : s_grid) {
        if (s <= R || s >= kPi) throw DomainError("wronskian_check: s outside (R, pi)");
        const double det = k6_fundamental_matrix(R, s).determinant();
        const double expected = liouville(s);
        report.max_relative_residual =
            std::max(report.max_relative_residual,
                     std::abs(det - expected) / std::max(1.0, std::abs(expected)));
    }
    const double s_near = kPi - 1e-3;
    const double det_near = k6_fundamental_matrix(R, s_near).determinant();
    report.log_residual_near_pi = std::abs(std::log(-det_near) - std::log(-liouville(s_near)));
    return report;
}

ConstraintReport constraint_check(int k, double R, const HSolveOptions& options)
{
    if (k < 4 || k % 2 != 0) {
        throw UnsupportedDimension("constraint_check: k must be even and at least 4");
    }
    const HSolution sol = solve_h(assemble_system(k / 2, R), options);
    ConstraintReport report;
    const double i_lower = sine_power_integral(k - 2, R);
    report.lhs = 1.0 + sol.integral;
    report.rhs = sine_power_integral(k - 2, kPi / 2) / i_lower;
    report.middle = (k - 1.0) / (k - 2.0) * (0.5 * sine_power_integral(k, kPi)) / i_lower;
    report.residual = std::abs(report.lhs - report.rhs);
    report.middle_residual = std::abs(report.middle - report.rhs);
    return report;
}

MonotonicityReport monotonicity_check(double R, const HSolveOptions& options)
{
    const HSolution sol = solve_h(assemble_system(3, R), options);
    const double cR = cos_radius(R);
    MonotonicityReport report;
    report.min_gap = std::numeric_limits<double>::infinity();
    report.min_derivative = std::numeric_limits<double>::infinity();
    report.strictly_increasing = true;
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        const double s = sol.grid[i];
        const Vec f = to_k6_normalization(sol.f_values.row(i).transpose());
        const double gap = f(0) - f(1);
        if (i == 0) {
            report.initial_gap = gap;
            previous = f(1);
            continue;
        }
        report.min_gap = std::min(report.min_gap, gap);
        report.min_derivative =
            std::min(report.min_derivative, (cR - std::cos(s)) * gap / std::sin(s));
        if (!(f(1) > previous)) report.strictly_increasing = false;
        previous = f(1);
    }
    return report;
}

std::vector<HMinRow> h_min_scan(int k, std::span<const double> R_grid,
                                const HSolveOptions& options)
{
    std::vector<HMinRow> rows;
    rows.reserve(R_grid.size());
    for (double R : R_grid) {
        const HSolution sol = solve_h(assemble_system_for_dimension(k, R), options);
        rows.push_back(HMinRow{R, sol.min_h, sol.argmin});
    }
    return rows;
}

}  // namespace calib
