#include "calib/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace calib {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

DenseTrajectory::DenseTrajectory(std::vector<Step> steps) : steps_(std::move(steps))
{
    if (steps_.empty()) throw DomainError("DenseTrajectory: no steps");
}

std::vector<double> DenseTrajectory::mesh() const
{
    std::vector<double> out;
    out.reserve(steps_.size() + 1);
    for (const auto& s : steps_) out.push_back(s.t0);
    out.push_back(t_end());
    return out;
}

std::size_t DenseTrajectory::locate(double t) const
{
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                               [](double value, const Step& s) { return value < s.t0; });
    if (it == steps_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(steps_.begin(), it) - 1);
}

Vec DenseTrajectory::operator()(double t) const
{
    const Step& s = steps_[locate(t)];
    const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
    const double theta1 = 1.0 - theta;
    const auto& c = s.coeffs;
    return c[0] + theta * (c[1] + theta1 * (c[2] + theta * (c[3] + theta1 * c[4])));
}

double DenseTrajectory::component(double t, int i) const
{
    const Step& s = steps_[locate(t)];
    const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
    const double theta1 = 1.0 - theta;
    const auto& c = s.coeffs;
    return c[0](i) +
           theta * (c[1](i) + theta1 * (c[2](i) + theta * (c[3](i) + theta1 * c[4](i))));
}

DenseTrajectory integrate_dopri5(const OdeRhs& rhs, double t0, double t1, const Vec& y0,
                                 const OdeOptions& options)
{
    if (!(t1 > t0)) throw DomainError("integrate_dopri5: need t1 > t0");
    const auto dim = y0.size();
    Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Vec y = y0, y_new(dim), y_stage(dim), err(dim);

    rhs(t0, y, k1);
    double t = t0;
    double h = std::min(1e-3, 0.01 * (t1 - t0));
    std::vector<DenseTrajectory::Step> steps;
    int attempts = 0;

    while (t < t1) {
        if (++attempts > options.max_steps) {
            throw StiffnessFailure("integrate_dopri5: step budget exhausted at t = " +
                                   std::to_string(t));
        }
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }
        if (h < 1e-15 * std::max(1.0, std::abs(t))) {
            throw StiffnessFailure("integrate_dopri5: step size underflow at t = " +
                                   std::to_string(t));
        }

        y_stage = y + h * a21 * k1;
        rhs(t + c2 * h, y_stage, k2);
        y_stage = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, y_stage, k3);
        y_stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, y_stage, k4);
        y_stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, y_stage, k5);
        y_stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double t_next = last ? t1 : t + h;
        rhs(t_next, y_stage, k6);
        y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t_next, y_new, k7);

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double norm = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double scale =
                options.abs_tol + options.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            norm += (err(i) / scale) * (err(i) / scale);
        }
        norm = dim > 0 ? std::sqrt(norm / static_cast<double>(dim)) : 0.0;

        if (norm <= 1.0) {
            DenseTrajectory::Step step;
            step.t0 = t;
            step.h = t_next - t;
            const Vec ydiff = y_new - y;
            const Vec bspl = h * k1 - ydiff;
            step.coeffs[0] = y;
            step.coeffs[1] = ydiff;
            step.coeffs[2] = bspl;
            step.coeffs[3] = ydiff - h * k7 - bspl;
            step.coeffs[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            steps.push_back(std::move(step));

            t = t_next;
            y = y_new;
            k1 = k7;
            if (last) break;
            const double fac = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            const double fac = std::isfinite(norm) ? 0.9 * std::pow(norm, -0.2) : 0.1;
            h *= std::clamp(fac, 0.1, 0.9);
        }
    }
    return DenseTrajectory(std::move(steps));
}

}  // namespace calib
