#pragma once

// Dormand-Prince 5(4) integrator with continuous (dense) output.

#include <array>
#include <functional>
#include <vector>

#include "calib/sphere.hpp"

namespace calib {

/// dy/dt = rhs(t, y), written into the third argument.
using OdeRhs = std::function<void(double, const Vec&, Vec&)>;

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_steps = 500000;
};

/// Piecewise quartic interpolant produced by the integrator.
class DenseTrajectory {
public:
    struct Step {
        double t0;
        double h;
        std::array<Vec, 5> coeffs;
    };

    DenseTrajectory() = default;
    explicit DenseTrajectory(std::vector<Step> steps);

    double t_begin() const { return steps_.front().t0; }
    double t_end() const { return steps_.back().t0 + steps_.back().h; }
    int step_count() const { return static_cast<int>(steps_.size()); }
    /// Step boundaries t_0 < t_1 < ... < t_N.
    std::vector<double> mesh() const;

    /// State at t, clamped to [t_begin, t_end].
    Vec operator()(double t) const;
    /// Component i of the state at t.
    double component(double t, int i) const;

private:
    std::size_t locate(double t) const;

    std::vector<Step> steps_;
};

/// Integrates from t0 to t1 > t0. Throws StiffnessFailure when the step budget
/// is exhausted or the step size collapses.
DenseTrajectory integrate_dopri5(const OdeRhs& rhs, double t0, double t1, const Vec& y0,
                                 const OdeOptions& options = {});

}  // namespace calib
