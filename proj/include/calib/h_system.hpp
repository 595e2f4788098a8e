#pragma once

// The linear ODE system that determines the weight h(s) of the line-integral
// term for even k = 2j, its solution, and the explicit k = 6 solution.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "calib/ode.hpp"
#include "calib/sphere.hpp"

namespace calib {

/// f' = A(s) f on (R, pi), f = (f_1, ..., f_{j-1}), f(R) = f0.
struct OdeSpec {
    int j = 0;
    double R = 0.0;
    std::function<Mat(double)> A;
    Vec f0;

    int k() const noexcept { return 2 * j; }
};

/// Builds the system for k = 2j in the a_{i+1}-weighted normalization with
/// f(R) sin^{k-2}(R) = cos(R) (1, ..., 1). Throws DomainError for j < 2.
OdeSpec assemble_system(int j, double R);

/// Same, from k; throws UnsupportedDimension for odd k.
OdeSpec assemble_system_for_dimension(int k, double R);

struct HSolveOptions {
    /// Target global accuracy (relative); the stepper runs 100 times tighter.
    double tol = 1e-10;
    /// Integration stops at pi - end_gap, where A(s) is singular.
    double end_gap = 1e-6;
    int grid_points = 2000;
    int max_steps = 500000;
};

class HSolution {
public:
    int k = 0;
    double R = 0.0;
    double end_gap = 0.0;
    std::vector<double> grid;
    Mat f_values;  ///< grid.size() x (j-1)
    std::vector<double> h_values;
    /// integral of h over [R, pi]; the piece beyond pi - end_gap is the tail estimate.
    double integral = 0.0;
    double tail_estimate = 0.0;
    double min_h = 0.0;
    double argmin = 0.0;
    /// max_i |f_i(s)| sin^{k-2}(s) at s = pi - 10^-m, m = 2..6.
    std::vector<double> tail_decay;
    bool tail_decays = true;

    int j() const noexcept { return k / 2; }
    /// h(s) for s in [R, pi]; linear decay to 0 on the last end_gap.
    double h(double s) const;
    /// f(s) for s in [R, pi - end_gap].
    Vec f(double s) const;
    /// f'(s) = A(s) f(s).
    Vec f_prime(double s) const;
    const DenseTrajectory& trajectory() const { return *trajectory_; }

private:
    friend HSolution solve_h(const OdeSpec&, const HSolveOptions&);
    std::shared_ptr<const DenseTrajectory> trajectory_;
    std::function<Mat(double)> A_;
    double h_end_ = 0.0;
};

HSolution solve_h(const OdeSpec& spec, const HSolveOptions& options = {});

/// Explicit k = 6 solution.
double k6_underline_c(double R);
double h_k6_closed(double R, double s);
/// Coefficient matrix of the k = 6 system in the (3, 2)-normalization.
Mat k6_system_matrix(double R, double s);
/// Fundamental matrix whose first column is (1, 1).
Mat k6_fundamental_matrix(double R, double s);
/// (f_1, f_2) in the (3, 2)-normalization from the explicit formula.
Vec k6_closed_f(double R, double s);
/// Converts general-normalization f to the k = 6 normalization: 15 a_{i+1} f_i.
Vec to_k6_normalization(const Vec& f_general);
/// Antiderivative of the second summand of h (without the constant factors).
double k6_closed_antiderivative(double R, double s);

struct WronskianReport {
    double max_relative_residual = 0.0;
    double log_residual_near_pi = 0.0;
};

/// Compares det of the fundamental matrix with C csc^2 s cot(s/2)^{cos R},
/// C = -1 - sin^2(R)/3.
WronskianReport wronskian_check(double R, std::span<const double> s_grid);

struct ConstraintReport {
    double lhs = 0.0;          ///< 1 + integral of h
    double rhs = 0.0;          ///< I_{k-2}(pi/2) / I_{k-2}(R)
    double middle = 0.0;       ///< ((k-1)/(k-2)) (I_k(pi)/2) / I_{k-2}(R)
    double residual = 0.0;     ///< |lhs - rhs|
    double middle_residual = 0.0;
};

ConstraintReport constraint_check(int k, double R, const HSolveOptions& options = {});

struct MonotonicityReport {
    double min_gap = 0.0;         ///< min over the grid of f_1 - f_2 ((3,2)-normalization)
    double min_derivative = 0.0;  ///< min of f_2' from (sin s) f_2' = (cos R - cos s)(f_1 - f_2)
    bool strictly_increasing = false;
    double initial_gap = 0.0;
};

MonotonicityReport monotonicity_check(double R, const HSolveOptions& options = {});

struct HMinRow {
    double R = 0.0;
    double min_h = 0.0;
    double argmin = 0.0;
};

std::vector<HMinRow> h_min_scan(int k, std::span<const double> R_grid,
                                const HSolveOptions& options = {});

}  // namespace calib
