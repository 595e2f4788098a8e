#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for scalar, vector and
// matrix valued integrands, plus fixed Gauss-Legendre rules.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "calib/errors.hpp"

namespace calib {

struct QuadratureSpec {
    enum class Scheme { Adaptive, FixedNodes };

    Scheme scheme = Scheme::Adaptive;
    double abs_tol = 1e-9;
    /// Relative tolerance, so strongly peaked integrands with large values still converge.
    double rel_tol = 1e-10;
    int max_subdiv = 60;
    /// Gauss-Legendre nodes per panel for the fixed-nodes scheme.
    int fixed_nodes = 32;
};

template <class T>
struct QuadratureResult {
    T value;
    double error = 0.0;
    int intervals = 0;
};

namespace detail {

inline double magnitude(double x) { return std::abs(x); }

template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& m)
{
    return m.template lpNorm<Eigen::Infinity>();
}

// Abscissae and weights of the 7-point Gauss / 15-point Kronrod pair on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
    double a;
    double b;
    T value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
auto kronrod_panel(const F& f, double a, double b)
{
    using T = std::decay_t<decltype(f(a))>;
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const T f_center = f(center);
    T kronrod = kKronrodWeights[7] * f_center;
    T gauss = kGaussWeights[3] * f_center;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const T pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + kKronrodWeights[i] * pair;
        if (i % 2 == 1) gauss = gauss + kGaussWeights[i / 2] * pair;
    }
    kronrod = half * kronrod;
    gauss = half * gauss;
    const double err = magnitude(kronrod - gauss);
    return Panel<T>{a, b, kronrod, err};
}

}  // namespace detail

/// Integrates f over [a, b]. Interior breakpoints (sorted or not, clipped to
/// (a, b)) seed the initial partition, so peaks placed there are resolved
/// first. Throws QuadratureFailure once max_subdiv bisections fail to reach
/// max(abs_tol, rel_tol |I|).
template <class F>
auto integrate_adaptive(const F& f, double a, double b, const QuadratureSpec& spec,
                        std::span<const double> breakpoints = {})
{
    using T = std::decay_t<decltype(f(a))>;
    using detail::Panel;

    std::vector<double> cuts{a};
    for (double c : breakpoints) {
        if (c > a && c < b) cuts.push_back(c);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Panel<T>> heap;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        heap.push(detail::kronrod_panel(f, cuts[i], cuts[i + 1]));
    }

    auto totals = [&heap]() {
        auto copy = heap;
        Panel<T> first = copy.top();
        copy.pop();
        T sum = first.value;
        double err = first.error;
        while (!copy.empty()) {
            sum = sum + copy.top().value;
            err += copy.top().error;
            copy.pop();
        }
        return std::pair<T, double>{sum, err};
    };

    int subdivisions = 0;
    while (true) {
        auto [sum, err] = totals();
        const double tol = std::max(spec.abs_tol, spec.rel_tol * detail::magnitude(sum));
        if (err <= tol) {
            return QuadratureResult<T>{sum, err, static_cast<int>(heap.size())};
        }
        if (subdivisions >= spec.max_subdiv) {
            throw QuadratureFailure("integrate_adaptive: tolerance not reached after " +
                                    std::to_string(subdivisions) + " subdivisions (error " +
                                    std::to_string(err) + ")");
        }
        Panel<T> worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        heap.push(detail::kronrod_panel(f, worst.a, mid));
        heap.push(detail::kronrod_panel(f, mid, worst.b));
        ++subdivisions;
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(int n);

/// Fixed-order Gauss-Legendre on each panel [cuts[i], cuts[i+1]].
template <class F>
auto integrate_fixed(const F& f, double a, double b, const GaussLegendreRule& rule,
                     std::span<const double> breakpoints = {})
{
    using T = std::decay_t<decltype(f(a))>;
    std::vector<double> cuts{a};
    for (double c : breakpoints) {
        if (c > a && c < b) cuts.push_back(c);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    bool first = true;
    T sum{};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double center = 0.5 * (cuts[i] + cuts[i + 1]);
        const double half = 0.5 * (cuts[i + 1] - cuts[i]);
        for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
            T term = (half * rule.weights[m]) * f(center + half * rule.nodes[m]);
            if (first) {
                sum = term;
                first = false;
            } else {
                sum = sum + term;
            }
        }
    }
    return sum;
}

}  // namespace calib
