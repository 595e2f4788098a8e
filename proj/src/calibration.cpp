#include "calib/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace calib {

namespace {

// Radius below which a requested distance is considered to meet the exclusion bound.
constexpr double kExclusionSlack = 1.0 - 1e-9;

}  // namespace

FieldWeights field_weights(int k, double R)
{
    if (k < 2 || k % 2 != 0) throw UnsupportedDimension("field_weights: k must be even");
    FieldWeights w;
    w.z_weight = 2.0 * sine_power_integral(k, R) / sine_power_integral(k, kPi);
    if (k == 2) {
        w.phi_weight = cos_radius(R);
        w.phi_weight_alt = w.phi_weight;
        return w;
    }
    const double lower = sine_power_integral(k - 2, R);
    w.phi_weight = cos_radius(R) * std::pow(std::sin(R), k - 2) / ((k - 2.0) * lower);
    w.phi_weight_alt = 1.0 - (k - 1.0) / (k - 2.0) * sine_power_integral(k, R) / lower;
    return w;
}

CompositeField::CompositeField(BallSpec spec, double phi_weight, double z_weight,
                               std::function<double(double)> h, double h_integral,
                               BuildOptions options)
    : spec_(std::move(spec)), phi_weight_(phi_weight), z_weight_(z_weight), h_(std::move(h)),
      h_integral_(h_integral), options_(options), gamma_(gamma_of(spec_)),
      phi_(phi_profile(spec_.k)), psi_(psi_profile(spec_.k))
{
}

std::vector<RadialAtom> CompositeField::atoms() const
{
    return {RadialAtom{spec_.p, phi_, phi_weight_}, RadialAtom{spec_.y, psi_, z_weight_}};
}

void CompositeField::check_point(const SpherePoint& q) const
{
    if (dist(q, spec_.y) < options_.exclusion_radius * kExclusionSlack) {
        throw SingularPoint("CompositeField: point inside the exclusion ball around y");
    }
    // Phi_p and the atoms centered near gamma(pi) = -p are singular at -p.
    if ((phi_weight_ != 0.0 || h_) &&
        dist(q, spec_.p.antipode()) < options_.exclusion_radius * kExclusionSlack) {
        throw SingularPoint("CompositeField: point inside the exclusion ball around -p");
    }
}

std::vector<double> CompositeField::breakpoints(const SpherePoint& q) const
{
    const Vec& x = q.coords();
    double s_star = std::atan2(x.dot(gamma_.direction()), x.dot(spec_.p.coords()));
    s_star = std::clamp(s_star, spec_.R, kPi);
    const double d_min = dist(q, gamma_.point(s_star));
    std::vector<double> cuts{s_star};
    if (d_min < 0.5) {
        for (double offset = d_min; offset < kPi; offset *= 2.0) {
            if (s_star - offset > spec_.R) cuts.push_back(s_star - offset);
            if (s_star + offset < kPi) cuts.push_back(s_star + offset);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

template <class F>
auto CompositeField::integrate_line(const SpherePoint& q, const F& integrand) const
{
    const auto cuts = breakpoints(q);
    const auto& quad = options_.quad;
    if (quad.scheme == QuadratureSpec::Scheme::FixedNodes) {
        const GaussLegendreRule rule = gauss_legendre(quad.fixed_nodes);
        return integrate_fixed(integrand, spec_.R, kPi, rule, cuts);
    }
    return integrate_adaptive(integrand, spec_.R, kPi, quad, cuts).value;
}

TangentVector CompositeField::eval_line_integral(const SpherePoint& q) const
{
    check_point(q);
    if (!h_) return TangentVector{q, Vec::Zero(q.ambient_dim())};
    auto integrand = [&](double s) -> Vec {
        const double weight = h_(s);
        if (weight == 0.0) return Vec::Zero(q.ambient_dim());
        const RadialAtom atom{gamma_.point(s), psi_, weight};
        return eval_atom(atom, q).vec;
    };
    return TangentVector{q, integrate_line(q, integrand)};
}

TangentVector CompositeField::eval_z(const SpherePoint& q) const
{
    check_point(q);
    const TangentVector psi_y = eval_atom(RadialAtom{spec_.y, psi_, 1.0}, q);
    return TangentVector{q, psi_y.vec + eval_line_integral(q).vec};
}

TangentVector CompositeField::eval(const SpherePoint& q) const
{
    check_point(q);
    const TangentVector phi_p = eval_atom(RadialAtom{spec_.p, phi_, phi_weight_}, q);
    return TangentVector{q, phi_p.vec + z_weight_ * eval_z(q).vec};
}

void CompositeField::accumulate_divergence(DivergenceDecomposition& out) const
{
    if (!h_) return;
    const SpherePoint& q = out.base();
    check_point(q);
    const int m = q.ambient_dim();
    const int k = out.k();
    // Packed as [isotropic, vec(anisotropic)].
    auto integrand = [&](double s) -> Vec {
        Vec packed = Vec::Zero(1 + m * m);
        const double weight = h_(s);
        if (weight == 0.0) return packed;
        const SpherePoint center = gamma_.point(s);
        const double r = dist(center, q);
        if (r > kPi - 1e-9) {
            packed(0) = weight;
            return packed;
        }
        packed(0) = weight * k * psi_.radial_term(r);
        const double a = weight * psi_.anisotropic_term(r);
        const Vec u = grad_dist(center, q).vec;
        Eigen::Map<Mat>(packed.data() + 1, m, m).noalias() = a * u * u.transpose();
        return packed;
    };
    const Vec total = integrate_line(q, integrand);
    out.add_raw(z_weight_ * total(0), z_weight_ * Eigen::Map<const Mat>(total.data() + 1, m, m));
}

DivergenceDecomposition CompositeField::divergence(const SpherePoint& q) const
{
    check_point(q);
    DivergenceDecomposition d(q, spec_.k);
    for (const auto& atom : atoms()) d.add_atom(atom);
    accumulate_divergence(d);
    return d;
}

double CompositeField::sup_div(const SpherePoint& q) const { return divergence(q).supremum(); }

double CompositeField::div_along_plane(const PlaneBasis& plane) const
{
    return divergence(plane.base).along_plane(plane);
}

CompositeField CompositeField::with_weights(double phi_weight, double z_weight) const
{
    CompositeField copy = *this;
    copy.phi_weight_ = phi_weight;
    copy.z_weight_ = z_weight;
    return copy;
}

CompositeField CompositeField::with_quadrature(const QuadratureSpec& quad) const
{
    CompositeField copy = *this;
    copy.options_.quad = quad;
    return copy;
}

CompositeField build_W(const BallSpec& spec, const BuildOptions& options)
{
    if (spec.k % 2 != 0) {
        throw UnsupportedDimension("build_W: the field is only constructed for even k");
    }
    const FieldWeights w = field_weights(spec.k, spec.R);
    const double cR = cos_radius(spec.R);
    if (spec.k == 2 || cR == 0.0) {
        return CompositeField(spec, w.phi_weight, w.z_weight, {}, 0.0, options);
    }

    const double R = spec.R;
    if (options.h_source == HSource::ClosedForm) {
        if (spec.k == 4) {
            const double scale = cR / std::pow(std::sin(R), 2);
            auto h = [scale](double s) { return scale * std::sin(s); };
            return CompositeField(spec, w.phi_weight, w.z_weight, h, scale * (1.0 + cR), options);
        }
        if (spec.k == 6) {
            auto h = [R](double s) { return h_k6_closed(R, s); };
            QuadratureSpec tight;
            tight.abs_tol = 1e-13;
            tight.rel_tol = 1e-13;
            tight.max_subdiv = 400;
            const double integral = integrate_adaptive(h, R, kPi, tight).value;
            return CompositeField(spec, w.phi_weight, w.z_weight, h, integral, options);
        }
        throw UnsupportedDimension("build_W: closed-form h exists only for k = 4 and k = 6");
    }

    auto solution = std::make_shared<const HSolution>(
        solve_h(assemble_system(spec.k / 2, R), options.ode));
    auto h = [solution](double s) { return solution->h(s); };
    return CompositeField(spec, w.phi_weight, w.z_weight, h, solution->integral, options);
}

std::vector<SpherePoint> boundary_samples(const BallSpec& spec, int count, std::uint64_t seed,
                                          double band)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const Mat basis = tangent_basis(spec.p);
    std::vector<SpherePoint> out;
    out.reserve(static_cast<std::size_t>(count));
    int attempts = 0;
    while (static_cast<int>(out.size()) < count) {
        if (++attempts > 1000 * std::max(count, 1)) {
            throw DomainError("boundary_samples: band excludes the whole boundary");
        }
        Vec g(basis.cols());
        for (auto& v : g) v = normal(rng);
        const Vec dir = basis * (g / g.norm());
        SpherePoint x = exp_map(spec.p, spec.R * dir);
        if (dist(x, spec.y) >= band) out.push_back(std::move(x));
    }
    return out;
}

TangencyReport tangency_residual(const CompositeField& field,
                                 std::span<const SpherePoint> boundary_points)
{
    const BallSpec& spec = field.spec();
    const double sR = std::sin(spec.R);
    const double cR = cos_radius(spec.R);
    const double C = 1.0 + field.h_integral();
    TangencyReport report;
    report.samples = static_cast<int>(boundary_points.size());
    const RadialAtom phi{spec.p, phi_profile(spec.k), 1.0};
    for (std::size_t i = 0; i < boundary_points.size(); ++i) {
        const SpherePoint& x = boundary_points[i];
        const Vec normal = grad_dist(spec.p, x).vec;
        report.max_residual = std::max(report.max_residual, std::abs(field.eval(x).dot(normal)));
        const double z_normal = field.eval_z(x).dot(normal);
        report.max_identity_residual = std::max(
            report.max_identity_residual, std::abs((spec.k - 1) * sR * z_normal + cR * C));
        if (i == 0) report.phi_component = eval_atom(phi, x).dot(normal);
    }
    return report;
}

std::vector<SingularityRow> singularity_scaling(const CompositeField& field,
                                                std::span<const double> radii,
                                                std::optional<Vec> direction)
{
    const BallSpec& spec = field.spec();
    Vec u;
    if (direction) {
        u = project_tangent(spec.y, *direction);
    } else {
        u = project_tangent(spec.y, spec.p.coords());
    }
    if (u.norm() < 1e-14) throw DomainError("singularity_scaling: degenerate direction");
    u /= u.norm();
    const double coefficient = 2.0 * sine_power_integral(spec.k, spec.R);

    std::vector<SingularityRow> rows;
    for (double r : radii) {
        const SpherePoint q = exp_map(spec.y, r * u);
        const double d = dist(q, spec.y);
        const double scale = std::pow(d, spec.k - 1);
        const Vec W = field.eval(q).vec;
        const Vec grad_y = grad_dist(spec.y, q).vec;
        SingularityRow row;
        row.r = r;
        row.scaled_deviation = scale * (W + coefficient / scale * grad_y).norm();
        row.scaled_magnitude = scale * W.norm();
        row.scaled_line_term = scale * field.z_weight() * field.eval_line_integral(q).vec.norm();
        rows.push_back(row);
    }
    return rows;
}

Vec euclid_integral_term(int k, const Vec& x, const Vec& y, const QuadratureSpec& quad)
{
    auto integrand = [&](double t) -> Vec {
        const Vec d = t * x - y;
        return d / std::pow(d.norm(), k);
    };
    return integrate_adaptive(integrand, 0.0, 1.0, quad).value;
}

Vec euclid_integral_term_inverted(int k, const Vec& x, const Vec& y, const QuadratureSpec& quad)
{
    // u = 1 + v / (1 - v) maps [0, 1) onto [1, inf).
    auto integrand = [&](double v) -> Vec {
        const double u = 1.0 + v / (1.0 - v);
        const double jacobian = 1.0 / ((1.0 - v) * (1.0 - v));
        const Vec d = x - u * y;
        return (std::pow(u, k - 3) * jacobian / std::pow(d.norm(), k)) * d;
    };
    return integrate_adaptive(integrand, 0.0, 1.0, quad).value;
}

Vec euclid_limit_field(int k, const Vec& x, const Vec& y, const QuadratureSpec& quad)
{
    const Vec d = x - y;
    Vec out = x / k - (2.0 / k) * d / std::pow(d.norm(), k);
    if (k > 2) out -= ((k - 2.0) / k) * euclid_integral_term(k, x, y, quad);
    return out;
}

std::vector<Vec> euclid_samples(int n, int count, std::uint64_t seed, double band)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vec y = Vec::Zero(n);
    y(0) = 1.0;
    std::vector<Vec> out;
    while (static_cast<int>(out.size()) < count) {
        Vec g(n);
        for (auto& v : g) v = normal(rng);
        const Vec x = std::pow(uniform(rng), 1.0 / n) * g / g.norm();
        if ((x - y).norm() >= band) out.push_back(x);
    }
    return out;
}

EuclidReport euclid_limit_compare(int k, int n, std::span<const double> R_seq,
                                  std::span<const Vec> samples, const BuildOptions& options)
{
    if (k != 2 && k != 4 && k != 6) {
        throw UnsupportedDimension("euclid_limit_compare: k must be 2, 4 or 6");
    }
    EuclidReport report;
    report.k = k;
    Vec y_ball = Vec::Zero(n);
    y_ball(0) = 1.0;

    for (double R : R_seq) {
        const BallSpec spec = BallSpec::canonical(n, k, R);
        BuildOptions opts = options;
        opts.exclusion_radius = std::min(options.exclusion_radius, 1e-3 * R);
        const CompositeField field = build_W(spec, opts);
        const Vec& p = spec.p.coords();

        double max_error = 0.0;
        for (const Vec& x : samples) {
            Vec v = Vec::Zero(n + 1);
            v.segment(1, n) = R * x;
            const SpherePoint q = exp_map(spec.p, v);
            const Vec W = field.eval(q).vec;

            // Inverse differential of exp_p at v: radial directions are
            // preserved, perpendicular ones are scaled by sin t / t.
            const double t = v.norm();
            Vec pre;
            if (t < 1e-14) {
                pre = W;
            } else {
                const Vec u = v / t;
                const Vec radial = -std::sin(t) * p + std::cos(t) * u;
                const double a = W.dot(radial);
                const Vec perp = W - a * radial;
                pre = a * u + (t / std::sin(t)) * perp;
            }
            const Vec ball = pre.segment(1, n) / R;
            const Vec expected = euclid_limit_field(k, x, y_ball, options.quad);
            max_error = std::max(max_error, (ball - expected).norm());
        }
        report.rows.push_back(EuclidRow{R, max_error});
    }

    report.decreasing = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (!(report.rows[i].max_error < report.rows[i - 1].max_error)) report.decreasing = false;
    }
    if (report.rows.size() >= 2) {
        double mx = 0, my = 0;
        for (const auto& row : report.rows) {
            mx += std::log(row.R);
            my += std::log(row.max_error);
        }
        mx /= report.rows.size();
        my /= report.rows.size();
        double sxy = 0, sxx = 0;
        for (const auto& row : report.rows) {
            sxy += (std::log(row.R) - mx) * (std::log(row.max_error) - my);
            sxx += (std::log(row.R) - mx) * (std::log(row.R) - mx);
        }
        report.slope = sxy / sxx;
    }
    return report;
}

}  // namespace calib
