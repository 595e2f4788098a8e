#include "calib/radial.hpp"

#include <cmath>
#include <string>

namespace calib {

namespace {

constexpr double kPoleTol = 1e-9;

// sin and cos of r, measured from the nearer pole so that both stay accurate
// when r is close to pi.
double stable_sin(double r) { return r > kPi / 2 ? std::sin(kPi - r) : std::sin(r); }
double stable_cos(double r) { return r > kPi / 2 ? -std::cos(kPi - r) : std::cos(r); }

// I_k(t)/sin^{k-1}(t) on [0, pi).
double phi_value(int k, double t)
{
    if (t == 0.0) return 0.0;
    if (t < 1e-6) return t / k * (1.0 + (k - 1.0) * t * t / (3.0 * (k + 2.0)));
    return sine_power_integral(k, t) / std::pow(stable_sin(t), k - 1);
}

}  // namespace

std::vector<double> a_coeffs(int j)
{
    if (j < 1) throw DomainError("a_coeffs: j must be >= 1");
    std::vector<double> a(static_cast<std::size_t>(j));
    a[0] = 1.0 / (2.0 * j - 1.0);
    for (int i = 1; i < j; ++i) {
        a[i] = 2.0 * (j - i) / (2.0 * j - (i + 1.0)) * a[i - 1];
    }
    return a;
}

double psi_general(int k, double r)
{
    if (k < 2) throw DomainError("psi_general: k must be >= 2");
    if (r <= 0.0) throw SingularPoint("psi: singular at r = 0");
    if (r > kPi) throw DomainError("psi: r exceeds pi");
    // I_k(r) - I_k(pi) = -I_k(pi - r).
    return -phi_value(k, kPi - r);
}

double psi_even_closed(int k, double r)
{
    if (k < 2 || k % 2 != 0) throw DomainError("psi_even_closed: k must be even");
    if (r <= 0.0) throw SingularPoint("psi: singular at r = 0");
    if (r > kPi) throw DomainError("psi: r exceeds pi");
    const auto a = a_coeffs(k / 2);
    const double one_minus_cos = 2.0 * std::pow(std::sin(0.5 * r), 2);
    const double s = stable_sin(r);
    double sum = 0.0;
    double denom = 1.0;
    for (double ai : a) {
        denom *= one_minus_cos;
        sum -= ai * s / denom;
    }
    return sum;
}

RadialProfile::RadialProfile(int k, ProfileKind kind) : k_(k), kind_(kind)
{
    if (k < 2) throw DomainError("RadialProfile: k must be >= 2");
}

RadialProfile phi_profile(int k) { return RadialProfile(k, ProfileKind::Phi); }
RadialProfile psi_profile(int k) { return RadialProfile(k, ProfileKind::Psi); }

void RadialProfile::check_regular(double r) const
{
    if (kind_ == ProfileKind::Phi) {
        if (r < 0.0 || r >= kPi) throw DomainError("phi: argument outside [0, pi)");
    } else {
        if (r <= 0.0) throw SingularPoint("psi: singular at r = 0");
        if (r > kPi) throw DomainError("psi: argument exceeds pi");
    }
}

double RadialProfile::value(double r) const
{
    check_regular(r);
    if (kind_ == ProfileKind::Phi) return phi_value(k_, r);
    return (k_ % 2 == 0) ? psi_even_closed(k_, r) : psi_general(k_, r);
}

double RadialProfile::radial_term(double r) const
{
    check_regular(r);
    // Regular poles: Phi at 0 and Psi at pi, where f cot -> 1/k.
    if (kind_ == ProfileKind::Phi && r == 0.0) return 1.0 / k_;
    if (kind_ == ProfileKind::Psi && r == kPi) return 1.0 / k_;
    return value(r) * stable_cos(r) / stable_sin(r);
}

double RadialProfile::deriv(double r) const
{
    return 1.0 - (k_ - 1.0) * radial_term(r);
}

double RadialProfile::anisotropic_term(double r) const
{
    return 1.0 - k_ * radial_term(r);
}

TangentVector eval_atom(const RadialAtom& atom, const SpherePoint& q)
{
    const Vec zero = Vec::Zero(q.ambient_dim());
    if (atom.weight == 0.0) return TangentVector{q, zero};
    const double r = dist(atom.center, q);
    const bool phi = atom.profile.kind() == ProfileKind::Phi;
    const bool near_center = r < kPoleTol;
    const bool near_antipode = r > kPi - kPoleTol;
    if ((phi && near_antipode) || (!phi && near_center)) {
        throw SingularPoint("eval_atom: point at the singular pole of the field");
    }
    // At the regular pole the profile vanishes.
    if (near_center || near_antipode) return TangentVector{q, zero};
    const TangentVector g = grad_dist(atom.center, q);
    return TangentVector{q, atom.weight * atom.profile.value(r) * g.vec};
}

PlaneBasis::PlaneBasis(SpherePoint base_, Mat vectors_)
    : base(std::move(base_)), vectors(std::move(vectors_))
{
    if (vectors.rows() != base.ambient_dim()) {
        throw DomainError("PlaneBasis: vectors have the wrong ambient dimension");
    }
    const Mat gram = vectors.transpose() * vectors;
    if ((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-10) {
        throw DomainError("PlaneBasis: vectors are not orthonormal");
    }
    if ((base.coords().transpose() * vectors).cwiseAbs().maxCoeff() > 1e-10) {
        throw DomainError("PlaneBasis: vectors are not tangent at the base point");
    }
}

DivergenceDecomposition::DivergenceDecomposition(SpherePoint base, int k)
    : base_(std::move(base)), k_(k),
      anisotropic_(Mat::Zero(base_.ambient_dim(), base_.ambient_dim()))
{
    if (k < 1 || k > base_.sphere_dim()) {
        throw DomainError("DivergenceDecomposition: need 1 <= k <= n");
    }
}

void DivergenceDecomposition::add_atom(const RadialAtom& atom, double scale)
{
    const double w = scale * atom.weight;
    if (w == 0.0) return;
    const double r = dist(atom.center, base_);
    const bool phi = atom.profile.kind() == ProfileKind::Phi;
    const bool near_center = r < kPoleTol;
    const bool near_antipode = r > kPi - kPoleTol;
    if ((phi && near_antipode) || (!phi && near_center)) {
        throw SingularPoint("divergence: point at the singular pole of the field");
    }
    if (near_center || near_antipode) {
        // f' = f cot = 1/k at the regular pole: div = 1 for every plane.
        isotropic_ += w;
        return;
    }
    isotropic_ += w * k_ * atom.profile.radial_term(r);
    const double a = w * atom.profile.anisotropic_term(r);
    const Vec u = grad_dist(atom.center, base_).vec;
    anisotropic_.noalias() += a * u * u.transpose();
}

void DivergenceDecomposition::add_raw(double isotropic, const Mat& anisotropic)
{
    isotropic_ += isotropic;
    anisotropic_ += anisotropic;
}

double DivergenceDecomposition::along_plane(const PlaneBasis& plane) const
{
    if (plane.k() != k_) throw DomainError("along_plane: plane dimension differs from k");
    return isotropic_ + (plane.vectors.transpose() * anisotropic_ * plane.vectors).trace();
}

namespace {

Eigen::SelfAdjointEigenSolver<Mat> tangent_eigen(const SpherePoint& base, const Mat& m,
                                                 Mat& basis)
{
    basis = tangent_basis(base);
    const Mat restricted = basis.transpose() * m * basis;
    return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (restricted + restricted.transpose()));
}

}  // namespace

double DivergenceDecomposition::supremum() const
{
    Mat basis;
    const auto solver = tangent_eigen(base_, anisotropic_, basis);
    const auto& ev = solver.eigenvalues();
    double top = 0.0;
    for (int i = 0; i < k_; ++i) top += ev(ev.size() - 1 - i);
    return isotropic_ + top;
}

PlaneBasis DivergenceDecomposition::maximizing_plane() const
{
    Mat basis;
    const auto solver = tangent_eigen(base_, anisotropic_, basis);
    Mat frame = basis * solver.eigenvectors().rightCols(k_);
    // Re-orthonormalize against roundoff.
    Eigen::HouseholderQR<Mat> qr(frame);
    Mat q = qr.householderQ() * Mat::Identity(frame.rows(), k_);
    return PlaneBasis(base_, q);
}

double div_along_plane(const RadialAtom& atom, const PlaneBasis& plane)
{
    DivergenceDecomposition d(plane.base, plane.k());
    d.add_atom(atom);
    return d.along_plane(plane);
}

double sup_div(std::span<const RadialAtom> atoms, const SpherePoint& q, int k,
               const LineIntegralTerm* line)
{
    DivergenceDecomposition d(q, k);
    for (const auto& atom : atoms) d.add_atom(atom);
    if (line != nullptr) line->accumulate_divergence(d);
    return d.supremum();
}

}  // namespace calib
