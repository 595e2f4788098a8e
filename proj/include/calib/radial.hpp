#pragma once

// Radial profiles phi and psi, the radial fields built from them, and the
// divergence of such fields along tangent k-planes.

#include <span>
#include <vector>

#include "calib/sphere.hpp"

namespace calib {

/// Coefficients a_1..a_j of the even-dimensional closed form of psi.
std::vector<double> a_coeffs(int j);

enum class ProfileKind { Phi, Psi };

/// Scalar profile f of a radial field (f o d_c) grad d_c.
///
/// Phi: f(t) = I_k(t) / sin^{k-1}(t), f(0) = 0, singular at t = pi.
/// Psi: f(r) = (I_k(r) - I_k(pi)) / sin^{k-1}(r), singular at r = 0.
/// Both satisfy f' = 1 - (k-1) f cot.
class RadialProfile {
public:
    RadialProfile(int k, ProfileKind kind);

    int k() const noexcept { return k_; }
    ProfileKind kind() const noexcept { return kind_; }

    double value(double r) const;
    double deriv(double r) const;

    /// f(r) cot(r), finite at the regular pole.
    double radial_term(double r) const;
    /// f'(r) - f(r) cot(r); vanishes at the regular pole.
    double anisotropic_term(double r) const;

private:
    void check_regular(double r) const;

    int k_;
    ProfileKind kind_;
};

RadialProfile phi_profile(int k);
RadialProfile psi_profile(int k);

/// psi via -I_k(pi - r)/sin^{k-1}(r); valid for every k >= 2.
double psi_general(int k, double r);
/// psi via -sum_i a_i sin r / (1 - cos r)^i; even k only.
double psi_even_closed(int k, double r);

/// weight * (profile o d_center) * grad d_center.
struct RadialAtom {
    SpherePoint center;
    RadialProfile profile;
    double weight = 1.0;
};

/// Evaluates the atom at q. Throws SingularPoint at the profile's singular pole.
TangentVector eval_atom(const RadialAtom& atom, const SpherePoint& q);

/// Orthonormal k-frame (columns) of T_base S^n.
struct PlaneBasis {
    SpherePoint base;
    Mat vectors;

    PlaneBasis(SpherePoint base, Mat vectors);
    int k() const noexcept { return static_cast<int>(vectors.cols()); }
    /// Orthogonal projection onto the plane, as an ambient matrix.
    Mat projector() const { return vectors * vectors.transpose(); }
};

/// Divergence along a k-plane of a sum of radial fields, written as
///   isotropic + tr(P * anisotropic)
/// with P the orthogonal projection onto the plane. Each atom contributes
/// w k f cot r to the first part and w (f' - f cot r) u u^T to the second.
class DivergenceDecomposition {
public:
    DivergenceDecomposition(SpherePoint base, int k);

    const SpherePoint& base() const noexcept { return base_; }
    int k() const noexcept { return k_; }
    double isotropic() const noexcept { return isotropic_; }
    const Mat& anisotropic() const noexcept { return anisotropic_; }

    void add_atom(const RadialAtom& atom, double scale = 1.0);
    void add_raw(double isotropic, const Mat& anisotropic);

    double along_plane(const PlaneBasis& plane) const;
    /// Supremum over all k-planes of T_base S^n: isotropic plus the sum of the k
    /// largest eigenvalues of the anisotropic part restricted to the tangent space.
    double supremum() const;
    /// A k-plane attaining the supremum.
    PlaneBasis maximizing_plane() const;

private:
    SpherePoint base_;
    int k_;
    double isotropic_ = 0.0;
    Mat anisotropic_;
};

double div_along_plane(const RadialAtom& atom, const PlaneBasis& plane);

/// Extra divergence contributions that are not a finite list of atoms, such
/// as a quadrature-discretized line integral of atoms.
class LineIntegralTerm {
public:
    virtual ~LineIntegralTerm() = default;
    virtual void accumulate_divergence(DivergenceDecomposition& out) const = 0;
};

/// Supremum over k-planes at q of the divergence of sum(atoms) + line term.
double sup_div(std::span<const RadialAtom> atoms, const SpherePoint& q, int k,
               const LineIntegralTerm* line = nullptr);

}  // namespace calib
