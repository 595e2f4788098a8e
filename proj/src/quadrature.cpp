#include "calib/quadrature.hpp"

#include <cmath>

namespace calib {

GaussLegendreRule gauss_legendre(int n)
{
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double beta = i / std::sqrt(4.0 * i * i - 1.0);
        jacobi(i, i - 1) = beta;
        jacobi(i - 1, i) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = 2.0 * v0 * v0;
    }
    return rule;
}

}  // namespace calib
