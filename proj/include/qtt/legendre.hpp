#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qtt {

// Shifted Legendre basis on [0,1), orthonormal w.r.t. the Lebesgue measure:
// phi_n(x) = sqrt(2n+1) P_n(2x-1).

/// Values phi_0(x), ..., phi_m(x).
inline Eigen::VectorXd legendre_values(int m, double x) {
    Eigen::VectorXd v(m + 1);
    const double t = 2.0 * x - 1.0;
    double pkm1 = 1.0, pk = t;
    v(0) = 1.0;
    if (m >= 1) v(1) = std::sqrt(3.0) * t;
    for (int n = 2; n <= m; ++n) {
        const double pn = ((2 * n - 1) * t * pk - (n - 1) * pkm1) / n;
        pkm1 = pk;
        pk = pn;
        v(n) = std::sqrt(2.0 * n + 1.0) * pn;
    }
    return v;
}

/// Row n holds the monomial coefficients of phi_n in powers of x.
/// Lower triangular with nonzero diagonal.
inline Eigen::MatrixXd legendre_monomial_matrix(int m) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m + 1, m + 1);
    // P_n(2x-1) in monomials, built by the three-term recurrence.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m + 1, m + 1);
    P(0, 0) = 1.0;
    if (m >= 1) { P(1, 0) = -1.0; P(1, 1) = 2.0; }
    for (int n = 2; n <= m; ++n) {
        // P_n = ((2n-1)(2x-1) P_{n-1} - (n-1) P_{n-2}) / n
        for (int j = 0; j <= n; ++j) {
            double c = 0.0;
            if (j >= 1) c += (2.0 * n - 1.0) * 2.0 * P(n - 1, j - 1);
            c += -(2.0 * n - 1.0) * P(n - 1, j);
            c += -(n - 1.0) * P(n - 2, j);
            P(n, j) = c / n;
        }
    }
    for (int n = 0; n <= m; ++n) M.row(n) = std::sqrt(2.0 * n + 1.0) * P.row(n);
    return M;
}

/// Converts monomial coefficients (length <= m+1) to coefficients in the
/// orthonormal shifted Legendre basis of degree m.
inline Eigen::VectorXd monomial_to_legendre(const Eigen::VectorXd& mono, int m) {
    if (mono.size() > m + 1)
        throw std::invalid_argument("monomial_to_legendre: polynomial degree exceeds basis degree");
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(m + 1);
    padded.head(mono.size()) = mono;
    const Eigen::MatrixXd M = legendre_monomial_matrix(m);
    // mono = M^T * leg  (rows of M are basis polynomials)
    return M.transpose().triangularView<Eigen::Upper>().solve(padded);
}

/// Gauss point/weight pair on [0,1].
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0,1], exact for polynomials of degree 2n-1.
inline QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n over [-1,1], Chebyshev initial guess.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            const double pn = (n == 0) ? 1.0 : (n == 1 ? x : p1);
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
        rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

/// Dilation matrix A_d of the base-b refinement x = (d + y)/b:
/// phi_n((d+y)/b) = sum_{n'} A_d(n,n') phi_{n'}(y). Lower triangular.
inline Eigen::MatrixXd dilation_matrix(int m, int b, int d) {
    if (d < 0 || d >= b) throw std::invalid_argument("dilation_matrix: digit out of range");
    const Eigen::MatrixXd M = legendre_monomial_matrix(m);
    Eigen::MatrixXd A(m + 1, m + 1);
    // binomial table
    Eigen::MatrixXd binom = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (int i = 0; i <= m; ++i) {
        binom(i, 0) = 1.0;
        for (int j = 1; j <= i; ++j)
            binom(i, j) = binom(i - 1, j - 1) + (j <= i - 1 ? binom(i - 1, j) : 0.0);
    }
    for (int n = 0; n <= m; ++n) {
        // substitute x = (d+y)/b into the monomial expansion of phi_n
        Eigen::VectorXd mono = Eigen::VectorXd::Zero(m + 1);
        for (int j = 0; j <= n; ++j) {
            const double cj = M(n, j) / std::pow(static_cast<double>(b), j);
            for (int i = 0; i <= j; ++i)
                mono(i) += cj * binom(j, i) * std::pow(static_cast<double>(d), j - i);
        }
        A.row(n) = monomial_to_legendre(mono, m).transpose();
    }
    // snap structural zeros (n' > n) and roundoff dust
    const double scale = A.cwiseAbs().maxCoeff();
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j)
            if (std::abs(A(i, j)) < 1e-14 * scale) A(i, j) = 0.0;
    return A;
}

} // namespace qtt
