#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qtt/legendre.hpp"

namespace qtt {

/// Piecewise polynomial on [0,1): cell k covers [breakpoints[k], breakpoints[k+1])
/// with monomial coefficients in the local coordinate t = (x - lo)/(hi - lo).
struct PiecewisePoly {
    std::vector<double> breakpoints;      // increasing, size cells+1, spanning [0,1]
    std::vector<Eigen::VectorXd> cells;   // local monomial coefficients per cell

    int num_cells() const { return static_cast<int>(cells.size()); }

    void validate() const {
        if (breakpoints.size() != cells.size() + 1)
            throw std::invalid_argument("PiecewisePoly: breakpoint/cell count mismatch");
        for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
            if (!(breakpoints[i] < breakpoints[i + 1]))
                throw std::invalid_argument("PiecewisePoly: breakpoints not increasing");
    }

    int cell_of(double x) const {
        if (!(x >= breakpoints.front() && x < breakpoints.back()))
            throw std::domain_error("PiecewisePoly: point outside domain");
        // cells are few at desk scale; linear scan is fine
        for (size_t k = 0; k + 1 < breakpoints.size(); ++k)
            if (x < breakpoints[k + 1]) return static_cast<int>(k);
        return num_cells() - 1;
    }

    /// r-th derivative at x (one-sided from the right at breakpoints).
    double derivative(double x, int r) const {
        const int k = cell_of(x);
        const double w = breakpoints[k + 1] - breakpoints[k];
        const double t = (x - breakpoints[k]) / w;
        const Eigen::VectorXd& c = cells[k];
        double acc = 0.0;
        for (int j = r; j < c.size(); ++j) {
            double fact = 1.0;
            for (int i = 0; i < r; ++i) fact *= (j - i);
            acc += c(j) * fact * std::pow(t, j - r);
        }
        return acc / std::pow(w, r);
    }

    double operator()(double x) const { return derivative(x, 0); }
};

/// Exact polynomial pieces of the cardinal B-spline of degree mbar: segment k
/// holds the monomial coefficients of phi_mbar(k + t) for t in [0,1),
/// k = 0..mbar, built by the Cox-de Boor recurrence.
inline std::vector<Eigen::VectorXd> bspline_segments(int mbar) {
    if (mbar < 0) throw std::invalid_argument("bspline_segments: degree must be >= 0");
    std::vector<Eigen::VectorXd> seg{Eigen::VectorXd::Ones(1)};
    for (int mdeg = 1; mdeg <= mbar; ++mdeg) {
        std::vector<Eigen::VectorXd> next(mdeg + 1, Eigen::VectorXd::Zero(mdeg + 1));
        for (int k = 0; k <= mdeg; ++k) {
            // phi_m(k+t) = ((k+t)/m) phi_{m-1}(k+t) + ((m+1-k-t)/m) phi_{m-1}(k-1+t)
            if (k <= mdeg - 1) {
                const Eigen::VectorXd& a = seg[k];
                for (int j = 0; j < a.size(); ++j) {
                    next[k](j) += k * a(j) / mdeg;
                    next[k](j + 1) += a(j) / mdeg;
                }
            }
            if (k >= 1) {
                const Eigen::VectorXd& a = seg[k - 1];
                for (int j = 0; j < a.size(); ++j) {
                    next[k](j) += (mdeg + 1 - k) * a(j) / mdeg;
                    next[k](j + 1) -= a(j) / mdeg;
                }
            }
        }
        seg = std::move(next);
    }
    return seg;
}

/// phi_mbar(x) on the real line (zero outside [0, mbar+1)).
inline double cardinal_bspline(int mbar, double x) {
    if (x < 0.0 || x >= mbar + 1.0) return 0.0;
    static thread_local std::vector<std::vector<Eigen::VectorXd>> cache;
    if (static_cast<int>(cache.size()) <= mbar) cache.resize(mbar + 1);
    if (cache[mbar].empty()) cache[mbar] = bspline_segments(mbar);
    const int k = static_cast<int>(std::floor(x));
    const double t = x - k;
    const Eigen::VectorXd& c = cache[mbar][k];
    double acc = 0.0, tp = 1.0;
    for (int j = 0; j < c.size(); ++j, tp *= t) acc += c(j) * tp;
    return acc;
}

/// Base-b refinement mask: phi_mbar(x) = sum_k mask[k] phi_mbar(b x - k),
/// mask[k] = b^{-mbar} [z^k] (1 + z + ... + z^{b-1})^{mbar+1}.
inline std::vector<double> refinement_mask(int mbar, int b) {
    std::vector<double> poly{1.0};
    for (int rep = 0; rep <= mbar; ++rep) {
        std::vector<double> next(poly.size() + b - 1, 0.0);
        for (size_t i = 0; i < poly.size(); ++i)
            for (int d = 0; d < b; ++d) next[i + d] += poly[i];
        poly = std::move(next);
    }
    const double s = std::pow(static_cast<double>(b), -mbar);
    for (double& c : poly) c *= s;
    return poly;
}

/// de Boor-Fix dual functional for the cardinal B-spline N_j = phi_mbar(x/h - j)
/// on the uniform level-l grid (h = b^{-l}), applied to a piecewise polynomial g.
/// Exactly recovers c_j when g = sum_i c_i N_i near the evaluation point.
inline double deboor_fix_coefficient(const PiecewisePoly& g, int mbar, int l, int b, int j) {
    const double h = std::pow(static_cast<double>(b), -l);
    const long cells_total = std::lround(1.0 / h);
    // evaluation point: midpoint of the middle support cell, clamped into [0,1)
    long cell = j + mbar / 2;
    if (cell < 0) cell = 0;
    if (cell > cells_total - 1) cell = cells_total - 1;
    const double tau = (cell + 0.5) * h;

    // psi(y) = prod_{r=1}^{mbar} (y - (j+r) h), monomial coefficients
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(mbar + 1);
    psi(0) = 1.0;
    int deg = 0;
    for (int r = 1; r <= mbar; ++r) {
        const double root = (j + r) * h;
        for (int i = deg; i >= 0; --i) {
            psi(i + 1) += psi(i);
            psi(i) *= -root;
        }
        ++deg;
    }
    auto psi_deriv = [&](int order) {
        double acc = 0.0;
        for (int i = order; i <= mbar; ++i) {
            double fact = 1.0;
            for (int q = 0; q < order; ++q) fact *= (i - q);
            acc += psi(i) * fact * std::pow(tau, i - order);
        }
        return acc;
    };

    double mfact = 1.0;
    for (int i = 2; i <= mbar; ++i) mfact *= i;
    double acc = 0.0;
    double sign = 1.0;
    for (int r = 0; r <= mbar; ++r, sign = -sign)
        acc += sign * psi_deriv(mbar - r) * g.derivative(tau, r);
    return acc / mfact;
}

/// Result of reducing a piecewise polynomial to degree m on b^{L_delta} cells.
struct DegreeReduction {
    PiecewisePoly projected;
    double lp_error = 0.0;
};

/// Per-cell orthogonal L^2 projection of g onto polynomials of degree m over
/// the uniform partition of [0,1) into b^{L_delta} cells; the error is the
/// L^p distance measured by composite Gauss quadrature.
inline DegreeReduction project_to_degree(const PiecewisePoly& g, int m, int L_delta,
                                         int b, double p) {
    g.validate();
    if (L_delta < 0) throw std::invalid_argument("project_to_degree: L_delta must be >= 0");
    const long ncells = std::lround(std::pow(static_cast<double>(b), L_delta));
    const int gdeg = static_cast<int>(
        std::max_element(g.cells.begin(), g.cells.end(),
                         [](const auto& a, const auto& c) { return a.size() < c.size(); })
            ->size()) - 1;
    const QuadRule rule = gauss_legendre(std::max(gdeg, m) + 2);
    const Eigen::MatrixXd leg_mono = legendre_monomial_matrix(m);

    DegreeReduction out;
    out.projected.breakpoints.resize(ncells + 1);
    double err_acc = 0.0, err_max = 0.0;
    for (long cidx = 0; cidx <= ncells; ++cidx)
        out.projected.breakpoints[cidx] = static_cast<double>(cidx) / ncells;

    for (long cidx = 0; cidx < ncells; ++cidx) {
        const double lo = out.projected.breakpoints[cidx];
        const double hi = out.projected.breakpoints[cidx + 1];
        // Legendre coefficients of g on the cell, integrating piecewise so the
        // quadrature stays exact across interior breakpoints of g
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(m + 1);
        std::vector<double> pts{lo};
        for (double bp : g.breakpoints)
            if (bp > lo && bp < hi) pts.push_back(bp);
        pts.push_back(hi);
        std::sort(pts.begin(), pts.end());
        for (size_t s = 0; s + 1 < pts.size(); ++s) {
            const double a = pts[s], c = pts[s + 1];
            for (size_t q = 0; q < rule.nodes.size(); ++q) {
                const double x = a + (c - a) * rule.nodes[q];
                const double w = (c - a) * rule.weights[q];
                const double t = (x - lo) / (hi - lo);
                coeff += (w / (hi - lo)) * g(x) * legendre_values(m, t);
            }
        }
        // back to local monomials
        Eigen::VectorXd mono = Eigen::VectorXd::Zero(m + 1);
        for (int n = 0; n <= m; ++n) mono += coeff(n) * leg_mono.row(n).transpose();
        out.projected.cells.push_back(mono);

        // accumulate the cell's L^p error
        for (size_t s = 0; s + 1 < pts.size(); ++s) {
            const double a = pts[s], c = pts[s + 1];
            for (size_t q = 0; q < rule.nodes.size(); ++q) {
                const double x = a + (c - a) * rule.nodes[q];
                const double w = (c - a) * rule.weights[q];
                const double t = (x - lo) / (hi - lo);
                double pv = 0.0, tp = 1.0;
                for (int jj = 0; jj <= m; ++jj, tp *= t) pv += mono(jj) * tp;
                const double diff = std::abs(g(x) - pv);
                if (std::isinf(p)) err_max = std::max(err_max, diff);
                else err_acc += w * std::pow(diff, p);
            }
        }
    }
    out.lp_error = std::isinf(p) ? err_max : std::pow(err_acc, 1.0 / p);
    return out;
}

} // namespace qtt
