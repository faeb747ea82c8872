#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtt/splines.hpp"
#include "qtt/tt.hpp"

namespace qtt {

/// Discretization used for L^p norms: composite tensor Gauss-Legendre on the
/// b-adic cells of cell_level, or seeded Monte Carlo for higher dimensions.
struct QuadratureSpec {
    enum class Method { Gauss, MonteCarlo };
    int nodes_per_cell = 4;
    int cell_level = 4;
    Method method = Method::Gauss;
    long long samples = 1000000;
    unsigned long long seed = 20240901ULL;

    void validate() const {
        if (nodes_per_cell < 1 || cell_level < 0 || samples < 1)
            throw std::invalid_argument("QuadratureSpec: counts must be positive");
    }

    /// Desk-scale default: exact cell-aligned quadrature up to D = 2,
    /// seeded Monte Carlo beyond.
    static QuadratureSpec standard(int D, int cell_level = 4) {
        QuadratureSpec s;
        s.cell_level = cell_level;
        if (D >= 3) s.method = Method::MonteCarlo;
        return s;
    }
};

namespace detail {

template <typename F>
double quad_lp(const F& f, double p, const QuadratureSpec& spec, int D, int b,
               const std::vector<double>& lo, const std::vector<double>& hi) {
    spec.validate();
    if (!(p > 0.0)) throw std::invalid_argument("lp_norm: p must be in (0, inf]");
    double acc = 0.0, vmax = 0.0;
    auto consume = [&](double v, double w) {
        if (!std::isfinite(v))
            throw std::runtime_error("lp_norm: non-finite evaluation encountered");
        const double a = std::abs(v);
        if (std::isinf(p)) vmax = std::max(vmax, a);
        else acc += w * std::pow(a, p);
    };

    if (spec.method == QuadratureSpec::Method::MonteCarlo) {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double vol = 1.0;
        for (int nu = 0; nu < D; ++nu) vol *= std::max(0.0, hi[nu] - lo[nu]);
        if (vol <= 0.0) return 0.0;
        std::vector<double> x(D);
        const double w = vol / static_cast<double>(spec.samples);
        for (long long s = 0; s < spec.samples; ++s) {
            for (int nu = 0; nu < D; ++nu) x[nu] = lo[nu] + (hi[nu] - lo[nu]) * unif(rng);
            consume(f(x), w);
        }
    } else {
        const long long cells = pow_ll(b, spec.cell_level);
        const double h = 1.0 / static_cast<double>(cells);
        const QuadRule rule = gauss_legendre(spec.nodes_per_cell);
        // per-dimension node/weight lists over cells fully inside [lo, hi]
        std::vector<std::vector<double>> nodes(D), weights(D);
        for (int nu = 0; nu < D; ++nu) {
            for (long long c = 0; c < cells; ++c) {
                const double a = c * h, e = (c + 1) * h;
                if (a < lo[nu] - 1e-15 || e > hi[nu] + 1e-15) continue;
                for (size_t q = 0; q < rule.nodes.size(); ++q) {
                    nodes[nu].push_back(a + h * rule.nodes[q]);
                    weights[nu].push_back(h * rule.weights[q]);
                }
            }
            if (nodes[nu].empty()) return 0.0;
        }
        std::vector<size_t> it(D, 0);
        std::vector<double> x(D);
        while (true) {
            double w = 1.0;
            for (int nu = 0; nu < D; ++nu) {
                x[nu] = nodes[nu][it[nu]];
                w *= weights[nu][it[nu]];
            }
            consume(f(x), w);
            int nu = D - 1;
            while (nu >= 0 && ++it[nu] == nodes[nu].size()) it[nu--] = 0;
            if (nu < 0) break;
        }
    }
    return std::isinf(p) ? vmax : std::pow(acc, 1.0 / p);
}

} // namespace detail

/// L^p (quasi-)norm of an evaluable function over [0,1)^D.
inline double lp_norm(const RealFunc& f, double p, const QuadratureSpec& spec, int D,
                      int b = 2) {
    return detail::quad_lp(f, p, spec, D, b, std::vector<double>(D, 0.0),
                           std::vector<double>(D, 1.0));
}

/// L^p distance between two evaluable functions.
inline double lp_error(const RealFunc& f, const RealFunc& g, double p,
                       const QuadratureSpec& spec, int D, int b = 2) {
    return detail::quad_lp(
        [&](const std::vector<double>& x) { return f(x) - g(x); }, p, spec, D, b,
        std::vector<double>(D, 0.0), std::vector<double>(D, 1.0));
}

/// Evaluable view of a TT function (clamps 1.0 endpoints just below 1).
inline RealFunc tt_function(const TTFunction& f) {
    return [f](const std::vector<double>& x) {
        std::vector<double> y = x;
        for (double& c : y)
            if (c >= 1.0) c = std::nextafter(1.0, 0.0);
        return evaluate(f, y);
    };
}

namespace detail {

/// ||Delta_h^r f||_p over the shrunk domain Omega_{rh}, restricted to
/// quadrature cells fully inside it.
inline double difference_norm(const RealFunc& f, const std::vector<double>& h, int r,
                              double p, const QuadratureSpec& spec, int D, int b) {
    std::vector<double> lo(D, 0.0), hi(D, 1.0);
    for (int nu = 0; nu < D; ++nu) {
        if (h[nu] >= 0.0) hi[nu] = 1.0 - r * h[nu];
        else lo[nu] = -r * h[nu];
        if (hi[nu] <= lo[nu]) return 0.0;
    }
    std::vector<double> binom(r + 1, 1.0);
    for (int k = 1; k <= r; ++k) binom[k] = binom[k - 1] * (r - k + 1) / k;
    auto diff = [&](const std::vector<double>& x) {
        double acc = 0.0;
        std::vector<double> y(D);
        double sign = (r % 2 == 0) ? 1.0 : -1.0;
        for (int k = 0; k <= r; ++k, sign = -sign) {
            for (int nu = 0; nu < D; ++nu) y[nu] = x[nu] + k * h[nu];
            acc += sign * binom[k] * f(y);
        }
        return acc;
    };
    return quad_lp(diff, p, spec, D, b, lo, hi);
}

/// Evaluation grid of the modulus supremum: coordinate directions plus
/// ceil(8(D-1)) seeded random unit directions, magnitudes geometric with
/// pts_per_decade points per decade down to t_min.
struct ModulusGrid {
    std::vector<std::vector<double>> directions;
    std::vector<double> magnitudes;  // ascending, includes the endpoint t
};

inline ModulusGrid modulus_grid(double t, int D, unsigned long long seed,
                                double t_min = 1e-4, int pts_per_decade = 20) {
    if (!(t > 0.0)) throw std::invalid_argument("modulus: t must be > 0");
    ModulusGrid g;
    for (int nu = 0; nu < D; ++nu) {
        std::vector<double> e(D, 0.0);
        e[nu] = 1.0;
        g.directions.push_back(e);
    }
    const int extra = static_cast<int>(std::ceil(8.0 * (D - 1)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < extra; ++k) {
        std::vector<double> e(D);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& c : e) {
                c = gauss(rng);
                norm += c * c;
            }
        } while (norm < 1e-12);
        norm = std::sqrt(norm);
        for (double& c : e) c /= norm;
        g.directions.push_back(e);
    }
    const double lo = std::min(t_min, t);
    const double step = std::pow(10.0, 1.0 / pts_per_decade);
    for (double mag = t; mag > lo * (1.0 - 1e-12); mag /= step) g.magnitudes.push_back(mag);
    std::reverse(g.magnitudes.begin(), g.magnitudes.end());
    return g;
}

} // namespace detail

/// Isotropic modulus of smoothness omega_r(f, t)_p, approximated as the max of
/// ||Delta_h^r f||_p over the recorded direction/magnitude grid with |h|_2 <= t.
inline double modulus(const RealFunc& f, int r, double t, double p,
                      const QuadratureSpec& spec, int D, int b = 2,
                      unsigned long long seed = 7ULL) {
    if (r < 1) throw std::invalid_argument("modulus: difference order r must be >= 1");
    const auto grid = detail::modulus_grid(t, D, seed);
    double best = 0.0;
    std::vector<double> h(D);
    for (const auto& dir : grid.directions)
        for (double mag : grid.magnitudes) {
            for (int nu = 0; nu < D; ++nu) h[nu] = mag * dir[nu];
            best = std::max(best, detail::difference_norm(f, h, r, p, spec, D, b));
        }
    return best;
}

/// Estimated Besov (quasi-)semi-norm together with the probing grid record.
struct SmoothnessEstimate {
    double s = 0.0;
    double p = 2.0;
    double q = 2.0;
    int r = 1;                       ///< difference order floor(s) + 1
    double value = 0.0;
    std::vector<double> t_grid;      ///< probed step magnitudes in (0, 1]
    std::string grid_note;
};

/// Discretization of |f|_{B^s_q(L^p)} = || t^{-s} omega_r(f,t)_p ||_{L^q(dt/t)}
/// over a geometric t-grid in (0,1]; q = inf takes the sup over the grid.
inline SmoothnessEstimate besov_seminorm(const RealFunc& f, double s, double p, double q,
                                         const QuadratureSpec& spec, int D, int b = 2,
                                         double t_min = 1e-3, int pts_per_decade = 10,
                                         unsigned long long seed = 7ULL) {
    if (!(s > 0.0)) throw std::invalid_argument("besov_seminorm: s must be > 0");
    SmoothnessEstimate est;
    est.s = s;
    est.p = p;
    est.q = q;
    est.r = static_cast<int>(std::floor(s)) + 1;

    // evaluate the difference norms once per (direction, magnitude); the
    // modulus at each t is the running max over magnitudes <= t
    const auto grid = detail::modulus_grid(1.0, D, seed, t_min, pts_per_decade);
    est.t_grid = grid.magnitudes;
    est.grid_note = "geometric t-grid in (0,1], " + std::to_string(pts_per_decade) +
                    " points per decade, t_min = " + std::to_string(t_min);
    std::vector<double> omega(grid.magnitudes.size(), 0.0);
    std::vector<double> h(D);
    for (const auto& dir : grid.directions)
        for (size_t i = 0; i < grid.magnitudes.size(); ++i) {
            for (int nu = 0; nu < D; ++nu) h[nu] = grid.magnitudes[i] * dir[nu];
            omega[i] = std::max(omega[i], detail::difference_norm(f, h, est.r, p, spec, D, b));
        }
    for (size_t i = 1; i < omega.size(); ++i) omega[i] = std::max(omega[i], omega[i - 1]);

    if (std::isinf(q)) {
        double best = 0.0;
        for (size_t i = 0; i < omega.size(); ++i)
            best = std::max(best, std::pow(grid.magnitudes[i], -s) * omega[i]);
        est.value = best;
    } else {
        // integral sum_i [t_i^{-s} omega(t_i)]^q * (log t_{i+1} - log t_i)
        double acc = 0.0;
        for (size_t i = 0; i + 1 < omega.size(); ++i) {
            const double dt = std::log(grid.magnitudes[i + 1]) - std::log(grid.magnitudes[i]);
            acc += std::pow(std::pow(grid.magnitudes[i], -s) * omega[i], q) * dt;
        }
        est.value = std::pow(acc, 1.0 / q);
    }
    return est;
}

/// Sawtooth psi_l(x) = frac(b^l x).
inline double sawtooth_value(int l, int b, double x) {
    const double y = std::pow(static_cast<double>(b), l) * x;
    return y - std::floor(y);
}

/// Exact TT of the (coordinate-wise product of) sawtooth at tensorization
/// level l: all-ones digit cores and the identity remainder, so every rank is
/// 1. Requires m >= 1 for the linear remainder.
inline TTFunction sawtooth_tt(int l, int b = 2, int m = 1, int D = 1) {
    if (l < 0) throw std::invalid_argument("sawtooth_tt: level must be >= 0");
    if (m < 1) throw std::invalid_argument("sawtooth_tt: need m >= 1 for the remainder");
    TTFunction f;
    f.params = {b, l, 1};
    f.m = m;
    for (int k = 0; k < l; ++k) {
        Core c(1, b, 1);
        for (int d = 0; d < b; ++d) c.at(0, d, 0) = 1.0;
        f.cores.push_back(std::move(c));
    }
    Core poly(1, m + 1, 1);
    poly.at(0, 0, 0) = 0.5;                      // xbar = 1/2 + phi_1/(2 sqrt 3)
    poly.at(0, 1, 0) = 0.5 / std::sqrt(3.0);
    f.cores.push_back(std::move(poly));
    f.validate();
    if (D == 1) return f;
    return interleave(std::vector<TTFunction>(D, f));
}

/// Evaluable D-dimensional sawtooth product.
inline RealFunc sawtooth_function(int l, int b = 2) {
    return [l, b](const std::vector<double>& x) {
        double v = 1.0;
        for (double c : x) v *= sawtooth_value(l, b, c);
        return v;
    };
}

} // namespace qtt
