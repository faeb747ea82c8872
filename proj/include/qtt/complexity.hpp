#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtt/tt.hpp"

namespace qtt {

/// The three complexity measures of one TT representation.
struct ComplexityReport {
    std::int64_t compl_F = 0; ///< number of representation parameters
    std::int64_t compl_S = 0; ///< number of nonzero parameters
    std::int64_t compl_N = 0; ///< sum of ranks ("neurons")
};

/// Measures the representation at hand. compl_F counts all core entries,
/// compl_S the entries with |entry| > zeta (zeta = 0: structural zeros only),
/// compl_N sums the declared ranks.
inline ComplexityReport measure(const TTFunction& f, double zeta = 0.0) {
    f.validate();
    ComplexityReport rep;
    for (const Core& c : f.cores) {
        rep.compl_F += static_cast<std::int64_t>(c.entries.size());
        for (double e : c.entries)
            if (std::abs(e) > zeta) ++rep.compl_S;
    }
    for (int r : f.declared_ranks()) rep.compl_N += r;
    return rep;
}

/// Parameters of the closed-form bound evaluators.
struct BoundParams {
    int mbar = 0;              ///< auxiliary spline degree
    int m = 0;                 ///< TT polynomial degree
    int b = 2;
    int L = 0;
    int D = 1;
    std::vector<double> alpha; ///< anisotropic smoothness multi-index
    double s_iso = 0.0;
    double s_mix = 0.0;
    int L_delta = 0;           ///< projection depth, used when mbar > m

    double aggregated_smoothness() const {
        if (alpha.empty()) throw std::invalid_argument("BoundParams: alpha not set");
        double inv = 0.0;
        for (double a : alpha) {
            if (a <= 0.0) throw std::invalid_argument("BoundParams: alpha entries must be > 0");
            inv += 1.0 / a;
        }
        return static_cast<double>(alpha.size()) / inv;
    }
};

struct BoundTriple {
    double F = 0.0;
    double S = 0.0;
    double N = 0.0;
};

enum class SmoothnessKind { Iso, Aniso, Mixed };

inline SmoothnessKind smoothness_kind_from_string(const std::string& s) {
    if (s == "iso") return SmoothnessKind::Iso;
    if (s == "aniso") return SmoothnessKind::Aniso;
    if (s == "mixed") return SmoothnessKind::Mixed;
    throw std::invalid_argument("unknown smoothness kind: " + s);
}

namespace detail {

inline double pow_d(double x, int e) { return std::pow(x, e); }

/// Number of weak compositions of L into D nonnegative parts.
inline double compositions(int L, int D) {
    double r = 1.0;
    for (int i = 1; i < D; ++i) r *= static_cast<double>(L + i) / i;
    return r;
}

/// Number of partitions of L into at most D parts.
inline std::int64_t partitions_at_most(int L, int D) {
    std::vector<std::int64_t> p(L + 1, 0);
    p[0] = 1;
    for (int part = 1; part <= D; ++part)
        for (int s = part; s <= L; ++s) p[s] += p[s - part];
    return p[L];
}

} // namespace detail

/// Balance point of the rank crossover in the level-L complexity sums and the
/// resulting exponent: c = 2 nu* s_A / (L alpha_min) for anisotropic smoothness,
/// c = 2 nu* D / L for mixed. Clamped into [1, 2D/(D+1)].
struct BalanceResult {
    double nu_star = 0.0;
    double c = 1.0;
    std::vector<int> permutation; ///< applied to sort alpha ascending
};

inline BalanceResult balance_exponents(SmoothnessKind kind, const BoundParams& p, int L) {
    if (L <= 0) throw std::invalid_argument("balance_exponents: level must be >= 1");
    const int D = p.D;
    const double cap = (D >= 2) ? 2.0 * D / (D + 1.0) : 1.0;
    BalanceResult res;

    if (kind == SmoothnessKind::Aniso || kind == SmoothnessKind::Iso) {
        std::vector<double> a = p.alpha;
        if (kind == SmoothnessKind::Iso) a.assign(D, p.s_iso > 0 ? p.s_iso : 1.0);
        if (static_cast<int>(a.size()) != D)
            throw std::invalid_argument("balance_exponents: alpha size must equal D");
        res.permutation.resize(D);
        for (int i = 0; i < D; ++i) res.permutation[i] = i;
        std::sort(res.permutation.begin(), res.permutation.end(),
                  [&](int i, int j) { return a[i] < a[j]; });
        std::sort(a.begin(), a.end());
        const double amin = a.front();
        const double sA = [&] {
            double inv = 0.0;
            for (double x : a) inv += 1.0 / x;
            return D / inv;
        }();
        // self-consistent saturation count: dimensions mu >= k have effective
        // level l_mu below the balance point and drop out of the rank product
        double nu = static_cast<double>(L) / 2.0;
        for (int k = D + 1; k >= 1; --k) {
            double inv = 0.0;
            for (int mu = 0; mu + 1 < k; ++mu) inv += 1.0 / a[mu];
            const double cand = L * amin * inv / (D + k - 1);
            if (cand <= 0.0) continue;
            // consistency: k = min{mu : a[mu] >= (L/cand) amin}, D+1 if none
            int kc = D + 1;
            for (int mu = 0; mu < D; ++mu)
                if (a[mu] >= (L / cand) * amin) { kc = mu + 1; break; }
            if (kc == k) { nu = cand; break; }
        }
        res.nu_star = nu;
        res.c = 2.0 * nu * sA / (L * amin);
    } else {
        const double Ctotal = detail::compositions(L, D);
        const double Csharp = Ctotal / static_cast<double>(detail::partitions_at_most(L, D));
        const double thr = (D * std::log(p.mbar + 1.0) / std::log(static_cast<double>(p.b)) +
                            std::log(Csharp) / std::log(static_cast<double>(p.b)) + L + 1.0) /
                           (D + 1.0);
        res.nu_star = thr - 1.0;
        res.c = 2.0 * res.nu_star * D / L;
    }
    res.c = std::clamp(res.c, 1.0, cap);
    return res;
}

/// Closed-form bounds of the full-level (linear) spline encodings: the variable
/// part with its stated coefficient; the theorems' hidden absolute constant is
/// reported as 1. The L_delta additive terms apply when mbar > m.
inline BoundTriple predicted_linear_bounds(SmoothnessKind kind, const BoundParams& p, double n) {
    if (n < 1.0) throw std::invalid_argument("predicted_linear_bounds: n must be >= 1");
    const int D = p.D;
    const double dimS2 = detail::pow_d(p.m + 1.0, 2 * D);
    const double mb2 = detail::pow_d(p.mbar + 1.0, 2 * D);
    const double mb1 = detail::pow_d(p.mbar + 1.0, D);
    double expF = 1.0, expN = 0.5;
    double extraFS = p.b * static_cast<double>(p.b) + (4.0 / 3.0) * dimS2;
    if (kind == SmoothnessKind::Iso) {
        extraFS = p.b * static_cast<double>(p.b) + (4.0 / 3.0) * detail::pow_d(p.m + 1.0, 2 * D + 1);
    } else {
        const BalanceResult bal = balance_exponents(kind, p, std::max(p.L, 1));
        expF = bal.c;
        expN = bal.c / 2.0;
    }
    BoundTriple out;
    out.F = (1.0 + mb2) * std::pow(n, expF) + extraFS;
    out.S = out.F;
    out.N = (1.0 + mb1) * std::pow(n, expN);
    if (p.mbar > p.m) {
        out.F += p.L_delta * D * mb2;
        out.S += p.L_delta * D * mb2;
        out.N += p.L_delta * D * mb1;
    }
    return out;
}

/// Exact constants of the arbitrary n-term encoding bounds. For mbar > m the
/// auxiliary degree replaces m in the stated places.
inline BoundTriple predicted_nonlinear_bounds(const BoundParams& p, double n, int L) {
    if (n < 1.0 || L < 1) throw std::invalid_argument("predicted_nonlinear_bounds: need n >= 1, L >= 1");
    const int D = p.D;
    const int deg = std::max(p.mbar, p.m);
    const double g2 = detail::pow_d(deg + 1.0, 2 * D);
    const double g1 = detail::pow_d(deg + 1.0, D);
    const double dimS2 = detail::pow_d(p.m + 1.0, 2 * D);
    BoundTriple out;
    out.F = p.b * static_cast<double>(p.b) + p.b * g2 * n * n * L * D + (4.0 / 3.0) * dimS2;
    out.S = (p.b * static_cast<double>(p.b) + p.b * g2 * L * D + (4.0 / 3.0) * dimS2) * n;
    out.N = g1 * n * L * D;
    return out;
}

/// Sparse quasi-additivity constant 2(1 + (dim S)^{2D}).
inline double p4_sparse_constant(int m, int D) {
    return 2.0 * (1.0 + detail::pow_d(m + 1.0, 2 * D));
}

/// Dense quasi-additivity constant enumerated in the proof:
/// 2 + 2b + 3(dim S)^D + (dim S)^{D+1} + (dim S)^D + (dim S)^{2D}.
inline double p4_dense_constant(int m, int D, int b) {
    const double s = m + 1.0;
    return 2.0 + 2.0 * b + 3.0 * detail::pow_d(s, D) + detail::pow_d(s, D + 1) +
           detail::pow_d(s, D) + detail::pow_d(s, 2 * D);
}

/// Both quasi-additivity constants; the first (sparse) is the primary one.
inline std::pair<double, double> p4_constant(int m, int D, int b = 2) {
    return {p4_sparse_constant(m, D), p4_dense_constant(m, D, b)};
}

} // namespace qtt
