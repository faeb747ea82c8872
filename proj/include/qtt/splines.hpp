#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtt/bspline.hpp"
#include "qtt/complexity.hpp"
#include "qtt/legendre.hpp"
#include "qtt/tt.hpp"

namespace qtt {

/// One tensor-product dilated B-spline: per-dimension levels l_nu >= 0 and
/// shifts j_nu in {-mbar, ..., b^{l_nu} - 1}.
struct SplineIndex {
    std::vector<int> levels;
    std::vector<long long> shifts;

    int dim() const { return static_cast<int>(levels.size()); }

    void validate(int mbar, int b) const {
        if (levels.empty() || levels.size() != shifts.size())
            throw std::invalid_argument("SplineIndex: level/shift size mismatch");
        for (size_t nu = 0; nu < levels.size(); ++nu) {
            if (levels[nu] < 0)
                throw std::invalid_argument("SplineIndex: negative level");
            const long long cells = static_cast<long long>(std::llround(
                std::pow(static_cast<double>(b), levels[nu])));
            if (shifts[nu] < -static_cast<long long>(mbar) || shifts[nu] >= cells)
                throw std::invalid_argument("SplineIndex: shift out of range");
        }
    }

    bool operator==(const SplineIndex&) const = default;
    bool operator<(const SplineIndex& o) const {
        if (levels != o.levels) return levels < o.levels;
        return shifts < o.shifts;
    }
};

/// Finite expansion sum_lambda d_{lambda,p} phi_lambda with L^p-normalized
/// splines of degree mbar (p = inf uses the convention b^{l/p} := 1).
struct NTermExpansion {
    double p = 2.0;
    int mbar = 0;
    std::vector<std::pair<SplineIndex, double>> terms;

    int size() const { return static_cast<int>(terms.size()); }

    /// Coefficient lookup; absent indices read as 0.
    double coeff(const SplineIndex& idx) const {
        for (const auto& [k, v] : terms)
            if (k == idx) return v;
        return 0.0;
    }
};

inline nlohmann::json to_json(const NTermExpansion& e) {
    nlohmann::json j;
    if (std::isinf(e.p)) j["p"] = "inf";
    else j["p"] = e.p;
    j["mbar"] = e.mbar;
    j["terms"] = nlohmann::json::array();
    for (const auto& [idx, c] : e.terms) {
        nlohmann::json t;
        t["levels"] = idx.levels;
        t["shifts"] = idx.shifts;
        t["coeff"] = c;
        j["terms"].push_back(std::move(t));
    }
    return j;
}

inline NTermExpansion nterm_from_json(const nlohmann::json& j) {
    NTermExpansion e;
    if (j.at("p").is_string()) e.p = std::numeric_limits<double>::infinity();
    else e.p = j.at("p").get<double>();
    e.mbar = j.at("mbar").get<int>();
    for (const auto& t : j.at("terms")) {
        SplineIndex idx;
        idx.levels = t.at("levels").get<std::vector<int>>();
        idx.shifts = t.at("shifts").get<std::vector<long long>>();
        e.terms.emplace_back(std::move(idx), t.at("coeff").get<double>());
    }
    return e;
}

namespace detail {

inline long long pow_ll(int base, int exp) {
    long long r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

/// b^{l/p} with the p = inf convention b^{l/p} := 1.
inline double lp_scale(int b, int l, double p) {
    if (std::isinf(p)) return 1.0;
    return std::pow(static_cast<double>(b), l / p);
}

} // namespace detail

/// Rank-one atom of eq:rankone, 1D: the first l digit cores are b^{1/p}-scaled
/// Kronecker deltas on the base-b digits of the cell index j, the polynomial
/// core holds segment k of the cardinal B-spline phi_mbar, and the result is
/// level-extended to L. Polynomial degree of the target space is m (>= mbar);
/// m < 0 defaults to mbar.
inline TTFunction encode_segment_atom(int l, long long j, int k, int mbar,
                                      double p, int L, int b = 2, int m = -1) {
    if (m < 0) m = mbar;
    if (mbar > m) throw std::invalid_argument("encode_segment_atom: mbar must be <= m");
    if (l < 0 || L < l) throw std::invalid_argument("encode_segment_atom: need 0 <= l <= L");
    if (k < 0 || k > mbar) throw std::invalid_argument("encode_segment_atom: segment out of range");
    const long long cells = detail::pow_ll(b, l);
    if (j < 0 || j >= cells) throw std::invalid_argument("encode_segment_atom: cell index out of range");

    TTFunction f;
    f.params = {b, l, 1};
    f.m = m;
    const double s = std::isinf(p) ? 1.0 : std::pow(static_cast<double>(b), 1.0 / p);
    for (int kk = 1; kk <= l; ++kk) {
        const int digit = static_cast<int>((j / detail::pow_ll(b, l - kk)) % b);
        Core c(1, b, 1);
        c.at(0, digit, 0) = s;
        f.cores.push_back(std::move(c));
    }
    const auto segments = bspline_segments(mbar);
    Eigen::VectorXd mono = Eigen::VectorXd::Zero(m + 1);
    mono.head(segments[k].size()) = segments[k];
    const Eigen::VectorXd leg = monomial_to_legendre(mono, m);
    Core poly(1, m + 1, 1);
    for (int n = 0; n <= m; ++n) poly.at(0, n, 0) = leg(n);
    f.cores.push_back(std::move(poly));
    f.validate();
    if (L > l) f = round(extend_level(f, L), 1e-13);
    return f;
}

/// Dilated spline b^{l/p} phi_mbar(b^l x - j) restricted to [0,1), as the sum
/// of its surviving segment atoms, rounded at 1e-13 and level-extended to L.
/// Shift range j in {-mbar, ..., b^l - 1}; ranks stay within mbar + 1.
inline TTFunction encode_dilated_spline(int l, long long j, int mbar, double p,
                                        int L, int b = 2, int m = -1) {
    if (m < 0) m = mbar;
    if (l < 0 || L < l) throw std::invalid_argument("encode_dilated_spline: need 0 <= l <= L");
    const long long cells = detail::pow_ll(b, l);
    if (j < -static_cast<long long>(mbar) || j >= cells)
        throw std::invalid_argument("encode_dilated_spline: shift out of range");

    TTFunction acc;
    bool have = false;
    for (int k = 0; k <= mbar; ++k) {
        const long long cell = j + k;
        if (cell < 0 || cell >= cells) continue;
        TTFunction atom = encode_segment_atom(l, cell, k, mbar, p, l, b, m);
        acc = have ? add(acc, atom) : atom;
        have = true;
    }
    if (!have) return tt_zero({b, L, 1}, m);
    acc = round(acc, 1e-13);
    if (L > l) acc = round(extend_level(acc, L), 1e-13);
    return acc;
}

/// Interleaves D one-dimensional TT functions at a common level into the
/// level-major D-dimensional ordering. The joint core at (level k, dim nu)
/// applies factor nu's k-th core on its rank slot and the identity on every
/// other slot, so joint ranks are products of per-factor ranks.
inline TTFunction interleave(const std::vector<TTFunction>& fs) {
    if (fs.empty()) throw std::invalid_argument("interleave: no factors");
    const int D = static_cast<int>(fs.size());
    const int b = fs[0].params.b, L = fs[0].params.L, m = fs[0].m;
    for (const TTFunction& f : fs) {
        f.validate();
        if (f.params.D != 1) throw std::invalid_argument("interleave: factors must be 1D");
        if (f.params.b != b || f.params.L != L || f.m != m)
            throw std::invalid_argument("interleave: factors must share b, L and m");
    }
    // R[mu][t]: rank of factor mu after its t-th core, R[mu][0] = 1.
    std::vector<std::vector<int>> R(D);
    for (int mu = 0; mu < D; ++mu) {
        R[mu].push_back(1);
        for (const Core& c : fs[mu].cores) R[mu].push_back(c.right);
    }

    TTFunction out;
    out.params = {b, L, D};
    out.m = m;
    for (int k = 0; k <= L; ++k) {
        for (int nu = 0; nu < D; ++nu) {
            const Core& src = fs[nu].cores[k];
            std::vector<int> ls(D), rs(D);
            int lo = 1, ro = 1;
            for (int mu = 0; mu < D; ++mu) {
                ls[mu] = (mu < nu) ? R[mu][k + 1] : R[mu][k];
                rs[mu] = (mu <= nu) ? R[mu][k + 1] : R[mu][k];
                lo *= ls[mu];
                ro *= rs[mu];
            }
            Core c(lo, src.mode, ro);
            // iterate over all joint left indices; the right index shares every
            // slot except nu, which runs over the factor core's right rank
            std::vector<int> idx(D, 0);
            for (int I = 0; I < lo; ++I) {
                int rem = I;
                for (int mu = D - 1; mu >= 0; --mu) {
                    idx[mu] = rem % ls[mu];
                    rem /= ls[mu];
                }
                for (int x = 0; x < src.mode; ++x)
                    for (int jn = 0; jn < rs[nu]; ++jn) {
                        const double v = src.at(idx[nu], x, jn);
                        if (v == 0.0) continue;
                        int J = 0;
                        for (int mu = 0; mu < D; ++mu)
                            J = J * rs[mu] + (mu == nu ? jn : idx[mu]);
                        c.at(I, x, J) = v;
                    }
            }
            out.cores.push_back(std::move(c));
        }
    }
    out.validate();
    return out;
}

/// Tensor product of dilated splines: each 1D factor encoded at the uniform
/// level L, then interleaved; ranks stay within (mbar+1)^D.
inline TTFunction encode_tensor_product(const SplineIndex& idx, int mbar,
                                        double p, int L, int b = 2, int m = -1) {
    if (m < 0) m = mbar;
    idx.validate(mbar, b);
    for (int lnu : idx.levels)
        if (lnu > L) throw std::invalid_argument("encode_tensor_product: level exceeds L");
    if (idx.dim() == 1)
        return encode_dilated_spline(idx.levels[0], idx.shifts[0], mbar, p, L, b, m);
    std::vector<TTFunction> factors;
    for (int nu = 0; nu < idx.dim(); ++nu)
        factors.push_back(
            encode_dilated_spline(idx.levels[nu], idx.shifts[nu], mbar, p, L, b, m));
    return round(interleave(factors), 1e-13);
}

/// Closed-form evaluation of the (possibly boundary-truncated) dilated spline.
inline double dilated_spline_value(int l, long long j, int mbar, double p, int b, double x) {
    const double scale = std::pow(static_cast<double>(b), l);
    return detail::lp_scale(b, l, p) * cardinal_bspline(mbar, scale * x - static_cast<double>(j));
}

// ---------------------------------------------------------------------------
// Index sets
// ---------------------------------------------------------------------------

namespace detail {

inline void append_shifts(std::vector<SplineIndex>& out, const std::vector<int>& lev,
                          int mbar, int b) {
    const int D = static_cast<int>(lev.size());
    std::vector<long long> counts(D);
    long long total = 1;
    for (int nu = 0; nu < D; ++nu) {
        counts[nu] = pow_ll(b, lev[nu]) + mbar;
        total *= counts[nu];
    }
    for (long long flat = 0; flat < total; ++flat) {
        SplineIndex idx;
        idx.levels = lev;
        idx.shifts.resize(D);
        long long rem = flat;
        for (int nu = D - 1; nu >= 0; --nu) {
            idx.shifts[nu] = rem % counts[nu] - mbar;
            rem /= counts[nu];
        }
        out.push_back(std::move(idx));
    }
}

} // namespace detail

/// Isotropic index set at level l: all shifts of the uniform multilevel (l,...,l).
inline std::vector<SplineIndex> index_set_iso(int l, int mbar, int D, int b) {
    if (l < 0 || D < 1) throw std::invalid_argument("index_set_iso: bad parameters");
    std::vector<SplineIndex> out;
    detail::append_shifts(out, std::vector<int>(D, l), mbar, b);
    return out;
}

/// Per-dimension anisotropic levels l_nu(l) = floor(l alpha_min / alpha_nu).
inline std::vector<int> aniso_levels(const std::vector<double>& alpha, int l) {
    if (alpha.empty()) throw std::invalid_argument("aniso_levels: alpha empty");
    double amin = alpha[0];
    for (double a : alpha) {
        if (a <= 0.0) throw std::invalid_argument("aniso_levels: alpha entries must be > 0");
        amin = std::min(amin, a);
    }
    std::vector<int> lev(alpha.size());
    for (size_t nu = 0; nu < alpha.size(); ++nu)
        lev[nu] = static_cast<int>(std::floor(l * amin / alpha[nu] + 1e-12));
    return lev;
}

/// Anisotropic index set at chain parameter l: the single multilevel row
/// (l_1(l), ..., l_D(l)) with its full shift range.
inline std::vector<SplineIndex> index_set_aniso(const std::vector<double>& alpha,
                                                int l, int mbar, int b) {
    if (l < 0) throw std::invalid_argument("index_set_aniso: bad level");
    std::vector<SplineIndex> out;
    detail::append_shifts(out, aniso_levels(alpha, l), mbar, b);
    return out;
}

/// Hyperbolic-cross index set: every multilevel with |l|_1 <= L.
inline std::vector<SplineIndex> index_set_mixed(int L, int mbar, int D, int b) {
    if (L < 0 || D < 1) throw std::invalid_argument("index_set_mixed: bad parameters");
    std::vector<SplineIndex> out;
    std::vector<int> lev(D, 0);
    std::function<void(int, int)> rec = [&](int nu, int budget) {
        if (nu == D) {
            detail::append_shifts(out, lev, mbar, b);
            return;
        }
        for (int l = 0; l <= budget; ++l) {
            lev[nu] = l;
            rec(nu + 1, budget - l);
        }
    };
    rec(0, L);
    return out;
}

// ---------------------------------------------------------------------------
// Quasi-interpolant coefficient pipeline
// ---------------------------------------------------------------------------

using RealFunc = std::function<double(const std::vector<double>&)>;

namespace detail {

/// Per-cell tensor Legendre coefficients (degree mbar per dimension) of f on
/// the anisotropic grid with b^{lev[nu]} cells per dimension, by tensor Gauss
/// quadrature with `nodes` points per direction.
struct CellProjection {
    std::vector<long long> cells;  // per-dimension cell counts
    int mbar = 0;
    int D = 1;
    std::vector<double> coeffs;    // [cell-flat][basis-flat], row-major

    long long cell_count() const {
        long long t = 1;
        for (long long c : cells) t *= c;
        return t;
    }
    int basis_count() const {
        int t = 1;
        for (int nu = 0; nu < D; ++nu) t *= (mbar + 1);
        return t;
    }
};

inline CellProjection project_cells(const RealFunc& f, const std::vector<int>& lev,
                                    int mbar, int b, int nodes) {
    CellProjection P;
    P.D = static_cast<int>(lev.size());
    P.mbar = mbar;
    for (int lnu : lev) P.cells.push_back(pow_ll(b, lnu));
    const long long ncell = P.cell_count();
    const int nbasis = P.basis_count();
    P.coeffs.assign(static_cast<size_t>(ncell) * nbasis, 0.0);

    const QuadRule rule = gauss_legendre(nodes);
    const int Q = nodes;
    long long qtotal = 1;
    for (int nu = 0; nu < P.D; ++nu) qtotal *= Q;

    std::vector<long long> cidx(P.D, 0);
    std::vector<int> qidx(P.D, 0), nidx(P.D, 0);
    std::vector<double> x(P.D, 0.0);
    std::vector<Eigen::VectorXd> phi(P.D);
    for (long long cf = 0; cf < ncell; ++cf) {
        long long rem = cf;
        for (int nu = P.D - 1; nu >= 0; --nu) {
            cidx[nu] = rem % P.cells[nu];
            rem /= P.cells[nu];
        }
        double* out = &P.coeffs[static_cast<size_t>(cf) * nbasis];
        for (long long qf = 0; qf < qtotal; ++qf) {
            long long qrem = qf;
            double w = 1.0;
            for (int nu = P.D - 1; nu >= 0; --nu) {
                qidx[nu] = static_cast<int>(qrem % Q);
                qrem /= Q;
                const double t = rule.nodes[qidx[nu]];
                x[nu] = (static_cast<double>(cidx[nu]) + t) / P.cells[nu];
                w *= rule.weights[qidx[nu]];
                phi[nu] = legendre_values(mbar, t);
            }
            const double fv = w * f(x);
            for (int nf = 0; nf < nbasis; ++nf) {
                int nrem = nf;
                double pv = 1.0;
                for (int nu = P.D - 1; nu >= 0; --nu) {
                    nidx[nu] = nrem % (mbar + 1);
                    nrem /= (mbar + 1);
                    pv *= phi[nu](nidx[nu]);
                }
                out[nf] += fv * pv;
            }
        }
    }
    return P;
}

/// de Boor-Fix dual functional at level l, shift j, expressed as a weight
/// vector against the local Legendre coefficients of the chosen cell.
struct DualFunctional {
    long long cell = 0;
    Eigen::VectorXd w;
};

inline DualFunctional dual_functional(int mbar, int l, int b, long long j) {
    DualFunctional d;
    const long long cells = pow_ll(b, l);
    long long cell = j + mbar / 2;
    if (cell < 0) cell = 0;
    if (cell > cells - 1) cell = cells - 1;
    d.cell = cell;
    d.w.resize(mbar + 1);
    const double h = 1.0 / static_cast<double>(cells);
    const Eigen::MatrixXd leg = legendre_monomial_matrix(mbar);
    for (int n = 0; n <= mbar; ++n) {
        PiecewisePoly g;
        g.breakpoints = {cell * h, (cell + 1) * h};
        g.cells = {leg.row(n).transpose()};
        d.w(n) = deboor_fix_coefficient(g, mbar, l, b, j);
    }
    return d;
}

/// Coefficient array over the shift box prod_nu {-mbar..b^{lev[nu]}-1},
/// row-major with dimension 0 slowest, unnormalized (coefficients of the
/// unscaled splines phi_mbar(b^l x - j)).
inline std::vector<double> spline_coeffs(const CellProjection& P,
                                         const std::vector<int>& lev, int mbar, int b) {
    const int D = P.D;
    std::vector<long long> counts(D);
    long long total = 1;
    for (int nu = 0; nu < D; ++nu) {
        counts[nu] = P.cells[nu] + mbar;
        total *= counts[nu];
    }
    // dual functionals per dimension and shift
    std::vector<std::vector<DualFunctional>> dual(D);
    for (int nu = 0; nu < D; ++nu)
        for (long long s = 0; s < counts[nu]; ++s)
            dual[nu].push_back(dual_functional(mbar, lev[nu], b, s - mbar));

    const int nbasis = P.basis_count();
    std::vector<double> out(total, 0.0);
    std::vector<long long> sidx(D, 0);
    std::vector<int> nidx(D, 0);
    for (long long flat = 0; flat < total; ++flat) {
        long long rem = flat;
        long long cellflat = 0;
        for (int nu = 0; nu < D; ++nu) {
            sidx[nu] = (flat / [&] {
                long long s = 1;
                for (int mu = nu + 1; mu < D; ++mu) s *= counts[mu];
                return s;
            }()) % counts[nu];
        }
        (void)rem;
        for (int nu = 0; nu < D; ++nu)
            cellflat = cellflat * P.cells[nu] + dual[nu][sidx[nu]].cell;
        const double* a = &P.coeffs[static_cast<size_t>(cellflat) * nbasis];
        double acc = 0.0;
        for (int nf = 0; nf < nbasis; ++nf) {
            int nrem = nf;
            double wv = 1.0;
            for (int nu = D - 1; nu >= 0; --nu) {
                nidx[nu] = nrem % (mbar + 1);
                nrem /= (mbar + 1);
                wv *= dual[nu][sidx[nu]].w(nidx[nu]);
            }
            acc += wv * a[nf];
        }
        out[flat] = acc;
    }
    return out;
}

/// Refines a coefficient array one dimension at a time from in_lev to out_lev
/// (per dimension, out >= in) using the base-b^{delta} refinement mask;
/// children with empty support in [0,1) are dropped.
inline std::vector<double> refine_coeffs(const std::vector<double>& in,
                                         const std::vector<int>& in_lev,
                                         const std::vector<int>& out_lev,
                                         int mbar, int b) {
    const int D = static_cast<int>(in_lev.size());
    std::vector<double> cur = in;
    std::vector<long long> counts(D);
    for (int nu = 0; nu < D; ++nu) counts[nu] = pow_ll(b, in_lev[nu]) + mbar;
    for (int nu = 0; nu < D; ++nu) {
        const int dl = out_lev[nu] - in_lev[nu];
        if (dl < 0) throw std::invalid_argument("refine_coeffs: level decrease");
        if (dl == 0) continue;
        const long long B = pow_ll(b, dl);
        const std::vector<double> mask = refinement_mask(mbar, static_cast<int>(B));
        const long long nin = counts[nu];
        const long long nout = pow_ll(b, out_lev[nu]) + mbar;
        long long stride = 1, outer = 1;
        for (int mu = nu + 1; mu < D; ++mu) stride *= counts[mu];
        for (int mu = 0; mu < nu; ++mu) outer *= counts[mu];
        std::vector<double> next(static_cast<size_t>(outer) * nout * stride, 0.0);
        for (long long o = 0; o < outer; ++o)
            for (long long i = 0; i < nin; ++i) {
                const long long shift_in = i - mbar;
                for (size_t k = 0; k < mask.size(); ++k) {
                    const long long shift_out = B * shift_in + static_cast<long long>(k);
                    if (shift_out < -mbar || shift_out >= pow_ll(b, out_lev[nu])) continue;
                    const long long io = shift_out + mbar;
                    for (long long s = 0; s < stride; ++s)
                        next[(o * nout + io) * stride + s] +=
                            mask[k] * cur[(o * nin + i) * stride + s];
                }
            }
        cur = std::move(next);
        counts[nu] = nout;
    }
    return cur;
}

/// Emits the detail array at multilevel lev into the expansion with the
/// L^p normalization factor prod_nu b^{-lev[nu]/p}; coefficients whose
/// magnitude is at most drop_tol are not stored.
inline void emit_terms(NTermExpansion& e, const std::vector<double>& detail,
                       const std::vector<int>& lev, int mbar, int b, double p,
                       double drop_tol = 0.0) {
    const int D = static_cast<int>(lev.size());
    std::vector<long long> counts(D);
    long long total = 1;
    double norm = 1.0;
    for (int nu = 0; nu < D; ++nu) {
        counts[nu] = pow_ll(b, lev[nu]) + mbar;
        total *= counts[nu];
        norm /= lp_scale(b, lev[nu], p);
    }
    for (long long flat = 0; flat < total; ++flat) {
        const double coeff = detail[flat] * norm;
        if (std::abs(coeff) <= drop_tol) continue;
        SplineIndex idx;
        idx.levels = lev;
        idx.shifts.resize(D);
        long long rem = flat;
        for (int nu = D - 1; nu >= 0; --nu) {
            idx.shifts[nu] = rem % counts[nu] - mbar;
            rem /= counts[nu];
        }
        e.terms.emplace_back(std::move(idx), coeff);
    }
}

} // namespace detail

/// Coefficients d_{lambda,p}(f) of eq:decomp up to level L_max: per-level
/// spline coefficients of the quasi-interpolated cell projections, with
/// details taken between consecutive levels (isotropic/anisotropic chains)
/// or by inclusion-exclusion over the hyperbolic cross (mixed).
inline NTermExpansion quasi_interpolant_coeffs(const RealFunc& f, SmoothnessKind kind,
                                               int L_max, int mbar, double p, int D,
                                               int b = 2,
                                               const std::vector<double>& alpha = {},
                                               int quad_nodes = 8, double drop_tol = 0.0) {
    if (L_max < 0) throw std::invalid_argument("quasi_interpolant_coeffs: L_max must be >= 0");
    NTermExpansion e;
    e.p = p;
    e.mbar = mbar;

    auto coeffs_at = [&](const std::vector<int>& lev) {
        const auto P = detail::project_cells(f, lev, mbar, b, quad_nodes);
        return detail::spline_coeffs(P, lev, mbar, b);
    };

    if (kind == SmoothnessKind::Iso || kind == SmoothnessKind::Aniso) {
        std::vector<int> prev_lev;
        std::vector<double> prev;
        for (int l = 0; l <= L_max; ++l) {
            std::vector<int> lev = (kind == SmoothnessKind::Iso)
                                       ? std::vector<int>(D, l)
                                       : aniso_levels(alpha, l);
            std::vector<double> c = coeffs_at(lev);
            std::vector<double> d = c;
            if (l > 0) {
                const auto refined = detail::refine_coeffs(prev, prev_lev, lev, mbar, b);
                for (size_t i = 0; i < d.size(); ++i) d[i] -= refined[i];
            }
            detail::emit_terms(e, d, lev, mbar, b, p, drop_tol);
            prev = std::move(c);
            prev_lev = std::move(lev);
        }
    } else {
        // hyperbolic cross: d^lev = sum over subsets S of dims with lev_nu >= 1,
        // (-1)^{|S|} refine_S(c^{lev - 1_S})
        std::map<std::vector<int>, std::vector<double>> cache;
        auto get = [&](const std::vector<int>& lev) -> const std::vector<double>& {
            auto it = cache.find(lev);
            if (it == cache.end()) it = cache.emplace(lev, coeffs_at(lev)).first;
            return it->second;
        };
        std::vector<int> lev(D, 0);
        std::function<void(int, int)> rec = [&](int nu, int budget) {
            if (nu == D) {
                long long total = 1;
                for (int mu = 0; mu < D; ++mu) total *= detail::pow_ll(b, lev[mu]) + mbar;
                std::vector<double> d(total, 0.0);
                for (int mask = 0; mask < (1 << D); ++mask) {
                    std::vector<int> src = lev;
                    bool ok = true;
                    int bits = 0;
                    for (int mu = 0; mu < D; ++mu)
                        if (mask & (1 << mu)) {
                            ++bits;
                            if (--src[mu] < 0) { ok = false; break; }
                        }
                    if (!ok) continue;
                    const auto& c = get(src);
                    const auto refined = detail::refine_coeffs(c, src, lev, mbar, b);
                    const double sgn = (bits % 2) ? -1.0 : 1.0;
                    for (size_t i = 0; i < d.size(); ++i) d[i] += sgn * refined[i];
                }
                detail::emit_terms(e, d, lev, mbar, b, p, drop_tol);
                return;
            }
            for (int l = 0; l <= budget; ++l) {
                lev[nu] = l;
                rec(nu + 1, budget - l);
            }
        };
        rec(0, L_max);
    }
    return e;
}

/// Keeps the n largest coefficients in absolute value, ties broken by
/// lexicographic index order; the result is re-sorted by index.
inline NTermExpansion threshold_nterm(const NTermExpansion& e, long long n) {
    if (n < 0) throw std::invalid_argument("threshold_nterm: n must be >= 0");
    NTermExpansion out;
    out.p = e.p;
    out.mbar = e.mbar;
    out.terms = e.terms;
    std::sort(out.terms.begin(), out.terms.end(), [](const auto& a, const auto& b2) {
        const double ma = std::abs(a.second), mb = std::abs(b2.second);
        if (ma != mb) return ma > mb;
        return a.first < b2.first;
    });
    if (static_cast<long long>(out.terms.size()) > n) out.terms.resize(n);
    std::sort(out.terms.begin(), out.terms.end(),
              [](const auto& a, const auto& b2) { return a.first < b2.first; });
    return out;
}

/// TT encoding of a finite expansion plus the complexity report of the exact
/// direct-sum (block-diagonal) representation. The returned TT is built by a
/// rounded (1e-13) balanced reduction for evaluation purposes; the report is
/// computed analytically from the per-term rank vectors, since materializing
/// the direct sum would waste memory without changing the counts.
struct EncodedExpansion {
    TTFunction tt;
    ComplexityReport report;
};

inline EncodedExpansion encode_expansion(const NTermExpansion& e, int L, int b,
                                         int m, int D) {
    if (e.size() > 1000000)
        throw std::invalid_argument("encode_expansion: term budget exceeds 10^6");
    EncodedExpansion out;
    if (e.terms.empty()) {
        out.tt = tt_zero({b, L, D}, m);
        return out;
    }

    const auto sizes = mode_sizes({b, L, D}, m);
    const int cuts = static_cast<int>(sizes.size()) - 1;
    std::vector<std::int64_t> rank_sum(cuts, 0);
    std::vector<TTFunction> queue;
    for (const auto& [idx, c] : e.terms) {
        if (idx.dim() != D)
            throw std::invalid_argument("encode_expansion: term dimension mismatch");
        TTFunction g = scale(encode_tensor_product(idx, e.mbar, e.p, L, b, m), c);
        const RankVector r = g.declared_ranks();
        for (int v = 0; v < cuts; ++v) rank_sum[v] += r[v];
        out.report.compl_S += measure(g).compl_S;
        queue.push_back(std::move(g));
    }
    for (int v = 0; v < cuts; ++v) out.report.compl_N += rank_sum[v];
    for (size_t v = 0; v < sizes.size(); ++v) {
        const std::int64_t lo = (v == 0) ? 1 : rank_sum[v - 1];
        const std::int64_t ro = (v + 1 == sizes.size()) ? 1 : rank_sum[v];
        out.report.compl_F += lo * sizes[v] * ro;
    }

    // balanced reduction with intermediate rounding; associativity is exact
    while (queue.size() > 1) {
        std::vector<TTFunction> next;
        for (size_t i = 0; i + 1 < queue.size(); i += 2) {
            TTFunction s = round(add(queue[i], queue[i + 1]), 1e-13);
            std::int64_t bytes = 0;
            for (const Core& c : s.cores)
                bytes += static_cast<std::int64_t>(c.entries.size()) * 8;
            if (bytes > (512LL << 20))
                throw std::runtime_error("encode_expansion: core arrays exceed 512 MB");
            next.push_back(std::move(s));
        }
        if (queue.size() % 2) next.push_back(std::move(queue.back()));
        queue = std::move(next);
    }
    out.tt = std::move(queue.front());
    return out;
}

/// Direct summation oracle for an expansion (no TT involved).
inline double evaluate_expansion(const NTermExpansion& e, const std::vector<double>& x,
                                 int b = 2) {
    double acc = 0.0;
    for (const auto& [idx, c] : e.terms) {
        if (c == 0.0) continue;
        double v = c;
        for (int nu = 0; nu < idx.dim(); ++nu)
            v *= dilated_spline_value(idx.levels[nu], idx.shifts[nu], e.mbar, e.p, b, x[nu]);
        acc += v;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Maximal level and embedding validators
// ---------------------------------------------------------------------------

struct MaxLevelParams {
    SmoothnessKind kind = SmoothnessKind::Iso;
    double eps = 1.0;             ///< target accuracy epsilon
    double n = 1.0;               ///< number of terms
    double s = 1.0;               ///< s_I or s_M (ignored for aniso)
    std::vector<double> alpha;    ///< anisotropic smoothness (aniso only)
    double tau = 1.0;
    double p = 2.0;
    double C_phi = 1.0;           ///< equivalence constant (not given in closed form)
    double phi_norm = 1.0;        ///< ||phi_mbar||_p
    double f_norm = 1.0;          ///< Besov (quasi-)norm of f
    int b = 2;
    int D = 1;
};

/// Maximal useful level rho: coefficients above it can be discarded while at
/// most doubling the error. q is the Hoelder conjugate of tau with the
/// convention q = inf (so n^{1/q} = 1) for tau <= 1.
inline double max_level_bound(const MaxLevelParams& mp) {
    if (mp.eps <= 0.0 || mp.n < 1.0)
        throw std::invalid_argument("max_level_bound: need eps > 0 and n >= 1");
    const double gap = 1.0 / mp.tau - 1.0 / mp.p;
    const double nq = (mp.tau > 1.0) ? std::pow(mp.n, 1.0 - 1.0 / mp.tau) : 1.0;
    const double logarg = mp.eps / (2.0 * mp.f_norm * nq);
    const double lg = std::log(logarg) / std::log(static_cast<double>(mp.b));
    const double phiD = std::pow(mp.phi_norm, mp.D);

    double front = 0.0;
    switch (mp.kind) {
        case SmoothnessKind::Iso: {
            const double denom = mp.s - mp.D * gap;
            if (!(denom > 0.0))
                throw std::invalid_argument(
                    "max_level_bound: excess regularity s_I/D > 1/tau - 1/p violated");
            front = mp.C_phi * phiD / denom;
            break;
        }
        case SmoothnessKind::Aniso: {
            if (mp.alpha.empty())
                throw std::invalid_argument("max_level_bound: alpha required for aniso");
            double amin = mp.alpha[0], inv = 0.0;
            for (double a : mp.alpha) {
                amin = std::min(amin, a);
                inv += 1.0 / a;
            }
            const double sA = mp.D / inv;
            const double denom = sA * (sA - mp.D * gap);
            if (!(sA - mp.D * gap > 0.0))
                throw std::invalid_argument(
                    "max_level_bound: excess regularity s_A/D > 1/tau - 1/p violated");
            front = amin * mp.C_phi * phiD / denom;
            break;
        }
        case SmoothnessKind::Mixed: {
            const double denom = mp.s - gap;
            if (!(denom > 0.0))
                throw std::invalid_argument(
                    "max_level_bound: excess regularity s_M > 1/tau - 1/p violated");
            front = mp.C_phi * phiD / denom;
            break;
        }
    }
    return std::abs(front * lg);
}

/// Direct-embedding validity per the stated conditions: 0 < tau < p (< inf),
/// s > 0, and s/D >= 1/tau - 1/p (iso/aniso; without /D for mixed, which also
/// requires p > 1).
inline bool validate_embedding(SmoothnessKind kind, double s, double tau, double p,
                               int D) {
    if (!(s > 0.0) || !(tau > 0.0) || !(p > 0.0) || std::isinf(p)) return false;
    if (!(tau < p)) return false;
    const double gap = 1.0 / tau - 1.0 / p;
    switch (kind) {
        case SmoothnessKind::Iso:
        case SmoothnessKind::Aniso:
            return s / D >= gap;
        case SmoothnessKind::Mixed:
            return p > 1.0 && s >= gap;
    }
    return false;
}

} // namespace qtt
