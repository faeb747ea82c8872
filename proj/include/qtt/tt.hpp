#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtt/legendre.hpp"
#include "qtt/tensorizer.hpp"

namespace qtt {

/// One 3-way TT parameter array, entries row-major over (left, mode, right).
struct Core {
    int left = 1;
    int mode = 1;
    int right = 1;
    std::vector<double> entries;

    Core() = default;
    Core(int l, int md, int r) : left(l), mode(md), right(r),
        entries(static_cast<size_t>(l) * md * r, 0.0) {}

    double& at(int i, int j, int k) {
        return entries[(static_cast<size_t>(i) * mode + j) * right + k];
    }
    double at(int i, int j, int k) const {
        return entries[(static_cast<size_t>(i) * mode + j) * right + k];
    }

    /// Mode-j slice as a left x right matrix.
    Eigen::MatrixXd slice(int j) const {
        Eigen::MatrixXd S(left, right);
        for (int i = 0; i < left; ++i)
            for (int k = 0; k < right; ++k) S(i, k) = at(i, j, k);
        return S;
    }

    /// Slices combined with weights w: sum_j w(j) * slice(j).
    Eigen::MatrixXd weighted_slice(const Eigen::VectorXd& w) const {
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(left, right);
        for (int j = 0; j < mode; ++j)
            for (int i = 0; i < left; ++i)
                for (int k = 0; k < right; ++k) S(i, k) += w(j) * at(i, j, k);
        return S;
    }

    /// (left*mode) x right unfolding.
    Eigen::MatrixXd left_unfold() const {
        Eigen::MatrixXd A(left * mode, right);
        for (int i = 0; i < left; ++i)
            for (int j = 0; j < mode; ++j)
                for (int k = 0; k < right; ++k) A(i * mode + j, k) = at(i, j, k);
        return A;
    }

    /// left x (mode*right) unfolding.
    Eigen::MatrixXd right_unfold() const {
        Eigen::MatrixXd A(left, mode * right);
        for (int i = 0; i < left; ++i)
            for (int j = 0; j < mode; ++j)
                for (int k = 0; k < right; ++k) A(i, j * right + k) = at(i, j, k);
        return A;
    }

    static Core from_left_unfold(const Eigen::MatrixXd& A, int left, int mode) {
        Core c(left, mode, static_cast<int>(A.cols()));
        for (int i = 0; i < left; ++i)
            for (int j = 0; j < mode; ++j)
                for (int k = 0; k < c.right; ++k) c.at(i, j, k) = A(i * mode + j, k);
        return c;
    }

    static Core from_right_unfold(const Eigen::MatrixXd& A, int mode, int right) {
        Core c(static_cast<int>(A.rows()), mode, right);
        for (int i = 0; i < c.left; ++i)
            for (int j = 0; j < mode; ++j)
                for (int k = 0; k < right; ++k) c.at(i, j, k) = A(i, j * right + k);
        return c;
    }

    int nonzeros() const {
        int n = 0;
        for (double e : entries)
            if (e != 0.0) ++n;
        return n;
    }
};

/// Declared rank vector r_1..r_{(L+1)D-1} between consecutive cores.
using RankVector = std::vector<int>;

/// A tensorized function on [0,1)^D in TT form: L*D digit cores of mode size b
/// followed by D polynomial cores of mode size m+1 (orthonormal shifted
/// Legendre basis on [0,1)). Immutable by convention: operations return new values.
struct TTFunction {
    EncodingParams params;
    int m = 0;
    std::string basis = "legendre";
    std::vector<Core> cores;

    int num_cores() const { return static_cast<int>(cores.size()); }

    void validate() const {
        params.validate();
        const auto sizes = mode_sizes(params, m);
        if (cores.size() != sizes.size())
            throw std::invalid_argument("TTFunction: wrong number of cores");
        if (cores.front().left != 1 || cores.back().right != 1)
            throw std::invalid_argument("TTFunction: boundary ranks must be 1");
        for (size_t v = 0; v < cores.size(); ++v) {
            if (cores[v].mode != sizes[v])
                throw std::invalid_argument("TTFunction: core mode size mismatch");
            if (v + 1 < cores.size() && cores[v].right != cores[v + 1].left)
                throw std::invalid_argument("TTFunction: consecutive ranks mismatch");
        }
    }

    RankVector declared_ranks() const {
        RankVector r;
        for (size_t v = 0; v + 1 < cores.size(); ++v) r.push_back(cores[v].right);
        return r;
    }
};

/// Constant-one function: all ranks 1, the constant basis coefficient set.
inline TTFunction tt_constant(const EncodingParams& p, int m, double value = 1.0) {
    p.validate();
    TTFunction f;
    f.params = p;
    f.m = m;
    const auto sizes = mode_sizes(p, m);
    for (size_t v = 0; v < sizes.size(); ++v) {
        Core c(1, sizes[v], 1);
        if (static_cast<int>(v) < p.L * p.D) {
            for (int j = 0; j < sizes[v]; ++j) c.at(0, j, 0) = 1.0;
        } else {
            c.at(0, 0, 0) = 1.0; // phi_0 == 1
        }
        f.cores.push_back(std::move(c));
    }
    if (value != 1.0)
        for (auto& e : f.cores[0].entries) e *= value;
    return f;
}

/// Zero function, stored with all ranks 1 and zero entries.
inline TTFunction tt_zero(const EncodingParams& p, int m) {
    TTFunction f = tt_constant(p, m, 1.0);
    for (auto& c : f.cores)
        for (auto& e : c.entries) e = 0.0;
    return f;
}

/// Contraction of digit-selected slices and basis evaluations at the remainders.
inline double evaluate_entry(const TTFunction& f, const DigitAddress& addr) {
    addr.validate(f.params);
    f.validate();
    const int LD = f.params.L * f.params.D;
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (int pos = 0; pos < f.num_cores(); ++pos) {
        if (pos < LD) {
            v = v * f.cores[pos].slice(addr.digits[pos]);
        } else {
            const int nu = pos - LD;
            const Eigen::VectorXd w = legendre_values(f.m, addr.remainders[nu]);
            v = v * f.cores[pos].weighted_slice(w);
        }
    }
    return v(0);
}

inline double evaluate(const TTFunction& f, const std::vector<double>& x) {
    return evaluate_entry(f, encode_point(x, f.params));
}

inline TTFunction scale(const TTFunction& f, double c) {
    TTFunction g = f;
    for (auto& e : g.cores[0].entries) e *= c;
    return g;
}

namespace detail {

/// Flat row-major index into a (m+1)^count block of pending basis indices.
inline int pow_int(int base, int exp) {
    int r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

} // namespace detail

/// Re-expresses f on a finer level L_B >= L of f by tensorizing each remainder
/// variable and regrouping the new digit cores level-major. The first L*D cores
/// are unchanged; the inserted cores carry the base-b dilation action on the
/// polynomial basis plus identity factors for the other dimensions.
inline TTFunction extend_level(const TTFunction& f, int L_B) {
    f.validate();
    const int L_A = f.params.L, D = f.params.D, b = f.params.b, m = f.m;
    if (L_B < L_A) throw std::invalid_argument("extend_level: target level below current level");
    if (L_B == L_A) return f;
    const int dL = L_B - L_A;
    const int dimS = m + 1;

    std::vector<Eigen::MatrixXd> A;
    for (int d = 0; d < b; ++d) A.push_back(dilation_matrix(m, b, d));

    TTFunction g;
    g.params = f.params;
    g.params.L = L_B;
    g.m = m;
    g.basis = f.basis;

    // digit cores unchanged
    for (int v = 0; v < L_A * D; ++v) g.cores.push_back(f.cores[v]);

    const Core* P = &f.cores[static_cast<size_t>(L_A) * D]; // old poly cores P[0..D-1]

    // first inserted level: contract each old poly core with the dilation
    // matrices, leaving one pending basis index per processed dimension
    for (int nu = 0; nu < D; ++nu) {
        const Core& p = P[nu];
        const int pendL = detail::pow_int(dimS, nu);
        Core c(p.left * pendL, b, p.right * pendL * dimS);
        for (int kin = 0; kin < p.left; ++kin)
            for (int pend = 0; pend < pendL; ++pend)
                for (int d = 0; d < b; ++d)
                    for (int kout = 0; kout < p.right; ++kout)
                        for (int np = 0; np < dimS; ++np) {
                            double s = 0.0;
                            for (int n = 0; n <= m; ++n) s += p.at(kin, n, kout) * A[d](n, np);
                            c.at(kin * pendL + pend, d,
                                 (kout * pendL + pend) * dimS + np) = s;
                        }
        g.cores.push_back(std::move(c));
    }

    // intermediate levels: dilation on slot nu, identity on the others
    const int full = detail::pow_int(dimS, D);
    for (int lvl = 1; lvl < dL; ++lvl) {
        for (int nu = 0; nu < D; ++nu) {
            const int lo = detail::pow_int(dimS, D - 1 - nu); // strides right of slot nu
            Core c(full, b, full);
            for (int pend = 0; pend < full; ++pend) {
                const int n_nu = (pend / lo) % dimS;
                const int head = pend - n_nu * lo; // pend with slot nu cleared
                for (int d = 0; d < b; ++d)
                    for (int np = 0; np < dimS; ++np) {
                        const double a = A[d](n_nu, np);
                        if (a != 0.0) c.at(pend, d, head + np * lo) = a;
                    }
            }
            g.cores.push_back(std::move(c));
        }
    }

    // new poly cores: select the pending basis index of each dimension in turn
    for (int nu = 0; nu < D; ++nu) {
        const int rest = detail::pow_int(dimS, D - 1 - nu);
        Core c(dimS * rest, dimS, rest);
        for (int n = 0; n < dimS; ++n)
            for (int r = 0; r < rest; ++r) c.at(n * rest + r, n, r) = 1.0;
        g.cores.push_back(std::move(c));
    }

    g.validate();
    return g;
}

/// Pointwise sum. Levels are aligned by extending the coarser operand, never
/// truncating the finer one; the boundary cores are concatenated, interior
/// cores stacked block-diagonally, so interior ranks add.
inline TTFunction add(const TTFunction& f0, const TTFunction& g0) {
    if (f0.params.b != g0.params.b || f0.params.D != g0.params.D || f0.m != g0.m)
        throw std::invalid_argument("add: operands must share b, D and m");
    const int L = std::max(f0.params.L, g0.params.L);
    const TTFunction f = extend_level(f0, L);
    const TTFunction g = extend_level(g0, L);

    TTFunction h;
    h.params = f.params;
    h.m = f.m;
    h.basis = f.basis;
    const int N = f.num_cores();
    for (int v = 0; v < N; ++v) {
        const Core& a = f.cores[v];
        const Core& c = g.cores[v];
        const bool first = (v == 0), last = (v == N - 1);
        const int lo = first ? 1 : a.left + c.left;
        const int ro = last ? 1 : a.right + c.right;
        Core out(lo, a.mode, ro);
        for (int i = 0; i < a.left; ++i)
            for (int j = 0; j < a.mode; ++j)
                for (int k = 0; k < a.right; ++k)
                    out.at(first ? 0 : i, j, last ? 0 : k) += a.at(i, j, k);
        const int ioff = first ? 0 : a.left;
        const int koff = last ? 0 : a.right;
        for (int i = 0; i < c.left; ++i)
            for (int j = 0; j < c.mode; ++j)
                for (int k = 0; k < c.right; ++k)
                    out.at(first ? 0 : ioff + i, j, last ? 0 : koff + k) += c.at(i, j, k);
        h.cores.push_back(std::move(out));
    }
    return h;
}

namespace detail {

/// Left-orthogonalization sweep followed by a right-to-left SVD sweep. When
/// truncating, keeps singular values above tol times the largest at each cut.
/// Returns the resulting ranks; mutates the core list in place.
inline RankVector svd_sweep(std::vector<Core>& cores, double tol, bool truncate) {
    const int N = static_cast<int>(cores.size());
    if (N == 1) {
        // single core: rank structure is trivial
        return {};
    }
    // left-to-right QR
    for (int v = 0; v + 1 < N; ++v) {
        const Eigen::MatrixXd Av = cores[v].left_unfold();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Av);
        const int r = static_cast<int>(std::min(Av.rows(), Av.cols()));
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(Av.rows(), r);
        Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
        cores[v] = Core::from_left_unfold(Q, cores[v].left, cores[v].mode);
        const Eigen::MatrixXd B = R * cores[v + 1].right_unfold();
        cores[v + 1] = Core::from_right_unfold(B, cores[v + 1].mode, cores[v + 1].right);
    }
    // right-to-left SVD; the sigma at each cut are the unfolding singular values
    RankVector ranks(N - 1, 0);
    for (int v = N - 1; v >= 1; --v) {
        const Eigen::MatrixXd B = cores[v].right_unfold();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& s = svd.singularValues();
        const double smax = s.size() > 0 ? s(0) : 0.0;
        int r = 0;
        for (int i = 0; i < s.size(); ++i)
            if (smax > 0.0 && s(i) > tol * smax) ++r;
        ranks[v - 1] = r;
        // substitute V^T so the right part stays orthonormal for the next cut;
        // without truncation keep the full thin rank
        const int rk = truncate ? std::max(r, 1) : static_cast<int>(s.size());
        const Eigen::MatrixXd Vt = svd.matrixV().leftCols(rk).transpose();
        const Eigen::MatrixXd US = svd.matrixU().leftCols(rk) *
                                   s.head(rk).asDiagonal();
        Eigen::MatrixXd Vt2 = Vt;
        if (truncate && r == 0) Vt2.setZero(); // zero function: keep rank-1 zero cores
        cores[v] = Core::from_right_unfold(Vt2, cores[v].mode, cores[v].right);
        const Eigen::MatrixXd C = cores[v - 1].left_unfold() * US;
        cores[v - 1] = Core::from_left_unfold(C, cores[v - 1].left, cores[v - 1].mode);
    }
    return ranks;
}

} // namespace detail

/// Numerical TT-ranks of every sequential unfolding: the count of singular
/// values above tol times the largest, after a left-orthogonalization sweep.
/// Invariant under scaling by a nonzero constant; all zero for the zero function.
inline RankVector computed_ranks(const TTFunction& f, double tol = 1e-10) {
    f.validate();
    if (!(tol > 0.0 && tol < 1.0))
        throw std::invalid_argument("computed_ranks: tol must lie in (0,1)");
    std::vector<Core> cores = f.cores;
    return detail::svd_sweep(cores, tol, false);
}

/// TT-SVD truncation at relative cutoff tol (tol = 0 keeps every nonzero
/// singular value). Pointwise error is bounded by tol times the discrete-
/// weighted L^2 norm of f per cut.
inline TTFunction round(const TTFunction& f, double tol) {
    f.validate();
    if (tol < 0.0) throw std::invalid_argument("round: tol must be >= 0");
    TTFunction g = f;
    detail::svd_sweep(g.cores, tol, true);
    g.validate();
    return g;
}

/// Result of an admissibility check: ok, or the first violated inequality.
struct AdmissibilityResult {
    bool ok = true;
    std::string violation;
    explicit operator bool() const { return ok; }
};

/// Checks the chain inequalities r_{nu+1} <= b r_nu, r_nu <= b r_{nu+1} in the
/// digit region (factor m+1 in the polynomial region) together with the
/// mode-size product caps on each cut.
inline AdmissibilityResult check_admissible(const RankVector& r,
                                            const EncodingParams& p, int m) {
    p.validate();
    const auto sizes = mode_sizes(p, m);
    const int cuts = static_cast<int>(sizes.size()) - 1;
    if (static_cast<int>(r.size()) != cuts)
        throw std::invalid_argument("check_admissible: rank vector has wrong length");

    auto fail = [](std::string msg) {
        return AdmissibilityResult{false, std::move(msg)};
    };
    for (int v = 0; v + 1 < cuts; ++v) {
        // factor between cut v+1 and cut v+2 is the mode size of core v+1 (0-based)
        const int factor = sizes[v + 1];
        if (r[v + 1] > factor * r[v])
            return fail("r_" + std::to_string(v + 2) + " <= " + std::to_string(factor) +
                        "*r_" + std::to_string(v + 1) + " violated: " +
                        std::to_string(r[v + 1]) + " > " + std::to_string(factor * r[v]));
        if (r[v] > factor * r[v + 1])
            return fail("r_" + std::to_string(v + 1) + " <= " + std::to_string(factor) +
                        "*r_" + std::to_string(v + 2) + " violated: " +
                        std::to_string(r[v]) + " > " + std::to_string(factor * r[v + 1]));
    }
    for (int v = 0; v < cuts; ++v) {
        double lprod = 1.0, rprod = 1.0;
        for (int u = 0; u <= v; ++u) lprod = std::min(lprod * sizes[u], 1e18);
        for (int u = v + 1; u < static_cast<int>(sizes.size()); ++u)
            rprod = std::min(rprod * sizes[u], 1e18);
        const double cap = std::min(lprod, rprod);
        if (static_cast<double>(r[v]) > cap)
            return fail("r_" + std::to_string(v + 1) + " exceeds mode-size product cap " +
                        std::to_string(static_cast<long long>(cap)));
    }
    return {};
}

} // namespace qtt
