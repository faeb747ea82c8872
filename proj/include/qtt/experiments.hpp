#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtt/complexity.hpp"
#include "qtt/measure.hpp"
#include "qtt/splines.hpp"
#include "qtt/tt.hpp"

namespace qtt {

/// One sampled point of an error/complexity sequence.
struct RateRecord {
    long long n = 0;          ///< budget (number of terms)
    std::int64_t compl_F = 0;
    std::int64_t compl_S = 0;
    std::int64_t compl_N = 0;
    double error = 0.0;       ///< measured L^p error
    int level = 0;            ///< tensorization / expansion level used
    std::string kind;         ///< "uniform" or "adaptive"
    std::string target;
};

/// Full experiment description; loadable from JSON with CLI flags overriding.
struct ExperimentConfig {
    std::string target = "sinprod";         ///< registry id
    std::vector<double> target_params;      ///< id-specific parameters
    int b = 2;
    int D = 1;
    int m = 1;
    int mbar = 1;
    double p = 2.0;
    double tau = 1.0;
    double q = std::numeric_limits<double>::infinity();
    double s = 2.0;                          ///< declared smoothness
    double eps = 1e-4;                       ///< target accuracy for the level guard
    std::vector<int> levels = {1, 2, 3, 4, 5, 6};
    std::vector<long long> budgets;
    unsigned long long seed = 1ULL;
    double tol = 1e-10;
    QuadratureSpec quad;
    std::string out;
    bool reproducible = false;

    void validate() const {
        EncodingParams ep{b, 1, D};
        ep.validate();
        if (m < 0 || mbar < 0 || mbar > m + 1)
            throw std::invalid_argument("ExperimentConfig: need 0 <= mbar and m >= 0");
        if (!(p > 0.0) || !(tau > 0.0))
            throw std::invalid_argument("ExperimentConfig: p and tau must be positive");
        for (size_t i = 1; i < budgets.size(); ++i)
            if (budgets[i] <= budgets[i - 1])
                throw std::invalid_argument("ExperimentConfig: budgets must be strictly increasing");
        for (size_t i = 1; i < levels.size(); ++i)
            if (levels[i] <= levels[i - 1])
                throw std::invalid_argument("ExperimentConfig: levels must be strictly increasing");
        quad.validate();
    }
};

inline void config_from_json(ExperimentConfig& c, const nlohmann::json& j) {
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    get("target", c.target);
    get("target_params", c.target_params);
    get("b", c.b);
    get("D", c.D);
    get("m", c.m);
    get("mbar", c.mbar);
    get("p", c.p);
    get("tau", c.tau);
    get("s", c.s);
    get("eps", c.eps);
    get("levels", c.levels);
    get("budgets", c.budgets);
    get("seed", c.seed);
    get("tol", c.tol);
    get("out", c.out);
    get("reproducible", c.reproducible);
    if (j.contains("q")) {
        if (j.at("q").is_string()) c.q = std::numeric_limits<double>::infinity();
        else c.q = j.at("q").get<double>();
    }
    if (j.contains("quad")) {
        const auto& jq = j.at("quad");
        if (jq.contains("nodes_per_cell")) c.quad.nodes_per_cell = jq.at("nodes_per_cell").get<int>();
        if (jq.contains("cell_level")) c.quad.cell_level = jq.at("cell_level").get<int>();
        if (jq.contains("samples")) c.quad.samples = jq.at("samples").get<long long>();
        if (jq.contains("seed")) c.quad.seed = jq.at("seed").get<unsigned long long>();
        if (jq.contains("method"))
            c.quad.method = (jq.at("method").get<std::string>() == "mc")
                                ? QuadratureSpec::Method::MonteCarlo
                                : QuadratureSpec::Method::Gauss;
    }
}

/// Fixed target catalog addressed by id + parameters; no expression parser.
///   one           constant 1
///   poly          sum_k params[k] x^k applied per coordinate and multiplied
///   sinprod       prod_nu sin(2 pi f x_nu), f = params[0] (default 1)
///   abspow        prod_nu |2 x_nu - 1|^gamma, gamma = params[0] (default 0.5)
///   xpow          prod_nu x_nu^gamma, gamma = params[0] (default 0.3)
///   sawtooth      prod_nu frac(b^l x_nu), l = params[0] (default 1)
inline RealFunc make_target(const std::string& id, const std::vector<double>& params,
                            int D, int b = 2) {
    (void)D;  // targets apply per coordinate; D is fixed by the call sites
    if (id == "one") return [](const std::vector<double>&) { return 1.0; };
    if (id == "poly") {
        std::vector<double> cs = params.empty() ? std::vector<double>{0.0, 1.0} : params;
        return [cs](const std::vector<double>& x) {
            double prod = 1.0;
            for (double c : x) {
                double acc = 0.0;
                for (size_t k = cs.size(); k-- > 0;) acc = acc * c + cs[k];
                prod *= acc;
            }
            return prod;
        };
    }
    if (id == "sinprod") {
        const double f = params.empty() ? 1.0 : params[0];
        return [f](const std::vector<double>& x) {
            double prod = 1.0;
            for (double c : x) prod *= std::sin(2.0 * M_PI * f * c);
            return prod;
        };
    }
    if (id == "abspow") {
        const double g = params.empty() ? 0.5 : params[0];
        return [g](const std::vector<double>& x) {
            double prod = 1.0;
            for (double c : x) prod *= std::pow(std::abs(2.0 * c - 1.0), g);
            return prod;
        };
    }
    if (id == "xpow") {
        const double g = params.empty() ? 0.3 : params[0];
        return [g](const std::vector<double>& x) {
            double prod = 1.0;
            for (double c : x) prod *= std::pow(c, g);
            return prod;
        };
    }
    if (id == "sawtooth") {
        const int l = params.empty() ? 1 : static_cast<int>(params[0]);
        return sawtooth_function(l, b);
    }
    throw std::invalid_argument("make_target: unknown target id '" + id + "'");
}

namespace detail {

/// Least-squares slope of log(error) vs log(n) over the last ceil(half) points
/// with positive error; returns 0 and window 0 when fewer than 2 remain.
inline std::pair<double, int> fit_slope(const std::vector<RateRecord>& recs) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : recs)
        if (r.error > 0.0 && r.n > 0) pts.emplace_back(std::log(static_cast<double>(r.n)),
                                                       std::log(r.error));
    const size_t w = (pts.size() + 1) / 2;
    if (w < 2) return {0.0, 0};
    pts.erase(pts.begin(), pts.end() - static_cast<long>(w));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(pts.size());
    return {(nn * sxy - sx * sy) / (nn * sxx - sx * sx), static_cast<int>(w)};
}

/// Breakpoints of a 1D expansion: every knot of every kept term plus 0 and 1.
inline std::vector<double> expansion_breakpoints_1d(const NTermExpansion& e, int b) {
    std::vector<double> pts{0.0, 1.0};
    for (const auto& [idx, c] : e.terms) {
        const double h = std::pow(static_cast<double>(b), -idx.levels[0]);
        for (int k = 0; k <= e.mbar + 1; ++k) {
            const double x = (static_cast<double>(idx.shifts[0]) + k) * h;
            if (x > 0.0 && x < 1.0) pts.push_back(x);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

/// L^p error on [0,1) via composite Gauss aligned with the given breakpoints,
/// so the spline part of the integrand is polynomial on every subinterval.
inline double lp_error_1d_aligned(const RealFunc& f, const RealFunc& g, double p,
                                  const std::vector<double>& pts, int nodes = 6) {
    const QuadRule rule = gauss_legendre(nodes);
    double acc = 0.0, vmax = 0.0;
    std::vector<double> x(1);
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], h = pts[i + 1] - pts[i];
        if (h <= 0.0) continue;
        for (size_t q = 0; q < rule.nodes.size(); ++q) {
            x[0] = a + h * rule.nodes[q];
            const double v = std::abs(f(x) - g(x));
            if (std::isinf(p)) vmax = std::max(vmax, v);
            else acc += h * rule.weights[q] * std::pow(v, p);
        }
    }
    return std::isinf(p) ? vmax : std::pow(acc, 1.0 / p);
}

inline void check_leq(double lhs, double rhs, const std::string& what) {
    if (!(lhs <= rhs)) {
        std::ostringstream os;
        os << "violated inequality " << what << ": " << lhs << " <= " << rhs;
        throw std::runtime_error(os.str());
    }
}

}  // namespace detail

/// Results of a rate sweep with the fitted asymptotic slope and the fitting
/// window (number of trailing budget points entering the fit).
struct RateResult {
    std::vector<RateRecord> records;
    double slope = 0.0;
    int fit_window = 0;
    std::string note;  ///< guard / abort messages, empty when clean
};

struct NonlinearResult {
    std::vector<RateRecord> records;  ///< uniform rows first, then adaptive
    double slope_uniform = 0.0;
    double slope_adaptive = 0.0;
    int fit_window = 0;
    double rho = 0.0;      ///< maximal-level bound
    int depth_used = 0;    ///< min(requested depth, ceil(rho))
    std::string note;
};

/// Uniform full-level spline expansions, one per configured level: build the
/// quasi-interpolant, encode as a TT, measure the L^p error and complexities,
/// and fit the error-vs-n slope.
inline RateResult run_linear_rate(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!(cfg.s > 0.0))
        throw std::invalid_argument("run_linear_rate: declared smoothness must be positive");
    // with tau = p the embedding gap vanishes; only check when tau < p is declared
    if (cfg.tau < cfg.p &&
        !validate_embedding(SmoothnessKind::Iso, cfg.s, cfg.tau, cfg.p, cfg.D))
        throw std::invalid_argument("run_linear_rate: declared smoothness fails the embedding conditions");
    const RealFunc f = make_target(cfg.target, cfg.target_params, cfg.D, cfg.b);
    RateResult res;
    for (int l : cfg.levels) {
        NTermExpansion e;
        try {
            e = quasi_interpolant_coeffs(f, SmoothnessKind::Iso, l, cfg.mbar, cfg.p, cfg.D,
                                         cfg.b);
        } catch (const std::length_error& ex) {
            res.note = std::string("aborted: ") + ex.what();
            break;
        }
        EncodedExpansion enc;
        try {
            enc = encode_expansion(e, l, cfg.b, cfg.m, cfg.D);
        } catch (const std::length_error& ex) {
            res.note = std::string("aborted: ") + ex.what();
            break;
        }
        const auto meas = measure(enc.tt);
        RateRecord r;
        r.n = static_cast<long long>(e.size());
        r.compl_F = meas.compl_F;
        r.compl_S = meas.compl_S;
        r.compl_N = meas.compl_N;
        // quadrature cells must be finer than the approximant's breakpoints
        QuadratureSpec spec = cfg.quad;
        spec.cell_level = std::max(spec.cell_level, l + 1);
        r.error = lp_error(tt_function(enc.tt), f, cfg.p, spec, cfg.D, cfg.b);
        r.level = l;
        r.kind = "uniform";
        r.target = cfg.target;
        res.records.push_back(r);
    }
    std::tie(res.slope, res.fit_window) = detail::fit_slope(res.records);
    return res;
}

/// Thresholded n-term approximations against the uniform baseline. The
/// coefficient depth is capped by the maximal-level bound; the cap is recorded
/// in the result note.
inline NonlinearResult run_nonlinear_rate(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!(cfg.tau < cfg.p))
        throw std::invalid_argument("run_nonlinear_rate: requires tau < p");
    if (!validate_embedding(SmoothnessKind::Iso, cfg.s, cfg.tau, cfg.p, cfg.D))
        throw std::invalid_argument("run_nonlinear_rate: declared smoothness fails the embedding conditions");
    const RealFunc f = make_target(cfg.target, cfg.target_params, cfg.D, cfg.b);
    if (cfg.budgets.empty())
        throw std::invalid_argument("run_nonlinear_rate: budgets required");

    NonlinearResult res;
    MaxLevelParams mp;
    mp.kind = SmoothnessKind::Iso;
    mp.eps = cfg.eps;
    mp.n = static_cast<double>(cfg.budgets.back());
    mp.s = cfg.s;
    mp.tau = cfg.tau;
    mp.p = cfg.p;
    mp.b = cfg.b;
    mp.D = cfg.D;
    mp.f_norm = std::max(lp_norm(f, cfg.p, cfg.quad, cfg.D, cfg.b), 1e-12);
    res.rho = max_level_bound(mp);  // throws citing the inequality if violated
    const int depth_req = cfg.levels.empty() ? 10 : cfg.levels.back();
    res.depth_used = std::min(depth_req, static_cast<int>(std::ceil(res.rho)));
    {
        std::ostringstream os;
        os << "maximal-level guard: rho = " << res.rho << ", requested depth " << depth_req
           << ", coefficient depth used " << res.depth_used;
        res.note = os.str();
    }

    // deep levels are overwhelmingly negligible away from singularities; drop
    // coefficients below machine-level relative size so the store stays sparse
    const double drop_tol = 1e-12 * std::max(1.0, mp.f_norm);
    const NTermExpansion full =
        quasi_interpolant_coeffs(f, SmoothnessKind::Iso, res.depth_used, cfg.mbar, cfg.p,
                                 cfg.D, cfg.b, {}, 8, drop_tol);

    // quadrature cells finer than the approximant breakpoints; in 1D the
    // measurement instead aligns composite Gauss with the expansion's knots,
    // which resolves the graded refinement toward singularities cheaply
    QuadratureSpec spec = cfg.quad;
    spec.cell_level = std::max(spec.cell_level, std::min(res.depth_used + 2, 12));

    auto record_from = [&](const NTermExpansion& e, long long budget, int level,
                           const char* kind) {
        RateRecord r;
        r.n = budget;
        r.level = level;
        r.kind = kind;
        r.target = cfg.target;
        if (e.size() == 0) {
            r.error = lp_norm(f, cfg.p, spec, cfg.D, cfg.b);
            return r;
        }
        auto enc = encode_expansion(e, level, cfg.b, cfg.m, cfg.D);
        const auto meas = measure(enc.tt);
        r.compl_F = meas.compl_F;
        r.compl_S = meas.compl_S;
        r.compl_N = meas.compl_N;
        if (cfg.D == 1)
            r.error = detail::lp_error_1d_aligned(f, tt_function(enc.tt), cfg.p,
                                                  detail::expansion_breakpoints_1d(e, cfg.b));
        else
            r.error = lp_error(tt_function(enc.tt), f, cfg.p, spec, cfg.D, cfg.b);
        return r;
    };

    // uniform baseline: the deepest full-level expansion fitting each budget
    for (long long n : cfg.budgets) {
        int best_l = -1;
        NTermExpansion best;
        for (int l = 0; l <= res.depth_used; ++l) {
            auto e = quasi_interpolant_coeffs(f, SmoothnessKind::Iso, l, cfg.mbar, cfg.p,
                                              cfg.D, cfg.b);
            if (static_cast<long long>(e.size()) > n) break;
            best_l = l;
            best = std::move(e);
        }
        if (best_l < 0) {
            RateRecord r;
            r.n = n;
            r.kind = "uniform";
            r.target = cfg.target;
            r.error = lp_norm(f, cfg.p, spec, cfg.D, cfg.b);
            res.records.push_back(r);
        } else {
            res.records.push_back(record_from(best, n, best_l, "uniform"));
        }
    }
    // adaptive: threshold the deep expansion to each budget
    for (long long n : cfg.budgets) {
        auto e = threshold_nterm(full, static_cast<size_t>(n));
        int level = 0;
        for (const auto& [idx, c] : e.terms)
            for (int lv : idx.levels) level = std::max(level, lv);
        res.records.push_back(record_from(e, n, level, "adaptive"));
    }

    std::vector<RateRecord> uni(res.records.begin(),
                                res.records.begin() + static_cast<long>(cfg.budgets.size()));
    std::vector<RateRecord> ada(res.records.begin() + static_cast<long>(cfg.budgets.size()),
                                res.records.end());
    auto [su, wu] = detail::fit_slope(uni);
    auto [sa, wa] = detail::fit_slope(ada);
    res.slope_uniform = su;
    res.slope_adaptive = sa;
    res.fit_window = std::min(wu, wa);
    return res;
}

/// One row of the quasi-additivity sweep.
struct P4Row {
    long long pair_id = 0;
    std::int64_t n_F = 0, n_S = 0, n_N = 0;  ///< matched budgets (max of the pair)
    double ratio_F = 0.0, ratio_S = 0.0, ratio_N = 0.0;
};

struct P4Result {
    std::vector<P4Row> rows;
    double max_ratio_F = 0.0, max_ratio_S = 0.0, max_ratio_N = 0.0;
    double bound_S = 0.0, bound_F = 0.0;
};

namespace detail {

/// Seeded random TT with admissible ranks (chain inequalities and mode-size
/// product caps), used by the quasi-additivity sweep.
inline TTFunction random_admissible_tt(std::mt19937_64& rng, const EncodingParams& p, int m,
                                       int rmax, double zero_frac) {
    const auto sizes = mode_sizes(p, m);
    const int cores = static_cast<int>(sizes.size());
    std::uniform_int_distribution<int> rdist(1, rmax);
    RankVector r(cores + 1, 1);
    for (int v = 1; v < cores; ++v) r[v] = rdist(rng);
    // product caps from both ends, then chain inequalities
    for (int v = 1; v < cores; ++v) {
        long long capL = 1, capR = 1;
        for (int k = 0; k < v && capL <= rmax; ++k) capL *= sizes[k];
        for (int k = v; k < cores && capR <= rmax; ++k) capR *= sizes[k];
        r[v] = static_cast<int>(std::min<long long>({r[v], capL, capR}));
    }
    for (int v = 0; v < cores; ++v) r[v + 1] = std::min<int>(r[v + 1], r[v] * sizes[v]);
    for (int v = cores - 1; v >= 0; --v) r[v] = std::min<int>(r[v], r[v + 1] * sizes[v]);
    TTFunction f;
    f.params = p;
    f.m = m;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int v = 0; v < cores; ++v) {
        Core c(r[v], sizes[v], r[v + 1]);
        for (double& e : c.entries) e = (coin(rng) < zero_frac) ? 0.0 : unif(rng);
        f.cores.push_back(std::move(c));
    }
    f.validate();
    return f;
}

}  // namespace detail

/// Quasi-additivity sweep: seeded random TT pairs (possibly at mismatched
/// levels), each complexity of the sum divided by the matched budget, checked
/// against the module constants.
inline P4Result run_p4_sweep(const ExperimentConfig& cfg, int pairs = 200, int rmax = 3) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> ldist(
        cfg.levels.empty() ? 1 : cfg.levels.front(),
        cfg.levels.empty() ? 4 : cfg.levels.back());
    P4Result res;
    res.bound_S = p4_sparse_constant(cfg.m, cfg.D);
    res.bound_F = p4_dense_constant(cfg.m, cfg.D, cfg.b);
    for (int t = 0; t < pairs; ++t) {
        EncodingParams pa{cfg.b, ldist(rng), cfg.D}, pb{cfg.b, ldist(rng), cfg.D};
        TTFunction f = detail::random_admissible_tt(rng, pa, cfg.m, rmax, 0.3);
        TTFunction g = detail::random_admissible_tt(rng, pb, cfg.m, rmax, 0.3);
        const auto mf = measure(f), mg = measure(g);
        const auto ms = measure(add(f, g));
        P4Row row;
        row.pair_id = t;
        row.n_F = std::max(mf.compl_F, mg.compl_F);
        row.n_S = std::max<std::int64_t>(std::max(mf.compl_S, mg.compl_S), 1);
        row.n_N = std::max<std::int64_t>(std::max(mf.compl_N, mg.compl_N), 1);
        row.ratio_F = static_cast<double>(ms.compl_F) / static_cast<double>(row.n_F);
        row.ratio_S = static_cast<double>(ms.compl_S) / static_cast<double>(row.n_S);
        row.ratio_N = static_cast<double>(ms.compl_N) / static_cast<double>(row.n_N);
        res.max_ratio_F = std::max(res.max_ratio_F, row.ratio_F);
        res.max_ratio_S = std::max(res.max_ratio_S, row.ratio_S);
        res.max_ratio_N = std::max(res.max_ratio_N, row.ratio_N);
        res.rows.push_back(row);
    }
    detail::check_leq(res.max_ratio_S, res.bound_S, "compl_S(f+g)/n <= 2(1+(m+1)^{2D})");
    detail::check_leq(res.max_ratio_F, res.bound_F, "compl_F(f+g)/n <= dense constant");
    return res;
}

/// One level of the sawtooth demonstration.
struct InverseRow {
    int level = 0;
    std::int64_t compl_F = 0;
    double seminorm = 0.0;  ///< s = 0.5, q = inf Besov estimate
};

/// Sawtooth levels: representation size grows by a constant per level while
/// the smoothness semi-norm grows geometrically — no inverse embedding.
inline std::vector<InverseRow> run_inverse_demo(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<InverseRow> rows;
    const int m = std::max(1, cfg.m);
    // one fixed quadrature resolution for all levels so the ratios are clean
    QuadratureSpec spec = cfg.quad;
    for (int l : cfg.levels) spec.cell_level = std::max(spec.cell_level, l + 2);
    for (int l : cfg.levels) {
        InverseRow row;
        row.level = l;
        row.compl_F = measure(sawtooth_tt(l, cfg.b, m, 1)).compl_F;
        row.seminorm = besov_seminorm(sawtooth_function(l, cfg.b), 0.5, 2.0,
                                      std::numeric_limits<double>::infinity(), spec, 1,
                                      cfg.b, 1e-3, 6, cfg.seed)
                           .value;
        rows.push_back(row);
    }
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i - 1];
        const auto& c = rows[i];
        if (a.level >= 2 && c.level == a.level + 1)
            detail::check_leq(std::pow(static_cast<double>(cfg.b), 0.4),
                              c.seminorm / std::max(a.seminorm, 1e-300),
                              "seminorm growth >= b^{0.4} per level");
    }
    return rows;
}

/// Predicted-vs-measured complexity table row.
struct BoundRow {
    std::string kind;  ///< "linear" or "nonlinear"
    long long n = 0;
    int level = 0;
    double predicted_F = 0.0, predicted_S = 0.0, predicted_N = 0.0;
    std::int64_t measured_F = 0, measured_S = 0, measured_N = 0;
};

/// Builds isotropic expansions of the configured target at each level, both
/// full (linear) and thresholded (nonlinear), and checks the measured
/// complexities of the direct-sum representation against the predictions.
inline std::vector<BoundRow> emit_bound_table(const ExperimentConfig& cfg) {
    cfg.validate();
    const RealFunc f = make_target(cfg.target, cfg.target_params, cfg.D, cfg.b);
    BoundParams bp;
    bp.mbar = cfg.mbar;
    bp.m = cfg.m;
    bp.b = cfg.b;
    bp.D = cfg.D;
    std::vector<BoundRow> rows;
    for (int l : cfg.levels) {
        auto e = quasi_interpolant_coeffs(f, SmoothnessKind::Iso, l, cfg.mbar, cfg.p, cfg.D,
                                          cfg.b);
        const long long n = static_cast<long long>(e.size());
        auto enc = encode_expansion(e, l, cfg.b, cfg.m, cfg.D);

        BoundRow lin;
        lin.kind = "linear";
        lin.n = n;
        lin.level = l;
        bp.L = l;
        const auto pl = predicted_linear_bounds(SmoothnessKind::Iso, bp,
                                                static_cast<double>(n));
        lin.predicted_F = pl.F;
        lin.predicted_S = pl.S;
        lin.predicted_N = pl.N;
        const auto rounded = measure(round(enc.tt, cfg.tol));
        lin.measured_F = rounded.compl_F;
        lin.measured_S = rounded.compl_S;
        lin.measured_N = rounded.compl_N;
        detail::check_leq(static_cast<double>(lin.measured_N), lin.predicted_N,
                          "linear compl_N <= (1+(mbar+1)^D) sqrt(n) envelope");
        rows.push_back(lin);

        const long long nt = std::max<long long>(1, n / 2);
        auto et = threshold_nterm(e, static_cast<size_t>(nt));
        auto enct = encode_expansion(et, l, cfg.b, cfg.m, cfg.D);
        BoundRow non;
        non.kind = "nonlinear";
        non.n = nt;
        non.level = l;
        const auto pn = predicted_nonlinear_bounds(bp, static_cast<double>(nt), l);
        non.predicted_F = pn.F;
        non.predicted_S = pn.S;
        non.predicted_N = pn.N;
        non.measured_F = enct.report.compl_F;
        non.measured_S = enct.report.compl_S;
        non.measured_N = enct.report.compl_N;
        detail::check_leq(static_cast<double>(non.measured_S), non.predicted_S,
                          "nonlinear compl_S <= linear-in-n envelope");
        rows.push_back(non);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void csv_preamble(std::ostream& os, const ExperimentConfig& cfg,
                         const std::vector<std::string>& meta) {
    if (!cfg.reproducible) {
        std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "# generated " << buf << "\n";
    }
    os << "# target " << cfg.target << " b " << cfg.b << " D " << cfg.D << " m " << cfg.m
       << " mbar " << cfg.mbar << " p " << csv_num(cfg.p) << " seed " << cfg.seed << "\n";
    for (const auto& line : meta) os << "# " << line << "\n";
}

}  // namespace detail

/// Fixed-order CSV (n, compl_F, compl_S, compl_N, error, level, kind) with
/// '#'-prefixed metadata; the timestamp comment is suppressed when
/// cfg.reproducible is set.
inline void write_csv(std::ostream& os, const std::vector<RateRecord>& records,
                      const ExperimentConfig& cfg,
                      const std::vector<std::string>& meta = {}) {
    detail::csv_preamble(os, cfg, meta);
    os << "n,compl_F,compl_S,compl_N,error,level,kind\n";
    for (const auto& r : records)
        os << r.n << ',' << r.compl_F << ',' << r.compl_S << ',' << r.compl_N << ','
           << detail::csv_num(r.error) << ',' << r.level << ',' << r.kind << "\n";
}

inline void write_csv_file(const std::string& path, const std::vector<RateRecord>& records,
                           const ExperimentConfig& cfg,
                           const std::vector<std::string>& meta = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv_file: cannot open " + path);
    write_csv(os, records, cfg, meta);
}

}  // namespace qtt
