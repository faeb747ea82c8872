// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and uses independent oracles
// (closed forms, full-tensor materialization, direct summation).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtt/experiments.hpp"
#include "qtt/tt_io.hpp"

using namespace qtt;

namespace {

double vdc(int i, int base) {  // van der Corput radical inverse
  double r = 0.0, f = 1.0 / base;
  for (int n = i + 1; n > 0; n /= base, f /= base) r += (n % base) * f;
  return r;
}

std::vector<double> quasi_point(int i, int D) {
  static const int bases[2] = {2, 3};
  std::vector<double> x(D);
  for (int nu = 0; nu < D; ++nu) x[nu] = vdc(i, bases[nu]);
  return x;
}

// Full materialization of the represented tensor, entry by entry.
struct FullTensor {
  std::vector<int> sizes;
  std::vector<double> data;
};

FullTensor full_tensor(const TTFunction& f) {
  FullTensor t;
  t.sizes = mode_sizes(f.params, f.m);
  long long total = 1;
  for (int s : t.sizes) total *= s;
  t.data.resize(total);
  std::vector<int> idx(t.sizes.size(), 0);
  for (long long flat = 0; flat < total; ++flat) {
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (size_t k = 0; k < idx.size(); ++k) v = v * f.cores[k].slice(idx[k]);
    t.data[flat] = v(0);
    for (int k = static_cast<int>(idx.size()) - 1; k >= 0; --k) {
      if (++idx[k] < t.sizes[k]) break;
      idx[k] = 0;
    }
  }
  return t;
}

// Unfolding ranks of the materialized tensor via SVD (relative cutoff).
RankVector full_tensor_ranks(const FullTensor& t, double tol) {
  RankVector r;
  long long rows = 1, cols = 1;
  for (int s : t.sizes) cols *= s;
  for (size_t cut = 0; cut + 1 < t.sizes.size(); ++cut) {
    rows *= t.sizes[cut];
    cols /= t.sizes[cut];
    Eigen::MatrixXd M(rows, cols);
    for (long long i = 0; i < rows; ++i)
      for (long long j = 0; j < cols; ++j) M(i, j) = t.data[i * cols + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    int rank = 0;
    const double cutval = (sv.size() > 0 ? sv(0) : 0.0) * tol;
    for (int k = 0; k < sv.size(); ++k)
      if (sv(k) > cutval && sv(k) > 1e-300) ++rank;
    r.push_back(rank);
  }
  return r;
}

struct Criterion {
  int id;
  std::string name;
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    ok = false;
    if (detail.empty()) detail = why;
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shared grid for criteria 1 and 2.
struct GridCase {
  TTFunction tt;
  SplineIndex idx;
  int m, mbar, b, D;
  double p;
};

std::vector<GridCase> build_grid() {
  std::vector<GridCase> cases;
  const std::pair<int, int> degrees[] = {{0, 0}, {1, 0}, {1, 1},
                                         {2, 0}, {2, 1}, {2, 2}};
  for (int b : {2, 3}) {
    for (auto [m, mbar] : degrees) {
      for (int D : {1, 2}) {
        const std::vector<int> levels = (D == 1) ? std::vector<int>{0, 2, 4}
                                                 : std::vector<int>{1, 3};
        for (int l : levels) {
          const long long jmax = detail::pow_ll(b, l) - 1;
          std::vector<std::vector<long long>> shift_sets;
          if (D == 1) {
            shift_sets = {{-mbar}, {jmax / 2}, {jmax}};
          } else {
            shift_sets = {{-static_cast<long long>(mbar), -static_cast<long long>(mbar)},
                          {0, jmax},
                          {jmax, 0}};
          }
          for (auto& sh : shift_sets) {
            GridCase c;
            c.idx.levels.assign(D, l);
            c.idx.shifts = sh;
            c.m = m;
            c.mbar = mbar;
            c.b = b;
            c.D = D;
            c.p = 2.0;
            c.tt = encode_tensor_product(c.idx, mbar, c.p, l, b, m);
            cases.push_back(std::move(c));
          }
        }
      }
    }
  }
  return cases;
}

void criterion_1_2(Criterion& c1, Criterion& c2) {
  const auto t0 = Clock::now();
  auto cases = build_grid();
  for (const auto& c : cases) {
    const int pts = (c.D == 1) ? 10000 : 10000;
    for (int i = 0; i < pts; ++i) {
      const auto x = quasi_point(i, c.D);
      double ref = 1.0;
      for (int nu = 0; nu < c.D; ++nu)
        ref *= dilated_spline_value(c.idx.levels[nu], c.idx.shifts[nu], c.mbar, c.p,
                                    c.b, x[nu]);
      const double got = evaluate(c.tt, x);
      if (std::abs(got - ref) > 1e-10) {
        std::ostringstream os;
        os << "mismatch " << std::abs(got - ref) << " at b=" << c.b << " m=" << c.m
           << " mbar=" << c.mbar << " D=" << c.D << " l=" << c.idx.levels[0];
        c1.fail(os.str());
      }
    }
    const long long bound =
        static_cast<long long>(std::pow(static_cast<double>(c.mbar + 1), c.D));
    for (int r : computed_ranks(c.tt, 1e-10))
      if (r > bound) {
        std::ostringstream os;
        os << "rank " << r << " exceeds " << bound << " at b=" << c.b
           << " mbar=" << c.mbar << " D=" << c.D;
        c2.fail(os.str());
      }
  }
  // full-tensor SVD cross-check for b = 2, L <= 3, D <= 2
  for (const auto& c : cases) {
    if (c.b != 2 || c.idx.levels[0] > 3) continue;
    const auto ft = full_tensor(c.tt);
    const auto oracle = full_tensor_ranks(ft, 1e-10);
    const auto got = computed_ranks(c.tt, 1e-10);
    if (oracle != got) c2.fail("full-tensor SVD rank mismatch");
  }
  const double dt = seconds_since(t0);
  if (dt > 30.0) {
    std::ostringstream os;
    os << "runtime " << dt << "s exceeds 30s";
    c1.fail(os.str());
  }
}

void criterion_3(Criterion& c) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> mdist(0, 1), Ldist(1, 3), DLdist(1, 3), Ddist(1, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int m = mdist(rng), D = Ddist(rng), LA = Ldist(rng);
    const int LB = LA + DLdist(rng);
    const int b = (t % 2) ? 2 : 3;
    EncodingParams pa{b, LA, D};
    TTFunction f = detail::random_admissible_tt(rng, pa, m, 3, 0.3);
    TTFunction g = extend_level(f, LB);
    const auto before = measure(f), after = measure(g);
    const double bound = 2.0 * b * std::pow(m + 1.0, 2 * D) * (LB - LA) * D;
    if (static_cast<double>(after.compl_S - before.compl_S) > bound) {
      std::ostringstream os;
      os << "compl_S increase " << (after.compl_S - before.compl_S) << " > " << bound;
      c.fail(os.str());
    }
    for (int i = 0; i < 50; ++i) {
      std::vector<double> x(D);
      for (double& v : x) v = unif(rng);
      if (std::abs(evaluate(f, x) - evaluate(g, x)) > 1e-12)
        c.fail("pointwise preservation violated");
    }
  }
}

void criterion_4(Criterion& c) {
  const auto t0 = Clock::now();
  for (int m : {0, 1})
    for (int D : {1, 2}) {
      ExperimentConfig cfg;
      cfg.m = m;
      cfg.D = D;
      cfg.levels = {1, 4};
      cfg.seed = 4242 + m * 10 + D;
      try {
        auto res = run_p4_sweep(cfg, 50);
        if (res.max_ratio_S > res.bound_S || res.max_ratio_F > res.bound_F)
          c.fail("ratio exceeds constant");
      } catch (const std::exception& ex) {
        c.fail(ex.what());
      }
    }
  const double dt = seconds_since(t0);
  if (dt > 60.0) c.fail("runtime exceeds 60s");
}

void criterion_5(Criterion& c) {
  auto seg = bspline_segments(2);
  PiecewisePoly g;
  g.breakpoints = {0.0, 0.5, 1.0};
  g.cells = {seg[0], seg[1]};
  std::vector<double> xs, ys;
  for (int Ld = 1; Ld <= 5; ++Ld) {
    const auto red = project_to_degree(g, 1, Ld, 2, 2.0);
    if (!(red.lp_error > 0.0)) {
      c.fail("degree-reduction error not positive");
      return;
    }
    xs.push_back(Ld);
    ys.push_back(std::log2(red.lp_error));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double n = static_cast<double>(xs.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (std::abs(slope + 2.0) > 0.15) {
    std::ostringstream os;
    os << "slope " << slope << " outside -2 +/- 0.15";
    c.fail(os.str());
  }
}

void criterion_6(Criterion& c) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.target = "sinprod";
  cfg.m = 1;
  cfg.mbar = 1;
  cfg.s = 2.0;
  cfg.D = 1;
  cfg.levels = {1, 2, 3, 4, 5, 6};
  cfg.quad.cell_level = 5;
  auto res = run_linear_rate(cfg);
  if (std::abs(res.slope + 2.0) > 0.3) {
    std::ostringstream os;
    os << "1D slope " << res.slope << " outside -2 +/- 0.3";
    c.fail(os.str());
  }
  cfg.D = 2;
  cfg.levels = {1, 2, 3, 4, 5};
  auto res2 = run_linear_rate(cfg);
  if (std::abs(res2.slope + 1.0) > 0.25) {
    std::ostringstream os;
    os << "2D slope " << res2.slope << " outside -1 +/- 0.25";
    c.fail(os.str());
  }
  const double dt = seconds_since(t0);
  if (dt > 300.0) c.fail("runtime exceeds 5 min");
}

void criterion_7(Criterion& c) {
  ExperimentConfig cfg;
  cfg.target = "xpow";
  cfg.target_params = {0.3};
  cfg.m = 1;
  cfg.mbar = 1;
  cfg.p = 2.0;
  cfg.tau = 0.8;
  cfg.s = 1.0;
  cfg.eps = 1e-4;
  cfg.levels.clear();
  for (int l = 1; l <= 20; ++l) cfg.levels.push_back(l);
  cfg.budgets = {8, 16, 32, 64, 128, 256, 512, 1024};
  cfg.quad.cell_level = 5;
  auto res = run_nonlinear_rate(cfg);
  if (res.note.find("maximal-level guard") == std::string::npos)
    c.fail("maximal-level guard not logged");
  if (!(res.slope_adaptive <= res.slope_uniform - 0.3)) {
    std::ostringstream os;
    os << "adaptive slope " << res.slope_adaptive << " not steeper than uniform "
       << res.slope_uniform << " by 0.3";
    c.fail(os.str());
  }
}

void criterion_8(Criterion& c) {
  ExperimentConfig cfg;
  cfg.levels = {2, 3, 4, 5, 6};
  try {
    auto rows = run_inverse_demo(cfg);
    const auto step = rows[1].compl_F - rows[0].compl_F;
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].compl_F - rows[i - 1].compl_F != step)
        c.fail("compl_F increment not constant");
      if (rows[i].seminorm / rows[i - 1].seminorm < std::pow(2.0, 0.4)) {
        std::ostringstream os;
        os << "seminorm ratio " << rows[i].seminorm / rows[i - 1].seminorm << " < 2^0.4";
        c.fail(os.str());
      }
    }
  } catch (const std::exception& ex) {
    c.fail(ex.what());
  }
}

void criterion_9(Criterion& c) {
  std::mt19937_64 rng(99);
  for (int D : {1, 2})
    for (int L : {1, 2, 3})
      for (int m : {0, 1})
        for (int trial = 0; trial < 3; ++trial) {
          EncodingParams p{2, L, D};
          TTFunction f = detail::random_admissible_tt(rng, p, m, 3, 0.2);
          const auto ft = full_tensor(f);
          // every grid cell corner: digits set the corner, remainder 0
          const auto phi0 = legendre_values(m, 0.0);
          const long long cells = detail::pow_ll(2, L);
          std::vector<long long> j(D, 0);
          bool done = false;
          while (!done) {
            std::vector<double> x(D);
            for (int nu = 0; nu < D; ++nu)
              x[nu] = static_cast<double>(j[nu]) / static_cast<double>(cells);
            // contract the full tensor against phi(0) on the poly modes
            std::vector<int> idx((L + 1) * D, 0);
            for (int k = 0; k < L; ++k)
              for (int nu = 0; nu < D; ++nu) {
                const long long digit = (j[nu] >> (L - 1 - k)) & 1;
                idx[k * D + nu] = static_cast<int>(digit);
              }
            double ref = 0.0;
            std::vector<int> nn(D, 0);
            bool ndone = false;
            while (!ndone) {
              double w = 1.0;
              for (int nu = 0; nu < D; ++nu) {
                idx[L * D + nu] = nn[nu];
                w *= phi0(nn[nu]);
              }
              long long flat = 0;
              for (size_t k = 0; k < idx.size(); ++k)
                flat = flat * ft.sizes[k] + idx[k];
              ref += w * ft.data[flat];
              int nu = D - 1;
              while (nu >= 0 && ++nn[nu] > m) nn[nu--] = 0;
              if (nu < 0) ndone = true;
            }
            if (std::abs(evaluate(f, x) - ref) > 1e-12)
              c.fail("corner evaluation mismatch");
            int nu = D - 1;
            while (nu >= 0 && ++j[nu] == cells) j[nu--] = 0;
            if (nu < 0) done = true;
          }
          if (full_tensor_ranks(ft, 1e-10) != computed_ranks(f, 1e-10))
            c.fail("unfolding ranks do not match computed_ranks");
        }
}

void criterion_10(Criterion& c) {
  ExperimentConfig cfg;
  cfg.target = "sinprod";
  cfg.levels = {1, 2, 3};
  cfg.reproducible = true;
  cfg.quad.cell_level = 5;
  std::ostringstream a, b;
  {
    auto res = run_linear_rate(cfg);
    write_csv(a, res.records, cfg, {"slope " + std::to_string(res.slope)});
  }
  {
    auto res = run_linear_rate(cfg);
    write_csv(b, res.records, cfg, {"slope " + std::to_string(res.slope)});
  }
  if (a.str() != b.str() || a.str().empty()) c.fail("CSV outputs differ between runs");
}

}  // namespace

int main() {
  std::vector<Criterion> cs = {
      {1, "encoder exactness at 10^4 quasi-random points (<= 1e-10)"},
      {2, "rank bounds mbar+1 / (mbar+1)^D and full-tensor SVD cross-check"},
      {3, "sparse level extension bound and pointwise preservation"},
      {4, "quasi-additivity ratios below the P4 constants"},
      {5, "degree-reduction decay slope -2 +/- 0.15"},
      {6, "linear rate slopes (-2 in 1D, -1 in 2D)"},
      {7, "nonlinear thresholding advantage >= 0.3 with level guard"},
      {8, "sawtooth: linear compl_F growth vs geometric seminorm growth"},
      {9, "full-tensor oracle equivalence (corners and ranks)"},
      {10, "byte-identical reproducible CSV"},
  };
  criterion_1_2(cs[0], cs[1]);
  criterion_3(cs[2]);
  criterion_4(cs[3]);
  criterion_5(cs[4]);
  criterion_6(cs[5]);
  criterion_7(cs[6]);
  criterion_8(cs[7]);
  criterion_9(cs[8]);
  criterion_10(cs[9]);

  bool all = true;
  for (const auto& c : cs) {
    std::printf("%s criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                c.ok ? "" : " — ", c.ok ? "" : c.detail.c_str());
    all = all && c.ok;
  }
  return all ? 0 : 1;
}
