// Command-line front end: spline encoders, TT inspection, rate experiments,
// quasi-additivity sweeps, the sawtooth demonstration, bound tables, and
// JSON (de)serialization of TT functions.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qtt/experiments.hpp"
#include "qtt/tt_io.hpp"

namespace {

using namespace qtt;

struct CommonFlags {
    std::string config_path;
};

// Registers the shared flags on a subcommand. CLI11 only overrides a config
// value when the flag was actually passed, which gives "file first, flags
// override" for free: the file is loaded before the flag values are applied.
void add_common(CLI::App* cmd, ExperimentConfig& cfg, CommonFlags& common) {
    cmd->add_option("--config", common.config_path, "JSON config file (flags override)");
    cmd->add_option("--target", cfg.target, "target id (one|poly|sinprod|abspow|xpow|sawtooth)");
    cmd->add_option("--target-params", cfg.target_params, "target parameters");
    cmd->add_option("--b", cfg.b, "base of the digit expansion");
    cmd->add_option("--D", cfg.D, "spatial dimension");
    cmd->add_option("--m", cfg.m, "TT polynomial degree");
    cmd->add_option("--mbar", cfg.mbar, "spline degree");
    cmd->add_option("--p", cfg.p, "L^p exponent");
    cmd->add_option("--tau", cfg.tau, "coefficient summability exponent");
    cmd->add_option("--q", cfg.q, "Besov fine index");
    cmd->add_option("--s", cfg.s, "declared smoothness");
    cmd->add_option("--eps", cfg.eps, "target accuracy for the level guard");
    cmd->add_option("--levels", cfg.levels, "levels (strictly increasing)");
    cmd->add_option("--budgets", cfg.budgets, "term budgets (strictly increasing)");
    cmd->add_option("--seed", cfg.seed, "RNG seed");
    cmd->add_option("--tol", cfg.tol, "rank truncation tolerance");
    cmd->add_option("--out", cfg.out, "output path (csv or json)");
    cmd->add_flag("--reproducible", cfg.reproducible,
                  "suppress the timestamp comment for byte-identical output");
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    if (path.empty()) return;
    std::ifstream is(path);
    if (!is) throw CLI::ValidationError("--config", "cannot open " + path);
    nlohmann::json j;
    is >> j;
    config_from_json(cfg, j);
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output path " + path);
    return file;
}

void print_records(const std::vector<RateRecord>& recs, const ExperimentConfig& cfg,
                   const std::vector<std::string>& meta) {
    std::ofstream file;
    write_csv(open_out(file, cfg.out), recs, cfg, meta);
}

int run_encode_spline(ExperimentConfig& cfg, const std::vector<long long>& shifts,
                      const std::vector<int>& idx_levels) {
    SplineIndex idx;
    idx.levels = idx_levels.empty() ? std::vector<int>(cfg.D, cfg.levels.back())
                                    : idx_levels;
    idx.shifts = shifts.empty() ? std::vector<long long>(idx.levels.size(), 0) : shifts;
    const int L = cfg.levels.back();
    TTFunction f = encode_tensor_product(idx, cfg.mbar, cfg.p, L, cfg.b, cfg.m);
    std::ofstream file;
    open_out(file, cfg.out) << to_json(f).dump(2) << "\n";
    return 0;
}

int run_tt_io(ExperimentConfig& cfg, const std::string& in_path) {
    if (in_path.empty()) throw std::runtime_error("tt-io requires --in <json path>");
    TTFunction f = load_tt(in_path);
    const auto rep = measure(f);
    std::ofstream file;
    auto& os = open_out(file, cfg.out);
    if (!cfg.out.empty()) {
        save_tt(f, cfg.out);
        std::cout << "round trip written to " << cfg.out << "\n";
    } else {
        os << to_json(f).dump(2) << "\n";
    }
    std::cout << "b " << f.params.b << " L " << f.params.L << " D " << f.params.D << " m "
              << f.m << " compl_F " << rep.compl_F << " compl_S " << rep.compl_S
              << " compl_N " << rep.compl_N << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantized tensor-train spline approximation toolkit"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    cfg.quad.cell_level = 5;
    CommonFlags common;

    std::vector<long long> shifts;
    std::vector<int> idx_levels;
    std::string in_path;
    int target_level = -1;

    auto* c_encode = app.add_subcommand("encode-spline",
                                        "encode a (tensor-product) dilated spline as a TT");
    add_common(c_encode, cfg, common);
    c_encode->add_option("--shifts", shifts, "shift per dimension");
    c_encode->add_option("--idx-levels", idx_levels, "level per dimension");

    auto* c_extend = app.add_subcommand("extend-level", "re-express a TT at a finer level");
    add_common(c_extend, cfg, common);
    c_extend->add_option("--in", in_path, "input TT json");
    c_extend->add_option("--to-level", target_level, "target level L_B");

    auto* c_ranks = app.add_subcommand("ranks", "computed ranks of a TT json");
    add_common(c_ranks, cfg, common);
    c_ranks->add_option("--in", in_path, "input TT json");

    auto* c_compl = app.add_subcommand("complexity", "compl_F/S/N of a TT json");
    add_common(c_compl, cfg, common);
    c_compl->add_option("--in", in_path, "input TT json");

    auto* c_lin = app.add_subcommand("rate-linear", "uniform-level rate experiment");
    add_common(c_lin, cfg, common);

    auto* c_non = app.add_subcommand("rate-nonlinear", "thresholded n-term rate experiment");
    add_common(c_non, cfg, common);

    auto* c_p4 = app.add_subcommand("p4-sweep", "quasi-additivity ratio sweep");
    add_common(c_p4, cfg, common);
    int pairs = 200;
    c_p4->add_option("--pairs", pairs, "number of random pairs");

    auto* c_inv = app.add_subcommand("inverse-demo", "sawtooth growth demonstration");
    add_common(c_inv, cfg, common);

    auto* c_bounds = app.add_subcommand("bounds", "predicted vs measured complexity table");
    add_common(c_bounds, cfg, common);

    auto* c_io = app.add_subcommand("tt-io", "TT json round trip and summary");
    add_common(c_io, cfg, common);
    c_io->add_option("--in", in_path, "input TT json");

    // parse once to find the chosen subcommand and the config file, then parse
    // again so explicit flags override the file
    CLI11_PARSE(app, argc, argv);

    try {
        if (!common.config_path.empty()) {
            ExperimentConfig from_file;
            from_file.quad.cell_level = cfg.quad.cell_level;
            load_config_file(from_file, common.config_path);
            // flags that were not passed keep the file's values
            auto keep = [&](auto& flag_val, const auto& file_val, const char* name) {
                CLI::App* sub = app.get_subcommands().front();
                const auto* opt = sub->get_option_no_throw(name);
                if (opt == nullptr || opt->count() == 0) flag_val = file_val;
            };
            keep(cfg.target, from_file.target, "--target");
            keep(cfg.target_params, from_file.target_params, "--target-params");
            keep(cfg.b, from_file.b, "--b");
            keep(cfg.D, from_file.D, "--D");
            keep(cfg.m, from_file.m, "--m");
            keep(cfg.mbar, from_file.mbar, "--mbar");
            keep(cfg.p, from_file.p, "--p");
            keep(cfg.tau, from_file.tau, "--tau");
            keep(cfg.q, from_file.q, "--q");
            keep(cfg.s, from_file.s, "--s");
            keep(cfg.eps, from_file.eps, "--eps");
            keep(cfg.levels, from_file.levels, "--levels");
            keep(cfg.budgets, from_file.budgets, "--budgets");
            keep(cfg.seed, from_file.seed, "--seed");
            keep(cfg.tol, from_file.tol, "--tol");
            keep(cfg.out, from_file.out, "--out");
            if (from_file.reproducible) cfg.reproducible = true;
            cfg.quad = from_file.quad;
        }

        if (c_encode->parsed()) return run_encode_spline(cfg, shifts, idx_levels);

        if (c_extend->parsed()) {
            if (in_path.empty() || target_level < 0)
                throw std::runtime_error("extend-level requires --in and --to-level");
            TTFunction f = load_tt(in_path);
            TTFunction g = extend_level(f, target_level);
            std::ofstream file;
            open_out(file, cfg.out) << to_json(g).dump(2) << "\n";
            return 0;
        }

        if (c_ranks->parsed()) {
            if (in_path.empty()) throw std::runtime_error("ranks requires --in");
            TTFunction f = load_tt(in_path);
            const auto r = computed_ranks(f, cfg.tol);
            std::ofstream file;
            auto& os = open_out(file, cfg.out);
            for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
            return 0;
        }

        if (c_compl->parsed()) {
            if (in_path.empty()) throw std::runtime_error("complexity requires --in");
            const auto rep = measure(load_tt(in_path));
            std::ofstream file;
            open_out(file, cfg.out) << "compl_F,compl_S,compl_N\n"
                                    << rep.compl_F << ',' << rep.compl_S << ','
                                    << rep.compl_N << "\n";
            return 0;
        }

        if (c_lin->parsed()) {
            auto res = run_linear_rate(cfg);
            std::vector<std::string> meta;
            {
                std::ostringstream os;
                os << "slope " << res.slope << " fit_window " << res.fit_window;
                meta.push_back(os.str());
            }
            if (!res.note.empty()) meta.push_back(res.note);
            print_records(res.records, cfg, meta);
            return 0;
        }

        if (c_non->parsed()) {
            auto res = run_nonlinear_rate(cfg);
            std::vector<std::string> meta;
            {
                std::ostringstream os;
                os << "slope_uniform " << res.slope_uniform << " slope_adaptive "
                   << res.slope_adaptive << " fit_window " << res.fit_window;
                meta.push_back(os.str());
            }
            meta.push_back(res.note);
            print_records(res.records, cfg, meta);
            return 0;
        }

        if (c_p4->parsed()) {
            auto res = run_p4_sweep(cfg, pairs);
            std::ofstream file;
            auto& os = open_out(file, cfg.out);
            os << "# max_ratio_F " << res.max_ratio_F << " bound_F " << res.bound_F << "\n"
               << "# max_ratio_S " << res.max_ratio_S << " bound_S " << res.bound_S << "\n"
               << "pair,n_F,n_S,n_N,ratio_F,ratio_S,ratio_N\n";
            for (const auto& row : res.rows)
                os << row.pair_id << ',' << row.n_F << ',' << row.n_S << ',' << row.n_N
                   << ',' << row.ratio_F << ',' << row.ratio_S << ',' << row.ratio_N << "\n";
            return 0;
        }

        if (c_inv->parsed()) {
            auto rows = run_inverse_demo(cfg);
            std::ofstream file;
            auto& os = open_out(file, cfg.out);
            os << "level,compl_F,seminorm\n";
            for (const auto& row : rows)
                os << row.level << ',' << row.compl_F << ',' << row.seminorm << "\n";
            return 0;
        }

        if (c_bounds->parsed()) {
            auto rows = emit_bound_table(cfg);
            std::ofstream file;
            auto& os = open_out(file, cfg.out);
            os << "kind,n,level,predicted_F,predicted_S,predicted_N,"
                  "measured_F,measured_S,measured_N\n";
            for (const auto& r : rows)
                os << r.kind << ',' << r.n << ',' << r.level << ',' << r.predicted_F << ','
                   << r.predicted_S << ',' << r.predicted_N << ',' << r.measured_F << ','
                   << r.measured_S << ',' << r.measured_N << "\n";
            return 0;
        }

        if (c_io->parsed()) return run_tt_io(cfg, in_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
